//! Gaussian quadrature rules, cached per (kind, size).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Largest Laguerre rule; beyond it the recurrence overflows in `f64`.
pub const LAGUERRE_MAX_NODES: usize = 128;
pub const LEGENDRE_MAX_NODES: usize = 512;

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
enum Key {
    Legendre(usize),
    Laguerre(usize, u64),
}

fn cache() -> &'static Mutex<HashMap<Key, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: Key, build: impl FnOnce() -> Rule) -> Arc<Rule> {
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(build());
    cache().lock().unwrap().entry(key).or_insert(rule).clone()
}

/// Gauss-Legendre on `[0, 1]`.
pub fn legendre01(n: usize) -> Arc<Rule> {
    cached(Key::Legendre(n), || {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp;
            loop {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j as f64 - 1.0) * z * p2 - (j as f64 - 1.0) * p3) / j as f64;
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            // map [-1, 1] to [0, 1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Rule { nodes, weights }
    })
}

/// Generalized Gauss-Laguerre for `x^alpha e^{-x} / Gamma(alpha + 1)` on `[0, inf)`.
pub fn laguerre(n: usize, alpha: f64) -> Arc<Rule> {
    cached(Key::Laguerre(n, alpha.to_bits()), || {
        let nf = n as f64;
        let mut nodes: Vec<f64> = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let log_norm = ln_gamma(alpha + nf) - ln_gamma(nf) - ln_gamma(alpha + 1.0);
        let mut z = 0.0f64;
        for i in 0..n {
            z = match i {
                0 => (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha),
                1 => z + (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai)) * (z - nodes[i - 2])
                        / (1.0 + 0.3 * alpha)
                }
            };
            let (mut pp, mut p2);
            let mut iter = 0;
            loop {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
                }
                pp = (nf * p1 - (nf + alpha) * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                iter += 1;
                if (z - z1).abs() <= 3e-14 * z.abs() || iter > 100 {
                    break;
                }
            }
            nodes.push(z);
            weights.push(-(log_norm.exp()) / (pp * nf * p2));
        }
        Rule { nodes, weights }
    })
}
