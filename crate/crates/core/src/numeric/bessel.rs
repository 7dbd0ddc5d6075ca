//! Modified Bessel function of the first kind, order zero.

/// Beyond this argument the asymptotic expansion is used for the scaled form.
const ASYMPTOTIC_FROM: f64 = 30.0;

/// `I0(z) = sum_k (z^2/4)^k / (k!)^2` for `z >= 0`.
pub fn bessel_i0(z: f64) -> f64 {
    let z = z.abs();
    if z > 700.0 {
        return f64::INFINITY;
    }
    series(z)
}

fn series(z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k: f64 = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// `e^{-z} I0(z)`, finite for every `z >= 0`.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let z = z.abs();
    if z < ASYMPTOTIC_FROM {
        return series(z) * (-z).exp();
    }
    // e^{-z} I0(z) ~ (2 pi z)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8z)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k: f64 = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * z);
        if next >= term || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}
