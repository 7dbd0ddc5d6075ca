//! ASCII and SVG renderings of the ZII mask.

use std::fmt::Write as _;

use zii_core::ZiiMask;

/// Cell drawn where the inverse may be nonzero.
pub const FREE: char = '•';
/// Cell forced to zero by the mask.
pub const FORCED: char = '.';

pub fn ascii(mask: &ZiiMask) -> String {
    let n = mask.basis().len();
    let mut out = String::new();
    for r in 0..n {
        let row: String = (0..n)
            .map(|c| if mask.contains(r, c) { FORCED } else { FREE })
            .collect();
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn report(mask: &ZiiMask) -> String {
    let basis = mask.basis();
    let n = basis.len();
    let mut out = String::new();
    let _ = writeln!(out, "degree: {}", basis.degree());
    let _ = writeln!(out, "basis size: {n}");
    let _ = writeln!(out, "mask pairs: {}", mask.len());
    let _ = writeln!(out, "forced-zero cells: {}", 2 * mask.len());
    let _ = writeln!(out, "free cells: {}", n * n - 2 * mask.len());
    for &(r, c) in mask.pairs() {
        let _ = writeln!(out, "  ({}, {})  {}", r + 1, c + 1, mask.pair_label((r, c)));
    }
    out
}

/// Dots on free cells, nothing on forced zeros.
pub fn svg(mask: &ZiiMask) -> String {
    let n = mask.basis().len();
    let cell = if n > 40 { 6 } else { 24 };
    let size = n * cell;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{size}" height="{size}" fill="white" stroke="black"/>"#
    );
    let radius = cell as f64 * 0.35;
    for r in 0..n {
        for c in 0..n {
            if !mask.contains(r, c) {
                let (cx, cy) = (c * cell + cell / 2, r * cell + cell / 2);
                let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="{radius:.1}" fill="blue"/>"#);
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
