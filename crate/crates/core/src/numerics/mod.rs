pub mod bessel;
pub mod quadrature;

/// Location and value of a maximum found by [`find_peak`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub value: f64,
}

/// Coarse grid scan over `[lo, hi]` with the given step, followed by
/// golden-section refinement inside the bracketing cells of the best sample.
pub fn find_peak<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Peak {
    let n = ((hi - lo) / step).ceil().max(2.0) as usize;
    let dx = (hi - lo) / n as f64;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..=n {
        let v = f(lo + i as f64 * dx);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = lo + best.saturating_sub(1) as f64 * dx;
    let mut b = (lo + (best + 1) as f64 * dx).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-13 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let value = f(x);
    if value >= best_val {
        Peak { x, value }
    } else {
        Peak { x: lo + best as f64 * dx, value: best_val }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_refines_grid_maximum() {
        let p = find_peak(|x| -(x - 0.731_234).powi(2), 0.0, 2.0, 0.01);
        assert!((p.x - 0.731_234).abs() < 1e-7);
    }
}
