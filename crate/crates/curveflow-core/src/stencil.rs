//! Periodic 4th-order central stencils on the parameter circle.
//!
//! Nodes sit at `x_j = j / N`; all derivatives are with respect to the
//! curve parameter `x`. Arclength derivatives divide by `|X|` afterwards.

use alloc::vec::Vec;

/// 4th-order central first derivative of a periodic sample vector,
/// node spacing `1 / N`.
pub fn deriv_periodic(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "stencil needs at least 5 nodes");
    let scale = n as f64 / 12.0;
    (0..n)
        .map(|j| {
            let m2 = values[(j + n - 2) % n];
            let m1 = values[(j + n - 1) % n];
            let p1 = values[(j + 1) % n];
            let p2 = values[(j + 2) % n];
            (-p2 + 8.0 * p1 - 8.0 * m1 + m2) * scale
        })
        .collect()
}

/// Same stencil applied to a per-node window of possibly non-periodic
/// values (used after unwrapping periodic coordinates around node `j`).
#[inline]
pub fn deriv_window(window: [f64; 5], n: usize) -> f64 {
    (-window[4] + 8.0 * window[3] - 8.0 * window[1] + window[0]) * n as f64 / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn derivative_of_trig_mode_is_fourth_order() {
        let check = |n: usize| -> f64 {
            let values: Vec<f64> =
                (0..n).map(|j| (2.0 * PI * 3.0 * j as f64 / n as f64).sin()).collect();
            let d = deriv_periodic(&values);
            (0..n)
                .map(|j| {
                    let exact = 6.0 * PI * (2.0 * PI * 3.0 * j as f64 / n as f64).cos();
                    (d[j] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let coarse = check(64);
        let fine = check(128);
        assert!(coarse / fine > 12.0, "expected ~16x error drop, got {}", coarse / fine);
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let d = deriv_periodic(&[3.5; 32]);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }
}
