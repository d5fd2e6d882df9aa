//! Coordinate chart with per-coordinate bounds, periodic identifications,
//! and a guard margin for non-periodic coordinates.

use crate::fx;
use crate::linalg::{Vector, MAX_DIM};

#[derive(Clone, Copy, Debug)]
pub struct ChartDomain {
    n: usize,
    lower: [f64; MAX_DIM],
    upper: [f64; MAX_DIM],
    periodic: [bool; MAX_DIM],
    /// Guard band for non-periodic coordinates; a point is admissible only
    /// when such coordinates stay in `[lower+margin, upper-margin]`.
    margin: f64,
}

impl ChartDomain {
    pub fn new(lower: &[f64], upper: &[f64], periodic: &[bool], margin: f64) -> Self {
        let n = lower.len();
        assert!(n >= 1 && n <= MAX_DIM);
        assert_eq!(upper.len(), n);
        assert_eq!(periodic.len(), n);
        assert!(margin >= 0.0);
        let mut lo = [0.0; MAX_DIM];
        let mut up = [0.0; MAX_DIM];
        let mut per = [false; MAX_DIM];
        for i in 0..n {
            assert!(lower[i] < upper[i], "chart bounds must satisfy lower < upper");
            lo[i] = lower[i];
            up[i] = upper[i];
            per[i] = periodic[i];
        }
        ChartDomain { n, lower: lo, upper: up, periodic: per, margin }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn margin(&self) -> f64 {
        self.margin
    }

    #[inline]
    pub fn lower(&self, i: usize) -> f64 {
        self.lower[i]
    }

    #[inline]
    pub fn upper(&self, i: usize) -> f64 {
        self.upper[i]
    }

    #[inline]
    pub fn is_periodic(&self, i: usize) -> bool {
        self.periodic[i]
    }

    #[inline]
    pub fn extent(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Largest coordinate extent; used to scale finite-difference steps and
    /// degeneracy thresholds.
    pub fn max_extent(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            m = fx::max(m, self.extent(i));
        }
        m
    }

    /// Periodic coordinates reduced into `[lower, upper)`; others untouched.
    pub fn reduce(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| {
            if self.periodic[i] {
                self.lower[i] + fx::rem_euclid(x[i] - self.lower[i], self.extent(i))
            } else {
                x[i]
            }
        })
    }

    /// Shift each periodic coordinate of `x` by whole periods so it lands
    /// within half a period of `reference`.
    pub fn unwrap_near(&self, x: &Vector, reference: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| {
            if self.periodic[i] {
                let p = self.extent(i);
                let d = x[i] - reference[i];
                reference[i] + d - p * fx::floor(d / p + 0.5)
            } else {
                x[i]
            }
        })
    }

    pub fn is_admissible(&self, x: &Vector) -> bool {
        if x.dim() != self.n {
            return false;
        }
        for i in 0..self.n {
            if !x[i].is_finite() {
                return false;
            }
            if !self.periodic[i]
                && (x[i] < self.lower[i] + self.margin || x[i] > self.upper[i] - self.margin)
            {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> ChartDomain {
        ChartDomain::new(
            &[0.0, 0.0],
            &[core::f64::consts::PI, 2.0 * core::f64::consts::PI],
            &[false, true],
            0.1,
        )
    }

    #[test]
    fn admissibility_respects_margin() {
        let c = chart();
        assert!(c.is_admissible(&Vector::from_slice(&[0.5, 100.0])));
        assert!(!c.is_admissible(&Vector::from_slice(&[0.05, 1.0])));
        assert!(!c.is_admissible(&Vector::from_slice(&[3.1, 1.0])));
    }

    #[test]
    fn reduce_wraps_periodic_only() {
        let c = chart();
        let p = c.reduce(&Vector::from_slice(&[0.5, 7.0]));
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - (7.0 - 2.0 * core::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn unwrap_moves_within_half_period() {
        let c = chart();
        let r = Vector::from_slice(&[0.5, 6.2]);
        let x = Vector::from_slice(&[0.5, 0.05]);
        let u = c.unwrap_near(&x, &r);
        assert!((u[1] - (0.05 + 2.0 * core::f64::consts::PI)).abs() < 1e-12);
    }
}
