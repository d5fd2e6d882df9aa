//! Registry of exact ambient Ricci-flow solutions used as test beds:
//! a static flat torus, the shrinking round 2-sphere, and the product of
//! a shrinking sphere with a static circle.
//!
//! All three supply analytic `dg/dt`, analytic spatial metric derivatives,
//! and analytic Ricci closures, so `dg/dt + 2 Ric = 0` holds identically.

use crate::chart::ChartDomain;
use crate::fx;
use crate::linalg::{Matrix, Vector};
use crate::metric::{Geometry, MetricFamily, SpacetimeVector};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand_core::{RngCore, SeedableRng};

/// Guard band keeping sphere curves away from the polar coordinate
/// singularities at `theta = 0, pi`.
pub const DEFAULT_POLE_MARGIN: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackgroundKind {
    /// Static flat torus with the given periods; `g = id`, `Ric = 0`.
    FlatTorus { periods: [f64; 2] },
    /// Round 2-sphere with `r^2(t) = r0^2 - 2t` in polar coordinates.
    ShrinkingSphere { r0: f64 },
    /// Block sum of a shrinking 2-sphere and a static circle of length `l`.
    SphereCrossCircle { r0: f64, circle_len: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct BackgroundSpec {
    pub kind: BackgroundKind,
    /// Horizon `T` of the time interval `[0, T]`.
    pub horizon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecError {
    NonPositiveParameter,
    /// The horizon violates metric positivity; holds `r0^2 / 2`.
    HorizonTooLate { bound: f64 },
}

impl core::fmt::Display for SpecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpecError::NonPositiveParameter => {
                write!(f, "background periods, radii, and lengths must be positive")
            }
            SpecError::HorizonTooLate { bound } => write!(
                f,
                "horizon must stay below the positivity bound r0^2/2 = {bound}"
            ),
        }
    }
}

impl core::error::Error for SpecError {}

impl BackgroundSpec {
    pub fn flat_torus(p0: f64, p1: f64, horizon: f64) -> Self {
        BackgroundSpec { kind: BackgroundKind::FlatTorus { periods: [p0, p1] }, horizon }
    }

    pub fn shrinking_sphere(r0: f64, horizon: f64) -> Self {
        BackgroundSpec { kind: BackgroundKind::ShrinkingSphere { r0 }, horizon }
    }

    pub fn sphere_cross_circle(r0: f64, circle_len: f64, horizon: f64) -> Self {
        BackgroundSpec { kind: BackgroundKind::SphereCrossCircle { r0, circle_len }, horizon }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.horizon <= 0.0 {
            return Err(SpecError::NonPositiveParameter);
        }
        match self.kind {
            BackgroundKind::FlatTorus { periods } => {
                if periods[0] <= 0.0 || periods[1] <= 0.0 {
                    return Err(SpecError::NonPositiveParameter);
                }
            }
            BackgroundKind::ShrinkingSphere { r0 } => {
                if r0 <= 0.0 {
                    return Err(SpecError::NonPositiveParameter);
                }
                let bound = 0.5 * r0 * r0;
                if self.horizon >= bound {
                    return Err(SpecError::HorizonTooLate { bound });
                }
            }
            BackgroundKind::SphereCrossCircle { r0, circle_len } => {
                if r0 <= 0.0 || circle_len <= 0.0 {
                    return Err(SpecError::NonPositiveParameter);
                }
                let bound = 0.5 * r0 * r0;
                if self.horizon >= bound {
                    return Err(SpecError::HorizonTooLate { bound });
                }
            }
        }
        Ok(())
    }

    /// Index of the flat circle coordinate, for ramp monitors.
    pub fn circle_coordinate(&self) -> Option<usize> {
        match self.kind {
            BackgroundKind::FlatTorus { .. } => Some(1),
            BackgroundKind::ShrinkingSphere { .. } => None,
            BackgroundKind::SphereCrossCircle { .. } => Some(2),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BackgroundKind::FlatTorus { .. } => "flat_torus",
            BackgroundKind::ShrinkingSphere { .. } => "shrinking_sphere",
            BackgroundKind::SphereCrossCircle { .. } => "sphere_cross_circle",
        }
    }
}

/// Concrete metric family built from a [`BackgroundSpec`].
#[derive(Clone, Debug)]
pub struct Background {
    spec: BackgroundSpec,
    chart: ChartDomain,
}

pub fn make_background(spec: BackgroundSpec) -> Result<Background, SpecError> {
    spec.validate()?;
    let chart = match spec.kind {
        BackgroundKind::FlatTorus { periods } => ChartDomain::new(
            &[0.0, 0.0],
            &[periods[0], periods[1]],
            &[true, true],
            0.0,
        ),
        BackgroundKind::ShrinkingSphere { .. } => ChartDomain::new(
            &[0.0, 0.0],
            &[PI, 2.0 * PI],
            &[false, true],
            DEFAULT_POLE_MARGIN,
        ),
        BackgroundKind::SphereCrossCircle { circle_len, .. } => ChartDomain::new(
            &[0.0, 0.0, 0.0],
            &[PI, 2.0 * PI, circle_len],
            &[false, true, true],
            DEFAULT_POLE_MARGIN,
        ),
    };
    Ok(Background { spec, chart })
}

impl Background {
    #[inline]
    pub fn spec(&self) -> &BackgroundSpec {
        &self.spec
    }

    /// `r^2(t)` of the sphere factor; 1.0 for the flat torus.
    pub fn radius_sq(&self, t: f64) -> f64 {
        match self.spec.kind {
            BackgroundKind::FlatTorus { .. } => 1.0,
            BackgroundKind::ShrinkingSphere { r0 }
            | BackgroundKind::SphereCrossCircle { r0, .. } => r0 * r0 - 2.0 * t,
        }
    }
}

impl MetricFamily for Background {
    fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    fn metric(&self, t: f64, x: &Vector) -> Matrix {
        match self.spec.kind {
            BackgroundKind::FlatTorus { .. } => Matrix::identity(2),
            BackgroundKind::ShrinkingSphere { .. } => {
                let r2 = self.radius_sq(t);
                let s = fx::sin(x[0]);
                Matrix::diag(&[r2, r2 * s * s])
            }
            BackgroundKind::SphereCrossCircle { .. } => {
                let r2 = self.radius_sq(t);
                let s = fx::sin(x[0]);
                Matrix::diag(&[r2, r2 * s * s, 1.0])
            }
        }
    }

    fn metric_dt(&self, _t: f64, x: &Vector) -> Matrix {
        match self.spec.kind {
            BackgroundKind::FlatTorus { .. } => Matrix::zeros(2),
            BackgroundKind::ShrinkingSphere { .. } => {
                let s = fx::sin(x[0]);
                Matrix::diag(&[-2.0, -2.0 * s * s])
            }
            BackgroundKind::SphereCrossCircle { .. } => {
                let s = fx::sin(x[0]);
                Matrix::diag(&[-2.0, -2.0 * s * s, 0.0])
            }
        }
    }

    fn metric_dx(&self, t: f64, x: &Vector, dir: usize) -> Option<Matrix> {
        match self.spec.kind {
            BackgroundKind::FlatTorus { .. } => Some(Matrix::zeros(2)),
            BackgroundKind::ShrinkingSphere { .. } => Some(if dir == 0 {
                let r2 = self.radius_sq(t);
                Matrix::diag(&[0.0, 2.0 * r2 * fx::sin(x[0]) * fx::cos(x[0])])
            } else {
                Matrix::zeros(2)
            }),
            BackgroundKind::SphereCrossCircle { .. } => Some(if dir == 0 {
                let r2 = self.radius_sq(t);
                Matrix::diag(&[0.0, 2.0 * r2 * fx::sin(x[0]) * fx::cos(x[0]), 0.0])
            } else {
                Matrix::zeros(3)
            }),
        }
    }

    fn ricci(&self, _t: f64, x: &Vector) -> Option<Matrix> {
        // Ric of the round sphere of radius r is (1/r^2) g = g_unit,
        // independent of r; circle and torus factors are flat.
        match self.spec.kind {
            BackgroundKind::FlatTorus { .. } => Some(Matrix::zeros(2)),
            BackgroundKind::ShrinkingSphere { .. } => {
                let s = fx::sin(x[0]);
                Some(Matrix::diag(&[1.0, s * s]))
            }
            BackgroundKind::SphereCrossCircle { .. } => {
                let s = fx::sin(x[0]);
                Some(Matrix::diag(&[1.0, s * s, 0.0]))
            }
        }
    }
}

/// Closed-form and densely sampled reference values for a background at a
/// fixed time; an oracle record for tests and constants estimation.
#[derive(Clone, Debug)]
pub struct ExactData {
    pub radius_sq: f64,
    /// Operator norm of `Ric` relative to `g(t)`, exact.
    pub sup_ricci: f64,
    /// `sup |∇ Ric|`; zero for every shipped background.
    pub sup_cov_deriv_ricci: f64,
    /// Frame-component bound for the product-metric curvature, estimated
    /// by dense sampling over orthonormal frames.
    pub sup_riemann_hat: f64,
    pub provenance: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeOutOfRange;

impl core::fmt::Display for TimeOutOfRange {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "time outside the background's interval [0, T]")
    }
}

impl core::error::Error for TimeOutOfRange {}

pub fn exact_data(spec: &BackgroundSpec, t: f64) -> Result<ExactData, TimeOutOfRange> {
    if t < 0.0 || t > spec.horizon {
        return Err(TimeOutOfRange);
    }
    let bg = make_background(*spec).map_err(|_| TimeOutOfRange)?;
    let r2 = bg.radius_sq(t);
    let sup_ricci = match spec.kind {
        BackgroundKind::FlatTorus { .. } => 0.0,
        // Einstein factor: Ric = (1/r^2) g on the sphere directions.
        BackgroundKind::ShrinkingSphere { .. } | BackgroundKind::SphereCrossCircle { .. } => {
            1.0 / r2
        }
    };
    let geom = Geometry::new(&bg);
    let sup_riemann_hat = sample_sup_riemann_hat(&geom, t);
    Ok(ExactData {
        radius_sq: r2,
        sup_ricci,
        sup_cov_deriv_ricci: 0.0,
        sup_riemann_hat,
        provenance: format!(
            "closed-form r^2(t) and Einstein factor for kind {}; Rm-hat frame bound by dense orthonormal-frame sampling at t={t}",
            spec.kind_name()
        ),
    })
}

/// Max `|Rm_hat|` over product-metric orthonormal frames, sampled on a
/// coarse admissible grid at the given time (clamped away from the time
/// boundary as needed by the time stencil).
pub fn sample_sup_riemann_hat(geom: &Geometry<'_>, t: f64) -> f64 {
    let chart = *geom.chart();
    let n = chart.dim();
    let ht = 2.5 * crate::metric::FD_STEP_REL * geom.horizon();
    let tc = fx::min(fx::max(t, ht), geom.horizon() - ht);
    let per_axis = 5usize;
    let mut sup = 0.0f64;
    let grid_point = |idx: &[usize]| {
        Vector::from_fn(n, |i| {
            let (lo, hi) = if chart.is_periodic(i) {
                (chart.lower(i), chart.upper(i))
            } else {
                (chart.lower(i) + chart.margin(), chart.upper(i) - chart.margin())
            };
            lo + (hi - lo) * (idx[i] as f64 + 0.5) / per_axis as f64
        })
    };
    let total = fx::powi(per_axis as f64, n as i32) as usize;
    for flat in 0..total {
        let mut idx = [0usize; 4];
        let mut rem = flat;
        for slot in idx.iter_mut().take(n) {
            *slot = rem % per_axis;
            rem /= per_axis;
        }
        let x = grid_point(&idx[..n]);
        let frame = match orthonormal_spacetime_frame(geom, tc, &x) {
            Some(f) => f,
            None => continue,
        };
        let m = n + 1;
        for a in 0..m {
            for b in a + 1..m {
                for c in 0..m {
                    for d in c..m {
                        if let Ok(v) = geom.spacetime_riemann(
                            tc,
                            &x,
                            &frame[a],
                            &frame[b],
                            &frame[c],
                            &frame[d],
                        ) {
                            sup = fx::max(sup, fx::abs(v));
                        }
                    }
                }
            }
        }
    }
    sup
}

/// Product-metric orthonormal frame: `g`-orthonormal horizontal legs from
/// the inverse Cholesky factor of `g`, plus the unit time direction.
pub fn orthonormal_spacetime_frame(
    geom: &Geometry<'_>,
    t: f64,
    x: &Vector,
) -> Option<Vec<SpacetimeVector>> {
    let n = geom.dim();
    let g = geom.metric_checked(t, x).ok()?;
    let l = g.cholesky()?;
    let linv_t = l.inverse()?;
    let mut frame = Vec::with_capacity(n + 1);
    for i in 0..n {
        // Column i of L^{-T} = row i of L^{-1}.
        let e = Vector::from_fn(n, |k| linv_t[(i, k)]);
        frame.push(SpacetimeVector::horizontal(e));
    }
    frame.push(SpacetimeVector::time_direction(n));
    Some(frame)
}

/// Seeded random `g`-unit horizontal vector, for property tests and
/// constants sampling.
pub fn random_unit_horizontal(
    geom: &Geometry<'_>,
    t: f64,
    x: &Vector,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vector> {
    let n = geom.dim();
    let g = geom.metric_checked(t, x).ok()?;
    for _ in 0..16 {
        let v = Vector::from_fn(n, |_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        let norm_sq = g.bilinear(&v, &v);
        if norm_sq > 1e-12 {
            return Some(v.scale(1.0 / fx::sqrt(norm_sq)));
        }
    }
    None
}

/// Seeded ChaCha stream for deterministic sampling helpers.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn flat_torus_is_an_exact_ricci_flow() {
        let bg = make_background(BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45)).unwrap();
        let geom = Geometry::new(&bg);
        assert_eq!(geom.validate_ricci_flow(64, 7), 0.0);
    }

    #[test]
    fn shrinking_sphere_is_an_exact_ricci_flow() {
        let bg = make_background(BackgroundSpec::shrinking_sphere(1.0, 0.4)).unwrap();
        let geom = Geometry::new(&bg);
        assert!(geom.validate_ricci_flow(128, 7) < 1e-12);
    }

    #[test]
    fn product_is_an_exact_ricci_flow_with_flat_circle_factor() {
        let bg =
            make_background(BackgroundSpec::sphere_cross_circle(1.0, 2.0 * PI, 0.4)).unwrap();
        let geom = Geometry::new(&bg);
        assert!(geom.validate_ricci_flow(128, 7) < 1e-12);
        // Circle-direction Ricci entry vanishes at all times.
        let x = Vector::from_slice(&[1.0, 1.0, 1.0]);
        for &t in &[0.0, 0.2, 0.4] {
            let ric = geom.ricci(t, &x).unwrap();
            assert_eq!(ric[(2, 2)], 0.0);
        }
    }

    #[test]
    fn shrinking_sphere_metric_follows_the_closed_form() {
        // g_theta_theta(t) = r0^2 - 2t.
        let bg = make_background(BackgroundSpec::shrinking_sphere(1.0, 0.4)).unwrap();
        let g = bg.metric(0.25, &Vector::from_slice(&[1.0, 0.0]));
        assert!((g[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn horizon_positivity_is_enforced() {
        let err = make_background(BackgroundSpec::shrinking_sphere(1.0, 0.6)).unwrap_err();
        assert_eq!(err, SpecError::HorizonTooLate { bound: 0.5 });
    }

    #[test]
    fn exact_data_matches_einstein_factor() {
        let spec = BackgroundSpec::shrinking_sphere(1.0, 0.4);
        let d = exact_data(&spec, 0.0).unwrap();
        assert!((d.sup_ricci - 1.0).abs() < 1e-12);
        assert_eq!(d.sup_cov_deriv_ricci, 0.0);
        assert!(exact_data(&spec, 0.5).is_err());
    }

    #[test]
    fn exact_data_sup_ricci_matches_dense_operator_norm_sampling() {
        let spec = BackgroundSpec::shrinking_sphere(1.0, 0.4);
        let bg = make_background(spec).unwrap();
        let geom = Geometry::new(&bg);
        let t = 0.3;
        let d = exact_data(&spec, t).unwrap();
        let mut sampled = 0.0f64;
        for i in 0..12 {
            for j in 0..12 {
                let x = Vector::from_slice(&[
                    DEFAULT_POLE_MARGIN + (PI - 2.0 * DEFAULT_POLE_MARGIN) * (i as f64 + 0.5) / 12.0,
                    2.0 * PI * (j as f64 + 0.5) / 12.0,
                ]);
                let g = geom.metric_checked(t, &x).unwrap();
                let ric = geom.ricci(t, &x).unwrap();
                sampled = sampled.max(ric.operator_norm_rel(&g).unwrap());
            }
        }
        assert!((sampled - d.sup_ricci).abs() < 1e-8);
    }

    #[test]
    fn corrupted_time_derivative_is_flagged() {
        struct Corrupted(Background);
        impl MetricFamily for Corrupted {
            fn chart(&self) -> &ChartDomain {
                self.0.chart()
            }
            fn horizon(&self) -> f64 {
                self.0.horizon()
            }
            fn metric(&self, t: f64, x: &Vector) -> Matrix {
                self.0.metric(t, x)
            }
            fn metric_dt(&self, t: f64, x: &Vector) -> Matrix {
                self.0.metric_dt(t, x).scale(1.1)
            }
            fn metric_dx(&self, t: f64, x: &Vector, dir: usize) -> Option<Matrix> {
                self.0.metric_dx(t, x, dir)
            }
            fn ricci(&self, t: f64, x: &Vector) -> Option<Matrix> {
                MetricFamily::ricci(&self.0, t, x)
            }
        }
        let bg = make_background(BackgroundSpec::shrinking_sphere(1.0, 0.4)).unwrap();
        let corrupted = Corrupted(bg.clone());
        let geom = Geometry::new(&corrupted);
        let residual = geom.validate_ricci_flow(64, 11);
        // A 10% scaling of dg/dt leaves a residual of 0.2 * |Ric| entries.
        assert!(residual > 0.1);
    }
}
