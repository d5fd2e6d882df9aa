//! Estimation of the ambient-flow constants that enter the inequality
//! monitors.
//!
//! The constants are asserted to exist, not given sharply, so the
//! estimates are deliberately conservative: dense sampling maxima with a
//! 10% inflation on the combined bound. The curvature norm convention is
//! the operator norm relative to `g(t)` at the same point; the product
//! curvature bound is a frame-component bound over product-orthonormal
//! frames.

use crate::background::{orthonormal_spacetime_frame, random_unit_horizontal, seeded_rng};
use crate::fx;
use crate::linalg::Vector;
use crate::metric::Geometry;
use alloc::format;
use alloc::string::String;

/// Inflation applied to the combined bound `C_hat` (and through it `C1`,
/// `C_prime`). `C2` stays the raw sampled supremum of `|Ric|`.
pub const INFLATION: f64 = 1.1;

#[derive(Clone, Debug)]
pub struct ConstantsEstimate {
    /// Combined coefficient of the `(k^2 + k)` bound.
    pub c_hat: f64,
    /// `C1 = C_hat / 2`, exactly.
    pub c1: f64,
    /// `sup |Ric_g|` in operator norm relative to `g(t)`.
    pub c2: f64,
    /// Ramp constant; constructed as `C1 + C2`.
    pub c_prime: f64,
    /// Raw sampled suprema feeding the per-term bounds.
    pub sup_ricci: f64,
    pub sup_cov_ricci: f64,
    pub sup_riemann_hat: f64,
    pub provenance: String,
}

impl ConstantsEstimate {
    pub fn zero() -> Self {
        ConstantsEstimate {
            c_hat: 0.0,
            c1: 0.0,
            c2: 0.0,
            c_prime: 0.0,
            sup_ricci: 0.0,
            sup_cov_ricci: 0.0,
            sup_riemann_hat: 0.0,
            provenance: String::from("zero constants"),
        }
    }

    /// Per-term domination coefficients for the five correction terms,
    /// paired with the shape of the bound they multiply:
    /// `{k^2, k^2, k^2 + k, k^2, k}`.
    pub fn per_term_bounds(&self) -> [f64; 5] {
        let inflated = |v: f64| v * INFLATION;
        [
            2.0 * inflated(self.sup_ricci),
            4.0 * inflated(self.sup_ricci),
            2.0 * inflated(self.sup_riemann_hat) * (1.0 + inflated(self.sup_ricci)),
            2.0 * inflated(self.sup_ricci) * inflated(self.sup_ricci),
            2.0 * inflated(self.sup_cov_ricci),
        ]
    }
}

/// Sample grid density per axis (time and each chart coordinate).
#[derive(Clone, Copy, Debug)]
pub struct SampleGrid {
    pub per_axis: usize,
    pub seed: u64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { per_axis: 6, seed: 2024 }
    }
}

/// Estimate the constants over `[0, horizon]` by dense grid sampling.
pub fn estimate_constants(
    geom: &Geometry<'_>,
    horizon: f64,
    grid: SampleGrid,
) -> ConstantsEstimate {
    assert!(grid.per_axis >= 1);
    let chart = *geom.chart();
    let n = chart.dim();
    let mut rng = seeded_rng(grid.seed);

    // Keep the time samples clear of the boundary for the Rm-hat stencil.
    let ht = 2.5 * crate::metric::FD_STEP_REL * geom.horizon();
    let mut sup_ricci = 0.0f64;
    let mut sup_cov = 0.0f64;
    let mut sup_rm = 0.0f64;

    // Endpoints are sampled inclusively on the time axis and on bounded
    // spatial axes, so refining the grid keeps the boundary suprema and the
    // estimates stable; periodic axes use cell midpoints.
    let frac = |idx: usize| {
        if grid.per_axis == 1 {
            0.5
        } else {
            idx as f64 / (grid.per_axis - 1) as f64
        }
    };
    let total_space = fx::powi(grid.per_axis as f64, n as i32) as usize;
    for it in 0..grid.per_axis {
        let t_raw = horizon * frac(it);
        let t = fx::min(fx::max(t_raw, ht), geom.horizon() - ht);
        for flat in 0..total_space {
            let mut rem = flat;
            let x = Vector::from_fn(n, |i| {
                let idx = rem % grid.per_axis;
                rem /= grid.per_axis;
                if chart.is_periodic(i) {
                    chart.lower(i)
                        + chart.extent(i) * (idx as f64 + 0.5) / grid.per_axis as f64
                } else {
                    let lo = chart.lower(i) + chart.margin();
                    let hi = chart.upper(i) - chart.margin();
                    lo + (hi - lo) * frac(idx)
                }
            });
            let g = match geom.metric_checked(t, &x) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let ric = match geom.ricci(t, &x) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if let Some(norm) = ric.operator_norm_rel(&g) {
                sup_ricci = fx::max(sup_ricci, norm);
            }

            // |∇ Ric| over a few seeded unit directions.
            for _ in 0..3 {
                if let Some(s) = random_unit_horizontal(geom, t, &x, &mut rng) {
                    if let Ok(cov) = geom.cov_deriv_ricci(t, &x, &s) {
                        if let Some(norm) = cov.symmetrize().operator_norm_rel(&g) {
                            sup_cov = fx::max(sup_cov, norm);
                        }
                    }
                }
            }

            // Frame-component bound for the product-metric curvature.
            if let Some(frame) = orthonormal_spacetime_frame(geom, t, &x) {
                let m = n + 1;
                for a in 0..m {
                    for b in a + 1..m {
                        for c in 0..m {
                            for d in c..m {
                                if let Ok(v) = geom.spacetime_riemann(
                                    t, &x, &frame[a], &frame[b], &frame[c], &frame[d],
                                ) {
                                    sup_rm = fx::max(sup_rm, fx::abs(v));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Coefficient-wise accounting of the five correction terms as
    // multiples of (k^2 + k), doubled and inflated.
    let quadratic_branch =
        2.0 * sup_ricci + 4.0 * sup_ricci + 2.0 * sup_rm * (1.0 + sup_ricci) + 2.0 * sup_ricci * sup_ricci;
    let linear_branch = 2.0 * sup_rm + 2.0 * sup_cov;
    let c_hat = 2.0 * fx::max(quadratic_branch, linear_branch) * INFLATION;
    let c1 = 0.5 * c_hat;
    let c2 = sup_ricci;
    let c_prime = c1 + c2;
    ConstantsEstimate {
        c_hat,
        c1,
        c2,
        c_prime,
        sup_ricci,
        sup_cov_ricci: sup_cov,
        sup_riemann_hat: sup_rm,
        provenance: format!(
            "grid sampling, {} per axis over [0,{:.6}]; |Ric| operator norm relative to g(t); Rm_hat frame-component bound; C_hat inflated by {}",
            grid.per_axis, horizon, INFLATION
        ),
    }
}
