//! Signed-margin monitors for the inequality consequences of the verified
//! identities, plus the ramp monitor on product backgrounds.
//!
//! Margins are `RHS - LHS`, so nonnegative means the inequality holds.
//! Each monitor carries a tolerance inherited from the measured residual
//! of its parent identity at the same resolution (factor 10): discretely
//! the inequalities hold up to scheme error, never exactly.

use crate::constants::ConstantsEstimate;
use crate::curve::{arclength_derivative, CurveGeometry, DiscreteCurve};
use crate::flow::{circle_projection, Trajectory};
use crate::fx;
use crate::metric::{GeomResult, Geometry};
use crate::residual::{self, PointwiseFields};
use alloc::string::String;
use alloc::vec::Vec;

/// Extra absolute slack for the per-term domination check; covers
/// finite-difference noise in terms whose analytic bound is exactly zero.
pub const DOMINATION_SLACK: f64 = 1e-7;

/// Absolute floor on monitor tolerances. On flat geodesic scenarios the
/// parent identity holds to machine precision, so the inherited tolerance
/// collapses to zero while the margins still carry roundoff noise.
pub const MONITOR_TOL_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MonitorSeries {
    pub name: String,
    pub times: Vec<f64>,
    /// Minimum signed margin over the curve at each sampled time.
    pub min_margin: Vec<f64>,
    /// Margins at or above `-tolerance` count as holding.
    pub tolerance: f64,
    /// Max-norm residual of the parent identity the tolerance came from.
    pub parent_residual: f64,
    /// Times at which the monitor flagged an event (e.g. `u <= 0`).
    pub flagged_times: Vec<f64>,
}

impl MonitorSeries {
    pub fn worst_margin(&self) -> f64 {
        self.min_margin.iter().copied().fold(f64::INFINITY, fx::min)
    }

    pub fn holds(&self) -> bool {
        self.flagged_times.is_empty() && self.worst_margin() >= -self.tolerance
    }
}

fn series_time_deriv(values: &[f64], frame: usize, delta: f64) -> f64 {
    (-values[frame + 2] + 8.0 * values[frame + 1] - 8.0 * values[frame - 1] + values[frame - 2])
        / (12.0 * delta)
}

/// The pointwise and integral inequality monitors along one trajectory.
///
/// Returns, in order: the pointwise `C_hat (k^2 + k)` bound, the pointwise
/// `h` inequality, the two integral bounds on `dL/dt` and `dTheta/dt`, the
/// two closed-form exponential bounds, and the gradient bound
/// `(h')^2 <= <perp, perp>`.
pub fn monitor_inequalities(
    geom: &Geometry<'_>,
    traj: &Trajectory,
    geoms: &[CurveGeometry],
    fields: &PointwiseFields,
    constants: &ConstantsEstimate,
) -> GeomResult<Vec<MonitorSeries>> {
    let res_k2 = residual::residual_k2_evolution(fields, crate::residual::K2Variant::Corrected);
    let res_h = residual::residual_h_identity(fields);
    let res_len = residual::residual_length_evolution(geom, traj, geoms)?;

    let n_frames = fields.times.len();
    let n_nodes = fields.n_nodes;
    let c_hat = constants.c_hat;
    let c1 = constants.c1;
    let c2 = constants.c2;

    let mut corollary = Vec::with_capacity(n_frames);
    let mut h_eps = Vec::with_capacity(n_frames);
    let mut gradient = Vec::with_capacity(n_frames);
    for fi in 0..n_frames {
        let mut m_cor = f64::INFINITY;
        let mut m_h = f64::INFINITY;
        let mut m_grad = f64::INFINITY;
        for j in 0..n_nodes {
            let k = fields.k[fi][j];
            let k_sq = fields.k_sq[fi][j];
            let h = fields.h[fi][j];
            let cor = fields.k2_ss[fi][j] - 2.0 * fields.perp_sq[fi][j]
                + 2.0 * k_sq * k_sq
                + c_hat * (k_sq + k)
                - fields.dk2_dt[fi][j];
            m_cor = fx::min(m_cor, cor);
            let hm = fields.h_ss[fi][j] + k_sq * k + c1 * (h + 1.0) - fields.dh_dt[fi][j];
            m_h = fx::min(m_h, hm);
            let grad = fields.perp_sq[fi][j] - fields.h_s[fi][j] * fields.h_s[fi][j];
            m_grad = fx::min(m_grad, grad);
        }
        corollary.push(m_cor);
        h_eps.push(m_h);
        gradient.push(m_grad);
    }

    // Integral bounds from the recorded series, d/dt over stored samples.
    let length_series: Vec<f64> = traj.series.iter().map(|s| s.length).collect();
    let theta_series: Vec<f64> = traj.series.iter().map(|s| s.theta).collect();
    let theta_eps_series: Vec<f64> = traj.series.iter().map(|s| s.theta_eps).collect();
    let l0 = length_series[0];
    let theta0 = theta_series[0];

    let mut int_length = Vec::with_capacity(n_frames);
    let mut int_theta = Vec::with_capacity(n_frames);
    let mut exp_length = Vec::with_capacity(n_frames);
    let mut exp_theta = Vec::with_capacity(n_frames);
    let mut parent_len_identity = 0.0f64;
    for fi in 0..n_frames {
        let f = fields.frame_index[fi];
        let t = fields.times[fi];
        let g = &geoms[f];
        let dl_dt = series_time_deriv(&length_series, f, traj.frame_dt);
        let dtheta_dt = series_time_deriv(&theta_series, f, traj.frame_dt);
        let dtheta_eps_dt = series_time_deriv(&theta_eps_series, f, traj.frame_dt);
        let _ = dtheta_eps_dt;

        let mut bound_integrand = 0.0;
        let mut exact_integrand = 0.0;
        for j in 0..n_nodes {
            bound_integrand += (c2 - fields.k_sq[fi][j]) * fields.ds[fi][j];
            exact_integrand -= (fields.ric_ss[fi][j] + fields.k_sq[fi][j]) * fields.ds[fi][j];
        }
        int_length.push(bound_integrand - dl_dt);
        parent_len_identity = fx::max(parent_len_identity, fx::abs(dl_dt - exact_integrand));

        int_theta.push((c1 + c2) * g.total_curvature + c1 * g.length - dtheta_dt);

        exp_length.push(l0 * fx::exp(c2 * t) - g.length);
        exp_theta.push(
            (theta0 + l0) * fx::exp((c1 + c2) * t) - (g.total_curvature + g.length),
        );
    }

    let max_h: f64 = fields.h.iter().flatten().copied().fold(0.0, fx::max);
    let tol_integral = 10.0 * (parent_len_identity + res_h.max_norm * l0 * (1.0 + max_h));

    let times = fields.times.clone();
    let mk = |name: &str, margins: Vec<f64>, tol: f64, parent: f64| MonitorSeries {
        name: String::from(name),
        times: times.clone(),
        min_margin: margins,
        tolerance: tol + MONITOR_TOL_FLOOR,
        parent_residual: parent,
        flagged_times: Vec::new(),
    };

    Ok(alloc::vec![
        mk("corollary_pointwise", corollary, 10.0 * res_k2.max_norm, res_k2.max_norm),
        mk("h_epsilon", h_eps, 10.0 * res_h.max_norm, res_h.max_norm),
        mk("integral_length", int_length, tol_integral, parent_len_identity),
        mk("integral_theta", int_theta, tol_integral, parent_len_identity),
        mk("exp_length", exp_length, tol_integral, res_len.max_norm),
        mk("exp_theta_length", exp_theta, tol_integral, res_len.max_norm),
        mk("gradient_bound", gradient, 10.0 * res_k2.max_norm, res_k2.max_norm),
    ])
}

/// Ramp monitor on a background with a circle factor: records `u_min(t)`
/// and the signed margin of the `h/u` differential inequality. A frame
/// with `u <= 0` is flagged; the monitor keeps running.
pub fn ramp_monitor(
    geom: &Geometry<'_>,
    traj: &Trajectory,
    geoms: &[CurveGeometry],
    fields: &PointwiseFields,
    constants: &ConstantsEstimate,
    circle_coord: usize,
) -> GeomResult<(MonitorSeries, Vec<f64>)> {
    let res_h = residual::residual_h_identity(fields);
    let n_nodes = fields.n_nodes;
    let c_prime = constants.c_prime;

    // u and h/u on every stored frame (the time stencil needs neighbors).
    let mut u_all = Vec::with_capacity(traj.frame_count());
    let mut w_all = Vec::with_capacity(traj.frame_count());
    for f in 0..traj.frame_count() {
        let frame = &traj.frames[f];
        let curve = DiscreteCurve { nodes: frame.nodes.clone(), t: frame.t };
        let u = circle_projection(geom, &curve, &geoms[f], circle_coord)?;
        let w: Vec<f64> =
            geoms[f].h.iter().zip(&u).map(|(h, uu)| if *uu > 0.0 { h / uu } else { f64::NAN }).collect();
        u_all.push(u);
        w_all.push(w);
    }

    let mut times = Vec::new();
    let mut margins = Vec::new();
    let mut flagged = Vec::new();
    let mut u_min_series = Vec::new();
    let mut u_min_overall = f64::INFINITY;
    for fi in 0..fields.times.len() {
        let f = fields.frame_index[fi];
        let g = &geoms[f];
        let u = &u_all[f];
        let u_min = u.iter().copied().fold(f64::INFINITY, fx::min);
        u_min_series.push(u_min);
        times.push(fields.times[fi]);
        if u_min <= 0.0
            || u_all[f - 2].iter().chain(&u_all[f - 1]).chain(&u_all[f + 1]).chain(&u_all[f + 2]).any(|v| *v <= 0.0)
        {
            flagged.push(fields.times[fi]);
            margins.push(f64::NAN);
            continue;
        }
        u_min_overall = fx::min(u_min_overall, u_min);

        let w = &w_all[f];
        let w_s = arclength_derivative(w, g, 1);
        let w_ss = arclength_derivative(w, g, 2);
        let u_s = arclength_derivative(u, g, 1);
        let mut m = f64::INFINITY;
        for j in 0..n_nodes {
            let dw_dt = (-w_all[f + 2][j] + 8.0 * w_all[f + 1][j] - 8.0 * w_all[f - 1][j]
                + w_all[f - 2][j])
                / (12.0 * traj.frame_dt);
            let rhs = w_ss[j] + (2.0 * u_s[j] / u[j]) * w_s[j]
                + c_prime * (fields.h[fi][j] + 1.0) / u[j];
            m = fx::min(m, rhs - dw_dt);
        }
        margins.push(m);
    }

    let tol = MONITOR_TOL_FLOOR
        + if u_min_overall.is_finite() && u_min_overall > 0.0 {
            10.0 * res_h.max_norm / u_min_overall
        } else {
            10.0 * res_h.max_norm
        };
    Ok((
        MonitorSeries {
            name: String::from("ramp"),
            times,
            min_margin: margins,
            tolerance: tol,
            parent_residual: res_h.max_norm,
            flagged_times: flagged,
        },
        u_min_series,
    ))
}

/// Pointwise domination of the five correction terms by their
/// `{k^2, k^2, k^2+k, k^2, k}` bounds with the estimated constants.
/// The margin is `bound + slack - |term|`, minimized over terms and nodes.
pub fn term_domination(
    fields: &PointwiseFields,
    constants: &ConstantsEstimate,
) -> MonitorSeries {
    let bounds = constants.per_term_bounds();
    let mut times = Vec::new();
    let mut margins = Vec::new();
    for fi in 0..fields.times.len() {
        let mut m = f64::INFINITY;
        for j in 0..fields.n_nodes {
            let k = fields.k[fi][j];
            let k_sq = fields.k_sq[fi][j];
            let slack = DOMINATION_SLACK * (1.0 + k_sq + k);
            let shapes = [k_sq, k_sq, k_sq + k, k_sq, k];
            let terms = [
                fields.term_ric_hh[fi][j],
                fields.term_ric_ss[fi][j],
                fields.term_rm_hat[fi][j],
                fields.term_prod[fi][j],
                fields.term_cov[fi][j],
            ];
            for i in 0..5 {
                m = fx::min(m, bounds[i] * shapes[i] + slack - fx::abs(terms[i]));
            }
        }
        times.push(fields.times[fi]);
        margins.push(m);
    }
    MonitorSeries {
        name: String::from("term_domination"),
        times,
        min_margin: margins,
        tolerance: 0.0,
        parent_residual: 0.0,
        flagged_times: Vec::new(),
    }
}

/// Reference to a residual/monitor check by name; drives the CLI registry.
pub const RESIDUAL_CHECKS: &[&str] = &["length_evolution", "k2_corrected", "k2_book_erroneous"];
pub const MONITOR_CHECKS: &[&str] = &[
    "corollary_pointwise",
    "h_epsilon",
    "integral_length",
    "integral_theta",
    "exp_length",
    "exp_theta_length",
    "gradient_bound",
    "ramp",
    "term_domination",
];
