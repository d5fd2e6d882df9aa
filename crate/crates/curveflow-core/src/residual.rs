//! Residual evaluation for the evolution identities along a stored flow
//! trajectory.
//!
//! The headline check is the evolution equation of `k^2` for a curve
//! shrinking inside an ambient Ricci flow:
//!
//! ```text
//! d(k^2)/dt = (k^2)'' - 2 <(∇_S H)^perp, (∇_S H)^perp> + 2 k^4
//!             - 2 Ric(H,H) + 4 k^2 Ric(S,S) + 2 Rm_hat(H_hat, S, H, S)
//!             + 2 Ric(S,S) Ric(H,H) - 2 (∇_S Ric)(S,H)
//! ```
//!
//! where `∇_S H` is taken in the product metric (its vertical part is
//! `Ric(S,H)`), `H_hat = H + d/dt`, and `perp` removes the component along
//! `S`. The `BookErroneous` variant drops the last two terms and replaces
//! the product-metric curvature by the horizontal `Rm(H,S,H,S)`; on any
//! background with `Ric != 0` its residual converges to the magnitude of
//! the dropped terms instead of zero.
//!
//! Time derivatives at fixed parameter use the 4th-order central stencil
//! over five stored frames; the first and last two frames are excluded
//! from all norms.

use crate::curve::{arclength_derivative, CurveGeometry};
use crate::flow::Trajectory;
use crate::fx;
use crate::linalg::Vector;
use crate::metric::{GeomError, GeomResult, Geometry, SpacetimeVector};
use crate::stencil;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum K2Variant {
    Corrected,
    BookErroneous,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub name: String,
    /// Times of the interior frames the residual was sampled at.
    pub times: Vec<f64>,
    /// Per-node residuals, `[frame][node]`.
    pub per_node: Vec<Vec<f64>>,
    pub per_frame_max: Vec<f64>,
    pub per_frame_l2: Vec<f64>,
    pub max_norm: f64,
    /// Root-mean-square over every sampled node and frame.
    pub l2_norm: f64,
    pub n_nodes: usize,
    pub frame_dt: f64,
    /// Max magnitudes of the individual right-hand-side terms.
    pub term_breakdown: Vec<(String, f64)>,
}

impl ResidualReport {
    fn from_values(
        name: &str,
        times: Vec<f64>,
        per_node: Vec<Vec<f64>>,
        n_nodes: usize,
        frame_dt: f64,
        term_breakdown: Vec<(String, f64)>,
    ) -> Self {
        let per_frame_max: Vec<f64> = per_node
            .iter()
            .map(|row| row.iter().map(|v| fx::abs(*v)).fold(0.0, fx::max))
            .collect();
        let per_frame_l2: Vec<f64> = per_node
            .iter()
            .map(|row| {
                fx::sqrt(row.iter().map(|v| v * v).sum::<f64>() / row.len().max(1) as f64)
            })
            .collect();
        let max_norm = per_frame_max.iter().copied().fold(0.0, fx::max);
        let count: usize = per_node.iter().map(Vec::len).sum();
        let l2_norm = fx::sqrt(
            per_node.iter().flatten().map(|v| v * v).sum::<f64>() / count.max(1) as f64,
        );
        ResidualReport {
            name: String::from(name),
            times,
            per_node,
            per_frame_max,
            per_frame_l2,
            max_norm,
            l2_norm,
            n_nodes,
            frame_dt,
            term_breakdown,
        }
    }
}

/// Geometry of every stored frame, computed once per trajectory.
pub fn frame_geometries(
    geom: &Geometry<'_>,
    traj: &Trajectory,
) -> GeomResult<Vec<CurveGeometry>> {
    (0..traj.frame_count()).map(|f| traj.geometry_at(geom, f)).collect()
}

/// Interior frame indices `2 .. F-2` usable by the 5-point time stencil.
pub fn interior_frames(traj: &Trajectory) -> GeomResult<core::ops::Range<usize>> {
    let f = traj.frame_count();
    if f < 5 {
        return Err(GeomError::InsufficientFrames);
    }
    Ok(2..f - 2)
}

/// 4th-order central time derivative of a per-frame, per-node field at one
/// interior frame.
fn time_deriv_at(field: &[Vec<f64>], frame: usize, node: usize, delta: f64) -> f64 {
    (-field[frame + 2][node] + 8.0 * field[frame + 1][node] - 8.0 * field[frame - 1][node]
        + field[frame - 2][node])
        / (12.0 * delta)
}

/// Residual of the length-element evolution: per node,
/// `d(|X|^2)/dt + 2 Ric(X,X) + 2 k^2 |X|^2`.
///
/// The commutator identity `[H_hat, S] = (k^2 + Ric(S,S)) S` is reported
/// through the equivalent scalar residual `d|X|/dt + (k^2 + Ric(S,S)) |X|`
/// in the term breakdown.
pub fn residual_length_evolution(
    geom: &Geometry<'_>,
    traj: &Trajectory,
    geoms: &[CurveGeometry],
) -> GeomResult<ResidualReport> {
    let interior = interior_frames(traj)?;
    let n_nodes = geoms[0].node_count();

    let speed_sq: Vec<Vec<f64>> = geoms
        .iter()
        .map(|g| g.speed.iter().map(|s| s * s).collect())
        .collect();
    let speed: Vec<Vec<f64>> = geoms.iter().map(|g| g.speed.clone()).collect();

    let mut times = Vec::new();
    let mut per_node = Vec::new();
    let mut max_ddt = 0.0;
    let mut max_ric = 0.0;
    let mut max_k2 = 0.0;
    let mut max_commutator = 0.0;
    for f in interior {
        let frame = &traj.frames[f];
        let g = &geoms[f];
        let mut row = Vec::with_capacity(n_nodes);
        for j in 0..n_nodes {
            let d_speed_sq = time_deriv_at(&speed_sq, f, j, traj.frame_dt);
            let ric = geom.ricci(frame.t, &frame.nodes[j])?;
            let term_ric = 2.0 * ric.bilinear(&g.x_tangent[j], &g.x_tangent[j]);
            let term_k2 = 2.0 * g.k_sq[j] * speed_sq[f][j];
            row.push(d_speed_sq + term_ric + term_k2);
            max_ddt = fx::max(max_ddt, fx::abs(d_speed_sq));
            max_ric = fx::max(max_ric, fx::abs(term_ric));
            max_k2 = fx::max(max_k2, fx::abs(term_k2));

            let d_speed = time_deriv_at(&speed, f, j, traj.frame_dt);
            let ric_ss = ric.bilinear(&g.unit_tangent[j], &g.unit_tangent[j]);
            let commutator = d_speed + (g.k_sq[j] + ric_ss) * g.speed[j];
            max_commutator = fx::max(max_commutator, fx::abs(commutator));
        }
        times.push(frame.t);
        per_node.push(row);
    }
    Ok(ResidualReport::from_values(
        "length_evolution",
        times,
        per_node,
        n_nodes,
        traj.frame_dt,
        alloc::vec![
            (String::from("d|X|^2/dt"), max_ddt),
            (String::from("2Ric(X,X)"), max_ric),
            (String::from("2k^2|X|^2"), max_k2),
            (String::from("commutator_form_residual"), max_commutator),
        ],
    ))
}

/// Everything the `k^2` residual and the pointwise inequality monitors need,
/// evaluated once per interior frame.
#[derive(Clone, Debug)]
pub struct PointwiseFields {
    pub times: Vec<f64>,
    pub frame_index: Vec<usize>,
    pub n_nodes: usize,
    pub frame_dt: f64,
    /// All rows below are `[interior frame][node]`.
    pub k: Vec<Vec<f64>>,
    pub k_sq: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub ds: Vec<Vec<f64>>,
    pub dk2_dt: Vec<Vec<f64>>,
    pub dh_dt: Vec<Vec<f64>>,
    pub k2_ss: Vec<Vec<f64>>,
    pub h_s: Vec<Vec<f64>>,
    pub h_ss: Vec<Vec<f64>>,
    /// `<(∇_S H)^perp, (∇_S H)^perp>` in the product metric.
    pub perp_sq: Vec<Vec<f64>>,
    pub ric_ss: Vec<Vec<f64>>,
    /// Signed correction terms as they appear on the right-hand side.
    pub term_ric_hh: Vec<Vec<f64>>,
    pub term_ric_ss: Vec<Vec<f64>>,
    pub term_rm_hat: Vec<Vec<f64>>,
    pub term_prod: Vec<Vec<f64>>,
    pub term_cov: Vec<Vec<f64>>,
    /// Horizontal-curvature replacement `2 Rm_g(H,S,H,S)` used by the
    /// erroneous variant.
    pub term_rm_horizontal: Vec<Vec<f64>>,
}

pub fn pointwise_fields(
    geom: &Geometry<'_>,
    traj: &Trajectory,
    geoms: &[CurveGeometry],
) -> GeomResult<PointwiseFields> {
    let interior = interior_frames(traj)?;
    let n_nodes = geoms[0].node_count();
    let dim = geom.dim();

    let k_sq_all: Vec<Vec<f64>> = geoms.iter().map(|g| g.k_sq.clone()).collect();
    let h_all: Vec<Vec<f64>> = geoms.iter().map(|g| g.h.clone()).collect();

    let mut out = PointwiseFields {
        times: Vec::new(),
        frame_index: Vec::new(),
        n_nodes,
        frame_dt: traj.frame_dt,
        k: Vec::new(),
        k_sq: Vec::new(),
        h: Vec::new(),
        ds: Vec::new(),
        dk2_dt: Vec::new(),
        dh_dt: Vec::new(),
        k2_ss: Vec::new(),
        h_s: Vec::new(),
        h_ss: Vec::new(),
        perp_sq: Vec::new(),
        ric_ss: Vec::new(),
        term_ric_hh: Vec::new(),
        term_ric_ss: Vec::new(),
        term_rm_hat: Vec::new(),
        term_prod: Vec::new(),
        term_cov: Vec::new(),
        term_rm_horizontal: Vec::new(),
    };

    for f in interior {
        let frame = &traj.frames[f];
        let g = &geoms[f];
        let t = frame.t;

        // S(H^k) per node: parameter stencil on the curvature components,
        // then division by |X|.
        let mut s_of_h = alloc::vec![Vector::zeros(dim); n_nodes];
        for i in 0..dim {
            let series: Vec<f64> = g.curvature.iter().map(|hv| hv[i]).collect();
            let d = stencil::deriv_periodic(&series);
            for j in 0..n_nodes {
                s_of_h[j][i] = d[j] / g.speed[j];
            }
        }

        let k2_ss = arclength_derivative(&g.k_sq, g, 2);
        let h_s = arclength_derivative(&g.h, g, 1);
        let h_ss = arclength_derivative(&g.h, g, 2);

        let mut row_dk2 = Vec::with_capacity(n_nodes);
        let mut row_dh = Vec::with_capacity(n_nodes);
        let mut row_perp = Vec::with_capacity(n_nodes);
        let mut row_ric_ss = Vec::with_capacity(n_nodes);
        let mut row_ric_hh = Vec::with_capacity(n_nodes);
        let mut row_term_ss = Vec::with_capacity(n_nodes);
        let mut row_rm_hat = Vec::with_capacity(n_nodes);
        let mut row_prod = Vec::with_capacity(n_nodes);
        let mut row_cov = Vec::with_capacity(n_nodes);
        let mut row_rm_g = Vec::with_capacity(n_nodes);

        for j in 0..n_nodes {
            let x = &frame.nodes[j];
            let s = g.unit_tangent[j];
            let hv = g.curvature[j];
            let ric = geom.ricci(t, x)?;

            row_dk2.push(time_deriv_at(&k_sq_all, f, j, traj.frame_dt));
            row_dh.push(time_deriv_at(&h_all, f, j, traj.frame_dt));

            // ∇_S H in the product metric: horizontal ∇^g_S H plus the
            // vertical component Ric(S, H).
            let nabla_s_h = geom.spacetime_cov_deriv(
                t,
                x,
                &SpacetimeVector::horizontal(s),
                &SpacetimeVector::horizontal(hv),
                &SpacetimeVector::horizontal(s_of_h[j]),
            )?;
            let s_st = SpacetimeVector::horizontal(s);
            let along_s = geom.inner_spacetime(t, x, &nabla_s_h, &s_st)?;
            let perp = nabla_s_h.sub(&s_st.scale(along_s));
            row_perp.push(geom.inner_spacetime(t, x, &perp, &perp)?);

            let ric_ss = ric.bilinear(&s, &s);
            let ric_hh = ric.bilinear(&hv, &hv);
            row_ric_ss.push(ric_ss);
            row_ric_hh.push(-2.0 * ric_hh);
            row_term_ss.push(4.0 * g.k_sq[j] * ric_ss);

            let h_hat = SpacetimeVector { horizontal: hv, vertical: 1.0 };
            let h_st = SpacetimeVector::horizontal(hv);
            let rm_hat = geom.spacetime_riemann(t, x, &h_hat, &s_st, &h_st, &s_st)?;
            row_rm_hat.push(2.0 * rm_hat);

            row_prod.push(2.0 * ric_ss * ric_hh);
            let cov_ric = geom.cov_deriv_ricci(t, x, &s)?;
            row_cov.push(-2.0 * cov_ric.bilinear(&s, &hv));

            let rm_g = geom.riemann_horizontal(t, x, &hv, &s, &hv, &s)?;
            row_rm_g.push(2.0 * rm_g);
        }

        out.times.push(t);
        out.frame_index.push(f);
        out.k.push(g.k.clone());
        out.k_sq.push(g.k_sq.clone());
        out.h.push(g.h.clone());
        out.ds.push(g.ds.clone());
        out.dk2_dt.push(row_dk2);
        out.dh_dt.push(row_dh);
        out.k2_ss.push(k2_ss);
        out.h_s.push(h_s);
        out.h_ss.push(h_ss);
        out.perp_sq.push(row_perp);
        out.ric_ss.push(row_ric_ss);
        out.term_ric_hh.push(row_ric_hh);
        out.term_ric_ss.push(row_term_ss);
        out.term_rm_hat.push(row_rm_hat);
        out.term_prod.push(row_prod);
        out.term_cov.push(row_cov);
        out.term_rm_horizontal.push(row_rm_g);
    }
    Ok(out)
}

/// Residual of the `k^2` evolution equation along the trajectory.
pub fn residual_k2_evolution(
    fields: &PointwiseFields,
    variant: K2Variant,
) -> ResidualReport {
    let name = match variant {
        K2Variant::Corrected => "k2_corrected",
        K2Variant::BookErroneous => "k2_book_erroneous",
    };
    let mut times = Vec::new();
    let mut per_node = Vec::new();
    let mut bd = [0.0f64; 8];
    for fi in 0..fields.times.len() {
        let n = fields.n_nodes;
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let k_sq = fields.k_sq[fi][j];
            let base = fields.k2_ss[fi][j] - 2.0 * fields.perp_sq[fi][j]
                + 2.0 * k_sq * k_sq
                + fields.term_ric_hh[fi][j]
                + fields.term_ric_ss[fi][j];
            let rhs = match variant {
                K2Variant::Corrected => {
                    base + fields.term_rm_hat[fi][j]
                        + fields.term_prod[fi][j]
                        + fields.term_cov[fi][j]
                }
                K2Variant::BookErroneous => base + fields.term_rm_horizontal[fi][j],
            };
            row.push(fields.dk2_dt[fi][j] - rhs);
            bd[0] = fx::max(bd[0], fx::abs(fields.k2_ss[fi][j]));
            bd[1] = fx::max(bd[1], 2.0 * fields.perp_sq[fi][j]);
            bd[2] = fx::max(bd[2], 2.0 * k_sq * k_sq);
            bd[3] = fx::max(bd[3], fx::abs(fields.term_ric_hh[fi][j]));
            bd[4] = fx::max(bd[4], fx::abs(fields.term_ric_ss[fi][j]));
            bd[5] = fx::max(bd[5], fx::abs(fields.term_rm_hat[fi][j]));
            bd[6] = fx::max(bd[6], fx::abs(fields.term_prod[fi][j]));
            bd[7] = fx::max(bd[7], fx::abs(fields.term_cov[fi][j]));
        }
        times.push(fields.times[fi]);
        per_node.push(row);
    }
    ResidualReport::from_values(
        name,
        times,
        per_node,
        fields.n_nodes,
        fields.frame_dt,
        alloc::vec![
            (String::from("(k^2)''"), bd[0]),
            (String::from("2<perp,perp>"), bd[1]),
            (String::from("2k^4"), bd[2]),
            (String::from("-2Ric(H,H)"), bd[3]),
            (String::from("4k^2Ric(S,S)"), bd[4]),
            (String::from("2Rm_hat(H_hat,S,H,S)"), bd[5]),
            (String::from("2Ric(S,S)Ric(H,H)"), bd[6]),
            (String::from("-2(cov_S Ric)(S,H)"), bd[7]),
        ],
    )
}

/// Magnitude of the terms the erroneous variant drops or replaces:
/// `|2 Ric(S,S) Ric(H,H) - 2 (∇_S Ric)(S,H) + 2 (Rm_hat - Rm_g)|` per node.
pub fn dropped_terms_magnitude(fields: &PointwiseFields) -> ResidualReport {
    let mut times = Vec::new();
    let mut per_node = Vec::new();
    for fi in 0..fields.times.len() {
        let row: Vec<f64> = (0..fields.n_nodes)
            .map(|j| {
                fx::abs(
                    fields.term_prod[fi][j]
                        + fields.term_cov[fi][j]
                        + (fields.term_rm_hat[fi][j] - fields.term_rm_horizontal[fi][j]),
                )
            })
            .collect();
        times.push(fields.times[fi]);
        per_node.push(row);
    }
    ResidualReport::from_values(
        "dropped_terms_magnitude",
        times,
        per_node,
        fields.n_nodes,
        fields.frame_dt,
        Vec::new(),
    )
}

/// Residual of the `h` form of the evolution identity,
/// `dh/dt - (1/2h) * RHS(k^2)`; used as the parent identity for the
/// pointwise `h` inequality's tolerance.
pub fn residual_h_identity(fields: &PointwiseFields) -> ResidualReport {
    let mut times = Vec::new();
    let mut per_node = Vec::new();
    for fi in 0..fields.times.len() {
        let row: Vec<f64> = (0..fields.n_nodes)
            .map(|j| {
                let k_sq = fields.k_sq[fi][j];
                let rhs = fields.k2_ss[fi][j] - 2.0 * fields.perp_sq[fi][j]
                    + 2.0 * k_sq * k_sq
                    + fields.term_ric_hh[fi][j]
                    + fields.term_ric_ss[fi][j]
                    + fields.term_rm_hat[fi][j]
                    + fields.term_prod[fi][j]
                    + fields.term_cov[fi][j];
                fields.dh_dt[fi][j] - rhs / (2.0 * fields.h[fi][j])
            })
            .collect();
        times.push(fields.times[fi]);
        per_node.push(row);
    }
    ResidualReport::from_values(
        "h_identity",
        times,
        per_node,
        fields.n_nodes,
        fields.frame_dt,
        Vec::new(),
    )
}
