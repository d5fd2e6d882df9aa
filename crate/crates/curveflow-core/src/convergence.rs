//! Grid-refinement studies of the identity residuals.
//!
//! Each level reruns the same scenario at doubled node count and halved
//! time step; the observed order is minus the least-squares slope of
//! `log(norm)` against `log(N)`.

use crate::background::{make_background, BackgroundSpec};
use crate::curve::{seed_curve, CurveSeed};
use crate::flow::{integrate, FlowError, FlowParams, FlowState};
use crate::fx;
use crate::metric::Geometry;
use crate::residual::{self, K2Variant, ResidualReport};
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceLevel {
    pub n_nodes: usize,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    LengthEvolution,
    K2(K2Variant),
}

impl ResidualKind {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualKind::LengthEvolution => "length_evolution",
            ResidualKind::K2(K2Variant::Corrected) => "k2_corrected",
            ResidualKind::K2(K2Variant::BookErroneous) => "k2_book_erroneous",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub residual: &'static str,
    pub levels: Vec<ConvergenceLevel>,
    pub max_norms: Vec<f64>,
    pub l2_norms: Vec<f64>,
    /// Observed order from the max norms / l2 norms.
    pub order_max: f64,
    pub order_l2: f64,
}

#[derive(Clone, Debug)]
pub enum StudyError {
    Flow(FlowError),
    Seed(crate::curve::SeedError),
    Background(crate::background::SpecError),
    TooFewLevels,
}

impl core::fmt::Display for StudyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StudyError::Flow(e) => write!(f, "flow failed during convergence study: {e}"),
            StudyError::Seed(e) => write!(f, "seed failed during convergence study: {e}"),
            StudyError::Background(e) => write!(f, "invalid background: {e}"),
            StudyError::TooFewLevels => write!(f, "a convergence study needs at least 3 levels"),
        }
    }
}

impl core::error::Error for StudyError {}

/// Least-squares slope of `log(norm)` versus `log(N)`; the returned order
/// is its negation. Norms at rounding level are clamped to avoid `log(0)`.
pub fn fit_order(n_nodes: &[usize], norms: &[f64]) -> f64 {
    assert_eq!(n_nodes.len(), norms.len());
    let m = norms.len() as f64;
    let xs: Vec<f64> = n_nodes.iter().map(|n| fx::ln(*n as f64)).collect();
    let ys: Vec<f64> = norms.iter().map(|v| fx::ln(fx::max(*v, 1e-300))).collect();
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    -num / den
}

/// Run one residual at each refinement level of a scenario and fit the
/// observed order. `base` supplies everything but `n_nodes` and `dt`.
pub fn convergence_study(
    background: &BackgroundSpec,
    seed: &CurveSeed,
    base: &FlowParams,
    levels: &[ConvergenceLevel],
    kind: ResidualKind,
) -> Result<ConvergenceStudy, StudyError> {
    if levels.len() < 3 {
        return Err(StudyError::TooFewLevels);
    }
    let bg = make_background(background.clone()).map_err(StudyError::Background)?;
    let geom = Geometry::new(&bg);

    let mut max_norms = Vec::with_capacity(levels.len());
    let mut l2_norms = Vec::with_capacity(levels.len());
    for level in levels {
        let curve = seed_curve(seed, level.n_nodes, &bg).map_err(StudyError::Seed)?;
        let mut state = FlowState::new(curve, level.dt, base.eps);
        state.cfl_safety = base.cfl_safety;
        let traj = integrate(&geom, state, base.t_end, base.record_every, None)
            .map_err(StudyError::Flow)?;
        let report = residual_for(&geom, &traj, kind).map_err(FlowError::Geometry)
            .map_err(StudyError::Flow)?;
        max_norms.push(report.max_norm);
        l2_norms.push(report.l2_norm);
    }
    let ns: Vec<usize> = levels.iter().map(|l| l.n_nodes).collect();
    let order_max = fit_order(&ns, &max_norms);
    let order_l2 = fit_order(&ns, &l2_norms);
    Ok(ConvergenceStudy {
        residual: kind.name(),
        levels: levels.to_vec(),
        max_norms,
        l2_norms,
        order_max,
        order_l2,
    })
}

fn residual_for(
    geom: &Geometry<'_>,
    traj: &crate::flow::Trajectory,
    kind: ResidualKind,
) -> crate::metric::GeomResult<ResidualReport> {
    let geoms = residual::frame_geometries(geom, traj)?;
    match kind {
        ResidualKind::LengthEvolution => residual::residual_length_evolution(geom, traj, &geoms),
        ResidualKind::K2(variant) => {
            let fields = residual::pointwise_fields(geom, traj, &geoms)?;
            Ok(residual::residual_k2_evolution(&fields, variant))
        }
    }
}

/// The default three-level refinement ladder for a scenario: halves `dt`
/// and doubles `N` from a coarse start two halvings below the shipped
/// resolution.
pub fn default_levels(params: &FlowParams) -> Vec<ConvergenceLevel> {
    alloc::vec![
        ConvergenceLevel { n_nodes: params.n_nodes / 4, dt: params.dt * 4.0 },
        ConvergenceLevel { n_nodes: params.n_nodes / 2, dt: params.dt * 2.0 },
        ConvergenceLevel { n_nodes: params.n_nodes, dt: params.dt },
    ]
}
