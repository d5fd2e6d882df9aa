//! Time integration of the curve-shrinking equation `dc/dt = H` in the
//! moving metric, by classical RK4 on the method-of-lines node system.
//!
//! The parametrization is never redistributed: the identity checks watch
//! `|X|` evolve at fixed parameter, so reparametrizing would destroy them.
//! Clustering is handled by aborting once `min |X|` degenerates.

use crate::curve::{curve_geometry, CurveGeometry, DiscreteCurve};
use crate::fx;
use crate::linalg::Vector;
use crate::metric::{GeomError, Geometry};
use alloc::vec::Vec;

/// Default CFL safety factor on `dt <= safety * (min ds)^2`. The linear
/// stability bound of RK4 with the 4th-order stencil pair sits near
/// `1.5 (min ds)^2`, so 0.5 leaves a 3x margin.
pub const DEFAULT_CFL_SAFETY: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    pub n_nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub eps: f64,
    pub cfl_safety: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub dt: f64,
    pub cfl_safety: f64,
    pub eps: f64,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, dt: f64, eps: f64) -> Self {
        assert!(dt > 0.0);
        FlowState { curve, dt, cfl_safety: DEFAULT_CFL_SAFETY, eps }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowError {
    Geometry(GeomError),
    /// `dt` exceeds the CFL limit `safety * (min ds)^2`.
    CflViolation { dt: f64, limit: f64 },
    /// A node left the chart margins; holds the flow time of the event.
    ChartEscape { time: f64 },
    /// The requested end time exceeds the background horizon.
    HorizonExceeded,
}

impl From<GeomError> for FlowError {
    fn from(e: GeomError) -> Self {
        FlowError::Geometry(e)
    }
}

impl core::fmt::Display for FlowError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FlowError::Geometry(e) => write!(f, "geometry error: {e}"),
            FlowError::CflViolation { dt, limit } => {
                write!(f, "dt = {dt} exceeds the CFL limit {limit}")
            }
            FlowError::ChartEscape { time } => {
                write!(f, "curve escaped the chart margins at t = {time}")
            }
            FlowError::HorizonExceeded => write!(f, "end time exceeds the background horizon"),
        }
    }
}

impl core::error::Error for FlowError {}

/// Node velocities `H(c_j, t)` of the curve-shrinking equation.
fn velocities(geom: &Geometry<'_>, curve: &DiscreteCurve, eps: f64) -> Result<Vec<Vector>, FlowError> {
    let geometry = curve_geometry(geom, curve, eps)?;
    Ok(geometry.curvature)
}

fn advanced(
    geom: &Geometry<'_>,
    base: &DiscreteCurve,
    vel: &[Vector],
    dt: f64,
    t: f64,
) -> Result<DiscreteCurve, FlowError> {
    let chart = geom.chart();
    let nodes: Vec<Vector> = base
        .nodes
        .iter()
        .zip(vel)
        .map(|(p, v)| chart.reduce(&p.axpy(dt, v)))
        .collect();
    if !nodes.iter().all(|p| chart.is_admissible(p)) {
        return Err(FlowError::ChartEscape { time: t });
    }
    Ok(DiscreteCurve { nodes, t })
}

/// One explicit RK4 step, re-evaluating `H` in the moving metric at each
/// stage. Checks the CFL bound against the current geometry first.
pub fn flow_step(geom: &Geometry<'_>, state: &FlowState) -> Result<FlowState, FlowError> {
    let t = state.curve.t;
    let dt = state.dt;
    if t + dt > geom.horizon() + 1e-12 {
        return Err(FlowError::HorizonExceeded);
    }
    let geometry = curve_geometry(geom, &state.curve, state.eps)?;
    let min_ds = geometry.ds.iter().copied().fold(f64::INFINITY, fx::min);
    let limit = state.cfl_safety * min_ds * min_ds;
    if dt > limit {
        return Err(FlowError::CflViolation { dt, limit });
    }

    let k1 = geometry.curvature;
    let c2 = advanced(geom, &state.curve, &k1, 0.5 * dt, t + 0.5 * dt)?;
    let k2 = velocities(geom, &c2, state.eps)?;
    let c3 = advanced(geom, &state.curve, &k2, 0.5 * dt, t + 0.5 * dt)?;
    let k3 = velocities(geom, &c3, state.eps)?;
    let c4 = advanced(geom, &state.curve, &k3, dt, t + dt)?;
    let k4 = velocities(geom, &c4, state.eps)?;

    let combined: Vec<Vector> = (0..state.curve.nodes.len())
        .map(|j| {
            k1[j]
                .axpy(2.0, &k2[j])
                .axpy(2.0, &k3[j])
                .axpy(1.0, &k4[j])
                .scale(1.0 / 6.0)
        })
        .collect();
    let next = advanced(geom, &state.curve, &combined, dt, t + dt)?;
    Ok(FlowState { curve: next, dt, cfl_safety: state.cfl_safety, eps: state.eps })
}

/// One stored snapshot of the node system.
#[derive(Clone, Debug)]
pub struct Frame {
    pub t: f64,
    pub nodes: Vec<Vector>,
}

/// Scalar monitors sampled at each stored frame.
#[derive(Clone, Copy, Debug)]
pub struct SeriesSample {
    pub t: f64,
    pub length: f64,
    pub theta: f64,
    pub theta_eps: f64,
    pub max_k: f64,
    pub min_speed: f64,
    /// Minimum circle projection of `S`; `None` off product backgrounds.
    pub min_u: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub series: Vec<SeriesSample>,
    /// Time spacing of consecutive stored frames.
    pub frame_dt: f64,
    pub eps: f64,
}

impl Trajectory {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn geometry_at(&self, geom: &Geometry<'_>, frame: usize) -> Result<CurveGeometry, GeomError> {
        let f = &self.frames[frame];
        curve_geometry(geom, &DiscreteCurve { nodes: f.nodes.clone(), t: f.t }, self.eps)
    }
}

/// Circle projection `u_j = g(S_j, e_c / |e_c|)` of the unit tangent.
pub fn circle_projection(
    geom: &Geometry<'_>,
    curve: &DiscreteCurve,
    geometry: &CurveGeometry,
    circle_coord: usize,
) -> Result<Vec<f64>, GeomError> {
    let mut out = Vec::with_capacity(geometry.node_count());
    for j in 0..geometry.node_count() {
        let g = geom.metric_checked(curve.t, &curve.nodes[j])?;
        let mut num = 0.0;
        for i in 0..geom.dim() {
            num += g[(circle_coord, i)] * geometry.unit_tangent[j][i];
        }
        out.push(num / fx::sqrt(g[(circle_coord, circle_coord)]));
    }
    Ok(out)
}

/// Run `flow_step` until `t_end`, storing a frame (and the scalar series)
/// every `record_every` steps. `t_end` must land on a whole number of steps
/// within rounding.
pub fn integrate(
    geom: &Geometry<'_>,
    state: FlowState,
    t_end: f64,
    record_every: usize,
    circle_coord: Option<usize>,
) -> Result<Trajectory, FlowError> {
    assert!(record_every >= 1);
    if t_end > geom.horizon() + 1e-12 {
        return Err(FlowError::HorizonExceeded);
    }
    let n_steps_f = (t_end - state.curve.t) / state.dt;
    let n_steps = libm::round(n_steps_f) as usize;
    let mut current = state;
    let mut frames = Vec::new();
    let mut series = Vec::new();

    let mut record = |geom: &Geometry<'_>, st: &FlowState| -> Result<(), FlowError> {
        let geometry = curve_geometry(geom, &st.curve, st.eps)?;
        let min_u = match circle_coord {
            Some(c) => Some(
                circle_projection(geom, &st.curve, &geometry, c)?
                    .into_iter()
                    .fold(f64::INFINITY, fx::min),
            ),
            None => None,
        };
        series.push(SeriesSample {
            t: st.curve.t,
            length: geometry.length,
            theta: geometry.total_curvature,
            theta_eps: geometry.total_curvature_eps,
            max_k: geometry.max_k(),
            min_speed: geometry.min_speed(),
            min_u,
        });
        frames.push(Frame { t: st.curve.t, nodes: st.curve.nodes.clone() });
        Ok(())
    };

    record(geom, &current)?;
    for step in 1..=n_steps {
        current = flow_step(geom, &current)?;
        if step % record_every == 0 {
            record(geom, &current)?;
        }
    }
    Ok(Trajectory {
        frames,
        series,
        frame_dt: current.dt * record_every as f64,
        eps: current.eps,
    })
}
