//! Discrete closed curves in a chart and their arclength differential
//! calculus in the time-dependent metric.
//!
//! A curve is sampled at `N` uniform parameter nodes `x_j = j/N`.
//! The coordinate tangent `X = c_*(d/dx)` comes from the periodic 4th-order
//! stencil, `S = X/|X|` is the `g`-unit tangent, and the curvature vector is
//! `H = ∇^g_S S` via the chart Christoffel contraction. Node coordinates on
//! periodic directions are stored reduced; stencils unwrap locally, so
//! curves may wind around periodic identifications.

use crate::background::{Background, BackgroundKind, seeded_rng};
use crate::fx;
use crate::linalg::Vector;
use crate::metric::{GeomError, GeomResult, Geometry};
use crate::stencil;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand_core::RngCore;

/// Relative `|X|` threshold below which the curve counts as degenerate.
pub const DEGENERACY_REL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    /// Node coordinates, periodic directions reduced into the chart.
    pub nodes: Vec<Vector>,
    /// Flow time the node coordinates refer to.
    pub t: f64,
}

impl DiscreteCurve {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Per-node derived fields of a curve at one instant.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    pub t: f64,
    pub eps: f64,
    /// Coordinate tangent `X` per node.
    pub x_tangent: Vec<Vector>,
    /// `|X|` in the metric `g(t)`.
    pub speed: Vec<f64>,
    /// `g`-unit tangent `S`.
    pub unit_tangent: Vec<Vector>,
    /// Curvature vector `H = ∇^g_S S`.
    pub curvature: Vec<Vector>,
    pub k_sq: Vec<f64>,
    pub k: Vec<f64>,
    /// `h = sqrt(k^2 + eps^2)`.
    pub h: Vec<f64>,
    /// Arclength weights `ds_j = |X|_j / N`.
    pub ds: Vec<f64>,
    pub length: f64,
    pub total_curvature: f64,
    pub total_curvature_eps: f64,
}

impl CurveGeometry {
    pub fn node_count(&self) -> usize {
        self.speed.len()
    }

    pub fn max_k(&self) -> f64 {
        self.k.iter().copied().fold(0.0, fx::max)
    }

    pub fn min_speed(&self) -> f64 {
        self.speed.iter().copied().fold(f64::INFINITY, fx::min)
    }
}

/// Per-coordinate derivative `dX^i/dx` of the node positions, unwrapping
/// periodic coordinates around each node.
pub fn node_tangents(geom: &Geometry<'_>, curve: &DiscreteCurve) -> Vec<Vector> {
    let chart = geom.chart();
    let n_nodes = curve.nodes.len();
    let dim = chart.dim();
    let mut out = alloc::vec![Vector::zeros(dim); n_nodes];
    for i in 0..dim {
        if chart.is_periodic(i) {
            let p = chart.extent(i);
            for j in 0..n_nodes {
                let center = curve.nodes[j][i];
                let mut window = [0.0; 5];
                for (w, off) in (-2i64..=2).enumerate() {
                    let idx = (j as i64 + off).rem_euclid(n_nodes as i64) as usize;
                    let raw = curve.nodes[idx][i];
                    let d = raw - center;
                    window[w] = center + d - p * fx::floor(d / p + 0.5);
                }
                out[j][i] = stencil::deriv_window(window, n_nodes);
            }
        } else {
            let series: Vec<f64> = curve.nodes.iter().map(|node| node[i]).collect();
            let d = stencil::deriv_periodic(&series);
            for j in 0..n_nodes {
                out[j][i] = d[j];
            }
        }
    }
    out
}

/// All per-node derived fields of `curve` at its own time.
pub fn curve_geometry(
    geom: &Geometry<'_>,
    curve: &DiscreteCurve,
    eps: f64,
) -> GeomResult<CurveGeometry> {
    let n_nodes = curve.nodes.len();
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(GeomError::InsufficientFrames);
    }
    let dim = geom.dim();
    let t = curve.t;
    let threshold = DEGENERACY_REL * geom.chart().max_extent();

    let x_tangent = node_tangents(geom, curve);
    let mut speed = Vec::with_capacity(n_nodes);
    let mut unit_tangent = Vec::with_capacity(n_nodes);
    for j in 0..n_nodes {
        let g = geom.metric_checked(t, &curve.nodes[j])?;
        let sq = g.bilinear(&x_tangent[j], &x_tangent[j]);
        let absx = fx::sqrt(fx::max(sq, 0.0));
        if absx < threshold {
            return Err(GeomError::DegenerateCurve);
        }
        speed.push(absx);
        unit_tangent.push(x_tangent[j].scale(1.0 / absx));
    }

    // S(S^k) = (1/|X|) d/dx S^k, then H^k = S(S^k) + Γ^k_{ij} S^i S^j.
    let mut ds_comp = alloc::vec![Vector::zeros(dim); n_nodes];
    for i in 0..dim {
        let series: Vec<f64> = unit_tangent.iter().map(|s| s[i]).collect();
        let d = stencil::deriv_periodic(&series);
        for j in 0..n_nodes {
            ds_comp[j][i] = d[j];
        }
    }

    let mut curvature = Vec::with_capacity(n_nodes);
    let mut k_sq = Vec::with_capacity(n_nodes);
    let mut k = Vec::with_capacity(n_nodes);
    let mut h = Vec::with_capacity(n_nodes);
    let mut ds = Vec::with_capacity(n_nodes);
    let mut length = 0.0;
    let mut total_curvature = 0.0;
    let mut total_curvature_eps = 0.0;
    for j in 0..n_nodes {
        let gamma = geom.christoffel(t, &curve.nodes[j])?;
        let s = &unit_tangent[j];
        let hvec = Vector::from_fn(dim, |kk| {
            let mut v = ds_comp[j][kk] / speed[j];
            for a in 0..dim {
                for b in 0..dim {
                    v += gamma[(kk, a, b)] * s[a] * s[b];
                }
            }
            v
        });
        let g = geom.metric_checked(t, &curve.nodes[j])?;
        let ksq = fx::max(g.bilinear(&hvec, &hvec), 0.0);
        let kk = fx::sqrt(ksq);
        let hh = fx::sqrt(ksq + eps * eps);
        let w = speed[j] / n_nodes as f64;
        curvature.push(hvec);
        k_sq.push(ksq);
        k.push(kk);
        h.push(hh);
        ds.push(w);
        length += w;
        total_curvature += kk * w;
        total_curvature_eps += hh * w;
    }

    Ok(CurveGeometry {
        t,
        eps,
        x_tangent,
        speed,
        unit_tangent,
        curvature,
        k_sq,
        k,
        h,
        ds,
        length,
        total_curvature,
        total_curvature_eps,
    })
}

/// Arclength derivative of a per-node scalar field: `f' = (1/|X|) df/dx`.
/// `order = 2` composes two first derivatives rather than using a one-shot
/// second-difference.
pub fn arclength_derivative(field: &[f64], geometry: &CurveGeometry, order: u8) -> Vec<f64> {
    assert_eq!(field.len(), geometry.node_count());
    assert!(order == 1 || order == 2);
    let once = |f: &[f64]| -> Vec<f64> {
        stencil::deriv_periodic(f)
            .into_iter()
            .zip(&geometry.speed)
            .map(|(d, s)| d / s)
            .collect()
    };
    let d1 = once(field);
    if order == 1 {
        d1
    } else {
        once(&d1)
    }
}

/// Seed-curve specifications; the concrete layout depends on the background.
#[derive(Clone, Debug)]
pub enum CurveSeed {
    /// Round circle on the flat torus.
    TorusCircle { center: [f64; 2], radius: f64 },
    /// Circle with seeded Fourier radius perturbations; zero amplitudes
    /// reduce to `TorusCircle`.
    TorusFourier { center: [f64; 2], radius: f64, amplitudes: Vec<f64>, phase_seed: u64 },
    /// Latitude circle `theta = theta0` on the sphere factor.
    SphereLatitude { theta0: f64 },
    /// Ramp: positive projection onto the circle direction throughout.
    /// On a product background the curve also wraps the latitude circle;
    /// on the flat torus it is a straight wound line.
    ProductRamp { theta0: f64, winding: u32 },
    /// Ramp with a polar-angle modulation `theta0 + amplitude cos(2 pi x)`.
    /// Breaks the homogeneity of `ProductRamp`, so `Ric(S, H) != 0` along
    /// the curve and the erroneous `k^2` variant visibly fails.
    ProductWavyRamp { theta0: f64, winding: u32, amplitude: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeedError {
    /// The seed kind does not exist on the chosen background.
    UnsupportedBackground,
    /// A node left the admissible chart region at seed time.
    OutsideChart,
    BadParameter,
}

impl core::fmt::Display for SeedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SeedError::UnsupportedBackground => {
                write!(f, "seed curve kind is not defined on this background")
            }
            SeedError::OutsideChart => write!(f, "seed curve exits the chart margins"),
            SeedError::BadParameter => write!(f, "seed curve parameter out of range"),
        }
    }
}

impl core::error::Error for SeedError {}

pub fn seed_curve(
    seed: &CurveSeed,
    n_nodes: usize,
    background: &Background,
) -> Result<DiscreteCurve, SeedError> {
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(SeedError::BadParameter);
    }
    let chart = background.spec();
    let nodes: Vec<Vector> = match (seed, chart.kind) {
        (CurveSeed::TorusCircle { center, radius }, BackgroundKind::FlatTorus { .. }) => {
            if *radius <= 0.0 {
                return Err(SeedError::BadParameter);
            }
            (0..n_nodes)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / n_nodes as f64;
                    Vector::from_slice(&[
                        center[0] + radius * fx::cos(phi),
                        center[1] + radius * fx::sin(phi),
                    ])
                })
                .collect()
        }
        (
            CurveSeed::TorusFourier { center, radius, amplitudes, phase_seed },
            BackgroundKind::FlatTorus { .. },
        ) => {
            if *radius <= 0.0 {
                return Err(SeedError::BadParameter);
            }
            let mut rng = seeded_rng(*phase_seed);
            let phases: Vec<f64> = amplitudes
                .iter()
                .map(|_| 2.0 * PI * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
                .collect();
            (0..n_nodes)
                .map(|j| {
                    let x = j as f64 / n_nodes as f64;
                    let mut rho = *radius;
                    for (m, (&amp, &phase)) in amplitudes.iter().zip(&phases).enumerate() {
                        rho += radius * amp * fx::cos(2.0 * PI * (m + 1) as f64 * x + phase);
                    }
                    let phi = 2.0 * PI * x;
                    Vector::from_slice(&[
                        center[0] + rho * fx::cos(phi),
                        center[1] + rho * fx::sin(phi),
                    ])
                })
                .collect()
        }
        (CurveSeed::SphereLatitude { theta0 }, BackgroundKind::ShrinkingSphere { .. }) => (0
            ..n_nodes)
            .map(|j| {
                Vector::from_slice(&[*theta0, 2.0 * PI * j as f64 / n_nodes as f64])
            })
            .collect(),
        (
            CurveSeed::ProductRamp { theta0, winding },
            BackgroundKind::SphereCrossCircle { circle_len, .. },
        ) => {
            if *winding < 1 {
                return Err(SeedError::BadParameter);
            }
            (0..n_nodes)
                .map(|j| {
                    let x = j as f64 / n_nodes as f64;
                    Vector::from_slice(&[
                        *theta0,
                        2.0 * PI * x,
                        *winding as f64 * circle_len * x,
                    ])
                })
                .collect()
        }
        (
            CurveSeed::ProductWavyRamp { theta0, winding, amplitude },
            BackgroundKind::SphereCrossCircle { circle_len, .. },
        ) => {
            if *winding < 1 {
                return Err(SeedError::BadParameter);
            }
            (0..n_nodes)
                .map(|j| {
                    let x = j as f64 / n_nodes as f64;
                    Vector::from_slice(&[
                        theta0 + amplitude * fx::cos(2.0 * PI * x),
                        2.0 * PI * x,
                        *winding as f64 * circle_len * x,
                    ])
                })
                .collect()
        }
        (CurveSeed::ProductRamp { winding, .. }, BackgroundKind::FlatTorus { periods }) => {
            if *winding < 1 {
                return Err(SeedError::BadParameter);
            }
            (0..n_nodes)
                .map(|j| {
                    let x = j as f64 / n_nodes as f64;
                    Vector::from_slice(&[
                        0.5 * periods[0],
                        *winding as f64 * periods[1] * x,
                    ])
                })
                .collect()
        }
        _ => return Err(SeedError::UnsupportedBackground),
    };
    use crate::metric::MetricFamily;
    let domain = background.chart();
    let reduced: Vec<Vector> = nodes.iter().map(|p| domain.reduce(p)).collect();
    if !reduced.iter().all(|p| domain.is_admissible(p)) {
        return Err(SeedError::OutsideChart);
    }
    Ok(DiscreteCurve { nodes: reduced, t: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::make_background;
    use crate::background::BackgroundSpec;
    use crate::metric::Geometry;
    use proptest::prelude::*;

    fn torus() -> Background {
        make_background(BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45)).unwrap()
    }

    fn sphere() -> Background {
        make_background(BackgroundSpec::shrinking_sphere(1.0, 0.4)).unwrap()
    }

    #[test]
    fn torus_circle_curvature_and_length() {
        let bg = torus();
        let geom = Geometry::new(&bg);
        let rho = 0.8;
        let curve = seed_curve(
            &CurveSeed::TorusCircle { center: [PI, PI], radius: rho },
            128,
            &bg,
        )
        .unwrap();
        let g = curve_geometry(&geom, &curve, 1e-3).unwrap();
        for j in 0..g.node_count() {
            assert!((g.k[j] - 1.0 / rho).abs() < 1e-6, "k={}", g.k[j]);
            assert!((g.h[j] - (g.k_sq[j] + 1e-6).sqrt()).abs() < 1e-15);
        }
        assert!((g.length - 2.0 * PI * rho).abs() < 1e-5);
        assert!((g.total_curvature - 2.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn sphere_latitude_curvature_closed_form() {
        let bg = sphere();
        let geom = Geometry::new(&bg);
        let theta0 = PI / 3.0;
        let t = 0.1;
        let r = (1.0f64 - 2.0 * t).sqrt();
        let mut curve =
            seed_curve(&CurveSeed::SphereLatitude { theta0 }, 64, &bg).unwrap();
        curve.t = t;
        let g = curve_geometry(&geom, &curve, 1e-3).unwrap();
        // Geodesic curvature of a latitude circle: cot(theta) / r.
        let expected = 1.0 / (theta0.tan() * r);
        for j in 0..g.node_count() {
            assert!((g.k[j] - expected).abs() < 1e-10, "k={} vs {}", g.k[j], expected);
        }
        assert!((g.length - 2.0 * PI * r * theta0.sin()).abs() < 1e-10);
    }

    #[test]
    fn curvature_vector_is_g_orthogonal_to_tangent() {
        let bg = torus();
        let geom = Geometry::new(&bg);
        let curve = seed_curve(
            &CurveSeed::TorusFourier {
                center: [PI, PI],
                radius: 0.9,
                amplitudes: vec![0.05, 0.03],
                phase_seed: 7,
            },
            128,
            &bg,
        )
        .unwrap();
        let g = curve_geometry(&geom, &curve, 1e-3).unwrap();
        for j in 0..g.node_count() {
            let ip = geom
                .inner(curve.t, &curve.nodes[j], &g.curvature[j], &g.unit_tangent[j])
                .unwrap();
            assert!(ip.abs() < 1e-5, "<H,S> = {ip}");
        }
    }

    #[test]
    fn closed_integral_of_second_arclength_derivative_vanishes() {
        let bg = torus();
        let geom = Geometry::new(&bg);
        let curve = seed_curve(
            &CurveSeed::TorusFourier {
                center: [PI, PI],
                radius: 0.9,
                amplitudes: vec![0.08],
                phase_seed: 3,
            },
            128,
            &bg,
        )
        .unwrap();
        let g = curve_geometry(&geom, &curve, 1e-3).unwrap();
        let d2 = arclength_derivative(&g.k_sq, &g, 2);
        let integral: f64 = d2.iter().zip(&g.ds).map(|(v, ds)| v * ds).sum();
        assert!(integral.abs() < 1e-4, "closed integral = {integral}");
    }

    #[test]
    fn seed_rejects_mismatched_background_and_bad_sizes() {
        let bg = torus();
        assert_eq!(
            seed_curve(&CurveSeed::SphereLatitude { theta0: 1.0 }, 64, &bg).unwrap_err(),
            SeedError::UnsupportedBackground
        );
        assert_eq!(
            seed_curve(
                &CurveSeed::TorusCircle { center: [PI, PI], radius: 1.0 },
                63,
                &bg
            )
            .unwrap_err(),
            SeedError::BadParameter
        );
        let sp = sphere();
        // Latitude too close to the pole margin.
        assert_eq!(
            seed_curve(&CurveSeed::SphereLatitude { theta0: 0.05 }, 64, &sp).unwrap_err(),
            SeedError::OutsideChart
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn total_curvature_epsilon_ordering(eps in 1e-4..1e-1f64, rho in 0.5..1.1f64) {
            let bg = torus();
            let geom = Geometry::new(&bg);
            let curve = seed_curve(
                &CurveSeed::TorusFourier {
                    center: [PI, PI],
                    radius: rho,
                    amplitudes: vec![0.05],
                    phase_seed: 11,
                },
                64,
                &bg,
            )
            .unwrap();
            let g = curve_geometry(&geom, &curve, eps).unwrap();
            prop_assert!(g.total_curvature <= g.total_curvature_eps + 1e-12);
            prop_assert!(g.total_curvature_eps <= g.total_curvature + eps * g.length + 1e-12);
        }
    }
}
