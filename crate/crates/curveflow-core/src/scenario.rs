//! The shipped scenario registry: named background + seed + flow-parameter
//! bundles with check lists, usable headlessly from the CLI or from tests.

use crate::background::BackgroundSpec;
use crate::curve::CurveSeed;
use crate::flow::{FlowParams, DEFAULT_CFL_SAFETY};
use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::PI;

/// Default curvature regularization for `h = sqrt(k^2 + eps^2)`.
pub const DEFAULT_EPS: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub background: BackgroundSpec,
    pub seed: CurveSeed,
    pub params: FlowParams,
    /// Circle coordinate for the ramp projection, where one exists.
    pub circle_coord: Option<usize>,
    /// Whether the ramp monitor is meaningful (positive projection seeds).
    pub ramp: bool,
    /// Default check names to run.
    pub checks: Vec<&'static str>,
}

fn params(n_nodes: usize, dt: f64, t_end: f64, record_every: usize) -> FlowParams {
    FlowParams {
        n_nodes,
        dt,
        t_end,
        record_every,
        eps: DEFAULT_EPS,
        cfl_safety: DEFAULT_CFL_SAFETY,
    }
}

const FLAT_CHECKS: &[&str] = &[
    "length_evolution",
    "k2_corrected",
    "corollary_pointwise",
    "h_epsilon",
    "integral_length",
    "integral_theta",
    "exp_length",
    "exp_theta_length",
    "gradient_bound",
    "term_domination",
];

fn with_ramp(base: &[&'static str]) -> Vec<&'static str> {
    let mut v = base.to_vec();
    v.push("ramp");
    v
}

/// All scenarios shipped with the laboratory.
pub fn shipped_scenarios() -> Vec<Scenario> {
    alloc::vec![
        Scenario {
            name: "flat_torus_circle",
            description: "round circle shrinking on the flat square torus; closed-form radius law",
            background: BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45),
            seed: CurveSeed::TorusCircle { center: [PI, PI], radius: 1.0 },
            params: params(256, 1e-4, 0.3, 50),
            circle_coord: None,
            ramp: false,
            checks: FLAT_CHECKS.to_vec(),
        },
        Scenario {
            name: "flat_torus_fourier",
            description: "circle with seeded Fourier perturbations on the flat torus",
            background: BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45),
            seed: CurveSeed::TorusFourier {
                center: [PI, PI],
                radius: 1.0,
                amplitudes: alloc::vec![0.05, 0.03],
                phase_seed: 7,
            },
            params: params(256, 1e-4, 0.2, 50),
            circle_coord: None,
            ramp: false,
            checks: FLAT_CHECKS.to_vec(),
        },
        Scenario {
            name: "flat_torus_ramp",
            description: "wound geodesic line on the flat torus; degenerate ramp with u = 1",
            background: BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45),
            seed: CurveSeed::ProductRamp { theta0: 0.0, winding: 1 },
            params: params(128, 2e-4, 0.2, 50),
            circle_coord: Some(1),
            ramp: true,
            checks: with_ramp(FLAT_CHECKS),
        },
        Scenario {
            name: "sphere_latitude",
            description: "latitude circle on the shrinking round sphere; closed-form drift law",
            background: BackgroundSpec::shrinking_sphere(1.0, 0.4),
            seed: CurveSeed::SphereLatitude { theta0: PI / 3.0 },
            params: params(256, 5e-5, 0.2, 100),
            circle_coord: None,
            ramp: false,
            checks: FLAT_CHECKS.to_vec(),
        },
        Scenario {
            name: "sphere_geodesic",
            description: "equator of the shrinking round sphere; stationary geodesic",
            background: BackgroundSpec::shrinking_sphere(1.0, 0.4),
            seed: CurveSeed::SphereLatitude { theta0: PI / 2.0 },
            params: params(128, 2e-4, 0.2, 50),
            circle_coord: None,
            ramp: false,
            checks: FLAT_CHECKS.to_vec(),
        },
        Scenario {
            name: "product_wavy_ramp",
            description: "theta-modulated ramp on the product; Ric(S,H) != 0 exposes the erroneous variant",
            background: BackgroundSpec::sphere_cross_circle(1.0, 2.0 * PI, 0.4),
            seed: CurveSeed::ProductWavyRamp { theta0: PI / 3.0, winding: 1, amplitude: 0.15 },
            params: params(192, 2e-4, 0.15, 50),
            circle_coord: Some(2),
            ramp: true,
            checks: with_ramp(FLAT_CHECKS),
        },
        Scenario {
            name: "product_ramp",
            description: "winding-1 ramp on shrinking sphere cross circle; u stays positive",
            background: BackgroundSpec::sphere_cross_circle(1.0, 2.0 * PI, 0.4),
            seed: CurveSeed::ProductRamp { theta0: PI / 3.0, winding: 1 },
            params: params(192, 2e-4, 0.15, 50),
            circle_coord: Some(2),
            ramp: true,
            checks: with_ramp(FLAT_CHECKS),
        },
    ]
}

pub fn find_scenario(name: &str) -> Option<Scenario> {
    shipped_scenarios().into_iter().find(|s| s.name == name)
}

/// All recognized check names, residuals first.
pub fn known_checks() -> Vec<String> {
    crate::monitor::RESIDUAL_CHECKS
        .iter()
        .chain(crate::monitor::MONITOR_CHECKS)
        .map(|s| String::from(*s))
        .collect()
}
