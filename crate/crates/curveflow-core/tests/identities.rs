//! End-to-end checks of the evolution identities, inequality monitors,
//! constants estimation, and convergence machinery on the shipped
//! scenarios.

use curveflow_core::background::{make_background, Background};
use curveflow_core::constants::{estimate_constants, ConstantsEstimate, SampleGrid};
use curveflow_core::convergence::{convergence_study, fit_order, ConvergenceLevel, ResidualKind};
use curveflow_core::curve::{seed_curve, CurveSeed};
use curveflow_core::flow::{integrate, FlowState, Trajectory};
use curveflow_core::metric::Geometry;
use curveflow_core::monitor::{monitor_inequalities, ramp_monitor, term_domination};
use curveflow_core::residual::{
    dropped_terms_magnitude, frame_geometries, pointwise_fields, residual_k2_evolution,
    residual_length_evolution, K2Variant, PointwiseFields,
};
use curveflow_core::scenario::{find_scenario, known_checks, shipped_scenarios};
use curveflow_core::{BackgroundSpec, CurveGeometry, FlowParams};
use std::f64::consts::PI;

fn run(
    spec: &BackgroundSpec,
    seed: &CurveSeed,
    n: usize,
    dt: f64,
    t_end: f64,
    record_every: usize,
    circle_coord: Option<usize>,
) -> (Background, Trajectory) {
    let bg = make_background(spec.clone()).unwrap();
    let traj = {
        let geom = Geometry::new(&bg);
        let curve = seed_curve(seed, n, &bg).unwrap();
        integrate(&geom, FlowState::new(curve, dt, 1e-3), t_end, record_every, circle_coord)
            .unwrap()
    };
    (bg, traj)
}

fn fields_of(bg: &Background, traj: &Trajectory) -> (Vec<CurveGeometry>, PointwiseFields) {
    let geom = Geometry::new(bg);
    let geoms = frame_geometries(&geom, traj).unwrap();
    let fields = pointwise_fields(&geom, traj, &geoms).unwrap();
    (geoms, fields)
}

#[test]
fn sphere_latitude_corrected_residual_refines() {
    let spec = BackgroundSpec::shrinking_sphere(1.0, 0.4);
    let seed = CurveSeed::SphereLatitude { theta0: PI / 3.0 };
    let mut norms = Vec::new();
    for (n, dt) in [(64usize, 2e-4), (128, 1e-4)] {
        let (bg, traj) = run(&spec, &seed, n, dt, 0.12, 50, None);
        let (_, fields) = fields_of(&bg, &traj);
        let corr = residual_k2_evolution(&fields, K2Variant::Corrected);
        norms.push(corr.max_norm);
        // On this rotationally symmetric Einstein background the erroneous
        // variant's replacement terms cancel against the dropped products
        // identically, so both variants coincide; the contrast scenario is
        // the theta-modulated product ramp below.
        let dropped = dropped_terms_magnitude(&fields);
        assert!(dropped.max_norm < 1e-9, "dropped = {}", dropped.max_norm);
    }
    assert!(norms[0] < 1e-4, "coarse corrected residual {}", norms[0]);
    assert!(norms[0] / norms[1] > 3.0, "refinement ratio {}", norms[0] / norms[1]);
}

#[test]
fn wavy_ramp_exposes_the_erroneous_variant() {
    let spec = BackgroundSpec::sphere_cross_circle(1.0, 2.0 * PI, 0.4);
    let seed = CurveSeed::ProductWavyRamp { theta0: PI / 3.0, winding: 1, amplitude: 0.15 };
    let (bg, traj) = run(&spec, &seed, 96, 4e-4, 0.15, 10, Some(2));
    let (_, fields) = fields_of(&bg, &traj);
    let corr = residual_k2_evolution(&fields, K2Variant::Corrected);
    let book = residual_k2_evolution(&fields, K2Variant::BookErroneous);
    let dropped = dropped_terms_magnitude(&fields);
    assert!(corr.max_norm < 1e-5, "corrected {}", corr.max_norm);
    assert!(book.max_norm > 100.0 * corr.max_norm, "book {} corr {}", book.max_norm, corr.max_norm);
    let rel = (book.max_norm - dropped.max_norm).abs() / dropped.max_norm;
    assert!(rel < 0.2, "book-vs-dropped mismatch {rel}");
}

#[test]
fn geodesic_scenarios_are_trivially_consistent() {
    // Equator of the shrinking sphere: H = 0 exactly, every residual term
    // vanishes to roundoff.
    let spec = BackgroundSpec::shrinking_sphere(1.0, 0.4);
    let seed = CurveSeed::SphereLatitude { theta0: PI / 2.0 };
    let (bg, traj) = run(&spec, &seed, 32, 1e-3, 0.1, 10, None);
    let geom = Geometry::new(&bg);
    let (geoms, fields) = fields_of(&bg, &traj);
    let corr = residual_k2_evolution(&fields, K2Variant::Corrected);
    let len = residual_length_evolution(&geom, &traj, &geoms).unwrap();
    assert!(corr.max_norm < 1e-10);
    assert!(len.max_norm < 1e-9);
    for sample in &traj.series {
        assert!(sample.theta < 1e-4, "Theta = {}", sample.theta);
    }

    // Wound geodesic line on the static flat torus: everything is zero.
    let spec = BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45);
    let seed = CurveSeed::ProductRamp { theta0: 0.0, winding: 1 };
    let (bg, traj) = run(&spec, &seed, 64, 4e-4, 0.1, 25, Some(1));
    let geom = Geometry::new(&bg);
    let (geoms, fields) = fields_of(&bg, &traj);
    let corr = residual_k2_evolution(&fields, K2Variant::Corrected);
    let len = residual_length_evolution(&geom, &traj, &geoms).unwrap();
    assert!(corr.max_norm < 1e-12);
    assert!(len.max_norm < 1e-10);
}

#[test]
fn degenerate_flat_ramp_reduces_to_the_h_inequality() {
    let spec = BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45);
    let seed = CurveSeed::ProductRamp { theta0: 0.0, winding: 1 };
    let (bg, traj) = run(&spec, &seed, 64, 4e-4, 0.1, 25, Some(1));
    let geom = Geometry::new(&bg);
    let (geoms, fields) = fields_of(&bg, &traj);
    let consts = estimate_constants(&geom, 0.45, SampleGrid::default());
    let mons = monitor_inequalities(&geom, &traj, &geoms, &fields, &consts).unwrap();
    let (ramp, u_min) = ramp_monitor(&geom, &traj, &geoms, &fields, &consts, 1).unwrap();
    // With u identically 1 and flat constants, the h/u inequality is the
    // plain h inequality; the two margin series must agree.
    let h_eps = mons.iter().find(|m| m.name == "h_epsilon").unwrap();
    for (a, b) in ramp.min_margin.iter().zip(&h_eps.min_margin) {
        assert!((a - b).abs() < 1e-6, "ramp {a} vs h {b}");
    }
    assert!(ramp.holds());
    assert!(u_min.iter().all(|u| (*u - 1.0).abs() < 1e-12));
}

fn scenario_artifacts(
    name: &str,
) -> (Background, Trajectory, Vec<CurveGeometry>, PointwiseFields, ConstantsEstimate, Option<usize>, bool)
{
    let sc = find_scenario(name).unwrap();
    let (bg, traj) = run(
        &sc.background,
        &sc.seed,
        sc.params.n_nodes,
        sc.params.dt,
        sc.params.t_end,
        sc.params.record_every,
        sc.circle_coord,
    );
    let (geoms, fields) = fields_of(&bg, &traj);
    let consts = {
        let geom = Geometry::new(&bg);
        estimate_constants(&geom, sc.background.horizon, SampleGrid::default())
    };
    (bg, traj, geoms, fields, consts, sc.circle_coord, sc.ramp)
}

#[test]
fn inequality_monitors_hold_on_all_shipped_scenarios() {
    for sc in shipped_scenarios() {
        let (bg, traj, geoms, fields, consts, circle_coord, is_ramp) = scenario_artifacts(sc.name);
        let geom = Geometry::new(&bg);
        let mons = monitor_inequalities(&geom, &traj, &geoms, &fields, &consts).unwrap();
        for m in &mons {
            assert!(
                m.holds(),
                "{}: monitor {} failed, worst {} tol {}",
                sc.name,
                m.name,
                m.worst_margin(),
                m.tolerance
            );
        }
        let dom = term_domination(&fields, &consts);
        assert!(dom.holds(), "{}: domination worst {}", sc.name, dom.worst_margin());
        if is_ramp {
            let c = circle_coord.unwrap();
            let (ramp, u_min) =
                ramp_monitor(&geom, &traj, &geoms, &fields, &consts, c).unwrap();
            assert!(ramp.holds(), "{}: ramp worst {} tol {}", sc.name, ramp.worst_margin(), ramp.tolerance);
            let u = u_min.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(u > 0.0, "{}: u_min {}", sc.name, u);
        }
    }
}

#[test]
fn exponential_length_bound_is_strict_on_the_flat_circle() {
    let (bg, traj, geoms, fields, consts, _, _) = scenario_artifacts("flat_torus_circle");
    let geom = Geometry::new(&bg);
    let mons = monitor_inequalities(&geom, &traj, &geoms, &fields, &consts).unwrap();
    // C2 = 0 on the flat torus, so the margin is L(0) - L(t), strictly
    // positive while the circle shrinks.
    let exp_l = mons.iter().find(|m| m.name == "exp_length").unwrap();
    assert!(exp_l.min_margin.iter().all(|m| *m >= 0.0));
    assert!(*exp_l.min_margin.last().unwrap() > 1e-2);
}

#[test]
fn constants_estimates_match_closed_forms() {
    let torus = make_background(BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45)).unwrap();
    let geom = Geometry::new(&torus);
    let c = estimate_constants(&geom, 0.45, SampleGrid::default());
    assert_eq!(c.c_hat, 0.0);
    assert_eq!(c.c2, 0.0);
    assert_eq!(c.c_prime, 0.0);

    let sphere = make_background(BackgroundSpec::shrinking_sphere(1.0, 0.4)).unwrap();
    let geom = Geometry::new(&sphere);
    let c = estimate_constants(&geom, 0.4, SampleGrid::default());
    // Einstein factor 1/r^2(t), maximized at the sampled horizon: about 5.
    assert!((c.c2 - 5.0).abs() < 0.05, "c2 = {}", c.c2);
    assert!((c.c1 - 0.5 * c.c_hat).abs() < 1e-12);
    assert!((c.c_prime - (c.c1 + c.c2)).abs() < 1e-12);
    assert!(c.sup_cov_ricci < 1e-4, "sup_cov = {}", c.sup_cov_ricci);

    // Doubling the sample density moves the estimates by well under 1%.
    let dense = estimate_constants(&geom, 0.4, SampleGrid { per_axis: 12, seed: 2024 });
    assert!((dense.c_hat - c.c_hat).abs() <= 0.01 * c.c_hat);
    assert!((dense.c2 - c.c2).abs() <= 0.01 * c.c2);
}

#[test]
fn fit_order_recovers_synthetic_slopes() {
    let ns = [64usize, 128, 256, 512];
    let norms: Vec<f64> = ns.iter().map(|n| 7.0 * (*n as f64).powf(-3.7)).collect();
    let order = fit_order(&ns, &norms);
    assert!((order - 3.7).abs() < 1e-10, "order = {order}");
}

#[test]
fn length_residual_converges_at_scheme_order_on_the_perturbed_circle() {
    let spec = BackgroundSpec::flat_torus(2.0 * PI, 2.0 * PI, 0.45);
    let seed = CurveSeed::TorusFourier {
        center: [PI, PI],
        radius: 1.0,
        amplitudes: vec![0.05, 0.03],
        phase_seed: 7,
    };
    let base = FlowParams {
        n_nodes: 256,
        dt: 1e-4,
        t_end: 0.1,
        record_every: 25,
        eps: 1e-3,
        cfl_safety: 0.5,
    };
    let levels = [
        ConvergenceLevel { n_nodes: 64, dt: 4e-4 },
        ConvergenceLevel { n_nodes: 128, dt: 2e-4 },
        ConvergenceLevel { n_nodes: 256, dt: 1e-4 },
    ];
    let study =
        convergence_study(&spec, &seed, &base, &levels, ResidualKind::LengthEvolution).unwrap();
    assert!(study.order_max > 3.5, "order {}", study.order_max);
    assert!(study.max_norms.windows(2).all(|w| w[1] < w[0]));

    // The unperturbed circle satisfies the discrete length identity to
    // roundoff; its residual sits many orders below the 1e-4 gate at
    // every level.
    let circle = CurveSeed::TorusCircle { center: [PI, PI], radius: 1.0 };
    let study_c =
        convergence_study(&spec, &circle, &base, &levels, ResidualKind::LengthEvolution).unwrap();
    assert!(study_c.max_norms.iter().all(|v| *v < 1e-8), "{:?}", study_c.max_norms);
}

#[test]
fn scenario_registry_is_well_formed() {
    let names: Vec<&str> = shipped_scenarios().iter().map(|s| s.name).collect();
    for required in ["flat_torus_circle", "sphere_latitude", "product_ramp"] {
        assert!(names.contains(&required), "missing scenario {required}");
    }
    let checks = known_checks();
    for sc in shipped_scenarios() {
        sc.background.validate().unwrap();
        assert!(sc.params.t_end <= sc.background.horizon);
        for c in &sc.checks {
            assert!(checks.iter().any(|k| k == c), "{}: unknown check {c}", sc.name);
        }
        // The seed must produce an admissible curve whose initial geometry
        // satisfies the CFL bound for the shipped dt.
        let bg = make_background(sc.background.clone()).unwrap();
        let geom = Geometry::new(&bg);
        let curve = seed_curve(&sc.seed, sc.params.n_nodes, &bg).unwrap();
        let g = curveflow_core::curve::curve_geometry(&geom, &curve, sc.params.eps).unwrap();
        let min_ds = g.ds.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            sc.params.dt <= sc.params.cfl_safety * min_ds * min_ds,
            "{}: dt {} vs CFL limit {}",
            sc.name,
            sc.params.dt,
            sc.params.cfl_safety * min_ds * min_ds
        );
    }
}
