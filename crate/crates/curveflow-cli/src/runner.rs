//! Experiment execution: flow runs with residual/monitor checks and
//! artifact emission, plus parallel grid-refinement studies.

use crate::artifacts::{fmt_f64, write_csv, write_json};
use crate::config::ExperimentConfig;
use curveflow_core::background::make_background;
use curveflow_core::constants::{estimate_constants, ConstantsEstimate, SampleGrid};
use curveflow_core::convergence::{fit_order, ConvergenceLevel, ResidualKind};
use curveflow_core::curve::seed_curve;
use curveflow_core::flow::{integrate, FlowError, FlowState};
use curveflow_core::metric::Geometry;
use curveflow_core::monitor::{
    monitor_inequalities, ramp_monitor, term_domination, MonitorSeries, MONITOR_CHECKS,
    RESIDUAL_CHECKS,
};
use curveflow_core::residual::{
    dropped_terms_magnitude, frame_geometries, pointwise_fields, residual_k2_evolution,
    residual_length_evolution, K2Variant, ResidualReport,
};
use serde_json::json;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// A residual check passes when its max norm at the shipped resolution is
/// below this bound. The erroneous-variant check fails this by design on
/// backgrounds where its missing terms are nonzero.
pub const RESIDUAL_PASS_TOL: f64 = 1e-4;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_EVENT: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Classify a flow failure: parameter problems are configuration errors,
/// chart escapes and curve degeneracies are runtime events recorded in the
/// report.
fn classify_flow_error(e: &FlowError, fallback_time: f64) -> Result<(String, f64), String> {
    match e {
        FlowError::CflViolation { .. } | FlowError::HorizonExceeded => Err(format!("{e}")),
        FlowError::ChartEscape { time } => Ok(("chart_escape".to_string(), *time)),
        FlowError::Geometry(g) => Ok((format!("geometry: {g}"), fallback_time)),
    }
}

fn constants_json(c: &ConstantsEstimate) -> serde_json::Value {
    json!({
        "c_hat": c.c_hat,
        "c1": c.c1,
        "c2": c.c2,
        "c_prime": c.c_prime,
        "sup_ricci": c.sup_ricci,
        "sup_cov_ricci": c.sup_cov_ricci,
        "sup_riemann_hat": c.sup_riemann_hat,
        "provenance": c.provenance,
        "norm_convention": "curvature norms are operator norms relative to g(t) at the same point",
        "note": "C_hat is one admissible choice dominating the five correction terms coefficient-wise; any larger constant works",
    })
}

fn residual_rows(report: &ResidualReport) -> Vec<Vec<String>> {
    report
        .times
        .iter()
        .zip(report.per_frame_max.iter().zip(&report.per_frame_l2))
        .map(|(t, (mx, l2))| vec![fmt_f64(*t), fmt_f64(*mx), fmt_f64(*l2)])
        .collect()
}

fn monitor_rows(series: &MonitorSeries) -> Vec<Vec<String>> {
    series
        .times
        .iter()
        .zip(&series.min_margin)
        .map(|(t, m)| vec![fmt_f64(*t), fmt_f64(*m)])
        .collect()
}

/// Run one experiment, writing `trajectory.csv`, per-check residual and
/// margin CSVs, and `report.json` into `out_dir`. Returns the exit code.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<i32> {
    std::fs::create_dir_all(out_dir)?;

    let write_event_report = |kind: String, time: f64| -> anyhow::Result<i32> {
        let report = json!({
            "scenario": config.name,
            "pass": false,
            "event": { "kind": kind, "time": time },
        });
        write_json(&out_dir.join("report.json"), &report)?;
        eprintln!("run aborted: {} at t = {}", report["event"]["kind"], fmt_f64(time));
        Ok(EXIT_EVENT)
    };

    let bg = match make_background(config.background.clone()) {
        Ok(bg) => bg,
        Err(e) => {
            eprintln!("invalid background: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let geom = Geometry::new(&bg);

    let curve = match seed_curve(&config.seed, config.params.n_nodes, &bg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("seed curve failed: {e}");
            return write_event_report(format!("seed: {e}"), 0.0);
        }
    };

    let mut state = FlowState::new(curve, config.params.dt, config.params.eps);
    state.cfl_safety = config.params.cfl_safety;
    let traj = match integrate(
        &geom,
        state,
        config.params.t_end,
        config.params.record_every,
        config.circle_coord,
    ) {
        Ok(t) => t,
        Err(e) => match classify_flow_error(&e, 0.0) {
            Ok((kind, time)) => return write_event_report(kind, time),
            Err(msg) => {
                eprintln!("invalid flow parameters: {msg}");
                return Ok(EXIT_CONFIG);
            }
        },
    };

    // Trajectory series.
    let traj_rows: Vec<Vec<String>> = traj
        .series
        .iter()
        .map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.length),
                fmt_f64(s.theta),
                fmt_f64(s.theta_eps),
                fmt_f64(s.max_k),
                fmt_f64(s.min_speed),
                s.min_u.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("trajectory.csv"),
        "t,L,Theta,Theta_eps,max_k,min_absX,min_u",
        &traj_rows,
    )?;

    let geoms = match frame_geometries(&geom, &traj) {
        Ok(g) => g,
        Err(e) => return write_event_report(format!("geometry: {e}"), 0.0),
    };
    let fields = match pointwise_fields(&geom, &traj, &geoms) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("too few stored frames for the residual stencil: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let constants = estimate_constants(
        &geom,
        bg.spec().horizon,
        SampleGrid { per_axis: 6, seed: config.rng_seed },
    );

    // Monitors are computed in one pass and picked by name.
    let need_monitors = config
        .checks
        .iter()
        .any(|c| MONITOR_CHECKS.contains(&c.as_str()) && c != "ramp" && c != "term_domination");
    let monitors: Vec<MonitorSeries> = if need_monitors {
        monitor_inequalities(&geom, &traj, &geoms, &fields, &constants)
            .map_err(|e| anyhow::anyhow!("monitor evaluation failed: {e}"))?
    } else {
        Vec::new()
    };

    let mut check_entries = Vec::new();
    let mut all_pass = true;

    for check in &config.checks {
        if RESIDUAL_CHECKS.contains(&check.as_str()) {
            let report = match check.as_str() {
                "length_evolution" => residual_length_evolution(&geom, &traj, &geoms)
                    .map_err(|e| anyhow::anyhow!("residual failed: {e}"))?,
                "k2_corrected" => residual_k2_evolution(&fields, K2Variant::Corrected),
                "k2_book_erroneous" => residual_k2_evolution(&fields, K2Variant::BookErroneous),
                _ => unreachable!(),
            };
            write_csv(
                &out_dir.join(format!("residual_{check}.csv")),
                "t,max_norm,l2_norm",
                &residual_rows(&report),
            )?;
            let pass = report.max_norm < RESIDUAL_PASS_TOL;
            all_pass &= pass;
            let mut entry = json!({
                "name": check,
                "kind": "residual",
                "pass": pass,
                "max_norm": report.max_norm,
                "l2_norm": report.l2_norm,
                "tolerance": RESIDUAL_PASS_TOL,
            });
            if check == "k2_book_erroneous" && !pass {
                let dropped = dropped_terms_magnitude(&fields);
                entry["by_design"] = json!(true);
                entry["limiting_residual"] = json!(dropped.max_norm);
                entry["note"] = json!(
                    "this variant omits two correction terms; its residual converges to the recorded limiting magnitude instead of zero"
                );
            }
            check_entries.push(entry);
        } else {
            let (series, extra) = match check.as_str() {
                "ramp" => {
                    let coord = config
                        .circle_coord
                        .ok_or_else(|| anyhow::anyhow!("ramp check without a circle factor"))?;
                    let (series, u_min) =
                        ramp_monitor(&geom, &traj, &geoms, &fields, &constants, coord)
                            .map_err(|e| anyhow::anyhow!("ramp monitor failed: {e}"))?;
                    let u_min_overall = u_min.iter().copied().fold(f64::INFINITY, f64::min);
                    (series, Some(("u_min_overall", u_min_overall)))
                }
                "term_domination" => (term_domination(&fields, &constants), None),
                name => {
                    let series = monitors
                        .iter()
                        .find(|m| m.name == name)
                        .cloned()
                        .ok_or_else(|| anyhow::anyhow!("monitor {name} not produced"))?;
                    (series, None)
                }
            };
            write_csv(
                &out_dir.join(format!("margins_{check}.csv")),
                "t,min_margin",
                &monitor_rows(&series),
            )?;
            let pass = series.holds();
            all_pass &= pass;
            let mut entry = json!({
                "name": check,
                "kind": "monitor",
                "pass": pass,
                "worst_margin": series.worst_margin(),
                "tolerance": series.tolerance,
                "parent_residual": series.parent_residual,
                "flagged_times": series.flagged_times,
            });
            if let Some((key, value)) = extra {
                entry[key] = json!(value);
            }
            check_entries.push(entry);
        }
    }

    let report = json!({
        "scenario": config.name,
        "background": {
            "kind": config.background.kind_name(),
            "horizon": config.background.horizon,
        },
        "resolution": {
            "nodes": config.params.n_nodes,
            "dt": config.params.dt,
            "t_end": config.params.t_end,
            "record_every": config.params.record_every,
            "epsilon": config.params.eps,
        },
        "seed": config.rng_seed,
        "constants": constants_json(&constants),
        "checks": check_entries,
        "pass": all_pass,
    });
    write_json(&out_dir.join("report.json"), &report)?;

    for entry in report["checks"].as_array().unwrap() {
        println!(
            "{:<22} {}",
            entry["name"].as_str().unwrap(),
            if entry["pass"].as_bool().unwrap() { "pass" } else { "FAIL" }
        );
    }
    println!("overall: {}", if all_pass { "pass" } else { "FAIL" });

    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Worker cap for the convergence fan-out: `CURVEFLOW_THREADS`, with 0 or
/// unset meaning the available parallelism.
fn worker_count(n_tasks: usize) -> usize {
    let cap = std::env::var("CURVEFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let cap = if cap == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cap
    };
    cap.max(1).min(n_tasks.max(1))
}

fn run_level(
    config: &ExperimentConfig,
    level: ConvergenceLevel,
    kind: ResidualKind,
) -> Result<(f64, f64), FlowError> {
    let bg = make_background(config.background.clone())
        .map_err(|_| FlowError::HorizonExceeded)?;
    let geom = Geometry::new(&bg);
    let curve = seed_curve(&config.seed, level.n_nodes, &bg)
        .map_err(|_| FlowError::ChartEscape { time: 0.0 })?;
    let mut state = FlowState::new(curve, level.dt, config.params.eps);
    state.cfl_safety = config.params.cfl_safety;
    let traj = integrate(&geom, state, config.params.t_end, config.params.record_every, None)?;
    let geoms = frame_geometries(&geom, &traj).map_err(FlowError::Geometry)?;
    let report = match kind {
        ResidualKind::LengthEvolution => {
            residual_length_evolution(&geom, &traj, &geoms).map_err(FlowError::Geometry)?
        }
        ResidualKind::K2(variant) => {
            let fields = pointwise_fields(&geom, &traj, &geoms).map_err(FlowError::Geometry)?;
            residual_k2_evolution(&fields, variant)
        }
    };
    Ok((report.max_norm, report.l2_norm))
}

/// Run a grid-refinement study over `n_levels` halvings for each residual
/// check in the config, writing one `convergence_<name>.csv` per residual
/// and printing a plain-text table. Levels fan out to parallel workers;
/// every file is written once, after all levels finish.
pub fn run_convergence(
    config: &ExperimentConfig,
    n_levels: usize,
    out_dir: &Path,
) -> anyhow::Result<i32> {
    if n_levels < 3 {
        eprintln!("a convergence study needs at least 3 levels");
        return Ok(EXIT_CONFIG);
    }
    let mut levels = Vec::with_capacity(n_levels);
    for i in 0..n_levels {
        let factor = 1usize << (n_levels - 1 - i);
        let n = config.params.n_nodes / factor;
        if n < 16 || config.params.n_nodes % factor != 0 || n % 2 != 0 {
            eprintln!(
                "coarsest level would need {} nodes; raise flow.nodes or lower --levels",
                config.params.n_nodes as f64 / factor as f64
            );
            return Ok(EXIT_CONFIG);
        }
        levels.push(ConvergenceLevel { n_nodes: n, dt: config.params.dt * factor as f64 });
    }

    let mut kinds: Vec<ResidualKind> = config
        .checks
        .iter()
        .filter_map(|c| match c.as_str() {
            "length_evolution" => Some(ResidualKind::LengthEvolution),
            "k2_corrected" => Some(ResidualKind::K2(K2Variant::Corrected)),
            "k2_book_erroneous" => Some(ResidualKind::K2(K2Variant::BookErroneous)),
            _ => None,
        })
        .collect();
    if kinds.is_empty() {
        kinds = vec![ResidualKind::LengthEvolution, ResidualKind::K2(K2Variant::Corrected)];
    }

    let tasks: Vec<(usize, usize)> = (0..kinds.len())
        .flat_map(|ki| (0..levels.len()).map(move |li| (ki, li)))
        .collect();
    let results: Vec<Mutex<Option<Result<(f64, f64), FlowError>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = worker_count(tasks.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (ki, li) = tasks[i];
                let res = run_level(config, levels[li], kinds[ki]);
                *results[i].lock().unwrap() = Some(res);
            });
        }
    });

    std::fs::create_dir_all(out_dir)?;
    let ns: Vec<usize> = levels.iter().map(|l| l.n_nodes).collect();
    for (ki, kind) in kinds.iter().enumerate() {
        let mut max_norms = Vec::with_capacity(levels.len());
        let mut l2_norms = Vec::with_capacity(levels.len());
        for li in 0..levels.len() {
            let idx = tasks.iter().position(|&(a, b)| a == ki && b == li).unwrap();
            let res = results[idx].lock().unwrap().take().unwrap();
            match res {
                Ok((mx, l2)) => {
                    max_norms.push(mx);
                    l2_norms.push(l2);
                }
                Err(e) => {
                    return match classify_flow_error(&e, 0.0) {
                        Ok((kind, time)) => {
                            eprintln!("level {} failed: {kind} at t = {time}", li);
                            Ok(EXIT_EVENT)
                        }
                        Err(msg) => {
                            eprintln!("level {} failed: {msg}", li);
                            Ok(EXIT_CONFIG)
                        }
                    };
                }
            }
        }
        let order_max = fit_order(&ns, &max_norms);
        let order_l2 = fit_order(&ns, &l2_norms);

        let mut rows: Vec<Vec<String>> = levels
            .iter()
            .zip(max_norms.iter().zip(&l2_norms))
            .map(|(l, (mx, l2))| {
                vec![l.n_nodes.to_string(), fmt_f64(l.dt), fmt_f64(*mx), fmt_f64(*l2)]
            })
            .collect();
        rows.push(vec![
            "order".to_string(),
            String::new(),
            fmt_f64(order_max),
            fmt_f64(order_l2),
        ]);
        write_csv(
            &out_dir.join(format!("convergence_{}.csv", kind.name())),
            "N,dt,max_norm,l2_norm",
            &rows,
        )?;

        println!("residual: {}", kind.name());
        println!("{:>8} {:>14} {:>14} {:>14}", "N", "dt", "max_norm", "l2_norm");
        for (l, (mx, l2)) in levels.iter().zip(max_norms.iter().zip(&l2_norms)) {
            println!("{:>8} {:>14.6e} {:>14.6e} {:>14.6e}", l.n_nodes, l.dt, mx, l2);
        }
        println!("fitted order: max {:.2}, l2 {:.2}", order_max, order_l2);
        println!();
    }
    Ok(EXIT_OK)
}
