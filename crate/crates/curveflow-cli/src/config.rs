//! JSON experiment configuration: parsing, defaulting, and validation.
//!
//! Validation aggregates every violation it can find rather than stopping
//! at the first; unknown keys are reported by name.

use curveflow_core::background::{make_background, BackgroundSpec};
use curveflow_core::curve::{seed_curve, CurveSeed};
use curveflow_core::flow::{FlowParams, DEFAULT_CFL_SAFETY};
use curveflow_core::scenario::{known_checks, Scenario, DEFAULT_EPS};
use serde_json::{Map, Value};
use std::fmt;
use std::path::PathBuf;

/// A fully resolved experiment: defaults applied, invariants checked.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub background: BackgroundSpec,
    pub seed: CurveSeed,
    pub params: FlowParams,
    pub checks: Vec<String>,
    pub out_dir: Option<PathBuf>,
    pub rng_seed: u64,
    /// Circle coordinate used for the ramp projection; `Some` exactly when
    /// the seed is a ramp on a background with a circle factor.
    pub circle_coord: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} violation(s)):", self.0.len())?;
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ExperimentConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        ExperimentConfig {
            name: s.name.to_string(),
            background: s.background.clone(),
            seed: s.seed.clone(),
            params: s.params,
            checks: s.checks.iter().map(|c| c.to_string()).collect(),
            out_dir: None,
            rng_seed: 2024,
            circle_coord: if s.ramp { s.circle_coord } else { None },
        }
    }
}

fn is_ramp_seed(seed: &CurveSeed) -> bool {
    matches!(seed, CurveSeed::ProductRamp { .. } | CurveSeed::ProductWavyRamp { .. })
}

/// Checks run by default when the config omits the `checks` key: both
/// identity residuals, every inequality monitor, and the ramp monitor on
/// ramp seeds.
fn default_checks(background: &BackgroundSpec, seed: &CurveSeed) -> Vec<String> {
    let mut checks: Vec<String> = [
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
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if is_ramp_seed(seed) && background.circle_coordinate().is_some() {
        checks.push("ramp".to_string());
    }
    checks
}

struct Walker {
    violations: Vec<String>,
}

impl Walker {
    fn object<'a>(&mut self, v: &'a Value, what: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => Some(m),
            None => {
                self.violations.push(format!("{what} must be a JSON object"));
                None
            }
        }
    }

    fn check_keys(&mut self, map: &Map<String, Value>, section: &str, allowed: &[&str]) {
        for k in map.keys() {
            if !allowed.contains(&k.as_str()) {
                self.violations.push(format!("unknown key \"{k}\" in {section}"));
            }
        }
    }

    fn f64_field(&mut self, map: &Map<String, Value>, section: &str, key: &str) -> Option<f64> {
        match map.get(key) {
            Some(v) => match v.as_f64() {
                Some(x) => Some(x),
                None => {
                    self.violations.push(format!("{section}.{key} must be a number"));
                    None
                }
            },
            None => {
                self.violations.push(format!("{section}.{key} is required"));
                None
            }
        }
    }

    fn f64_optional(&mut self, map: &Map<String, Value>, section: &str, key: &str) -> Option<f64> {
        match map.get(key) {
            Some(v) => match v.as_f64() {
                Some(x) => Some(x),
                None => {
                    self.violations.push(format!("{section}.{key} must be a number"));
                    None
                }
            },
            None => None,
        }
    }

    fn u64_optional(&mut self, map: &Map<String, Value>, section: &str, key: &str) -> Option<u64> {
        match map.get(key) {
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    self.violations.push(format!("{section}.{key} must be a non-negative integer"));
                    None
                }
            },
            None => None,
        }
    }
}

fn parse_background(w: &mut Walker, v: &Value) -> Option<BackgroundSpec> {
    let map = w.object(v, "background")?;
    let kind = match map.get("kind").and_then(|k| k.as_str()) {
        Some(k) => k.to_string(),
        None => {
            w.violations.push("background.kind is required and must be a string".to_string());
            return None;
        }
    };
    let spec = match kind.as_str() {
        "flat_torus" => {
            w.check_keys(map, "background", &["kind", "periods", "horizon"]);
            let horizon = w.f64_field(map, "background", "horizon")?;
            let periods = match map.get("periods").and_then(|p| p.as_array()) {
                Some(arr) if arr.len() == 2 => {
                    let p0 = arr[0].as_f64();
                    let p1 = arr[1].as_f64();
                    match (p0, p1) {
                        (Some(a), Some(b)) => [a, b],
                        _ => {
                            w.violations
                                .push("background.periods entries must be numbers".to_string());
                            return None;
                        }
                    }
                }
                _ => {
                    w.violations
                        .push("background.periods must be an array of two numbers".to_string());
                    return None;
                }
            };
            BackgroundSpec::flat_torus(periods[0], periods[1], horizon)
        }
        "shrinking_sphere" => {
            w.check_keys(map, "background", &["kind", "r0", "horizon"]);
            let r0 = w.f64_field(map, "background", "r0")?;
            let horizon = w.f64_field(map, "background", "horizon")?;
            BackgroundSpec::shrinking_sphere(r0, horizon)
        }
        "sphere_cross_circle" => {
            w.check_keys(map, "background", &["kind", "r0", "circle_len", "horizon"]);
            let r0 = w.f64_field(map, "background", "r0")?;
            let circle_len = w.f64_field(map, "background", "circle_len")?;
            let horizon = w.f64_field(map, "background", "horizon")?;
            BackgroundSpec::sphere_cross_circle(r0, circle_len, horizon)
        }
        other => {
            w.violations.push(format!(
                "background.kind \"{other}\" is not one of flat_torus, shrinking_sphere, sphere_cross_circle"
            ));
            return None;
        }
    };
    if let Err(e) = spec.validate() {
        w.violations.push(format!("background: {e}"));
        return None;
    }
    Some(spec)
}

fn parse_curve(w: &mut Walker, v: &Value) -> Option<CurveSeed> {
    let map = w.object(v, "curve")?;
    let kind = match map.get("kind").and_then(|k| k.as_str()) {
        Some(k) => k.to_string(),
        None => {
            w.violations.push("curve.kind is required and must be a string".to_string());
            return None;
        }
    };
    let center = |w: &mut Walker, map: &Map<String, Value>| -> Option<[f64; 2]> {
        match map.get("center").and_then(|p| p.as_array()) {
            Some(arr) if arr.len() == 2 => match (arr[0].as_f64(), arr[1].as_f64()) {
                (Some(a), Some(b)) => Some([a, b]),
                _ => {
                    w.violations.push("curve.center entries must be numbers".to_string());
                    None
                }
            },
            _ => {
                w.violations.push("curve.center must be an array of two numbers".to_string());
                None
            }
        }
    };
    match kind.as_str() {
        "torus_circle" => {
            w.check_keys(map, "curve", &["kind", "center", "radius"]);
            let c = center(w, map)?;
            let radius = w.f64_field(map, "curve", "radius")?;
            Some(CurveSeed::TorusCircle { center: c, radius })
        }
        "torus_fourier" => {
            w.check_keys(map, "curve", &["kind", "center", "radius", "amplitudes", "phase_seed"]);
            let c = center(w, map)?;
            let radius = w.f64_field(map, "curve", "radius")?;
            let amplitudes = match map.get("amplitudes").and_then(|a| a.as_array()) {
                Some(arr) => {
                    let mut out = Vec::with_capacity(arr.len());
                    for e in arr {
                        match e.as_f64() {
                            Some(x) => out.push(x),
                            None => {
                                w.violations
                                    .push("curve.amplitudes entries must be numbers".to_string());
                                return None;
                            }
                        }
                    }
                    out
                }
                None => Vec::new(),
            };
            let phase_seed = w.u64_optional(map, "curve", "phase_seed").unwrap_or(0);
            Some(CurveSeed::TorusFourier { center: c, radius, amplitudes, phase_seed })
        }
        "sphere_latitude" => {
            w.check_keys(map, "curve", &["kind", "theta0"]);
            let theta0 = w.f64_field(map, "curve", "theta0")?;
            Some(CurveSeed::SphereLatitude { theta0 })
        }
        "product_ramp" => {
            w.check_keys(map, "curve", &["kind", "theta0", "winding"]);
            let theta0 = w.f64_field(map, "curve", "theta0")?;
            let winding = w.u64_optional(map, "curve", "winding").unwrap_or(1) as u32;
            Some(CurveSeed::ProductRamp { theta0, winding })
        }
        "product_wavy_ramp" => {
            w.check_keys(map, "curve", &["kind", "theta0", "winding", "amplitude"]);
            let theta0 = w.f64_field(map, "curve", "theta0")?;
            let winding = w.u64_optional(map, "curve", "winding").unwrap_or(1) as u32;
            let amplitude = w.f64_field(map, "curve", "amplitude")?;
            Some(CurveSeed::ProductWavyRamp { theta0, winding, amplitude })
        }
        other => {
            w.violations.push(format!(
                "curve.kind \"{other}\" is not one of torus_circle, torus_fourier, sphere_latitude, product_ramp, product_wavy_ramp"
            ));
            None
        }
    }
}

/// Largest `dt` dividing `t_end` into whole steps while staying safely
/// under the CFL limit of the seed curve; the default when `flow.dt` is
/// omitted.
fn default_dt(
    background: &BackgroundSpec,
    seed: &CurveSeed,
    n_nodes: usize,
    t_end: f64,
) -> Option<f64> {
    let bg = make_background(background.clone()).ok()?;
    let geom = curveflow_core::metric::Geometry::new(&bg);
    let curve = seed_curve(seed, n_nodes, &bg).ok()?;
    let geometry = curveflow_core::curve::curve_geometry(&geom, &curve, DEFAULT_EPS).ok()?;
    let min_ds = geometry.ds.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = DEFAULT_CFL_SAFETY * min_ds * min_ds;
    if !(limit > 0.0) || !(t_end > 0.0) {
        return None;
    }
    // Stay at 80% of the limit, then round to a whole number of steps.
    let steps = (t_end / (0.8 * limit)).ceil().max(1.0);
    Some(t_end / steps)
}

/// Parse only the background of a configuration: either a full config
/// document or a bare `{"kind": ...}` background object.
pub fn parse_background_only(text: &str) -> Result<BackgroundSpec, ConfigErrors> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(ConfigErrors(vec![format!("not valid JSON: {e}")])),
    };
    let mut w = Walker { violations: Vec::new() };
    let section = match root.as_object() {
        Some(map) if map.contains_key("background") => map.get("background").unwrap(),
        _ => &root,
    };
    match parse_background(&mut w, section) {
        Some(spec) if w.violations.is_empty() => Ok(spec),
        _ => Err(ConfigErrors(w.violations)),
    }
}

/// Parse and validate a JSON configuration. Every detectable violation is
/// aggregated into the error, not just the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(ConfigErrors(vec![format!("not valid JSON: {e}")])),
    };
    let mut w = Walker { violations: Vec::new() };
    let Some(map) = w.object(&root, "configuration") else {
        return Err(ConfigErrors(w.violations));
    };
    w.check_keys(map, "configuration", &["background", "curve", "flow", "checks", "output", "seed"]);

    let background = match map.get("background") {
        Some(v) => parse_background(&mut w, v),
        None => {
            w.violations.push("configuration.background is required".to_string());
            None
        }
    };
    let seed = match map.get("curve") {
        Some(v) => parse_curve(&mut w, v),
        None => {
            w.violations.push("configuration.curve is required".to_string());
            None
        }
    };

    // Seed/background compatibility, so runtime seeding cannot fail for
    // structural reasons.
    if let (Some(bg), Some(sd)) = (&background, &seed) {
        let ok = match sd {
            CurveSeed::TorusCircle { .. } | CurveSeed::TorusFourier { .. } => {
                bg.kind_name() == "flat_torus"
            }
            CurveSeed::SphereLatitude { .. } => {
                bg.kind_name() == "shrinking_sphere" || bg.kind_name() == "sphere_cross_circle"
            }
            CurveSeed::ProductRamp { .. } => {
                bg.kind_name() == "flat_torus" || bg.kind_name() == "sphere_cross_circle"
            }
            CurveSeed::ProductWavyRamp { .. } => bg.kind_name() == "sphere_cross_circle",
        };
        if !ok {
            w.violations.push(format!(
                "curve kind is not defined on background \"{}\"",
                bg.kind_name()
            ));
        }
    }

    // Flow parameters.
    let mut n_nodes = 0usize;
    let mut t_end = 0.0f64;
    let mut dt_opt = None;
    let mut record_every = 50usize;
    let mut eps = DEFAULT_EPS;
    match map.get("flow") {
        Some(v) => {
            if let Some(fm) = w.object(v, "flow") {
                w.check_keys(fm, "flow", &["nodes", "dt", "t_end", "record_every", "epsilon"]);
                if let Some(n) = w.u64_optional(fm, "flow", "nodes") {
                    n_nodes = n as usize;
                } else if !fm.contains_key("nodes") {
                    w.violations.push("flow.nodes is required".to_string());
                }
                if let Some(te) = w.f64_field(fm, "flow", "t_end") {
                    t_end = te;
                }
                dt_opt = w.f64_optional(fm, "flow", "dt");
                if let Some(r) = w.u64_optional(fm, "flow", "record_every") {
                    record_every = r as usize;
                }
                if let Some(e) = w.f64_optional(fm, "flow", "epsilon") {
                    eps = e;
                }
            }
        }
        None => w.violations.push("configuration.flow is required".to_string()),
    }
    if n_nodes < 16 || n_nodes % 2 != 0 {
        w.violations.push(format!("flow.nodes = {n_nodes} must be even and at least 16"));
    }
    if let Some(bg) = &background {
        if t_end > bg.horizon {
            w.violations.push(format!(
                "flow.t_end = {t_end} exceeds the background horizon {}",
                bg.horizon
            ));
        }
    }
    if t_end <= 0.0 {
        w.violations.push(format!("flow.t_end = {t_end} must be positive"));
    }
    if let Some(dt) = dt_opt {
        if dt <= 0.0 {
            w.violations.push(format!("flow.dt = {dt} must be positive"));
        }
    }
    if record_every == 0 {
        w.violations.push("flow.record_every must be at least 1".to_string());
    }
    if eps <= 0.0 {
        w.violations.push(format!("flow.epsilon = {eps} must be positive"));
    }

    // Checks.
    let registry = known_checks();
    let mut checks: Option<Vec<String>> = None;
    if let Some(v) = map.get("checks") {
        match v.as_array() {
            Some(arr) => {
                let mut out = Vec::with_capacity(arr.len());
                for e in arr {
                    match e.as_str() {
                        Some(name) => {
                            if registry.iter().any(|r| r == name) {
                                out.push(name.to_string());
                            } else {
                                w.violations
                                    .push(format!("unknown check \"{name}\" in checks"));
                            }
                        }
                        None => w
                            .violations
                            .push("checks entries must be strings".to_string()),
                    }
                }
                checks = Some(out);
            }
            None => w.violations.push("checks must be an array of strings".to_string()),
        }
    }

    // Output.
    let mut out_dir = None;
    if let Some(v) = map.get("output") {
        if let Some(om) = w.object(v, "output") {
            w.check_keys(om, "output", &["directory", "formats"]);
            if let Some(d) = om.get("directory") {
                match d.as_str() {
                    Some(s) => out_dir = Some(PathBuf::from(s)),
                    None => w.violations.push("output.directory must be a string".to_string()),
                }
            }
            if let Some(fmts) = om.get("formats") {
                match fmts.as_array() {
                    Some(arr) => {
                        for e in arr {
                            match e.as_str() {
                                Some("csv") | Some("json") => {}
                                Some(other) => w.violations.push(format!(
                                    "output.formats entry \"{other}\" is not csv or json"
                                )),
                                None => w.violations.push(
                                    "output.formats entries must be strings".to_string(),
                                ),
                            }
                        }
                    }
                    None => w
                        .violations
                        .push("output.formats must be an array of strings".to_string()),
                }
            }
        }
    }

    let rng_seed = w.u64_optional(map, "configuration", "seed").unwrap_or(2024);

    let (Some(background), Some(seed)) = (background, seed) else {
        return Err(ConfigErrors(w.violations));
    };

    let ramp = is_ramp_seed(&seed);
    let circle_coord = if ramp { background.circle_coordinate() } else { None };
    let checks = checks.unwrap_or_else(|| default_checks(&background, &seed));
    if checks.iter().any(|c| c == "ramp") && circle_coord.is_none() {
        w.violations.push(
            "the ramp check needs a ramp seed on a background with a circle factor".to_string(),
        );
    }

    // Default dt from the CFL limit of the seed curve.
    let dt = match dt_opt {
        Some(dt) => dt,
        None => {
            if w.violations.is_empty() {
                match default_dt(&background, &seed, n_nodes, t_end) {
                    Some(dt) => dt,
                    None => {
                        w.violations
                            .push("could not derive a default flow.dt from the CFL rule".to_string());
                        0.0
                    }
                }
            } else {
                0.0
            }
        }
    };

    if !w.violations.is_empty() {
        return Err(ConfigErrors(w.violations));
    }

    Ok(ExperimentConfig {
        name: "custom".to_string(),
        background,
        seed,
        params: FlowParams {
            n_nodes,
            dt,
            t_end,
            record_every,
            eps,
            cfl_safety: DEFAULT_CFL_SAFETY,
        },
        checks,
        out_dir,
        rng_seed,
        circle_coord,
    })
}
