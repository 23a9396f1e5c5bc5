//! Run configuration, builtin lookup and byte-stable CSV/JSON output.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every f64; JSON objects have sorted keys.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::asymptotic::{asymptotic_index, default_horizons, graph_scan, AsymptoticEstimate, GraphParam, ScanResult};
use crate::error::{MaslovError, Result};
use crate::flow::tangent_flow;
use crate::linalg::{random_lagrangian, vertical_intersection_dim, LagrangianFrame, Mat};
use crate::path::{boundary_term, unwrap_delta};
use crate::system::{builtins, ConformalSystem, Expansion, ExpansionTerm, Hamiltonian, Rate, Topology};
use crate::tolerances::Tolerances;
use crate::twist::{twist_certificate, GridSpec, Region, TwistCertificate};
use crate::unitary::angles;

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Pretty JSON with every float at 17 significant digits and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| MaslovError::Io(e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            _ if n.is_f64() => out.push_str(&format_float(n.as_f64().unwrap())),
            (Some(i), _) => write!(out, "{i}").unwrap(),
            (_, Some(u)) => write!(out, "{u}").unwrap(),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// Parses a report and re-emits it in canonical form.
pub fn reformat_json<T: Serialize + for<'de> Deserialize<'de>>(text: &str) -> Result<String> {
    let v: T = serde_json::from_str(text).map_err(|e| MaslovError::Config(e.to_string()))?;
    to_json_string(&v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionSpec {
    pub d: usize,
    pub terms: Vec<ExpansionTerm>,
    #[serde(default)]
    pub topology: Option<Vec<Topology>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Map<String, Value>,
    },
    Expansion {
        hamiltonian: ExpansionSpec,
        #[serde(default)]
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrameSpec {
    /// "zero-section-tangent", "vertical" or "random" (seeded by `seed`).
    Named(String),
    /// 2d rows of d columns.
    Matrix(Vec<Vec<f64>>),
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec::Named("zero-section-tangent".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub state: Vec<f64>,
    #[serde(default)]
    pub frame: FrameSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticSpec {
    #[serde(default)]
    pub horizons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub n_points: usize,
    #[serde(default)]
    pub graph: Option<GraphParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TwistSpec {
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

/// One run: system, initial data, time grid, tolerances and output target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    pub time: TimeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub asymptotic: Option<AsymptoticSpec>,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub twist: Option<TwistSpec>,
}

fn config_err(msg: impl Into<String>) -> MaslovError {
    MaslovError::Config(msg.into())
}

/// Applies `key.path=value`; the value is read as JSON, else as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad override key {key:?}")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let map = node.as_object_mut().ok_or_else(|| config_err(format!("override {key:?} descends into a non-object")))?;
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let map = node.as_object_mut().ok_or_else(|| config_err(format!("override {key:?} descends into a non-object")))?;
    map.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| config_err(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.time;
        if !(t.dt > 0.0) || !t.dt.is_finite() {
            return Err(config_err(format!("time.dt must be positive, got {}", t.dt)));
        }
        if !(t.t1 > t.t0) || !t.t0.is_finite() || !t.t1.is_finite() {
            return Err(config_err(format!("time span [{}, {}] is empty", t.t0, t.t1)));
        }
        self.tolerances.validate()?;
        self.system()?;
        Ok(())
    }

    pub fn system(&self) -> Result<ConformalSystem> {
        build_system(&self.system, &self.tolerances)
    }

    pub fn output_path(&self) -> Result<&Path> {
        self.output.as_ref().map(|o| o.path.as_path()).ok_or_else(|| config_err("output.path is required"))
    }

    fn check_format(&self, expected: &str) -> Result<()> {
        match self.output.as_ref().and_then(|o| o.format.as_deref()) {
            None => Ok(()),
            Some(f) if f == expected => Ok(()),
            Some(f) => Err(config_err(format!("output.format {f:?} not supported here (expected {expected:?})"))),
        }
    }

    fn initial(&self, d: usize) -> Result<(Vec<f64>, LagrangianFrame)> {
        let init = self.initial.as_ref().ok_or_else(|| config_err("initial.state is required"))?;
        if init.state.len() != 2 * d {
            return Err(config_err(format!("initial.state needs {} entries", 2 * d)));
        }
        Ok((init.state.clone(), initial_frame(&init.frame, d, self.seed, &self.tolerances)?))
    }
}

pub fn initial_frame(spec: &FrameSpec, d: usize, seed: u64, tol: &Tolerances) -> Result<LagrangianFrame> {
    match spec {
        FrameSpec::Named(n) => match n.as_str() {
            "zero-section-tangent" => Ok(LagrangianFrame::horizontal(d)),
            "vertical" => Ok(LagrangianFrame::vertical(d)),
            "random" => Ok(random_lagrangian(d, seed)),
            other => Err(config_err(format!("unknown frame {other:?}"))),
        },
        FrameSpec::Matrix(rows) => {
            if rows.len() != 2 * d || rows.iter().any(|r| r.len() != d) {
                return Err(config_err(format!("frame matrix must be {} × {d}", 2 * d)));
            }
            let m = Mat::from_fn(2 * d, d, |i, j| rows[i][j]);
            LagrangianFrame::with_tolerances(m, tol).map_err(|e| config_err(format!("frame: {e}")))
        }
    }
}

struct Params<'a> {
    builtin: &'a str,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn allow(&self, names: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !names.contains(&k.as_str())) {
            Some(k) => Err(config_err(format!("{}: unknown parameter {k:?} (allowed: {names:?})", self.builtin))),
            None => Ok(()),
        }
    }

    fn get<T: for<'de> Deserialize<'de>>(&self, name: &str, default: Option<T>) -> Result<T> {
        match self.map.get(name) {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| config_err(format!("{}.{name}: {e}", self.builtin))),
            None => default.ok_or_else(|| config_err(format!("{}: missing parameter {name:?}", self.builtin))),
        }
    }
}

pub const BUILTINS: [&str; 6] = ["harmonic", "free", "damped_pendulum", "discounted_tonelli", "linear", "torus_coupled"];

pub fn build_system(spec: &SystemSpec, tol: &Tolerances) -> Result<ConformalSystem> {
    match spec {
        SystemSpec::Builtin { builtin, params } => {
            let p = Params { builtin, map: params };
            match builtin.as_str() {
                "harmonic" | "free" => {
                    p.allow(&["d"])?;
                    let d: usize = p.get("d", Some(1))?;
                    if d == 0 {
                        return Err(config_err("d must be positive"));
                    }
                    Ok(if builtin == "harmonic" { builtins::harmonic(d) } else { builtins::free(d) })
                }
                "damped_pendulum" => {
                    p.allow(&["a"])?;
                    Ok(builtins::damped_pendulum(p.get("a", Some(0.0))?))
                }
                "torus_coupled" => {
                    p.allow(&["eps", "a"])?;
                    Ok(builtins::torus_coupled(p.get("eps", None)?, p.get("a", Some(0.0))?))
                }
                "linear" => {
                    p.allow(&["s", "a"])?;
                    let rows: Vec<Vec<f64>> = p.get("s", None)?;
                    let n = rows.len();
                    if n == 0 || n % 2 != 0 || rows.iter().any(|r| r.len() != n) {
                        return Err(config_err("linear.s must be a square matrix of even size"));
                    }
                    builtins::linear(Mat::from_fn(n, n, |i, j| rows[i][j]), p.get("a", Some(0.0))?)
                        .map_err(|e| config_err(format!("linear.s: {e}")))
                }
                "discounted_tonelli" => {
                    p.allow(&["d", "a", "potential", "topology"])?;
                    let d: usize = p.get("d", Some(1))?;
                    let terms: Vec<ExpansionTerm> = p.get("potential", None)?;
                    if terms.iter().any(|t| t.p_pow.iter().any(|&k| k != 0)) {
                        return Err(config_err("discounted_tonelli.potential must not depend on p"));
                    }
                    let topology: Vec<Topology> = p.get("topology", Some(vec![Topology::Angle; d]))?;
                    let v = Expansion::new(d, tol.fd_step, terms)?;
                    let potential = Arc::new(move |q: &[f64]| {
                        let mut x = q.to_vec();
                        x.resize(2 * q.len(), 0.0);
                        v.value(0.0, &x)
                    });
                    builtins::discounted_tonelli(d, p.get("a", Some(0.0))?, tol.fd_step, potential, topology)
                        .map_err(|e| config_err(e.to_string()))
                }
                other => Err(config_err(format!("unknown builtin {other:?} (available: {BUILTINS:?})"))),
            }
        }
        SystemSpec::Expansion { hamiltonian, rate } => {
            let d = hamiltonian.d;
            if d == 0 {
                return Err(config_err("hamiltonian.d must be positive"));
            }
            let h = Expansion::new(d, tol.fd_step, hamiltonian.terms.clone())?;
            let topology = hamiltonian.topology.clone().unwrap_or_else(|| vec![Topology::Line; d]);
            ConformalSystem::new("expansion", Arc::new(h), Rate::Constant(*rate), topology)
                .map_err(|e| config_err(e.to_string()))
        }
    }
}

pub const INDEX_HEADER: &str = "t,arg_delta_unwrapped,alpha_mi,mi_checkpoint,vert_dim,conformal_defect";

/// Index CSV: one row per integration step.
pub fn index_csv(cfg: &RunConfig) -> Result<String> {
    cfg.check_format("csv")?;
    let sys = cfg.system()?;
    let tol = &cfg.tolerances;
    let (x0, l0) = cfg.initial(sys.dim())?;
    let tr = Arc::new(tangent_flow(&sys, &x0, (cfg.time.t0, cfg.time.t1), cfg.time.dt, tol)?);
    let path = tr.lagrangian_path(&l0, tol)?;
    let phase = unwrap_delta(&path, tol)?;
    let start = angles(&l0)?;
    let start_transverse = vertical_intersection_dim(&l0, tol.rank_tol) == 0;
    let mut out = String::with_capacity(96 * path.len());
    out.push_str(INDEX_HEADER);
    out.push('\n');
    for (k, frame) in path.frames().iter().enumerate() {
        let alpha = (phase.phases[k] - phase.phases[0]) / (2.0 * std::f64::consts::PI);
        let vert = vertical_intersection_dim(frame, tol.rank_tol);
        let mi = if start_transverse && vert == 0 {
            let raw = alpha - boundary_term(&start, &angles(frame)?);
            ((raw - raw.round()).abs() < tol.residual_tol).then(|| (raw.round() as i64).to_string())
        } else {
            None
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_float(path.times()[k]),
            format_float(phase.phases[k]),
            format_float(alpha),
            mi.unwrap_or_default(),
            vert,
            format_float(tr.blocks[k].conformal_defect()),
        )
        .unwrap();
    }
    Ok(out)
}

fn require_zero_start(cfg: &RunConfig, what: &str) -> Result<()> {
    if cfg.time.t0 != 0.0 {
        return Err(config_err(format!("{what} runs start at t0 = 0")));
    }
    Ok(())
}

pub fn asymptotic_report(cfg: &RunConfig) -> Result<AsymptoticEstimate> {
    cfg.check_format("json")?;
    require_zero_start(cfg, "asymptotic")?;
    let sys = cfg.system()?;
    let (x0, l0) = cfg.initial(sys.dim())?;
    let horizons = cfg
        .asymptotic
        .as_ref()
        .and_then(|a| a.horizons.clone())
        .unwrap_or_else(|| default_horizons(cfg.time.t1));
    if horizons.last().is_some_and(|&h| h > cfg.time.t1) {
        return Err(config_err("horizons exceed time.t1"));
    }
    asymptotic_index(&sys, &x0, &l0, &horizons, cfg.time.dt, &cfg.tolerances).map_err(|e| match e {
        MaslovError::InvalidArgument(m) => config_err(m),
        e => e,
    })
}

/// Scan summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub system: String,
    pub horizon: f64,
    pub n_points: usize,
    pub best: Option<usize>,
    pub best_bound: Option<i64>,
    pub best_q0: Option<Vec<f64>>,
    pub best_p0: Option<Vec<f64>>,
    pub total_skips: usize,
    pub failed_points: Vec<usize>,
    pub bound_violations: usize,
}

impl ScanSummary {
    pub fn from_result(r: &ScanResult) -> Self {
        let best = r.best.map(|i| &r.points[i]);
        ScanSummary {
            system: r.system.clone(),
            horizon: r.horizon,
            n_points: r.points.len(),
            best: r.best,
            best_bound: r.best_bound,
            best_q0: best.map(|p| p.q0.clone()),
            best_p0: best.map(|p| p.p0.clone()),
            total_skips: r.points.iter().map(|p| p.skips).sum(),
            failed_points: r.points.iter().filter(|p| p.error.is_some()).map(|p| p.index).collect(),
            bound_violations: r.points.iter().map(|p| p.bound_violations).sum(),
        }
    }
}

pub fn scan_run(cfg: &RunConfig) -> Result<ScanResult> {
    cfg.check_format("csv")?;
    require_zero_start(cfg, "scan")?;
    let sys = cfg.system()?;
    let spec = cfg.scan.as_ref().ok_or_else(|| config_err("scan.n_points is required"))?;
    let graph = spec.graph.clone().unwrap_or_else(|| GraphParam::zero_section(sys.dim()));
    graph_scan(&sys, &graph, spec.n_points, cfg.time.t1, cfg.time.dt, &cfg.tolerances).map_err(|e| match e {
        MaslovError::InvalidArgument(m) | MaslovError::DimensionMismatch(m) => config_err(m),
        e => e,
    })
}

pub fn scan_csv(r: &ScanResult) -> String {
    let d = r.graph_param.dim();
    let names = |prefix: &str| -> Vec<String> {
        if d == 1 {
            vec![prefix.to_string()]
        } else {
            (1..=d).map(|i| format!("{prefix}_{i}")).collect()
        }
    };
    let mut out = String::new();
    let mut header = vec!["point_index".to_string()];
    header.extend(names("q0"));
    header.extend(names("p0"));
    header.extend(["min_mi", "max_mi", "skips"].map(String::from));
    out.push_str(&header.join(","));
    out.push('\n');
    for p in &r.points {
        let mut row = vec![p.index.to_string()];
        row.extend(p.q0.iter().chain(&p.p0).map(|&v| format_float(v)));
        if p.error.is_none() {
            row.push(p.min_mi.to_string());
            row.push(p.max_mi.to_string());
        } else {
            row.extend([String::new(), String::new()]);
        }
        row.push(p.skips.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Path of the JSON summary accompanying a scan CSV.
pub fn summary_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

pub fn twist_report(cfg: &RunConfig) -> Result<TwistCertificate> {
    cfg.check_format("json")?;
    let sys = cfg.system()?;
    let d = sys.dim();
    let spec = cfg.twist.clone().unwrap_or_default();
    let region = spec.region.unwrap_or_else(|| Region::uniform(d, (-std::f64::consts::PI, std::f64::consts::PI), (-2.0, 2.0)));
    let grid = spec.grid.unwrap_or(GridSpec { per_axis: if d == 1 { 21 } else { 7 }, time_samples: 1 });
    twist_certificate(&sys, &region, &grid, &cfg.tolerances).map_err(|e| match e {
        MaslovError::InvalidArgument(m) | MaslovError::DimensionMismatch(m) => config_err(m),
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = r#"{
        "system": {"builtin": "harmonic"},
        "initial": {"state": [1.0, 0.0]},
        "time": {"t1": 6.283185307179586, "dt": 0.001}
    }"#;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0, std::f64::consts::PI] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn harmonic_index_csv() {
        let cfg = RunConfig::parse(HARMONIC, &[]).unwrap();
        let csv = index_csv(&cfg).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(INDEX_HEADER));
        let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
        assert!((last[2].parse::<f64>().unwrap() + 2.0).abs() < 1e-6);
        assert_eq!(last[3], "-2");
        assert_eq!(csv, index_csv(&cfg).unwrap());
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn overrides() {
        let cfg = RunConfig::parse(HARMONIC, &["time.dt=0.01".into(), "tolerances.angle_tol=1e-6".into(), "seed=7".into()]).unwrap();
        assert_eq!(cfg.time.dt, 0.01);
        assert_eq!(cfg.tolerances.angle_tol, 1e-6);
        assert_eq!(cfg.seed, 7);
        let cfg = RunConfig::parse(HARMONIC, &["system.builtin=damped_pendulum".into(), "system.params.a=0.2".into()]).unwrap();
        assert_eq!(cfg.system().unwrap().rate().at(0.0), 0.2);
        assert!(RunConfig::parse(HARMONIC, &["time".into()]).is_err());
    }

    #[test]
    fn config_errors() {
        for bad in [
            "{",
            r#"{"system": {"builtin": "nope"}, "time": {"t1": 1, "dt": 0.1}}"#,
            r#"{"system": {"builtin": "harmonic"}, "time": {"t1": 1, "dt": 0}}"#,
            r#"{"system": {"builtin": "harmonic"}, "time": {"t1": 1, "dt": 0.1}, "extra": 1}"#,
            r#"{"system": {"builtin": "damped_pendulum", "params": {"b": 1}}, "time": {"t1": 1, "dt": 0.1}}"#,
            r#"{"system": {"builtin": "harmonic"}, "time": {"t1": 1, "dt": 0.1}, "tolerances": {"unwrap_guard": 4}}"#,
        ] {
            let e = RunConfig::parse(bad, &[]).unwrap_err();
            assert!(e.is_config(), "{bad}: {e}");
        }
    }

    #[test]
    fn expansion_system_matches_builtin() {
        let text = r#"{
            "system": {"hamiltonian": {"d": 1, "terms": [
                {"coef": 0.5, "p_pow": [2]},
                {"coef": -1.0, "trig": "cos", "freq": [1.0]}
            ], "topology": ["angle"]}, "rate": 0.1},
            "time": {"t1": 1, "dt": 0.1}
        }"#;
        let sys = RunConfig::parse(text, &[]).unwrap().system().unwrap();
        let reference = builtins::damped_pendulum(0.1);
        let x = [0.7, -0.3];
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        sys.vector_field(0.0, &x, &mut a);
        reference.vector_field(0.0, &x, &mut b);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn tonelli_from_config() {
        let text = r#"{
            "system": {"builtin": "discounted_tonelli", "params": {"a": 0.1, "potential": [{"coef": -1.0, "trig": "cos", "freq": [1.0]}]}},
            "time": {"t1": 1, "dt": 0.1}
        }"#;
        let sys = RunConfig::parse(text, &[]).unwrap().system().unwrap();
        let mut v = [0.0; 2];
        sys.vector_field(0.0, &[0.7, 0.2], &mut v);
        assert!((v[1] - (-(0.7f64).sin() - 0.02)).abs() < 1e-8);
    }

    #[test]
    fn json_round_trip() {
        let est = AsymptoticEstimate {
            rate: -0.3179,
            horizons: vec![50.0, 100.0],
            partials: vec![-0.31, -1.0 / 3.0],
            cauchy_gap: 0.01,
            converged: true,
        };
        let text = to_json_string(&est).unwrap();
        assert_eq!(reformat_json::<AsymptoticEstimate>(&text).unwrap(), text);
        let back: AsymptoticEstimate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn scan_csv_layout() {
        let cfg = RunConfig::parse(
            r#"{"system": {"builtin": "free", "params": {"d": 2}}, "time": {"t1": 3, "dt": 0.01}, "scan": {"n_points": 4}}"#,
            &[],
        )
        .unwrap();
        let r = scan_run(&cfg).unwrap();
        let csv = scan_csv(&r);
        assert_eq!(csv.lines().next(), Some("point_index,q0_1,q0_2,p0_1,p0_2,min_mi,max_mi,skips"));
        assert_eq!(csv.lines().count(), 5);
        let summary = ScanSummary::from_result(&r);
        assert_eq!(summary.best_bound, Some(0));
        let text = to_json_string(&summary).unwrap();
        assert_eq!(reformat_json::<ScanSummary>(&text).unwrap(), text);
    }

    #[test]
    fn twist_from_config() {
        let cfg = RunConfig::parse(r#"{"system": {"builtin": "damped_pendulum", "params": {"a": 0.1}}, "time": {"t1": 1, "dt": 0.1}}"#, &[]).unwrap();
        let c = twist_report(&cfg).unwrap();
        assert_eq!(c.verdict, crate::twist::Verdict::StrictTwist);
        let text = to_json_string(&c).unwrap();
        assert_eq!(reformat_json::<TwistCertificate>(&text).unwrap(), text);
    }
}
