//! The invariant suite behind `maslov selftest`: every property is checked on
//! a small seeded corpus and reported as one named pass/fail line.

use std::f64::consts::PI;
use std::fmt::Display;
use std::sync::Arc;
use std::time::Instant;

use crate::asymptotic::{asymptotic_index, default_horizons};
use crate::fixtures::{admissible_reduction, linear_path, FlowSample};
use crate::flow::{flow, tangent_flow, tangent_flow_sampled};
use crate::io::{index_csv, reformat_json, to_json_string, RunConfig};
use crate::linalg::{height, random_lagrangian, LagrangianFrame, Mat};
use crate::path::{angular_mi, crossing_mi_oriented, index_report, maslov_index, CROSSING_ORIENTATION};
use crate::system::builtins;
use crate::tolerances::Tolerances;
use crate::twist::{evolved_vertical_height, nonpositivity_audit, AuditSample, Region};
use crate::unitary::{angles, delta, delta_from_angles};

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    /// Sign convention handed to the crossing counter. Flipping it must make
    /// the suite fail.
    pub crossing_orientation: i64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { crossing_orientation: CROSSING_ORIENTATION }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckResult = std::result::Result<String, String>;

fn e<E: Display>(err: E) -> String {
    err.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn height_cocycle(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let v = LagrangianFrame::vertical(3);
    let mut worst: f64 = 0.0;
    for s in 0..100 {
        let [l1, l2, l3] = [0, 1, 2].map(|k| random_lagrangian(3, 3 * s + k));
        let a = height(&v, &l1, &l2, &t).map_err(e)?.matrix;
        let b = height(&v, &l2, &l3, &t).map_err(e)?.matrix;
        let c = height(&v, &l1, &l3, &t).map_err(e)?.matrix;
        worst = worst.max((a + b - c).amax());
    }
    ensure(worst < 1e-9, || format!("max defect {worst:e}"))?;
    Ok(format!("max defect {worst:.1e}"))
}

fn delta_identity(_: &SelftestOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    for s in 0..300 {
        let l = random_lagrangian(1 + (s % 3) as usize, 500 + s);
        let a = delta(&l).value;
        let b = delta_from_angles(&angles(&l).map_err(e)?).value;
        worst = worst.max((a - b).norm());
    }
    ensure(worst < 1e-9, || format!("max |Δ − Δ(θ)| {worst:e}"))?;
    Ok(format!("max |Δ − Δ(θ)| {worst:.1e}"))
}

fn harmonic_period(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let tr = Arc::new(tangent_flow(&builtins::harmonic(1), &[1.0, 0.0], (0.0, 2.0 * PI), 1e-3, &t).map_err(e)?);
    let path = tr.lagrangian_path(&LagrangianFrame::line(0.3), &t).map_err(e)?;
    let rep = index_report(&path, &t).map_err(e)?;
    ensure(rep.mi == Some(-2) && (rep.alpha_mi + 2.0).abs() < 1e-6, || format!("{rep:?}"))?;
    Ok(format!("MI {} αMI {:.9}", -2, rep.alpha_mi))
}

fn crossing_agreement(opts: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut compared = 0;
    for s in 0..60 {
        let fs = FlowSample::random(1 + (s % 3) as usize, 9000 + s, 6.0);
        let path = fs.path(1e-3, 10, &t).map_err(e)?;
        let mi = match maslov_index(&path, &t) {
            Ok(mi) => mi,
            Err(crate::MaslovError::EndpointOnSigma { .. }) => continue,
            Err(err) => return Err(err.to_string()),
        };
        let cm = crossing_mi_oriented(&path, &t, opts.crossing_orientation).map_err(e)?.mi;
        ensure(cm == Some(mi), || format!("sample {s} ({}): crossings {cm:?} vs identity {mi}", fs.system.name()))?;
        compared += 1;
    }
    Ok(format!("{compared} paths agree"))
}

fn concatenation(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    for s in 0..10 {
        let path = FlowSample::random(2, 700 + s, 6.0).path(1e-3, 10, &t).map_err(e)?;
        let mid = path.len() / 2;
        let (a, b) = (path.slice(0, mid).map_err(e)?, path.slice(mid, path.len() - 1).map_err(e)?);
        let whole = angular_mi(&path, &t).map_err(e)?;
        let parts = angular_mi(&a, &t).map_err(e)? + angular_mi(&b, &t).map_err(e)?;
        ensure((whole - parts).abs() < 1e-12, || format!("αMI {whole} vs {parts}"))?;
        if let (Ok(x), Ok(y), Ok(z)) = (maslov_index(&path, &t), maslov_index(&a, &t), maslov_index(&b, &t)) {
            ensure(x == y + z, || format!("MI {x} vs {y} + {z}"))?;
        }
    }
    Ok("10 splits additive".into())
}

fn loop_integrality(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let tr = Arc::new(tangent_flow_sampled(&builtins::harmonic(2), &[0.3, 0.1, 0.0, 0.2], (0.0, 2.0 * PI), 1e-3, 10, &t).map_err(e)?);
    for s in 0..5 {
        let a = angular_mi(&tr.lagrangian_path(&random_lagrangian(2, s), &t).map_err(e)?, &t).map_err(e)?;
        ensure((a - a.round()).abs() < t.residual_tol, || format!("loop αMI {a}"))?;
    }
    Ok("closed loops integral".into())
}

fn vertical_translation(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut shear = Mat::identity(4, 4);
    shear.view_mut((2, 0), (2, 2)).copy_from(&Mat::from_row_slice(2, 2, &[0.7, -0.2, -0.2, 1.3]));
    for s in 0..10 {
        let path = linear_path(2, 40 + s, 2.0, 200).map_err(e)?;
        let m = shear.clone();
        let sheared = path.map_frames(move |f| f.transformed(&m, &Tolerances::default())).map_err(e)?;
        match (maslov_index(&path, &t), maslov_index(&sheared, &t)) {
            (Ok(a), Ok(b)) => ensure(a == b, || format!("seed {s}: {a} vs {b}"))?,
            (Err(crate::MaslovError::EndpointOnSigma { .. }), _) => {}
            (a, b) => return Err(format!("seed {s}: {a:?} / {b:?}")),
        }
    }
    Ok("MI invariant under p ↦ p + Sq".into())
}

fn reduction(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut compared = 0;
    for s in 0..20 {
        let path = linear_path(3, 100 + s, 2.0, 200).map_err(e)?;
        let r = Arc::new(admissible_reduction(&path, s, &t).map_err(e)?);
        let reduced = path.map_frames(move |f| r.reduce(f, &Tolerances::default())).map_err(e)?;
        match (maslov_index(&path, &t), maslov_index(&reduced, &t)) {
            (Ok(a), Ok(b)) => ensure(a == b, || format!("seed {s}: {a} vs reduced {b}"))?,
            (Err(crate::MaslovError::EndpointOnSigma { .. }), _) => continue,
            (a, b) => return Err(format!("seed {s}: {a:?} / {b:?}")),
        }
        compared += 1;
    }
    Ok(format!("{compared} reductions preserve MI"))
}

fn conformality(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut worst: f64 = 0.0;
    for a in [0.0, 0.1, 0.5] {
        for sys in [
            builtins::harmonic(2),
            builtins::free(2),
            builtins::damped_pendulum(a),
            builtins::torus_coupled(0.3, a),
            builtins::linear(Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]), a).map_err(e)?,
        ] {
            let sys = sys.with_rate(crate::system::Rate::Constant(a));
            let x0: Vec<f64> = (0..2 * sys.dim()).map(|i| 0.4 - 0.3 * i as f64).collect();
            let tr = tangent_flow_sampled(&sys, &x0, (0.0, 10.0), 1e-3, 1000, &t).map_err(e)?;
            worst = worst.max(tr.final_blocks().conformal_defect());
        }
    }
    ensure(worst < t.conformal_tol, || format!("defect {worst:e}"))?;
    Ok(format!("max defect {worst:.1e} at t = 10"))
}

fn rk4_order(_: &SelftestOptions) -> CheckResult {
    let err = |dt: f64| -> std::result::Result<f64, String> {
        let tr = flow(&builtins::harmonic(1), &[1.0, 0.0], (0.0, 5.0), dt).map_err(e)?;
        let x = tr.last();
        Ok(((x[0] - 5f64.cos()).powi(2) + (x[1] + 5f64.sin()).powi(2)).sqrt())
    };
    let ratio = err(0.02)? / err(0.01)?;
    ensure((ratio - 16.0).abs() < 1.0, || format!("ratio {ratio}"))?;
    Ok(format!("error ratio {ratio:.2}"))
}

fn dissipation(_: &SelftestOptions) -> CheckResult {
    let sys = builtins::damped_pendulum(0.1);
    let tr = flow(&sys, &[2.0, 0.5], (0.0, 30.0), 1e-3).map_err(e)?;
    let mut quad = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..tr.times.len() {
        let (x0, x1) = (&tr.states[k - 1], &tr.states[k]);
        let (e0, e1) = (sys.energy(0.0, x0), sys.energy(0.0, x1));
        ensure(e1 <= e0 + 1e-14, || format!("energy increased at t = {}", tr.times[k]))?;
        quad += -0.1 * 0.5 * (x0[1] * x0[1] + x1[1] * x1[1]) * (tr.times[k] - tr.times[k - 1]);
        worst = worst.max((sys.energy(0.0, x1) - sys.energy(0.0, &tr.states[0]) - quad).abs());
    }
    ensure(worst < 1e-5, || format!("quadrature mismatch {worst:e}"))?;
    Ok(format!("dE/dt = −a p², mismatch {worst:.1e}"))
}

fn twist_sign_law(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut worst: f64 = 0.0;
    for sys in [builtins::damped_pendulum(0.1), builtins::torus_coupled(0.3, 0.1), builtins::free(2)] {
        let x0: Vec<f64> = (0..2 * sys.dim()).map(|i| 0.5 + 0.1 * i as f64).collect();
        for h in [1e-4, 1e-3, 1e-2] {
            let up = evolved_vertical_height(&sys, &x0, 0.0, h, 1e-4, &t).map_err(e)?;
            let down = evolved_vertical_height(&sys, &x0, 0.0, -h, 1e-4, &t).map_err(e)?;
            ensure(up.is_positive_definite() && down.is_negative_definite(), || format!("{} h = {h}", sys.name()))?;
        }
        let h = 1e-3;
        let up = evolved_vertical_height(&sys, &x0, 0.0, h, 1e-4, &t).map_err(e)?;
        let down = evolved_vertical_height(&sys, &x0, 0.0, -h, 1e-4, &t).map_err(e)?;
        worst = worst.max(((up.matrix - down.matrix) / (2.0 * h) - sys.fiber_hessian(0.0, &x0)).amax());
    }
    ensure(worst < 1e-4, || format!("derivative mismatch {worst:e}"))?;
    Ok(format!("derivative mismatch {worst:.1e}"))
}

fn nonpositivity(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    let mut total = 0;
    for (sys, region) in [
        (builtins::damped_pendulum(0.1), Region::uniform(1, (-PI, PI), (-2.0, 2.0))),
        (builtins::torus_coupled(0.3, 0.1), Region::uniform(2, (-PI, PI), (-1.0, 1.0))),
    ] {
        let samples: Vec<AuditSample> = (0..25).map(|s| AuditSample::random(&region, 10.0, 300 + s)).collect();
        let rep = nonpositivity_audit(&sys, &samples, 1e-3, None, &t);
        ensure(rep.violations.is_empty() && rep.failures.is_empty(), || {
            format!("{}: violations {:?}, failures {:?}", rep.system, rep.violations, rep.failures)
        })?;
        total += rep.samples - rep.skipped;
    }
    Ok(format!("{total} samples with MI ≤ 0"))
}

fn index_bounds(_: &SelftestOptions) -> CheckResult {
    let t = tol();
    for s in 0..20 {
        let d = 1 + (s % 3) as usize;
        let fs = FlowSample::random(d, 2000 + s, 8.0);
        let tr = Arc::new(tangent_flow_sampled(&fs.system, &fs.x0, (0.0, fs.horizon), 1e-3, 10, &t).map_err(e)?);
        let a1 = angular_mi(&tr.lagrangian_path(&fs.l0, &t).map_err(e)?, &t).map_err(e)?;
        let p2 = tr.lagrangian_path(&random_lagrangian(d, 77 + s), &t).map_err(e)?;
        let a2 = angular_mi(&p2, &t).map_err(e)?;
        ensure((a1 - a2).abs() < 8.0 * d as f64, || format!("sample {s}: |{a1} − {a2}| ≥ 8d"))?;
        if let Ok(rep) = index_report(&p2, &t) {
            let mi = rep.mi.unwrap() as f64;
            ensure((rep.alpha_mi - mi).abs() < d as f64, || format!("sample {s}: |αMI − MI| = {}", (rep.alpha_mi - mi).abs()))?;
        }
    }
    Ok("|ΔαMI| < 8d and |αMI − MI| < d".into())
}

fn asymptotic_rate(_: &SelftestOptions) -> CheckResult {
    let est = asymptotic_index(&builtins::harmonic(1), &[1.0, 0.0], &LagrangianFrame::horizontal(1), &default_horizons(100.0), 1e-3, &tol())
        .map_err(e)?;
    ensure((est.rate + 1.0 / PI).abs() < 1e-3, || format!("rate {}", est.rate))?;
    Ok(format!("harmonic rate {:.6}", est.rate))
}

fn output_stability(_: &SelftestOptions) -> CheckResult {
    let cfg = RunConfig::parse(
        r#"{"system": {"builtin": "damped_pendulum", "params": {"a": 0.1}}, "initial": {"state": [1.0, 0.0]}, "time": {"t1": 5, "dt": 0.001}}"#,
        &[],
    )
    .map_err(e)?;
    let a = index_csv(&cfg).map_err(e)?;
    ensure(a == index_csv(&cfg).map_err(e)?, || "CSV differs between runs".into())?;
    let est = asymptotic_index(&builtins::harmonic(1), &[1.0, 0.0], &LagrangianFrame::horizontal(1), &[5.0, 10.0], 1e-3, &tol()).map_err(e)?;
    let json = to_json_string(&est).map_err(e)?;
    ensure(reformat_json::<crate::asymptotic::AsymptoticEstimate>(&json).map_err(e)? == json, || "JSON not canonical".into())?;
    Ok("CSV byte-stable, JSON round-trips".into())
}

type Check = fn(&SelftestOptions) -> CheckResult;

const CHECKS: [(&str, Check); 16] = [
    ("height-cocycle", height_cocycle),
    ("delta-angle-identity", delta_identity),
    ("harmonic-period-index", harmonic_period),
    ("crossing-vs-identity", crossing_agreement),
    ("concatenation-additivity", concatenation),
    ("loop-integrality", loop_integrality),
    ("vertical-translation", vertical_translation),
    ("reduction-invariance", reduction),
    ("conformality", conformality),
    ("rk4-order", rk4_order),
    ("dissipation", dissipation),
    ("twist-sign-law", twist_sign_law),
    ("twist-nonpositivity", nonpositivity),
    ("index-bounds", index_bounds),
    ("asymptotic-rate", asymptotic_rate),
    ("output-stability", output_stability),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check(opts) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for o in outcomes {
        out.push_str(&format!(
            "{} {:width$}  {:7.2}s  {}\n",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        ));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", outcomes.len(), failed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flipped_crossing_sign_is_caught() {
        let opts = SelftestOptions { crossing_orientation: -CROSSING_ORIENTATION };
        let r = crossing_agreement(&opts);
        assert!(r.is_err());
        assert!(crossing_agreement(&SelftestOptions::default()).is_ok());
    }
}
