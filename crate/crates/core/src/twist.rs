//! Twist certificates from the fiber Hessian ∂ₚX_q = ∂²H/∂p², the evolved
//! vertical b_t d_t⁻¹, and an audit of MI ≤ 0 along twisting flows.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaslovError, Result};
use crate::flow::{tangent_flow_sampled, tangent_map};
use crate::linalg::{random_lagrangian, LagrangianFrame, Mat, SymmetricForm};
use crate::path::index_report;
use crate::system::ConformalSystem;
use crate::tolerances::Tolerances;

/// Axis-aligned box in (q, p) and a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub t: (f64, f64),
}

impl Region {
    /// The same interval on every q coordinate and on every p coordinate.
    pub fn uniform(d: usize, q: (f64, f64), p: (f64, f64)) -> Self {
        let mut lower = vec![q.0; d];
        lower.extend(std::iter::repeat_n(p.0, d));
        let mut upper = vec![q.1; d];
        upper.extend(std::iter::repeat_n(p.1, d));
        Region { lower, upper, t: (0.0, 0.0) }
    }
}

/// Points per state axis and per time axis; endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub per_axis: usize,
    #[serde(default = "one")]
    pub time_samples: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StrictTwist,
    SemiTwist,
    Fail,
}

/// A grid point as (t, x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistCertificate {
    pub system: String,
    pub region: Region,
    pub grid: GridSpec,
    pub points: usize,
    pub min_eig: f64,
    /// twist_margin · (1 + max |∂²H/∂p²| over the grid).
    pub margin: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<GridPoint>,
}

const MAX_WITNESSES: usize = 16;

fn axis(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * k as f64 / (n - 1) as f64
    }
}

fn grid_point(region: &Region, grid: &GridSpec, mut idx: usize) -> GridPoint {
    let n = grid.per_axis;
    let x = (0..region.lower.len())
        .map(|i| {
            let k = idx % n;
            idx /= n;
            axis(region.lower[i], region.upper[i], n, k)
        })
        .collect();
    GridPoint { t: axis(region.t.0, region.t.1, grid.time_samples, idx), x }
}

/// Samples ∂²H/∂p² over the grid and classifies the twist.
pub fn twist_certificate(sys: &ConformalSystem, region: &Region, grid: &GridSpec, tol: &Tolerances) -> Result<TwistCertificate> {
    let d = sys.dim();
    if region.lower.len() != 2 * d || region.upper.len() != 2 * d {
        return Err(MaslovError::DimensionMismatch(format!("region must have {} bounds per side", 2 * d)));
    }
    if region.lower.iter().chain(&region.upper).any(|v| !v.is_finite())
        || region.lower.iter().zip(&region.upper).any(|(a, b)| a > b)
    {
        return Err(MaslovError::InvalidArgument("region must be a bounded box with lower ≤ upper".into()));
    }
    if grid.per_axis == 0 || grid.time_samples == 0 {
        return Err(MaslovError::InvalidArgument("grid needs at least one point per axis".into()));
    }
    let total = grid
        .per_axis
        .checked_pow(2 * d as u32)
        .and_then(|n| n.checked_mul(grid.time_samples))
        .ok_or_else(|| MaslovError::InvalidArgument("grid too large".into()))?;

    let samples: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let gp = grid_point(region, grid, i);
            let h = sys.fiber_hessian(gp.t, &gp.x);
            let scale = h.amax();
            let asym = (&h - h.transpose()).amax();
            if asym > tol.fd_sym_tol * (1.0 + scale) {
                return Err(MaslovError::Asymmetric { defect: asym });
            }
            let sym = (&h + h.transpose()) * 0.5;
            let min = sym.symmetric_eigenvalues().min();
            Ok((min, scale))
        })
        .collect::<Result<_>>()?;

    let min_eig = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let scale = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let margin = tol.twist_margin * (1.0 + scale);
    let verdict = if min_eig > margin {
        Verdict::StrictTwist
    } else if min_eig >= -margin {
        Verdict::SemiTwist
    } else {
        Verdict::Fail
    };
    let witnesses = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.0 <= min_eig + margin)
        .take(MAX_WITNESSES)
        .map(|(i, _)| grid_point(region, grid, i))
        .collect();
    Ok(TwistCertificate {
        system: sys.name().to_string(),
        region: region.clone(),
        grid: *grid,
        points: total,
        min_eig,
        margin,
        verdict,
        witnesses,
    })
}

/// Height of Dφ_{t0→t}(V) over the vertical in the horizontal chart: the
/// symmetric form b_t d_t⁻¹ of the flow started at (t0, x0).
pub fn evolved_vertical_height(
    sys: &ConformalSystem,
    x0: &[f64],
    t0: f64,
    t: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<SymmetricForm> {
    let d = sys.dim();
    if t == t0 {
        return SymmetricForm::from_matrix(Mat::zeros(d, d), tol.sig_tol);
    }
    let (blocks, _) = tangent_map(sys, x0, t0, t, dt)?;
    let dt_block = blocks.d_t();
    let sigma_min = dt_block.clone().svd(false, false).singular_values.min();
    if sigma_min <= tol.rank_tol {
        return Err(MaslovError::SingularBlock { t, sigma_min });
    }
    let inv = dt_block.try_inverse().ok_or(MaslovError::SingularBlock { t, sigma_min })?;
    let m = blocks.b_t() * inv;
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricForm::from_matrix(sym, tol.sig_tol)
}

/// One audit case: initial state, initial Lagrangian, horizon from t = 0.
#[derive(Debug, Clone)]
pub struct AuditSample {
    pub x0: Vec<f64>,
    pub l0: LagrangianFrame,
    pub horizon: f64,
}

impl AuditSample {
    /// Uniform state in the box, random frame and horizon in (0, horizon_max].
    pub fn random(region: &Region, horizon_max: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = region.lower.iter().zip(&region.upper).map(|(a, b)| rng.random_range(*a..=*b)).collect();
        let d = region.lower.len() / 2;
        let horizon = horizon_max * (1.0 - rng.random::<f64>()).max(1e-3);
        AuditSample { x0, l0: random_lagrangian(d, rng.random()), horizon }
    }
}

/// Outcome of one audited sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub sample: usize,
    pub alpha_mi: Option<f64>,
    pub mi: Option<i64>,
    pub skipped: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub system: String,
    /// Verdict of the certificate the caller vouched for, if any.
    pub certificate: Option<Verdict>,
    pub samples: usize,
    pub skipped: usize,
    pub histogram: BTreeMap<i64, usize>,
    /// Samples with MI > 0.
    pub violations: Vec<usize>,
    /// Samples whose integration or index computation failed.
    pub failures: Vec<usize>,
    pub records: Vec<AuditRecord>,
}

/// Samples between recorded frames of the audit paths. The paths are
/// refinable, so this only sets the density of the first pass.
const AUDIT_RECORD_EVERY: usize = 10;

fn audit_one(sys: &ConformalSystem, s: &AuditSample, dt: f64, tol: &Tolerances) -> Result<(f64, Option<i64>)> {
    let tr = std::sync::Arc::new(tangent_flow_sampled(sys, &s.x0, (0.0, s.horizon), dt, AUDIT_RECORD_EVERY, tol)?);
    let path = tr.lagrangian_path(&s.l0, tol)?;
    match index_report(&path, tol) {
        Ok(r) => Ok((r.alpha_mi, r.mi)),
        Err(MaslovError::EndpointOnSigma { .. }) => Ok((crate::path::angular_mi(&path, tol)?, None)),
        Err(e) => Err(e),
    }
}

/// Computes MI along Dφ_t(L0) for every sample and collects violations of MI ≤ 0.
pub fn nonpositivity_audit(
    sys: &ConformalSystem,
    samples: &[AuditSample],
    dt: f64,
    certificate: Option<&TwistCertificate>,
    tol: &Tolerances,
) -> AuditReport {
    let records: Vec<AuditRecord> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| match audit_one(sys, s, dt, tol) {
            Ok((a, mi)) => AuditRecord { sample: i, alpha_mi: Some(a), mi, skipped: mi.is_none(), error: None },
            Err(e) => AuditRecord { sample: i, alpha_mi: None, mi: None, skipped: false, error: Some(e.to_string()) },
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for mi in records.iter().filter_map(|r| r.mi) {
        *histogram.entry(mi).or_insert(0) += 1;
    }
    AuditReport {
        system: sys.name().to_string(),
        certificate: certificate.map(|c| c.verdict),
        samples: samples.len(),
        skipped: records.iter().filter(|r| r.skipped).count(),
        histogram,
        violations: records.iter().filter(|r| r.mi.is_some_and(|m| m > 0)).map(|r| r.sample).collect(),
        failures: records.iter().filter(|r| r.error.is_some()).map(|r| r.sample).collect(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtins::*;
    use crate::system::{Expansion, ExpansionTerm, Rate, Topology};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn expansion_system(name: &str, coef: f64, p_pow: u32) -> ConformalSystem {
        let term = ExpansionTerm { coef, q_pow: vec![], p_pow: vec![p_pow], trig: Default::default(), freq: vec![] };
        let h = Expansion::new(1, 1e-5, vec![term]).unwrap();
        ConformalSystem::new(name, Arc::new(h), Rate::Constant(0.0), vec![Topology::Line]).unwrap()
    }

    fn box1() -> Region {
        Region::uniform(1, (-PI, PI), (-2.0, 2.0))
    }

    #[test]
    fn certificate_examples() {
        let tol = Tolerances::default();
        let grid = GridSpec { per_axis: 21, time_samples: 1 };
        let c = twist_certificate(&damped_pendulum(0.1), &box1(), &grid, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::StrictTwist);
        assert!((c.min_eig - 1.0).abs() < 1e-12);
        let c = twist_certificate(&torus_coupled(0.3, 0.0), &Region::uniform(2, (0.0, 6.0), (-1.0, 1.0)), &GridSpec { per_axis: 5, time_samples: 1 }, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::StrictTwist);
        let c = twist_certificate(&expansion_system("neg", -0.5, 2), &box1(), &grid, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let c = twist_certificate(&expansion_system("quartic", 0.25, 4), &box1(), &grid, &tol).unwrap();
        assert_eq!(c.verdict, Verdict::SemiTwist);
        assert!(c.witnesses.iter().all(|w| w.x[1].abs() < 1e-12));
    }

    #[test]
    fn certificate_rejects_bad_region() {
        let tol = Tolerances::default();
        let r = Region { lower: vec![0.0], upper: vec![1.0], t: (0.0, 0.0) };
        assert!(twist_certificate(&harmonic(1), &r, &GridSpec { per_axis: 3, time_samples: 1 }, &tol).is_err());
    }

    #[test]
    fn free_height_is_elapsed_time() {
        let tol = Tolerances::default();
        let f = evolved_vertical_height(&free(2), &[0.0, 0.0, 0.3, -0.1], 0.0, 1.7, 1e-3, &tol).unwrap();
        assert!((f.matrix - Mat::identity(2, 2) * 1.7).amax() < 1e-12);
        let z = evolved_vertical_height(&free(2), &[0.0; 4], 0.5, 0.5, 1e-3, &tol).unwrap();
        assert_eq!(z.nullity, 2);
    }

    #[test]
    fn harmonic_height_singular_at_quarter_period() {
        let tol = Tolerances::default();
        let err = evolved_vertical_height(&harmonic(1), &[0.0, 0.0], 0.0, PI / 2.0, 1e-3, &tol).unwrap_err();
        assert!(matches!(err, MaslovError::SingularBlock { .. }));
    }

    #[test]
    fn sign_law_and_derivative() {
        let tol = Tolerances::default();
        let systems = [damped_pendulum(0.1), torus_coupled(0.3, 0.1), harmonic(2)];
        for sys in &systems {
            let d = sys.dim();
            let x0: Vec<f64> = (0..2 * d).map(|i| 0.3 + 0.2 * i as f64).collect();
            let t0 = 0.4;
            for h in [1e-4, 1e-3, 1e-2] {
                let up = evolved_vertical_height(sys, &x0, t0, t0 + h, 1e-4, &tol).unwrap();
                let down = evolved_vertical_height(sys, &x0, t0, t0 - h, 1e-4, &tol).unwrap();
                assert!(up.is_positive_definite(), "{} h={h}", sys.name());
                assert!(down.is_negative_definite(), "{} h={h}", sys.name());
            }
            let h = 1e-3;
            let up = evolved_vertical_height(sys, &x0, t0, t0 + h, 1e-4, &tol).unwrap();
            let down = evolved_vertical_height(sys, &x0, t0, t0 - h, 1e-4, &tol).unwrap();
            let deriv = (up.matrix - down.matrix) / (2.0 * h);
            assert!((deriv - sys.fiber_hessian(t0, &x0)).amax() < 1e-4, "{}", sys.name());
        }
    }

    #[test]
    fn audit_harmonic_full_period() {
        let tol = Tolerances::default();
        let samples: Vec<AuditSample> = (0..20)
            .map(|k| AuditSample {
                x0: vec![0.1 * k as f64, -0.2],
                l0: LagrangianFrame::line(0.05 + PI * k as f64 / 20.7),
                horizon: 2.0 * PI,
            })
            .collect();
        let rep = nonpositivity_audit(&harmonic(1), &samples, 1e-3, None, &tol);
        assert_eq!(rep.skipped, 0);
        assert_eq!(rep.histogram.get(&-2), Some(&20), "{:?}", rep.histogram);
    }

    #[test]
    fn audit_free_horizontal() {
        let tol = Tolerances::default();
        let samples: Vec<AuditSample> =
            (0..5).map(|k| AuditSample { x0: vec![0.0, k as f64 - 2.0], l0: LagrangianFrame::horizontal(1), horizon: 5.0 }).collect();
        let rep = nonpositivity_audit(&free(1), &samples, 1e-3, None, &tol);
        assert_eq!(rep.histogram.get(&0), Some(&5));
    }

    #[test]
    fn audit_damped_pendulum() {
        let tol = Tolerances::default();
        let sys = damped_pendulum(0.1);
        let cert = twist_certificate(&sys, &box1(), &GridSpec { per_axis: 11, time_samples: 1 }, &tol).unwrap();
        let samples: Vec<AuditSample> = (0..30).map(|s| AuditSample::random(&box1(), 10.0, s)).collect();
        let rep = nonpositivity_audit(&sys, &samples, 1e-3, Some(&cert), &tol);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert!(rep.failures.is_empty(), "{:?}", rep.records);
        assert_eq!(rep.certificate, Some(Verdict::StrictTwist));
    }
}
