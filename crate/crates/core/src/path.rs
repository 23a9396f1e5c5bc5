//! Maslov indices of sampled Lagrangian paths.
//!
//! Two independent routes are provided:
//! * `angular_mi` lifts arg Δ along the path; `maslov_index` rounds
//!   αMI − (1/π) Σ (θⱼ(b) − θⱼ(a)) to the nearest integer;
//! * `crossing_mi` locates the times where an angle passes through π/2 and
//!   sums their signs.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use crate::error::{MaslovError, Result};
use crate::linalg::{vertical_intersection_dim, LagrangianFrame};
use crate::tolerances::Tolerances;
use crate::unitary::{angles, delta, AngleSpectrum};

/// Sign given to a crossing where the angle nearest the cut increases
/// through π/2 (mod π). With +1 the harmonic oscillator has MI = −2 per period.
pub const CROSSING_ORIENTATION: i64 = 1;

/// Maximal bisection depth when refining a path between two samples.
const MAX_REFINE_DEPTH: usize = 48;

/// Evaluates the path at an intermediate time.
pub type Refiner = Arc<dyn Fn(f64) -> Result<LagrangianFrame> + Send + Sync>;

/// Time-stamped Lagrangian frames, optionally refinable between samples.
#[derive(Clone)]
pub struct LagrangianPath {
    times: Vec<f64>,
    frames: Vec<LagrangianFrame>,
    refine: Option<Refiner>,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath")
            .field("samples", &self.times.len())
            .field("span", &(self.start_time(), self.end_time()))
            .field("refinable", &self.refine.is_some())
            .finish()
    }
}

impl LagrangianPath {
    pub fn new(times: Vec<f64>, frames: Vec<LagrangianFrame>) -> Result<Self> {
        if times.is_empty() || times.len() != frames.len() {
            return Err(MaslovError::InvalidArgument(format!(
                "path needs matching non-empty times and frames ({} vs {})",
                times.len(),
                frames.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MaslovError::InvalidArgument("path times must be strictly increasing".into()));
        }
        let d = frames[0].dim();
        if frames.iter().any(|f| f.dim() != d) {
            return Err(MaslovError::DimensionMismatch("path frames differ in dimension".into()));
        }
        Ok(LagrangianPath { times, frames, refine: None })
    }

    /// Samples `f` at `times` and keeps it as the refinement callback.
    pub fn from_fn<F>(times: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<LagrangianFrame> + Send + Sync + 'static,
    {
        let frames = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(times, frames)?.with_refiner(Arc::new(f)))
    }

    pub fn with_refiner(mut self, refine: Refiner) -> Self {
        self.refine = Some(refine);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[LagrangianFrame] {
        &self.frames
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_refinable(&self) -> bool {
        self.refine.is_some()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn frame_at(&self, t: f64) -> Result<LagrangianFrame> {
        if let Ok(i) = self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            return Ok(self.frames[i].clone());
        }
        match &self.refine {
            Some(r) => r(t),
            None => Err(MaslovError::NotRefinable),
        }
    }

    /// Same subspaces traversed backwards, on the time interval [a, b].
    pub fn reversed(&self) -> Self {
        let a = self.start_time();
        let b = self.end_time();
        let times: Vec<f64> = self.times.iter().rev().map(|t| a + b - t).collect();
        let frames: Vec<LagrangianFrame> = self.frames.iter().rev().cloned().collect();
        let refine = self.refine.clone().map(|r| -> Refiner { Arc::new(move |t: f64| r(a + b - t)) });
        LagrangianPath { times, frames, refine }
    }

    /// Sub-path on sample indices `from..=to`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to >= self.len() {
            return Err(MaslovError::InvalidArgument(format!("bad slice {from}..={to}")));
        }
        Ok(LagrangianPath {
            times: self.times[from..=to].to_vec(),
            frames: self.frames[from..=to].to_vec(),
            refine: self.refine.clone(),
        })
    }

    /// Concatenation: `other` must start where `self` ends (same time, same subspace).
    pub fn concat(&self, other: &LagrangianPath) -> Result<Self> {
        let tj = self.end_time();
        if (other.start_time() - tj).abs() > 1e-12 * (1.0 + tj.abs()) {
            return Err(MaslovError::InvalidArgument("paths do not share the junction time".into()));
        }
        if self.frames.last().unwrap().distance(&other.frames[0]) > 1e-8 {
            return Err(MaslovError::InvalidArgument("paths do not share the junction frame".into()));
        }
        let mut times = self.times.clone();
        let mut frames = self.frames.clone();
        times.extend_from_slice(&other.times[1..]);
        frames.extend_from_slice(&other.frames[1..]);
        let refine = match (&self.refine, &other.refine) {
            (Some(r1), Some(r2)) => {
                let (r1, r2) = (r1.clone(), r2.clone());
                Some(Arc::new(move |t: f64| if t <= tj { r1(t) } else { r2(t) }) as Refiner)
            }
            _ => None,
        };
        Ok(LagrangianPath { times, frames, refine })
    }

    /// Applies a frame map to every sample and to the refinement callback.
    pub fn map_frames<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&LagrangianFrame) -> Result<LagrangianFrame> + Send + Sync + 'static,
    {
        let frames = self.frames.iter().map(&f).collect::<Result<Vec<_>>>()?;
        let f = Arc::new(f);
        let refine = self.refine.clone().map(|r| -> Refiner {
            let f = f.clone();
            Arc::new(move |t: f64| f(&r(t)?))
        });
        Ok(LagrangianPath { times: self.times.clone(), frames, refine })
    }
}

/// A located crossing with Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub sign: i64,
    /// Distance to π/2 of the second angle nearest the cut.
    pub min_angle_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub alpha_mi: f64,
    pub mi: Option<i64>,
    /// (1/π) Σ (θⱼ(b) − θⱼ(a)).
    pub boundary_term: f64,
    /// alpha_mi − boundary_term − mi.
    pub residual: f64,
    pub crossings: Vec<Crossing>,
    /// Set when the sample grid had to be refined to unwrap Δ.
    pub aliasing_flag: bool,
    /// Set when some sample has two or more angles close to π/2.
    pub degenerate_flag: bool,
}

/// Lifted arg Δ at every sample, plus whether refinement was needed.
#[derive(Debug, Clone)]
pub struct UnwrappedPhase {
    pub phases: Vec<f64>,
    pub refined: bool,
}

impl UnwrappedPhase {
    pub fn total(&self) -> f64 {
        self.phases.last().unwrap() - self.phases[0]
    }

    pub fn alpha_mi(&self) -> f64 {
        self.total() / (2.0 * PI)
    }
}

/// Representative of x mod 2π in (−π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn lifted_increment(
    path: &LagrangianPath,
    t0: f64,
    a0: f64,
    t1: f64,
    a1: f64,
    tol: &Tolerances,
    depth: usize,
    refined: &mut bool,
) -> Result<f64> {
    let step = wrap_pi(a1 - a0);
    if step.abs() <= tol.unwrap_guard {
        return Ok(step);
    }
    let r = match &path.refine {
        Some(r) if depth < MAX_REFINE_DEPTH => r,
        _ => return Err(MaslovError::Aliasing { t0, t1, jump: step.abs() }),
    };
    *refined = true;
    let tm = 0.5 * (t0 + t1);
    let am = delta(&r(tm)?).arg;
    Ok(lifted_increment(path, t0, a0, tm, am, tol, depth + 1, refined)?
        + lifted_increment(path, tm, am, t1, a1, tol, depth + 1, refined)?)
}

/// Continuous lift of arg Δ along the path, starting at the principal argument.
pub fn unwrap_delta(path: &LagrangianPath, tol: &Tolerances) -> Result<UnwrappedPhase> {
    let args: Vec<f64> = path.frames.iter().map(|f| delta(f).arg).collect();
    let mut phases = Vec::with_capacity(args.len());
    phases.push(args[0]);
    let mut refined = false;
    for k in 1..args.len() {
        let inc = lifted_increment(
            path,
            path.times[k - 1],
            args[k - 1],
            path.times[k],
            args[k],
            tol,
            0,
            &mut refined,
        )?;
        phases.push(phases[k - 1] + inc);
    }
    Ok(UnwrappedPhase { phases, refined })
}

/// αMI = (θ(b) − θ(a)) / 2π for the continuous lift θ of arg Δ.
pub fn angular_mi(path: &LagrangianPath, tol: &Tolerances) -> Result<f64> {
    Ok(unwrap_delta(path, tol)?.alpha_mi())
}

fn check_endpoint(f: &LagrangianFrame, t: f64, tol: &Tolerances) -> Result<()> {
    let dim = vertical_intersection_dim(f, tol.rank_tol);
    if dim > 0 {
        return Err(MaslovError::EndpointOnSigma { t, dim });
    }
    Ok(())
}

/// (1/π) Σ (θⱼ(b) − θⱼ(a)).
pub fn boundary_term(a: &AngleSpectrum, b: &AngleSpectrum) -> f64 {
    (b.sum() - a.sum()) / PI
}

/// Threshold on |cos θ| (q-block singular values) for the degeneracy diagnostic.
const DEGENERACY_COS: f64 = 1e-3;

fn has_degenerate_sample(path: &LagrangianPath) -> bool {
    path.frames.iter().any(|f| {
        let sv = f.q_block().svd(false, false).singular_values;
        sv.iter().filter(|&&s| s < DEGENERACY_COS).count() >= 2
    })
}

/// Index report through the αMI–MI identity.
pub fn index_report(path: &LagrangianPath, tol: &Tolerances) -> Result<IndexReport> {
    let first = &path.frames[0];
    let last = path.frames.last().unwrap();
    check_endpoint(first, path.start_time(), tol)?;
    check_endpoint(last, path.end_time(), tol)?;
    let unwrapped = unwrap_delta(path, tol)?;
    let alpha_mi = unwrapped.alpha_mi();
    let boundary = boundary_term(&angles(first)?, &angles(last)?);
    let raw = alpha_mi - boundary;
    let mi = raw.round();
    let residual = raw - mi;
    if residual.abs() >= tol.residual_tol {
        return Err(MaslovError::ResidualTooLarge { residual, tol: tol.residual_tol });
    }
    Ok(IndexReport {
        alpha_mi,
        mi: Some(mi as i64),
        boundary_term: boundary,
        residual,
        crossings: Vec::new(),
        aliasing_flag: unwrapped.refined,
        degenerate_flag: has_degenerate_sample(path),
    })
}

/// Integer Maslov index of a path with endpoints off Σ.
pub fn maslov_index(path: &LagrangianPath, tol: &Tolerances) -> Result<i64> {
    Ok(index_report(path, tol)?.mi.expect("identity report carries mi"))
}

/// Doubled angles 2θⱼ ∈ (−π, π], ascending.
fn doubled(s: &AngleSpectrum) -> Vec<f64> {
    s.angles.iter().map(|t| 2.0 * t).collect()
}

/// Matches the eigenvalues e^{2iθ} of two nearby spectra along the circle.
/// Returns, per eigenvalue of `a`, the signed displacement to its partner
/// and whether that displacement carries it through −1 (+1 upward, −1
/// downward, 0 not at all).
fn match_spectra(a: &AngleSpectrum, b: &AngleSpectrum) -> Vec<(f64, i64)> {
    let (pa, pb) = (doubled(a), doubled(b));
    let d = pa.len();
    let mut best: Option<(f64, Vec<(f64, i64)>)> = None;
    for shift in 0..d {
        let moves: Vec<(f64, i64)> = (0..d)
            .map(|i| {
                let delta = wrap_pi(pb[(i + shift) % d] - pa[i]);
                // the representatives jump by 2π exactly when the move passes −1
                let gap = pb[(i + shift) % d] - pa[i];
                let wrap = if delta > 0.0 && gap < 0.0 {
                    1
                } else if delta < 0.0 && gap > 0.0 {
                    -1
                } else {
                    0
                };
                (delta, wrap)
            })
            .collect();
        let worst = moves.iter().map(|m| m.0.abs()).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, moves));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

/// Largest displacement of the matching, on the doubled angles.
fn spectral_jump(moves: &[(f64, i64)]) -> f64 {
    moves.iter().map(|m| m.0.abs()).fold(0.0, f64::max)
}

struct CrossingScan<'a> {
    path: &'a LagrangianPath,
    refine: &'a Refiner,
    tol: &'a Tolerances,
    orientation: i64,
    time_tol: f64,
    crossings: Vec<Crossing>,
}

impl CrossingScan<'_> {
    fn spectrum(&self, t: f64) -> Result<AngleSpectrum> {
        angles(&(self.refine)(t)?)
    }

    /// Bisects every interval whose matched eigenvalues pass through −1
    /// until it is shorter than `time_tol`, then classifies the crossing.
    fn interval(&mut self, t0: f64, s0: &AngleSpectrum, t1: f64, s1: &AngleSpectrum, depth: usize) -> Result<()> {
        let moves = match_spectra(s0, s1);
        let coarse = spectral_jump(&moves) > FRAC_PI_4;
        let wraps = moves.iter().filter(|m| m.1 != 0).count();
        if !coarse && wraps == 0 {
            return Ok(());
        }
        if depth < MAX_REFINE_DEPTH && t1 - t0 > self.time_tol {
            let tm = 0.5 * (t0 + t1);
            let sm = self.spectrum(tm)?;
            self.interval(t0, s0, tm, &sm, depth + 1)?;
            return self.interval(tm, &sm, t1, s1, depth + 1);
        }
        if coarse {
            return Err(MaslovError::Aliasing { t0, t1, jump: spectral_jump(&moves) });
        }
        self.classify(0.5 * (t0 + t1), wraps)
    }

    fn classify(&mut self, t: f64, wraps: usize) -> Result<()> {
        let at = self.spectrum(t)?;
        let dists = at.cut_distances();
        let second = dists.get(1).cloned().unwrap_or(FRAC_PI_2);
        if wraps > 1 || second < self.tol.angle_tol.sqrt() {
            let count = dists.iter().filter(|&&x| x < self.tol.angle_tol.sqrt()).count().max(wraps);
            return Err(MaslovError::DegenerateCrossing { t, count });
        }
        // velocity of the crossing angle from a symmetric difference
        let h = (1e-6 * self.path.horizon()).max(1e3 * self.time_tol);
        let lo = (t - h).max(self.path.start_time());
        let hi = (t + h).min(self.path.end_time());
        let moves = match_spectra(&self.spectrum(lo)?, &self.spectrum(hi)?);
        let crossing = moves.iter().find(|m| m.1 != 0);
        let velocity = crossing.map_or(0.0, |m| 0.5 * m.0 / (hi - lo));
        if velocity.abs() < self.tol.vel_tol {
            return Err(MaslovError::TangentialCrossing { t, velocity });
        }
        let sign = if velocity > 0.0 { self.orientation } else { -self.orientation };
        self.crossings.push(Crossing { time: t, sign, min_angle_distance: second });
        Ok(())
    }
}

/// Crossing-counting Maslov index, independent of the Δ lift. Needs a
/// refinable path with endpoints off Σ.
pub fn crossing_mi(path: &LagrangianPath, tol: &Tolerances) -> Result<IndexReport> {
    crossing_mi_oriented(path, tol, CROSSING_ORIENTATION)
}

/// As `crossing_mi` with an explicit orientation constant (±1); used by the
/// self-test to check that a flipped convention is caught.
pub fn crossing_mi_oriented(path: &LagrangianPath, tol: &Tolerances, orientation: i64) -> Result<IndexReport> {
    let refine = path.refine.as_ref().ok_or(MaslovError::NotRefinable)?;
    let first = &path.frames[0];
    let last = path.frames.last().unwrap();
    check_endpoint(first, path.start_time(), tol)?;
    check_endpoint(last, path.end_time(), tol)?;
    let mut scan = CrossingScan {
        path,
        refine,
        tol,
        orientation,
        time_tol: tol.time_tol * path.horizon().max(f64::MIN_POSITIVE),
        crossings: Vec::new(),
    };
    let spectra = path.frames.iter().map(angles).collect::<Result<Vec<_>>>()?;
    for k in 1..path.len() {
        scan.interval(path.times[k - 1], &spectra[k - 1], path.times[k], &spectra[k], 0)?;
    }
    let mi: i64 = scan.crossings.iter().map(|c| c.sign).sum();
    let unwrapped = unwrap_delta(path, tol)?;
    let alpha_mi = unwrapped.alpha_mi();
    let boundary = boundary_term(&spectra[0], spectra.last().unwrap());
    Ok(IndexReport {
        alpha_mi,
        mi: Some(mi),
        boundary_term: boundary,
        residual: alpha_mi - boundary - mi as f64,
        crossings: scan.crossings,
        aliasing_flag: unwrapped.refined,
        degenerate_flag: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotating_line(theta0: f64, rate: f64, t1: f64, n: usize) -> LagrangianPath {
        let times: Vec<f64> = (0..=n).map(|k| t1 * k as f64 / n as f64).collect();
        LagrangianPath::from_fn(times, move |t| Ok(LagrangianFrame::line(theta0 + rate * t))).unwrap()
    }

    #[test]
    fn constant_path_has_zero_indices() {
        let tol = Tolerances::default();
        let l = LagrangianFrame::line(0.3);
        let p = LagrangianPath::new(vec![0.0, 1.0, 2.0], vec![l.clone(), l.clone(), l]).unwrap();
        assert_eq!(angular_mi(&p, &tol).unwrap(), 0.0);
        assert_eq!(maslov_index(&p, &tol).unwrap(), 0);
    }

    #[test]
    fn half_turn_clockwise_is_minus_one() {
        let tol = Tolerances::default();
        let p = rotating_line(0.2, -1.0, PI, 400);
        assert!((angular_mi(&p, &tol).unwrap() + 1.0).abs() < 1e-12);
        assert!((angular_mi(&p.reversed(), &tol).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_clockwise_turn_has_two_negative_crossings() {
        let tol = Tolerances::default();
        let p = rotating_line(0.2, -1.0, 2.0 * PI, 300);
        assert_eq!(maslov_index(&p, &tol).unwrap(), -2);
        let rep = crossing_mi(&p, &tol).unwrap();
        assert_eq!(rep.mi, Some(-2));
        assert_eq!(rep.crossings.len(), 2);
        assert!(rep.crossings.iter().all(|c| c.sign == -1));
        // crossings where the line is vertical: 0.2 − t = −π/2 (mod π)
        assert!((rep.crossings[0].time - (0.2 + FRAC_PI_2)).abs() < 1e-8);
        assert!((rep.crossings[1].time - (0.2 + 1.5 * PI)).abs() < 1e-8);
    }

    fn product_path(w1: f64, w2: f64, t1: f64) -> LagrangianPath {
        let times: Vec<f64> = (0..=400).map(|k| t1 * k as f64 / 400.0).collect();
        LagrangianPath::from_fn(times, move |t| {
            let (a, b) = (0.2 + w1 * t, 0.5 + w2 * t);
            let mut m = crate::linalg::Mat::zeros(4, 2);
            m[(0, 0)] = a.cos();
            m[(2, 0)] = a.sin();
            m[(1, 1)] = b.cos();
            m[(3, 1)] = b.sin();
            LagrangianFrame::new(m)
        })
        .unwrap()
    }

    #[test]
    fn independent_angles_in_two_dimensions() {
        let tol = Tolerances::default();
        let p = product_path(-1.0, -2.0, 2.0 * PI);
        assert_eq!(maslov_index(&p, &tol).unwrap(), -6);
        assert_eq!(crossing_mi(&p, &tol).unwrap().mi, Some(-6));
        // opposite rotations cancel, but both crossings are found
        let p = product_path(-1.0, 1.0, PI);
        let rep = crossing_mi(&p, &tol).unwrap();
        assert_eq!(rep.mi, Some(0));
        assert_eq!(rep.crossings.len(), 2);
        assert_eq!(maslov_index(&p, &tol).unwrap(), 0);
    }

    #[test]
    fn transverse_path_has_zero_index() {
        let tol = Tolerances::default();
        // oscillates inside (−π/2, π/2)
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let p = LagrangianPath::from_fn(times, |t| Ok(LagrangianFrame::line(1.2 * t.sin()))).unwrap();
        assert_eq!(maslov_index(&p, &tol).unwrap(), 0);
        assert_eq!(crossing_mi(&p, &tol).unwrap().mi, Some(0));
    }

    #[test]
    fn endpoint_on_sigma_is_rejected() {
        let tol = Tolerances::default();
        let p = rotating_line(FRAC_PI_2, -1.0, 1.0, 10);
        assert!(matches!(maslov_index(&p, &tol), Err(MaslovError::EndpointOnSigma { .. })));
    }

    #[test]
    fn coarse_static_path_aliases() {
        let tol = Tolerances::default();
        let frames = vec![LagrangianFrame::line(0.0), LagrangianFrame::line(1.2)];
        let p = LagrangianPath::new(vec![0.0, 1.0], frames).unwrap();
        assert!(matches!(angular_mi(&p, &tol), Err(MaslovError::Aliasing { .. })));
        assert!(matches!(crossing_mi(&p, &tol), Err(MaslovError::NotRefinable)));
    }

    #[test]
    fn refinement_resolves_coarse_grid() {
        let tol = Tolerances::default();
        let p = rotating_line(0.1, -1.0, 2.0 * PI, 3);
        let rep = index_report(&p, &tol).unwrap();
        assert!(rep.aliasing_flag);
        assert_eq!(rep.mi, Some(-2));
    }

    #[test]
    fn tangential_crossing_is_reported() {
        let tol = Tolerances::default();
        // θ(t) = π/2 + (t − 1)³ crosses π/2 with zero velocity
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let p = LagrangianPath::from_fn(times, |t| Ok(LagrangianFrame::line(FRAC_PI_2 + (t - 1.0).powi(3)))).unwrap();
        assert!(matches!(crossing_mi(&p, &tol), Err(MaslovError::TangentialCrossing { .. })));
        // the identity route is insensitive
        assert_eq!(maslov_index(&p, &tol).unwrap(), 1);
    }

    #[test]
    fn concat_is_additive() {
        let tol = Tolerances::default();
        let a = rotating_line(0.2, -1.0, 2.0, 100);
        let b_times: Vec<f64> = (0..=100).map(|k| 2.0 + 3.0 * k as f64 / 100.0).collect();
        let b = LagrangianPath::from_fn(b_times, |t| Ok(LagrangianFrame::line(0.2 - t))).unwrap();
        let ab = a.concat(&b).unwrap();
        let (ia, ib, iab) = (
            maslov_index(&a, &tol).unwrap(),
            maslov_index(&b, &tol).unwrap(),
            maslov_index(&ab, &tol).unwrap(),
        );
        assert_eq!(ia + ib, iab);
        let sum = angular_mi(&a, &tol).unwrap() + angular_mi(&b, &tol).unwrap();
        assert!((sum - angular_mi(&ab, &tol).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wrap_pi_range() {
        assert_eq!(wrap_pi(PI), PI);
        assert!((wrap_pi(-PI) - PI).abs() < 1e-15);
        assert!((wrap_pi(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
    }
}
