//! Long-horizon index rates: αMI(T)/T at a point, Birkhoff-style averages
//! after a burn-in, and scans of a Lagrangian graph for bounded-index points.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaslovError, Result};
use crate::flow::tangent_flow_sampled;
use crate::linalg::{vertical_intersection_dim, LagrangianFrame, Mat};
use crate::path::{angular_mi, boundary_term};
use crate::system::{periodic_sin, ConformalSystem, Trig};
use crate::tolerances::Tolerances;
use crate::unitary::angles;

/// Longest stretch integrated as one refinable path; αMI is additive.
const CHUNK: f64 = 10.0;

/// Steps between stored frames of each chunk.
const RECORD_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEstimate {
    pub rate: f64,
    pub horizons: Vec<f64>,
    /// αMI(0, T) / T for every horizon.
    pub partials: Vec<f64>,
    pub cauchy_gap: f64,
    pub converged: bool,
}

/// Carries the base point and transported frame forward in time.
struct Transport<'a> {
    sys: &'a ConformalSystem,
    dt: f64,
    tol: &'a Tolerances,
    escape_bound: Option<f64>,
    t: f64,
    x: Vec<f64>,
    l: LagrangianFrame,
}

impl Transport<'_> {
    fn check_escape(&self, states: &[Vec<f64>], times: &[f64]) -> Result<()> {
        let Some(bound) = self.escape_bound else { return Ok(()) };
        for (x, &t) in states.iter().zip(times) {
            let norm = self.sys.wrap_state(x).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > bound {
                return Err(MaslovError::Escape { t, norm });
            }
        }
        Ok(())
    }

    /// Moves to `t1` and returns αMI over [t, t1].
    fn advance(&mut self, t1: f64) -> Result<f64> {
        let mut alpha = 0.0;
        while self.t < t1 {
            let end = if t1 - self.t > CHUNK { self.t + CHUNK } else { t1 };
            let tr = Arc::new(tangent_flow_sampled(self.sys, &self.x, (self.t, end), self.dt, RECORD_EVERY, self.tol)?);
            self.check_escape(&tr.states, &tr.times)?;
            let path = tr.lagrangian_path(&self.l, self.tol)?;
            alpha += angular_mi(&path, self.tol)?;
            self.l = path.frames().last().unwrap().clone();
            self.x = self.sys.wrap_state(tr.states.last().unwrap());
            self.t = end;
        }
        Ok(alpha)
    }
}

fn check_common(sys: &ConformalSystem, x0: &[f64], l0: &LagrangianFrame, dt: f64) -> Result<()> {
    let d = sys.dim();
    if x0.len() != 2 * d || l0.dim() != d {
        return Err(MaslovError::DimensionMismatch(format!("state and frame must match d = {d}")));
    }
    if !(dt > 0.0) {
        return Err(MaslovError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Horizons T/4, T/2, 3T/4, T.
pub fn default_horizons(t_max: f64) -> Vec<f64> {
    (1..=4).map(|k| t_max * k as f64 / 4.0).collect()
}

/// Spread of the partial rates over the second half of the horizons, floored
/// at 1/T_max: a single horizon cannot resolve the rate better than that.
fn cauchy_gap(horizons: &[f64], partials: &[f64]) -> f64 {
    let n = partials.len();
    let window = &partials[n - (n / 2).max(1)..];
    let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo).max(1.0 / horizons[n - 1])
}

/// rate = αMI(0, T_max) / T_max with partial rates at every horizon.
pub fn asymptotic_index(
    sys: &ConformalSystem,
    x0: &[f64],
    l0: &LagrangianFrame,
    horizons: &[f64],
    dt: f64,
    tol: &Tolerances,
) -> Result<AsymptoticEstimate> {
    check_common(sys, x0, l0, dt)?;
    if horizons.is_empty() || horizons[0] <= 0.0 || horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MaslovError::InvalidArgument("horizons must be positive and increasing".into()));
    }
    let mut tr = Transport { sys, dt, tol, escape_bound: None, t: 0.0, x: x0.to_vec(), l: l0.clone() };
    let mut alpha = 0.0;
    let mut partials = Vec::with_capacity(horizons.len());
    for &h in horizons {
        alpha += tr.advance(h)?;
        partials.push(alpha / h);
    }
    let gap = cauchy_gap(horizons, &partials);
    Ok(AsymptoticEstimate {
        rate: *partials.last().unwrap(),
        horizons: horizons.to_vec(),
        partials,
        cauchy_gap: gap,
        converged: gap < tol.conv_tol,
    })
}

/// αMI(burn_in, T) / (T − burn_in) along the orbit of x0; fails with
/// `Escape` when the orbit leaves the ball of radius escape_bound.
pub fn measure_index_estimate(
    sys: &ConformalSystem,
    x0: &[f64],
    l0: &LagrangianFrame,
    horizon: f64,
    burn_in: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<f64> {
    check_common(sys, x0, l0, dt)?;
    if !(horizon > burn_in) || burn_in < 0.0 {
        return Err(MaslovError::InvalidArgument(format!("need 0 ≤ burn_in < T, got {burn_in} and {horizon}")));
    }
    let mut tr = Transport { sys, dt, tol, escape_bound: Some(tol.escape_bound), t: 0.0, x: x0.to_vec(), l: l0.clone() };
    if burn_in > 0.0 {
        tr.advance(burn_in)?;
    }
    Ok(tr.advance(horizon)? / (horizon - burn_in))
}

/// One term A · trig(k · q) of the generating function S of the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphTerm {
    pub amplitude: f64,
    pub freq: Vec<f64>,
    pub trig: Trig,
}

/// The graph p = c + ∇S(q) of a closed 1-form, S = Σ Aᵢ trig(kᵢ · q).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GraphParam {
    pub c: Vec<f64>,
    #[serde(default)]
    pub terms: Vec<GraphTerm>,
}

impl GraphParam {
    pub fn zero_section(d: usize) -> Self {
        GraphParam { c: vec![0.0; d], terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.terms.iter().any(|t| t.freq.len() != d || t.trig == Trig::None) {
            return Err(MaslovError::Config(format!("graph terms need trig and {d} frequencies")));
        }
        Ok(())
    }

    fn phase(t: &GraphTerm, q: &[f64]) -> f64 {
        t.freq.iter().zip(q).map(|(k, x)| k * x).sum()
    }

    /// Covector p(q).
    pub fn covector(&self, q: &[f64]) -> Vec<f64> {
        let mut p = self.c.clone();
        for t in &self.terms {
            let phi = Self::phase(t, q);
            let dtrig = match t.trig {
                Trig::Cos => -periodic_sin(phi),
                Trig::Sin => phi.cos(),
                Trig::None => 0.0,
            };
            for (pi, k) in p.iter_mut().zip(&t.freq) {
                *pi += t.amplitude * k * dtrig;
            }
        }
        p
    }

    /// Tangent space of the graph at q: the graph of ∇²S(q).
    pub fn tangent(&self, q: &[f64]) -> Result<LagrangianFrame> {
        let d = self.dim();
        let mut s = Mat::zeros(d, d);
        for t in &self.terms {
            let phi = Self::phase(t, q);
            let d2trig = match t.trig {
                Trig::Cos => -phi.cos(),
                Trig::Sin => -periodic_sin(phi),
                Trig::None => 0.0,
            };
            for i in 0..d {
                for j in 0..d {
                    s[(i, j)] += t.amplitude * t.freq[i] * t.freq[j] * d2trig;
                }
            }
        }
        LagrangianFrame::graph(&s)
    }
}

/// Per-point outcome of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub min_mi: i64,
    pub max_mi: i64,
    /// Integer times where the index was undefined or unreliable.
    pub skips: usize,
    /// Checkpoints where |αMI − MI| ≥ d.
    pub bound_violations: usize,
    pub error: Option<String>,
}

impl PointResult {
    pub fn bound(&self) -> i64 {
        self.min_mi.abs().max(self.max_mi.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub system: String,
    pub graph_param: GraphParam,
    pub horizon: f64,
    pub points: Vec<PointResult>,
    /// Index of the point minimising max |running MI|.
    pub best: Option<usize>,
    pub best_bound: Option<i64>,
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: usize, base: u32) -> f64 {
    let b = base as usize;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Base points on 𝕋ᵈ: a uniform grid for d ≤ 2, a Halton sequence otherwise.
pub fn seed_points(d: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let two_pi = 2.0 * PI;
    match d {
        0 => Err(MaslovError::InvalidArgument("dimension must be positive".into())),
        1 => Ok((0..n).map(|k| vec![two_pi * k as f64 / n as f64]).collect()),
        2 => {
            let m = (n as f64).sqrt().ceil() as usize;
            Ok((0..n).map(|k| vec![two_pi * (k % m) as f64 / m as f64, two_pi * (k / m) as f64 / m as f64]).collect())
        }
        _ if d <= PRIMES.len() => Ok((0..n)
            .map(|k| PRIMES[..d].iter().map(|&b| two_pi * radical_inverse(k + 1, b)).collect())
            .collect()),
        _ => Err(MaslovError::InvalidArgument(format!("scan supports d ≤ {}", PRIMES.len()))),
    }
}

fn scan_point(
    sys: &ConformalSystem,
    graph: &GraphParam,
    index: usize,
    q0: Vec<f64>,
    horizon: f64,
    dt: f64,
    tol: &Tolerances,
) -> PointResult {
    let d = sys.dim();
    let p0 = graph.covector(&q0);
    let mut res = PointResult { index, q0: q0.clone(), p0: p0.clone(), min_mi: 0, max_mi: 0, skips: 0, bound_violations: 0, error: None };
    let run = |res: &mut PointResult| -> Result<()> {
        let l0 = graph.tangent(&q0)?;
        let start_angles = angles(&l0)?;
        let mut x0 = q0.clone();
        x0.extend_from_slice(&p0);
        let mut tr = Transport { sys, dt, tol, escape_bound: None, t: 0.0, x: x0, l: l0 };
        let mut alpha = 0.0;
        let mut k = 1.0;
        while k <= horizon + 1e-9 {
            alpha += tr.advance(k)?;
            k += 1.0;
            if vertical_intersection_dim(&tr.l, tol.rank_tol) > 0 {
                res.skips += 1;
                continue;
            }
            let raw = alpha - boundary_term(&start_angles, &angles(&tr.l)?);
            let mi = raw.round();
            if (raw - mi).abs() >= tol.residual_tol {
                res.skips += 1;
                continue;
            }
            if (alpha - mi).abs() >= d as f64 {
                res.bound_violations += 1;
            }
            res.min_mi = res.min_mi.min(mi as i64);
            res.max_mi = res.max_mi.max(mi as i64);
        }
        Ok(())
    };
    if let Err(e) = run(&mut res) {
        res.error = Some(e.to_string());
    }
    res
}

/// Seeds `n_points` on the graph, tracks the running MI at every integer
/// time up to `horizon`, and reports per-point bounds and the best point.
pub fn graph_scan(
    sys: &ConformalSystem,
    graph: &GraphParam,
    n_points: usize,
    horizon: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<ScanResult> {
    if graph.dim() != sys.dim() {
        return Err(MaslovError::DimensionMismatch(format!("graph has d = {}, system d = {}", graph.dim(), sys.dim())));
    }
    graph.validate()?;
    if n_points == 0 || !(horizon > 0.0) || !(dt > 0.0) {
        return Err(MaslovError::InvalidArgument("scan needs n_points ≥ 1, horizon > 0, dt > 0".into()));
    }
    let seeds = seed_points(sys.dim(), n_points)?;
    let points: Vec<PointResult> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, q0)| scan_point(sys, graph, i, q0, horizon, dt, tol))
        .collect();
    let best = points
        .iter()
        .filter(|p| p.error.is_none())
        .min_by_key(|p| (p.bound(), p.index))
        .map(|p| p.index);
    Ok(ScanResult {
        system: sys.name().to_string(),
        graph_param: graph.clone(),
        horizon,
        best_bound: best.map(|i| points[i].bound()),
        best,
        points,
    })
}
