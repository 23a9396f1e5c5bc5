//! Fixed-step RK4 integration of conformal systems and of their variational
//! equation Ṁ = DX(t, x(t)) M, M(0) = I, as one coupled system.

use std::sync::Arc;

use crate::error::{MaslovError, Result};
use crate::linalg::{complex_structure, LagrangianFrame, Mat};
use crate::path::LagrangianPath;
use crate::system::ConformalSystem;
use crate::tolerances::Tolerances;

/// Number of equal RK4 steps covering `span` with step at most `dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MaslovError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MaslovError::NonFinite { t })
    }
}

fn rk4_state(sys: &ConformalSystem, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut y = vec![0.0; n];
    sys.vector_field(t, x, &mut k1);
    for i in 0..n {
        y[i] = x[i] + 0.5 * h * k1[i];
    }
    sys.vector_field(t + 0.5 * h, &y, &mut k2);
    for i in 0..n {
        y[i] = x[i] + 0.5 * h * k2[i];
    }
    sys.vector_field(t + 0.5 * h, &y, &mut k3);
    for i in 0..n {
        y[i] = x[i] + h * k3[i];
    }
    sys.vector_field(t + h, &y, &mut k4);
    (0..n).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// A sampled base trajectory. States are raw (angles not reduced).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().unwrap()
    }
}

/// RK4 trajectory from `x0` over [t0, t1], recording every step.
pub fn flow(sys: &ConformalSystem, x0: &[f64], t_span: (f64, f64), dt: f64) -> Result<Trajectory> {
    check_dt(dt)?;
    if x0.len() != 2 * sys.dim() {
        return Err(MaslovError::DimensionMismatch(format!("state has {} entries for d = {}", x0.len(), sys.dim())));
    }
    let (t0, t1) = t_span;
    let n = step_count(t1 - t0, dt);
    let h = (t1 - t0) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(t0);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for k in 0..n {
        let t = t0 + k as f64 * h;
        x = rk4_state(sys, t, &x, h);
        let tn = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
        check_finite(&x, tn)?;
        times.push(tn);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

/// Dφ_t at one time, partitioned as [[a_t, b_t], [c_t, d_t]] in the (q, p)
/// splitting, with the conformal factor of the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBlocks {
    pub t: f64,
    pub m: Mat,
    /// exp(−∫ a), integrated alongside the flow.
    pub factor: f64,
}

impl TangentBlocks {
    pub fn identity(d: usize, t: f64) -> Self {
        TangentBlocks { t, m: Mat::identity(2 * d, 2 * d), factor: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows() / 2
    }

    fn block(&self, r: usize, c: usize) -> Mat {
        let d = self.dim();
        self.m.view((r * d, c * d), (d, d)).into_owned()
    }

    pub fn a_t(&self) -> Mat {
        self.block(0, 0)
    }

    pub fn b_t(&self) -> Mat {
        self.block(0, 1)
    }

    pub fn c_t(&self) -> Mat {
        self.block(1, 0)
    }

    pub fn d_t(&self) -> Mat {
        self.block(1, 1)
    }

    /// ‖Mᵀ J M − factor · J‖_F.
    pub fn conformal_defect(&self) -> f64 {
        let j = complex_structure(self.dim());
        (self.m.transpose() * &j * &self.m - j * self.factor).norm()
    }
}

/// Coupled state: base point, variational matrix, conformal factor.
#[derive(Debug, Clone)]
struct Coupled {
    x: Vec<f64>,
    m: Mat,
    factor: f64,
}

fn coupled_rhs(sys: &ConformalSystem, t: f64, s: &Coupled) -> Coupled {
    let mut dx = vec![0.0; s.x.len()];
    sys.vector_field(t, &s.x, &mut dx);
    let dm = sys.jacobian(t, &s.x) * &s.m;
    Coupled { x: dx, m: dm, factor: -sys.rate().at(t) * s.factor }
}

fn axpy(s: &Coupled, h: f64, k: &Coupled) -> Coupled {
    Coupled {
        x: s.x.iter().zip(&k.x).map(|(a, b)| a + h * b).collect(),
        m: &s.m + &k.m * h,
        factor: s.factor + h * k.factor,
    }
}

fn rk4_coupled(sys: &ConformalSystem, t: f64, s: &Coupled, h: f64) -> Coupled {
    let k1 = coupled_rhs(sys, t, s);
    let k2 = coupled_rhs(sys, t + 0.5 * h, &axpy(s, 0.5 * h, &k1));
    let k3 = coupled_rhs(sys, t + 0.5 * h, &axpy(s, 0.5 * h, &k2));
    let k4 = coupled_rhs(sys, t + h, &axpy(s, h, &k3));
    Coupled {
        x: (0..s.x.len())
            .map(|i| s.x[i] + h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]))
            .collect(),
        m: &s.m + (&k1.m + &k2.m * 2.0 + &k3.m * 2.0 + &k4.m) * (h / 6.0),
        factor: s.factor + h / 6.0 * (k1.factor + 2.0 * k2.factor + 2.0 * k3.factor + k4.factor),
    }
}

/// Integrates the coupled system over [t0, t1] in `n` equal steps.
fn advance(sys: &ConformalSystem, start: Coupled, t0: f64, t1: f64, n: usize) -> Result<Coupled> {
    let h = (t1 - t0) / n as f64;
    let mut s = start;
    for k in 0..n {
        s = rk4_coupled(sys, t0 + k as f64 * h, &s, h);
        check_finite(&s.x, t0 + (k + 1) as f64 * h)?;
        if s.m.iter().any(|v| !v.is_finite()) {
            return Err(MaslovError::NonFinite { t: t0 + (k + 1) as f64 * h });
        }
    }
    Ok(s)
}

/// Dφ from t0 to t1 at x0 (either time direction) without storing samples.
/// Returns the blocks and the end state.
pub fn tangent_map(sys: &ConformalSystem, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<(TangentBlocks, Vec<f64>)> {
    check_dt(dt)?;
    let d = sys.dim();
    if x0.len() != 2 * d {
        return Err(MaslovError::DimensionMismatch(format!("state has {} entries for d = {}", x0.len(), d)));
    }
    let start = Coupled { x: x0.to_vec(), m: Mat::identity(2 * d, 2 * d), factor: 1.0 };
    if t1 == t0 {
        return Ok((TangentBlocks::identity(d, t0), x0.to_vec()));
    }
    let s = advance(sys, start, t0, t1, step_count((t1 - t0).abs(), dt))?;
    Ok((TangentBlocks { t: t1, m: s.m, factor: s.factor }, s.x))
}

/// Base trajectory with the linearised flow at every recorded time.
#[derive(Debug, Clone)]
pub struct TangentTrajectory {
    system: Arc<ConformalSystem>,
    dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub blocks: Vec<TangentBlocks>,
    /// Largest conformality defect seen.
    pub max_conformal_defect: f64,
    /// Set when the defect exceeded `conformal_tol`.
    pub conformal_warning: bool,
}

/// Integrates Ṁ = DX M alongside the base flow over [t0, t1], recording
/// every `record_every`-th step (and the final one).
pub fn tangent_flow_sampled(
    sys: &ConformalSystem,
    x0: &[f64],
    t_span: (f64, f64),
    dt: f64,
    record_every: usize,
    tol: &Tolerances,
) -> Result<TangentTrajectory> {
    check_dt(dt)?;
    let d = sys.dim();
    if x0.len() != 2 * d {
        return Err(MaslovError::DimensionMismatch(format!("state has {} entries for d = {}", x0.len(), d)));
    }
    let record_every = record_every.max(1);
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(MaslovError::InvalidArgument(format!("empty time span [{t0}, {t1}]")));
    }
    let n = step_count(t1 - t0, dt);
    let h = (t1 - t0) / n as f64;
    let mut s = Coupled { x: x0.to_vec(), m: Mat::identity(2 * d, 2 * d), factor: 1.0 };
    let mut out = TangentTrajectory {
        system: Arc::new(sys.clone()),
        dt: h,
        times: vec![t0],
        states: vec![x0.to_vec()],
        blocks: vec![TangentBlocks::identity(d, t0)],
        max_conformal_defect: 0.0,
        conformal_warning: false,
    };
    for k in 0..n {
        let t = t0 + k as f64 * h;
        s = rk4_coupled(sys, t, &s, h);
        let tn = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
        check_finite(&s.x, tn)?;
        if s.m.iter().any(|v| !v.is_finite()) {
            return Err(MaslovError::NonFinite { t: tn });
        }
        if (k + 1) % record_every == 0 || k + 1 == n {
            let blocks = TangentBlocks { t: tn, m: s.m.clone(), factor: s.factor };
            // relative to the size of M, which grows on hyperbolic orbits
            let defect = blocks.conformal_defect() / (1.0 + blocks.m.norm_squared());
            out.max_conformal_defect = out.max_conformal_defect.max(defect);
            out.times.push(tn);
            out.states.push(s.x.clone());
            out.blocks.push(blocks);
        }
    }
    out.conformal_warning = out.max_conformal_defect > tol.conformal_tol;
    Ok(out)
}

/// `tangent_flow_sampled` recording every step.
pub fn tangent_flow(
    sys: &ConformalSystem,
    x0: &[f64],
    t_span: (f64, f64),
    dt: f64,
    tol: &Tolerances,
) -> Result<TangentTrajectory> {
    tangent_flow_sampled(sys, x0, t_span, dt, 1, tol)
}

/// Image of a Lagrangian frame under M, re-orthonormalised.
pub fn transport_frame(blocks: &TangentBlocks, l: &LagrangianFrame, tol: &Tolerances) -> Result<LagrangianFrame> {
    // conformal maps scale ω; check isotropy on the orthonormalised image
    l.transformed(&blocks.m, tol)
}

impl TangentTrajectory {
    pub fn system(&self) -> &ConformalSystem {
        &self.system
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    pub fn final_blocks(&self) -> &TangentBlocks {
        self.blocks.last().unwrap()
    }

    /// Linearised flow at an arbitrary time in the span, integrated from the
    /// nearest earlier sample with steps no larger than the base step.
    pub fn blocks_at(&self, t: f64) -> Result<TangentBlocks> {
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        if t < lo || t > hi {
            return Err(MaslovError::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
        }
        let k = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.blocks[i].clone()),
            Err(i) => i - 1,
        };
        let start = Coupled { x: self.states[k].clone(), m: self.blocks[k].m.clone(), factor: self.blocks[k].factor };
        let tk = self.times[k];
        let n = step_count(t - tk, self.dt);
        let s = advance(&self.system, start, tk, t, n)?;
        Ok(TangentBlocks { t, m: s.m, factor: s.factor })
    }

    /// The path t ↦ Dφ_t(L0), refinable between samples.
    pub fn lagrangian_path(self: &Arc<Self>, l0: &LagrangianFrame, tol: &Tolerances) -> Result<LagrangianPath> {
        let frames = self
            .blocks
            .iter()
            .map(|b| transport_frame(b, l0, tol))
            .collect::<Result<Vec<_>>>()?;
        let me = Arc::clone(self);
        let l0 = l0.clone();
        let tol = *tol;
        let path = LagrangianPath::new(self.times.clone(), frames)?;
        Ok(path.with_refiner(Arc::new(move |t| transport_frame(&me.blocks_at(t)?, &l0, &tol))))
    }
}
