//! Conformally symplectic systems: a Hamiltonian H(t, q, p), a conformal
//! rate a(t) and per-coordinate topology. The vector field is
//! q̇ = ∂H/∂p, ṗ = −∂H/∂q − a(t) p.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MaslovError, Result};
use crate::linalg::Mat;

/// Gradient and Hessian of H in (q, p) order.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, t: f64, x: &[f64]) -> f64;

    /// (∂H/∂q, ∂H/∂p) as one vector of length 2d.
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Full 2d × 2d Hessian. Finite-difference implementations may return a
    /// slightly asymmetric matrix; callers symmetrise.
    fn hessian(&self, t: f64, x: &[f64]) -> Mat;

    /// True when derivatives come from finite differences.
    fn uses_finite_differences(&self) -> bool {
        false
    }
}

/// sin x with the f64 images of 0 and ±π as exact zeros.
///
/// The argument is reduced to r ∈ [−π, π] and the far half-periods are
/// folded through sin r = sin(±π − r), so the pendulum equilibria are fixed
/// points of the discrete flow.
pub fn periodic_sin(x: f64) -> f64 {
    let r = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if r > FRAC_PI_2 {
        (PI - r).sin()
    } else if r < -FRAC_PI_2 {
        (-PI - r).sin()
    } else {
        r.sin()
    }
}

/// Coordinate topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Angle-valued with period 2π.
    Angle,
    Line,
}

/// Conformal rate a(t).
#[derive(Clone)]
pub enum Rate {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Rate {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Rate::Constant(a) => *a,
            Rate::Function(f) => f(t),
        }
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Constant(a) => write!(f, "Constant({a})"),
            Rate::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// A conformally symplectic system on T*ℝᵈ or T*𝕋ᵈ charts.
#[derive(Clone)]
pub struct ConformalSystem {
    name: String,
    hamiltonian: Arc<dyn Hamiltonian>,
    rate: Rate,
    topology: Vec<Topology>,
}

impl fmt::Debug for ConformalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalSystem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("rate", &self.rate)
            .field("topology", &self.topology)
            .finish()
    }
}

impl ConformalSystem {
    pub fn new(name: impl Into<String>, hamiltonian: Arc<dyn Hamiltonian>, rate: Rate, topology: Vec<Topology>) -> Result<Self> {
        if topology.len() != hamiltonian.dim() {
            return Err(MaslovError::DimensionMismatch(format!(
                "topology has {} flags for d = {}",
                topology.len(),
                hamiltonian.dim()
            )));
        }
        Ok(ConformalSystem { name: name.into(), hamiltonian, rate, topology })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &dyn Hamiltonian {
        self.hamiltonian.as_ref()
    }

    pub fn rate(&self) -> &Rate {
        &self.rate
    }

    pub fn topology(&self) -> &[Topology] {
        &self.topology
    }

    pub fn with_rate(mut self, rate: Rate) -> Self {
        self.rate = rate;
        self
    }

    pub fn energy(&self, t: f64, x: &[f64]) -> f64 {
        self.hamiltonian.value(t, x)
    }

    /// (q̇, ṗ) = (∂H/∂p, −∂H/∂q − a(t) p).
    pub fn vector_field(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut g = vec![0.0; 2 * d];
        self.hamiltonian.gradient(t, x, &mut g);
        let a = self.rate.at(t);
        for i in 0..d {
            out[i] = g[d + i];
            out[d + i] = -g[i] - a * x[d + i];
        }
    }

    /// Jacobian DX = [[H_pq, H_pp], [−H_qq, −H_qp − a I]] with a symmetrised Hessian.
    pub fn jacobian(&self, t: f64, x: &[f64]) -> Mat {
        let d = self.dim();
        let raw = self.hamiltonian.hessian(t, x);
        let h = (&raw + raw.transpose()) * 0.5;
        let a = self.rate.at(t);
        let mut j = Mat::zeros(2 * d, 2 * d);
        for r in 0..d {
            for c in 0..d {
                j[(r, c)] = h[(d + r, c)];
                j[(r, d + c)] = h[(d + r, d + c)];
                j[(d + r, c)] = -h[(r, c)];
                j[(d + r, d + c)] = -h[(r, d + c)];
            }
            j[(d + r, d + r)] -= a;
        }
        j
    }

    /// ∂ₚX_q = ∂²H/∂p², unsymmetrised.
    pub fn fiber_hessian(&self, t: f64, x: &[f64]) -> Mat {
        let d = self.dim();
        self.hamiltonian.hessian(t, x).view((d, d), (d, d)).into_owned()
    }

    /// Reduces angle coordinates into [0, 2π).
    pub fn wrap_state(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (i, topo) in self.topology.iter().enumerate() {
            if *topo == Topology::Angle {
                y[i] = y[i].rem_euclid(2.0 * PI);
            }
        }
        y
    }
}

/// Central-difference step h = fd_step · (1 + |x|).
fn fd_h(fd_step: f64, x: f64) -> f64 {
    fd_step * (1.0 + x.abs())
}

/// Hessian by central differences of an exact gradient.
fn hessian_from_gradient(n: usize, fd_step: f64, x: &[f64], grad: impl Fn(&[f64], &mut [f64])) -> Mat {
    let mut h = Mat::zeros(n, n);
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for j in 0..n {
        let step = fd_h(fd_step, x[j]);
        xp[j] = x[j] + step;
        grad(&xp, &mut gp);
        xp[j] = x[j] - step;
        grad(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    h
}

fn fd_gradient(n: usize, fd_step: f64, x: &[f64], f: impl Fn(&[f64]) -> f64, out: &mut [f64]) {
    let mut xp = x.to_vec();
    for i in 0..n {
        let step = fd_h(fd_step, x[i]);
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        out[i] = (fp - fm) / (2.0 * step);
    }
}

/// Hessian by second central differences of a scalar function.
fn fd_hessian(n: usize, fd_step: f64, x: &[f64], f: impl Fn(&[f64]) -> f64) -> Mat {
    let mut h = Mat::zeros(n, n);
    let mut y = x.to_vec();
    let f0 = f(x);
    for i in 0..n {
        let hi = fd_h(fd_step, x[i]);
        y[i] = x[i] + hi;
        let fp = f(&y);
        y[i] = x[i] - hi;
        let fm = f(&y);
        y[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..n {
            let hj = fd_h(fd_step, x[j]);
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * hi;
                y[j] = x[j] + sj * hj;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Quadratic H = ½ xᵀ S x.
#[derive(Debug, Clone)]
pub struct Quadratic {
    s: Mat,
}

impl Quadratic {
    pub fn new(s: Mat) -> Result<Self> {
        let n = s.nrows();
        if n == 0 || n % 2 != 0 || s.ncols() != n {
            return Err(MaslovError::DimensionMismatch("quadratic form must be 2d x 2d".into()));
        }
        if (&s - s.transpose()).amax() > 1e-12 * (1.0 + s.amax()) {
            return Err(MaslovError::Asymmetric { defect: (&s - s.transpose()).amax() });
        }
        Ok(Quadratic { s })
    }
}

impl Hamiltonian for Quadratic {
    fn dim(&self) -> usize {
        self.s.nrows() / 2
    }

    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        let n = x.len();
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += x[i] * self.s[(i, j)] * x[j];
            }
        }
        0.5 * v
    }

    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            out[i] = (0..n).map(|j| self.s[(i, j)] * x[j]).sum();
        }
    }

    fn hessian(&self, _t: f64, _x: &[f64]) -> Mat {
        self.s.clone()
    }
}

/// H = ½|p|² + V(q) with an analytic potential.
pub struct Mechanical {
    d: usize,
    potential: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    force: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    stiffness: Box<dyn Fn(&[f64]) -> Mat + Send + Sync>,
}

impl Mechanical {
    pub fn new(
        d: usize,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        Mechanical { d, potential: Box::new(potential), force: Box::new(gradient), stiffness: Box::new(hessian) }
    }
}

impl Hamiltonian for Mechanical {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        let d = self.d;
        0.5 * x[d..].iter().map(|p| p * p).sum::<f64>() + (self.potential)(&x[..d])
    }

    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        (self.force)(&x[..d], &mut out[..d]);
        out[d..].copy_from_slice(&x[d..]);
    }

    fn hessian(&self, _t: f64, x: &[f64]) -> Mat {
        let d = self.d;
        let mut h = Mat::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d)).copy_from(&(self.stiffness)(&x[..d]));
        h.view_mut((d, d), (d, d)).fill_with_identity();
        h
    }
}

/// H = ½|p|² + V(q) for a user potential; ∇V and ∇²V by central differences.
pub struct FdMechanical {
    d: usize,
    fd_step: f64,
    potential: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl FdMechanical {
    pub fn new(d: usize, fd_step: f64, potential: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>) -> Self {
        FdMechanical { d, fd_step, potential }
    }
}

impl Hamiltonian for FdMechanical {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        let d = self.d;
        0.5 * x[d..].iter().map(|p| p * p).sum::<f64>() + (self.potential)(&x[..d])
    }

    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        fd_gradient(d, self.fd_step, &x[..d], |q| (self.potential)(q), &mut out[..d]);
        out[d..].copy_from_slice(&x[d..]);
    }

    fn hessian(&self, _t: f64, x: &[f64]) -> Mat {
        let d = self.d;
        let mut h = Mat::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d))
            .copy_from(&fd_hessian(d, self.fd_step, &x[..d], |q| (self.potential)(q)));
        h.view_mut((d, d), (d, d)).fill_with_identity();
        h
    }

    fn uses_finite_differences(&self) -> bool {
        true
    }
}

/// Arbitrary user Hamiltonian H(t, x); all derivatives by central differences.
pub struct FdHamiltonian {
    d: usize,
    fd_step: f64,
    h: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

impl FdHamiltonian {
    pub fn new(d: usize, fd_step: f64, h: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>) -> Self {
        FdHamiltonian { d, fd_step, h }
    }
}

impl Hamiltonian for FdHamiltonian {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.h)(t, x)
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        fd_gradient(2 * self.d, self.fd_step, x, |y| (self.h)(t, y), out);
    }

    fn hessian(&self, t: f64, x: &[f64]) -> Mat {
        fd_hessian(2 * self.d, self.fd_step, x, |y| (self.h)(t, y))
    }

    fn uses_finite_differences(&self) -> bool {
        true
    }
}

/// Trigonometric factor of an expansion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    #[default]
    None,
    Cos,
    Sin,
}

/// c · Πᵢ qᵢ^{nᵢ} · Πᵢ pᵢ^{mᵢ} · trig(k·q).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionTerm {
    pub coef: f64,
    #[serde(default)]
    pub q_pow: Vec<u32>,
    #[serde(default)]
    pub p_pow: Vec<u32>,
    #[serde(default)]
    pub trig: Trig,
    #[serde(default)]
    pub freq: Vec<f64>,
}

/// Polynomial/trigonometric expansion in (q, p): analytic gradient, Hessian
/// by central differences of the gradient.
#[derive(Debug, Clone)]
pub struct Expansion {
    d: usize,
    fd_step: f64,
    terms: Vec<ExpansionTerm>,
}

fn powi(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

impl Expansion {
    pub fn new(d: usize, fd_step: f64, terms: Vec<ExpansionTerm>) -> Result<Self> {
        let mut terms = terms;
        for (k, t) in terms.iter_mut().enumerate() {
            for (name, v) in [("q_pow", t.q_pow.len()), ("p_pow", t.p_pow.len())] {
                if v != 0 && v != d {
                    return Err(MaslovError::Config(format!("term {k}: {name} must have length {d}")));
                }
            }
            if t.freq.len() != 0 && t.freq.len() != d {
                return Err(MaslovError::Config(format!("term {k}: freq must have length {d}")));
            }
            if t.trig != Trig::None && t.freq.is_empty() {
                return Err(MaslovError::Config(format!("term {k}: trig term needs freq")));
            }
            t.q_pow.resize(d, 0);
            t.p_pow.resize(d, 0);
            t.freq.resize(d, 0.0);
        }
        Ok(Expansion { d, fd_step, terms })
    }

    fn trig_parts(term: &ExpansionTerm, q: &[f64]) -> (f64, f64) {
        // (trig(k·q), d/dφ trig(φ))
        let phase: f64 = term.freq.iter().zip(q).map(|(k, x)| k * x).sum();
        match term.trig {
            Trig::None => (1.0, 0.0),
            Trig::Cos => (phase.cos(), -periodic_sin(phase)),
            Trig::Sin => (periodic_sin(phase), phase.cos()),
        }
    }

    fn grad_impl(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        out.iter_mut().for_each(|v| *v = 0.0);
        let (q, p) = x.split_at(d);
        for term in &self.terms {
            let (tv, tdv) = Self::trig_parts(term, q);
            let qm: Vec<f64> = (0..d).map(|i| powi(q[i], term.q_pow[i])).collect();
            let pm: Vec<f64> = (0..d).map(|i| powi(p[i], term.p_pow[i])).collect();
            let qprod: f64 = qm.iter().product();
            let pprod: f64 = pm.iter().product();
            for i in 0..d {
                // ∂/∂qᵢ of Πq · trig
                let others: f64 = (0..d).filter(|&j| j != i).map(|j| qm[j]).product();
                let dq_mono = if term.q_pow[i] == 0 {
                    0.0
                } else {
                    term.q_pow[i] as f64 * powi(q[i], term.q_pow[i] - 1) * others
                };
                out[i] += term.coef * pprod * (dq_mono * tv + qprod * term.freq[i] * tdv);
                let others_p: f64 = (0..d).filter(|&j| j != i).map(|j| pm[j]).product();
                let dp_mono = if term.p_pow[i] == 0 {
                    0.0
                } else {
                    term.p_pow[i] as f64 * powi(p[i], term.p_pow[i] - 1) * others_p
                };
                out[d + i] += term.coef * qprod * tv * dp_mono;
            }
        }
    }
}

impl Hamiltonian for Expansion {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        let d = self.d;
        let (q, p) = x.split_at(d);
        self.terms
            .iter()
            .map(|term| {
                let qprod: f64 = (0..d).map(|i| powi(q[i], term.q_pow[i])).product();
                let pprod: f64 = (0..d).map(|i| powi(p[i], term.p_pow[i])).product();
                term.coef * qprod * pprod * Self::trig_parts(term, q).0
            })
            .sum()
    }

    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        self.grad_impl(x, out);
    }

    fn hessian(&self, _t: f64, x: &[f64]) -> Mat {
        hessian_from_gradient(2 * self.d, self.fd_step, x, |y, g| self.grad_impl(y, g))
    }

    fn uses_finite_differences(&self) -> bool {
        true
    }
}

/// Builtin systems.
pub mod builtins {
    use super::*;

    /// H = ½(|q|² + |p|²).
    pub fn harmonic(d: usize) -> ConformalSystem {
        let q = Quadratic::new(Mat::identity(2 * d, 2 * d)).expect("identity is symmetric");
        ConformalSystem::new("harmonic", Arc::new(q), Rate::Constant(0.0), vec![Topology::Line; d]).unwrap()
    }

    /// H = ½|p|² on T*𝕋ᵈ.
    pub fn free(d: usize) -> ConformalSystem {
        let mut s = Mat::zeros(2 * d, 2 * d);
        s.view_mut((d, d), (d, d)).fill_with_identity();
        let q = Quadratic::new(s).unwrap();
        ConformalSystem::new("free", Arc::new(q), Rate::Constant(0.0), vec![Topology::Angle; d]).unwrap()
    }

    /// H = ½p² − cos q with rate a.
    pub fn damped_pendulum(a: f64) -> ConformalSystem {
        let h = Mechanical::new(
            1,
            |q| -q[0].cos(),
            |q, g| g[0] = periodic_sin(q[0]),
            |q| Mat::from_element(1, 1, q[0].cos()),
        );
        ConformalSystem::new("damped_pendulum", Arc::new(h), Rate::Constant(a), vec![Topology::Angle]).unwrap()
    }

    /// H = ½|p|² + V(q) for a user potential, rate a; derivatives of V by
    /// central differences.
    pub fn discounted_tonelli(
        d: usize,
        a: f64,
        fd_step: f64,
        potential: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        topology: Vec<Topology>,
    ) -> Result<ConformalSystem> {
        ConformalSystem::new(
            "discounted_tonelli",
            Arc::new(FdMechanical::new(d, fd_step, potential)),
            Rate::Constant(a),
            topology,
        )
    }

    /// H = ½ xᵀ S x with rate a.
    pub fn linear(s: Mat, a: f64) -> Result<ConformalSystem> {
        let q = Quadratic::new(s)?;
        let d = q.dim();
        ConformalSystem::new("linear", Arc::new(q), Rate::Constant(a), vec![Topology::Line; d])
    }

    /// d = 2: H = ½|p|² − cos q₁ − ε cos(q₁ − q₂), rate a.
    pub fn torus_coupled(eps: f64, a: f64) -> ConformalSystem {
        let h = Mechanical::new(
            2,
            move |q| -q[0].cos() - eps * (q[0] - q[1]).cos(),
            move |q, g| {
                let s1 = periodic_sin(q[0]);
                let s12 = periodic_sin(q[0] - q[1]);
                g[0] = s1 + eps * s12;
                g[1] = -eps * s12;
            },
            move |q| {
                let c1 = q[0].cos();
                let c12 = (q[0] - q[1]).cos();
                Mat::from_row_slice(2, 2, &[c1 + eps * c12, -eps * c12, -eps * c12, eps * c12])
            },
        );
        ConformalSystem::new("torus_coupled", Arc::new(h), Rate::Constant(a), vec![Topology::Angle; 2]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::builtins::*;
    use super::*;

    fn field(sys: &ConformalSystem, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        sys.vector_field(0.0, x, &mut out);
        out
    }

    #[test]
    fn vector_field_examples() {
        assert_eq!(field(&free(1), &[0.3, 1.5]), vec![1.5, 0.0]);
        let (q, p) = (0.7_f64, -0.4_f64);
        let v = field(&damped_pendulum(0.1), &[q, p]);
        assert_eq!(v[0], p);
        assert!((v[1] - (-q.sin() - 0.1 * p)).abs() < 1e-15);
        assert_eq!(field(&harmonic(1), &[0.3, 0.9]), vec![0.9, -0.3]);
    }

    #[test]
    fn pendulum_equilibria_are_exact() {
        assert_eq!(periodic_sin(PI), 0.0);
        assert_eq!(periodic_sin(-PI), 0.0);
        assert_eq!(periodic_sin(0.0), 0.0);
        assert_eq!(periodic_sin(3.0 * PI), 0.0);
        for k in 0..200 {
            let x = -7.0 + 0.07 * k as f64;
            assert!((periodic_sin(x) - x.sin()).abs() < 1e-14, "{x}");
        }
        assert_eq!(field(&damped_pendulum(0.1), &[PI, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn expansion_matches_closed_form() {
        // H = ½p² − cos q + 0.25 q² p
        let terms = vec![
            ExpansionTerm { coef: 0.5, q_pow: vec![], p_pow: vec![2], trig: Trig::None, freq: vec![] },
            ExpansionTerm { coef: -1.0, q_pow: vec![], p_pow: vec![], trig: Trig::Cos, freq: vec![1.0] },
            ExpansionTerm { coef: 0.25, q_pow: vec![2], p_pow: vec![1], trig: Trig::None, freq: vec![] },
        ];
        let h = Expansion::new(1, 1e-5, terms).unwrap();
        let x = [0.6, -1.1];
        let expect = 0.5 * 1.21 - 0.6f64.cos() + 0.25 * 0.36 * -1.1;
        assert!((h.value(0.0, &x) - expect).abs() < 1e-14);
        let mut g = [0.0; 2];
        h.gradient(0.0, &x, &mut g);
        assert!((g[0] - (0.6f64.sin() + 0.5 * 0.6 * -1.1)).abs() < 1e-14);
        assert!((g[1] - (-1.1 + 0.25 * 0.36)).abs() < 1e-14);
        let hs = h.hessian(0.0, &x);
        assert!((hs[(0, 0)] - (0.6f64.cos() + 0.5 * -1.1)).abs() < 1e-8);
        assert!((hs[(0, 1)] - 0.3).abs() < 1e-8);
        assert!((hs[(1, 1)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fd_mechanical_matches_pendulum() {
        let fd = discounted_tonelli(1, 0.1, 1e-5, Arc::new(|q: &[f64]| -q[0].cos()), vec![Topology::Angle]).unwrap();
        let exact = damped_pendulum(0.1);
        let x = [1.3, 0.4];
        let (a, b) = (fd.jacobian(0.0, &x), exact.jacobian(0.0, &x));
        assert!((a - b).amax() < 1e-5);
    }

    #[test]
    fn jacobian_is_hamiltonian_plus_damping() {
        use crate::linalg::complex_structure;
        let sys = torus_coupled(0.3, 0.25);
        let jac = sys.jacobian(0.0, &[0.4, -1.0, 0.2, 0.5]);
        let j = complex_structure(2);
        // DXᵀJ + J DX = −a J
        let lhs = jac.transpose() * &j + &j * &jac;
        assert!((lhs + &j * 0.25).amax() < 1e-14);
    }
}
