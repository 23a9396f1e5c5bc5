//! Seeded random inputs shared by the self-test, the acceptance suite and
//! the benches.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MaslovError, Result};
use crate::flow::tangent_flow_sampled;
use crate::linalg::{expm, random_hamiltonian_matrix, random_lagrangian, random_symmetric, CoisotropicData, LagrangianFrame, LinearReduction, Mat};
use crate::path::LagrangianPath;
use crate::system::{builtins, ConformalSystem};
use crate::tolerances::Tolerances;

/// t ↦ exp(tA) L0 on [0, 1] with a random Hamiltonian A, `samples` + 1
/// equally spaced frames, refinable.
pub fn linear_path(d: usize, seed: u64, scale: f64, samples: usize) -> Result<LagrangianPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_hamiltonian_matrix(d, scale, &mut rng);
    let l0 = random_lagrangian(d, rng.random());
    let step = expm(&(&a / samples as f64));
    let mut m = Mat::identity(2 * d, 2 * d);
    let mut frames = Vec::with_capacity(samples + 1);
    for _ in 0..=samples {
        frames.push(LagrangianFrame::new(&m * l0.columns())?);
        m = &step * m;
    }
    let times = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    let refine_l0 = l0.clone();
    Ok(LagrangianPath::new(times, frames)?.with_refiner(Arc::new(move |t| LagrangianFrame::new(expm(&(&a * t)) * refine_l0.columns()))))
}

/// W = u^ω for a random line u in the vertical, so W⊥ ⊂ V ⊂ W.
pub fn vertical_coisotropic(d: usize, seed: u64, tol: &Tolerances) -> Result<CoisotropicData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Mat::zeros(2 * d, 1);
    for i in 0..d {
        u[(d + i, 0)] = rng.random_range(-1.0..1.0);
    }
    CoisotropicData::from_isotropic(&u, tol)
}

/// Smallest kernel margin accepted by `admissible_reduction`. Closer to W⊥
/// the reduced path turns faster than the sample grid resolves.
pub const MIN_KERNEL_MARGIN: f64 = 0.05;

/// A vertical coisotropic W whose kernel stays at margin ≥ MIN_KERNEL_MARGIN
/// from every frame of `path`, drawn from seeds derived from `seed`.
pub fn admissible_reduction(path: &LagrangianPath, seed: u64, tol: &Tolerances) -> Result<LinearReduction> {
    for attempt in 0..64 {
        let red = LinearReduction::new(&vertical_coisotropic(path.dim(), seed.wrapping_mul(64) + attempt, tol)?, tol)?;
        if path.frames().iter().all(|f| red.kernel_margin(f) >= MIN_KERNEL_MARGIN) {
            return Ok(red);
        }
    }
    Err(MaslovError::InvalidArgument(format!("no admissible W for seed {seed}")))
}

/// Strict-twist builtins of dimension d with rate a (d ≤ 2 adds the pendulum
/// family).
pub fn twist_builtins(d: usize, a: f64, seed: u64) -> Vec<ConformalSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // positive definite S: an elliptic, possibly damped, oscillator
    let b = random_symmetric(2 * d, 0.4, &mut rng);
    let s = &b * b.transpose() + Mat::identity(2 * d, 2 * d) * 0.5;
    let mut out = vec![builtins::harmonic(d), builtins::free(d), builtins::linear(s, a).expect("symmetric")];
    match d {
        1 => out.push(builtins::damped_pendulum(a)),
        2 => out.push(builtins::torus_coupled(0.3, a)),
        _ => {}
    }
    out
}

/// A random flow-generated path: builtin, initial state, frame and horizon
/// are drawn from `seed`.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub system: ConformalSystem,
    pub x0: Vec<f64>,
    pub l0: LagrangianFrame,
    pub horizon: f64,
}

impl FlowSample {
    pub fn random(d: usize, seed: u64, horizon_max: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = [0.0, 0.1, 0.5][rng.random_range(0..3)];
        let mut systems = twist_builtins(d, a, rng.random());
        let system = systems.swap_remove(rng.random_range(0..systems.len()));
        let x0 = (0..2 * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let horizon = rng.random_range(0.1 * horizon_max..=horizon_max);
        FlowSample { system, x0, l0: random_lagrangian(d, rng.random()), horizon }
    }

    /// Dφ_t(L0) on [0, horizon], sampled every `record_every` steps of size dt.
    pub fn path(&self, dt: f64, record_every: usize, tol: &Tolerances) -> Result<LagrangianPath> {
        let tr = Arc::new(tangent_flow_sampled(&self.system, &self.x0, (0.0, self.horizon), dt, record_every, tol)?);
        tr.lagrangian_path(&self.l0, tol)
    }
}
