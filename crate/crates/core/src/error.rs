use thiserror::Error;

/// Errors raised by index, flow and twist computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaslovError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame is rank deficient (relative smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    #[error("frame is not isotropic (max |F^T Ω F| = {defect:e})")]
    NotIsotropic { defect: f64 },

    #[error("{which} is not transverse to the reference (intersection dimension {dim})")]
    NotTransverse { which: String, dim: usize },

    #[error("matrix is not symmetric (max |S - S^T| = {defect:e})")]
    Asymmetric { defect: f64 },

    #[error("subspace is not coisotropic (defect {defect:e})")]
    NotCoisotropic { defect: f64 },

    #[error("Lagrangian meets the isotropic kernel W⊥ (dimension {dim})")]
    MeetsKernel { dim: usize },

    #[error("phase aliasing between t = {t0} and t = {t1} (|Δarg| = {jump:.3}) on a non-refinable path")]
    Aliasing { t0: f64, t1: f64, jump: f64 },

    #[error("path endpoint at t = {t} lies on the singular cycle (dim L ∩ V = {dim})")]
    EndpointOnSigma { t: f64, dim: usize },

    #[error("index identity residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("tangential crossing at t = {t} (angle velocity {velocity:e})")]
    TangentialCrossing { t: f64, velocity: f64 },

    #[error("degenerate crossing at t = {t}: {count} angles near π/2")]
    DegenerateCrossing { t: f64, count: usize },

    #[error("operation needs a refinable path")]
    NotRefinable,

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("isotropy drift at transport (defect {defect:e})")]
    IsotropyDrift { defect: f64 },

    #[error("block d_t is singular at t = {t} (smallest singular value {sigma_min:e})")]
    SingularBlock { t: f64, sigma_min: f64 },

    #[error("orbit left the compact region at t = {t} (|x| = {norm:e})")]
    Escape { t: f64, norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MaslovError>;

impl From<std::io::Error> for MaslovError {
    fn from(e: std::io::Error) -> Self {
        MaslovError::Io(e.to_string())
    }
}

impl MaslovError {
    /// True for errors caused by the run configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            MaslovError::Config(_) | MaslovError::InvalidArgument(_) | MaslovError::DimensionMismatch(_)
        )
    }
}
