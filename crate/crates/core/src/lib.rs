//! Maslov and angular Maslov indices of Lagrangian paths transported by
//! conformally symplectic flows, twist certificates, and long-horizon
//! asymptotic index estimates.

pub mod asymptotic;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod path;
pub mod selftest;
pub mod system;
pub mod tolerances;
pub mod twist;
pub mod unitary;

pub use error::{MaslovError, Result};
pub use linalg::{LagrangianFrame, SymmetricForm};
pub use tolerances::Tolerances;
