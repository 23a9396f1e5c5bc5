use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{MaslovError, Result};

/// Numerical thresholds shared by every module. All fields can be overridden
/// from a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative smallest-singular-value threshold for rank and transversality.
    pub rank_tol: f64,
    /// Relative isotropy threshold for frames.
    pub iso_tol: f64,
    /// Signature threshold, relative to the form's norm.
    pub sig_tol: f64,
    /// Distance to π/2 below which an angle counts as vertical.
    pub angle_tol: f64,
    /// Allowed distance between the index identity and an integer.
    pub residual_tol: f64,
    /// Maximal phase step of Δ accepted by the unwrapper.
    pub unwrap_guard: f64,
    /// Crossing localisation accuracy, relative to the path horizon.
    pub time_tol: f64,
    /// Angle velocity below which a crossing is called tangential.
    pub vel_tol: f64,
    /// Allowed conformality defect of the linearised flow.
    pub conformal_tol: f64,
    /// Twist margin, relative to 1 + max |∂²H/∂p²| on the grid.
    pub twist_margin: f64,
    /// Cauchy-gap threshold for asymptotic rates.
    pub conv_tol: f64,
    /// State norm beyond which an orbit is declared non-compact.
    pub escape_bound: f64,
    /// Central-difference step, relative to 1 + |x|.
    pub fd_step: f64,
    /// Symmetry tolerance for finite-difference Hessians.
    pub fd_sym_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-8,
            iso_tol: 1e-8,
            sig_tol: 1e-8,
            angle_tol: 1e-7,
            residual_tol: 1e-3,
            unwrap_guard: FRAC_PI_2,
            time_tol: 1e-10,
            vel_tol: 1e-6,
            conformal_tol: 1e-6,
            twist_margin: 1e-9,
            conv_tol: 1e-2,
            escape_bound: 1e6,
            fd_step: 1e-5,
            fd_sym_tol: 1e-4,
        }
    }
}

impl Tolerances {
    /// Overrides one field by name. Used for `--set tolerances.<name>=<value>`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value <= 0.0 {
            return Err(MaslovError::Config(format!(
                "tolerance {name} must be positive and finite, got {value}"
            )));
        }
        let slot = match name {
            "rank_tol" => &mut self.rank_tol,
            "iso_tol" => &mut self.iso_tol,
            "sig_tol" => &mut self.sig_tol,
            "angle_tol" => &mut self.angle_tol,
            "residual_tol" => &mut self.residual_tol,
            "unwrap_guard" => &mut self.unwrap_guard,
            "time_tol" => &mut self.time_tol,
            "vel_tol" => &mut self.vel_tol,
            "conformal_tol" => &mut self.conformal_tol,
            "twist_margin" => &mut self.twist_margin,
            "conv_tol" => &mut self.conv_tol,
            "escape_bound" => &mut self.escape_bound,
            "fd_step" => &mut self.fd_step,
            "fd_sym_tol" => &mut self.fd_sym_tol,
            _ => return Err(MaslovError::Config(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.unwrap_guard >= std::f64::consts::PI {
            return Err(MaslovError::Config("unwrap_guard must stay below π".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        t.set("residual_tol", 1e-4).unwrap();
        assert_eq!(t.residual_tol, 1e-4);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("iso_tol", -1.0).is_err());
    }
}
