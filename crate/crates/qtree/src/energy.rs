//! Complex spectral parameter z = λ + iη and its square root branch.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral parameter z = λ + iη with η ≥ 0.
///
/// All formulas in this crate use the principal square root (cut on the
/// negative real axis), so Im √z ≥ 0 whenever η ≥ 0. Fixed-point solvers
/// require η > 0; η = 0 values are reached by continuation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    lambda: f64,
    eta: f64,
}

impl ComplexEnergy {
    pub fn new(lambda: f64, eta: f64) -> Result<Self> {
        if !lambda.is_finite() || !eta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite energy ({lambda}, {eta})"
            )));
        }
        if eta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "Im z must be nonnegative, got {eta}"
            )));
        }
        // normalize -0.0 so the principal branch picks Im √z ≥ 0
        Ok(Self { lambda, eta: eta + 0.0 })
    }

    /// Point on the real axis (η = 0).
    pub fn real(lambda: f64) -> Self {
        Self { lambda, eta: 0.0 }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.lambda, self.eta)
    }

    /// Principal branch square root; Im √z ≥ 0 on the closed upper half-plane.
    pub fn sqrt(&self) -> Complex64 {
        let s = self.z().sqrt();
        debug_assert!(s.im >= 0.0 || s.im.abs() < 1e-300);
        s
    }

    pub fn on_axis(&self) -> bool {
        self.eta == 0.0
    }

    /// Same λ, different η.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.lambda, eta)
    }
}

impl std::fmt::Display for ComplexEnergy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}+{}i", self.lambda, self.eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_branch_upper_half_plane() {
        for &(l, e) in &[(4.0, 0.0), (-4.0, 0.0), (2.0, 0.5), (-3.0, 0.1), (0.0, 0.0)] {
            let z = ComplexEnergy::new(l, e).unwrap();
            assert!(z.sqrt().im >= 0.0, "Im sqrt({l}+{e}i) < 0");
        }
        let m4 = ComplexEnergy::real(-4.0).sqrt();
        assert!((m4 - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        let p4 = ComplexEnergy::real(4.0).sqrt();
        assert!((p4 - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_negative_eta() {
        assert!(ComplexEnergy::new(1.0, -0.1).is_err());
        assert!(ComplexEnergy::new(f64::NAN, 0.0).is_err());
    }
}
