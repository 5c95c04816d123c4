//! Edge potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potential on a single edge, parameterized over [0, L].
///
/// A directed edge and its reversal carry the same physical potential, so the
/// stored profile for the reversed direction is the reflection x ↦ W(L−x);
/// `reversed` produces it. `Zero`, `Constant` and `Cosine` are reflection
/// symmetric by construction, `Sampled` need not be.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant { c: f64 },
    /// c1 + c2·cos(2πx/L); the period is tied to the edge length.
    Cosine { c1: f64, c2: f64 },
    /// Values on a uniform grid over [0, L], linearly interpolated.
    Sampled { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant { c } => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("non-finite constant potential".into()))
                }
            }
            PotentialSpec::Cosine { c1, c2 } => {
                if c1.is_finite() && c2.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("non-finite cosine coefficients".into()))
                }
            }
            PotentialSpec::Sampled { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidInput(
                        "sampled potential needs at least 2 grid values".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite sampled value".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }

    /// W(x) for x ∈ [0, length].
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { c } => *c,
            PotentialSpec::Cosine { c1, c2 } => {
                c1 + c2 * (2.0 * std::f64::consts::PI * x / length).cos()
            }
            PotentialSpec::Sampled { values } => {
                let n = values.len();
                let t = (x / length).clamp(0.0, 1.0) * (n - 1) as f64;
                let i = (t.floor() as usize).min(n - 2);
                let frac = t - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// Profile of the reversed edge, x ↦ W(L−x).
    pub fn reversed(&self) -> Self {
        match self {
            PotentialSpec::Sampled { values } => {
                let mut v = values.clone();
                v.reverse();
                PotentialSpec::Sampled { values: v }
            }
            other => other.clone(),
        }
    }

    /// Whether W(L−x) = W(x) (exact for the closed-form variants, checked on
    /// the grid for sampled profiles).
    pub fn is_symmetric(&self) -> bool {
        match self {
            PotentialSpec::Sampled { values } => {
                let n = values.len();
                (0..n).all(|i| (values[i] - values[n - 1 - i]).abs() <= 1e-12)
            }
            _ => true,
        }
    }

    pub fn sup_norm(&self, length: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { c } => c.abs(),
            PotentialSpec::Cosine { c1, c2 } => c1.abs() + c2.abs(),
            PotentialSpec::Sampled { values } => {
                let _ = length;
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Lower bound of the potential (used for nonnegativity checks).
    pub fn min_value(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { c } => *c,
            PotentialSpec::Cosine { c1, c2 } => c1 - c2.abs(),
            PotentialSpec::Sampled { values } => values.iter().fold(f64::MAX, |m, v| m.min(*v)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversal_consistency() {
        let w = PotentialSpec::Sampled {
            values: vec![0.0, 1.0, 4.0, 9.0],
        };
        let r = w.reversed();
        let l = 2.0;
        for &x in &[0.0, 0.3, 1.1, 2.0] {
            assert!((r.eval(l - x, l) - w.eval(x, l)).abs() < 1e-14);
        }
        assert!(!w.is_symmetric());
        assert!(PotentialSpec::Cosine { c1: 1.0, c2: 0.5 }.is_symmetric());
    }

    #[test]
    fn sampled_validation() {
        assert!(PotentialSpec::Sampled { values: vec![1.0] }.validate().is_err());
        assert!(PotentialSpec::Sampled {
            values: vec![1.0, f64::INFINITY]
        }
        .validate()
        .is_err());
    }
}
