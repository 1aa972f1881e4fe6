//! Gross-error contamination models `F = (1 - eps) N(0, sigma^2) + eps H`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The contaminating law `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    /// No contamination; the error law is the nominal Gaussian.
    None,
    /// Mass split equally between `+mu` and `-mu`.
    SymmetricTwoPoint { mu: f64 },
    /// All contaminating mass at `mu`.
    PointMass { mu: f64 },
    /// Improper law with its mass at `+-infinity`; population-level only.
    AtInfinity,
}

/// Error distribution of the regression model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationModel {
    epsilon: f64,
    kind: Contamination,
    sigma_base: f64,
}

impl ContaminationModel {
    pub fn new(epsilon: f64, kind: Contamination) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
        }
        match kind {
            Contamination::None if epsilon != 0.0 => {
                return Err(invalid("contamination kind `none` requires epsilon = 0"));
            }
            Contamination::SymmetricTwoPoint { mu } | Contamination::PointMass { mu }
                if !mu.is_finite() =>
            {
                return Err(invalid(format!("contamination location must be finite, got {mu}")));
            }
            _ => {}
        }
        Ok(Self { epsilon, kind, sigma_base: 1.0 })
    }

    /// Uncontaminated standard Gaussian errors.
    pub fn gaussian() -> Self {
        Self { epsilon: 0.0, kind: Contamination::None, sigma_base: 1.0 }
    }

    /// `G_{eps,mu} = (1 - eps) Phi + eps H_mu` with `H_mu` equiprobable on `+-mu`.
    pub fn symmetric(epsilon: f64, mu: f64) -> Result<Self> {
        Self::new(epsilon, Contamination::SymmetricTwoPoint { mu: mu.abs() })
    }

    pub fn point_mass(epsilon: f64, mu: f64) -> Result<Self> {
        Self::new(epsilon, Contamination::PointMass { mu })
    }

    /// The improper extremal law `(1 - eps) Phi + eps H_inf`.
    pub fn at_infinity(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Contamination::AtInfinity)
    }

    /// Rescales the nominal Gaussian component.
    pub fn with_sigma(mut self, sigma_base: f64) -> Result<Self> {
        if !(sigma_base > 0.0 && sigma_base.is_finite()) {
            return Err(invalid(format!("sigma_base must be positive, got {sigma_base}")));
        }
        self.sigma_base = sigma_base;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kind(&self) -> Contamination {
        self.kind
    }

    pub fn sigma_base(&self) -> f64 {
        self.sigma_base
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self.kind, Contamination::AtInfinity)
    }

    /// Magnitude of the contaminating atoms, when they are finite.
    pub fn contamination_location(&self) -> Option<f64> {
        match self.kind {
            Contamination::SymmetricTwoPoint { mu } | Contamination::PointMass { mu } => Some(mu),
            _ => None,
        }
    }
}
