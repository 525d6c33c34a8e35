//! Complete parameter set for one evaluation.

use crate::correlation::QuadratureConfig;
use crate::model::{BathLabel, BathParams, ModelError, SystemParams};

/// Prefactor of the middle-bath rates in the weak-coupling closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaPVariant {
    /// `sin²θ/2`, the value the polaron rates reduce to at weak coupling.
    Half,
    /// `sin²θ/8`.
    Eighth,
}

impl GammaPVariant {
    pub fn factor(self) -> f64 {
        match self {
            GammaPVariant::Half => 0.5,
            GammaPVariant::Eighth => 0.125,
        }
    }
}

/// Which way a positive current points in reported output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentSign {
    /// Positive when energy flows into the bath.
    IntoBath,
    /// Positive when energy flows out of the bath.
    OutOfBath,
}

impl CurrentSign {
    pub fn apply(self, j: f64) -> f64 {
        match self {
            CurrentSign::IntoBath => j,
            CurrentSign::OutOfBath => -j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conventions {
    pub gamma_p: GammaPVariant,
    /// Keep the principal-value (level-shift) parts of the rates in the generator.
    pub include_pv: bool,
    pub current_sign: CurrentSign,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            gamma_p: GammaPVariant::Half,
            include_pv: false,
            current_sign: CurrentSign::IntoBath,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub system: SystemParams,
    pub left: BathParams,
    pub right: BathParams,
    pub middle: BathParams,
    pub quadrature: QuadratureConfig,
    pub conventions: Conventions,
}

impl Default for ModelConfig {
    /// `ε_l = 1, ε_r = 0.6, Δ = 0.6, ω_c = 10, T = (2, 1.2, 0.4)`, `γ_l = γ_r = 2e-4`, `α_m = 1`.
    fn default() -> Self {
        let wc = 10.0;
        Self {
            system: SystemParams {
                eps_l: 1.0,
                eps_r: 0.6,
                delta: 0.6,
            },
            left: BathParams::new(BathLabel::Left, 2.0, 2e-4, wc),
            right: BathParams::new(BathLabel::Right, 0.4, 2e-4, wc),
            middle: BathParams::new(BathLabel::Middle, 1.2, 1.0, wc),
            quadrature: QuadratureConfig::default(),
            conventions: Conventions::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.system.validate()?;
        self.left.validate()?;
        self.right.validate()?;
        self.middle.validate()?;
        let q = &self.quadrature;
        for (key, value) in [("abs_tol", q.abs_tol), ("rel_tol", q.rel_tol)] {
            if !(value > 0.0) {
                return Err(ModelError::Invalid {
                    key,
                    value,
                    reason: "tolerance must be positive",
                });
            }
        }
        if let Some(t) = q.tau_max {
            if !(t > 0.0) {
                return Err(ModelError::Invalid {
                    key: "tau_max",
                    value: t,
                    reason: "must be positive",
                });
            }
        }
        if let Some(w) = q.omega_max {
            if !(w > 0.0) {
                return Err(ModelError::Invalid {
                    key: "omega_max",
                    value: w,
                    reason: "must be positive",
                });
            }
        }
        if q.n_tau < 4 {
            return Err(ModelError::Invalid {
                key: "n_tau",
                value: q.n_tau as f64,
                reason: "need at least 4 panels per e-fold",
            });
        }
        Ok(())
    }

    pub fn bath(&self, label: BathLabel) -> &BathParams {
        match label {
            BathLabel::Left => &self.left,
            BathLabel::Right => &self.right,
            BathLabel::Middle => &self.middle,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.middle.coupling = alpha;
        self
    }

    pub fn with_middle_temperature(mut self, t: f64) -> Self {
        self.middle.temperature = t;
        self
    }

    /// Same model with all three baths at one temperature.
    pub fn at_equilibrium(mut self, t: f64) -> Self {
        self.left.temperature = t;
        self.right.temperature = t;
        self.middle.temperature = t;
        self
    }

    /// Two-terminal setup: the right bath is detached.
    pub fn two_terminal(mut self) -> Self {
        self.right.coupling = 0.0;
        self
    }
}
