//! Physical parameters, bath spectra and the polaron-frame system quantities.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{integrate_adaptive, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{key} = {value} is invalid: {reason}")]
    Invalid {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("Bose occupation is singular at omega = 0")]
    SingularOccupation,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BathLabel {
    Left,
    Right,
    Middle,
}

impl BathLabel {
    pub fn short(self) -> &'static str {
        match self {
            BathLabel::Left => "l",
            BathLabel::Right => "r",
            BathLabel::Middle => "m",
        }
    }
}

/// Energies of the two excited states and the tunneling between them.
/// The ground state sits at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub eps_l: f64,
    pub eps_r: f64,
    pub delta: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (key, value) in [("eps_l", self.eps_l), ("eps_r", self.eps_r)] {
            if !value.is_finite() {
                return Err(ModelError::Invalid {
                    key,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(ModelError::Invalid {
                key: "delta",
                value: self.delta,
                reason: "must be finite and non-negative",
            });
        }
        Ok(())
    }
}

/// One bosonic bath with the super-Ohmic spectrum `π c x³/ω_c² e^{-|x|/ω_c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub label: BathLabel,
    pub temperature: f64,
    pub coupling: f64,
    pub cutoff: f64,
}

impl BathParams {
    pub fn new(label: BathLabel, temperature: f64, coupling: f64, cutoff: f64) -> Self {
        Self {
            label,
            temperature,
            coupling,
            cutoff,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (kt, kc) = match self.label {
            BathLabel::Left => ("T_l", "gamma_l"),
            BathLabel::Right => ("T_r", "gamma_r"),
            BathLabel::Middle => ("T_m", "alpha_m"),
        };
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(ModelError::Invalid {
                key: kt,
                value: self.temperature,
                reason: "temperature must be positive",
            });
        }
        if !(self.coupling >= 0.0) || !self.coupling.is_finite() {
            return Err(ModelError::Invalid {
                key: kc,
                value: self.coupling,
                reason: "coupling must be non-negative",
            });
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(ModelError::Invalid {
                key: "omega_c",
                value: self.cutoff,
                reason: "cutoff must be positive",
            });
        }
        Ok(())
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_coupling(mut self, c: f64) -> Self {
        self.coupling = c;
        self
    }

    /// Spectral density, odd in `x`.
    pub fn spectral_density(&self, x: f64) -> f64 {
        spectral_density(self, x)
    }

    /// `Λ(ω)[1 + n(ω)]`, finite everywhere including `ω = 0`.
    pub fn emission_spectrum(&self, omega: f64) -> f64 {
        let t = self.temperature;
        PI * self.coupling * omega * omega / (self.cutoff * self.cutoff)
            * (-omega.abs() / self.cutoff).exp()
            * t
            * planck_factor(omega / t)
    }

    /// `Λ(ω) n(ω) = Λ(-ω)[1 + n(-ω)]`.
    pub fn absorption_spectrum(&self, omega: f64) -> f64 {
        self.emission_spectrum(-omega)
    }

    /// `Λ(ω)[1+n(ω)]/(π ω²)`, the one-phonon spectrum of the correlation phase.
    pub fn phase_spectrum(&self, omega: f64) -> f64 {
        let t = self.temperature;
        self.coupling / (self.cutoff * self.cutoff)
            * (-omega.abs() / self.cutoff).exp()
            * t
            * planck_factor(omega / t)
    }
}

/// `x / (1 - e^{-x})`, equal to 1 at the origin.
pub fn planck_factor(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 + 0.5 * x
    } else {
        x / -(-x).exp_m1()
    }
}

pub fn spectral_density(bath: &BathParams, x: f64) -> f64 {
    PI * bath.coupling * x.powi(3) / (bath.cutoff * bath.cutoff) * (-x.abs() / bath.cutoff).exp()
}

pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64, ModelError> {
    if omega == 0.0 {
        return Err(ModelError::SingularOccupation);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// `Σ_k |g_k|²/ω_k` for the middle bath, `α ω_c / 2` in closed form.
pub fn reorganization_energy(middle: &BathParams) -> f64 {
    0.5 * middle.coupling * middle.cutoff
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renormalization {
    /// `⟨e^{±2iB}⟩`, the tunneling suppression.
    pub eta: f64,
    /// `⟨e^{±iB}⟩ = η^{1/4}`, the single-displacement factor.
    pub eta_u: f64,
    /// `∫ Λ/ω² coth(ω/2T) dω / π`, the equal-time correlation phase.
    pub phase_at_zero: f64,
}

/// Displacement expectation values of the middle bath.
pub fn renormalization_factor(middle: &BathParams) -> Result<Renormalization, ModelError> {
    if middle.coupling == 0.0 {
        return Ok(Renormalization {
            eta: 1.0,
            eta_u: 1.0,
            phase_at_zero: 0.0,
        });
    }
    let (wc, t) = (middle.cutoff, middle.temperature);
    // (1/π) Λ(ω)/ω² coth(ω/2T) = (α/ω_c²) ω coth(ω/2T) e^{-ω/ω_c}
    let integrand = |w: f64| {
        let x = w / t;
        let w_coth = t * (planck_factor(x) + planck_factor(-x));
        w_coth * (-w / wc).exp()
    };
    let upper = 60.0 * wc;
    let mut edges = vec![0.0, t.min(wc), 4.0 * t.min(wc)];
    let mut x = edges[2];
    while x < upper {
        x = (2.0 * x).min(upper);
        edges.push(x);
    }
    let mut sum = 0.0;
    for w in edges.windows(2) {
        sum += integrate_adaptive(integrand, w[0], w[1], 1e-16, 1e-14)?;
    }
    let phi0 = middle.coupling / (wc * wc) * sum;
    let eta = (-0.5 * phi0).exp();
    Ok(Renormalization {
        eta,
        eta_u: (-0.125 * phi0).exp(),
        phase_at_zero: phi0,
    })
}

/// Dressed system quantities in the polaron frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaronFrame {
    pub eta: f64,
    pub eta_u: f64,
    pub lambda_reorg: f64,
    pub eps_bar: f64,
    pub delta_eps: f64,
    pub theta: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    /// `ε_l - λ`, the left level in the strong-coupling (localized) picture.
    pub e_left: f64,
    /// `ε_r - λ`.
    pub e_right: f64,
    pub phase_at_zero: f64,
}

impl PolaronFrame {
    /// Frame with a given tunneling suppression and level shift.
    pub fn from_parts(sys: &SystemParams, ren: Renormalization, lambda_reorg: f64) -> Self {
        let eps_bar = 0.5 * (sys.eps_l + sys.eps_r) - lambda_reorg;
        let delta_eps = 0.5 * (sys.eps_l - sys.eps_r);
        let coupling = ren.eta * sys.delta;
        let theta = coupling.atan2(delta_eps);
        let half_gap = delta_eps.hypot(coupling);
        Self {
            eta: ren.eta,
            eta_u: ren.eta_u,
            lambda_reorg,
            eps_bar,
            delta_eps,
            theta,
            e_plus: eps_bar + half_gap,
            e_minus: eps_bar - half_gap,
            e_left: sys.eps_l - lambda_reorg,
            e_right: sys.eps_r - lambda_reorg,
            phase_at_zero: ren.phase_at_zero,
        }
    }

    /// Bare eigensystem: no renormalization and no shift.
    pub fn bare(sys: &SystemParams) -> Self {
        Self::from_parts(
            sys,
            Renormalization {
                eta: 1.0,
                eta_u: 1.0,
                phase_at_zero: 0.0,
            },
            0.0,
        )
    }

    pub fn gap(&self) -> f64 {
        self.e_plus - self.e_minus
    }

    pub fn localized_energy(&self, label: BathLabel) -> f64 {
        match label {
            BathLabel::Left => self.e_left,
            BathLabel::Right => self.e_right,
            BathLabel::Middle => 0.0,
        }
    }
}

pub fn polaron_frame(sys: &SystemParams, middle: &BathParams) -> Result<PolaronFrame, ModelError> {
    sys.validate()?;
    middle.validate()?;
    let ren = renormalization_factor(middle)?;
    Ok(PolaronFrame::from_parts(
        sys,
        ren,
        reorganization_energy(middle),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn middle(alpha: f64, t: f64) -> BathParams {
        BathParams::new(BathLabel::Middle, t, alpha, 10.0)
    }

    #[test]
    fn spectral_density_values() {
        let b = BathParams::new(BathLabel::Left, 1.0, 1.0, 10.0);
        assert_eq!(b.spectral_density(0.0), 0.0);
        let expect = PI * 10.0 * (-1.0f64).exp();
        assert!((b.spectral_density(10.0) - expect).abs() < 1e-12);
        assert!((11.556 - expect).abs() < 2e-3);
        assert_eq!(b.spectral_density(-3.7), -b.spectral_density(3.7));
    }

    #[test]
    fn bose_identities() {
        let n = bose_occupation(1.0, 2.0).unwrap();
        let nm = bose_occupation(-1.0, 2.0).unwrap();
        assert!((nm + 1.0 + n).abs() < 1e-15);
        assert!(bose_occupation(100.0, 1.0).unwrap() < 1e-40);
        assert!((bose_occupation(2f64.ln() * 0.7, 0.7).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(
            bose_occupation(0.0, 1.0),
            Err(ModelError::SingularOccupation)
        );
    }

    #[test]
    fn emission_spectrum_matches_naive_product() {
        let b = BathParams::new(BathLabel::Right, 0.7, 2e-4, 10.0);
        for &w in &[-5.0, -0.3, 0.2, 4.0, 31.0] {
            let naive = b.spectral_density(w) * (1.0 + bose_occupation(w, 0.7).unwrap());
            let got = b.emission_spectrum(w);
            assert!(
                (got - naive).abs() <= 1e-12 * naive.abs(),
                "{w}: {got} {naive}"
            );
            let abs = b.spectral_density(w) * bose_occupation(w, 0.7).unwrap();
            assert!((b.absorption_spectrum(w) - abs).abs() <= 1e-12 * abs.abs());
        }
        assert!(b.emission_spectrum(0.0) == 0.0);
    }

    #[test]
    fn reorganization_closed_form() {
        assert_eq!(reorganization_energy(&middle(0.0, 1.0)), 0.0);
        assert_eq!(reorganization_energy(&middle(4.0, 1.0)), 20.0);
        assert_eq!(reorganization_energy(&middle(1.0, 1.0)), 5.0);
    }

    #[test]
    fn eta_limits() {
        let r = renormalization_factor(&middle(0.0, 1.2)).unwrap();
        assert_eq!(r.eta, 1.0);
        // at vanishing temperature coth → 1 and the integral is α/2
        let r = renormalization_factor(&middle(1.0, 1e-4)).unwrap();
        assert!((r.eta / (-0.5f64).exp() - 1.0).abs() < 1e-8, "{}", r.eta);
        let r = renormalization_factor(&middle(0.7, 1.3)).unwrap();
        assert!((r.eta_u.powi(4) / r.eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_bare_limit_and_symmetric_case() {
        let sys = SystemParams {
            eps_l: 1.0,
            eps_r: 0.6,
            delta: 0.6,
        };
        let f = polaron_frame(&sys, &middle(0.0, 1.2)).unwrap();
        let root = (0.04f64 + 0.36).sqrt();
        assert!((f.e_plus - (0.8 + root)).abs() < 1e-12);
        assert!((f.e_minus - (0.8 - root)).abs() < 1e-12);
        assert!((f.theta - 0.6f64.atan2(0.2)).abs() < 1e-12);

        let sym = SystemParams {
            eps_l: 0.8,
            eps_r: 0.8,
            delta: 0.3,
        };
        let f = polaron_frame(&sym, &middle(0.5, 1.0)).unwrap();
        assert!((f.theta - PI / 2.0).abs() < 1e-15);

        let f = polaron_frame(&sys, &middle(4.0, 1.2)).unwrap();
        assert!((f.e_left + 19.0).abs() < 1e-12 && (f.e_right + 19.4).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_named() {
        let bad = BathParams::new(BathLabel::Left, -1.0, 1e-4, 10.0);
        match bad.validate() {
            Err(ModelError::Invalid { key, .. }) => assert_eq!(key, "T_l"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
