//! Correlation phase of the middle bath and the half-line Fourier transforms
//! built from it.
//!
//! Everything that decays only algebraically is split into a one-phonon part,
//! whose transform is known in closed form from the bath spectrum, plus a
//! multi-phonon remainder that decays like `τ^{-4}` and is transformed
//! numerically on the τ grid.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{BathParams, ModelError, PolaronFrame, SystemParams};
use crate::quadrature::{graded_edges, PanelGrid, QuadratureError, SampledFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("correlation phase has not decayed by tau = {tau_max}: |phi| = {value:e} vs |phi(0)| = {phi0:e}")]
    NoDecay { tau_max: f64, value: f64, phi0: f64 },
    #[error("integrand minus tail does not decay: |f(tau_max) - tail| = {end:e}, max = {max:e}")]
    NonDecaying { end: f64, max: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Numerical settings shared by every transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Fixed time truncation; chosen adaptively when `None`.
    pub tau_max: Option<f64>,
    /// Panels per e-fold of the graded time and frequency grids.
    pub n_tau: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper frequency for inner integrals; `40 ω_c` when `None`.
    pub omega_max: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tau_max: None,
            n_tau: 16,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            omega_max: None,
        }
    }
}

impl QuadratureConfig {
    pub fn omega_max(&self, cutoff: f64) -> f64 {
        self.omega_max.unwrap_or(40.0 * cutoff)
    }

    pub fn growth(&self) -> f64 {
        1.0 / self.n_tau.max(2) as f64
    }

    pub fn refined(&self) -> Self {
        Self {
            n_tau: 2 * self.n_tau,
            ..*self
        }
    }
}

/// Frequency grid for integrals against the middle spectrum on `[0, ω_max]`.
fn spectrum_grid(bath: &BathParams, cfg: &QuadratureConfig) -> Result<PanelGrid, QuadratureError> {
    let scale = bath.temperature.min(bath.cutoff);
    let g = cfg.growth();
    let edges = graded_edges(
        0.0,
        cfg.omega_max(bath.cutoff),
        &[(0.0, 8.0 * g * scale)],
        2.0 * g,
        0.5 * bath.cutoff,
        &[],
    );
    PanelGrid::new(edges)
}

/// Integrands of the correlation phase on the frequency axis:
/// `(α/ω_c²) ω e^{-ω/ω_c} coth(ω/2T)` and the same without the coth.
struct PhaseIntegrands {
    even: SampledFunction,
    odd: SampledFunction,
}

impl PhaseIntegrands {
    fn new(bath: &BathParams, cfg: &QuadratureConfig) -> Result<Self, QuadratureError> {
        let grid = spectrum_grid(bath, cfg)?;
        let (a, wc, t) = (
            bath.coupling / (bath.cutoff * bath.cutoff),
            bath.cutoff,
            bath.temperature,
        );
        let even = SampledFunction::from_real_fn(&grid, |w| {
            let x = w / t;
            a * t
                * (crate::model::planck_factor(x) + crate::model::planck_factor(-x))
                * (-w / wc).exp()
        });
        let odd = SampledFunction::from_real_fn(&grid, |w| a * w * (-w / wc).exp());
        Ok(Self { even, odd })
    }

    fn phase(&self, tau: f64) -> Complex64 {
        Complex64::new(self.even.fourier(tau).re, -self.odd.fourier(tau).im)
    }
}

/// `φ_m(τ)` evaluated directly by quadrature over the bath spectrum.
/// Negative `τ` is accepted and yields `conj(φ_m(|τ|))`.
pub fn phase_function(
    middle: &BathParams,
    tau: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex64, CorrelationError> {
    middle.validate()?;
    Ok(PhaseIntegrands::new(middle, cfg)?.phase(tau))
}

/// `φ_m` sampled on a graded time grid that reaches the adaptive truncation.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    grid: PanelGrid,
    samples: Vec<Complex64>,
    phi0: f64,
    tau_max: f64,
}

impl PhaseTable {
    pub fn build(middle: &BathParams, cfg: &QuadratureConfig) -> Result<Self, CorrelationError> {
        middle.validate()?;
        let integrands = PhaseIntegrands::new(middle, cfg)?;
        let phi0 = integrands.phase(0.0).re;

        let decayed = |tau: f64| integrands.phase(tau).norm() <= cfg.rel_tol * phi0.abs();
        let tau_max = match cfg.tau_max {
            Some(t) => {
                if !decayed(t) {
                    return Err(CorrelationError::NoDecay {
                        tau_max: t,
                        value: integrands.phase(t).norm(),
                        phi0,
                    });
                }
                t
            }
            None => {
                let mut t = 50.0 / middle.cutoff;
                let mut tries = 0;
                while !decayed(t) {
                    t *= 2.0;
                    tries += 1;
                    if tries > 24 {
                        return Err(CorrelationError::NoDecay {
                            tau_max: t,
                            value: integrands.phase(t).norm(),
                            phi0,
                        });
                    }
                }
                t
            }
        };

        // the peak of e^{φ} narrows like 1/(ω_c sqrt(φ(0)))
        let core = 1.0 / (middle.cutoff * (1.0 + phi0.max(0.0).sqrt()));
        let g = cfg.growth();
        let edges = graded_edges(0.0, tau_max, &[(0.0, g * core)], g, f64::INFINITY, &[]);
        let grid = PanelGrid::new(edges)?;
        let samples = grid
            .nodes()
            .into_iter()
            .map(|t| integrands.phase(t))
            .collect();
        Ok(Self {
            grid,
            samples,
            phi0,
            tau_max,
        })
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn grid(&self) -> &PanelGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// A function of `φ_m` sampled on the table's grid.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SampledFunction {
        let s: Vec<Complex64> = self.samples.iter().map(|&p| f(p)).collect();
        SampledFunction::from_samples(&self.grid, &s)
    }

    pub fn end_value(&self) -> Complex64 {
        self.map(|p| p).end_value().0
    }
}

/// Result of a half-line transform `∫_0^∞ e^{iωτ} f(τ) dτ` for an `f` that
/// tends to a constant `tail`.
///
/// The transform equals `regular + tail·[π δ(ω) + i PV(1/ω)]`; the delta and
/// principal-value parts are left symbolic for the caller to fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfFourier {
    pub regular: Complex64,
    pub singular_weight: Complex64,
}

impl HalfFourier {
    /// Principal-value contribution `tail·i/ω` at `ω ≠ 0`.
    pub fn principal_value(&self, omega: f64) -> Complex64 {
        self.singular_weight * Complex64::new(0.0, 1.0 / omega)
    }
}

/// Transform of a decaying sampled function, with an integration-by-parts
/// estimate of the part beyond the grid when the oscillation is fast enough.
pub fn transform(f: &SampledFunction, omega: f64) -> Complex64 {
    let mut v = f.fourier(omega);
    let t_end = f.grid().end();
    if (omega * t_end).abs() >= 10.0 {
        let (g, dg) = f.end_value();
        let iw = Complex64::new(0.0, omega);
        v += Complex64::from_polar(1.0, omega * t_end) * (-g / iw + dg / (iw * iw));
    }
    v
}

/// Half-line transform of `f - tail` on `grid`, plus the symbolic tail term.
pub fn half_fourier(
    grid: &PanelGrid,
    f: impl Fn(f64) -> Complex64,
    tail: Complex64,
    omega: f64,
    cfg: &QuadratureConfig,
) -> Result<HalfFourier, CorrelationError> {
    let g = SampledFunction::from_fn(grid, |t| f(t) - tail);
    let end = g.end_value().0.norm();
    let max = g.max_abs();
    if end > cfg.abs_tol && end > 1e-6 * max {
        return Err(CorrelationError::NonDecaying { end, max });
    }
    Ok(HalfFourier {
        regular: transform(&g, omega),
        singular_weight: tail,
    })
}

/// `e^z - 1 - z`, accurate for small `z`.
pub fn exp_remainder(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..16 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp() - 1.0 - z
    }
}

/// `cosh z - 1`, accurate for small `z`.
pub fn cosh_remainder(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let z2 = z * z;
        let mut term = z2 / 2.0;
        let mut sum = term;
        for k in 2..9 {
            term *= z2 / ((2 * k - 1) * 2 * k) as f64;
            sum += term;
        }
        sum
    } else {
        z.cosh() - 1.0
    }
}

/// `sinh z - z`, accurate for small `z`.
pub fn sinh_remainder(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let z2 = z * z;
        let mut term = z * z2 / 6.0;
        let mut sum = term;
        for k in 2..9 {
            term *= z2 / ((2 * k) * (2 * k + 1)) as f64;
            sum += term;
        }
        sum
    } else {
        z.sinh() - z
    }
}

/// All transforms of the middle-bath correlation needed by the rate layer,
/// precomputed for one parameter point.
#[derive(Debug, Clone)]
pub struct MiddleCorrelations {
    pub middle: BathParams,
    pub frame: PolaronFrame,
    pub delta: f64,
    pub table: PhaseTable,
    phase: SampledFunction,
    cosh_rem: SampledFunction,
    sinh_rem: SampledFunction,
    exp_rem: SampledFunction,
    quarter_rem: SampledFunction,
}

impl MiddleCorrelations {
    pub fn new(
        sys: &SystemParams,
        middle: &BathParams,
        frame: PolaronFrame,
        cfg: &QuadratureConfig,
    ) -> Result<Self, CorrelationError> {
        let table = PhaseTable::build(middle, cfg)?;
        Ok(Self {
            middle: *middle,
            frame,
            delta: sys.delta,
            phase: table.map(|p| p),
            cosh_rem: table.map(cosh_remainder),
            sinh_rem: table.map(sinh_remainder),
            exp_rem: table.map(exp_remainder),
            quarter_rem: table.map(|p| exp_remainder(p / 4.0)),
            table,
        })
    }

    /// `∫_0^∞ e^{iωτ} φ_m(τ) dτ`: real part in closed form, imaginary part by quadrature.
    pub fn phase_transform(&self, omega: f64) -> Complex64 {
        let re = std::f64::consts::PI * self.middle.phase_spectrum(omega);
        Complex64::new(re, transform(&self.phase, omega).im)
    }

    /// Purely numerical transform of `φ_m`, used to cross-check the closed form.
    pub fn phase_transform_numeric(&self, omega: f64) -> Complex64 {
        transform(&self.phase, omega)
    }

    /// `(γ_x(ω), γ_y(ω))`, the dissipation rates of the σ_x and σ_y channels.
    pub fn gamma_xy(&self, omega: f64) -> (Complex64, Complex64) {
        let pref = (self.frame.eta * self.delta).powi(2);
        let gx = transform(&self.cosh_rem, omega) * pref;
        let gy = (self.phase_transform(omega) + transform(&self.sinh_rem, omega)) * pref;
        (gx, gy)
    }

    /// σ_y rate truncated at one phonon.
    pub fn gamma_y_one_phonon(&self, omega: f64) -> Complex64 {
        self.phase_transform(omega) * (self.frame.eta * self.delta).powi(2)
    }

    /// Dressed correlation `C_u(ω)`: the numeric part carries `e^{φ/4} - 1`,
    /// the singular part has weight `η_u²`.
    pub fn correlation_c(&self, omega: f64) -> HalfFourier {
        let w = self.frame.eta_u * self.frame.eta_u;
        let regular = (self.phase_transform(omega) / 4.0 + transform(&self.quarter_rem, omega)) * w;
        HalfFourier {
            regular,
            singular_weight: Complex64::new(w, 0.0),
        }
    }

    /// `Re ∫_0^∞ e^{iντ}(e^{φ/4} - 1 - φ/4) dτ`, the multi-phonon part of `Re C_u / η_u²`.
    pub fn quarter_remainder(&self, nu: f64) -> f64 {
        transform(&self.quarter_rem, nu).re
    }

    /// Full-line transform `∫ e^{iωτ} η² (e^{φ(τ)} - 1) dτ`, the strong-coupling tunneling rate.
    pub fn full_line_tunneling(&self, omega: f64) -> f64 {
        let eta2 = self.frame.eta * self.frame.eta;
        eta2 * (2.0 * std::f64::consts::PI * self.middle.phase_spectrum(omega)
            + 2.0 * transform(&self.exp_rem, omega).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{polaron_frame, renormalization_factor, BathLabel};

    fn middle(alpha: f64, t: f64) -> BathParams {
        BathParams::new(BathLabel::Middle, t, alpha, 10.0)
    }

    /// Closed form of φ_m through the series over Matsubara-like poles.
    fn phase_series(alpha: f64, wc: f64, t: f64, tau: f64) -> Complex64 {
        let z = Complex64::new(1.0 / wc, tau);
        let mut sum = Complex64::new(0.0, 0.0);
        let kmax = 20000;
        for k in 1..=kmax {
            let a = Complex64::new(k as f64 / t + 1.0 / wc, -tau);
            sum += (a * a).inv();
        }
        // tail of the series by the midpoint rule
        let a = Complex64::new((kmax as f64 + 0.5) / t + 1.0 / wc, -tau);
        sum += a.inv() * t;
        (z * z).inv() * (alpha / (wc * wc)) + Complex64::new(2.0 * alpha / (wc * wc) * sum.re, 0.0)
    }

    #[test]
    fn phase_matches_series_oracle() {
        let cfg = QuadratureConfig::default();
        let m = middle(0.8, 1.2);
        for &tau in &[0.0, 0.03, 0.4, 2.0, 11.0, 90.0] {
            let got = phase_function(&m, tau, &cfg).unwrap();
            let want = phase_series(0.8, 10.0, 1.2, tau);
            assert!(
                (got - want).norm() < 1e-9 * want.norm().max(1e-6),
                "tau {tau}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn phase_conjugate_symmetry_and_zero_coupling() {
        let cfg = QuadratureConfig::default();
        let m = middle(1.3, 0.7);
        let p = phase_function(&m, 0.9, &cfg).unwrap();
        let q = phase_function(&m, -0.9, &cfg).unwrap();
        assert!((p - q.conj()).norm() < 1e-14);
        assert_eq!(
            phase_function(&middle(0.0, 1.0), 3.0, &cfg).unwrap().norm(),
            0.0
        );
    }

    #[test]
    fn phase_at_zero_agrees_with_eta() {
        let cfg = QuadratureConfig::default();
        for &(a, t) in &[(0.01, 0.4), (1.0, 1.2), (4.0, 2.0)] {
            let m = middle(a, t);
            let table = PhaseTable::build(&m, &cfg).unwrap();
            let eta = renormalization_factor(&m).unwrap().eta;
            assert!((table.phi0() / (-2.0 * eta.ln()) - 1.0).abs() < 1e-8);
            assert!((table.phi0().exp() * eta * eta - 1.0).abs() < 1e-8);
            assert!(table.end_value().norm() < 1e-6 * table.phi0());
        }
    }

    #[test]
    fn half_fourier_elementary_cases() {
        let cfg = QuadratureConfig::default();
        let grid = PanelGrid::new(graded_edges(0.0, 50.0, &[(0.0, 0.02)], 0.08, 1.0, &[])).unwrap();
        let one = half_fourier(
            &grid,
            |t| Complex64::new((-t).exp(), 0.0),
            Complex64::new(0.0, 0.0),
            0.0,
            &cfg,
        )
        .unwrap();
        assert!((one.regular - 1.0).norm() < 1e-12);
        let two = half_fourier(
            &grid,
            |t| Complex64::new((-t).exp(), 0.0),
            Complex64::new(0.0, 0.0),
            2.0,
            &cfg,
        )
        .unwrap();
        assert!((two.regular - Complex64::new(0.2, 0.4)).norm() < 1e-10);
        let flat = half_fourier(
            &grid,
            |_| Complex64::new(0.3, -0.1),
            Complex64::new(0.3, -0.1),
            1.7,
            &cfg,
        )
        .unwrap();
        assert_eq!(flat.regular.norm(), 0.0);
        assert_eq!(flat.singular_weight, Complex64::new(0.3, -0.1));
        let err = half_fourier(
            &grid,
            |_| Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            1.0,
            &cfg,
        );
        assert!(matches!(err, Err(CorrelationError::NonDecaying { .. })));
    }

    fn correlations(alpha: f64, t: f64) -> MiddleCorrelations {
        let sys = SystemParams {
            eps_l: 1.0,
            eps_r: 0.6,
            delta: 0.6,
        };
        let m = middle(alpha, t);
        let frame = polaron_frame(&sys, &m).unwrap();
        MiddleCorrelations::new(&sys, &m, frame, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn weak_coupling_rates_reduce_to_golden_rule() {
        let c = correlations(1e-3, 1.2);
        let w = c.frame.gap();
        let (gx, gy) = c.gamma_xy(w);
        let golden = 0.36 / (w * w) * c.middle.emission_spectrum(w);
        assert!(
            (gy.re / golden - 1.0).abs() < 0.02,
            "{} vs {}",
            gy.re,
            golden
        );
        assert!(gx.re.abs() < 0.02 * golden);
        // one-phonon truncation differs only at second order in the coupling
        let first = c.gamma_y_one_phonon(w);
        assert!((gy - first).norm() < 10.0 * 1e-6 * golden);
    }

    #[test]
    fn zero_tunneling_kills_middle_rates() {
        let sys = SystemParams {
            eps_l: 1.0,
            eps_r: 0.6,
            delta: 0.0,
        };
        let m = middle(0.5, 1.0);
        let frame = polaron_frame(&sys, &m).unwrap();
        let c = MiddleCorrelations::new(&sys, &m, frame, &QuadratureConfig::default()).unwrap();
        let (gx, gy) = c.gamma_xy(0.4);
        assert_eq!(gx.norm(), 0.0);
        assert_eq!(gy.norm(), 0.0);
    }

    #[test]
    fn one_phonon_closed_form_matches_numeric_transform() {
        let c = correlations(0.3, 1.2);
        for &w in &[0.5, 1.26, 3.0, -2.0] {
            let closed = c.phase_transform(w).re;
            let numeric = c.phase_transform_numeric(w).re;
            assert!(
                (closed - numeric).abs() < 1e-8 * closed.abs(),
                "{w}: {closed} {numeric}"
            );
        }
    }

    #[test]
    fn zero_coupling_correlation_is_purely_singular() {
        let c = correlations(0.0, 1.2);
        let h = c.correlation_c(0.7);
        assert_eq!(h.regular.norm(), 0.0);
        assert_eq!(h.singular_weight, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn full_line_correlation_is_nonnegative() {
        let c = correlations(2.0, 1.0);
        for k in -40..=120 {
            let w = 0.5 * k as f64;
            // f(-τ) = conj f(τ), so the full-line transform is 2 Re of the half-line one
            let full = 2.0 * c.correlation_c(w).regular.re;
            assert!(full > -1e-10, "omega {w}: {full}");
        }
    }

    #[test]
    fn tunneling_rate_detailed_balance() {
        let c = correlations(4.0, 0.8);
        let up = c.full_line_tunneling(0.4);
        let down = c.full_line_tunneling(-0.4);
        assert!((down / up / (-0.4f64 / 0.8).exp() - 1.0).abs() < 1e-6);
    }
}
