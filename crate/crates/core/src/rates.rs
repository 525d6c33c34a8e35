//! Transition rates and energy moments for the three schemes.
//!
//! The left/right rates of the polaron scheme are built from one kernel per bath,
//!
//! `K_u^m(ω) = (1/4π) ∫ dω₁ ω₁^m Λ_u(ω₁)[1+n_u(ω₁)] C_u(ω - ω₁)`,
//!
//! from which `κ_{u,-}(ω) = K_u(ω)` and `κ_{u,+}(ω) = K_u(-ω)`. The delta part of
//! `C_u` gives the sequential term `η_u² ω^m Λ_u(1+n_u)/4` in closed form; the
//! one-phonon part of the rest is a convolution with the closed-form phase
//! spectrum, and only the multi-phonon remainder is read from a tabulated
//! transform.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::config::ModelConfig;
use crate::correlation::{transform, CorrelationError, MiddleCorrelations};
use crate::model::{polaron_frame, BathLabel, BathParams, ModelError, PolaronFrame};
use crate::quadrature::{graded_edges, integrate_on, PanelGrid, QuadratureError, SampledFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("weak-coupling closed forms need E_- > 0, got E_- = {e_minus}")]
    RegimeViolation { e_minus: f64 },
    #[error("frequency {omega} lies beyond the integration range {omega_max}")]
    OutOfRange { omega: f64, omega_max: f64 },
    #[error("bath {0:?} has no left/right rate kernel")]
    NotAnEdgeBath(BathLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Counting order of the expanded polaron rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateOrder {
    /// Sequential (delta) term only.
    Zeroth,
    /// Plus the one-phonon convolution.
    First,
}

/// Precomputed correlations for one parameter point; builds every rate table.
pub struct RateEngine {
    pub config: ModelConfig,
    pub frame: PolaronFrame,
    pub corr: MiddleCorrelations,
    /// `Re ∫_0^∞ e^{iντ}(e^{φ/4} - 1 - φ/4) dτ` on a frequency grid.
    remainder: SampledFunction,
    time_kernels: OnceLock<[[SampledFunction; 2]; 2]>,
}

fn edge_index(label: BathLabel) -> Result<usize, RateError> {
    match label {
        BathLabel::Left => Ok(0),
        BathLabel::Right => Ok(1),
        BathLabel::Middle => Err(RateError::NotAnEdgeBath(label)),
    }
}

impl RateEngine {
    pub fn new(config: &ModelConfig) -> Result<Self, RateError> {
        config.validate()?;
        let frame = polaron_frame(&config.system, &config.middle)?;
        let q = &config.quadrature;
        let corr = MiddleCorrelations::new(&config.system, &config.middle, frame, q)?;

        let m = &config.middle;
        let g = q.growth();
        let scale = m.temperature.min(m.cutoff);
        let edges = graded_edges(
            -60.0 * m.temperature,
            q.omega_max(m.cutoff),
            &[(0.0, 8.0 * g * scale)],
            2.0 * g,
            0.25 * m.cutoff,
            &[],
        );
        let grid = PanelGrid::new(edges)?;
        let remainder = if m.coupling == 0.0 {
            SampledFunction::from_real_fn(&grid, |_| 0.0)
        } else {
            SampledFunction::from_real_fn(&grid, |nu| corr.quarter_remainder(nu))
        };
        Ok(Self {
            config: *config,
            frame,
            corr,
            remainder,
            time_kernels: OnceLock::new(),
        })
    }

    fn edge_bath(&self, u: BathLabel) -> Result<&BathParams, RateError> {
        edge_index(u)?;
        Ok(self.config.bath(u))
    }

    fn eta_u2(&self) -> f64 {
        self.frame.eta_u * self.frame.eta_u
    }

    /// Grid for the convolution over `ω₁`: fine around `0` (bath features)
    /// and around `ω` (middle-bath features).
    fn convolution_grid(&self, bath: &BathParams, omega: f64) -> Option<PanelGrid> {
        let m = &self.config.middle;
        let q = &self.config.quadrature;
        let lo = (-60.0 * bath.temperature).max(omega - q.omega_max(m.cutoff));
        let hi = omega + 60.0 * m.temperature;
        if hi <= lo {
            return None;
        }
        let g = q.growth();
        let a = 8.0 * g;
        let edges = graded_edges(
            lo,
            hi,
            &[
                (0.0, a * bath.temperature.min(bath.cutoff)),
                (omega, a * m.temperature.min(m.cutoff)),
            ],
            2.0 * g,
            0.25 * bath.cutoff.min(m.cutoff),
            &[],
        );
        PanelGrid::new(edges).ok()
    }

    /// `(Re K⁰, Re K¹)` at `ω`, split as (sequential, one-phonon, multi-phonon).
    fn kernel_parts(&self, bath: &BathParams, omega: f64) -> [[f64; 3]; 2] {
        let w = self.eta_u2() / 4.0;
        let f0 = bath.emission_spectrum(omega);
        let mut out = [[w * f0, 0.0, 0.0], [w * omega * f0, 0.0, 0.0]];
        if bath.coupling == 0.0 || self.config.middle.coupling == 0.0 {
            return out;
        }
        let Some(grid) = self.convolution_grid(bath, omega) else {
            return out;
        };
        let m = &self.config.middle;
        let (mut one0, mut one1, mut multi0, mut multi1) = (0.0, 0.0, 0.0, 0.0);
        for (x, wt) in grid.nodes().into_iter().zip(grid.weights()) {
            let f = bath.emission_spectrum(x) * wt;
            let nu = omega - x;
            let s = m.phase_spectrum(nu) / 4.0;
            let r = self.remainder.eval(nu).re / PI;
            one0 += f * s;
            one1 += f * x * s;
            multi0 += f * r;
            multi1 += f * x * r;
        }
        out[0][1] = w * one0;
        out[1][1] = w * one1;
        out[0][2] = w * multi0;
        out[1][2] = w * multi1;
        out
    }

    /// `Re K_u^m(ω)` for both moments, full multi-phonon dressing.
    pub fn kernel(&self, u: BathLabel, omega: f64) -> Result<[f64; 2], RateError> {
        let bath = self.edge_bath(u)?;
        self.check_range(omega)?;
        let p = self.kernel_parts(bath, omega);
        Ok([p[0].iter().sum(), p[1].iter().sum()])
    }

    /// `Re K_u^m(ω)` truncated at the given order in the correlation phase.
    pub fn kernel_ordered(
        &self,
        u: BathLabel,
        omega: f64,
        order: RateOrder,
    ) -> Result<[f64; 2], RateError> {
        let bath = self.edge_bath(u)?;
        self.check_range(omega)?;
        let p = self.kernel_parts(bath, omega);
        Ok(match order {
            RateOrder::Zeroth => [p[0][0], p[1][0]],
            RateOrder::First => [p[0][0] + p[0][1], p[1][0] + p[1][1]],
        })
    }

    fn check_range(&self, omega: f64) -> Result<(), RateError> {
        let omega_max = self.config.quadrature.omega_max(self.config.middle.cutoff);
        if omega.abs() > omega_max {
            return Err(RateError::OutOfRange { omega, omega_max });
        }
        Ok(())
    }

    /// Time-domain kernels `η_u² e^{φ(τ)/4} C_X^m(τ)`, built on first use.
    fn time_kernels(&self) -> &[[SampledFunction; 2]; 2] {
        self.time_kernels.get_or_init(|| {
            let table = &self.corr.table;
            let q = &self.config.quadrature;
            let g = q.growth();
            let build = |bath: &BathParams, moment: i32| {
                let scale = bath.temperature.min(bath.cutoff);
                let edges = graded_edges(
                    -60.0 * bath.temperature,
                    q.omega_max(bath.cutoff),
                    &[(0.0, 8.0 * g * scale)],
                    2.0 * g,
                    0.5 * bath.cutoff,
                    &[],
                );
                let grid = PanelGrid::new(edges).expect("valid spectrum grid");
                let spec = SampledFunction::from_real_fn(&grid, |w| {
                    w.powi(moment) * bath.emission_spectrum(w)
                });
                let eta_u2 = self.eta_u2();
                let samples: Vec<Complex64> = table
                    .grid()
                    .nodes()
                    .into_iter()
                    .zip(table.samples())
                    .map(|(tau, &phi)| eta_u2 * (phi / 4.0).exp() * spec.fourier(-tau) / (4.0 * PI))
                    .collect();
                SampledFunction::from_samples(table.grid(), &samples)
            };
            [
                [build(&self.config.left, 0), build(&self.config.left, 1)],
                [build(&self.config.right, 0), build(&self.config.right, 1)],
            ]
        })
    }

    /// Complex `K_u^m(ω)` as a single time-domain transform; supplies the
    /// principal-value parts and serves as an independent check of [`RateEngine::kernel`].
    pub fn kernel_time_domain(
        &self,
        u: BathLabel,
        omega: f64,
        moment: usize,
    ) -> Result<Complex64, RateError> {
        let i = edge_index(u)?;
        if self.config.bath(u).coupling == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(transform(&self.time_kernels()[i][moment.min(1)], omega))
    }

    /// Generalized dissipation rate `κ^{(m)}_{u,±}(ω)`.
    pub fn ptre_kappa(
        &self,
        u: BathLabel,
        omega: f64,
        moment: usize,
        sign: Sign,
    ) -> Result<Complex64, RateError> {
        let arg = match sign {
            Sign::Plus => -omega,
            Sign::Minus => omega,
        };
        let re = self.kernel(u, arg)?[moment.min(1)];
        let im = if self.config.conventions.include_pv {
            self.kernel_time_domain(u, arg, moment)?.im
        } else {
            0.0
        };
        Ok(Complex64::new(re, im))
    }

    /// `κ^{(n)}_{u,±}(ω)` in the H.c.-summed normalisation, so that the zeroth
    /// order equals `η_u² κ^{e(a)}_u / 2`.
    pub fn ordered_kappa(
        &self,
        u: BathLabel,
        omega: f64,
        sign: Sign,
        order: RateOrder,
    ) -> Result<f64, RateError> {
        let arg = match sign {
            Sign::Plus => -omega,
            Sign::Minus => omega,
        };
        Ok(2.0 * self.kernel_ordered(u, arg, order)?[0])
    }

    /// `C⁽¹⁾_u(ω) = (η_u²/4) ∫_0^∞ e^{iωτ} φ_m(τ) dτ`.
    pub fn one_phonon_correlation(&self, omega: f64) -> Complex64 {
        self.corr.phase_transform(omega) * (self.eta_u2() / 4.0)
    }

    fn middle_rates(&self, one_phonon_only: bool) -> ([Complex64; 3], [Complex64; 3]) {
        let d = self.frame.gap();
        let keep = |z: Complex64| {
            if self.config.conventions.include_pv {
                z
            } else {
                Complex64::new(z.re, 0.0)
            }
        };
        let mut gx = [Complex64::new(0.0, 0.0); 3];
        let mut gy = [Complex64::new(0.0, 0.0); 3];
        for (k, w) in [-d, 0.0, d].into_iter().enumerate() {
            if one_phonon_only {
                gy[k] = keep(self.corr.gamma_y_one_phonon(w));
            } else {
                let (x, y) = self.corr.gamma_xy(w);
                gx[k] = keep(x);
                gy[k] = keep(y);
            }
        }
        (gx, gy)
    }

    fn edge_table(&self, order: Option<RateOrder>) -> Result<[[[Complex64; 4]; 2]; 2], RateError> {
        let freqs = [
            self.frame.e_plus,
            self.frame.e_minus,
            -self.frame.e_plus,
            -self.frame.e_minus,
        ];
        let mut out = [[[Complex64::new(0.0, 0.0); 4]; 2]; 2];
        for (i, u) in [BathLabel::Left, BathLabel::Right].into_iter().enumerate() {
            for (k, &w) in freqs.iter().enumerate() {
                let re = match order {
                    None => self.kernel(u, w)?,
                    Some(o) => self.kernel_ordered(u, w, o)?,
                };
                let im = if self.config.conventions.include_pv && order.is_none() {
                    [
                        self.kernel_time_domain(u, w, 0)?.im,
                        self.kernel_time_domain(u, w, 1)?.im,
                    ]
                } else {
                    [0.0, 0.0]
                };
                for m in 0..2 {
                    out[i][m][k] = Complex64::new(re[m], im[m]);
                }
            }
        }
        Ok(out)
    }

    /// All polaron rates at the dressed eigenfrequencies.
    pub fn ptre_rates(&self) -> Result<PtreRateTable, RateError> {
        let (gamma_x, gamma_y) = self.middle_rates(false);
        Ok(PtreRateTable {
            frame: self.frame,
            gamma_x,
            gamma_y,
            kernels: self.edge_table(None)?,
        })
    }

    /// Polaron rates expanded to a fixed order in the correlation phase; the
    /// middle-bath rates are kept at one phonon.
    pub fn ordered_rates(&self, order: RateOrder) -> Result<PtreRateTable, RateError> {
        let (gamma_x, gamma_y) = self.middle_rates(true);
        Ok(PtreRateTable {
            frame: self.frame,
            gamma_x,
            gamma_y,
            kernels: self.edge_table(Some(order))?,
        })
    }

    fn localized_rates(
        &self,
        kernel: impl Fn(BathLabel, f64) -> Result<[f64; 2], RateError>,
    ) -> Result<NibaRateTable, RateError> {
        let de = self.config.system.eps_l - self.config.system.eps_r;
        let mut t = NibaRateTable {
            g_m_plus: self.corr.full_line_tunneling(de),
            g_m_minus: self.corr.full_line_tunneling(-de),
            ..NibaRateTable::default()
        };
        for u in [BathLabel::Left, BathLabel::Right] {
            let e = self.frame.localized_energy(u);
            let up = kernel(u, -e)?;
            let down = kernel(u, e)?;
            let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
            let i = edge_index(u)?;
            t.g_plus[i] = 2.0 * up[0];
            t.g_minus[i] = 2.0 * down[0];
            t.omega_plus[i] = ratio(up[1], up[0]);
            t.omega_minus[i] = -ratio(down[1], down[0]);
        }
        Ok(t)
    }

    /// Strong-coupling rates between the localized states.
    pub fn niba_rates(&self) -> Result<NibaRateTable, RateError> {
        self.localized_rates(|u, w| self.kernel(u, w))
    }

    /// Strong-coupling rates with the edge kernels truncated at one phonon.
    pub fn niba_first_order_rates(&self) -> Result<NibaRateTable, RateError> {
        self.localized_rates(|u, w| self.kernel_ordered(u, w, RateOrder::First))
    }

    /// Strong-coupling rates with only the sequential term of the edge kernels.
    pub fn niba_zeroth_order_rates(&self) -> Result<NibaRateTable, RateError> {
        self.localized_rates(|u, w| self.kernel_ordered(u, w, RateOrder::Zeroth))
    }
}

/// Rates of the polaron scheme at the dressed eigenfrequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PtreRateTable {
    pub frame: PolaronFrame,
    /// `γ_x` at `ω = -Δ_E, 0, +Δ_E`.
    pub gamma_x: [Complex64; 3],
    /// `γ_y` at `ω = -Δ_E, 0, +Δ_E`.
    pub gamma_y: [Complex64; 3],
    /// `K_u^m` at `E_+, E_-, -E_+, -E_-`, indexed `[u][m][k]`.
    pub kernels: [[[Complex64; 4]; 2]; 2],
}

/// Dressed eigenlevel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Plus,
    Minus,
}

impl PtreRateTable {
    /// `K_u^m(±E_s)`; `negate` selects `-E_s`.
    pub fn kernel(&self, u: usize, moment: usize, level: Level, negate: bool) -> Complex64 {
        let k = match (level, negate) {
            (Level::Plus, false) => 0,
            (Level::Minus, false) => 1,
            (Level::Plus, true) => 2,
            (Level::Minus, true) => 3,
        };
        self.kernels[u][moment][k]
    }

    /// `κ^{(m)}_{u,±}(E_s)` in the kernel normalisation.
    pub fn kappa(&self, u: usize, sign: Sign, level: Level, moment: usize) -> Complex64 {
        self.kernel(u, moment, level, sign == Sign::Plus)
    }
}

/// Strong-coupling rates; index 0 is the left bath, 1 the right.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NibaRateTable {
    pub g_m_plus: f64,
    pub g_m_minus: f64,
    pub g_plus: [f64; 2],
    pub g_minus: [f64; 2],
    pub omega_plus: [f64; 2],
    pub omega_minus: [f64; 2],
}

/// Weak-coupling local and combined rates, bare eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedfieldRateTable {
    pub frame: PolaronFrame,
    /// `κ^e_{u,s}` indexed `[u][s]`, `s = 0` for `E_+`, `1` for `E_-`.
    pub kappa_e: [[f64; 2]; 2],
    pub kappa_a: [[f64; 2]; 2],
    pub kappa_e_p: f64,
    pub kappa_a_p: f64,
    pub gamma_e: [f64; 2],
    pub gamma_a: [f64; 2],
    pub gamma_p: [f64; 2],
}

/// Weak-coupling rates with `η = 1` and no level shift.
pub fn redfield_rates(config: &ModelConfig) -> Result<RedfieldRateTable, RateError> {
    config.validate()?;
    let frame = PolaronFrame::bare(&config.system);
    if !(frame.e_minus > 0.0) {
        return Err(RateError::RegimeViolation {
            e_minus: frame.e_minus,
        });
    }
    let levels = [frame.e_plus, frame.e_minus];
    let mut kappa_e = [[0.0; 2]; 2];
    let mut kappa_a = [[0.0; 2]; 2];
    for (i, bath) in [&config.left, &config.right].into_iter().enumerate() {
        for (s, &e) in levels.iter().enumerate() {
            kappa_e[i][s] = bath.absorption_spectrum(e);
            kappa_a[i][s] = bath.emission_spectrum(e);
        }
    }
    let d = frame.gap();
    let kappa_e_p = config.middle.absorption_spectrum(d);
    let kappa_a_p = config.middle.emission_spectrum(d);
    let (c2, s2) = (
        (0.5 * frame.theta).cos().powi(2),
        (0.5 * frame.theta).sin().powi(2),
    );
    let combine = |k: &[[f64; 2]; 2]| {
        [
            0.5 * (k[0][0] * c2 + k[1][0] * s2),
            0.5 * (k[0][1] * s2 + k[1][1] * c2),
        ]
    };
    let sp = config.conventions.gamma_p.factor() * frame.theta.sin().powi(2);
    Ok(RedfieldRateTable {
        frame,
        gamma_e: combine(&kappa_e),
        gamma_a: combine(&kappa_a),
        gamma_p: [sp * kappa_e_p, sp * kappa_a_p],
        kappa_e,
        kappa_a,
        kappa_e_p,
        kappa_a_p,
    })
}

/// Direct quadrature of the one-phonon convolution for the test suite:
/// `(1/4π) ∫ dω₁ ω₁^m Λ_u(1+n_u)(ω₁) · (π/4) S_m(ω - ω₁)` on a uniform grid.
pub fn one_phonon_convolution_reference(
    bath: &BathParams,
    middle: &BathParams,
    omega: f64,
    moment: i32,
) -> f64 {
    let edges: Vec<f64> = (0..=4000).map(|k| -200.0 + 0.1 * k as f64).collect();
    let mut edges = edges;
    edges.push(omega);
    edges.push(0.0);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let grid = PanelGrid::new(edges).expect("uniform grid");
    integrate_on(&grid, |x| {
        x.powi(moment) * bath.emission_spectrum(x) * middle.phase_spectrum(omega - x)
    }) / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(alpha: f64) -> RateEngine {
        RateEngine::new(&ModelConfig::default().with_alpha(alpha)).unwrap()
    }

    #[test]
    fn weak_coupling_kernels_reduce_to_local_rates() {
        let e = engine(1e-3);
        let left = e.config.left;
        for &w in &[e.frame.e_plus, e.frame.e_minus] {
            let k = e.ptre_kappa(BathLabel::Left, w, 0, Sign::Plus).unwrap();
            let target = left.absorption_spectrum(w) / 4.0;
            assert!((k.re / target - 1.0).abs() < 0.02, "{} vs {}", k.re, target);
        }
    }

    #[test]
    fn zero_edge_coupling_gives_zero_rates() {
        let mut cfg = ModelConfig::default().with_alpha(0.5);
        cfg.right.coupling = 0.0;
        let e = RateEngine::new(&cfg).unwrap();
        let k = e.ptre_kappa(BathLabel::Right, 0.7, 0, Sign::Minus).unwrap();
        assert_eq!(k.norm(), 0.0);
        assert_eq!(
            e.kernel_time_domain(BathLabel::Right, 0.7, 1)
                .unwrap()
                .norm(),
            0.0
        );
    }

    #[test]
    fn frequency_and_time_routes_agree() {
        let e = engine(0.8);
        for &w in &[1.3, -0.4, 6.0, -9.0] {
            for u in [BathLabel::Left, BathLabel::Right] {
                let f = e.kernel(u, w).unwrap();
                for m in 0..2 {
                    let t = e.kernel_time_domain(u, w, m).unwrap().re;
                    let floor = 1e-9 * e.config.bath(u).coupling;
                    assert!(
                        (f[m] - t).abs() < 1e-6 * f[m].abs() + floor,
                        "{u:?} m={m} w={w}: {} vs {}",
                        f[m],
                        t
                    );
                }
            }
        }
    }

    #[test]
    fn one_phonon_convolution_dual_routes() {
        let e = engine(0.05);
        let frame_w = -e.frame.e_left;
        for u in [BathLabel::Left, BathLabel::Right] {
            let bath = *e.config.bath(u);
            let parts = e.kernel_parts(&bath, frame_w);
            let reference =
                one_phonon_convolution_reference(&bath, &e.config.middle, frame_w, 0) * e.eta_u2();
            assert!(
                (parts[0][1] / reference - 1.0).abs() < 1e-6,
                "{} {}",
                parts[0][1],
                reference
            );
        }
    }

    #[test]
    fn ordered_kappa_limits() {
        let e = engine(0.0);
        let w = e.frame.e_plus;
        let z = e
            .ordered_kappa(BathLabel::Left, w, Sign::Plus, RateOrder::Zeroth)
            .unwrap();
        let f = e
            .ordered_kappa(BathLabel::Left, w, Sign::Plus, RateOrder::First)
            .unwrap();
        assert_eq!(z, f);
        let e = engine(0.02);
        let w = e.frame.e_plus;
        let z = e
            .ordered_kappa(BathLabel::Left, w, Sign::Plus, RateOrder::Zeroth)
            .unwrap();
        let expect = e.eta_u2() * e.config.left.absorption_spectrum(w) / 2.0;
        assert!((z / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_phonon_correlation_dual_quadrature() {
        let e = engine(0.02);
        for &w in &[e.frame.gap(), e.frame.e_plus, 3.0] {
            let closed = e.one_phonon_correlation(w).re;
            let numeric = e.corr.phase_transform_numeric(w).re * e.eta_u2() / 4.0;
            assert!(
                (closed / numeric - 1.0).abs() < 1e-8,
                "{w}: {closed} {numeric}"
            );
        }
    }

    #[test]
    fn niba_rates_strong_coupling() {
        let e = engine(4.0);
        let t = e.niba_rates().unwrap();
        assert!(t.g_minus[1] / t.g_plus[1] < 1e-3);
        assert!(t.g_plus.iter().chain(t.g_minus.iter()).all(|&g| g >= 0.0));
        assert!((t.g_m_minus / t.g_m_plus / (-0.4f64 / 1.2).exp() - 1.0).abs() < 1e-6);
        // moment ratios on the shared grid reproduce the energy quanta
        let k = e.kernel(BathLabel::Left, -e.frame.e_left).unwrap();
        assert!((k[1] / k[0] - t.omega_plus[0]).abs() < 1e-12 * t.omega_plus[0]);
    }

    #[test]
    fn redfield_detailed_balance_and_regime() {
        let cfg = ModelConfig::default().with_alpha(0.004);
        let t = redfield_rates(&cfg).unwrap();
        for (i, bath) in [cfg.left, cfg.right].iter().enumerate() {
            for (s, e) in [t.frame.e_plus, t.frame.e_minus].into_iter().enumerate() {
                let r = t.kappa_e[i][s] / t.kappa_a[i][s];
                assert!((r / (-e / bath.temperature).exp() - 1.0).abs() < 1e-13);
            }
        }
        let t2 = redfield_rates(&cfg.with_alpha(0.008)).unwrap();
        assert!((t2.gamma_p[0] / t.gamma_p[0] - 2.0).abs() < 1e-12);
        let mut bad = cfg;
        bad.system.eps_r = -1.0;
        assert!(matches!(
            redfield_rates(&bad),
            Err(RateError::RegimeViolation { .. })
        ));
    }
}
