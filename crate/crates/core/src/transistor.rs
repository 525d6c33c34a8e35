//! Parameter sweeps and transistor figures of merit.
//!
//! Grid points are independent and evaluated in parallel; results are always
//! collected in grid order so output never depends on the worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::config::ModelConfig;
use crate::rates::{redfield_rates, NibaRateTable, RateEngine, RateError};
use crate::solvers::{
    niba_currents, niba_table, scheme_currents, two_terminal_current, CurrentOrder, CurrentTriple,
    NibaSolution, Scheme, SolverError,
};

/// Relative threshold on `|dJ_m/dT_m|` below which a gain is reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransistorError {
    #[error("invalid sweep grid: {0}")]
    Grid(String),
    #[error("{scheme} failed at {parameter} = {value}: {source}")]
    Point {
        scheme: &'static str,
        parameter: &'static str,
        value: f64,
        source: SolverError,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<RateError> for TransistorError {
    fn from(e: RateError) -> Self {
        TransistorError::Solver(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn linear(min: f64, max: f64, n: usize) -> Self {
        Self {
            min,
            max,
            n,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, n: usize) -> Self {
        Self {
            min,
            max,
            n,
            spacing: Spacing::Log,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, TransistorError> {
        if self.n < 3 {
            return Err(TransistorError::Grid(format!(
                "need at least 3 points, got {}",
                self.n
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(TransistorError::Grid(format!(
                "range [{}, {}] is not increasing",
                self.min, self.max
            )));
        }
        let last = (self.n - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..self.n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / last)
                .collect(),
            Spacing::Log => {
                if self.min <= 0.0 {
                    return Err(TransistorError::Grid(
                        "log grid needs a positive lower bound".into(),
                    ));
                }
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..self.n)
                    .map(|i| (a + (b - a) * i as f64 / last).exp())
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    MiddleTemperature,
    Alpha,
    TemperatureBias,
}

impl SweptParameter {
    pub fn key(self) -> &'static str {
        match self {
            SweptParameter::MiddleTemperature => "T_m",
            SweptParameter::Alpha => "alpha_m",
            SweptParameter::TemperatureBias => "delta_T",
        }
    }

    /// The configuration at one grid value.
    pub fn apply(self, cfg: &ModelConfig, value: f64) -> ModelConfig {
        match self {
            SweptParameter::MiddleTemperature => cfg.with_middle_temperature(value),
            SweptParameter::Alpha => cfg.with_alpha(value),
            SweptParameter::TemperatureBias => {
                cfg.with_middle_temperature(cfg.left.temperature - value)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub grid: Grid,
    pub schemes: Vec<Scheme>,
    pub config: ModelConfig,
}

/// Evaluates `f` on every grid value, in parallel, keeping grid order.
pub fn evaluate_grid<T, F>(values: &[f64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync,
{
    values.par_iter().map(|&x| f(x)).collect()
}

fn point_error(
    scheme: Scheme,
    parameter: SweptParameter,
    value: f64,
) -> impl Fn(SolverError) -> TransistorError {
    move |source| TransistorError::Point {
        scheme: scheme.name(),
        parameter: parameter.key(),
        value,
        source,
    }
}

fn check_increasing(xs: &[f64]) -> Result<(), TransistorError> {
    if xs.len() < 3 {
        return Err(TransistorError::Grid(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(TransistorError::Grid(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Derivative at `x` of the parabola through three points.
fn parabola_slope(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let w0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    let w1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    let w2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    w0 * ys[0] + w1 * ys[1] + w2 * ys[2]
}

/// Second-order derivative estimates on a nonuniform grid: central in the
/// interior, one-sided at both ends.
pub fn grid_derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let s = i.clamp(1, n - 2) - 1;
            parabola_slope(
                [xs[s], xs[s + 1], xs[s + 2]],
                [ys[s], ys[s + 1], ys[s + 2]],
                xs[i],
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationPoint {
    pub t_m: f64,
    pub currents: CurrentTriple,
    pub d_j_l: f64,
    pub d_j_r: f64,
    pub d_j_m: f64,
    pub beta_l: f64,
    pub beta_r: f64,
    /// Sign of `∂J_r/∂J_m`; `β_l = |β_r·gain_sign + 1|`.
    pub gain_sign: f64,
    pub divergent: bool,
}

/// Gains from currents already tabulated along a `T_m` grid.
///
/// A point is flagged when `|dJ_m/dT_m|` falls below the relative threshold,
/// or when it is the grid point closest to a sign change of `dJ_m/dT_m`: on a
/// finite grid the derivative rarely lands inside the threshold band.
pub fn amplification_from_currents(
    t_m: &[f64],
    currents: &[CurrentTriple],
) -> Result<Vec<AmplificationPoint>, TransistorError> {
    check_increasing(t_m)?;
    if currents.len() != t_m.len() {
        return Err(TransistorError::Grid(
            "currents and grid differ in length".into(),
        ));
    }
    let column = |f: fn(&CurrentTriple) -> f64| -> Vec<f64> { currents.iter().map(f).collect() };
    let dl = grid_derivative(t_m, &column(|c| c.j_l));
    let dr = grid_derivative(t_m, &column(|c| c.j_r));
    let dm = grid_derivative(t_m, &column(|c| c.j_m));
    let max = dm.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    let mut flagged: Vec<bool> = dm
        .iter()
        .map(|d| d.abs() < DIVERGENCE_THRESHOLD * max)
        .collect();
    for i in 0..dm.len() - 1 {
        if dm[i] != 0.0 && dm[i + 1] != 0.0 && dm[i].signum() != dm[i + 1].signum() {
            let nearest = if dm[i].abs() <= dm[i + 1].abs() {
                i
            } else {
                i + 1
            };
            flagged[nearest] = true;
        }
    }
    Ok((0..t_m.len())
        .map(|i| AmplificationPoint {
            t_m: t_m[i],
            currents: currents[i],
            d_j_l: dl[i],
            d_j_r: dr[i],
            d_j_m: dm[i],
            beta_l: dl[i].abs() / dm[i].abs(),
            beta_r: dr[i].abs() / dm[i].abs(),
            gain_sign: (dr[i] * dm[i]).signum(),
            divergent: flagged[i],
        })
        .collect())
}

/// Currents of one scheme along a grid of one swept parameter.
pub fn current_scan(
    cfg: &ModelConfig,
    scheme: Scheme,
    parameter: SweptParameter,
    values: &[f64],
) -> Vec<Result<CurrentTriple, TransistorError>> {
    evaluate_grid(values, |x| {
        scheme_currents(&parameter.apply(cfg, x), scheme).map_err(point_error(scheme, parameter, x))
    })
}

/// `β_u = |∂J_u/∂J_m|` along a `T_m` grid.
pub fn amplification_scan(
    cfg: &ModelConfig,
    scheme: Scheme,
    t_m: &[f64],
) -> Result<Vec<AmplificationPoint>, TransistorError> {
    check_increasing(t_m)?;
    let currents = current_scan(cfg, scheme, SweptParameter::MiddleTemperature, t_m)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    amplification_from_currents(t_m, &currents)
}

/// Weak-coupling estimate of `β_r`, independent of the middle bath.
pub fn weak_coupling_beta(cfg: &ModelConfig) -> Result<f64, TransistorError> {
    let t = redfield_rates(cfg)?;
    let (ke, ka) = (t.kappa_e, t.kappa_a);
    let numerator = ke[0][0] * ka[1][0] - ka[0][0] * ke[1][0];
    let (ga, ge) = (t.gamma_a, t.gamma_e);
    let denominator = ga[1] * (ga[0] + ge[0]) + ga[0] * ge[1];
    Ok(t.frame.theta.sin().powi(2) / 16.0 * (numerator / denominator).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnoverKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turnover {
    pub index: usize,
    pub delta_t: f64,
    pub current: f64,
    pub kind: TurnoverKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdtcRow {
    pub delta_t: f64,
    pub t_m: f64,
    /// Heat current from the left bath into the middle bath.
    pub current: f64,
    /// Strong-coupling rates behind the current, when that scheme is used.
    pub rates: Option<NibaRateTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdtcReport {
    pub rows: Vec<NdtcRow>,
    pub turnovers: Vec<Turnover>,
}

impl NdtcReport {
    pub fn currents(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.current).collect()
    }
}

/// Interior points strictly above (or below) both neighbours by more than `tol`.
pub fn find_turnovers(xs: &[f64], ys: &[f64], tol: f64) -> Vec<Turnover> {
    (1..ys.len().saturating_sub(1))
        .filter_map(|i| {
            let (l, r) = (ys[i] - ys[i - 1], ys[i] - ys[i + 1]);
            let kind = if l > tol && r > tol {
                TurnoverKind::Maximum
            } else if l < -tol && r < -tol {
                TurnoverKind::Minimum
            } else {
                return None;
            };
            Some(Turnover {
                index: i,
                delta_t: xs[i],
                current: ys[i],
                kind,
            })
        })
        .collect()
}

/// Two-terminal current `J_{l-m}` against the bias `ΔT = T_l - T_m`.
pub fn ndtc_scan(
    cfg: &ModelConfig,
    scheme: Scheme,
    order: CurrentOrder,
    delta_t: &[f64],
) -> Result<NdtcReport, TransistorError> {
    if delta_t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(TransistorError::Grid(
            "grid must be strictly increasing".into(),
        ));
    }
    let bias = SweptParameter::TemperatureBias;
    let rows = evaluate_grid(delta_t, |dt| -> Result<NdtcRow, TransistorError> {
        let point = bias.apply(cfg, dt);
        let fail = point_error(scheme, bias, dt);
        let current = two_terminal_current(&point, scheme, order).map_err(&fail)?;
        let rates = match scheme {
            Scheme::Niba => {
                let engine = RateEngine::new(&point.two_terminal()).map_err(|e| fail(e.into()))?;
                Some(niba_table(&engine, order).map_err(&fail)?)
            }
            _ => None,
        };
        Ok(NdtcRow {
            delta_t: dt,
            t_m: point.middle.temperature,
            current,
            rates,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let ys: Vec<f64> = rows.iter().map(|r| r.current).collect();
    let turnovers = find_turnovers(delta_t, &ys, 1e-12 * cfg.left.coupling);
    Ok(NdtcReport { rows, turnovers })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismPoint {
    pub t_m: f64,
    pub rates: NibaRateTable,
    pub solution: NibaSolution,
}

/// Strong-coupling rates and current components along a `T_m` grid.
pub fn mechanism_scan(
    cfg: &ModelConfig,
    t_m: &[f64],
) -> Result<Vec<MechanismPoint>, TransistorError> {
    let param = SweptParameter::MiddleTemperature;
    evaluate_grid(t_m, |t| {
        let fail = point_error(Scheme::Niba, param, t);
        let engine = RateEngine::new(&param.apply(cfg, t)).map_err(|e| fail(e.into()))?;
        let rates = engine.niba_rates().map_err(|e| fail(e.into()))?;
        let solution = niba_currents(&rates).map_err(&fail)?;
        Ok(MechanismPoint {
            t_m: t,
            rates,
            solution,
        })
    })
    .into_iter()
    .collect()
}

/// Gains built from the truncated strong-coupling currents `J_r ≈ J^{r}` and
/// `J_m ≈ J^{(a)} + J^{(b)}`.
pub fn truncated_amplification(
    points: &[MechanismPoint],
) -> Result<Vec<AmplificationPoint>, TransistorError> {
    let t_m: Vec<f64> = points.iter().map(|p| p.t_m).collect();
    let currents: Vec<CurrentTriple> = points
        .iter()
        .map(|p| {
            let (j_r, j_m) = (p.solution.j_r_approx, p.solution.j_m_truncated());
            CurrentTriple {
                j_l: -j_r - j_m,
                j_r,
                j_m,
            }
        })
        .collect();
    amplification_from_currents(&t_m, &currents)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeRow {
    pub alpha: f64,
    pub ptre: CurrentTriple,
    pub niba: CurrentTriple,
    /// `None` where the weak-coupling scheme is not applicable.
    pub redfield: Option<CurrentTriple>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub rows: Vec<RegimeRow>,
    /// Smallest coupling where the weak-coupling `J_m` is off by more than the tolerance.
    pub redfield_breakdown_jm: Option<f64>,
    pub redfield_breakdown_jl: Option<f64>,
    /// Smallest coupling from which the strong-coupling `J_m` stays within the tolerance.
    pub niba_onset_jm: Option<f64>,
    pub niba_onset_jl: Option<f64>,
}

impl RegimeReport {
    pub const TOLERANCE: f64 = 0.1;
    pub const NOMINAL_REDFIELD: f64 = 0.01;
    pub const NOMINAL_NIBA: f64 = 2.0;
}

fn relative_gap(a: f64, reference: f64) -> f64 {
    (a - reference).abs() / reference.abs()
}

/// Couplings where the limiting schemes stop or start agreeing with the polaron scheme.
pub fn regime_classifier(
    cfg: &ModelConfig,
    alphas: &[f64],
) -> Result<RegimeReport, TransistorError> {
    check_increasing(alphas)?;
    let param = SweptParameter::Alpha;
    let rows = evaluate_grid(alphas, |a| -> Result<RegimeRow, TransistorError> {
        let point = param.apply(cfg, a);
        let ptre =
            scheme_currents(&point, Scheme::Ptre).map_err(point_error(Scheme::Ptre, param, a))?;
        let niba =
            scheme_currents(&point, Scheme::Niba).map_err(point_error(Scheme::Niba, param, a))?;
        let redfield = scheme_currents(&point, Scheme::Redfield).ok();
        Ok(RegimeRow {
            alpha: a,
            ptre,
            niba,
            redfield,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let tol = RegimeReport::TOLERANCE;
    let breakdown = |pick: fn(&CurrentTriple) -> f64| {
        rows.iter()
            .find(|r| {
                r.redfield
                    .is_none_or(|c| relative_gap(pick(&c), pick(&r.ptre)) > tol)
            })
            .map(|r| r.alpha)
    };
    let onset = |pick: fn(&CurrentTriple) -> f64| {
        let mut start = None;
        for r in &rows {
            if relative_gap(pick(&r.niba), pick(&r.ptre)) <= tol {
                start.get_or_insert(r.alpha);
            } else {
                start = None;
            }
        }
        start
    };
    Ok(RegimeReport {
        redfield_breakdown_jm: breakdown(|c| c.j_m),
        redfield_breakdown_jl: breakdown(|c| c.j_l),
        niba_onset_jm: onset(|c| c.j_m),
        niba_onset_jl: onset(|c| c.j_l),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            Grid::linear(0.0, 1.0, 3).values().unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let g = Grid::log(1e-4, 10.0, 6).values().unwrap();
        assert!((g[1] / g[0] - 10.0).abs() < 1e-12);
        assert!(Grid::linear(0.0, 1.0, 2).values().is_err());
        assert!(Grid::linear(1.0, 1.0, 5).values().is_err());
        assert!(Grid::log(0.0, 1.0, 5).values().is_err());
    }

    #[test]
    fn derivative_is_exact_for_parabolas() {
        let xs = [0.0, 0.3, 0.5, 1.2, 1.3, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x * x).collect();
        for (x, d) in xs.iter().zip(grid_derivative(&xs, &ys)) {
            assert!((d - (-2.0 + 6.0 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn flags_the_extremum_of_the_middle_current() {
        let t: Vec<f64> = (0..21).map(|i| 0.4 + 0.08 * i as f64).collect();
        let currents: Vec<CurrentTriple> = t
            .iter()
            .map(|&x| {
                let j_m = -(x - 1.03f64).powi(2);
                CurrentTriple::from_edges(-2.0 * x - j_m, 2.0 * x)
            })
            .collect();
        let pts = amplification_from_currents(&t, &currents).unwrap();
        let flagged: Vec<f64> = pts.iter().filter(|p| p.divergent).map(|p| p.t_m).collect();
        assert_eq!(flagged.len(), 1);
        assert!((flagged[0] - 1.04).abs() < 1e-12);
        for p in pts.iter().filter(|p| !p.divergent) {
            assert!(
                (p.beta_l - (p.beta_r * p.gain_sign + 1.0).abs()).abs() < 1e-9 * p.beta_l.max(1.0)
            );
        }
    }

    #[test]
    fn turnovers_need_strict_neighbours() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(find_turnovers(&xs, &[0.0, 1.0, 1.0, 1.0, 0.5, 0.2], 1e-12).is_empty());
        let t = find_turnovers(&xs, &[0.0, 1.0, 2.0, 1.5, 0.5, 0.2], 1e-12);
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].index, t[0].kind), (2, TurnoverKind::Maximum));
    }

    #[test]
    fn weak_coupling_beta_ignores_the_middle_bath() {
        let base = ModelConfig::default();
        let b0 = weak_coupling_beta(&base.with_alpha(1e-3)).unwrap();
        for (a, t) in [(1e-4, 0.5), (0.3, 1.7), (2.0, 0.9)] {
            let b = weak_coupling_beta(&base.with_alpha(a).with_middle_temperature(t)).unwrap();
            assert!((b / b0 - 1.0).abs() < 1e-12);
        }
        let mut sym = base;
        sym.right = sym.left.with_coupling(sym.left.coupling);
        sym.right.label = crate::model::BathLabel::Right;
        assert!(weak_coupling_beta(&sym).unwrap().abs() < 1e-12 * b0);
    }

    #[test]
    fn ndtc_vanishes_without_bias() {
        let cfg = ModelConfig::default().with_alpha(0.02);
        let r = ndtc_scan(&cfg, Scheme::Niba, CurrentOrder::Full, &[0.0, 0.1, 0.2]).unwrap();
        assert!(r.rows[0].current.abs() < 1e-6 * cfg.left.coupling);
        assert!(r.rows[1].current > 0.0);
    }
}
