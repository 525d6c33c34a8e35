//! Steady states and heat currents.
//!
//! The polaron scheme is solved numerically on the five-component density
//! vector `[ρ_{++}, ρ_{--}, ρ_{00}, ρ_{+-}, ρ_{-+}]`; the `ρ_{0±}` coherences
//! decouple and are dropped. The strong- and weak-coupling schemes use their
//! closed-form populations.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::config::ModelConfig;
use crate::rates::{
    Level, NibaRateTable, PtreRateTable, RateEngine, RateError, RateOrder, RedfieldRateTable,
};

pub type Matrix5 = SMatrix<Complex64, 5, 5>;
pub type Vector5 = SVector<Complex64, 5>;
type Op = Matrix3<Complex64>;

/// Row-major positions of the kept density-matrix elements in the 3×3 eigenbasis `{+, -, 0}`.
const KEPT: [usize; 5] = [0, 4, 8, 1, 3];
const TRACE_ROW: [f64; 5] = [1.0, 1.0, 1.0, 0.0, 0.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Rates(#[from] RateError),
    #[error("steady state is not unique: null space dimension {dimension} (singular values {singular:?})")]
    DegenerateSteadyState {
        dimension: usize,
        singular: Vec<f64>,
    },
    #[error("steady-state solve failed: {0}")]
    Singular(String),
    #[error("closed-form normalisation vanishes")]
    DegenerateNormalisation,
    #[error("steady-state residual {0:e} exceeds tolerance")]
    Residual(f64),
}

/// Which generator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentTag {
    Base,
    /// `∂L/∂(iχ_u)` at `χ = 0`, `u = 0` left, `1` right.
    Counting(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub matrix: Matrix5,
    pub tag: MomentTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityVector {
    pub components: [Complex64; 5],
}

impl DensityVector {
    /// `[ρ_{++}, ρ_{--}, ρ_{00}]`.
    pub fn populations(&self) -> [f64; 3] {
        [
            self.components[0].re,
            self.components[1].re,
            self.components[2].re,
        ]
    }

    pub fn trace(&self) -> Complex64 {
        self.components[0] + self.components[1] + self.components[2]
    }

    pub fn coherence(&self) -> Complex64 {
        self.components[3]
    }

    fn vector(&self) -> Vector5 {
        Vector5::from_column_slice(&self.components)
    }
}

/// Heat currents; positive values flow into the bath.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurrentTriple {
    pub j_l: f64,
    pub j_r: f64,
    pub j_m: f64,
}

impl CurrentTriple {
    pub fn from_edges(j_l: f64, j_r: f64) -> Self {
        Self {
            j_l,
            j_r,
            j_m: -j_l - j_r,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.j_l, self.j_m, self.j_r]
    }
}

fn superoperator(map: impl Fn(&Op) -> Op) -> Matrix5 {
    let mut full = SMatrix::<Complex64, 9, 9>::zeros();
    for k in 0..9 {
        let mut e = Op::zeros();
        e[(k / 3, k % 3)] = Complex64::new(1.0, 0.0);
        let out = map(&e);
        for r in 0..9 {
            full[(r, k)] = out[(r / 3, r % 3)];
        }
    }
    Matrix5::from_fn(|i, j| full[(KEPT[i], KEPT[j])])
}

/// Operators of the eigenbasis `{+, -, 0}` for one rate table.
struct Couplings {
    energies: [f64; 3],
    sigma_x: Op,
    sigma_y: Op,
    lowering: [Op; 2],
}

impl Couplings {
    fn new(t: &PtreRateTable) -> Self {
        let f = &t.frame;
        let (s, c) = f.theta.sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        let mut sigma_x = Op::zeros();
        sigma_x[(0, 0)] = re(s);
        sigma_x[(1, 1)] = re(-s);
        sigma_x[(0, 1)] = re(c);
        sigma_x[(1, 0)] = re(c);
        let mut sigma_y = Op::zeros();
        sigma_y[(0, 1)] = Complex64::new(0.0, -1.0);
        sigma_y[(1, 0)] = Complex64::new(0.0, 1.0);
        let (sh, ch) = (0.5 * f.theta).sin_cos();
        // |0⟩⟨l| and |0⟩⟨r| expressed on |+⟩, |-⟩
        let mut left = Op::zeros();
        left[(2, 0)] = re(ch);
        left[(2, 1)] = re(-sh);
        let mut right = Op::zeros();
        right[(2, 0)] = re(sh);
        right[(2, 1)] = re(ch);
        Self {
            energies: [f.e_plus, f.e_minus, 0.0],
            sigma_x,
            sigma_y,
            lowering: [left, right],
        }
    }
}

/// `W_{ab} = A_{ab} γ(E_b - E_a)` for a middle-bath channel.
fn middle_weights(a: &Op, rates: &[Complex64; 3]) -> Op {
    let mut w = Op::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let k = match (i, j) {
                (0, 1) => 0,
                (1, 0) => 2,
                _ => 1,
            };
            w[(i, j)] = a[(i, j)] * rates[k];
        }
    }
    w
}

struct EdgeWeights {
    w12: Op,
    w21: Op,
    v12: Op,
    v21: Op,
}

fn edge_weights(t: &PtreRateTable, s: &Op, u: usize, moment: usize) -> EdgeWeights {
    let mut w = EdgeWeights {
        w12: Op::zeros(),
        w21: Op::zeros(),
        v12: Op::zeros(),
        v21: Op::zeros(),
    };
    for (col, level) in [Level::Plus, Level::Minus].into_iter().enumerate() {
        let c = s[(2, col)];
        let at = t.kernel(u, moment, level, false);
        let neg = t.kernel(u, moment, level, true);
        w.w12[(2, col)] = c * at;
        w.v12[(2, col)] = c * neg.conj();
        w.w21[(col, 2)] = c * neg;
        w.v21[(col, 2)] = c * at.conj();
    }
    w
}

/// Generator of the polaron master equation, or its counting derivative.
pub fn build_ptre_generator(t: &PtreRateTable, tag: MomentTag) -> Generator {
    let ops = Couplings::new(t);
    let matrix = match tag {
        MomentTag::Base => {
            let h = Op::from_diagonal(&nalgebra::Vector3::from_iterator(
                ops.energies.iter().map(|&e| Complex64::new(e, 0.0)),
            ));
            let i = Complex64::new(0.0, 1.0);
            let wx = middle_weights(&ops.sigma_x, &t.gamma_x);
            let wy = middle_weights(&ops.sigma_y, &t.gamma_y);
            let edges: Vec<(Op, Op, EdgeWeights)> = (0..2)
                .map(|u| {
                    let s = ops.lowering[u];
                    (s, s.adjoint(), edge_weights(t, &s, u, 0))
                })
                .collect();
            superoperator(|r| {
                let mut out = -(h * r - r * h) * i;
                for (a, w) in [(&ops.sigma_x, &wx), (&ops.sigma_y, &wy)] {
                    let wd = w.adjoint();
                    out -= a * w * r - w * r * a + r * wd * a - a * r * wd;
                }
                for (s, sd, w) in &edges {
                    out -= sd * w.w12 * r - w.w12 * r * sd + r * w.v12 * sd - sd * r * w.v12;
                    out -= s * w.w21 * r - w.w21 * r * s + r * w.v21 * s - s * r * w.v21;
                }
                out
            })
        }
        MomentTag::Counting(u) => {
            let s = ops.lowering[u];
            let sd = s.adjoint();
            let w = edge_weights(t, &s, u, 1);
            superoperator(|r| w.w12 * r * sd + sd * r * w.v12 + w.w21 * r * s + s * r * w.v21)
        }
    };
    Generator { matrix, tag }
}

fn null_dimension(m: &Matrix5) -> (usize, Vec<f64>) {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let mut s: Vec<f64> = sv.iter().cloned().collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dim = s.iter().filter(|&&x| x <= 1e-13 * max).count();
    (dim, s)
}

/// Unique trace-normalised null vector of a base generator.
pub fn steady_state(gen: &Generator) -> Result<DensityVector, SolverError> {
    let (dim, singular) = null_dimension(&gen.matrix);
    if dim > 1 {
        return Err(SolverError::DegenerateSteadyState {
            dimension: dim,
            singular,
        });
    }
    let mut a = gen.matrix;
    for (j, &v) in TRACE_ROW.iter().enumerate() {
        a[(0, j)] = Complex64::new(v, 0.0);
    }
    let mut b = Vector5::zeros();
    b[0] = Complex64::new(1.0, 0.0);
    let p = a
        .lu()
        .solve(&b)
        .ok_or_else(|| SolverError::Singular("trace-augmented generator is singular".into()))?;
    let mut components = [Complex64::new(0.0, 0.0); 5];
    components.copy_from_slice(p.as_slice());
    Ok(DensityVector { components })
}

/// Max-norm of `L₀ P`.
pub fn residual(gen: &Generator, p: &DensityVector) -> f64 {
    (gen.matrix * p.vector())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn trace_of(m: &Matrix5, p: &DensityVector) -> f64 {
    let v = m * p.vector();
    (v[0] + v[1] + v[2]).re
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtreSolution {
    pub currents: CurrentTriple,
    pub state: DensityVector,
    pub residual: f64,
}

/// Steady state and currents of the polaron scheme for a given rate table.
pub fn ptre_currents(t: &PtreRateTable) -> Result<PtreSolution, SolverError> {
    let base = build_ptre_generator(t, MomentTag::Base);
    let state = steady_state(&base)?;
    let res = residual(&base, &state);
    let j_l = trace_of(
        &build_ptre_generator(t, MomentTag::Counting(0)).matrix,
        &state,
    );
    let j_r = trace_of(
        &build_ptre_generator(t, MomentTag::Counting(1)).matrix,
        &state,
    );
    Ok(PtreSolution {
        currents: CurrentTriple::from_edges(j_l, j_r),
        state,
        residual: res,
    })
}

/// Strong-coupling solution with the mechanism decomposition of the middle current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NibaSolution {
    pub currents: CurrentTriple,
    /// `[P_0, P_l, P_r]`.
    pub populations: [f64; 3],
    /// Globally cyclic part of the middle current.
    pub j_m_cyclic: f64,
    /// Local `|l⟩ ↔ |0⟩` pumping part of the middle current.
    pub j_m_local: f64,
    /// Right current keeping only the dominant cyclic loop.
    pub j_r_approx: f64,
}

impl NibaSolution {
    pub fn j_m_truncated(&self) -> f64 {
        self.j_m_cyclic + self.j_m_local
    }
}

pub fn niba_currents(t: &NibaRateTable) -> Result<NibaSolution, SolverError> {
    let (gmp, gmm) = (t.g_m_plus, t.g_m_minus);
    let [glp, grp] = t.g_plus;
    let [glm, grm] = t.g_minus;
    let [olp, orp] = t.omega_plus;
    let [olm, orm] = t.omega_minus;
    let a = (gmp + gmm) * (glp + grp) + gmp * grm + gmm * glm + glm * grp + grm * (glp + glm);
    if a == 0.0 || !a.is_finite() {
        return Err(SolverError::DegenerateNormalisation);
    }
    let p0 = (gmp * grm + gmm * glm + glm * grm) / a;
    let pl = (gmm * glp + gmm * grp + glp * grm) / a;
    let pr = (gmp * glp + gmp * grp + glm * grp) / a;
    let j_l = ((glp * gmp * grm * olp - glm * gmm * grp * olm)
        + (gmm + grm) * glm * glp * (olp - olm))
        / a;
    let j_r = ((glm * gmm * grp * orp - glp * gmp * grm * orm)
        + (gmp + glm) * grp * grm * (orp - orm))
        / a;
    Ok(NibaSolution {
        currents: CurrentTriple::from_edges(j_l, j_r),
        populations: [p0, pl, pr],
        j_m_cyclic: gmm * glm * grp * (olm - orp) / a,
        j_m_local: gmm * glm * glp * (olm - olp) / a,
        j_r_approx: glm * gmm * grp * orp / ((gmp + gmm) * (glp + grp)),
    })
}

/// Weak-coupling solution in the bare eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedfieldSolution {
    pub currents: CurrentTriple,
    /// `[P_+, P_-, P_0]`.
    pub populations: [f64; 3],
}

pub fn redfield_currents(t: &RedfieldRateTable) -> Result<RedfieldSolution, SolverError> {
    let f = &t.frame;
    let energies = [f.e_plus, f.e_minus];
    let (ge, ga, gp) = (t.gamma_e, t.gamma_a, t.gamma_p);
    let gs = ge[0] + ge[1];
    // bracket_ξ = Γ^e_ξ Γ^a_ξ̄ + (Γ^e_+ + Γ^e_-) Γ^ξ_p
    let bracket = [ge[0] * ga[1] + gs * gp[0], ge[1] * ga[0] + gs * gp[1]];
    let b = (ga[0] + gs) * bracket[0] + (ga[1] + gs) * bracket[1];
    if b == 0.0 || !b.is_finite() {
        return Err(SolverError::DegenerateNormalisation);
    }
    let drain = ga[0] * ga[1] + ga[0] * gp[0] + ga[1] * gp[1];
    let cos = f.theta.cos();
    let edge = |u: usize, side: f64| {
        (0..2)
            .map(|x| {
                let xi = if x == 0 { 1.0 } else { -1.0 };
                (1.0 + side * xi * cos) / (4.0 * b)
                    * energies[x]
                    * gs
                    * (t.kappa_a[u][x] * bracket[x] - t.kappa_e[u][x] * drain)
            })
            .sum::<f64>()
    };
    let j_l = edge(0, 1.0);
    let j_r = edge(1, -1.0);
    let j_m = -f.gap() * gs / b * (ga[0] * ge[1] * gp[0] - ga[1] * ge[0] * gp[1]);
    Ok(RedfieldSolution {
        currents: CurrentTriple { j_l, j_r, j_m },
        populations: [
            gs * bracket[0] / b,
            gs * bracket[1] / b,
            (ga[0] * bracket[0] + ga[1] * bracket[1]) / b,
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Ptre,
    Niba,
    Redfield,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ptre => "ptre",
            Scheme::Niba => "niba",
            Scheme::Redfield => "redfield",
        }
    }
}

/// Truncation of the polaron rates used for a current.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentOrder {
    Full,
    Ordered(RateOrder),
}

/// Currents of one scheme at one parameter point.
pub fn scheme_currents(cfg: &ModelConfig, scheme: Scheme) -> Result<CurrentTriple, SolverError> {
    Ok(match scheme {
        Scheme::Ptre => ptre_currents(&RateEngine::new(cfg)?.ptre_rates()?)?.currents,
        Scheme::Niba => niba_currents(&RateEngine::new(cfg)?.niba_rates()?)?.currents,
        Scheme::Redfield => redfield_currents(&crate::rates::redfield_rates(cfg)?)?.currents,
    })
}

/// Heat current from the left bath into the middle bath with the right bath detached.
pub fn two_terminal_current(
    cfg: &ModelConfig,
    scheme: Scheme,
    order: CurrentOrder,
) -> Result<f64, SolverError> {
    let cfg = cfg.two_terminal();
    let j = match scheme {
        Scheme::Ptre => {
            let engine = RateEngine::new(&cfg)?;
            let table = match order {
                CurrentOrder::Full => engine.ptre_rates()?,
                CurrentOrder::Ordered(o) => engine.ordered_rates(o)?,
            };
            ptre_currents(&table)?.currents
        }
        Scheme::Niba => niba_currents(&niba_table(&RateEngine::new(&cfg)?, order)?)?.currents,
        Scheme::Redfield => redfield_currents(&crate::rates::redfield_rates(&cfg)?)?.currents,
    };
    Ok(-j.j_l)
}

/// Strong-coupling rates at the requested truncation.
pub fn niba_table(engine: &RateEngine, order: CurrentOrder) -> Result<NibaRateTable, SolverError> {
    Ok(match order {
        CurrentOrder::Full => engine.niba_rates()?,
        CurrentOrder::Ordered(RateOrder::First) => engine.niba_first_order_rates()?,
        CurrentOrder::Ordered(RateOrder::Zeroth) => engine.niba_zeroth_order_rates()?,
    })
}

/// The strong-coupling two-terminal current keeping only the local pumping loop.
pub fn two_terminal_niba_approx(t: &NibaRateTable) -> f64 {
    let (gmp, gmm) = (t.g_m_plus, t.g_m_minus);
    let (glp, glm) = (t.g_plus[0], t.g_minus[0]);
    let a = (gmp + gmm) * glp + gmm * glm;
    gmm * glp * glm * (t.omega_minus[0] - t.omega_plus[0]) / a
}
