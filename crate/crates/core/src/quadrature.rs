//! Panel quadrature on graded grids.
//!
//! Every smooth function used by the solver is stored as a piecewise Legendre
//! series: on each panel the samples at Gauss-Legendre nodes are projected onto
//! `P_0..P_{N-1}`. From that representation we get plain integrals, pointwise
//! interpolation and Fourier integrals `∫ f(x) e^{iωx} dx` whose oscillatory
//! factor is integrated exactly against each Legendre mode (a Filon-type rule
//! built from spherical Bessel functions), so large `ω·h` products cost nothing
//! extra in accuracy.

use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

/// Nodes per panel.
pub const ORDER: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature on [{a}, {b}] did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    NotConverged {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
    #[error("invalid panel layout: {0}")]
    BadGrid(String),
}

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
    /// `proj[j][i] = (2j+1)/2 · w_i · P_j(t_i)` maps node samples to Legendre coefficients.
    proj: [[f64; ORDER]; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre::<ORDER>();
        let mut proj = [[0.0; ORDER]; ORDER];
        for (i, &t) in nodes.iter().enumerate() {
            let p = legendre_all(t);
            for j in 0..ORDER {
                proj[j][i] = (2 * j + 1) as f64 / 2.0 * weights[i] * p[j];
            }
        }
        Rule {
            nodes,
            weights,
            proj,
        }
    })
}

/// `P_0(t)..P_{N-1}(t)` by the three-term recurrence.
fn legendre_all(t: f64) -> [f64; ORDER] {
    let mut p = [0.0; ORDER];
    p[0] = 1.0;
    if ORDER > 1 {
        p[1] = t;
    }
    for n in 1..ORDER - 1 {
        p[n + 1] = ((2 * n + 1) as f64 * t * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
    }
    p
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut x = [0.0; N];
    let mut w = [0.0; N];
    for i in 0..N {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for n in 1..N {
                let p2 = ((2 * n + 1) as f64 * t * p1 - n as f64 * p0) / (n + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = N as f64 * (t * p1 - p0) / (t * t - 1.0);
            let step = p1 / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[N - 1 - i] = t;
        w[N - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Spherical Bessel functions `j_0(x)..j_{N-1}(x)` for real `x`.
pub fn spherical_bessel(x: f64) -> [f64; ORDER] {
    let ax = x.abs();
    let mut j = [0.0; ORDER];
    if ax < 0.5 {
        // power series, converges fast for small arguments
        let y = -0.5 * ax * ax;
        let mut lead = 1.0;
        for (n, jn) in j.iter_mut().enumerate() {
            if n > 0 {
                lead *= ax / (2 * n + 1) as f64;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..12 {
                term *= y / (k as f64 * (2 * n + 2 * k + 1) as f64);
                sum += term;
            }
            *jn = lead * sum;
        }
    } else if ax >= ORDER as f64 {
        let (s, c) = ax.sin_cos();
        j[0] = s / ax;
        if ORDER > 1 {
            j[1] = s / (ax * ax) - c / ax;
        }
        for n in 1..ORDER - 1 {
            j[n + 1] = (2 * n + 1) as f64 / ax * j[n] - j[n - 1];
        }
    } else {
        // Miller's downward recurrence, normalised against the larger of j_0, j_1
        let start = ORDER + 20 + ax as usize;
        let mut next = 0.0;
        let mut cur = 1e-30;
        let mut raw = [0.0; ORDER];
        for n in (1..=start).rev() {
            let prev = (2 * n + 1) as f64 / ax * cur - next;
            next = cur;
            cur = prev;
            if n - 1 < ORDER {
                raw[n - 1] = cur;
            }
            if cur.abs() > 1e200 {
                cur *= 1e-200;
                next *= 1e-200;
                for r in raw.iter_mut() {
                    *r *= 1e-200;
                }
            }
        }
        let (s, c) = ax.sin_cos();
        let j0 = s / ax;
        let j1 = s / (ax * ax) - c / ax;
        let scale = if j0.abs() >= j1.abs() {
            j0 / raw[0]
        } else {
            j1 / raw[1]
        };
        for n in 0..ORDER {
            j[n] = raw[n] * scale;
        }
    }
    if x < 0.0 {
        for (n, jn) in j.iter_mut().enumerate() {
            if n % 2 == 1 {
                *jn = -*jn;
            }
        }
    }
    j
}

/// Panel edges that are fine near a set of anchor points and coarsen
/// geometrically away from them.
///
/// The local width at `x` is `min_k(h_k + growth·|x - c_k|)` capped at `h_max`,
/// where `(c_k, h_k)` are the anchors. Every anchor and every extra breakpoint
/// inside `[a, b]` becomes a panel edge.
pub fn graded_edges(
    a: f64,
    b: f64,
    anchors: &[(f64, f64)],
    growth: f64,
    h_max: f64,
    breakpoints: &[f64],
) -> Vec<f64> {
    assert!(b > a, "graded_edges needs a < b");
    let width = |x: f64| {
        anchors
            .iter()
            .map(|&(c, h)| h + growth * (x - c).abs())
            .fold(h_max, f64::min)
    };
    let mut stops: Vec<f64> = anchors
        .iter()
        .map(|&(c, _)| c)
        .chain(breakpoints.iter().copied())
        .filter(|&x| x > a && x < b)
        .collect();
    stops.push(b);
    stops.sort_by(|x, y| x.partial_cmp(y).unwrap());
    stops.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + x.abs()));

    let mut edges = vec![a];
    let mut x = a;
    for &stop in &stops {
        while stop - x > 1e-12 * (1.0 + stop.abs()) {
            let h = width(x).min(width(x + 0.5 * width(x)));
            if x + 1.5 * h >= stop {
                // split the remainder evenly rather than leave a sliver
                if stop - x > h {
                    let mid = 0.5 * (x + stop);
                    edges.push(mid);
                }
                x = stop;
            } else {
                x += h;
            }
            edges.push(x);
        }
    }
    edges
}

/// Legendre expansion of a function on a single panel.
#[derive(Debug, Clone)]
pub struct LegendrePanel {
    pub mid: f64,
    pub half: f64,
    coeffs: [Complex64; ORDER],
}

impl LegendrePanel {
    pub fn from_samples(a: f64, b: f64, samples: &[Complex64]) -> Self {
        debug_assert_eq!(samples.len(), ORDER);
        let r = rule();
        let mut coeffs = [Complex64::new(0.0, 0.0); ORDER];
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = samples
                .iter()
                .zip(r.proj[j].iter())
                .map(|(f, p)| f * p)
                .sum();
        }
        Self {
            mid: 0.5 * (a + b),
            half: 0.5 * (b - a),
            coeffs,
        }
    }

    pub fn integral(&self) -> Complex64 {
        self.coeffs[0] * (2.0 * self.half)
    }

    /// `∫_panel f(x) e^{iωx} dx`.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        let jn = spherical_bessel(omega * self.half);
        // i^j cycles through 1, i, -1, -i
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, (&c, &b)) in self.coeffs.iter().zip(jn.iter()).enumerate() {
            let t = c * b;
            acc += match k % 4 {
                0 => t,
                1 => Complex64::new(-t.im, t.re),
                2 => -t,
                _ => Complex64::new(t.im, -t.re),
            };
        }
        Complex64::from_polar(2.0 * self.half, omega * self.mid) * acc
    }

    /// Value of the expansion at `x`; `x` should lie on the panel.
    pub fn eval(&self, x: f64) -> Complex64 {
        let t = (x - self.mid) / self.half;
        let p = legendre_all(t);
        self.coeffs.iter().zip(p.iter()).map(|(c, p)| c * p).sum()
    }

    /// Derivative of the expansion at `x`.
    pub fn derivative(&self, x: f64) -> Complex64 {
        let t = (x - self.mid) / self.half;
        let p = legendre_all(t);
        // P'_{n+1} = P'_{n-1} + (2n+1) P_n
        let mut dp = [0.0; ORDER];
        for n in 1..ORDER {
            dp[n] = (2 * n - 1) as f64 * p[n - 1] + if n >= 2 { dp[n - 2] } else { 0.0 };
        }
        let s: Complex64 = self.coeffs.iter().zip(dp.iter()).map(|(c, d)| c * d).sum();
        s / self.half
    }
}

/// A set of contiguous panels with their Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    edges: Vec<f64>,
}

impl PanelGrid {
    pub fn new(edges: Vec<f64>) -> Result<Self, QuadratureError> {
        if edges.len() < 2 {
            return Err(QuadratureError::BadGrid("need at least one panel".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QuadratureError::BadGrid(
                "edges must increase strictly".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn start(&self) -> f64 {
        self.edges[0]
    }

    pub fn end(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.panel_count() * ORDER
    }

    /// All nodes, panel by panel.
    pub fn nodes(&self) -> Vec<f64> {
        let r = rule();
        let mut out = Vec::with_capacity(self.node_count());
        for w in self.edges.windows(2) {
            let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            out.extend(r.nodes.iter().map(|t| m + h * t));
        }
        out
    }

    /// Plain Gauss-Legendre weights matching [`PanelGrid::nodes`].
    pub fn weights(&self) -> Vec<f64> {
        let r = rule();
        let mut out = Vec::with_capacity(self.node_count());
        for w in self.edges.windows(2) {
            let h = 0.5 * (w[1] - w[0]);
            out.extend(r.weights.iter().map(|q| h * q));
        }
        out
    }

    /// Same panels with every panel split in two.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(self.end());
        Self { edges }
    }
}

/// A function known through its samples on a [`PanelGrid`].
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: PanelGrid,
    panels: Vec<LegendrePanel>,
}

impl SampledFunction {
    pub fn from_samples(grid: &PanelGrid, samples: &[Complex64]) -> Self {
        assert_eq!(
            samples.len(),
            grid.node_count(),
            "sample count must match grid"
        );
        let panels = grid
            .edges
            .windows(2)
            .zip(samples.chunks(ORDER))
            .map(|(w, s)| LegendrePanel::from_samples(w[0], w[1], s))
            .collect();
        Self {
            grid: grid.clone(),
            panels,
        }
    }

    pub fn from_fn(grid: &PanelGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = grid.nodes().into_iter().map(f).collect();
        Self::from_samples(grid, &samples)
    }

    pub fn from_real_fn(grid: &PanelGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &PanelGrid {
        &self.grid
    }

    pub fn integral(&self) -> Complex64 {
        self.panels.iter().map(LegendrePanel::integral).sum()
    }

    /// `∫ f(x) e^{iωx} dx` over the whole grid.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        self.panels.iter().map(|p| p.fourier(omega)).sum()
    }

    fn panel_index(&self, x: f64) -> Option<usize> {
        let e = &self.grid.edges;
        if x < e[0] || x > *e.last().unwrap() {
            return None;
        }
        let k = e.partition_point(|&v| v <= x);
        Some(k.saturating_sub(1).min(self.panels.len() - 1))
    }

    /// Interpolated value; zero outside the grid.
    pub fn eval(&self, x: f64) -> Complex64 {
        match self.panel_index(x) {
            Some(k) => self.panels[k].eval(x),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Value and derivative at the last grid point.
    pub fn end_value(&self) -> (Complex64, Complex64) {
        let p = self.panels.last().unwrap();
        let x = self.grid.end();
        (p.eval(x), p.derivative(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.panels
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Integrate `f` over a panel grid with plain Gauss-Legendre weights.
pub fn integrate_on(grid: &PanelGrid, f: impl Fn(f64) -> f64) -> f64 {
    grid.nodes()
        .into_iter()
        .zip(grid.weights())
        .map(|(x, w)| w * f(x))
        .sum()
}

// Gauss-Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(c));
    }
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let (f1, f2) = (f(c - dx), f(c + dx));
        if !f1.is_finite() || !f2.is_finite() {
            return Err(QuadratureError::NonFinite(c + dx));
        }
        kron += WGK[k] * (f1 + f2);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Adaptive Gauss-Kronrod integration of a smooth real function on `[a, b]`.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(QuadratureError::NotConverged {
                a,
                b,
                estimate: total,
                error: err,
                intervals: parts.len(),
            });
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
