//! Subcommands and their CSV tables.
//!
//! Each subcommand fills one or more [`Sheet`]s. A solver failure stops the
//! sweep, appends a `FAILED` marker row and is reported through
//! [`Outcome::failure`]; rows computed before the failure are kept.

use trilevel_heat::config::{CurrentSign, ModelConfig};
use trilevel_heat::rates::{redfield_rates, Level, RateEngine, Sign};
use trilevel_heat::solvers::CurrentTriple;
use trilevel_heat::transistor::{
    amplification_scan, current_scan, mechanism_scan, ndtc_scan, regime_classifier,
    truncated_amplification, RegimeReport, SweptParameter, TurnoverKind,
};

use crate::config::{order_name, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Currents,
    Amplification,
    Mechanism,
    Ndtc,
    RatesDump,
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Currents => "currents",
            Command::Amplification => "amplification",
            Command::Mechanism => "mechanism",
            Command::Ndtc => "ndtc",
            Command::RatesDump => "rates-dump",
            Command::Classify => "classify",
        }
    }
}

/// Writes floats with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn sign_name(s: CurrentSign) -> &'static str {
    match s {
        CurrentSign::IntoBath => "into_bath",
        CurrentSign::OutOfBath => "out_of_bath",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sheet {
    /// Suffix appended to the output file stem; `None` for the main table.
    pub name: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Sheet {
    fn new(name: Option<&'static str>, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn fail(&mut self, message: &str) {
        let mut row = vec![String::new(); self.header.len()];
        row[0] = "FAILED".into();
        if let Some(last) = row.last_mut().filter(|_| self.header.len() > 1) {
            *last = message.to_string();
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        // writing into memory cannot fail
        w.write_record(&self.header).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        w.into_inner().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub sheets: Vec<Sheet>,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(sheets: Vec<Sheet>) -> Self {
        Self {
            sheets,
            failure: None,
        }
    }

    fn failed(mut sheets: Vec<Sheet>, message: String) -> Self {
        if let Some(s) = sheets.first_mut() {
            s.fail(&message);
        }
        Self {
            sheets,
            failure: Some(message),
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Outcome {
    match command {
        Command::Currents => currents(cfg),
        Command::Amplification => amplification(cfg),
        Command::Mechanism => mechanism(cfg),
        Command::Ndtc => ndtc(cfg),
        Command::RatesDump => rates_dump(cfg),
        Command::Classify => classify(cfg),
    }
}

/// Raw and `γ`-scaled currents in the configured sign convention.
struct Scaled {
    sign: CurrentSign,
    gamma: f64,
}

impl Scaled {
    fn new(m: &ModelConfig) -> Self {
        Self {
            sign: m.conventions.current_sign,
            gamma: m.left.coupling,
        }
    }

    fn triple(&self, c: &CurrentTriple) -> Vec<String> {
        let j = c.as_array().map(|x| self.sign.apply(x));
        j.iter()
            .map(|&x| num(x))
            .chain(j.iter().map(|&x| num(x / self.gamma)))
            .collect()
    }
}

const CURRENT_COLUMNS: [&str; 6] = [
    "J_l",
    "J_m",
    "J_r",
    "J_l_over_gamma",
    "J_m_over_gamma",
    "J_r_over_gamma",
];

fn currents(cfg: &RunConfig) -> Outcome {
    let m = &cfg.model;
    let mut header = vec!["scheme", "alpha_m", "T_l", "T_m", "T_r"];
    header.extend(CURRENT_COLUMNS);
    header.push("current_sign");
    let mut sheet = Sheet::new(None, &header);
    let alphas = cfg.alpha_grid.values().expect("grid validated at load");
    let scaled = Scaled::new(m);
    for &scheme in &cfg.schemes {
        for (a, result) in
            alphas
                .iter()
                .zip(current_scan(m, scheme, SweptParameter::Alpha, &alphas))
        {
            let c = match result {
                Ok(c) => c,
                Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
            };
            let mut row = vec![scheme.name().to_string(), num(*a)];
            row.extend(
                [
                    m.left.temperature,
                    m.middle.temperature,
                    m.right.temperature,
                ]
                .map(num),
            );
            row.extend(scaled.triple(&c));
            row.push(sign_name(scaled.sign).into());
            sheet.push(row);
        }
    }
    Outcome::ok(vec![sheet])
}

fn amplification(cfg: &RunConfig) -> Outcome {
    let mut header = vec!["scheme", "alpha_m", "T_m"];
    header.extend(CURRENT_COLUMNS);
    header.extend([
        "dJ_l_dT_m",
        "dJ_m_dT_m",
        "dJ_r_dT_m",
        "beta_l",
        "beta_r",
        "gain_sign",
        "divergent",
        "current_sign",
    ]);
    let mut sheet = Sheet::new(None, &header);
    let t_m = cfg.t_m_grid.values().expect("grid validated at load");
    let scheme = cfg.amplification_scheme;
    for &alpha in &cfg.amplification_alphas {
        let m = cfg.model.with_alpha(alpha);
        let scaled = Scaled::new(&m);
        let points = match amplification_scan(&m, scheme, &t_m) {
            Ok(p) => p,
            Err(e) => return Outcome::failed(vec![sheet], format!("alpha_m = {alpha}: {e}")),
        };
        for p in points {
            let mut row = vec![scheme.name().to_string(), num(alpha), num(p.t_m)];
            row.extend(scaled.triple(&p.currents));
            row.extend([p.d_j_l, p.d_j_m, p.d_j_r].map(|d| num(scaled.sign.apply(d))));
            row.extend([
                num(p.beta_l),
                num(p.beta_r),
                num(p.gain_sign),
                flag(p.divergent),
            ]);
            row.push(sign_name(scaled.sign).into());
            sheet.push(row);
        }
    }
    Outcome::ok(vec![sheet])
}

fn mechanism(cfg: &RunConfig) -> Outcome {
    let header = [
        "T_m",
        "G_m_plus",
        "G_m_minus",
        "G_l_plus",
        "G_l_minus",
        "G_r_plus",
        "G_r_minus",
        "omega_l_plus",
        "omega_l_minus",
        "omega_r_plus",
        "omega_r_minus",
        "P_0",
        "P_l",
        "P_r",
        "J_l",
        "J_m",
        "J_r",
        "J_a",
        "J_b",
        "J_r_approx",
        "J_m_over_gamma",
        "J_a_over_gamma",
        "J_b_over_gamma",
        "beta_r_truncated",
        "divergent_truncated",
        "current_sign",
    ];
    let mut sheet = Sheet::new(None, &header);
    let m = &cfg.model;
    let t_m = cfg.t_m_grid.values().expect("grid validated at load");
    let result = mechanism_scan(m, &t_m).and_then(|p| truncated_amplification(&p).map(|a| (p, a)));
    let (points, gains) = match result {
        Ok(r) => r,
        Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
    };
    let sign = m.conventions.current_sign;
    let gamma = m.left.coupling;
    for (p, g) in points.iter().zip(&gains) {
        let r = &p.rates;
        let s = &p.solution;
        let j = |x: f64| sign.apply(x);
        let mut row = vec![p.t_m, r.g_m_plus, r.g_m_minus];
        row.extend([r.g_plus[0], r.g_minus[0], r.g_plus[1], r.g_minus[1]]);
        row.extend([
            r.omega_plus[0],
            r.omega_minus[0],
            r.omega_plus[1],
            r.omega_minus[1],
        ]);
        row.extend(s.populations);
        row.extend(s.currents.as_array().map(j));
        row.extend([j(s.j_m_cyclic), j(s.j_m_local), j(s.j_r_approx)]);
        row.extend([
            j(s.currents.j_m) / gamma,
            j(s.j_m_cyclic) / gamma,
            j(s.j_m_local) / gamma,
        ]);
        row.push(g.beta_r);
        let mut row: Vec<String> = row.into_iter().map(num).collect();
        row.push(flag(g.divergent));
        row.push(sign_name(sign).into());
        sheet.push(row);
    }
    Outcome::ok(vec![sheet])
}

fn ndtc(cfg: &RunConfig) -> Outcome {
    let header = [
        "scheme",
        "order",
        "alpha_m",
        "delta_T",
        "T_m",
        "J_lm",
        "J_lm_over_gamma",
        "turnover",
        "G_m_plus",
        "G_m_minus",
        "G_l_plus",
        "G_l_minus",
    ];
    let mut sheet = Sheet::new(None, &header);
    let m = &cfg.model;
    let dt = cfg.delta_t_grid.values().expect("grid validated at load");
    let scheme = cfg.ndtc_scheme;
    for &order in &cfg.ndtc_orders {
        let report = match ndtc_scan(m, scheme, order, &dt) {
            Ok(r) => r,
            Err(e) => {
                return Outcome::failed(vec![sheet], format!("order {}: {e}", order_name(order)))
            }
        };
        for (i, r) in report.rows.iter().enumerate() {
            let turnover = match report
                .turnovers
                .iter()
                .find(|t| t.index == i)
                .map(|t| t.kind)
            {
                Some(TurnoverKind::Maximum) => "max",
                Some(TurnoverKind::Minimum) => "min",
                None => "",
            };
            let mut row = vec![scheme.name().to_string(), order_name(order).to_string()];
            row.extend(
                [
                    m.middle.coupling,
                    r.delta_t,
                    r.t_m,
                    r.current,
                    r.current / m.left.coupling,
                ]
                .map(num),
            );
            row.push(turnover.into());
            match &r.rates {
                Some(g) => {
                    row.extend([g.g_m_plus, g.g_m_minus, g.g_plus[0], g.g_minus[0]].map(num))
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            sheet.push(row);
        }
    }
    Outcome::ok(vec![sheet])
}

fn rates_dump(cfg: &RunConfig) -> Outcome {
    let mut sheet = Sheet::new(None, &["group", "name", "re", "im"]);
    let put = |sheet: &mut Sheet, group: &str, name: String, re: f64, im: f64| {
        sheet.push(vec![group.to_string(), name, num(re), num(im)]);
    };
    let engine = match RateEngine::new(&cfg.model) {
        Ok(e) => e,
        Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
    };
    let f = engine.frame;
    for (name, v) in [
        ("eta", f.eta),
        ("eta_u", f.eta_u),
        ("reorganization", f.lambda_reorg),
        ("eps_bar", f.eps_bar),
        ("delta_eps", f.delta_eps),
        ("theta", f.theta),
        ("E_plus", f.e_plus),
        ("E_minus", f.e_minus),
        ("E_l", f.e_left),
        ("E_r", f.e_right),
        ("phase_at_zero", f.phase_at_zero),
    ] {
        put(&mut sheet, "frame", name.into(), v, 0.0);
    }
    let ptre = match engine.ptre_rates() {
        Ok(t) => t,
        Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
    };
    for (k, label) in ["minus_gap", "zero", "plus_gap"].iter().enumerate() {
        put(
            &mut sheet,
            "ptre",
            format!("gamma_x_{label}"),
            ptre.gamma_x[k].re,
            ptre.gamma_x[k].im,
        );
        put(
            &mut sheet,
            "ptre",
            format!("gamma_y_{label}"),
            ptre.gamma_y[k].re,
            ptre.gamma_y[k].im,
        );
    }
    for (u, bath) in ["l", "r"].iter().enumerate() {
        for (sign, s) in [(Sign::Plus, "plus"), (Sign::Minus, "minus")] {
            for (level, lv) in [(Level::Plus, "E_plus"), (Level::Minus, "E_minus")] {
                for moment in 0..2 {
                    let k = ptre.kappa(u, sign, level, moment);
                    put(
                        &mut sheet,
                        "ptre",
                        format!("kappa{moment}_{bath}_{s}_{lv}"),
                        k.re,
                        k.im,
                    );
                }
            }
        }
    }
    let niba = match engine.niba_rates() {
        Ok(t) => t,
        Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
    };
    put(&mut sheet, "niba", "G_m_plus".into(), niba.g_m_plus, 0.0);
    put(&mut sheet, "niba", "G_m_minus".into(), niba.g_m_minus, 0.0);
    for (u, bath) in ["l", "r"].iter().enumerate() {
        put(
            &mut sheet,
            "niba",
            format!("G_{bath}_plus"),
            niba.g_plus[u],
            0.0,
        );
        put(
            &mut sheet,
            "niba",
            format!("G_{bath}_minus"),
            niba.g_minus[u],
            0.0,
        );
        put(
            &mut sheet,
            "niba",
            format!("omega_{bath}_plus"),
            niba.omega_plus[u],
            0.0,
        );
        put(
            &mut sheet,
            "niba",
            format!("omega_{bath}_minus"),
            niba.omega_minus[u],
            0.0,
        );
    }
    let rf = match redfield_rates(&cfg.model) {
        Ok(t) => t,
        Err(e) => return Outcome::failed(vec![sheet], e.to_string()),
    };
    for (u, bath) in ["l", "r"].iter().enumerate() {
        for (x, lv) in ["plus", "minus"].iter().enumerate() {
            put(
                &mut sheet,
                "redfield",
                format!("kappa_e_{bath}_{lv}"),
                rf.kappa_e[u][x],
                0.0,
            );
            put(
                &mut sheet,
                "redfield",
                format!("kappa_a_{bath}_{lv}"),
                rf.kappa_a[u][x],
                0.0,
            );
        }
    }
    put(
        &mut sheet,
        "redfield",
        "kappa_e_m".into(),
        rf.kappa_e_p,
        0.0,
    );
    put(
        &mut sheet,
        "redfield",
        "kappa_a_m".into(),
        rf.kappa_a_p,
        0.0,
    );
    for (x, lv) in ["plus", "minus"].iter().enumerate() {
        put(
            &mut sheet,
            "redfield",
            format!("Gamma_e_{lv}"),
            rf.gamma_e[x],
            0.0,
        );
        put(
            &mut sheet,
            "redfield",
            format!("Gamma_a_{lv}"),
            rf.gamma_a[x],
            0.0,
        );
        put(
            &mut sheet,
            "redfield",
            format!("Gamma_p_{lv}"),
            rf.gamma_p[x],
            0.0,
        );
    }
    Outcome::ok(vec![sheet])
}

fn classify(cfg: &RunConfig) -> Outcome {
    let mut table = Sheet::new(
        None,
        &[
            "alpha_m",
            "ptre_J_l",
            "ptre_J_m",
            "ptre_J_r",
            "niba_J_l",
            "niba_J_m",
            "niba_J_r",
            "redfield_J_l",
            "redfield_J_m",
            "redfield_J_r",
            "redfield_dev_J_m",
            "niba_dev_J_m",
            "redfield_dev_J_l",
            "niba_dev_J_l",
        ],
    );
    let mut bounds = Sheet::new(
        Some("boundaries"),
        &["criterion", "detected_alpha_m", "nominal_alpha_m", "ratio"],
    );
    let alphas = cfg.alpha_grid.values().expect("grid validated at load");
    let report = match regime_classifier(&cfg.model, &alphas) {
        Ok(r) => r,
        Err(e) => return Outcome::failed(vec![table, bounds], e.to_string()),
    };
    let sign = cfg.model.conventions.current_sign;
    let dev = |a: f64, b: f64| num((a - b).abs() / b.abs());
    for r in &report.rows {
        let mut row = vec![num(r.alpha)];
        row.extend(r.ptre.as_array().map(|x| num(sign.apply(x))));
        row.extend(r.niba.as_array().map(|x| num(sign.apply(x))));
        match r.redfield {
            Some(c) => row.extend(c.as_array().map(|x| num(sign.apply(x)))),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        let rf = r.redfield.map(|c| (c.j_m, c.j_l));
        row.push(rf.map_or(String::new(), |(jm, _)| dev(jm, r.ptre.j_m)));
        row.push(dev(r.niba.j_m, r.ptre.j_m));
        row.push(rf.map_or(String::new(), |(_, jl)| dev(jl, r.ptre.j_l)));
        row.push(dev(r.niba.j_l, r.ptre.j_l));
        table.push(row);
    }
    for (name, detected, nominal) in [
        (
            "redfield_breakdown_J_m",
            report.redfield_breakdown_jm,
            RegimeReport::NOMINAL_REDFIELD,
        ),
        (
            "redfield_breakdown_J_l",
            report.redfield_breakdown_jl,
            RegimeReport::NOMINAL_REDFIELD,
        ),
        (
            "niba_onset_J_m",
            report.niba_onset_jm,
            RegimeReport::NOMINAL_NIBA,
        ),
        (
            "niba_onset_J_l",
            report.niba_onset_jl,
            RegimeReport::NOMINAL_NIBA,
        ),
    ] {
        bounds.push(vec![
            name.into(),
            detected.map_or(String::new(), num),
            num(nominal),
            detected.map_or(String::new(), |d| num(d / nominal)),
        ]);
    }
    Outcome::ok(vec![table, bounds])
}
