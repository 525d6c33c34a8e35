//! Flat `key = value` run configuration.
//!
//! Every key is optional; missing keys fall back to the reference parameter
//! set (`ε_l = 1, ε_r = 0.6, Δ = 0.6, ω_c = 10, T = (2, 1.2, 0.4), γ = 2e-4`).

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::Value;
use trilevel_heat::config::{CurrentSign, GammaPVariant, ModelConfig};
use trilevel_heat::model::ModelError;
use trilevel_heat::rates::RateOrder;
use trilevel_heat::solvers::{CurrentOrder, Scheme};
use trilevel_heat::transistor::{Grid, Spacing, TransistorError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Syntax(String),
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        key: String,
        suggestion: Option<String>,
    },
    #[error("key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Invalid { .. } => 3,
            _ => 2,
        }
    }
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid { key, value, reason } => ConfigError::Invalid {
                key: key.to_string(),
                reason: format!("{value} ({reason})"),
            },
            other => ConfigError::Invalid {
                key: "model".into(),
                reason: other.to_string(),
            },
        }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "eps_l",
    "eps_r",
    "delta",
    "omega_c",
    "T_l",
    "T_m",
    "T_r",
    "gamma",
    "gamma_l",
    "gamma_r",
    "alpha_m",
    "tau_max",
    "n_tau",
    "abs_tol",
    "rel_tol",
    "omega_max",
    "gamma_p_variant",
    "include_pv",
    "current_sign",
    "schemes",
    "alpha_min",
    "alpha_max",
    "alpha_n",
    "alpha_spacing",
    "T_m_min",
    "T_m_max",
    "T_m_n",
    "T_m_spacing",
    "amplification_alphas",
    "amplification_scheme",
    "delta_T_min",
    "delta_T_max",
    "delta_T_n",
    "ndtc_scheme",
    "ndtc_orders",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schemes: Vec<Scheme>,
    pub alpha_grid: Grid,
    pub t_m_grid: Grid,
    pub amplification_alphas: Vec<f64>,
    pub amplification_scheme: Scheme,
    pub delta_t_grid: Grid,
    pub ndtc_scheme: Scheme,
    pub ndtc_orders: Vec<CurrentOrder>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            schemes: vec![Scheme::Redfield, Scheme::Ptre, Scheme::Niba],
            alpha_grid: Grid::log(1e-4, 10.0, 60),
            t_m_grid: Grid::linear(0.4, 2.0, 81),
            amplification_alphas: vec![0.5, 1.0, 2.0, 4.0],
            amplification_scheme: Scheme::Ptre,
            delta_t_grid: Grid::linear(0.0, 1.6, 33),
            ndtc_scheme: Scheme::Ptre,
            ndtc_orders: vec![
                CurrentOrder::Ordered(RateOrder::Zeroth),
                CurrentOrder::Ordered(RateOrder::First),
                CurrentOrder::Full,
            ],
            output: None,
        }
    }
}

pub fn scheme_from_name(name: &str) -> Option<Scheme> {
    match name {
        "ptre" => Some(Scheme::Ptre),
        "niba" => Some(Scheme::Niba),
        "redfield" => Some(Scheme::Redfield),
        _ => None,
    }
}

pub fn order_name(order: CurrentOrder) -> &'static str {
    match order {
        CurrentOrder::Full => "full",
        CurrentOrder::Ordered(RateOrder::Zeroth) => "zeroth",
        CurrentOrder::Ordered(RateOrder::First) => "first",
    }
}

fn order_from_name(name: &str) -> Option<CurrentOrder> {
    match name {
        "full" => Some(CurrentOrder::Full),
        "zeroth" | "0" => Some(CurrentOrder::Ordered(RateOrder::Zeroth)),
        "first" | "1" => Some(CurrentOrder::Ordered(RateOrder::First)),
        _ => None,
    }
}

fn nearest_key(key: &str) -> Option<String> {
    KNOWN_KEYS
        .iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 3.max(key.len() / 2))
        .map(|(_, k)| k.to_string())
}

fn number(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::Type {
            key: key.into(),
            expected: "a number",
        }),
    }
}

fn count(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err(ConfigError::Invalid {
            key: key.into(),
            reason: "must be non-negative".into(),
        }),
        _ => Err(ConfigError::Type {
            key: key.into(),
            expected: "an integer",
        }),
    }
}

fn text<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| ConfigError::Type {
        key: key.into(),
        expected: "a string",
    })
}

fn list<'a>(key: &str, v: &'a Value) -> Result<&'a [Value], ConfigError> {
    v.as_array()
        .map(|a| a.as_slice())
        .ok_or_else(|| ConfigError::Type {
            key: key.into(),
            expected: "an array",
        })
}

fn choice<T>(
    key: &str,
    v: &Value,
    parse: impl Fn(&str) -> Option<T>,
    allowed: &str,
) -> Result<T, ConfigError> {
    let s = text(key, v)?;
    parse(s).ok_or_else(|| ConfigError::Invalid {
        key: key.into(),
        reason: format!("`{s}` is not one of {allowed}"),
    })
}

fn spacing(key: &str, v: &Value) -> Result<Spacing, ConfigError> {
    choice(
        key,
        v,
        |s| match s {
            "linear" => Some(Spacing::Linear),
            "log" => Some(Spacing::Log),
            _ => None,
        },
        "linear, log",
    )
}

fn check_grid(key: &str, grid: &Grid) -> Result<(), ConfigError> {
    grid.values().map(|_| ()).map_err(|e| ConfigError::Invalid {
        key: key.into(),
        reason: match e {
            TransistorError::Grid(msg) => msg,
            other => other.to_string(),
        },
    })
}

/// Parses and validates a configuration from text.
pub fn parse_config(source: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut cfg = RunConfig::default();
    let m = &mut cfg.model;
    // `gamma` sets both edge couplings and is applied first so that
    // `gamma_l` / `gamma_r` can override it.
    if let Some(v) = table.get("gamma") {
        let g = number("gamma", v)?;
        m.left.coupling = g;
        m.right.coupling = g;
    }
    for (key, v) in &table {
        let k = key.as_str();
        match k {
            "gamma" => {}
            "eps_l" => m.system.eps_l = number(k, v)?,
            "eps_r" => m.system.eps_r = number(k, v)?,
            "delta" => m.system.delta = number(k, v)?,
            "omega_c" => {
                let wc = number(k, v)?;
                m.left.cutoff = wc;
                m.right.cutoff = wc;
                m.middle.cutoff = wc;
            }
            "T_l" => m.left.temperature = number(k, v)?,
            "T_m" => m.middle.temperature = number(k, v)?,
            "T_r" => m.right.temperature = number(k, v)?,
            "gamma_l" => m.left.coupling = number(k, v)?,
            "gamma_r" => m.right.coupling = number(k, v)?,
            "alpha_m" => m.middle.coupling = number(k, v)?,
            "tau_max" => m.quadrature.tau_max = Some(number(k, v)?),
            "n_tau" => m.quadrature.n_tau = count(k, v)?,
            "abs_tol" => m.quadrature.abs_tol = number(k, v)?,
            "rel_tol" => m.quadrature.rel_tol = number(k, v)?,
            "omega_max" => m.quadrature.omega_max = Some(number(k, v)?),
            "gamma_p_variant" => {
                m.conventions.gamma_p = choice(
                    k,
                    v,
                    |s| match s {
                        "half" => Some(GammaPVariant::Half),
                        "eighth" => Some(GammaPVariant::Eighth),
                        _ => None,
                    },
                    "half, eighth",
                )?
            }
            "include_pv" => {
                m.conventions.include_pv = v.as_bool().ok_or_else(|| ConfigError::Type {
                    key: k.into(),
                    expected: "a boolean",
                })?
            }
            "current_sign" => {
                m.conventions.current_sign = choice(
                    k,
                    v,
                    |s| match s {
                        "into_bath" => Some(CurrentSign::IntoBath),
                        "out_of_bath" => Some(CurrentSign::OutOfBath),
                        _ => None,
                    },
                    "into_bath, out_of_bath",
                )?
            }
            "schemes" => {
                cfg.schemes = list(k, v)?
                    .iter()
                    .map(|s| choice(k, s, scheme_from_name, "ptre, niba, redfield"))
                    .collect::<Result<_, _>>()?
            }
            "alpha_min" => cfg.alpha_grid.min = number(k, v)?,
            "alpha_max" => cfg.alpha_grid.max = number(k, v)?,
            "alpha_n" => cfg.alpha_grid.n = count(k, v)?,
            "alpha_spacing" => cfg.alpha_grid.spacing = spacing(k, v)?,
            "T_m_min" => cfg.t_m_grid.min = number(k, v)?,
            "T_m_max" => cfg.t_m_grid.max = number(k, v)?,
            "T_m_n" => cfg.t_m_grid.n = count(k, v)?,
            "T_m_spacing" => cfg.t_m_grid.spacing = spacing(k, v)?,
            "amplification_alphas" => {
                cfg.amplification_alphas = list(k, v)?
                    .iter()
                    .map(|x| number(k, x))
                    .collect::<Result<_, _>>()?
            }
            "amplification_scheme" => {
                cfg.amplification_scheme = choice(k, v, scheme_from_name, "ptre, niba, redfield")?
            }
            "delta_T_min" => cfg.delta_t_grid.min = number(k, v)?,
            "delta_T_max" => cfg.delta_t_grid.max = number(k, v)?,
            "delta_T_n" => cfg.delta_t_grid.n = count(k, v)?,
            "ndtc_scheme" => {
                cfg.ndtc_scheme = choice(k, v, scheme_from_name, "ptre, niba, redfield")?
            }
            "ndtc_orders" => {
                cfg.ndtc_orders = list(k, v)?
                    .iter()
                    .map(|s| choice(k, s, order_from_name, "zeroth, first, full"))
                    .collect::<Result<_, _>>()?
            }
            "output" => cfg.output = Some(PathBuf::from(text(k, v)?)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: k.into(),
                    suggestion: nearest_key(k),
                })
            }
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.model.validate()?;
    check_grid("alpha_n", &cfg.alpha_grid)?;
    check_grid("T_m_n", &cfg.t_m_grid)?;
    check_grid("delta_T_n", &cfg.delta_t_grid)?;
    if cfg.t_m_grid.min <= 0.0 {
        return Err(ConfigError::Invalid {
            key: "T_m_min".into(),
            reason: "temperatures must be positive".into(),
        });
    }
    if cfg.delta_t_grid.min < 0.0 || cfg.delta_t_grid.max >= cfg.model.left.temperature {
        return Err(ConfigError::Invalid {
            key: "delta_T_max".into(),
            reason: format!("bias must lie in [0, T_l = {})", cfg.model.left.temperature),
        });
    }
    if let Some(a) = cfg
        .amplification_alphas
        .iter()
        .find(|a| !(**a >= 0.0 && a.is_finite()))
    {
        return Err(ConfigError::Invalid {
            key: "amplification_alphas".into(),
            reason: format!("{a} is not a non-negative coupling"),
        });
    }
    for (key, empty) in [
        ("schemes", cfg.schemes.is_empty()),
        ("amplification_alphas", cfg.amplification_alphas.is_empty()),
        ("ndtc_orders", cfg.ndtc_orders.is_empty()),
    ] {
        if empty {
            return Err(ConfigError::Invalid {
                key: key.into(),
                reason: "must not be empty".into(),
            });
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&source)
}
