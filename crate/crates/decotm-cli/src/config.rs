//! Experiment configs: flat `key = value` text grouped into one section per
//! subcommand. Parsing is strict — unknown sections, unknown keys, duplicate
//! keys, and malformed values are all errors carrying the line number — so a
//! committed fixture either reproduces the run exactly or refuses to load.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line),
        message: message.into(),
    }
}

const SECTIONS: [&str; 4] = ["fig12", "fig3", "transition", "verify"];

const KEYS: &[(&str, &[&str])] = &[
    (
        "fig12",
        &[
            "family",
            "B0_tau_list",
            "ratio_min",
            "ratio_max",
            "ratio_count",
            "ratio_scale",
            "quad_order",
            "out",
            "seed",
        ],
    ),
    (
        "fig3",
        &[
            "B0_tau",
            "ratio",
            "r_min",
            "r_max",
            "r_count",
            "transient_cut",
            "quad_order",
            "out",
            "seed",
        ],
    ),
    (
        "transition",
        &[
            "B0_tau",
            "bx_tau",
            "ratio_min",
            "ratio_max",
            "ratio_count",
            "out",
            "seed",
        ],
    ),
    ("verify", &["quad_order", "n_traj", "m", "out", "seed"]),
];

/// Raw parse: section -> key -> (line, value).
#[derive(Debug)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

impl RawConfig {
    pub fn empty() -> Self {
        RawConfig {
            sections: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(lineno, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(lineno, format!("unknown section [{name}]")));
                }
                current = Some(name.to_string());
                sections.entry(name.to_string()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(lineno, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            let section = current
                .as_ref()
                .ok_or_else(|| err(lineno, "key before any [section] header"))?;
            let allowed = KEYS
                .iter()
                .find(|(s, _)| s == section)
                .map(|(_, keys)| *keys)
                .unwrap();
            if !allowed.contains(&key) {
                return Err(err(
                    lineno,
                    format!("unknown key `{key}` in section [{section}]"),
                ));
            }
            let entry = sections.get_mut(section).unwrap();
            if entry.contains_key(key) {
                return Err(err(
                    lineno,
                    format!("duplicate key `{key}` in section [{section}]"),
                ));
            }
            entry.insert(key.to_string(), (lineno, value.to_string()));
        }
        Ok(RawConfig { sections })
    }

    fn get(&self, section: &str, key: &str) -> Option<&(usize, String)> {
        self.sections.get(section).and_then(|s| s.get(key))
    }
}

fn parse_f64(raw: &RawConfig, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
    match raw.get(section, key) {
        None => Ok(default),
        Some((line, v)) => v
            .parse::<f64>()
            .map_err(|_| err(*line, format!("`{key}` is not a number: `{v}`"))),
    }
}

fn parse_usize(
    raw: &RawConfig,
    section: &str,
    key: &str,
    default: usize,
) -> Result<usize, ConfigError> {
    match raw.get(section, key) {
        None => Ok(default),
        Some((line, v)) => v
            .parse::<usize>()
            .map_err(|_| err(*line, format!("`{key}` is not a count: `{v}`"))),
    }
}

fn parse_u64(raw: &RawConfig, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
    match raw.get(section, key) {
        None => Ok(default),
        Some((line, v)) => v
            .parse::<u64>()
            .map_err(|_| err(*line, format!("`{key}` is not an integer: `{v}`"))),
    }
}

fn parse_path(raw: &RawConfig, section: &str, key: &str, default: &str) -> PathBuf {
    match raw.get(section, key) {
        None => PathBuf::from(default),
        Some((_, v)) => PathBuf::from(v),
    }
}

fn parse_list(
    raw: &RawConfig,
    section: &str,
    key: &str,
    default: &[f64],
) -> Result<Vec<f64>, ConfigError> {
    match raw.get(section, key) {
        None => Ok(default.to_vec()),
        Some((line, v)) => {
            let mut out = Vec::new();
            for part in v.split(',') {
                let part = part.trim();
                out.push(
                    part.parse::<f64>().map_err(|_| {
                        err(*line, format!("`{key}` entry is not a number: `{part}`"))
                    })?,
                );
            }
            if out.is_empty() {
                return Err(err(*line, format!("`{key}` is empty")));
            }
            Ok(out)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    PlanarRing,
    SphereShell,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PlanarRing => "planar_ring",
            Family::SphereShell => "sphere_shell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Log,
    Linear,
}

#[derive(Clone, Debug)]
pub struct Fig12Config {
    pub family: Family,
    pub b0_tau_list: Vec<f64>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_count: usize,
    pub ratio_scale: Scale,
    pub quad_order: usize,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Fig3Config {
    pub b0_tau_ext: f64,
    pub ratio: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_count: usize,
    pub transient_cut: f64,
    pub quad_order: usize,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TransitionConfig {
    pub b0_tau_ext: f64,
    pub bx_tau: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_count: usize,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub quad_order: usize,
    pub n_traj: u64,
    pub m: u64,
    pub out: PathBuf,
    pub seed: u64,
}

fn positive(value: f64, key: &str) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError {
            line: None,
            message: format!("`{key}` must be positive and finite, got {value}"),
        })
    }
}

fn nonnegative(value: f64, key: &str) -> Result<f64, ConfigError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError {
            line: None,
            message: format!("`{key}` must be nonnegative and finite, got {value}"),
        })
    }
}

pub fn fig12_config(raw: &RawConfig) -> Result<Fig12Config, ConfigError> {
    let family = match raw.get("fig12", "family") {
        None => Family::PlanarRing,
        Some((line, v)) => match v.as_str() {
            "planar_ring" => Family::PlanarRing,
            "sphere_shell" => Family::SphereShell,
            other => {
                return Err(err(
                    *line,
                    format!("`family` must be planar_ring or sphere_shell, got `{other}`"),
                ))
            }
        },
    };
    let ratio_scale = match raw.get("fig12", "ratio_scale") {
        None => Scale::Log,
        Some((line, v)) => match v.as_str() {
            "log" => Scale::Log,
            "linear" => Scale::Linear,
            other => {
                return Err(err(
                    *line,
                    format!("`ratio_scale` must be log or linear, got `{other}`"),
                ))
            }
        },
    };
    let cfg = Fig12Config {
        family,
        b0_tau_list: parse_list(raw, "fig12", "B0_tau_list", &[0.1, 1.0, 10.0])?,
        ratio_min: positive(parse_f64(raw, "fig12", "ratio_min", 0.05)?, "ratio_min")?,
        ratio_max: positive(parse_f64(raw, "fig12", "ratio_max", 10.0)?, "ratio_max")?,
        ratio_count: parse_usize(raw, "fig12", "ratio_count", 60)?,
        ratio_scale,
        quad_order: parse_usize(raw, "fig12", "quad_order", 256)?,
        out: parse_path(raw, "fig12", "out", "fig12.csv"),
        seed: parse_u64(raw, "fig12", "seed", 1)?,
    };
    for &b in &cfg.b0_tau_list {
        positive(b, "B0_tau_list")?;
    }
    if cfg.ratio_count < 1 || cfg.quad_order < 1 {
        return Err(ConfigError {
            line: None,
            message: "counts must be at least 1".into(),
        });
    }
    if cfg.ratio_min > cfg.ratio_max {
        return Err(ConfigError {
            line: None,
            message: "ratio_min exceeds ratio_max".into(),
        });
    }
    Ok(cfg)
}

pub fn fig3_config(raw: &RawConfig) -> Result<Fig3Config, ConfigError> {
    let cfg = Fig3Config {
        b0_tau_ext: positive(parse_f64(raw, "fig3", "B0_tau", 0.05)?, "B0_tau")?,
        ratio: positive(parse_f64(raw, "fig3", "ratio", 0.1)?, "ratio")?,
        r_min: nonnegative(parse_f64(raw, "fig3", "r_min", 0.0)?, "r_min")?,
        r_max: nonnegative(parse_f64(raw, "fig3", "r_max", 1.0)?, "r_max")?,
        r_count: parse_usize(raw, "fig3", "r_count", 21)?,
        transient_cut: nonnegative(
            parse_f64(raw, "fig3", "transient_cut", 0.5)?,
            "transient_cut",
        )?,
        quad_order: parse_usize(raw, "fig3", "quad_order", 64)?,
        out: parse_path(raw, "fig3", "out", "fig3.csv"),
        seed: parse_u64(raw, "fig3", "seed", 1)?,
    };
    if cfg.r_count < 1 || cfg.quad_order < 1 {
        return Err(ConfigError {
            line: None,
            message: "counts must be at least 1".into(),
        });
    }
    if cfg.r_min > cfg.r_max || cfg.r_max > 1.0 {
        return Err(ConfigError {
            line: None,
            message: "mixing grid must satisfy 0 <= r_min <= r_max <= 1".into(),
        });
    }
    Ok(cfg)
}

pub fn transition_config(raw: &RawConfig) -> Result<TransitionConfig, ConfigError> {
    let cfg = TransitionConfig {
        b0_tau_ext: positive(parse_f64(raw, "transition", "B0_tau", 0.01)?, "B0_tau")?,
        bx_tau: positive(parse_f64(raw, "transition", "bx_tau", 0.5)?, "bx_tau")?,
        ratio_min: nonnegative(parse_f64(raw, "transition", "ratio_min", 0.9)?, "ratio_min")?,
        ratio_max: positive(parse_f64(raw, "transition", "ratio_max", 1.0)?, "ratio_max")?,
        ratio_count: parse_usize(raw, "transition", "ratio_count", 21)?,
        out: parse_path(raw, "transition", "out", "transition.csv"),
        seed: parse_u64(raw, "transition", "seed", 1)?,
    };
    if cfg.ratio_count < 2 {
        return Err(ConfigError {
            line: None,
            message: "transition needs at least 2 grid points".into(),
        });
    }
    if cfg.ratio_min >= cfg.ratio_max {
        return Err(ConfigError {
            line: None,
            message: "ratio_min must be below ratio_max".into(),
        });
    }
    Ok(cfg)
}

pub fn verify_config(raw: &RawConfig) -> Result<VerifyConfig, ConfigError> {
    let cfg = VerifyConfig {
        quad_order: parse_usize(raw, "verify", "quad_order", 128)?,
        n_traj: parse_u64(raw, "verify", "n_traj", 50_000)?,
        m: parse_u64(raw, "verify", "m", 100)?,
        out: parse_path(raw, "verify", "out", "verify_report.csv"),
        seed: parse_u64(raw, "verify", "seed", 1)?,
    };
    if cfg.quad_order < 1 || cfg.n_traj < 1 || cfg.m < 1 {
        return Err(ConfigError {
            line: None,
            message: "quad_order, n_traj and m must be at least 1".into(),
        });
    }
    Ok(cfg)
}
