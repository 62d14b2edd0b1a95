//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;

use mosp::solvers::OFFLINE_SIZE_LIMIT;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSpec {
    Case1,
    Case2,
    /// Scenario file in the export format.
    Custom(PathBuf),
}

impl fmt::Display for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseSpec::Case1 => f.write_str("case1"),
            CaseSpec::Case2 => f.write_str("case2"),
            CaseSpec::Custom(p) => write!(f, "{}", p.display()),
        }
    }
}

impl CaseSpec {
    pub fn parse(s: &str) -> Self {
        match s {
            "case1" => CaseSpec::Case1,
            "case2" => CaseSpec::Case2,
            path => CaseSpec::Custom(PathBuf::from(path)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Benchmarks {
    pub perslot: bool,
    pub offline: bool,
    pub static_: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mapping_nodes: usize,
    pub data_centers: usize,
    pub horizon: usize,
    pub case: CaseSpec,
    pub seeds: Vec<u64>,
    pub alpha_scale: f64,
    pub mu_scale: f64,
    pub beta: f64,
    pub mu_odg_list: Vec<f64>,
    pub benchmarks: Benchmarks,
    pub restart_delta: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mapping_nodes: 10,
            data_centers: 10,
            horizon: 500,
            case: CaseSpec::Case1,
            seeds: (1..=20).collect(),
            alpha_scale: 0.05,
            mu_scale: 50.0,
            beta: 1.0 / 3.0,
            mu_odg_list: vec![0.5, 1.0],
            benchmarks: Benchmarks {
                perslot: true,
                ..Benchmarks::default()
            },
            restart_delta: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: key {key:?}: {message}")]
    Line {
        line: usize,
        key: String,
        message: String,
    },
    #[error("key {key:?}: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

pub const KEYS: [&str; 12] = [
    "J",
    "K",
    "T",
    "case",
    "seeds",
    "alpha_scale",
    "mu_scale",
    "beta",
    "mu_odg_list",
    "benchmarks",
    "restart_delta",
    "output_dir",
];

fn list<V: std::str::FromStr>(s: &str) -> Option<Vec<V>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().ok())
        .collect()
}

/// `1,2,5` or `1..20` (inclusive).
fn seeds(s: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a <= b).then(|| (a..=b).collect());
    }
    list(s)
}

impl ExperimentConfig {
    /// Applies one key. Values are validated as a whole by [`validate`].
    ///
    /// [`validate`]: ExperimentConfig::validate
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        let bad = || format!("malformed value {value:?}");
        match key {
            "J" => self.mapping_nodes = value.parse().map_err(|_| bad())?,
            "K" => self.data_centers = value.parse().map_err(|_| bad())?,
            "T" => self.horizon = value.parse().map_err(|_| bad())?,
            "case" => {
                if value.is_empty() {
                    return Err(bad());
                }
                self.case = CaseSpec::parse(value)
            }
            "seeds" => self.seeds = seeds(value).ok_or_else(bad)?,
            "alpha_scale" => self.alpha_scale = value.parse().map_err(|_| bad())?,
            "mu_scale" => self.mu_scale = value.parse().map_err(|_| bad())?,
            "beta" => self.beta = value.parse().map_err(|_| bad())?,
            "mu_odg_list" => self.mu_odg_list = list(value).ok_or_else(bad)?,
            "benchmarks" => {
                let mut b = Benchmarks::default();
                for name in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    match name {
                        "perslot" => b.perslot = true,
                        "offline" => b.offline = true,
                        "static" => b.static_ = true,
                        other => return Err(format!("unknown benchmark {other:?}")),
                    }
                }
                self.benchmarks = b;
            }
            "restart_delta" => {
                self.restart_delta = match value {
                    "" | "none" => None,
                    v => Some(v.parse().map_err(|_| bad())?),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let value = |key: &str, message: &str| {
            Err(ConfigError::Value {
                key: key.into(),
                message: message.into(),
            })
        };
        if self.mapping_nodes == 0 {
            return value("J", "must be at least 1");
        }
        if self.data_centers == 0 {
            return value("K", "must be at least 1");
        }
        if self.horizon == 0 {
            return value("T", "must be at least 1");
        }
        if self.seeds.is_empty() {
            return value("seeds", "no seeds given");
        }
        if !(self.alpha_scale > 0.0 && self.alpha_scale.is_finite()) {
            return value("alpha_scale", "must be positive");
        }
        if !(self.mu_scale > 0.0 && self.mu_scale.is_finite()) {
            return value("mu_scale", "must be positive");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return value("beta", "must lie in [0, 1)");
        }
        if self.mu_odg_list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return value("mu_odg_list", "stepsizes must be positive");
        }
        if let Some(d) = self.restart_delta {
            if d == 0 || d > self.horizon {
                return value("restart_delta", "must lie in 1..=T");
            }
        }
        let size = self.horizon * (self.mapping_nodes * self.data_centers + self.data_centers);
        if self.benchmarks.offline && size > OFFLINE_SIZE_LIMIT {
            return Err(ConfigError::Invalid(format!(
                "offline benchmark needs T·(JK+K) ≤ {OFFLINE_SIZE_LIMIT}, got {size}"
            )));
        }
        Ok(())
    }
}

/// Parses a config file body on top of the defaults. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg = parse_config_unchecked(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// [`parse_config`] without the final [`ExperimentConfig::validate`], for
/// callers that apply overrides first.
pub fn parse_config_unchecked(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Line {
                line: i + 1,
                key: line.into(),
                message: "expected key = value".into(),
            });
        };
        let key = key.trim();
        cfg.set(key, value).map_err(|message| ConfigError::Line {
            line: i + 1,
            key: key.into(),
            message,
        })?;
    }
    Ok(cfg)
}

fn read_text(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    parse_config(&read_text(path)?)
}

/// Reads `path` (or starts from the defaults), applies `overrides` in order
/// and validates the result.
pub fn load_with_overrides(
    path: Option<&std::path::Path>,
    overrides: &[(&str, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match path {
        Some(p) => parse_config_unchecked(&read_text(p)?)?,
        None => ExperimentConfig::default(),
    };
    for (key, value) in overrides {
        cfg.set(key, value).map_err(|message| ConfigError::Value {
            key: (*key).into(),
            message,
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!((cfg.mapping_nodes, cfg.data_centers, cfg.horizon), (10, 10, 500));
        assert_eq!(cfg.case, CaseSpec::Case1);
        assert_eq!((cfg.alpha_scale, cfg.mu_scale), (0.05, 50.0));
        assert_eq!(cfg.seeds, (1..=20).collect::<Vec<_>>());
        assert_eq!(cfg.mu_odg_list, vec![0.5, 1.0]);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let err = parse_config("T=0").unwrap_err();
        assert!(err.to_string().contains("\"T\""), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("# comment\nJ = 2\ngamma = 3\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Line {
                line: 3,
                key: "gamma".into(),
                message: "unknown key".into()
            }
        );
    }

    #[test]
    fn malformed_value_names_key_and_line() {
        let err = parse_config("J=2\nmu_scale = fast").unwrap_err();
        let s = err.to_string();
        assert!(s.contains("line 2") && s.contains("mu_scale"), "{s}");
    }

    #[test]
    fn lists_and_flags() {
        let cfg = parse_config(
            "seeds = 3..5\nmu_odg_list = 0.25, 2\nbenchmarks = perslot,offline\ncase = case2\nT = 24\nrestart_delta = 6",
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![3, 4, 5]);
        assert_eq!(cfg.mu_odg_list, vec![0.25, 2.0]);
        assert!(cfg.benchmarks.offline && cfg.benchmarks.perslot && !cfg.benchmarks.static_);
        assert_eq!(cfg.case, CaseSpec::Case2);
        assert_eq!(cfg.restart_delta, Some(6));
        assert_eq!(parse_config("case = runs/a.txt").unwrap().case, CaseSpec::Custom("runs/a.txt".into()));
    }

    #[test]
    fn offline_size_guard() {
        assert!(matches!(
            parse_config("benchmarks = offline\nT = 10000"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(parse_config("benchmarks = offline\nT = 500").is_ok());
    }
}
