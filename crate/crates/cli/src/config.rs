//! Run settings: experiment defaults, then a config file, then the command
//! line.
//!
//! The file format is one `key = value` per line. Lists are comma
//! separated, `#` starts a comment and blank lines are ignored:
//!
//! ```text
//! # coverage sweep
//! n = 500
//! k = 5
//! p = 0.5, 0.9, 0.99
//! beta = 0.1, 0.5
//! trials = 20
//! ```
//!
//! A file whose first non-blank character is `{` is read as a JSON object
//! with the same keys; values may be numbers, strings or arrays.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use swarm_core::harness::{CampaignConfig, Experiment};

use crate::CliError;

pub const KEYS: [&str; 10] = [
    "experiment",
    "n",
    "k",
    "p",
    "beta",
    "trials",
    "seed",
    "out",
    "format",
    "bins",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(CliError::Config(format!("unknown format '{other}'"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        })
    }
}

/// Values set by a config file or the command line. `None` keeps the
/// experiment default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub experiment: Option<Experiment>,
    pub n: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub p: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub bins: Option<usize>,
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Config(format!("{key}: cannot parse '{s}'")))
        })
        .collect()
}

fn single<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    let mut v = list::<T>(key, raw)?;
    if v.len() != 1 {
        return Err(CliError::Config(format!("{key} takes a single value")));
    }
    Ok(v.remove(0))
}

impl Settings {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), CliError> {
        match key.trim() {
            "experiment" => {
                let e = raw
                    .trim()
                    .parse::<Experiment>()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                self.experiment = Some(e);
            }
            "n" => self.n = Some(list(key, raw)?),
            "k" => self.k = Some(list(key, raw)?),
            "p" => self.p = Some(list(key, raw)?),
            "beta" => self.beta = Some(list(key, raw)?),
            "trials" => self.trials = Some(single(key, raw)?),
            "seed" => self.seed = Some(single(key, raw)?),
            "out" => self.out = Some(PathBuf::from(raw.trim())),
            "format" => self.format = Some(list(key, raw)?),
            "bins" => {
                let b: usize = single(key, raw)?;
                if b == 0 {
                    return Err(CliError::Config("bins must be at least 1".into()));
                }
                self.bins = Some(b);
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown key '{other}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{pair}' is not key=value")))?;
        self.set(key, value)
    }

    /// Keys set in `other` replace ours.
    pub fn merge(&mut self, other: Settings) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(experiment, n, k, p, beta, trials, seed, out, format, bins);
    }

    pub fn parse(text: &str) -> Result<Settings, CliError> {
        if text.trim_start().starts_with('{') {
            return Settings::parse_json(text);
        }
        let mut s = Settings::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
            s.set(key, value)
                .map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(s)
    }

    fn parse_json(text: &str) -> Result<Settings, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("JSON config: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Config("JSON config must be an object".into()))?;
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => Err(CliError::Config(format!("unsupported JSON value {other}"))),
        };
        let mut s = Settings::default();
        for (key, v) in obj {
            let raw = match v {
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(scalar)
                    .collect::<Result<Vec<_>, _>>()?
                    .join(","),
                other => scalar(other)?,
            };
            s.set(key, &raw)?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Settings::parse(&text)
    }

    /// The campaign config for `experiment` with these settings applied.
    pub fn campaign(&self, experiment: Experiment) -> Result<CampaignConfig, CliError> {
        let mut c = CampaignConfig::defaults_for(experiment);
        if let Some(v) = &self.n {
            c.n_grid = v.clone();
        }
        if let Some(v) = &self.k {
            c.k_grid = v.clone();
        }
        if let Some(v) = &self.p {
            c.p_grid = v.clone();
        }
        if let Some(v) = &self.beta {
            c.beta_grid = v.clone();
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn formats(&self) -> Vec<Format> {
        self.format.clone().unwrap_or_else(|| vec![Format::Csv])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format() {
        let s = Settings::parse("# c\nn = 100, 200\n\nbeta=0.5 # trailing\nformat = csv,svg\n").unwrap();
        assert_eq!(s.n, Some(vec![100, 200]));
        assert_eq!(s.beta, Some(vec![0.5]));
        assert_eq!(s.format, Some(vec![Format::Csv, Format::Svg]));
        assert_eq!(s.k, None);
    }

    #[test]
    fn json_format_matches_text() {
        let a = Settings::parse(r#"{"n": [100, 200], "beta": 0.5, "experiment": "coverage"}"#).unwrap();
        let b = Settings::parse("n = 100,200\nbeta = 0.5\nexperiment = coverage").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Settings::parse("colour = blue").unwrap_err();
        assert!(err.to_string().contains("unknown key 'colour'"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn later_settings_win() {
        let mut s = Settings::parse("n = 100\nk = 4").unwrap();
        let mut o = Settings::default();
        o.apply_override("n=300").unwrap();
        s.merge(o);
        assert_eq!(s.n, Some(vec![300]));
        assert_eq!(s.k, Some(vec![4]));
    }

    #[test]
    fn invalid_grid_is_config_error() {
        let mut s = Settings::default();
        s.set("p", "1.5").unwrap();
        assert_eq!(s.campaign(Experiment::Coverage).unwrap_err().exit_code(), 2);
    }
}
