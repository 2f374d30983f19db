//! Run configuration: defaults, overridden by a `key = value` file,
//! overridden by command-line flags.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::base_model::TrainConfig;
use crate::corpus::ContextPolicy;
use crate::error::{Error, Result};
use crate::featurizer::NgramConfig;
use crate::minority::{Aggregation, MinorityConfig, DEFAULT_THETA};
use crate::repetition::{RepetitionConfig, WindowMode};

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped. Values keep their line numbers for error messages.
pub fn parse_kv(data: &str, origin: &Path) -> Result<HashMap<String, (usize, String)>> {
    let mut map = HashMap::new();
    for (i, raw) in data.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(origin, i + 1, format!("expected `key = value`, found {line:?}")))?;
        map.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub articles: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub base_scores: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Predictions to score (`evaluate`).
    pub predictions: Option<PathBuf>,
    /// Per-instance provenance side file (`predict`).
    pub provenance: Option<PathBuf>,
    pub ngram: NgramConfig,
    pub train: TrainConfig,
    pub theta: f64,
    pub aggregation: Aggregation,
    pub slope: f64,
    pub tau_min: f64,
    pub whole_context: bool,
    pub window_factor: f64,
    pub stride_factor: f64,
    pub normalize: bool,
    /// Context used for featurization.
    pub context: ContextPolicy,
    /// Context scanned by the repetition detector.
    pub repetition_context: ContextPolicy,
    pub m_min: f64,
    pub m_max: f64,
    pub step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            articles: None,
            labels: None,
            embeddings: None,
            base_scores: None,
            models: None,
            out: None,
            predictions: None,
            provenance: None,
            ngram: NgramConfig::default(),
            train: TrainConfig::default(),
            theta: DEFAULT_THETA,
            aggregation: Aggregation::Mean,
            slope: 0.2,
            tau_min: 50.0,
            whole_context: false,
            window_factor: 2.0,
            stride_factor: 0.5,
            normalize: true,
            context: ContextPolicy::SentenceWindow(1),
            repetition_context: ContextPolicy::WholeArticle,
            m_min: 0.0,
            m_max: 0.6,
            step: 0.1,
        }
    }
}

pub const KEYS: &[&str] = &[
    "articles",
    "labels",
    "embeddings",
    "base-scores",
    "models",
    "out",
    "predictions",
    "provenance",
    "theta",
    "aggregation",
    "slope",
    "tau-min",
    "window-mode",
    "window-factor",
    "stride-factor",
    "normalize",
    "context",
    "repetition-context",
    "seed",
    "ngram-min",
    "ngram-max",
    "ngram-dim",
    "ngram-seed",
    "learning-rate",
    "epochs",
    "l2",
    "shuffle",
    "m-min",
    "m-max",
    "step",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn boolean(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, found {value:?}")),
    }
}

impl RunConfig {
    /// Sets one option by its flag name (without the leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let path = || Some(PathBuf::from(value));
        match key {
            "articles" => self.articles = path(),
            "labels" => self.labels = path(),
            "embeddings" => self.embeddings = path(),
            "base-scores" => self.base_scores = path(),
            "models" => self.models = path(),
            "out" => self.out = path(),
            "predictions" => self.predictions = path(),
            "provenance" => self.provenance = path(),
            "theta" => self.theta = num(key, value)?,
            "aggregation" => self.aggregation = value.parse()?,
            "slope" => self.slope = num(key, value)?,
            "tau-min" => self.tau_min = num(key, value)?,
            "window-mode" => {
                self.whole_context = match value.parse::<WindowMode>()? {
                    WindowMode::WholeContext => true,
                    WindowMode::Windowed { .. } => false,
                }
            }
            "window-factor" => self.window_factor = num(key, value)?,
            "stride-factor" => self.stride_factor = num(key, value)?,
            "normalize" => self.normalize = boolean(key, value)?,
            "context" => self.context = value.parse()?,
            "repetition-context" => self.repetition_context = value.parse()?,
            "seed" => self.train.seed = num(key, value)?,
            "ngram-min" => self.ngram.n_min = num(key, value)?,
            "ngram-max" => self.ngram.n_max = num(key, value)?,
            "ngram-dim" => self.ngram.dim = num(key, value)?,
            "ngram-seed" => self.ngram.seed = num(key, value)?,
            "learning-rate" => self.train.learning_rate = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "l2" => self.train.l2 = num(key, value)?,
            "shuffle" => self.train.shuffle = boolean(key, value)?,
            "m-min" => self.m_min = num(key, value)?,
            "m-max" => self.m_max = num(key, value)?,
            "step" => self.step = num(key, value)?,
            _ => return Err(format!("unknown option {key:?}")),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map = parse_kv(&data, path)?;
        let mut entries: Vec<_> = map.into_iter().collect();
        entries.sort_by_key(|(_, (line, _))| *line);
        for (key, (line, value)) in entries {
            self.set(&key, &value).map_err(|msg| Error::format(path, line, msg))?;
        }
        Ok(())
    }

    /// Builds the configuration from an optional file and `(key, value)`
    /// overrides, in that order of precedence (overrides win).
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v).map_err(Error::Usage)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn repetition(&self) -> RepetitionConfig {
        RepetitionConfig {
            slope_m: self.slope,
            tau_min: self.tau_min,
            window_mode: if self.whole_context {
                WindowMode::WholeContext
            } else {
                WindowMode::Windowed {
                    window_factor: self.window_factor,
                    stride_factor: self.stride_factor,
                }
            },
            normalize: self.normalize,
        }
    }

    pub fn minority(&self) -> MinorityConfig {
        MinorityConfig {
            theta: self.theta,
            aggregation: self.aggregation,
            train: self.train,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ngram.validate()?;
        self.train.validate()?;
        self.repetition().validate()?;
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} outside [0,1]", self.theta)));
        }
        Ok(())
    }
}

pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Usage(format!("--{flag} is required")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_stage_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.theta, 0.95);
        assert_eq!(c.repetition(), RepetitionConfig::default());
        assert_eq!(c.minority(), MinorityConfig::default());
        assert_eq!(c.context, ContextPolicy::SentenceWindow(1));
        assert_eq!(c.repetition_context, ContextPolicy::WholeArticle);
    }

    #[test]
    fn every_key_is_settable() {
        let sample = |k: &str| match k {
            "aggregation" => "min",
            "window-mode" => "whole",
            "context" | "repetition-context" => "window:2",
            "normalize" | "shuffle" => "false",
            "ngram-dim" => "64",
            _ => "1",
        };
        for k in KEYS {
            let mut c = RunConfig::default();
            c.set(k, sample(k)).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        assert!(RunConfig::default().set("bogus", "1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(
            &file,
            "# experiment\nslope = 0.3\ntheta = 0.8  # looser gate\n\naggregation = min\n",
        )
        .unwrap();
        let cfg = RunConfig::resolve(Some(&file), &[("slope".into(), "0.1".into())]).unwrap();
        assert_eq!(cfg.slope, 0.1);
        assert_eq!(cfg.theta, 0.8);
        assert_eq!(cfg.aggregation, Aggregation::Min);
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "slope = 0.3\ntheta = high\n").unwrap();
        assert!(matches!(
            RunConfig::resolve(Some(&file), &[]),
            Err(Error::Format { line: 2, .. })
        ));
        fs::write(&file, "slope\n").unwrap();
        assert!(matches!(
            RunConfig::resolve(Some(&file), &[]),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::resolve(None, &[("theta".into(), "1.5".into())]).is_err());
        assert!(RunConfig::resolve(None, &[("stride-factor".into(), "0".into())]).is_err());
        assert!(RunConfig::resolve(None, &[("ngram-dim".into(), "1000".into())]).is_err());
    }
}
