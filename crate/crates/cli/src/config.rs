//! Run configuration: a JSON document, optionally overridden by flags.

use std::path::{Path, PathBuf};

use mart_entropy::grid_entropy::{CurveMethod, ModelPair};
use mart_entropy::specific_entropy::DEFAULT_TIME_STEPS;
use mart_entropy::ModelSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Inline JSON value or path to a JSON file holding it.
#[derive(Debug, Clone, PartialEq)]
pub enum Source<T> {
    Inline(T),
    File(PathBuf),
}

impl<T: Serialize> Serialize for Source<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Source::Inline(v) => v.serialize(s),
            Source::File(p) => p.serialize(s),
        }
    }
}

impl<'de, T: DeserializeOwned> Deserialize<'de> for Source<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(Source::File(PathBuf::from(p))),
            v => serde_json::from_value(v).map(Source::Inline).map_err(serde::de::Error::custom),
        }
    }
}

impl<T: DeserializeOwned + Clone> Source<T> {
    /// Relative file references resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<T, CliError> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn default_time_steps() -> usize {
    DEFAULT_TIME_STEPS
}

fn default_base() -> usize {
    2
}

fn default_method() -> CurveMethod {
    CurveMethod::Auto
}

/// Everything a command needs. Unset `seed` means 0; unset `paths` follows
/// the per-level default of the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Source<ModelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<Source<ModelPair>>,
    #[serde(default)]
    pub levels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    #[serde(default = "default_base")]
    pub base: usize,
    #[serde(default = "default_method")]
    pub method: CurveMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub levels: Option<Vec<usize>>,
    pub paths: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub method: Option<CurveMethod>,
    pub time_steps: Option<usize>,
}

fn is_power_of(n: usize, base: usize) -> bool {
    let mut m = n;
    while m > 1 && m.is_multiple_of(base) {
        m /= base;
    }
    m == 1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads `path` (if any), applies the overrides and validates.
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<(Self, Option<PathBuf>), CliError> {
        let (mut cfg, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let cfg = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                (cfg, p.parent().map(Path::to_path_buf))
            }
            None => (Self::default(), None),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok((cfg, base))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(l) = o.levels {
            self.levels = l;
        }
        if o.paths.is_some() {
            self.paths = o.paths;
        }
        if o.output.is_some() {
            self.output = o.output;
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        if let Some(m) = o.method {
            self.method = m;
        }
        if let Some(t) = o.time_steps {
            self.time_steps = t;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.base < 2 {
            return Err(CliError::Config(format!("base must be at least 2, got {}", self.base)));
        }
        if let Some(bad) = self.levels.iter().find(|&&n| n == 0 || !is_power_of(n, self.base)) {
            return Err(CliError::Config(format!("level {bad} is not a power of {}", self.base)));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("levels must be strictly increasing".into()));
        }
        if let Some(p) = self.paths {
            if p < 2 {
                return Err(CliError::Config(format!("paths must be at least 2, got {p}")));
            }
        }
        if self.time_steps == 0 {
            return Err(CliError::Config("time_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn model(&self, base: Option<&Path>) -> Result<ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("`model` is required".into()))?.load(base)
    }

    /// The pair, with the dimension check that plain deserialization skips.
    pub fn pair(&self, base: Option<&Path>) -> Result<ModelPair, CliError> {
        let raw = self.pair.as_ref().ok_or_else(|| CliError::Config("`pair` is required".into()))?.load(base)?;
        ModelPair::new(raw.q, raw.p).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mart_entropy::Matrix;

    #[test]
    fn defaults_and_round_trip() {
        let d = RunConfig::default();
        assert_eq!((d.seed, d.time_steps, d.base, d.method), (0, DEFAULT_TIME_STEPS, 2, CurveMethod::Auto));
        let cfg = RunConfig {
            pair: Some(Source::Inline(
                ModelPair::new(ModelSpec::black_scholes(Matrix::scalar(1, 0.3)), ModelSpec::brownian(1).with_x0(vec![1.0]).unwrap())
                    .unwrap(),
            )),
            model: Some(Source::File("m.json".into())),
            levels: vec![2, 4, 8],
            paths: Some(1000),
            seed: u64::MAX,
            format: Some(Format::Json),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        assert!(matches!(RunConfig::parse(r#"{"levles": [2]}"#), Err(CliError::Config(_))));
        let mut c = RunConfig { levels: vec![2, 6], ..RunConfig::default() };
        assert!(c.validate().is_err());
        c.base = 3;
        c.levels = vec![3, 9];
        assert!(c.validate().is_ok());
        c.paths = Some(1);
        assert!(c.validate().is_err());
        let mismatch = r#"{"pair": {"q": {"family": "ScaledBrownian", "dim": 1, "parameters": {"a": [[1.0]]}},
                                     "p": {"family": "ScaledBrownian", "dim": 2, "parameters": {"a": [[1.0, 0.0], [0.0, 1.0]]}}}}"#;
        assert!(matches!(RunConfig::parse(mismatch).unwrap().pair(None), Err(CliError::Config(_))));
    }
}
