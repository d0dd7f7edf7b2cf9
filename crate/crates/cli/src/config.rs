//! `key = value` configuration files and the run configuration they feed.
//!
//! Blank lines and everything after `#` are ignored. Keys are
//! case-insensitive and may use `-` or `_`. Command-line flags are applied on
//! top of the file, so flags win.

use std::collections::BTreeMap;
use std::path::Path;

use rdpersuasion::estimands::DEFAULT_EPSILON_DEN;
use rdpersuasion::inference::Target;
use rdpersuasion::locpoly::{KernelKind, Variant};
use rdpersuasion::{DesignKind, ExposureLimits};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Parsed `key = value` pairs, remembering the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(CliError::Config {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            entries.insert(key, (i + 1, v.trim().to_string()));
        }
        Ok(KeyValues { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    /// Removes and parses `key` if present.
    pub fn take_parsed<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => parse(&v).map(Some).map_err(|e| CliError::Config {
                line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    /// Errors on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::Config {
                line,
                message: format!("unknown key `{key}`"),
            }),
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("`{s}` is not a number")))
}

pub fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("`{s}` is not a nonnegative integer")))
}

pub fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("`{s}` is not a 64-bit unsigned integer")))
}

pub fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(CliError::Usage(format!("`{other}` is not a boolean"))),
    }
}

/// Comma- or whitespace-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(CliError::Usage("empty list".into()));
    }
    Ok(v)
}

/// Parses a snake_case enum name; `-` is accepted in place of `_`.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T> {
    let name = s.trim().to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(name))
        .map_err(|_| CliError::Usage(format!("unrecognised value `{}`", s.trim())))
}

/// Everything an estimate run needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cutoff: f64,
    /// `None` selects the rule-of-thumb bandwidth.
    pub bandwidth: Option<f64>,
    pub kernel: KernelKind,
    pub order: usize,
    pub alpha: f64,
    pub mtr: bool,
    /// `None` infers the design from the data.
    pub design: Option<DesignKind>,
    pub target: Target,
    pub exposure: Option<ExposureLimits>,
    pub variant: Variant,
    pub cluster_column: Option<String>,
    pub epsilon_den: f64,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cutoff: 0.0,
            bandwidth: None,
            kernel: KernelKind::Triangular,
            order: 1,
            alpha: 0.05,
            mtr: true,
            design: None,
            target: Target::Population,
            exposure: None,
            variant: Variant::Conventional,
            cluster_column: None,
            epsilon_den: DEFAULT_EPSILON_DEN,
            seed: None,
        }
    }
}

/// Optional values, one per configurable field; used for both the file and flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub cutoff: Option<f64>,
    pub bandwidth: Option<f64>,
    pub kernel: Option<KernelKind>,
    pub order: Option<usize>,
    pub alpha: Option<f64>,
    pub mtr: Option<bool>,
    pub design: Option<DesignKind>,
    pub target: Option<Target>,
    pub exposure_plus: Option<f64>,
    pub exposure_minus: Option<f64>,
    pub variant: Option<Variant>,
    pub cluster_column: Option<String>,
    pub epsilon_den: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// Consumes the run-configuration keys from `kv`, leaving any others.
    pub fn take_from(kv: &mut KeyValues) -> Result<Self> {
        Ok(Overrides {
            cutoff: kv.take_parsed("cutoff", parse_f64)?,
            bandwidth: kv.take_parsed("bandwidth", parse_f64)?,
            kernel: kv.take_parsed("kernel", parse_enum)?,
            order: kv.take_parsed("order", parse_usize)?,
            alpha: kv.take_parsed("alpha", parse_f64)?,
            mtr: kv.take_parsed("mtr", parse_bool)?,
            design: kv.take_parsed("design", parse_enum)?,
            target: kv.take_parsed("target", parse_enum)?,
            exposure_plus: kv.take_parsed("exposure_plus", parse_f64)?,
            exposure_minus: kv.take_parsed("exposure_minus", parse_f64)?,
            variant: kv.take_parsed("variant", parse_enum)?,
            cluster_column: kv.take_parsed("cluster_column", |s| Ok(s.to_string()))?,
            epsilon_den: kv.take_parsed("epsilon_den", parse_f64)?,
            seed: kv.take_parsed("seed", parse_u64)?,
        })
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            cutoff: other.cutoff.or(self.cutoff),
            bandwidth: other.bandwidth.or(self.bandwidth),
            kernel: other.kernel.or(self.kernel),
            order: other.order.or(self.order),
            alpha: other.alpha.or(self.alpha),
            mtr: other.mtr.or(self.mtr),
            design: other.design.or(self.design),
            target: other.target.or(self.target),
            exposure_plus: other.exposure_plus.or(self.exposure_plus),
            exposure_minus: other.exposure_minus.or(self.exposure_minus),
            variant: other.variant.or(self.variant),
            cluster_column: other.cluster_column.or(self.cluster_column),
            epsilon_den: other.epsilon_den.or(self.epsilon_den),
            seed: other.seed.or(self.seed),
        }
    }
}

impl RunConfig {
    /// Applies `o` to the defaults and checks the invariants.
    pub fn from_overrides(o: Overrides) -> Result<Self> {
        let d = RunConfig::default();
        let exposure = match (o.exposure_plus, o.exposure_minus) {
            (None, None) => None,
            (Some(p), Some(m)) => Some(ExposureLimits::new(p, m)?),
            _ => {
                return Err(CliError::Usage(
                    "exposure limits need both exposure_plus and exposure_minus".into(),
                ))
            }
        };
        let cfg = RunConfig {
            cutoff: o.cutoff.unwrap_or(d.cutoff),
            bandwidth: o.bandwidth,
            kernel: o.kernel.unwrap_or(d.kernel),
            order: o.order.unwrap_or(d.order),
            alpha: o.alpha.unwrap_or(d.alpha),
            mtr: o.mtr.unwrap_or(d.mtr),
            design: o.design,
            target: o.target.unwrap_or(d.target),
            exposure,
            variant: o.variant.unwrap_or(d.variant),
            cluster_column: o.cluster_column,
            epsilon_den: o.epsilon_den.unwrap_or(d.epsilon_den),
            seed: o.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cutoff.is_finite() {
            return Err(CliError::Usage(format!("cutoff {} is not finite", self.cutoff)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Usage(format!("bandwidth {h} must be positive")));
            }
        }
        if !(self.epsilon_den > 0.0 && self.epsilon_den.is_finite()) {
            return Err(CliError::Usage(format!(
                "epsilon_den {} must be positive",
                self.epsilon_den
            )));
        }
        Ok(())
    }
}
