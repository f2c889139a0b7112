//! Induction hyperparameters and their `key = value` text form.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// How b(x) aggregates distances to samples outside the sample's class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Separation {
    /// Mean distance to all samples of all other classes.
    #[default]
    Pooled,
    /// Classical silhouette: mean distance to the nearest other class.
    Nearest,
}

impl Separation {
    fn name(self) -> &'static str {
        match self {
            Separation::Pooled => "pooled",
            Separation::Nearest => "nearest",
        }
    }
}

impl FromStr for Separation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pooled" => Ok(Separation::Pooled),
            "nearest" => Ok(Separation::Nearest),
            other => Err(format!("expected pooled or nearest, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InductionConfig {
    /// Budget of specific (non-default) rules.
    pub max_rules: usize,
    pub max_literals: usize,
    pub min_train_coverage: usize,
    pub min_val_coverage: usize,
    pub min_val_accuracy: f64,
    /// Early stop once fewer training samples than this remain uncovered.
    pub min_train_remaining: usize,
    pub min_val_remaining: usize,
    /// F-Beta weight; below 1 favours precision.
    pub beta: f64,
    /// Weight of the class-size term of the weighted silhouette.
    pub lambda1: f64,
    /// Scale applied to the class share inside the square root.
    pub lambda2: f64,
    /// Weight of the silhouette term.
    pub lambda3: f64,
    pub max_personal_rules: usize,
    pub seed: u64,
    /// z-score features (training statistics) before silhouette distances.
    pub normalize: bool,
    pub separation: Separation,
    /// Personalized rules need coverage of at least
    /// `max(personal_min_coverage, ceil(personal_coverage_fraction * |residual|))`.
    pub personal_coverage_fraction: f64,
    pub personal_min_coverage: usize,
    pub personal_min_train_remaining: usize,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            max_rules: 15,
            max_literals: 2,
            min_train_coverage: 8,
            min_val_coverage: 5,
            min_val_accuracy: 0.70,
            min_train_remaining: 6,
            min_val_remaining: 2,
            beta: 0.3,
            lambda1: 0.5,
            lambda2: 10.0,
            lambda3: 0.7,
            max_personal_rules: 4,
            seed: 0,
            normalize: false,
            separation: Separation::Pooled,
            personal_coverage_fraction: 0.08,
            personal_min_coverage: 2,
            personal_min_train_remaining: 2,
        }
    }
}

const KEYS: [&str; 18] = [
    "max_rules",
    "max_literals",
    "min_train_coverage",
    "min_val_coverage",
    "min_val_accuracy",
    "min_train_remaining",
    "min_val_remaining",
    "beta",
    "lambda1",
    "lambda2",
    "lambda3",
    "max_personal_rules",
    "seed",
    "normalize",
    "separation",
    "personal_coverage_fraction",
    "personal_min_coverage",
    "personal_min_train_remaining",
];

fn out_of_range(field: &'static str, bound: &'static str, value: impl ToString) -> Error {
    Error::ConfigOutOfRange {
        field,
        bound,
        value: value.to_string(),
    }
}

impl InductionConfig {
    /// Returns `self` unchanged when every bound holds, otherwise the first
    /// violation in declaration order.
    pub fn validate(self) -> Result<Self> {
        let counts = [
            ("max_rules", self.max_rules),
            ("max_literals", self.max_literals),
            ("min_train_coverage", self.min_train_coverage),
            ("min_val_coverage", self.min_val_coverage),
            ("min_train_remaining", self.min_train_remaining),
            ("min_val_remaining", self.min_val_remaining),
            ("max_personal_rules", self.max_personal_rules),
            ("personal_min_coverage", self.personal_min_coverage),
            (
                "personal_min_train_remaining",
                self.personal_min_train_remaining,
            ),
        ];
        for (field, v) in counts {
            if v < 1 {
                return Err(out_of_range(field, "[1,inf)", v));
            }
        }
        let unit = [
            ("min_val_accuracy", self.min_val_accuracy),
            ("lambda1", self.lambda1),
            ("lambda3", self.lambda3),
            (
                "personal_coverage_fraction",
                self.personal_coverage_fraction,
            ),
        ];
        for (field, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(out_of_range(field, "[0,1]", v));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(out_of_range("beta", "[0,inf)", self.beta));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(out_of_range("lambda2", "[0,inf)", self.lambda2));
        }
        Ok(self)
    }

    /// Renders every key as `key = value`, one per line, in a fixed order.
    /// Floats use the shortest decimal that round-trips.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "max_rules" => self.max_rules.to_string(),
            "max_literals" => self.max_literals.to_string(),
            "min_train_coverage" => self.min_train_coverage.to_string(),
            "min_val_coverage" => self.min_val_coverage.to_string(),
            "min_val_accuracy" => self.min_val_accuracy.to_string(),
            "min_train_remaining" => self.min_train_remaining.to_string(),
            "min_val_remaining" => self.min_val_remaining.to_string(),
            "beta" => self.beta.to_string(),
            "lambda1" => self.lambda1.to_string(),
            "lambda2" => self.lambda2.to_string(),
            "lambda3" => self.lambda3.to_string(),
            "max_personal_rules" => self.max_personal_rules.to_string(),
            "seed" => self.seed.to_string(),
            "normalize" => self.normalize.to_string(),
            "separation" => self.separation.name().to_string(),
            "personal_coverage_fraction" => self.personal_coverage_fraction.to_string(),
            "personal_min_coverage" => self.personal_min_coverage.to_string(),
            "personal_min_train_remaining" => self.personal_min_train_remaining.to_string(),
            _ => unreachable!("unknown config key {key}"),
        }
    }

    /// Whether `key` names a config field.
    pub fn is_key(key: &str) -> bool {
        KEYS.contains(&key)
    }

    /// Sets one field from its text form. `line` is only used for messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse::<T>().map_err(|e| Error::ConfigParse {
                line,
                msg: format!("{key}: cannot parse {value:?}: {e}"),
            })
        }
        match key {
            "max_rules" => self.max_rules = num(key, value, line)?,
            "max_literals" => self.max_literals = num(key, value, line)?,
            "min_train_coverage" => self.min_train_coverage = num(key, value, line)?,
            "min_val_coverage" => self.min_val_coverage = num(key, value, line)?,
            "min_val_accuracy" => self.min_val_accuracy = num(key, value, line)?,
            "min_train_remaining" => self.min_train_remaining = num(key, value, line)?,
            "min_val_remaining" => self.min_val_remaining = num(key, value, line)?,
            "beta" => self.beta = num(key, value, line)?,
            "lambda1" => self.lambda1 = num(key, value, line)?,
            "lambda2" => self.lambda2 = num(key, value, line)?,
            "lambda3" => self.lambda3 = num(key, value, line)?,
            "max_personal_rules" => self.max_personal_rules = num(key, value, line)?,
            "seed" => self.seed = num(key, value, line)?,
            "normalize" => self.normalize = num(key, value, line)?,
            "separation" => self.separation = num(key, value, line)?,
            "personal_coverage_fraction" => {
                self.personal_coverage_fraction = num(key, value, line)?
            }
            "personal_min_coverage" => self.personal_min_coverage = num(key, value, line)?,
            "personal_min_train_remaining" => {
                self.personal_min_train_remaining = num(key, value, line)?
            }
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    /// Parses a `key = value` config file over the defaults. Blank lines and
    /// `#` comments are ignored; unknown or repeated keys are errors. The
    /// result is validated.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = InductionConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = split_kv(line).ok_or_else(|| Error::ConfigParse {
                line: line_no,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            if !seen.insert(key.to_string()) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, value, line_no)?;
        }
        cfg.validate()
    }
}

/// Splits `key = value` around the first `=`, trimming both sides.
/// Splits `key = value`, dropping a trailing `# comment`.
pub(crate) fn split_kv(line: &str) -> Option<(&str, &str)> {
    let line = line.split_once('#').map_or(line, |(body, _)| body);
    let (k, v) = line.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return None;
    }
    Some((k, v))
}
