//! Confusion counts of a single rule against a target class, and the
//! quality measures derived from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{ClassId, Dataset, Rule};

/// One rule's one-vs-rest confusion on a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RuleConfusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub covered: usize,
    pub total: usize,
}

impl RuleConfusion {
    /// Builds the full record from covered counts and class totals.
    pub fn from_counts(tp: usize, fp: usize, n_target: usize, total: usize) -> Self {
        debug_assert!(tp <= n_target && tp + fp <= total);
        let fn_ = n_target - tp;
        RuleConfusion {
            tp,
            fp,
            fn_,
            tn: total - tp - fp - fn_,
            covered: tp + fp,
            total,
        }
    }
}

pub fn rule_confusion(rule: &Rule, target: ClassId, ds: &Dataset) -> RuleConfusion {
    let (mut tp, mut fp) = (0, 0);
    for s in ds.samples() {
        if rule.matches(&s.features) {
            if s.label == target {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    RuleConfusion::from_counts(tp, fp, ds.count(target), ds.len())
}

/// F-Beta in its count form, `(1+b²)tp / ((1+b²)tp + b²fn + fp)`, which is
/// the precision/recall harmonic form with the divisions cleared. Zero when
/// there are no true positives.
pub fn fbeta(c: &RuleConfusion, beta: f64) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    let b2 = beta * beta;
    let tp = c.tp as f64;
    (1.0 + b2) * tp / ((1.0 + b2) * tp + b2 * c.fn_ as f64 + c.fp as f64)
}

/// Fraction of all samples the rule covers.
pub fn rule_coverage(c: &RuleConfusion) -> Result<f64> {
    if c.total == 0 {
        return Err(Error::EmptyDataset("coverage"));
    }
    Ok(c.covered as f64 / c.total as f64)
}

/// Fraction of covered samples that carry the target label.
pub fn rule_accuracy(c: &RuleConfusion) -> Result<f64> {
    if c.covered == 0 {
        return Err(Error::UncoveredRule);
    }
    Ok(c.tp as f64 / c.covered as f64)
}
