//! Sequential covering.
//!
//! Each iteration picks the most compact remaining class (weighted
//! silhouette), grows a conjunction of threshold literals for it by greedy
//! F-Beta ascent, and checks the rule against coverage and accuracy gates.
//! An accepted rule's covered samples leave both the training and the
//! validation pools; a rejected rule ends the loop. A majority-vote default
//! rule closes the list.

use std::cmp::Ordering;

use serde::Serialize;

use crate::config::InductionConfig;
use crate::error::{Error, Result};
use crate::scoring::{fbeta, RuleConfusion};
use crate::silhouette::{pick_best, score_classes, ClassScore, ZScore};
use crate::types::{
    ClassId, CoverStats, Dataset, Feature, LabeledSample, Literal, Op, Rule, RuleKind, RuleSet,
};

/// Midpoints between consecutive distinct values of `feature` in `ds`.
pub fn candidate_thresholds(ds: &Dataset, feature: Feature) -> Vec<f64> {
    let mut values: Vec<f64> = ds
        .samples()
        .iter()
        .map(|s| s.features.get(feature))
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values.windows(2).map(|w| midpoint(w[0], w[1])).collect()
}

/// A threshold `t` with `lo <= t < hi`, as close to the middle as floating
/// point allows.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mut t = (lo + hi) / 2.0;
    if !t.is_finite() {
        t = lo / 2.0 + hi / 2.0;
    }
    if t >= hi || t < lo {
        t = lo;
    }
    t
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    literal: Literal,
    score: f64,
    fp: usize,
}

/// Greedy order: higher F-Beta, then fewer false positives, then earlier
/// feature, then lower threshold, then `<=` before `>`.
fn prefer(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.fp.cmp(&b.fp))
        .then(a.literal.feature.cmp(&b.literal.feature))
        .then(a.literal.threshold.total_cmp(&b.literal.threshold))
        .then(a.literal.op.cmp(&b.literal.op))
}

/// Best literal to conjoin, judged on the whole remaining pool: samples the
/// current conjunction already rejects stay uncovered whatever is added.
fn best_literal(
    covered: &[&LabeledSample],
    target: ClassId,
    n_target: usize,
    total: usize,
    beta: f64,
) -> Option<Candidate> {
    let cov_target = covered.iter().filter(|s| s.label == target).count();
    let cov_other = covered.len() - cov_target;
    let mut best: Option<Candidate> = None;
    let mut consider = |c: Candidate| {
        if best.is_none_or(|b| prefer(&c, &b) == Ordering::Less) {
            best = Some(c);
        }
    };
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(covered.len());
    for feature in Feature::ALL {
        column.clear();
        column.extend(
            covered
                .iter()
                .map(|s| (s.features.get(feature), s.label == target)),
        );
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut le_tp, mut le_fp) = (0, 0);
        let mut i = 0;
        while i < column.len() {
            let v = column[i].0;
            while i < column.len() && column[i].0 == v {
                if column[i].1 {
                    le_tp += 1;
                } else {
                    le_fp += 1;
                }
                i += 1;
            }
            if i == column.len() {
                break;
            }
            let threshold = midpoint(v, column[i].0);
            let sides = [
                (Op::Le, le_tp, le_fp),
                (Op::Gt, cov_target - le_tp, cov_other - le_fp),
            ];
            for (op, tp, fp) in sides {
                let conf = RuleConfusion::from_counts(tp, fp, n_target, total);
                consider(Candidate {
                    literal: Literal {
                        feature,
                        op,
                        threshold,
                    },
                    score: fbeta(&conf, beta),
                    fp,
                });
            }
        }
    }
    best
}

/// Grows a rule for `target` on the remaining training samples.
///
/// The first literal is the best available one; later literals are added
/// only while they strictly raise F-Beta, up to `cfg.max_literals`. The
/// returned rule carries its training cover statistics on `remaining`.
pub fn grow_rule(remaining: &Dataset, target: ClassId, cfg: &InductionConfig) -> Rule {
    let n_target = remaining.count(target);
    let total = remaining.len();
    let mut covered: Vec<&LabeledSample> = remaining.samples().iter().collect();
    let mut literals = Vec::new();
    let mut current = {
        let conf = RuleConfusion::from_counts(n_target, total - n_target, n_target, total);
        fbeta(&conf, cfg.beta)
    };
    while literals.len() < cfg.max_literals {
        let Some(cand) = best_literal(&covered, target, n_target, total, cfg.beta) else {
            break;
        };
        if !literals.is_empty() && cand.score <= current {
            break;
        }
        covered.retain(|s| cand.literal.holds(&s.features));
        literals.push(cand.literal);
        current = cand.score;
    }
    let correct = covered.iter().filter(|s| s.label == target).count();
    Rule {
        literals,
        predicted: target,
        kind: RuleKind::Specific,
        train: CoverStats {
            covered: covered.len(),
            correct,
        },
        val: None,
    }
}

/// Why a grown rule was not added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum Rejection {
    NoLiterals,
    TrainCoverage { covered: usize, required: usize },
    TrainAccuracy { accuracy: f64, required: f64 },
    ValCoverage { covered: usize, required: usize },
    ValAccuracy { accuracy: f64, required: f64 },
}

impl Rejection {
    pub fn name(&self) -> &'static str {
        match self {
            Rejection::NoLiterals => "no literals",
            Rejection::TrainCoverage { .. } => "train coverage",
            Rejection::TrainAccuracy { .. } => "train accuracy",
            Rejection::ValCoverage { .. } => "val coverage",
            Rejection::ValAccuracy { .. } => "val accuracy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Accepted,
    Rejected(Rejection),
}

/// Acceptance thresholds for one covering run.
#[derive(Debug, Clone, Copy)]
struct Gate {
    min_train_coverage: usize,
    min_train_accuracy: Option<f64>,
    validation: Option<(usize, f64)>,
}

fn count_cover(rule: &Rule, target: ClassId, ds: &Dataset) -> CoverStats {
    let mut stats = CoverStats::default();
    for s in ds.samples() {
        if rule.matches(&s.features) {
            stats.covered += 1;
            if s.label == target {
                stats.correct += 1;
            }
        }
    }
    stats
}

fn accuracy(stats: CoverStats) -> f64 {
    if stats.covered == 0 {
        0.0
    } else {
        stats.correct as f64 / stats.covered as f64
    }
}

impl Gate {
    /// Returns the verdict plus the validation cover statistics, if measured.
    fn check(
        &self,
        rule: &Rule,
        target: ClassId,
        train: &Dataset,
        val: Option<&Dataset>,
    ) -> (Verdict, Option<CoverStats>) {
        if rule.literals.is_empty() {
            return (Verdict::Rejected(Rejection::NoLiterals), None);
        }
        let train_stats = count_cover(rule, target, train);
        if train_stats.covered < self.min_train_coverage {
            let r = Rejection::TrainCoverage {
                covered: train_stats.covered,
                required: self.min_train_coverage,
            };
            return (Verdict::Rejected(r), None);
        }
        if let Some(required) = self.min_train_accuracy {
            let acc = accuracy(train_stats);
            if acc < required {
                let r = Rejection::TrainAccuracy {
                    accuracy: acc,
                    required,
                };
                return (Verdict::Rejected(r), None);
            }
        }
        let (Some((min_cov, min_acc)), Some(val)) = (self.validation, val) else {
            return (Verdict::Accepted, None);
        };
        let val_stats = count_cover(rule, target, val);
        if val_stats.covered < min_cov {
            let r = Rejection::ValCoverage {
                covered: val_stats.covered,
                required: min_cov,
            };
            return (Verdict::Rejected(r), Some(val_stats));
        }
        let acc = accuracy(val_stats);
        if acc < min_acc {
            let r = Rejection::ValAccuracy {
                accuracy: acc,
                required: min_acc,
            };
            return (Verdict::Rejected(r), Some(val_stats));
        }
        (Verdict::Accepted, Some(val_stats))
    }
}

/// Checks a grown rule against the training-coverage, validation-coverage
/// and validation-accuracy thresholds, in that order. All bounds inclusive.
pub fn accept_rule(
    rule: &Rule,
    target: ClassId,
    train_remaining: &Dataset,
    val_remaining: &Dataset,
    cfg: &InductionConfig,
) -> Verdict {
    let gate = Gate {
        min_train_coverage: cfg.min_train_coverage,
        min_train_accuracy: None,
        validation: Some((cfg.min_val_coverage, cfg.min_val_accuracy)),
    };
    gate.check(rule, target, train_remaining, Some(val_remaining))
        .0
}

/// Majority-vote default rule over `remaining`; `fallback` when it is empty.
pub fn default_rule(remaining: &Dataset, fallback: ClassId) -> Rule {
    let predicted = remaining.majority_class().unwrap_or(fallback);
    Rule {
        train: CoverStats {
            covered: remaining.len(),
            correct: remaining.count(predicted),
        },
        ..Rule::default_for(predicted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Accepted { rule: Rule },
    Rejected { rule: Rule, reason: Rejection },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub selected: ClassScore,
    pub class_scores: Vec<ClassScore>,
    pub outcome: Outcome,
    pub train_before: usize,
    pub train_remaining: usize,
    pub val_before: usize,
    pub val_remaining: usize,
    /// Sample ids removed from the training pool (empty when rejected).
    pub covered_train: Vec<u64>,
    pub covered_val: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxRules,
    TrainRemaining,
    ValRemaining,
    SingleClass,
    NoScorableClass,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InductionTrace {
    pub alphabet: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub stop: StopReason,
    pub train_remaining_ids: Vec<u64>,
}

/// Limits for one run of the covering loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Plan {
    pub max_rules: usize,
    pub min_train_remaining: usize,
    pub min_val_remaining: usize,
    pub kind: RuleKind,
    gate: Gate,
}

impl Plan {
    pub(crate) fn foundational(cfg: &InductionConfig) -> Self {
        Plan {
            max_rules: cfg.max_rules,
            min_train_remaining: cfg.min_train_remaining,
            min_val_remaining: cfg.min_val_remaining,
            kind: RuleKind::Specific,
            gate: Gate {
                min_train_coverage: cfg.min_train_coverage,
                min_train_accuracy: None,
                validation: Some((cfg.min_val_coverage, cfg.min_val_accuracy)),
            },
        }
    }

    /// Training-only gate for small calibration sets.
    pub(crate) fn personal(cfg: &InductionConfig, n_residual: usize) -> Self {
        let scaled = (cfg.personal_coverage_fraction * n_residual as f64).ceil() as usize;
        Plan {
            max_rules: cfg.max_personal_rules,
            min_train_remaining: cfg.personal_min_train_remaining,
            min_val_remaining: 0,
            kind: RuleKind::Personalized,
            gate: Gate {
                min_train_coverage: cfg.personal_min_coverage.max(scaled),
                min_train_accuracy: Some(cfg.min_val_accuracy),
                validation: None,
            },
        }
    }
}

pub(crate) struct Covering {
    pub rules: Vec<Rule>,
    pub remaining: Dataset,
    pub trace: InductionTrace,
}

fn remove_covered(ds: &Dataset, rule: &Rule) -> (Dataset, Vec<u64>) {
    let covered = ds
        .samples()
        .iter()
        .filter(|s| rule.matches(&s.features))
        .map(|s| s.sample_id)
        .collect();
    (ds.filter(|s| !rule.matches(&s.features)), covered)
}

pub(crate) fn run_covering(
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &InductionConfig,
    plan: Plan,
) -> Covering {
    let scaler = cfg.normalize.then(|| ZScore::fit(train));
    let mut remaining = train.clone();
    let mut val_remaining = val.cloned();
    let mut rules = Vec::new();
    let mut iterations = Vec::new();
    let stop = loop {
        if rules.len() >= plan.max_rules {
            break StopReason::MaxRules;
        }
        if remaining.len() < plan.min_train_remaining {
            break StopReason::TrainRemaining;
        }
        if val_remaining
            .as_ref()
            .is_some_and(|v| v.len() < plan.min_val_remaining)
        {
            break StopReason::ValRemaining;
        }
        if remaining.n_present_classes() < 2 {
            break StopReason::SingleClass;
        }
        let class_scores = match &scaler {
            Some(z) => score_classes(&z.apply(&remaining), cfg),
            None => score_classes(&remaining, cfg),
        };
        let Some(selected) = pick_best(&class_scores) else {
            break StopReason::NoScorableClass;
        };
        let target = selected.class;
        let mut rule = grow_rule(&remaining, target, cfg);
        rule.kind = plan.kind;
        let (verdict, val_stats) =
            plan.gate
                .check(&rule, target, &remaining, val_remaining.as_ref());
        rule.val = val_stats;

        let train_before = remaining.len();
        let val_before = val_remaining.as_ref().map_or(0, Dataset::len);
        let mut record = IterationRecord {
            iteration: iterations.len(),
            selected,
            class_scores,
            outcome: Outcome::Accepted { rule: rule.clone() },
            train_before,
            train_remaining: train_before,
            val_before,
            val_remaining: val_before,
            covered_train: Vec::new(),
            covered_val: Vec::new(),
        };
        match verdict {
            Verdict::Rejected(reason) => {
                record.outcome = Outcome::Rejected { rule, reason };
                iterations.push(record);
                break StopReason::Rejected;
            }
            Verdict::Accepted => {
                let (rest, covered) = remove_covered(&remaining, &rule);
                remaining = rest;
                record.covered_train = covered;
                record.train_remaining = remaining.len();
                if let Some(v) = val_remaining.take() {
                    let (rest, covered) = remove_covered(&v, &rule);
                    record.covered_val = covered;
                    record.val_remaining = rest.len();
                    val_remaining = Some(rest);
                }
                iterations.push(record);
                rules.push(rule);
            }
        }
    };
    let trace = InductionTrace {
        alphabet: train
            .alphabet()
            .classes()
            .iter()
            .map(|c| c.to_string())
            .collect(),
        iterations,
        stop,
        train_remaining_ids: remaining.samples().iter().map(|s| s.sample_id).collect(),
    };
    Covering {
        rules,
        remaining,
        trace,
    }
}

/// Learns a decision list from `train`, gating every rule on `val`.
pub fn induce_ruleset(
    train: &Dataset,
    val: &Dataset,
    cfg: &InductionConfig,
) -> Result<(RuleSet, InductionTrace)> {
    let cfg = cfg.clone().validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set"));
    }
    if val.is_empty() {
        return Err(Error::EmptyDataset("validation set"));
    }
    train.alphabet().ensure_same(val.alphabet())?;

    let Covering {
        mut rules,
        remaining,
        trace,
    } = run_covering(train, Some(val), &cfg, Plan::foundational(&cfg));
    let fallback = train.majority_class().expect("training set is non-empty");
    rules.push(default_rule(&remaining, fallback));
    let rs = RuleSet::new(rules, cfg, train.alphabet().clone())?;
    Ok((rs, trace))
}
