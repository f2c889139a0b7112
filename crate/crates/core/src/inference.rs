//! First-match decision-list prediction, literal-level explanations and
//! evaluation reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::types::{
    Alphabet, ClassId, CoverStats, Dataset, Feature, FeatureVector, Op, Rule, RuleKind, RuleSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub label: ClassId,
    pub fired_rule_index: usize,
    pub is_default: bool,
}

/// Index of the first rule whose literals all hold. The trailing default
/// rule matches everything, so this is total for a valid rule set.
fn fired_index(rules: &[Rule], x: &FeatureVector) -> usize {
    rules
        .iter()
        .position(|r| r.matches(x))
        .expect("the default rule matches every input")
}

pub fn predict(rs: &RuleSet, x: &FeatureVector) -> Prediction {
    let i = fired_index(rs.rules(), x);
    let rule = &rs.rules()[i];
    Prediction {
        label: rule.predicted,
        fired_rule_index: i,
        is_default: rule.is_default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteralCheck {
    pub feature: Feature,
    pub value: f64,
    pub op: Op,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleCheck {
    pub rule_index: usize,
    pub literals: Vec<LiteralCheck>,
    pub fired: bool,
}

/// Truth table of every literal of every rule scanned, up to and including
/// the one that fires.
pub fn explain(rs: &RuleSet, x: &FeatureVector) -> Vec<RuleCheck> {
    let mut out = Vec::new();
    for (rule_index, rule) in rs.rules().iter().enumerate() {
        let literals: Vec<LiteralCheck> = rule
            .literals
            .iter()
            .map(|l| LiteralCheck {
                feature: l.feature,
                value: x.get(l.feature),
                op: l.op,
                threshold: l.threshold,
                holds: l.holds(x),
            })
            .collect();
        let fired = literals.iter().all(|c| c.holds);
        out.push(RuleCheck {
            rule_index,
            literals,
            fired,
        });
        if fired {
            break;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: usize,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class has no samples.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub accuracy: f64,
    pub alphabet: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Samples each rule fired on, and how many of those it got right.
    pub per_rule: Vec<CoverStats>,
    pub per_class: Vec<ClassMetrics>,
}

pub fn evaluate(rs: &RuleSet, ds: &Dataset) -> Result<EvalReport> {
    rs.alphabet().ensure_same(ds.alphabet())?;
    let k = rs.alphabet().len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut per_rule = vec![CoverStats::default(); rs.len()];
    for s in ds.samples() {
        let p = predict(rs, &s.features);
        confusion[s.label.0][p.label.0] += 1;
        let stats = &mut per_rule[p.fired_rule_index];
        stats.covered += 1;
        if p.label == s.label {
            stats.correct += 1;
        }
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = if ds.is_empty() {
        0.0
    } else {
        correct as f64 / ds.len() as f64
    };
    let per_class = rs
        .alphabet()
        .ids()
        .map(|c| {
            let tp = confusion[c.0][c.0];
            let predicted: usize = confusion.iter().map(|row| row[c.0]).sum();
            let support: usize = confusion[c.0].iter().sum();
            ClassMetrics {
                class: rs.alphabet().name(c).to_string(),
                support,
                precision: (predicted > 0).then(|| tp as f64 / predicted as f64),
                recall: (support > 0).then(|| tp as f64 / support as f64),
            }
        })
        .collect();
    Ok(EvalReport {
        n_samples: ds.len(),
        accuracy,
        alphabet: rs
            .alphabet()
            .classes()
            .iter()
            .map(|c| c.to_string())
            .collect(),
        confusion,
        per_rule,
        per_class,
    })
}

/// `IF <lit> AND <lit> THEN <class>`, or `ELSE <class>` for the default rule.
pub fn format_rule(rule: &Rule, alphabet: &Alphabet) -> String {
    let class = alphabet.name(rule.predicted);
    if rule.is_default() {
        return format!("ELSE {class}");
    }
    let conds: Vec<String> = rule.literals.iter().map(|l| l.to_string()).collect();
    format!("IF {} THEN {class}", conds.join(" AND "))
}

/// Human-readable listing: one line per rule, with induction statistics and
/// a tag for personalized rules.
pub fn render_rule_list(rs: &RuleSet) -> String {
    let mut out = String::new();
    let width = rs.len().saturating_sub(1).to_string().len();
    for (i, rule) in rs.rules().iter().enumerate() {
        let mut line = format!("{i:>width$}  {}", format_rule(rule, rs.alphabet()));
        if rule.kind == RuleKind::Personalized {
            line.push_str("  [personalized]");
        }
        let _ = write!(
            line,
            "  (train {}/{}",
            rule.train.correct, rule.train.covered
        );
        if let Some(v) = rule.val {
            let _ = write!(line, ", val {}/{}", v.correct, v.covered);
        }
        line.push(')');
        let _ = writeln!(out, "{line}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InductionConfig;
    use crate::types::{LabeledSample, Literal};

    fn rules_lr() -> RuleSet {
        let a = Alphabet::gestures();
        let rules = vec![
            Rule {
                literals: vec![Literal::new(Feature::Azimuth, Op::Le, -0.3).unwrap()],
                predicted: a.id("SwipeLeft").unwrap(),
                kind: RuleKind::Specific,
                train: CoverStats {
                    covered: 10,
                    correct: 9,
                },
                val: Some(CoverStats {
                    covered: 5,
                    correct: 5,
                }),
            },
            Rule {
                literals: vec![Literal::new(Feature::Azimuth, Op::Gt, 0.3).unwrap()],
                predicted: a.id("SwipeRight").unwrap(),
                kind: RuleKind::Specific,
                train: CoverStats {
                    covered: 10,
                    correct: 10,
                },
                val: Some(CoverStats {
                    covered: 5,
                    correct: 4,
                }),
            },
            Rule::default_for(a.id("SwipeUp").unwrap()),
        ];
        RuleSet::new(rules, InductionConfig::default(), a).unwrap()
    }

    fn az(v: f64) -> FeatureVector {
        FeatureVector::new(0.5, 0.0, v, 0.0, 1.0).unwrap()
    }

    #[test]
    fn default_only_predicts_everything() {
        let a = Alphabet::gestures();
        let push = a.id("Push").unwrap();
        let rs =
            RuleSet::new(vec![Rule::default_for(push)], InductionConfig::default(), a).unwrap();
        for v in [-5.0, 0.0, 5.0] {
            let p = predict(&rs, &az(v));
            assert_eq!(p.label, push);
            assert!(p.is_default);
            let e = explain(&rs, &az(v));
            assert_eq!(e.len(), 1);
            assert!(e[0].literals.is_empty() && e[0].fired);
        }
    }

    #[test]
    fn first_match_and_inclusive_boundary() {
        let rs = rules_lr();
        let p = predict(&rs, &az(-0.5));
        assert_eq!(
            (rs.alphabet().name(p.label), p.fired_rule_index),
            ("SwipeLeft", 0)
        );
        let p = predict(&rs, &az(-0.3));
        assert_eq!(p.fired_rule_index, 0);
        let p = predict(&rs, &az(0.3));
        assert_eq!((p.fired_rule_index, p.is_default), (2, true));
        assert_eq!(predict(&rs, &az(0.31)).fired_rule_index, 1);
    }

    #[test]
    fn explanation_matches_prediction() {
        let rs = rules_lr();
        let e = explain(&rs, &az(0.9));
        assert_eq!(e.len(), 2);
        assert!(!e[0].literals[0].holds && !e[0].fired);
        assert_eq!(e[0].literals[0].value, 0.9);
        assert!(e[1].fired);
        assert_eq!(
            e.last().unwrap().rule_index,
            predict(&rs, &az(0.9)).fired_rule_index
        );
    }

    #[test]
    fn second_literal_failure_is_visible() {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let rules = vec![
            Rule {
                literals: vec![
                    Literal::new(Feature::Range, Op::Le, 1.0).unwrap(),
                    Literal::new(Feature::Doppler, Op::Gt, 0.0).unwrap(),
                ],
                predicted: ClassId(0),
                kind: RuleKind::Specific,
                train: CoverStats::default(),
                val: None,
            },
            Rule::default_for(ClassId(1)),
        ];
        let rs = RuleSet::new(rules, InductionConfig::default(), a).unwrap();
        let x = FeatureVector::new(0.5, -1.0, 0.0, 0.0, 0.0).unwrap();
        let e = explain(&rs, &x);
        assert!(e[0].literals[0].holds);
        assert!(!e[0].literals[1].holds);
        assert_eq!(e[1].rule_index, 1);
        assert!(e[1].fired);
    }

    #[test]
    fn majority_baseline_accuracy() {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let samples = (0..10)
            .map(|i| LabeledSample::new(i, az(0.0), ClassId(usize::from(i >= 7))))
            .collect();
        let ds = Dataset::new(a.clone(), samples).unwrap();
        let rs = RuleSet::new(
            vec![Rule::default_for(ClassId(0))],
            InductionConfig::default(),
            a,
        )
        .unwrap();
        let report = evaluate(&rs, &ds).unwrap();
        assert!((report.accuracy - 0.7).abs() < 1e-15);
        assert_eq!(report.confusion, vec![vec![7, 0], vec![3, 0]]);
        assert_eq!(
            report.per_rule,
            vec![CoverStats {
                covered: 10,
                correct: 7
            }]
        );
        assert_eq!(report.per_class[1].precision, None);
        assert_eq!(report.per_class[1].recall, Some(0.0));
    }

    #[test]
    fn separating_rules_score_perfectly() {
        let rs = rules_lr();
        let a = rs.alphabet().clone();
        let samples = vec![
            LabeledSample::new(0, az(-1.0), a.id("SwipeLeft").unwrap()),
            LabeledSample::new(1, az(1.0), a.id("SwipeRight").unwrap()),
            LabeledSample::new(2, az(0.0), a.id("SwipeUp").unwrap()),
            LabeledSample::new(3, az(-0.8), a.id("SwipeLeft").unwrap()),
        ];
        let ds = Dataset::new(a, samples).unwrap();
        let r = evaluate(&rs, &ds).unwrap();
        assert_eq!(r.accuracy, 1.0);
        let off_diag: usize = (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| r.confusion[i][j])
            .sum();
        assert_eq!(off_diag, 0);
        assert_eq!(
            r.per_rule.iter().map(|s| s.covered).sum::<usize>(),
            ds.len()
        );
    }

    #[test]
    fn evaluate_rejects_foreign_alphabet() {
        let rs = rules_lr();
        let ds = Dataset::empty(Alphabet::new(["A"]).unwrap());
        assert!(evaluate(&rs, &ds).is_err());
    }

    #[test]
    fn rule_list_rendering() {
        let rs = rules_lr();
        assert_eq!(
            format_rule(&rs.rules()[0], rs.alphabet()),
            "IF azimuth <= -0.3 THEN SwipeLeft"
        );
        assert_eq!(format_rule(&rs.rules()[2], rs.alphabet()), "ELSE SwipeUp");
        let text = render_rule_list(&rs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "0  IF azimuth <= -0.3 THEN SwipeLeft  (train 9/10, val 5/5)"
        );
        assert!(lines[2].starts_with("2  ELSE SwipeUp"));
    }
}
