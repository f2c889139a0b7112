//! Per-user rules learned from calibration gestures and spliced in front of
//! the default rule of a foundational rule set.
//!
//! Only calibration samples that fall through every non-default rule are
//! used. Rules that already fire keep firing (first-match), so splicing new
//! rules after them cannot change those predictions.

use crate::config::InductionConfig;
use crate::error::{Error, Result};
use crate::induction::{default_rule, run_covering, Covering, Plan};
use crate::types::{Dataset, RuleKind, RuleSet};

/// Calibration samples not covered by any non-default rule of `rs`.
pub fn calibration_residuals(rs: &RuleSet, calib: &Dataset) -> Dataset {
    let rules = rs.non_default();
    calib.filter(|s| !rules.iter().any(|r| r.matches(&s.features)))
}

/// Appends up to `cfg.max_personal_rules` personalized rules (minus any the
/// set already carries) and recomputes the default rule.
///
/// Personalized rules are accepted on the residual set alone: coverage of
/// at least `max(personal_min_coverage, ceil(personal_coverage_fraction *
/// |residual|))` and accuracy of at least `min_val_accuracy`. Growth keeps
/// the foundational literal budget.
pub fn personalize(rs: &RuleSet, calib: &Dataset, cfg: &InductionConfig) -> Result<RuleSet> {
    let cfg = cfg.clone().validate()?;
    rs.alphabet().ensure_same(calib.alphabet())?;
    if calib.is_empty() {
        return Err(Error::EmptyDataset("calibration set"));
    }
    let residual = calibration_residuals(rs, calib);
    let existing = rs.n_kind(RuleKind::Personalized);
    let budget = cfg.max_personal_rules.saturating_sub(existing);
    if residual.is_empty() || budget == 0 {
        return Ok(rs.clone());
    }

    let mut snapshot = rs.config().clone();
    snapshot.max_personal_rules = cfg.max_personal_rules;
    snapshot.personal_coverage_fraction = cfg.personal_coverage_fraction;
    snapshot.personal_min_coverage = cfg.personal_min_coverage;
    snapshot.personal_min_train_remaining = cfg.personal_min_train_remaining;

    let run_cfg = InductionConfig {
        max_literals: rs.config().max_literals,
        ..cfg.clone()
    };
    let mut plan = Plan::personal(&run_cfg, residual.len());
    plan.max_rules = budget;
    let Covering {
        rules: personal,
        remaining,
        ..
    } = run_covering(&residual, None, &run_cfg, plan);

    let fallback = rs.default_rule().predicted;
    let mut rules = rs.non_default().to_vec();
    rules.extend(personal);
    rules.push(default_rule(&remaining, fallback));
    RuleSet::new(rules, snapshot, rs.alphabet().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::predict;
    use crate::types::{
        Alphabet, ClassId, CoverStats, Feature, FeatureVector, LabeledSample, Literal, Op, Rule,
    };

    fn alphabet() -> Alphabet {
        Alphabet::new(["A", "B", "C"]).unwrap()
    }

    /// A below range 1, B above range 9, default C.
    fn foundational() -> RuleSet {
        let lit = |op, t| Literal::new(Feature::Range, op, t).unwrap();
        let rules = vec![
            Rule {
                literals: vec![lit(Op::Le, 1.0)],
                predicted: ClassId(0),
                kind: RuleKind::Specific,
                train: CoverStats {
                    covered: 10,
                    correct: 10,
                },
                val: Some(CoverStats {
                    covered: 5,
                    correct: 5,
                }),
            },
            Rule {
                literals: vec![lit(Op::Gt, 9.0)],
                predicted: ClassId(1),
                kind: RuleKind::Specific,
                train: CoverStats {
                    covered: 10,
                    correct: 10,
                },
                val: Some(CoverStats {
                    covered: 5,
                    correct: 5,
                }),
            },
            Rule::default_for(ClassId(2)),
        ];
        RuleSet::new(rules, InductionConfig::default(), alphabet()).unwrap()
    }

    fn calib(points: &[(f64, f64, usize)]) -> Dataset {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(r, d, c))| {
                LabeledSample::new(
                    i as u64,
                    FeatureVector::new(r, d, 0.0, 0.0, 0.0).unwrap(),
                    ClassId(c),
                )
            })
            .collect();
        Dataset::new(alphabet(), samples).unwrap()
    }

    #[test]
    fn residuals() {
        let rs = foundational();
        let all_covered = calib(&[(0.0, 0.0, 0), (10.0, 0.0, 1)]);
        assert!(calibration_residuals(&rs, &all_covered).is_empty());
        let mixed = calib(&[(0.0, 0.0, 0), (5.0, 0.0, 2), (10.0, 0.0, 1), (6.0, 0.0, 0)]);
        let res = calibration_residuals(&rs, &mixed);
        assert_eq!(
            res.samples()
                .iter()
                .map(|s| s.sample_id)
                .collect::<Vec<_>>(),
            vec![1, 3]
        );

        let default_only = RuleSet::new(
            vec![Rule::default_for(ClassId(2))],
            InductionConfig::default(),
            alphabet(),
        )
        .unwrap();
        assert_eq!(
            calibration_residuals(&default_only, &mixed).len(),
            mixed.len()
        );
    }

    #[test]
    fn nothing_to_learn_is_a_no_op() {
        let rs = foundational();
        let c = calib(&[(0.0, 0.0, 0), (10.0, 0.0, 1), (0.5, 3.0, 0)]);
        assert_eq!(
            personalize(&rs, &c, &InductionConfig::default()).unwrap(),
            rs
        );
    }

    #[test]
    fn shifted_class_gets_a_personal_rule() {
        let rs = foundational();
        // This user's A gestures land at range 5 with doppler 2; C stays at doppler -2.
        let mut pts = Vec::new();
        for i in 0..20 {
            let j = i as f64 * 0.01;
            pts.push((5.0 + j, 2.0 + j, 0));
            pts.push((5.0 - j, -2.0 - j, 2));
        }
        let c = calib(&pts);
        let out = personalize(&rs, &c, &InductionConfig::default()).unwrap();
        let n_personal = out.n_kind(RuleKind::Personalized);
        assert!((1..=4).contains(&n_personal), "{n_personal}");
        assert_eq!(&out.rules()[..2], rs.non_default());
        let x = FeatureVector::new(5.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(predict(&out, &x).label, ClassId(0));
        assert_eq!(predict(&rs, &x).label, ClassId(2));
    }

    #[test]
    fn personal_budget_is_respected() {
        let rs = foundational();
        // Many small, pure clusters along doppler, alternating classes.
        let mut pts = Vec::new();
        for k in 0..12 {
            for i in 0..6 {
                pts.push((5.0, k as f64 * 10.0 + i as f64 * 0.01, k % 3));
            }
        }
        let c = calib(&pts);
        let cfg = InductionConfig {
            max_personal_rules: 4,
            personal_min_coverage: 2,
            personal_coverage_fraction: 0.0,
            ..Default::default()
        };
        let out = personalize(&rs, &c, &cfg).unwrap();
        assert_eq!(out.n_kind(RuleKind::Personalized), 4);
        // running again cannot exceed the budget
        let again = personalize(&out, &c, &cfg).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let rs = foundational();
        let other = Dataset::new(
            Alphabet::new(["X"]).unwrap(),
            vec![LabeledSample::new(0, FeatureVector::zeros(), ClassId(0))],
        )
        .unwrap();
        assert!(matches!(
            personalize(&rs, &other, &InductionConfig::default()),
            Err(Error::AlphabetMismatch { .. })
        ));
        let empty = Dataset::empty(alphabet());
        assert!(personalize(&rs, &empty, &InductionConfig::default()).is_err());
    }
}
