//! Line-oriented, versioned rule-file format.
//!
//! ```text
//! mira-rules v1
//! alphabet = SwipeLeft,SwipeRight,SwipeUp,SwipeDown,Push
//! max_rules = 15
//! ...                      (every config key, `key = value`)
//! RULE 0 specific IF azimuth <= -0.3125 AND range > 0.2 THEN SwipeLeft ; train=120/118 val=30/29
//! RULE 1 personalized IF elevation > 0.61 THEN SwipeUp ; train=9/9
//! ELSE Push ; train=41/17
//! ```
//!
//! Thresholds are written as the shortest decimal that parses back to the
//! same `f64`, so a saved rule set predicts bit-identically after loading.
//! Stats read `covered/correct`. The `; train=` suffix on `ELSE` is
//! optional when parsing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{split_kv, InductionConfig};
use crate::error::{Error, Result};
use crate::types::{Alphabet, CoverStats, Feature, Literal, Op, Rule, RuleKind, RuleSet};

pub const HEADER: &str = "mira-rules v1";

fn stats(s: CoverStats) -> String {
    format!("{}/{}", s.covered, s.correct)
}

pub fn to_rule_text(rs: &RuleSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "alphabet = {}", rs.alphabet());
    out.push_str(&rs.config().to_kv());
    for (i, rule) in rs.rules().iter().enumerate() {
        let class = rs.alphabet().name(rule.predicted);
        if rule.is_default() {
            let _ = writeln!(out, "ELSE {class} ; train={}", stats(rule.train));
            continue;
        }
        let conds: Vec<String> = rule.literals.iter().map(|l| l.to_string()).collect();
        let _ = write!(
            out,
            "RULE {i} {} IF {} THEN {class} ; train={}",
            rule.kind.name(),
            conds.join(" AND "),
            stats(rule.train)
        );
        if let Some(v) = rule.val {
            let _ = write!(out, " val={}", stats(v));
        }
        out.push('\n');
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::RuleFile {
        line,
        msg: msg.into(),
    }
}

fn parse_stats(line: usize, token: &str, key: &str) -> Result<CoverStats> {
    let body = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| {
            err(
                line,
                format!("expected {key}=<covered>/<correct>, got {token:?}"),
            )
        })?;
    let (covered, correct) = body
        .split_once('/')
        .ok_or_else(|| err(line, format!("malformed stats {token:?}")))?;
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(line, format!("malformed stats {token:?}")))
    };
    Ok(CoverStats {
        covered: num(covered)?,
        correct: num(correct)?,
    })
}

/// Parses `; train=a/b [val=c/d]`.
fn parse_suffix(line: usize, tokens: &[&str]) -> Result<(CoverStats, Option<CoverStats>)> {
    match tokens {
        [] => Ok((CoverStats::default(), None)),
        [";", train] => Ok((parse_stats(line, train, "train")?, None)),
        [";", train, val] => Ok((
            parse_stats(line, train, "train")?,
            Some(parse_stats(line, val, "val")?),
        )),
        _ => Err(err(line, format!("unexpected trailing tokens {tokens:?}"))),
    }
}

fn parse_rule_line(
    line: usize,
    text: &str,
    expected_index: usize,
    alphabet: &Alphabet,
) -> Result<Rule> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if let ["ELSE", class, rest @ ..] = tokens.as_slice() {
        let predicted = alphabet.id(class).map_err(|e| err(line, e.to_string()))?;
        let (train, val) = parse_suffix(line, rest)?;
        if val.is_some() {
            return Err(err(line, "default rule carries no validation stats"));
        }
        return Ok(Rule {
            train,
            ..Rule::default_for(predicted)
        });
    }
    let ["RULE", index, kind, "IF", rest @ ..] = tokens.as_slice() else {
        return Err(err(
            line,
            format!("expected RULE or ELSE line, got {text:?}"),
        ));
    };
    let index: usize = index
        .parse()
        .map_err(|_| err(line, format!("bad rule index {index:?}")))?;
    if index != expected_index {
        return Err(err(
            line,
            format!("rule index {index}, expected {expected_index}"),
        ));
    }
    let kind = match *kind {
        "specific" => RuleKind::Specific,
        "personalized" => RuleKind::Personalized,
        other => return Err(err(line, format!("unknown rule kind {other:?}"))),
    };
    let then = rest
        .iter()
        .position(|t| *t == "THEN")
        .ok_or_else(|| err(line, "missing THEN"))?;
    let mut literals = Vec::new();
    for (k, chunk) in rest[..then].split(|t| *t == "AND").enumerate() {
        let [feature, op, threshold] = chunk else {
            return Err(err(
                line,
                format!("literal {k} is not `<feature> <op> <threshold>`"),
            ));
        };
        let feature = Feature::parse(feature).map_err(|e| err(line, e.to_string()))?;
        let op = Op::parse(op).ok_or_else(|| err(line, format!("unknown operator {op:?}")))?;
        let threshold: f64 = threshold
            .parse()
            .map_err(|_| err(line, format!("bad threshold {threshold:?}")))?;
        literals.push(Literal::new(feature, op, threshold).map_err(|e| err(line, e.to_string()))?);
    }
    let class = rest
        .get(then + 1)
        .ok_or_else(|| err(line, "missing class after THEN"))?;
    let predicted = alphabet.id(class).map_err(|e| err(line, e.to_string()))?;
    let (train, val) = parse_suffix(line, &rest[then + 2..])?;
    Ok(Rule {
        literals,
        predicted,
        kind,
        train,
        val,
    })
}

pub fn parse_rule_text(text: &str) -> Result<RuleSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected {HEADER:?}, got {other:?}"))),
        None => return Err(err(0, "empty rule file")),
    }
    let mut alphabet = None;
    let mut cfg = InductionConfig::default();
    let mut rules = Vec::new();
    for (n, line) in lines {
        if line.starts_with("RULE ") || line.starts_with("ELSE ") {
            let alphabet = alphabet
                .as_ref()
                .ok_or_else(|| err(n, "rules before `alphabet =` line"))?;
            rules.push(parse_rule_line(n, line, rules.len(), alphabet)?);
            continue;
        }
        if !rules.is_empty() {
            return Err(err(n, format!("unexpected line after rules: {line:?}")));
        }
        let (key, value) =
            split_kv(line).ok_or_else(|| err(n, format!("cannot parse {line:?}")))?;
        if key == "alphabet" {
            alphabet = Some(
                Alphabet::new(value.split(',').map(str::trim))
                    .map_err(|e| err(n, e.to_string()))?,
            );
        } else {
            cfg.set(key, value, n).map_err(|e| err(n, e.to_string()))?;
        }
    }
    let alphabet = alphabet.ok_or_else(|| err(0, "missing `alphabet =` line"))?;
    let cfg = cfg.validate()?;
    RuleSet::new(rules, cfg, alphabet)
}

pub fn save_rules(rs: &RuleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_rule_text(rs)).map_err(|e| Error::io(path, e))
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rule_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ClassId;
    use proptest::prelude::*;

    fn sample_set() -> RuleSet {
        let a = Alphabet::gestures();
        let rules = vec![
            Rule {
                literals: vec![
                    Literal::new(Feature::Azimuth, Op::Le, -0.3125).unwrap(),
                    Literal::new(Feature::Range, Op::Gt, 0.1 + 0.2).unwrap(),
                ],
                predicted: ClassId(0),
                kind: RuleKind::Specific,
                train: CoverStats {
                    covered: 120,
                    correct: 118,
                },
                val: Some(CoverStats {
                    covered: 30,
                    correct: 29,
                }),
            },
            Rule {
                literals: vec![Literal::new(Feature::Elevation, Op::Gt, 6.1e-7).unwrap()],
                predicted: ClassId(2),
                kind: RuleKind::Personalized,
                train: CoverStats {
                    covered: 9,
                    correct: 9,
                },
                val: None,
            },
            Rule {
                train: CoverStats {
                    covered: 41,
                    correct: 17,
                },
                ..Rule::default_for(ClassId(4))
            },
        ];
        RuleSet::new(rules, InductionConfig::default(), a).unwrap()
    }

    #[test]
    fn text_layout() {
        let text = to_rule_text(&sample_set());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mira-rules v1");
        assert_eq!(
            lines[1],
            "alphabet = SwipeLeft,SwipeRight,SwipeUp,SwipeDown,Push"
        );
        assert!(lines.contains(&"lambda2 = 10"));
        assert_eq!(
            lines[lines.len() - 3],
            "RULE 0 specific IF azimuth <= -0.3125 AND range > 0.30000000000000004 THEN SwipeLeft ; train=120/118 val=30/29"
        );
        assert_eq!(
            lines[lines.len() - 2],
            "RULE 1 personalized IF elevation > 0.00000061 THEN SwipeUp ; train=9/9"
        );
        assert_eq!(lines[lines.len() - 1], "ELSE Push ; train=41/17");
    }

    #[test]
    fn parse_round_trip() {
        let rs = sample_set();
        assert_eq!(parse_rule_text(&to_rule_text(&rs)).unwrap(), rs);
    }

    #[test]
    fn bare_else_accepted() {
        let text = "mira-rules v1\nalphabet = A,B\nELSE B\n";
        let rs = parse_rule_text(text).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.default_rule().predicted, ClassId(1));
    }

    #[test]
    fn malformed_files() {
        let ok = to_rule_text(&sample_set());
        assert!(parse_rule_text("").is_err());
        assert!(parse_rule_text(&ok.replace("mira-rules v1", "mira-rules v2")).is_err());
        assert!(parse_rule_text(&ok.replace("RULE 1", "RULE 5")).is_err());
        assert!(parse_rule_text(&ok.replace("<= -0.3125", "< -0.3125")).is_err());
        assert!(parse_rule_text(&ok.replace("THEN SwipeUp", "THEN Wave")).is_err());
        assert!(parse_rule_text(&ok.replace("ELSE Push ; train=41/17\n", "")).is_err());
        assert!(parse_rule_text(&ok.replace("train=9/9", "train=9/10")).is_err());
        assert!(parse_rule_text(&ok.replace("lambda1 = 0.5", "lambda1 = 3")).is_err());
        assert!(parse_rule_text(&ok.replace("lambda1 = 0.5", "lambda9 = 0.5")).is_err());
        assert!(parse_rule_text(&ok.replace("azimuth <= -0.3125", "azimuth <= inf")).is_err());
    }

    fn literal() -> impl Strategy<Value = Literal> {
        (
            0usize..5,
            any::<bool>(),
            prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        )
            .prop_map(|(f, le, t)| Literal {
                feature: Feature::from_index(f).unwrap(),
                op: if le { Op::Le } else { Op::Gt },
                threshold: t,
            })
    }

    proptest! {
        #[test]
        fn arbitrary_rule_sets_round_trip(
            specs in prop::collection::vec((prop::collection::vec(literal(), 1..=2), 0usize..5, 0usize..100, 0usize..100), 0..15),
            default in 0usize..5,
        ) {
            let mut rules: Vec<Rule> = specs
                .into_iter()
                .map(|(literals, c, a, b)| Rule {
                    literals,
                    predicted: ClassId(c),
                    kind: RuleKind::Specific,
                    train: CoverStats { covered: a.max(b), correct: a.min(b) },
                    val: (a % 2 == 0).then_some(CoverStats { covered: b, correct: b / 2 }),
                })
                .collect();
            rules.push(Rule::default_for(ClassId(default)));
            let rs = RuleSet::new(rules, InductionConfig::default(), Alphabet::gestures()).unwrap();
            let back = parse_rule_text(&to_rule_text(&rs)).unwrap();
            for (a, b) in rs.rules().iter().zip(back.rules()) {
                for (la, lb) in a.literals.iter().zip(&b.literals) {
                    prop_assert_eq!(la.threshold.to_bits(), lb.threshold.to_bits());
                }
            }
            prop_assert_eq!(back, rs);
        }
    }
}
