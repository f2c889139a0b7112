//! Domain types shared by every stage of the pipeline: feature vectors,
//! labelled samples, datasets, and the literal/rule/rule-set hierarchy.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::InductionConfig;
use crate::error::{Error, Result};

/// One of the five distilled radar features. The declaration order is the
/// canonical feature order used for indexing, tie-breaking and CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Range,
    Doppler,
    Azimuth,
    Elevation,
    Peak,
}

pub const N_FEATURES: usize = 5;

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::Range,
        Feature::Doppler,
        Feature::Azimuth,
        Feature::Elevation,
        Feature::Peak,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Feature::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Range => "range",
            Feature::Doppler => "doppler",
            Feature::Azimuth => "azimuth",
            Feature::Elevation => "elevation",
            Feature::Peak => "peak",
        }
    }

    pub fn parse(s: &str) -> Result<Feature> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gesture summarised by its five features. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureVector([f64; N_FEATURES]);

impl FeatureVector {
    pub fn new(range: f64, doppler: f64, azimuth: f64, elevation: f64, peak: f64) -> Result<Self> {
        Self::from_array([range, doppler, azimuth, elevation, peak])
    }

    pub fn from_array(values: [f64; N_FEATURES]) -> Result<Self> {
        for (f, &v) in Feature::ALL.iter().zip(values.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    feature: f.name(),
                    value: v,
                });
            }
        }
        Ok(FeatureVector(values))
    }

    pub fn zeros() -> Self {
        FeatureVector([0.0; N_FEATURES])
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }

    pub fn as_array(&self) -> &[f64; N_FEATURES] {
        &self.0
    }

    pub fn range(&self) -> f64 {
        self.0[0]
    }

    pub fn doppler(&self) -> f64 {
        self.0[1]
    }

    pub fn azimuth(&self) -> f64 {
        self.0[2]
    }

    pub fn elevation(&self) -> f64 {
        self.0[3]
    }

    pub fn peak(&self) -> f64 {
        self.0[4]
    }
}

/// Default number of frames a gesture occupies inside a recording.
pub const DEFAULT_GESTURE_FRAMES: usize = 10;

/// Per-frame features of one recording plus the frame window that holds the
/// gesture itself (`start` inclusive, `end` exclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct GestureRecording {
    frames: Vec<FeatureVector>,
    start: usize,
    end: usize,
}

impl GestureRecording {
    pub fn new(frames: Vec<FeatureVector>, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > frames.len() {
            return Err(Error::InvalidWindow {
                start,
                end,
                frames: frames.len(),
            });
        }
        Ok(GestureRecording { frames, start, end })
    }

    pub fn frames(&self) -> &[FeatureVector] {
        &self.frames
    }

    pub fn window(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn window_len(&self) -> usize {
        self.end - self.start
    }

    /// Checks the window against the configured gesture length.
    pub fn check_window_len(&self, expected: usize) -> Result<()> {
        if self.window_len() != expected {
            return Err(Error::WindowLength {
                expected,
                found: self.window_len(),
            });
        }
        Ok(())
    }
}

/// A class label name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GestureClass(String);

impl GestureClass {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GestureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Index of a class inside an [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub usize);

/// Closed, ordered label alphabet. Order is significant: it is the final
/// tie-break wherever classes compete.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet(Vec<GestureClass>);

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut classes = Vec::new();
        for name in names {
            let name = name.into();
            if name.is_empty()
                || name.contains(',')
                || name.contains(';')
                || name.chars().any(char::is_whitespace)
            {
                return Err(Error::InvalidAlphabet(format!(
                    "class name {name:?} must be non-empty without commas, semicolons or whitespace"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidAlphabet(format!("duplicate class {name:?}")));
            }
            classes.push(GestureClass(name));
        }
        if classes.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        Ok(Alphabet(classes))
    }

    /// The five swipe/push gestures of the radar gesture dataset.
    pub fn gestures() -> Self {
        Alphabet::new(["SwipeLeft", "SwipeRight", "SwipeUp", "SwipeDown", "Push"])
            .expect("static alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<ClassId> {
        self.0
            .iter()
            .position(|c| c.0 == name)
            .map(ClassId)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn class(&self, id: ClassId) -> &GestureClass {
        &self.0[id.0]
    }

    pub fn name(&self, id: ClassId) -> &str {
        &self.0[id.0].0
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.0.len()).map(ClassId)
    }

    pub fn classes(&self) -> &[GestureClass] {
        &self.0
    }

    pub(crate) fn ensure_same(&self, other: &Alphabet) -> Result<()> {
        if self != other {
            return Err(Error::AlphabetMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&c.0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_id: u64,
    pub features: FeatureVector,
    pub label: ClassId,
    pub user_id: String,
    pub location_id: String,
}

impl LabeledSample {
    pub fn new(sample_id: u64, features: FeatureVector, label: ClassId) -> Self {
        LabeledSample {
            sample_id,
            features,
            label,
            user_id: String::new(),
            location_id: String::new(),
        }
    }

    pub fn with_provenance(mut self, user: impl Into<String>, location: impl Into<String>) -> Self {
        self.user_id = user.into();
        self.location_id = location.into();
        self
    }
}

/// Ordered samples over a closed alphabet, with per-class counts kept in
/// sync so size queries are O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    alphabet: Alphabet,
    samples: Vec<LabeledSample>,
    class_counts: Vec<usize>,
}

impl Dataset {
    pub fn new(alphabet: Alphabet, samples: Vec<LabeledSample>) -> Result<Self> {
        let mut class_counts = vec![0; alphabet.len()];
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.label.0 >= alphabet.len() {
                return Err(Error::UnknownLabel(format!("class index {}", s.label.0)));
            }
            if !ids.insert(s.sample_id) {
                return Err(Error::DuplicateSampleId(s.sample_id));
            }
            class_counts[s.label.0] += 1;
        }
        Ok(Dataset {
            alphabet,
            samples,
            class_counts,
        })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        let class_counts = vec![0; alphabet.len()];
        Dataset {
            alphabet,
            samples: Vec::new(),
            class_counts,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, class: ClassId) -> usize {
        self.class_counts[class.0]
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Number of classes with at least one sample.
    pub fn n_present_classes(&self) -> usize {
        self.class_counts.iter().filter(|&&c| c > 0).count()
    }

    /// Most frequent class, ties resolved by alphabet order. `None` when empty.
    pub fn majority_class(&self) -> Option<ClassId> {
        let mut best: Option<(usize, usize)> = None;
        for (i, &c) in self.class_counts.iter().enumerate() {
            if c > 0 && best.is_none_or(|(_, bc)| c > bc) {
                best = Some((i, c));
            }
        }
        best.map(|(i, _)| ClassId(i))
    }

    /// Keeps the samples for which `keep` holds, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&LabeledSample) -> bool) -> Dataset {
        let samples: Vec<_> = self.samples.iter().filter(|s| keep(s)).cloned().collect();
        self.with_samples(samples)
    }

    /// Samples at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Dataset {
        let samples = positions.iter().map(|&i| self.samples[i].clone()).collect();
        self.with_samples(samples)
    }

    fn with_samples(&self, samples: Vec<LabeledSample>) -> Dataset {
        let mut class_counts = vec![0; self.alphabet.len()];
        for s in &samples {
            class_counts[s.label.0] += 1;
        }
        Dataset {
            alphabet: self.alphabet.clone(),
            samples,
            class_counts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        match s {
            "<=" => Some(Op::Le),
            ">" => Some(Op::Gt),
            _ => None,
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Op::Le => value <= threshold,
            Op::Gt => value > threshold,
        }
    }
}

/// A single-feature threshold predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Literal {
    pub feature: Feature,
    pub op: Op,
    pub threshold: f64,
}

impl Literal {
    pub fn new(feature: Feature, op: Op, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::NonFinite {
                feature: feature.name(),
                value: threshold,
            });
        }
        Ok(Literal {
            feature,
            op,
            threshold,
        })
    }

    pub fn holds(&self, x: &FeatureVector) -> bool {
        self.op.holds(x.get(self.feature), self.threshold)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.feature,
            self.op.symbol(),
            self.threshold
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Specific,
    Personalized,
    Default,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Specific => "specific",
            RuleKind::Personalized => "personalized",
            RuleKind::Default => "default",
        }
    }
}

/// Covered and correctly-covered counts recorded when a rule was induced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CoverStats {
    pub covered: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    pub literals: Vec<Literal>,
    pub predicted: ClassId,
    pub kind: RuleKind,
    pub train: CoverStats,
    pub val: Option<CoverStats>,
}

impl Rule {
    pub fn default_for(predicted: ClassId) -> Self {
        Rule {
            literals: Vec::new(),
            predicted,
            kind: RuleKind::Default,
            train: CoverStats::default(),
            val: None,
        }
    }

    /// True iff every literal holds. The empty conjunction matches everything.
    pub fn matches(&self, x: &FeatureVector) -> bool {
        self.literals.iter().all(|l| l.holds(x))
    }

    pub fn is_default(&self) -> bool {
        self.kind == RuleKind::Default
    }
}

/// An ordered decision list: specific rules, then personalized rules, then
/// exactly one default rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    config: InductionConfig,
    alphabet: Alphabet,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, config: InductionConfig, alphabet: Alphabet) -> Result<Self> {
        let rs = RuleSet {
            rules,
            config,
            alphabet,
        };
        rs.check()?;
        Ok(rs)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRuleSet(msg));
        let Some(last) = self.rules.last() else {
            return bad("no rules".into());
        };
        if !last.is_default() {
            return bad("last rule is not a default rule".into());
        }
        let mut n_specific = 0;
        let mut n_personal = 0;
        for (i, r) in self.rules.iter().enumerate() {
            if r.predicted.0 >= self.alphabet.len() {
                return bad(format!("rule {i} predicts class index {}", r.predicted.0));
            }
            let stats_ok =
                r.train.correct <= r.train.covered && r.val.is_none_or(|v| v.correct <= v.covered);
            if !stats_ok {
                return bad(format!("rule {i} has more correct than covered samples"));
            }
            if r.literals.len() > self.config.max_literals {
                return bad(format!(
                    "rule {i} has {} literals, limit is {}",
                    r.literals.len(),
                    self.config.max_literals
                ));
            }
            match r.kind {
                RuleKind::Default => {
                    if i + 1 != self.rules.len() {
                        return bad(format!("default rule at {i} is not last"));
                    }
                    if !r.literals.is_empty() {
                        return bad("default rule has literals".into());
                    }
                }
                RuleKind::Specific => {
                    if n_personal > 0 {
                        return bad(format!("specific rule {i} follows a personalized rule"));
                    }
                    n_specific += 1;
                }
                RuleKind::Personalized => n_personal += 1,
            }
            if !r.is_default() && r.literals.is_empty() {
                return bad(format!("rule {i} has no literals"));
            }
        }
        if n_specific > self.config.max_rules {
            return bad(format!(
                "{n_specific} specific rules exceed max_rules = {}",
                self.config.max_rules
            ));
        }
        if n_personal > self.config.max_personal_rules {
            return bad(format!(
                "{n_personal} personalized rules exceed max_personal_rules = {}",
                self.config.max_personal_rules
            ));
        }
        Ok(())
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn config(&self) -> &InductionConfig {
        &self.config
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn default_rule(&self) -> &Rule {
        self.rules
            .last()
            .expect("rule set always ends with a default rule")
    }

    /// Every rule except the trailing default.
    pub fn non_default(&self) -> &[Rule] {
        &self.rules[..self.rules.len() - 1]
    }

    pub fn n_kind(&self, kind: RuleKind) -> usize {
        self.rules.iter().filter(|r| r.kind == kind).count()
    }

    pub fn into_parts(self) -> (Vec<Rule>, InductionConfig, Alphabet) {
        (self.rules, self.config, self.alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(r: f64) -> FeatureVector {
        FeatureVector::new(r, 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn feature_index_name_bijection() {
        for (i, f) in Feature::ALL.iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(Feature::from_index(i), Some(*f));
            assert_eq!(Feature::parse(f.name()).unwrap(), *f);
        }
        assert!(Feature::parse("velocity").is_err());
    }

    #[test]
    fn feature_vector_rejects_non_finite() {
        assert!(FeatureVector::new(0.0, f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(FeatureVector::new(0.0, 0.0, f64::INFINITY, 0.0, 0.0).is_err());
        let v = FeatureVector::new(1.0, 2.0, 3.0, 4.0, 5.0).unwrap();
        assert_eq!(v.get(Feature::Elevation), 4.0);
        assert_eq!(v.peak(), 5.0);
    }

    #[test]
    fn recording_window_bounds() {
        let frames = vec![fv(0.0); 4];
        assert!(GestureRecording::new(frames.clone(), 0, 4).is_ok());
        assert!(GestureRecording::new(frames.clone(), 2, 2).is_err());
        assert!(GestureRecording::new(frames.clone(), 1, 5).is_err());
        let rec = GestureRecording::new(frames, 1, 3).unwrap();
        assert!(rec.check_window_len(2).is_ok());
        assert!(rec.check_window_len(DEFAULT_GESTURE_FRAMES).is_err());
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["A", "A"]).is_err());
        assert!(Alphabet::new(["A,B"]).is_err());
        let a = Alphabet::gestures();
        assert_eq!(a.len(), 5);
        assert_eq!(a.id("Push").unwrap(), ClassId(4));
        assert!(a.id("Wave").is_err());
        assert_eq!(a.to_string(), "SwipeLeft,SwipeRight,SwipeUp,SwipeDown,Push");
    }

    #[test]
    fn dataset_counts_and_majority() {
        let a = Alphabet::new(["A", "B", "C"]).unwrap();
        let samples = vec![
            LabeledSample::new(0, fv(0.0), ClassId(1)),
            LabeledSample::new(1, fv(1.0), ClassId(0)),
            LabeledSample::new(2, fv(2.0), ClassId(1)),
            LabeledSample::new(3, fv(3.0), ClassId(0)),
        ];
        let ds = Dataset::new(a.clone(), samples).unwrap();
        assert_eq!(ds.class_counts(), &[2, 2, 0]);
        assert_eq!(ds.class_counts().iter().sum::<usize>(), ds.len());
        // tie resolves to alphabet order
        assert_eq!(ds.majority_class(), Some(ClassId(0)));
        let only_b = ds.filter(|s| s.label == ClassId(1));
        assert_eq!(only_b.majority_class(), Some(ClassId(1)));
        assert_eq!(only_b.n_present_classes(), 1);
        assert_eq!(Dataset::empty(a).majority_class(), None);
    }

    #[test]
    fn dataset_rejects_duplicate_ids_and_foreign_labels() {
        let a = Alphabet::new(["A"]).unwrap();
        let dup = vec![
            LabeledSample::new(7, fv(0.0), ClassId(0)),
            LabeledSample::new(7, fv(1.0), ClassId(0)),
        ];
        assert!(matches!(
            Dataset::new(a.clone(), dup),
            Err(Error::DuplicateSampleId(7))
        ));
        let foreign = vec![LabeledSample::new(0, fv(0.0), ClassId(3))];
        assert!(Dataset::new(a, foreign).is_err());
    }

    #[test]
    fn literal_boundaries_are_exact() {
        let le = Literal::new(Feature::Range, Op::Le, 2.5).unwrap();
        let gt = Literal::new(Feature::Range, Op::Gt, 2.5).unwrap();
        assert!(le.holds(&fv(2.5)));
        assert!(!gt.holds(&fv(2.5)));
        assert!(gt.holds(&fv(2.5000000000000004)));
        assert!(Literal::new(Feature::Range, Op::Le, f64::NAN).is_err());
    }

    #[test]
    fn ruleset_invariants_enforced() {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let cfg = InductionConfig::default();
        let lit = Literal::new(Feature::Range, Op::Le, 1.0).unwrap();
        let specific = Rule {
            literals: vec![lit],
            predicted: ClassId(0),
            kind: RuleKind::Specific,
            train: CoverStats {
                covered: 3,
                correct: 3,
            },
            val: None,
        };
        assert!(RuleSet::new(vec![], cfg.clone(), a.clone()).is_err());
        assert!(RuleSet::new(vec![specific.clone()], cfg.clone(), a.clone()).is_err());
        let two_defaults = vec![Rule::default_for(ClassId(0)), Rule::default_for(ClassId(1))];
        assert!(RuleSet::new(two_defaults, cfg.clone(), a.clone()).is_err());
        let mut too_long = specific.clone();
        too_long.literals = vec![lit; 3];
        assert!(RuleSet::new(
            vec![too_long, Rule::default_for(ClassId(1))],
            cfg.clone(),
            a.clone()
        )
        .is_err());
        let mut bad_stats = specific.clone();
        bad_stats.train = CoverStats {
            covered: 1,
            correct: 2,
        };
        assert!(RuleSet::new(
            vec![bad_stats, Rule::default_for(ClassId(1))],
            cfg.clone(),
            a.clone()
        )
        .is_err());
        let rs = RuleSet::new(vec![specific, Rule::default_for(ClassId(1))], cfg, a).unwrap();
        assert_eq!(rs.non_default().len(), 1);
        assert_eq!(rs.default_rule().predicted, ClassId(1));
    }
}
