//! Interpretable multi-class rule induction for radar gesture features.
//!
//! A rule list is learned by sequential covering: the most compact remaining
//! class (by a size-weighted silhouette coefficient) gets the next rule, whose
//! threshold literals are grown greedily under an F-Beta objective and then
//! gated on training and validation coverage and accuracy. Prediction is
//! first-match over the ordered list, with a majority-vote default rule at
//! the end. Per-user rules learned from calibration gestures can be spliced in
//! before the default rule without disturbing earlier decisions.
//!
//! ```
//! use mira_core::{data, induction, inference, InductionConfig};
//!
//! let spec = data::SynthSpec::parse(
//!     "classes = A, B\n\
//!      mean.A = 0, 0, 0, 0, 0\n\
//!      mean.B = 5, 5, 5, 5, 5\n\
//!      spread = 0.5, 0.5, 0.5, 0.5, 0.5\n\
//!      users = u1\n\
//!      locations = lab\n\
//!      samples_per_class_user = 60\n",
//! )
//! .unwrap();
//! let train = data::synthesize(&spec, 1).unwrap();
//! let val = data::synthesize(&spec, 2).unwrap();
//! let (rules, _trace) = induction::induce_ruleset(&train, &val, &InductionConfig::default()).unwrap();
//! let report = inference::evaluate(&rules, &val).unwrap();
//! assert!(report.accuracy > 0.99);
//! ```

pub mod config;
pub mod data;
pub mod error;
pub mod induction;
pub mod inference;
pub mod personalization;
pub mod rulefile;
pub mod scoring;
pub mod silhouette;
pub mod types;

pub use config::{InductionConfig, Separation};
pub use error::{Error, Result};
pub use types::{
    Alphabet, ClassId, CoverStats, Dataset, Feature, FeatureVector, GestureClass, GestureRecording,
    LabeledSample, Literal, Op, Rule, RuleKind, RuleSet,
};
