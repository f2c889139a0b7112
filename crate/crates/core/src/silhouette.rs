//! Class compactness scores used to pick the next class to write a rule for.
//!
//! For a sample x of class j, a(x) is its mean distance to the other members
//! of j and b(x) its mean distance to samples outside j (pooled over every
//! other class, or the nearest other class under [`Separation::Nearest`]).
//! The class score is the mean of (b - a) / max(a, b) over the class, and the
//! weighted score adds a class-size term so that small, tight classes do not
//! win by default:
//!
//! ```text
//! weighted_j = lambda1 * sqrt(lambda2 * n_j / n_left) + lambda3 * sc_j
//! ```

use std::cmp::Ordering;

use serde::Serialize;

use crate::config::{InductionConfig, Separation};
use crate::error::{Error, Result};
use crate::types::{ClassId, Dataset, FeatureVector, LabeledSample, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScore {
    pub class: ClassId,
    pub sc: f64,
    pub weighted: f64,
    pub n_class: usize,
    pub n_left: usize,
}

/// Euclidean distance over the five features.
pub fn pairwise_distance(x: &FeatureVector, y: &FeatureVector) -> f64 {
    x.as_array()
        .iter()
        .zip(y.as_array())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Per-sample sums of distances to each class: `sums[i * n_classes + c]`.
fn class_distance_sums(samples: &[LabeledSample], n_classes: usize) -> Vec<f64> {
    let n = samples.len();
    let mut sums = vec![0.0; n * n_classes];
    for i in 0..n {
        let (xi, li) = (&samples[i].features, samples[i].label.0);
        for k in (i + 1)..n {
            let d = pairwise_distance(xi, &samples[k].features);
            sums[i * n_classes + samples[k].label.0] += d;
            sums[k * n_classes + li] += d;
        }
    }
    sums
}

fn sample_silhouette(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m > 0.0 {
        (b - a) / m
    } else {
        0.0
    }
}

/// Silhouette of every class with at least two members and at least one
/// sample outside it; `None` for the rest. One O(N²) pass serves all classes.
pub fn all_class_silhouettes(ds: &Dataset, separation: Separation) -> Vec<Option<f64>> {
    let n_classes = ds.alphabet().len();
    let counts = ds.class_counts();
    let n = ds.len();
    let scorable: Vec<bool> = counts.iter().map(|&c| c >= 2 && c < n).collect();
    if !scorable.iter().any(|&s| s) {
        return vec![None; n_classes];
    }
    let sums = class_distance_sums(ds.samples(), n_classes);
    let mut acc = vec![0.0; n_classes];
    for (i, s) in ds.samples().iter().enumerate() {
        let j = s.label.0;
        if !scorable[j] {
            continue;
        }
        let row = &sums[i * n_classes..(i + 1) * n_classes];
        let a = row[j] / (counts[j] - 1) as f64;
        let b = match separation {
            Separation::Pooled => {
                let outside: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, d)| d)
                    .sum();
                outside / (n - counts[j]) as f64
            }
            Separation::Nearest => row
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != j && counts[c] > 0)
                .map(|(c, d)| d / counts[c] as f64)
                .fold(f64::INFINITY, f64::min),
        };
        acc[j] += sample_silhouette(a, b);
    }
    (0..n_classes)
        .map(|j| scorable[j].then(|| acc[j] / counts[j] as f64))
        .collect()
}

/// Silhouette coefficient of one class over `ds`.
pub fn class_silhouette(ds: &Dataset, class: ClassId, separation: Separation) -> Result<f64> {
    let n_class = ds.count(class);
    let degenerate = |reason| Error::DegenerateClass {
        class: ds.alphabet().name(class).to_string(),
        reason,
    };
    if n_class < 2 {
        return Err(degenerate("fewer than two samples"));
    }
    if n_class == ds.len() {
        return Err(degenerate("no samples outside the class"));
    }
    Ok(all_class_silhouettes(ds, separation)[class.0].expect("class is scorable"))
}

pub fn weighted_silhouette(sc: f64, n_class: usize, n_left: usize, cfg: &InductionConfig) -> f64 {
    let share = n_class as f64 / n_left as f64;
    cfg.lambda1 * (cfg.lambda2 * share).sqrt() + cfg.lambda3 * sc
}

/// Scores every class that can be scored on `ds`, in alphabet order.
pub fn score_classes(ds: &Dataset, cfg: &InductionConfig) -> Vec<ClassScore> {
    let n_left = ds.len();
    all_class_silhouettes(ds, cfg.separation)
        .into_iter()
        .enumerate()
        .filter_map(|(j, sc)| {
            let sc = sc?;
            let n_class = ds.class_counts()[j];
            Some(ClassScore {
                class: ClassId(j),
                sc,
                weighted: weighted_silhouette(sc, n_class, n_left, cfg),
                n_class,
                n_left,
            })
        })
        .collect()
}

/// Highest weighted score wins; ties go to the larger class, then to the
/// earlier class in the alphabet.
fn better(a: &ClassScore, b: &ClassScore) -> Ordering {
    a.weighted
        .total_cmp(&b.weighted)
        .then(a.n_class.cmp(&b.n_class))
        .then(b.class.cmp(&a.class))
}

pub fn pick_best(scores: &[ClassScore]) -> Option<ClassScore> {
    scores.iter().copied().max_by(better)
}

/// Picks the class with maximal weighted silhouette over the remaining
/// training samples. Classes with a single remaining sample are not scored.
///
/// Distances are computed on `remaining` as given; feature scaling, if any,
/// is the caller's job (see [`ZScore`]).
pub fn select_target_class(remaining: &Dataset, cfg: &InductionConfig) -> Result<ClassScore> {
    match remaining.n_present_classes() {
        0 => return Err(Error::EmptyDataset("training remainder")),
        1 => {
            let only = remaining.majority_class().expect("one class present");
            return Err(Error::SingleClassRemainder(
                remaining.alphabet().name(only).to_string(),
            ));
        }
        _ => {}
    }
    pick_best(&score_classes(remaining, cfg)).ok_or_else(|| Error::DegenerateClass {
        class: "*".into(),
        reason: "every remaining class has a single sample",
    })
}

/// Per-feature standardisation fitted on a training set. Constant features
/// keep unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScore {
    mean: [f64; N_FEATURES],
    std: [f64; N_FEATURES],
}

impl ZScore {
    pub fn fit(ds: &Dataset) -> Self {
        let n = ds.len().max(1) as f64;
        let mut mean = [0.0; N_FEATURES];
        for s in ds.samples() {
            for (m, v) in mean.iter_mut().zip(s.features.as_array()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; N_FEATURES];
        for s in ds.samples() {
            for ((acc, v), m) in var.iter_mut().zip(s.features.as_array()).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var.map(|v| {
            let sd = (v / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        });
        ZScore { mean, std }
    }

    pub fn transform(&self, x: &FeatureVector) -> FeatureVector {
        let mut out = *x.as_array();
        for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std) {
            *o = (*o - m) / s;
        }
        FeatureVector::from_array(out).expect("scaling finite values stays finite")
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let samples = ds
            .samples()
            .iter()
            .map(|s| LabeledSample {
                features: self.transform(&s.features),
                ..s.clone()
            })
            .collect();
        Dataset::new(ds.alphabet().clone(), samples).expect("same ids and labels")
    }
}
