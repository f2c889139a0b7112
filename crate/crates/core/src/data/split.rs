use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// Class-stratified random split.
    Fractions { train: f64, val: f64, test: f64 },
    /// Whole users per partition. Samples of unlisted users are dropped.
    ByUsers {
        train: Vec<String>,
        val: Vec<String>,
        test: Vec<String>,
    },
}

/// Largest-remainder apportionment of `n` over `fracs`.
fn apportion(n: usize, fracs: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fracs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &p in order.iter().take(n.saturating_sub(assigned)) {
        sizes[p] += 1;
    }
    sizes
}

/// Per-class partition sizes whose row sums are the class counts and whose
/// column sums are the global apportionment of the whole dataset.
fn stratified_sizes(class_counts: &[usize], fracs: &[f64]) -> Vec<Vec<usize>> {
    let total: usize = class_counts.iter().sum();
    let targets = apportion(total, fracs);
    let mut sizes: Vec<Vec<usize>> = class_counts
        .iter()
        .map(|&n| {
            fracs
                .iter()
                .map(|f| (f * n as f64).floor() as usize)
                .collect()
        })
        .collect();
    let mut open: Vec<usize> = targets
        .iter()
        .enumerate()
        .map(|(p, &t)| t - sizes.iter().map(|row| row[p]).sum::<usize>())
        .collect();
    for (c, &n) in class_counts.iter().enumerate() {
        let left = n - sizes[c].iter().sum::<usize>();
        let mut order: Vec<usize> = (0..fracs.len()).collect();
        let frac_part = |p: usize| {
            let e = fracs[p] * n as f64;
            e - e.floor()
        };
        order.sort_by(|&a, &b| frac_part(b).total_cmp(&frac_part(a)).then(a.cmp(&b)));
        for _ in 0..left {
            let p = order
                .iter()
                .copied()
                .find(|&p| open[p] > 0)
                .unwrap_or(order[0]);
            sizes[c][p] += 1;
            open[p] = open[p].saturating_sub(1);
            // spread a class's leftovers over distinct partitions first
            order.retain(|&q| q != p);
            order.push(p);
        }
    }
    sizes
}

/// Splits `ds` into (train, val, test). Each partition keeps the original
/// sample order. Deterministic for a given seed.
pub fn split(ds: &Dataset, spec: &SplitSpec, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let mut parts: [Vec<usize>; 3] = Default::default();
    match spec {
        SplitSpec::Fractions { train, val, test } => {
            let fracs = [*train, *val, *test];
            if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return Err(Error::Split(format!(
                    "fractions must lie in [0,1]: {fracs:?}"
                )));
            }
            if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Split(format!("fractions must sum to 1: {fracs:?}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sizes = stratified_sizes(ds.class_counts(), &fracs);
            for class in ds.alphabet().ids() {
                let mut members: Vec<usize> = ds
                    .samples()
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.label == class)
                    .map(|(i, _)| i)
                    .collect();
                members.shuffle(&mut rng);
                let mut rest = members.as_slice();
                for (p, part) in parts.iter_mut().enumerate() {
                    let (take, tail) = rest.split_at(sizes[class.0][p]);
                    part.extend_from_slice(take);
                    rest = tail;
                }
            }
            const NAMES: [&str; 3] = ["train", "val", "test"];
            for (p, part) in parts.iter().enumerate() {
                if fracs[p] > 0.0 && part.is_empty() {
                    return Err(Error::Split(format!(
                        "{} fraction {} leaves the partition empty",
                        NAMES[p], fracs[p]
                    )));
                }
            }
        }
        SplitSpec::ByUsers { train, val, test } => {
            let groups: [HashSet<&str>; 3] =
                [train, val, test].map(|g| g.iter().map(String::as_str).collect());
            for a in 0..3 {
                for b in (a + 1)..3 {
                    if let Some(u) = groups[a].intersection(&groups[b]).next() {
                        return Err(Error::Split(format!(
                            "user {u:?} is listed in two partitions"
                        )));
                    }
                }
            }
            for (i, s) in ds.samples().iter().enumerate() {
                if let Some(p) = groups.iter().position(|g| g.contains(s.user_id.as_str())) {
                    parts[p].push(i);
                }
            }
        }
    }
    let [a, b, c] = parts.map(|mut p| {
        p.sort_unstable();
        ds.select(&p)
    });
    Ok((a, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Alphabet, ClassId, FeatureVector, LabeledSample};

    fn dataset(per_class: &[usize], users: usize) -> Dataset {
        let alphabet = Alphabet::new((0..per_class.len()).map(|i| format!("C{i}"))).unwrap();
        let mut samples = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for k in 0..n {
                let id = samples.len() as u64;
                samples.push(
                    LabeledSample::new(id, FeatureVector::zeros(), ClassId(c))
                        .with_provenance(format!("u{}", k % users), "lab"),
                );
            }
        }
        Dataset::new(alphabet, samples).unwrap()
    }

    fn fracs(train: f64, val: f64, test: f64) -> SplitSpec {
        SplitSpec::Fractions { train, val, test }
    }

    #[test]
    fn reference_sizes() {
        let ds = dataset(&[2200; 5], 4);
        let (tr, va, te) = split(&ds, &fracs(0.72, 0.18, 0.10), 7).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (7920, 1980, 1100));
    }

    #[test]
    fn stratification_within_one_sample() {
        let counts = [101, 37, 250, 9, 58];
        let ds = dataset(&counts, 3);
        let f = [0.6, 0.25, 0.15];
        let (tr, va, te) = split(&ds, &fracs(f[0], f[1], f[2]), 1).unwrap();
        assert_eq!(tr.len() + va.len() + te.len(), ds.len());
        let targets = apportion(ds.len(), &f);
        assert_eq!(
            [tr.len(), va.len(), te.len()],
            [targets[0], targets[1], targets[2]]
        );
        for (c, &n) in counts.iter().enumerate() {
            for (p, part) in [&tr, &va, &te].iter().enumerate() {
                let got = part.count(ClassId(c)) as f64;
                assert!(
                    (got - f[p] * n as f64).abs() <= 1.0 + 1e-9,
                    "class {c} part {p}"
                );
            }
        }
    }

    #[test]
    fn same_seed_same_partitions() {
        let ds = dataset(&[40, 40, 40], 2);
        let a = split(&ds, &fracs(0.5, 0.3, 0.2), 42).unwrap();
        let b = split(&ds, &fracs(0.5, 0.3, 0.2), 42).unwrap();
        assert_eq!(a, b);
        let c = split(&ds, &fracs(0.5, 0.3, 0.2), 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn bad_fractions() {
        let ds = dataset(&[10, 10], 1);
        assert!(split(&ds, &fracs(0.5, 0.5, 0.5), 0).is_err());
        assert!(split(&ds, &fracs(0.98, 0.01, 0.01), 0).is_err());
        let (_, _, te) = split(&ds, &fracs(0.5, 0.5, 0.0), 0).unwrap();
        assert!(te.is_empty());
    }

    #[test]
    fn user_split_keeps_users_whole() {
        let ds = dataset(&[30, 30], 5);
        let spec = SplitSpec::ByUsers {
            train: vec!["u0".into(), "u1".into()],
            val: vec!["u2".into()],
            test: vec!["u3".into(), "u4".into()],
        };
        let (tr, va, te) = split(&ds, &spec, 0).unwrap();
        let users = |d: &Dataset| {
            d.samples()
                .iter()
                .map(|s| s.user_id.clone())
                .collect::<HashSet<_>>()
        };
        let (ut, uv, ue) = (users(&tr), users(&va), users(&te));
        assert!(ut.is_disjoint(&uv) && ut.is_disjoint(&ue) && uv.is_disjoint(&ue));
        assert_eq!(tr.len() + va.len() + te.len(), ds.len());

        let overlap = SplitSpec::ByUsers {
            train: vec!["u0".into()],
            val: vec!["u0".into()],
            test: vec![],
        };
        assert!(split(&ds, &overlap, 0).is_err());
    }
}
