//! Synthetic gesture features: independent normal draws around per-class
//! means, shifted per user (optionally per user and class) and per location.
//!
//! Text form, one `key = value` per line (`#` comments allowed):
//!
//! ```text
//! classes = SwipeLeft,SwipeRight,SwipeUp,SwipeDown,Push
//! mean.SwipeLeft = 0.5, 0.0, -0.6, 0.0, 1.0
//! spread = 0.05, 0.05, 0.05, 0.05, 0.05
//! spread.Push = 0.1, 0.1, 0.1, 0.1, 0.1      # optional per-class override
//! users = u1,u2
//! offset.u2 = 0, 0, 0, 0.1, 0                  # optional, all classes
//! offset.u2.SwipeUp = 0, 0, 0, 0.8, 0          # optional, one class
//! locations = lab,office
//! location_jitter = 0.01
//! samples_per_class_user = 100
//! ```

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::split_kv;
use crate::error::{Error, Result};
use crate::types::{Alphabet, ClassId, Dataset, FeatureVector, LabeledSample, N_FEATURES};

#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub name: String,
    pub offset: [f64; N_FEATURES],
    pub class_offsets: Vec<(String, [f64; N_FEATURES])>,
}

impl UserSpec {
    pub fn new(name: impl Into<String>) -> Self {
        UserSpec {
            name: name.into(),
            offset: [0.0; N_FEATURES],
            class_offsets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: Vec<String>,
    pub means: Vec<[f64; N_FEATURES]>,
    /// Per-class, per-feature standard deviations.
    pub spreads: Vec<[f64; N_FEATURES]>,
    pub users: Vec<UserSpec>,
    pub locations: Vec<String>,
    pub location_jitter: f64,
    pub samples_per_class_user: usize,
}

fn synth_err(msg: impl Into<String>) -> Error {
    Error::Synth(msg.into())
}

fn parse_vector(key: &str, value: &str) -> Result<[f64; N_FEATURES]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != N_FEATURES {
        return Err(synth_err(format!(
            "{key}: expected {N_FEATURES} values, got {}",
            parts.len()
        )));
    }
    let mut out = [0.0; N_FEATURES];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| synth_err(format!("{key}: cannot parse {p:?}")))?;
    }
    Ok(out)
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl SynthSpec {
    pub fn n_rows(&self) -> usize {
        self.classes.len() * self.users.len() * self.samples_per_class_user
    }

    pub fn validate(&self) -> Result<()> {
        Alphabet::new(self.classes.iter().cloned())?;
        if self.means.len() != self.classes.len() || self.spreads.len() != self.classes.len() {
            return Err(synth_err("need one mean and one spread vector per class"));
        }
        for (c, spread) in self.classes.iter().zip(&self.spreads) {
            if spread.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(synth_err(format!(
                    "spread of {c} must be positive: {spread:?}"
                )));
            }
        }
        if self.means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(synth_err("means must be finite"));
        }
        if self.users.is_empty() {
            return Err(synth_err("no users"));
        }
        let mut names = HashSet::new();
        for u in &self.users {
            if !names.insert(u.name.as_str()) {
                return Err(synth_err(format!("duplicate user {:?}", u.name)));
            }
            for (c, _) in &u.class_offsets {
                if !self.classes.contains(c) {
                    return Err(synth_err(format!("offset for unknown class {c:?}")));
                }
            }
        }
        if self.locations.is_empty() {
            return Err(synth_err("no locations"));
        }
        if !(self.location_jitter >= 0.0 && self.location_jitter.is_finite()) {
            return Err(synth_err("location_jitter must be non-negative"));
        }
        if self.samples_per_class_user == 0 {
            return Err(synth_err("samples_per_class_user must be at least 1"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<SynthSpec> {
        let mut classes = None;
        let mut shared_spread = None;
        let mut means = Vec::new();
        let mut spreads = Vec::new();
        let mut users: Option<Vec<String>> = None;
        let mut offsets = Vec::new();
        let mut class_offsets = Vec::new();
        let mut locations = None;
        let mut jitter = 0.0;
        let mut per = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_kv(line)
                .ok_or_else(|| synth_err(format!("line {}: expected `key = value`", i + 1)))?;
            let bad_number = || synth_err(format!("{key}: cannot parse {value:?}"));
            match key.split('.').collect::<Vec<_>>().as_slice() {
                ["classes"] => classes = Some(parse_list(value)),
                ["users"] => users = Some(parse_list(value)),
                ["locations"] => locations = Some(parse_list(value)),
                ["spread"] => shared_spread = Some(parse_vector(key, value)?),
                ["location_jitter"] => jitter = value.parse().map_err(|_| bad_number())?,
                ["samples_per_class_user"] => per = Some(value.parse().map_err(|_| bad_number())?),
                ["mean", class] => means.push((class.to_string(), parse_vector(key, value)?)),
                ["spread", class] => spreads.push((class.to_string(), parse_vector(key, value)?)),
                ["offset", user] => offsets.push((user.to_string(), parse_vector(key, value)?)),
                ["offset", user, class] => class_offsets.push((
                    user.to_string(),
                    class.to_string(),
                    parse_vector(key, value)?,
                )),
                _ => return Err(synth_err(format!("line {}: unknown key {key:?}", i + 1))),
            }
        }
        let classes = classes.ok_or_else(|| synth_err("missing `classes`"))?;
        let users = users.ok_or_else(|| synth_err("missing `users`"))?;
        let per_class = |c: &String,
                         list: &[(String, [f64; N_FEATURES])],
                         fallback: Option<[f64; N_FEATURES]>,
                         what: &str| {
            list.iter()
                .rev()
                .find(|(k, _)| k == c)
                .map(|(_, v)| *v)
                .or(fallback)
                .ok_or_else(|| synth_err(format!("missing {what} for class {c}")))
        };
        for (name, _) in means.iter().chain(&spreads) {
            if !classes.contains(name) {
                return Err(synth_err(format!("unknown class {name:?}")));
            }
        }
        let spec = SynthSpec {
            means: classes
                .iter()
                .map(|c| per_class(c, &means, None, "mean"))
                .collect::<Result<_>>()?,
            spreads: classes
                .iter()
                .map(|c| per_class(c, &spreads, shared_spread, "spread"))
                .collect::<Result<_>>()?,
            users: users
                .iter()
                .map(|u| UserSpec {
                    name: u.clone(),
                    offset: offsets
                        .iter()
                        .rev()
                        .find(|(k, _)| k == u)
                        .map_or([0.0; N_FEATURES], |(_, v)| *v),
                    class_offsets: class_offsets
                        .iter()
                        .filter(|(k, _, _)| k == u)
                        .map(|(_, c, v)| (c.clone(), *v))
                        .collect(),
                })
                .collect(),
            classes,
            locations: locations.ok_or_else(|| synth_err("missing `locations`"))?,
            location_jitter: jitter,
            samples_per_class_user: per
                .ok_or_else(|| synth_err("missing `samples_per_class_user`"))?,
        };
        for (u, _) in &offsets {
            if !users.contains(u) {
                return Err(synth_err(format!("offset for unknown user {u:?}")));
            }
        }
        for (u, _, _) in &class_offsets {
            if !users.contains(u) {
                return Err(synth_err(format!("offset for unknown user {u:?}")));
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws `samples_per_class_user` samples for every (class, user) pair, in
/// class-major, then user, then draw order. Locations rotate within each
/// pair. Sample ids are 0..n in that order.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let alphabet = Alphabet::new(spec.classes.iter().cloned())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, spec.location_jitter).map_err(|e| synth_err(e.to_string()))?;
    let location_offsets: Vec<[f64; N_FEATURES]> = spec
        .locations
        .iter()
        .map(|_| std::array::from_fn(|_| jitter.sample(&mut rng)))
        .collect();
    let mut samples = Vec::with_capacity(spec.n_rows());
    for (c, class) in spec.classes.iter().enumerate() {
        let noise: Vec<Normal<f64>> = spec.spreads[c]
            .iter()
            .map(|&s| Normal::new(0.0, s).expect("validated spread"))
            .collect();
        for user in &spec.users {
            let mut centre = spec.means[c];
            for (k, v) in centre.iter_mut().enumerate() {
                *v += user.offset[k];
                for (oc, off) in &user.class_offsets {
                    if oc == class {
                        *v += off[k];
                    }
                }
            }
            for draw in 0..spec.samples_per_class_user {
                let loc = draw % spec.locations.len();
                let values: [f64; N_FEATURES] = std::array::from_fn(|k| {
                    centre[k] + location_offsets[loc][k] + noise[k].sample(&mut rng)
                });
                let id = samples.len() as u64;
                samples.push(
                    LabeledSample::new(id, FeatureVector::from_array(values)?, ClassId(c))
                        .with_provenance(user.name.clone(), spec.locations[loc].clone()),
                );
            }
        }
    }
    Dataset::new(alphabet, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = "\
classes = A, B
mean.A = 0, 0, 0, 0, 0
mean.B = 1, 1, 1, 1, 1
spread = 0.1, 0.1, 0.1, 0.1, 0.1
users = u1, u2
offset.u2 = 0, 0, 5, 0, 0
offset.u2.B = 0, 0, 0, 7, 0
locations = lab, office, car
location_jitter = 0.0
samples_per_class_user = 4
";

    #[test]
    fn parse_and_generate() {
        let spec = SynthSpec::parse(SPEC).unwrap();
        assert_eq!(spec.n_rows(), 16);
        let ds = synthesize(&spec, 3).unwrap();
        assert_eq!(ds.len(), 16);
        assert_eq!(ds.class_counts(), &[8, 8]);
        let u2b: Vec<_> = ds
            .samples()
            .iter()
            .filter(|s| s.user_id == "u2" && s.label == ClassId(1))
            .collect();
        assert_eq!(u2b.len(), 4);
        for s in u2b {
            assert!((s.features.azimuth() - 6.0).abs() < 1.0);
            assert!((s.features.elevation() - 8.0).abs() < 1.0);
        }
        let locs: Vec<&str> = ds.samples()[..4]
            .iter()
            .map(|s| s.location_id.as_str())
            .collect();
        assert_eq!(locs, ["lab", "office", "car", "lab"]);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec::parse(SPEC).unwrap();
        assert_eq!(synthesize(&spec, 9).unwrap(), synthesize(&spec, 9).unwrap());
        assert_ne!(
            synthesize(&spec, 9).unwrap(),
            synthesize(&spec, 10).unwrap()
        );
    }

    #[test]
    fn zero_offsets_make_users_identically_distributed() {
        let text = SPEC
            .replace("offset.u2 = 0, 0, 5, 0, 0\n", "")
            .replace("offset.u2.B = 0, 0, 0, 7, 0\n", "");
        let spec = SynthSpec::parse(&text).unwrap();
        assert!(spec
            .users
            .iter()
            .all(|u| u.offset == [0.0; 5] && u.class_offsets.is_empty()));
    }

    #[test]
    fn invalid_specs() {
        assert!(SynthSpec::parse(&SPEC.replace("spread = 0.1", "spread = 0.0")).is_err());
        assert!(SynthSpec::parse(&SPEC.replace("spread = 0.1", "spread = -1")).is_err());
        assert!(SynthSpec::parse(&SPEC.replace("mean.B", "mean.Q")).is_err());
        assert!(SynthSpec::parse(&SPEC.replace("classes", "klasses")).is_err());
        assert!(SynthSpec::parse(&SPEC.replace("= 4", "= 0")).is_err());
        assert!(
            SynthSpec::parse(&SPEC.replace("mean.B = 1, 1, 1, 1, 1", "mean.B = 1, 1")).is_err()
        );
    }
}
