//! Stratified train/test splits that keep every session on one side.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raypet_core::{ActivityLabel, Clip, WindowSample};
use serde::{Deserialize, Serialize};

use crate::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Share of each class's samples, rounded up to whole sessions, that
    /// goes to the test side.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.30, seed: 0 }
    }
}

impl SplitSpec {
    pub fn violations(&self) -> Vec<String> {
        if self.test_fraction > 0.0 && self.test_fraction < 1.0 {
            Vec::new()
        } else {
            vec![format!("split.test_fraction must be in (0, 1), got {}", self.test_fraction)]
        }
    }
}

/// One session and how much it weighs in the fraction count.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInfo {
    pub id: String,
    pub label: ActivityLabel,
    pub weight: usize,
}

/// Sessions of the windows in `samples`, weighted by window count.
pub fn sessions_of_samples(samples: &[WindowSample]) -> Result<Vec<SessionInfo>, EvalError> {
    let mut map: BTreeMap<&str, SessionInfo> = BTreeMap::new();
    for s in samples {
        let e = map.entry(&s.session_id).or_insert_with(|| SessionInfo {
            id: s.session_id.clone(),
            label: s.label,
            weight: 0,
        });
        if e.label != s.label {
            return Err(EvalError::Split(format!("session {:?} has windows of two classes", s.session_id)));
        }
        e.weight += 1;
    }
    Ok(map.into_values().collect())
}

/// Sessions of labeled clips, weighted by frame count. Independent of any
/// pipeline setting, so every arm of a comparison gets the same split.
pub fn sessions_of_clips(clips: &[Clip]) -> Result<Vec<SessionInfo>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(clips.len());
    for c in clips {
        let label = c.label.ok_or_else(|| EvalError::Split(format!("clip {:?} has no label", c.session_id)))?;
        if !seen.insert(c.session_id.as_str()) {
            return Err(EvalError::Split(format!("duplicate session {:?}", c.session_id)));
        }
        out.push(SessionInfo { id: c.session_id.clone(), label, weight: c.frames.len() });
    }
    Ok(out)
}

/// Picks the test sessions. Per class, sessions are shuffled from the seed
/// and moved to test until the test weight first reaches the fraction of
/// the class weight; at least one session stays in training. A class with a
/// single session cannot be split without leakage and is an error.
pub fn split_sessions(sessions: &[SessionInfo], spec: &SplitSpec) -> Result<BTreeSet<String>, EvalError> {
    if let Some(v) = spec.violations().into_iter().next() {
        return Err(EvalError::Split(v));
    }
    let mut test = BTreeSet::new();
    for label in ActivityLabel::ALL {
        let mut own: Vec<&SessionInfo> = sessions.iter().filter(|s| s.label == label).collect();
        match own.len() {
            0 => continue,
            1 => {
                return Err(EvalError::Split(format!(
                    "class {label} has a single session ({:?}); need at least two to split without leakage",
                    own[0].id
                )))
            }
            _ => {}
        }
        own.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(label.index() as u64);
        own.shuffle(&mut rng);
        let total: usize = own.iter().map(|s| s.weight).sum();
        let target = spec.test_fraction * total as f64;
        let slack = 1e-9 * total.max(1) as f64;
        let mut taken = 0usize;
        for s in &own[..own.len() - 1] {
            if taken as f64 >= target - slack {
                break;
            }
            taken += s.weight;
            test.insert(s.id.clone());
        }
    }
    Ok(test)
}

/// Sample indices on each side of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub test_sessions: BTreeSet<String>,
}

impl Split {
    /// Partitions `samples` by a fixed set of test sessions.
    pub fn by_sessions(samples: &[WindowSample], test_sessions: &BTreeSet<String>) -> Self {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..samples.len()).partition(|&i| test_sessions.contains(&samples[i].session_id));
        let split = Self { train, test, test_sessions: test_sessions.clone() };
        split.assert_no_leakage(samples);
        split
    }

    pub fn assert_no_leakage(&self, samples: &[WindowSample]) {
        let train: BTreeSet<&str> = self.train.iter().map(|&i| samples[i].session_id.as_str()).collect();
        let leaked = self.test.iter().map(|&i| samples[i].session_id.as_str()).find(|id| train.contains(id));
        assert!(leaked.is_none(), "session {leaked:?} on both sides of the split");
    }

    pub fn train_samples(&self, samples: &[WindowSample]) -> Vec<WindowSample> {
        self.train.iter().map(|&i| samples[i].clone()).collect()
    }

    pub fn test_samples(&self, samples: &[WindowSample]) -> Vec<WindowSample> {
        self.test.iter().map(|&i| samples[i].clone()).collect()
    }
}

/// Stratified session-level split of window samples, weighted by window
/// count.
pub fn split_dataset(samples: &[WindowSample], spec: &SplitSpec) -> Result<Split, EvalError> {
    let test = split_sessions(&sessions_of_samples(samples)?, spec)?;
    Ok(Split::by_sessions(samples, &test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sessions(per_class: usize, weight: usize) -> Vec<SessionInfo> {
        ActivityLabel::ALL
            .iter()
            .flat_map(|&label| {
                (0..per_class).map(move |k| SessionInfo { id: format!("{label}-{k:03}"), label, weight })
            })
            .collect()
    }

    #[test]
    fn ten_equal_sessions_give_three_test_sessions_per_class() {
        for weight in [1, 7, 13, 130] {
            let test = split_sessions(&sessions(10, weight), &SplitSpec { test_fraction: 0.3, seed: 5 }).unwrap();
            for label in ActivityLabel::ALL {
                let n = test.iter().filter(|id| id.starts_with(label.as_str())).count();
                assert_eq!(n, 3, "{label}, weight {weight}");
            }
        }
    }

    #[test]
    fn single_session_class_is_an_error() {
        let err = split_sessions(&sessions(1, 4), &SplitSpec::default()).unwrap_err();
        assert!(err.to_string().contains("single session"), "{err}");
    }

    #[test]
    fn same_seed_same_split_and_seeds_differ() {
        let s = sessions(10, 3);
        let a = split_sessions(&s, &SplitSpec { test_fraction: 0.3, seed: 1 }).unwrap();
        let b = split_sessions(&s, &SplitSpec { test_fraction: 0.3, seed: 1 }).unwrap();
        let c = split_sessions(&s, &SplitSpec { test_fraction: 0.3, seed: 2 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn at_least_one_session_stays_in_training() {
        let test = split_sessions(&sessions(2, 1), &SplitSpec { test_fraction: 0.99, seed: 0 }).unwrap();
        assert_eq!(test.len(), ActivityLabel::COUNT);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        for f in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(split_sessions(&sessions(3, 1), &SplitSpec { test_fraction: f, seed: 0 }).is_err());
        }
    }
}
