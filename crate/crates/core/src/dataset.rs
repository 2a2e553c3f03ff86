// SPDX-License-Identifier: Apache-2.0

//! In-memory tabular dataset with a seeded train/test split and min/max
//! normalization fitted on the train split.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::quant::quantize_input;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
    train: Vec<usize>,
    test: Vec<usize>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        split: SplitConfig,
    ) -> Result<Self> {
        let n = features.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} features, expected {n_features}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite value")));
            }
        }
        if !(split.train_fraction > 0.0 && split.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction {} not in (0, 1)",
                split.train_fraction
            )));
        }
        let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(split.seed));
        let n_train = (libm::round(n as f64 * split.train_fraction) as usize).clamp(1, n - 1);
        let mut train = order[..n_train].to_vec();
        let mut test = order[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();

        let mut min = alloc::vec![f64::INFINITY; n_features];
        let mut max = alloc::vec![f64::NEG_INFINITY; n_features];
        for &i in &train {
            for (j, &v) in features[i].iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }

        Ok(Self {
            feature_names,
            features,
            labels,
            n_classes,
            train,
            test,
            min,
            max,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, sample: usize) -> usize {
        self.labels[sample]
    }

    pub fn raw(&self, sample: usize) -> &[f64] {
        &self.features[sample]
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Features of `sample` mapped into `[0, 1]` with the train-split
    /// min/max. Constant columns map to 0.
    pub fn normalized(&self, sample: usize) -> Vec<f64> {
        self.features[sample]
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.max[j] - self.min[j];
                if span > 0.0 {
                    ((v - self.min[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Unsigned fixed-point input codes for every sample, all features.
    pub fn codes(&self, input_bits: u32) -> Vec<Vec<u8>> {
        (0..self.n_samples())
            .map(|i| {
                self.normalized(i)
                    .into_iter()
                    .map(|v| quantize_input(v, input_bits))
                    .collect()
            })
            .collect()
    }
}

/// Fraction of samples in `split` for which `classify(sample_index)` returns
/// the true label.
pub fn accuracy<F>(dataset: &Dataset, split: Split, classify: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<usize>,
{
    accuracy_over(dataset.indices(split), dataset.labels(), classify)
}

/// [`accuracy`] over an explicit index set.
pub fn accuracy_over<F>(indices: &[usize], labels: &[usize], mut classify: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<usize>,
{
    if indices.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut correct = 0usize;
    for &i in indices {
        if classify(i)? == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn toy(n: usize, seed: u64) -> Dataset {
        let features = (0..n).map(|i| vec![i as f64, 3.0]).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(
            names(2),
            features,
            labels,
            SplitConfig {
                train_fraction: 0.7,
                seed,
            },
        )
        .unwrap()
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let a = toy(20, 9);
        let b = toy(20, 9);
        assert_eq!(a.indices(Split::Train), b.indices(Split::Train));
        assert_eq!(a.indices(Split::Train).len(), 14);
        assert_eq!(a.indices(Split::Test).len(), 6);
        let mut all: Vec<usize> = a
            .indices(Split::Train)
            .iter()
            .chain(a.indices(Split::Test))
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn constant_column_survives() {
        let d = toy(10, 1);
        assert_eq!(d.n_features(), 2);
        assert!(d.indices(Split::Train).iter().all(|&i| d.normalized(i)[1] == 0.0));
    }

    #[test]
    fn train_split_normalizes_into_unit_interval() {
        let d = toy(30, 4);
        for &i in d.indices(Split::Train) {
            for v in d.normalized(i) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // test samples are clamped
        for &i in d.indices(Split::Test) {
            for v in d.normalized(i) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn accuracy_edge_cases() {
        let d = toy(20, 2);
        assert_eq!(accuracy(&d, Split::Train, |i| Ok(d.label(i))).unwrap(), 1.0);
        // balanced 2-class set, constant classifier
        let all: Vec<usize> = (0..20).collect();
        assert_eq!(accuracy_over(&all, d.labels(), |_| Ok(0)).unwrap(), 0.5);
        assert_eq!(accuracy_over(&[], d.labels(), |_| Ok(0)), Err(Error::EmptySplit));
    }

    #[test]
    fn accuracy_matches_brute_force_count() {
        let d = toy(25, 3);
        let classify = |i: usize| (i * 7 + 3) % 3 % 2;
        let idx = d.indices(Split::Test);
        let expected = idx.iter().filter(|&&i| classify(i) == d.label(i)).count() as f64
            / idx.len() as f64;
        assert_eq!(accuracy(&d, Split::Test, |i| Ok(classify(i))).unwrap(), expected);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::new(
            vec!["a".to_string(), "b".to_string()],
            vec![vec![1.0, 2.0], vec![1.0]],
            vec![0, 1],
            SplitConfig::default(),
        );
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
    }
}
