// SPDX-License-Identifier: Apache-2.0

//! Redundant feature pruning.
//!
//! Every input is scored by its mean expected product over the hidden
//! neurons, `mean_n E[x_i] * |w_{n,i}|`, the inputs are sorted by that score,
//! and the shortest prefix of the ranking whose train accuracy meets the
//! threshold is kept. Pruned inputs contribute nothing, exactly as a
//! zero-flagged weight would; the model is not retrained.

use alloc::vec::Vec;

use crate::dataset::accuracy_over;
use crate::quant::QuantizedModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    /// Input positions (into the model's current inputs), most relevant first.
    pub order: Vec<usize>,
    /// Relevance per input position.
    pub relevance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub ranking: FeatureRanking,
    /// Original dataset feature indices that survive, in ranking order.
    pub kept_indices: Vec<usize>,
    pub model: QuantizedModel,
    pub accuracy: f64,
    pub threshold: f64,
    /// `false` when even the full feature set misses the threshold.
    pub threshold_met: bool,
    /// Train accuracy of every evaluated prefix length `1..=k`.
    pub prefix_accuracies: Vec<f64>,
}

/// Mean input code per model input over `samples`.
///
/// `samples` are full-width dataset code rows.
pub fn mean_codes(qmodel: &QuantizedModel, samples: &[&[u8]]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut sums = alloc::vec![0u64; qmodel.n_inputs()];
    for s in samples {
        for (sum, &f) in sums.iter_mut().zip(&qmodel.kept_input_indices) {
            *sum += s[f] as u64;
        }
    }
    Ok(sums.into_iter().map(|s| s as f64 / samples.len() as f64).collect())
}

pub fn feature_relevance(qmodel: &QuantizedModel, samples: &[&[u8]]) -> Result<FeatureRanking> {
    let means = mean_codes(qmodel, samples)?;
    let h = qmodel.n_hidden() as f64;
    let relevance: Vec<f64> = means
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            qmodel
                .hidden
                .iter()
                .map(|n| m * n.weights[i].magnitude())
                .sum::<f64>()
                / h
        })
        .collect();
    let mut order: Vec<usize> = (0..relevance.len()).collect();
    // stable sort keeps the lower index first on ties
    order.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]));
    Ok(FeatureRanking { order, relevance })
}

/// Greedy prefix scan. `samples` are the full-width code rows of the train
/// split and `labels` their classes. `threshold = None` uses the model's own
/// accuracy on those samples.
pub fn prune(
    qmodel: &QuantizedModel,
    samples: &[&[u8]],
    labels: &[usize],
    threshold: Option<f64>,
) -> Result<PruneResult> {
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: labels.len(),
        });
    }
    let idx: Vec<usize> = (0..samples.len()).collect();
    let eval = |m: &QuantizedModel| {
        accuracy_over(&idx, labels, |i| Ok(m.infer(&m.select_inputs(samples[i]))?.class))
    };
    let threshold = match threshold {
        Some(t) => t,
        None => eval(qmodel)?,
    };
    let ranking = feature_relevance(qmodel, samples)?;

    let mut prefix_accuracies = Vec::new();
    for k in 1..=qmodel.n_inputs() {
        let candidate = qmodel.project(&ranking.order[..k])?;
        let acc = eval(&candidate)?;
        prefix_accuracies.push(acc);
        if acc >= threshold {
            return Ok(PruneResult {
                kept_indices: candidate.kept_input_indices.clone(),
                model: candidate,
                ranking,
                accuracy: acc,
                threshold,
                threshold_met: true,
                prefix_accuracies,
            });
        }
    }
    let model = qmodel.project(&ranking.order)?;
    Ok(PruneResult {
        kept_indices: model.kept_input_indices.clone(),
        accuracy: *prefix_accuracies.last().unwrap_or(&0.0),
        model,
        ranking,
        threshold,
        threshold_met: false,
        prefix_accuracies,
    })
}
