// SPDX-License-Identifier: Apache-2.0

//! Plain per-sample SGD for the one-hidden-layer network. Single-threaded
//! and fully determined by the config seed.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{accuracy, Dataset, Split};
use crate::model::{MlpModel, Neuron};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Softmax followed by cross-entropy.
    CrossEntropy,
    /// Squared error against one-hot targets on the raw outputs.
    MeanSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 5,
            epochs: 200,
            learning_rate: 0.05,
            seed: 0,
            loss: Loss::CrossEntropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub train_accuracy: f64,
    /// Mean loss of the last epoch; `None` when no epoch ran.
    pub final_loss: Option<f64>,
}

fn init_layer(count: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Vec<Neuron> {
    // He-uniform
    let a = libm::sqrt(6.0 / fan_in as f64);
    (0..count)
        .map(|_| Neuron::new((0..fan_in).map(|_| rng.random_range(-a..a)).collect(), 0.0))
        .collect()
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.hidden == 0 {
        return Err(Error::InvalidConfig("hidden width must be at least 1".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::InvalidConfig("learning rate must be positive".into()));
    }
    let train_idx = dataset.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::EmptySplit);
    }
    let n_in = dataset.n_features();
    let n_out = dataset.n_classes().max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel {
        n_inputs: n_in,
        hidden: init_layer(config.hidden, n_in, &mut rng),
        outputs: init_layer(n_out, config.hidden, &mut rng),
    };

    let samples: Vec<(Vec<f64>, usize)> = train_idx
        .iter()
        .map(|&i| (dataset.normalized(i), dataset.label(i)))
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut final_loss = None;
    let lr = config.learning_rate;

    let mut hidden_pre = vec![0.0; config.hidden];
    let mut hidden_act = vec![0.0; config.hidden];
    let mut out = vec![0.0; n_out];
    let mut d_out = vec![0.0; n_out];
    let mut d_hidden = vec![0.0; config.hidden];

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &s in &order {
            let (x, label) = (&samples[s].0, samples[s].1);
            for (h, n) in model.hidden.iter().enumerate() {
                hidden_pre[h] = n.weights.iter().zip(x).fold(n.bias, |a, (w, v)| a + w * v);
                hidden_act[h] = hidden_pre[h].max(0.0);
            }
            for (o, n) in model.outputs.iter().enumerate() {
                out[o] = n.weights.iter().zip(&hidden_act).fold(n.bias, |a, (w, v)| a + w * v);
            }
            total += match config.loss {
                Loss::CrossEntropy => {
                    let m = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = out.iter().map(|v| libm::exp(v - m)).sum();
                    for (o, d) in d_out.iter_mut().enumerate() {
                        let p = libm::exp(out[o] - m) / z;
                        *d = p - if o == label { 1.0 } else { 0.0 };
                    }
                    -(out[label] - m - libm::log(z))
                }
                Loss::MeanSquared => {
                    let mut l = 0.0;
                    for (o, d) in d_out.iter_mut().enumerate() {
                        let e = out[o] - if o == label { 1.0 } else { 0.0 };
                        *d = 2.0 * e / n_out as f64;
                        l += e * e;
                    }
                    l / n_out as f64
                }
            };
            for (h, d) in d_hidden.iter_mut().enumerate() {
                *d = if hidden_pre[h] > 0.0 {
                    model.outputs.iter().zip(&d_out).map(|(n, g)| n.weights[h] * g).sum()
                } else {
                    0.0
                };
            }
            for (n, g) in model.outputs.iter_mut().zip(&d_out) {
                for (w, a) in n.weights.iter_mut().zip(&hidden_act) {
                    *w -= lr * g * a;
                }
                n.bias -= lr * g;
            }
            for (n, g) in model.hidden.iter_mut().zip(&d_hidden) {
                for (w, v) in n.weights.iter_mut().zip(x) {
                    *w -= lr * g * v;
                }
                n.bias -= lr * g;
            }
        }
        let loss = total / samples.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        final_loss = Some(loss);
    }

    model.validate()?;
    let train_accuracy = accuracy(dataset, Split::Train, |i| {
        Ok(model.infer(&dataset.normalized(i))?.class)
    })?;
    Ok(TrainOutcome {
        model,
        train_accuracy,
        final_loss,
    })
}
