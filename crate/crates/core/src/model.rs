// SPDX-License-Identifier: Apache-2.0

//! Float reference network: one ReLU hidden layer and an identity output
//! layer whose argmax is the predicted class.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Neuron {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    fn pre_activation(&self, inputs: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(inputs)
            .fold(self.bias, |acc, (w, x)| acc + w * x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub n_inputs: usize,
    pub hidden: Vec<Neuron>,
    pub outputs: Vec<Neuron>,
}

/// Result of a float forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatInference {
    pub class: usize,
    pub hidden: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl MlpModel {
    pub fn new(n_inputs: usize, hidden: Vec<Neuron>, outputs: Vec<Neuron>) -> Result<Self> {
        let model = Self {
            n_inputs,
            hidden,
            outputs,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 {
            return Err(Error::InvalidModel("model has no inputs".into()));
        }
        if self.hidden.is_empty() {
            return Err(Error::InvalidModel("hidden layer is empty".into()));
        }
        if self.outputs.is_empty() {
            return Err(Error::InvalidModel("output layer is empty".into()));
        }
        let layers = [
            ("hidden", &self.hidden, self.n_inputs),
            ("output", &self.outputs, self.hidden.len()),
        ];
        for (name, layer, fan_in) in layers {
            for (i, n) in layer.iter().enumerate() {
                if n.weights.len() != fan_in {
                    return Err(Error::InvalidModel(format!(
                        "{name} neuron {i} has {} weights, expected {fan_in}",
                        n.weights.len()
                    )));
                }
                if !n.bias.is_finite() || n.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "{name} neuron {i} has a non-finite parameter"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.len()
    }

    pub fn n_classes(&self) -> usize {
        self.outputs.len()
    }

    pub fn infer(&self, sample: &[f64]) -> Result<FloatInference> {
        if sample.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                got: sample.len(),
            });
        }
        let hidden: Vec<f64> = self
            .hidden
            .iter()
            .map(|n| n.pre_activation(sample).max(0.0))
            .collect();
        let outputs: Vec<f64> = self
            .outputs
            .iter()
            .map(|n| n.pre_activation(&hidden))
            .collect();
        Ok(FloatInference {
            class: argmax(&outputs),
            hidden,
            outputs,
        })
    }
}

/// Index of the largest value; ties resolve to the lowest index.
///
/// Panics on an empty slice.
pub fn argmax<T: PartialOrd>(values: &[T]) -> usize {
    assert!(!values.is_empty(), "argmax of an empty slice");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
