// SPDX-License-Identifier: Apache-2.0

//! Single-cycle neuron approximation.
//!
//! An approximated neuron keeps only its two most important inputs (highest
//! average expected product `E[x_i] * 2^p_i`), samples one bit of each and
//! adds the two bits in the shared leading-1 column `L`:
//!
//! ```text
//! value = s1 * bit(x_i1, b1) * 2^L + s2 * bit(x_i2, b2) * 2^L
//! ```
//!
//! with `L = floor(log2 max score)` and `b_k = clamp(L - p_k, 0, bits - 1)`.
//! There is no bias and no accumulator; the qReLU (hidden layer) or output
//! shift still applies so the value lines up with exact neighbours.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::model::argmax;
use crate::quant::{qrelu, Layer, QuantizedModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeuronId {
    pub layer: Layer,
    pub index: usize,
}

impl NeuronId {
    pub fn hidden(index: usize) -> Self {
        Self {
            layer: Layer::Hidden,
            index,
        }
    }

    pub fn output(index: usize) -> Self {
        Self {
            layer: Layer::Output,
            index,
        }
    }

    /// Position in the hidden-then-output neuron order.
    pub fn global(&self, n_hidden: usize) -> usize {
        match self.layer {
            Layer::Hidden => self.index,
            Layer::Output => n_hidden + self.index,
        }
    }

    pub fn from_global(global: usize, n_hidden: usize) -> Self {
        if global < n_hidden {
            Self::hidden(global)
        } else {
            Self::output(global - n_hidden)
        }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Layer::Hidden => write!(f, "hidden[{}]", self.index),
            Layer::Output => write!(f, "output[{}]", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronApproxPlan {
    pub id: NeuronId,
    /// Most important input.
    pub i1: usize,
    /// Second most important input.
    pub i2: usize,
    /// Leading-1 column in accumulator units.
    pub leading_one: u32,
    pub b1: u32,
    pub b2: u32,
    pub s1_negative: bool,
    pub s2_negative: bool,
}

fn signed_bit(code: u8, bit: u32, negative: bool) -> i64 {
    let b = ((code >> bit) & 1) as i64;
    if negative {
        -b
    } else {
        b
    }
}

impl NeuronApproxPlan {
    /// The important input that arrives first in the input sequence, with
    /// its bit position and sign.
    pub fn first(&self) -> (usize, u32, bool) {
        if self.i1 < self.i2 {
            (self.i1, self.b1, self.s1_negative)
        } else {
            (self.i2, self.b2, self.s2_negative)
        }
    }

    pub fn second(&self) -> (usize, u32, bool) {
        if self.i1 < self.i2 {
            (self.i2, self.b2, self.s2_negative)
        } else {
            (self.i1, self.b1, self.s1_negative)
        }
    }

    /// `s1*b1 + s2*b2` before the realignment to column `L`; in `-2..=2`.
    pub fn bit_sum(&self, inputs: &[u8]) -> i64 {
        signed_bit(inputs[self.i1], self.b1, self.s1_negative)
            + signed_bit(inputs[self.i2], self.b2, self.s2_negative)
    }

    pub fn eval(&self, inputs: &[u8]) -> i64 {
        self.bit_sum(inputs) << self.leading_one
    }

    pub fn validate(&self, fan_in: usize, input_bits: u32) -> Result<()> {
        if self.i1 == self.i2 || self.i1 >= fan_in || self.i2 >= fan_in {
            return Err(Error::PlanMismatch(format!(
                "{}: important inputs ({}, {}) invalid for fan-in {fan_in}",
                self.id, self.i1, self.i2
            )));
        }
        if self.b1 >= input_bits || self.b2 >= input_bits {
            return Err(Error::PlanMismatch(format!(
                "{}: bit index out of range for {input_bits}-bit inputs",
                self.id
            )));
        }
        if self.leading_one > 40 {
            return Err(Error::PlanMismatch(format!(
                "{}: leading-1 column {} too large",
                self.id, self.leading_one
            )));
        }
        Ok(())
    }
}

/// Evaluate a single-cycle neuron on its layer inputs.
pub fn approx_neuron_eval(plan: &NeuronApproxPlan, inputs: &[u8]) -> i64 {
    plan.eval(inputs)
}

/// Mean code seen by every input of each layer under exact semantics.
/// `samples` are circuit-input rows (kept features only).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMeans {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn layer_means(qmodel: &QuantizedModel, samples: &[Vec<u8>]) -> Result<LayerMeans> {
    if samples.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut hidden = alloc::vec![0u64; qmodel.n_inputs()];
    let mut output = alloc::vec![0u64; qmodel.n_hidden()];
    for s in samples {
        let r = qmodel.infer(s)?;
        for (sum, &x) in hidden.iter_mut().zip(s) {
            *sum += x as u64;
        }
        for (sum, &c) in output.iter_mut().zip(&r.hidden_codes) {
            *sum += c as u64;
        }
    }
    let n = samples.len() as f64;
    Ok(LayerMeans {
        hidden: hidden.into_iter().map(|s| s as f64 / n).collect(),
        output: output.into_iter().map(|s| s as f64 / n).collect(),
    })
}

fn scores_from_means(qmodel: &QuantizedModel, means: &LayerMeans, neuron: NeuronId) -> Result<Vec<f64>> {
    let layer = qmodel.layer(neuron.layer);
    let n = layer.get(neuron.index).ok_or_else(|| {
        Error::PlanMismatch(format!("{neuron} does not exist in the model"))
    })?;
    let m = match neuron.layer {
        Layer::Hidden => &means.hidden,
        Layer::Output => &means.output,
    };
    Ok(n.weights
        .iter()
        .zip(m)
        .map(|(w, &mean)| {
            if w.zero {
                0.0
            } else {
                mean * libm::exp2(w.shift(&qmodel.spec) as f64)
            }
        })
        .collect())
}

/// `E[x_i] * 2^p_i` per input of `neuron`, in accumulator units.
pub fn avg_expected_products(
    qmodel: &QuantizedModel,
    samples: &[Vec<u8>],
    neuron: NeuronId,
) -> Result<Vec<f64>> {
    scores_from_means(qmodel, &layer_means(qmodel, samples)?, neuron)
}

/// Build the plan for `neuron` from its per-input scores.
pub fn plan_from_scores(
    qmodel: &QuantizedModel,
    neuron: NeuronId,
    scores: &[f64],
) -> Result<NeuronApproxPlan> {
    let weights = &qmodel.layer(neuron.layer)[neuron.index].weights;
    let mut ranked: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > 0.0).collect();
    if ranked.len() < 2 {
        return Err(Error::Ineligible(neuron));
    }
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (i1, i2) = (ranked[0], ranked[1]);
    let top = scores[i1].max(scores[i2]);
    let leading_one = libm::floor(libm::log2(top)).max(0.0) as u32;
    let bits = qmodel.spec.layer_input_bits(neuron.layer);
    let column = |i: usize| -> u32 {
        let p = weights[i].shift(&qmodel.spec) as i64;
        (leading_one as i64 - p).clamp(0, bits as i64 - 1) as u32
    };
    Ok(NeuronApproxPlan {
        id: neuron,
        i1,
        i2,
        leading_one,
        b1: column(i1),
        b2: column(i2),
        s1_negative: weights[i1].negative,
        s2_negative: weights[i2].negative,
    })
}

pub fn plan_single_cycle(
    qmodel: &QuantizedModel,
    samples: &[Vec<u8>],
    neuron: NeuronId,
) -> Result<NeuronApproxPlan> {
    let scores = avg_expected_products(qmodel, samples, neuron)?;
    plan_from_scores(qmodel, neuron, &scores)
}

/// Plans for every neuron (hidden then output); `None` marks neurons that
/// must stay multi-cycle.
pub fn plan_candidates(
    qmodel: &QuantizedModel,
    samples: &[Vec<u8>],
) -> Result<Vec<Option<NeuronApproxPlan>>> {
    let means = layer_means(qmodel, samples)?;
    let ids = (0..qmodel.n_hidden())
        .map(NeuronId::hidden)
        .chain((0..qmodel.n_classes()).map(NeuronId::output));
    ids.map(|id| {
        let scores = scores_from_means(qmodel, &means, id)?;
        match plan_from_scores(qmodel, id, &scores) {
            Ok(p) => Ok(Some(p)),
            Err(Error::Ineligible(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPlan {
    /// One flag per neuron, hidden then output; `true` = single-cycle.
    pub mask: Vec<bool>,
    /// Plans of the flagged neurons, in neuron order.
    pub plans: Vec<NeuronApproxPlan>,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    pub max_drop: f64,
}

impl HybridPlan {
    /// Every neuron multi-cycle.
    pub fn exact(n_neurons: usize) -> Self {
        Self {
            mask: alloc::vec![false; n_neurons],
            plans: Vec::new(),
            accuracy: 0.0,
            baseline_accuracy: 0.0,
            max_drop: 0.0,
        }
    }

    /// Select the flagged plans out of `candidates`. Flagging an ineligible
    /// neuron is an error.
    pub fn from_mask(mask: &[bool], candidates: &[Option<NeuronApproxPlan>]) -> Result<Self> {
        if mask.len() != candidates.len() {
            return Err(Error::DimensionMismatch {
                expected: candidates.len(),
                got: mask.len(),
            });
        }
        let mut plans = Vec::new();
        for (i, (&m, c)) in mask.iter().zip(candidates).enumerate() {
            if m {
                plans.push(c.ok_or_else(|| {
                    Error::PlanMismatch(format!("neuron {i} is not eligible for approximation"))
                })?);
            }
        }
        Ok(Self {
            mask: mask.to_vec(),
            plans,
            ..Self::exact(0)
        })
    }

    pub fn approximated(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Plan of `neuron` when it is single-cycle.
    pub fn plan_for(&self, neuron: NeuronId) -> Option<&NeuronApproxPlan> {
        self.plans.iter().find(|p| p.id == neuron)
    }

    /// Check mask length, plan/mask agreement and plan ranges against `qmodel`.
    pub fn validate(&self, qmodel: &QuantizedModel) -> Result<()> {
        let n_hidden = qmodel.n_hidden();
        if self.mask.len() != qmodel.n_neurons() {
            return Err(Error::PlanMismatch(format!(
                "mask has {} entries, model has {} neurons",
                self.mask.len(),
                qmodel.n_neurons()
            )));
        }
        if self.plans.len() != self.approximated() {
            return Err(Error::PlanMismatch(format!(
                "{} plans for {} approximated neurons",
                self.plans.len(),
                self.approximated()
            )));
        }
        for p in &self.plans {
            let g = p.id.global(n_hidden);
            if g >= self.mask.len() || !self.mask[g] {
                return Err(Error::PlanMismatch(format!("{} has a plan but is not flagged", p.id)));
            }
            if self.plans.iter().filter(|q| q.id == p.id).count() != 1 {
                return Err(Error::PlanMismatch(format!("{} has more than one plan", p.id)));
            }
            p.validate(qmodel.fan_in(p.id.layer), qmodel.spec.layer_input_bits(p.id.layer))?;
        }
        Ok(())
    }
}

/// Per-neuron values of a hybrid forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridInference {
    pub class: usize,
    /// Accumulator (exact) or realigned bit sum (single-cycle), before qReLU.
    pub hidden_values: Vec<i64>,
    pub hidden_codes: Vec<u8>,
    /// Output values after the `t_output` shift; argmax input.
    pub output_values: Vec<i64>,
}

pub fn hybrid_infer(qmodel: &QuantizedModel, plan: &HybridPlan, inputs: &[u8]) -> Result<HybridInference> {
    if plan.mask.len() != qmodel.n_neurons() {
        return Err(Error::DimensionMismatch {
            expected: qmodel.n_neurons(),
            got: plan.mask.len(),
        });
    }
    if inputs.len() != qmodel.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: qmodel.n_inputs(),
            got: inputs.len(),
        });
    }
    let spec = &qmodel.spec;
    let value = |id: NeuronId, layer_inputs: &[u8]| -> Result<i64> {
        if plan.mask[id.global(qmodel.n_hidden())] {
            let p = plan
                .plan_for(id)
                .ok_or_else(|| Error::PlanMismatch(format!("{id} is flagged but has no plan")))?;
            Ok(p.eval(layer_inputs))
        } else {
            Ok(qmodel.layer(id.layer)[id.index].accumulate(layer_inputs, spec))
        }
    };
    let hidden_values = (0..qmodel.n_hidden())
        .map(|i| value(NeuronId::hidden(i), inputs))
        .collect::<Result<Vec<_>>>()?;
    let hidden_codes: Vec<u8> = hidden_values
        .iter()
        .map(|&v| qrelu(v, spec.t_hidden, spec.qrelu_out_bits))
        .collect();
    let output_values = (0..qmodel.n_classes())
        .map(|i| Ok(value(NeuronId::output(i), &hidden_codes)? >> spec.t_output))
        .collect::<Result<Vec<_>>>()?;
    Ok(HybridInference {
        class: argmax(&output_values),
        hidden_values,
        hidden_codes,
        output_values,
    })
}

/// Accuracy of the hybrid network over circuit-input rows.
pub fn hybrid_accuracy(
    qmodel: &QuantizedModel,
    plan: &HybridPlan,
    samples: &[Vec<u8>],
    labels: &[usize],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySplit);
    }
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: labels.len(),
        });
    }
    let mut correct = 0usize;
    for (s, &l) in samples.iter().zip(labels) {
        if hybrid_infer(qmodel, plan, s)?.class == l {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Mask-indexed accuracy with the hidden-layer work cached per sample.
/// Used as the GA fitness; agrees with [`hybrid_accuracy`].
pub struct HybridEvaluator<'a> {
    qmodel: &'a QuantizedModel,
    candidates: &'a [Option<NeuronApproxPlan>],
    labels: &'a [usize],
    hidden_exact: Vec<Vec<i64>>,
    hidden_approx: Vec<Vec<i64>>,
}

impl<'a> HybridEvaluator<'a> {
    pub fn new(
        qmodel: &'a QuantizedModel,
        candidates: &'a [Option<NeuronApproxPlan>],
        samples: &[Vec<u8>],
        labels: &'a [usize],
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySplit);
        }
        if candidates.len() != qmodel.n_neurons() || samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: qmodel.n_neurons(),
                got: candidates.len(),
            });
        }
        let spec = &qmodel.spec;
        let mut hidden_exact = Vec::with_capacity(samples.len());
        let mut hidden_approx = Vec::with_capacity(samples.len());
        for s in samples {
            if s.len() != qmodel.n_inputs() {
                return Err(Error::DimensionMismatch {
                    expected: qmodel.n_inputs(),
                    got: s.len(),
                });
            }
            hidden_exact.push(qmodel.hidden.iter().map(|n| n.accumulate(s, spec)).collect());
            hidden_approx.push(
                candidates[..qmodel.n_hidden()]
                    .iter()
                    .map(|c| c.map_or(0, |p| p.eval(s)))
                    .collect(),
            );
        }
        Ok(Self {
            qmodel,
            candidates,
            labels,
            hidden_exact,
            hidden_approx,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    /// Correctly classified samples under `mask`.
    pub fn correct(&self, mask: &[bool]) -> usize {
        let q = self.qmodel;
        let spec = &q.spec;
        let h = q.n_hidden();
        let mut codes = alloc::vec![0u8; h];
        let mut outs = alloc::vec![0i64; q.n_classes()];
        let mut correct = 0;
        for (s, &label) in self.labels.iter().enumerate() {
            for (j, c) in codes.iter_mut().enumerate() {
                let v = if mask[j] {
                    self.hidden_approx[s][j]
                } else {
                    self.hidden_exact[s][j]
                };
                *c = qrelu(v, spec.t_hidden, spec.qrelu_out_bits);
            }
            for (k, o) in outs.iter_mut().enumerate() {
                let v = match (mask[h + k], &self.candidates[h + k]) {
                    (true, Some(p)) => p.eval(&codes),
                    _ => q.outputs[k].accumulate(&codes, spec),
                };
                *o = v >> spec.t_output;
            }
            if argmax(&outs) == label {
                correct += 1;
            }
        }
        correct
    }

    pub fn accuracy(&self, mask: &[bool]) -> f64 {
        self.correct(mask) as f64 / self.n_samples() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{Pow2Weight, QNeuron, QuantSpec};
    use alloc::vec;

    fn spec() -> QuantSpec {
        QuantSpec { t_hidden: 2, ..QuantSpec::default() }
    }

    /// Weight with hardware shift `p`.
    fn w(neg: bool, p: i32) -> Pow2Weight {
        Pow2Weight::new(neg, p + spec().e_min())
    }

    fn one_neuron_model(weights: Vec<Pow2Weight>) -> QuantizedModel {
        let s = spec();
        let n = weights.len();
        QuantizedModel {
            spec: s,
            kept_input_indices: (0..n).collect(),
            hidden: vec![QNeuron::new(weights, 0, &s)],
            outputs: vec![QNeuron::new(vec![w(false, 0)], 0, &s)],
        }
    }

    #[test]
    fn scores_are_mean_code_times_shift() {
        let m = one_neuron_model(vec![Pow2Weight::ZERO, w(false, 2), w(true, 0)]);
        let samples = vec![vec![15, 6, 2], vec![1, 10, 4]];
        let s = avg_expected_products(&m, &samples, NeuronId::hidden(0)).unwrap();
        assert_eq!(s, vec![0.0, 32.0, 3.0]);
        assert_eq!(
            avg_expected_products(&m, &[], NeuronId::hidden(0)),
            Err(Error::EmptySplit)
        );
    }

    #[test]
    fn plan_from_direct_scores() {
        let m = one_neuron_model(vec![w(false, 3), w(true, 1), w(false, 0)]);
        let p = plan_from_scores(&m, NeuronId::hidden(0), &[32.0, 9.0, 1.0]).unwrap();
        assert_eq!((p.i1, p.i2, p.leading_one), (0, 1, 5));
        // b = clamp(L - p): 5 - 3 = 2, 5 - 1 = 4 -> 3
        assert_eq!((p.b1, p.b2), (2, 3));
        assert_eq!((p.s1_negative, p.s2_negative), (false, true));
    }

    #[test]
    fn bit_columns_from_leading_one() {
        // scores 4 and 2 -> L = 2; p1 = 0 -> b1 = 2, p2 = 1 -> b2 = 1
        let m = one_neuron_model(vec![w(false, 0), w(false, 1)]);
        let p = plan_from_scores(&m, NeuronId::hidden(0), &[4.0, 2.0]).unwrap();
        assert_eq!((p.leading_one, p.b1, p.b2), (2, 2, 1));
    }

    #[test]
    fn equal_scores_pick_lower_index() {
        let m = one_neuron_model(vec![w(false, 0), w(false, 0), w(false, 0)]);
        let p = plan_from_scores(&m, NeuronId::hidden(0), &[1.0, 7.0, 7.0]).unwrap();
        assert_eq!((p.i1, p.i2), (1, 2));
    }

    #[test]
    fn fewer_than_two_scores_is_ineligible() {
        let m = one_neuron_model(vec![w(false, 0), Pow2Weight::ZERO]);
        assert_eq!(
            plan_from_scores(&m, NeuronId::hidden(0), &[3.0, 0.0]),
            Err(Error::Ineligible(NeuronId::hidden(0)))
        );
    }

    fn plan(s1: bool, s2: bool) -> NeuronApproxPlan {
        NeuronApproxPlan {
            id: NeuronId::hidden(0),
            i1: 0,
            i2: 1,
            leading_one: 2,
            b1: 2,
            b2: 1,
            s1_negative: s1,
            s2_negative: s2,
        }
    }

    #[test]
    fn eval_examples() {
        // x_i1 = 5 (bit 2 set), x_i2 = 3 (bit 1 set): 4 + 4 = 8
        assert_eq!(approx_neuron_eval(&plan(false, false), &[5, 3]), 8);
        assert_eq!(approx_neuron_eval(&plan(false, false), &[3, 4]), 0);
        assert_eq!(approx_neuron_eval(&plan(false, true), &[5, 3]), 0);
        assert_eq!(approx_neuron_eval(&plan(true, true), &[5, 3]), -8);
    }

    #[test]
    fn realignment_bounds() {
        for s1 in [false, true] {
            for s2 in [false, true] {
                let p = plan(s1, s2);
                for a in 0..16u8 {
                    for b in 0..16u8 {
                        let v = p.eval(&[a, b]);
                        assert_eq!(v % 4, 0);
                        assert!(v.abs() <= 8);
                    }
                }
            }
        }
    }

    #[test]
    fn first_and_second_follow_arrival_order() {
        let mut p = plan(false, true);
        p.i1 = 3;
        p.i2 = 1;
        assert_eq!(p.first(), (1, 1, true));
        assert_eq!(p.second(), (3, 2, false));
    }

    #[test]
    fn mask_rejects_ineligible_neuron() {
        let c = vec![Some(plan(false, false)), None];
        assert!(HybridPlan::from_mask(&[true, false], &c).is_ok());
        assert!(matches!(
            HybridPlan::from_mask(&[false, true], &c),
            Err(Error::PlanMismatch(_))
        ));
    }
}
