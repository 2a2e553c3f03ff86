// SPDX-License-Identifier: Apache-2.0

//! Post-training quantization: unsigned fixed-point inputs, signed
//! power-of-two weights, integer biases on the accumulator grid and the
//! truncating/saturating qReLU.
//!
//! Integer domain of one layer: an input code `x` multiplied by a weight
//! `s * 2^e` is accumulated as `s * (x << p)` with the non-negative shift
//! `p = e - e_min`. One accumulator unit therefore equals
//! `2^e_min * u_in`, where `u_in` is the real value of one input code
//! (`1 / (2^input_bits - 1)` for the hidden layer, `2^T_hidden` hidden
//! accumulator units for the output layer).

use alloc::format;
use alloc::vec::Vec;

use crate::model::{argmax, MlpModel};
use crate::{ceil_log2, Error, Result};

/// Widest accumulator the integer paths accept.
pub const MAX_ACC_WIDTH: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantSpec {
    pub input_bits: u32,
    pub exponent_levels: u32,
    pub e_max: i32,
    /// qReLU truncation of the hidden layer.
    pub t_hidden: u32,
    /// Arithmetic right shift applied to output accumulators before argmax.
    pub t_output: u32,
    pub qrelu_out_bits: u32,
}

impl Default for QuantSpec {
    fn default() -> Self {
        Self {
            input_bits: 4,
            exponent_levels: 8,
            e_max: 0,
            t_hidden: 0,
            t_output: 0,
            qrelu_out_bits: 4,
        }
    }
}

impl QuantSpec {
    pub fn e_min(&self) -> i32 {
        self.e_max - (self.exponent_levels as i32 - 1)
    }

    /// Largest hardware shift, `e_max - e_min`.
    pub fn max_shift(&self) -> u32 {
        self.exponent_levels - 1
    }

    pub fn input_max(&self) -> u32 {
        (1 << self.input_bits) - 1
    }

    pub fn code_max(&self) -> u32 {
        (1 << self.qrelu_out_bits) - 1
    }

    /// Bit width of the codes feeding `layer`.
    pub fn layer_input_bits(&self, layer: Layer) -> u32 {
        match layer {
            Layer::Hidden => self.input_bits,
            Layer::Output => self.qrelu_out_bits,
        }
    }

    /// Signed accumulator width for a layer with `fan_in` inputs. The bias is
    /// counted as one extra term, so `fan_in + 1` terms of at most
    /// `(2^bits - 1) << max_shift` never overflow.
    pub fn acc_width(&self, layer: Layer, fan_in: usize) -> u32 {
        self.layer_input_bits(layer) + self.max_shift() + ceil_log2(fan_in as u64 + 1) + 1
    }

    /// Largest bias magnitude the accumulator reserves room for.
    pub fn bias_limit(&self, layer: Layer) -> i64 {
        (((1i64) << self.layer_input_bits(layer)) - 1) << self.max_shift()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.input_bits) || !(1..=8).contains(&self.qrelu_out_bits) {
            return Err(Error::InvalidConfig(format!(
                "input/qrelu bits must be in 1..=8 (got {}/{})",
                self.input_bits, self.qrelu_out_bits
            )));
        }
        if !(1..=32).contains(&self.exponent_levels) {
            return Err(Error::InvalidConfig(format!(
                "exponent levels must be in 1..=32 (got {})",
                self.exponent_levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Hidden,
    Output,
}

/// A signed power-of-two weight, or an explicit zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pow2Weight {
    pub negative: bool,
    pub exponent: i32,
    pub zero: bool,
}

impl Pow2Weight {
    pub const ZERO: Self = Self {
        negative: false,
        exponent: 0,
        zero: true,
    };

    pub fn new(negative: bool, exponent: i32) -> Self {
        Self {
            negative,
            exponent,
            zero: false,
        }
    }

    /// Left-shift amount used by the hardware, `exponent - e_min`.
    pub fn shift(&self, spec: &QuantSpec) -> u32 {
        (self.exponent - spec.e_min()) as u32
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            let m = libm::exp2(self.exponent as f64);
            if self.negative {
                -m
            } else {
                m
            }
        }
    }

    pub fn magnitude(&self) -> f64 {
        libm::fabs(self.value())
    }

    /// Signed contribution `s * (x << p)`; zero-flagged weights add nothing.
    pub fn product(&self, x: u32, spec: &QuantSpec) -> i64 {
        if self.zero {
            return 0;
        }
        let t = (x as i64) << self.shift(spec);
        if self.negative {
            -t
        } else {
            t
        }
    }
}

/// `round(value * (2^bits - 1))` with the value clamped to `[0, 1]`, halves
/// rounding up.
pub fn quantize_input(value: f64, bits: u32) -> u8 {
    let max = ((1u32 << bits) - 1) as f64;
    let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
    libm::floor(v * max + 0.5) as u8
}

/// Nearest level in the log domain, ties toward the larger exponent.
/// Magnitudes below `2^(e_min - 0.5)` become zero.
pub fn quantize_weight(w: f64, spec: &QuantSpec) -> Pow2Weight {
    let m = libm::fabs(w);
    let e_min = spec.e_min();
    if m.is_nan() || m < libm::exp2(e_min as f64 - 0.5) {
        return Pow2Weight::ZERO;
    }
    let e = libm::floor(libm::log2(m) + 0.5) as i64;
    let e = e.clamp(e_min as i64, spec.e_max as i64) as i32;
    Pow2Weight::new(w < 0.0, e)
}

/// `min(max(acc, 0) >> t, 2^out_bits - 1)`.
pub fn qrelu(acc: i64, t: u32, out_bits: u32) -> u8 {
    let max = (1i64 << out_bits) - 1;
    let v = acc.max(0).checked_shr(t).unwrap_or(0);
    v.min(max) as u8
}

/// Per-neuron common factor of the non-zero weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonShift {
    pub common: u32,
    /// Residual shift per weight, `None` for zero-flagged weights.
    pub residuals: Vec<Option<u32>>,
}

impl CommonShift {
    pub fn max_residual(&self) -> u32 {
        self.residuals.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Factor the smallest shift out of every non-zero weight. An all-zero
/// neuron gets common shift 0 and no residuals.
pub fn extract_common_shift(weights: &[Pow2Weight], spec: &QuantSpec) -> CommonShift {
    let common = weights
        .iter()
        .filter(|w| !w.zero)
        .map(|w| w.shift(spec))
        .min()
        .unwrap_or(0);
    let residuals = weights
        .iter()
        .map(|w| (!w.zero).then(|| w.shift(spec) - common))
        .collect();
    CommonShift { common, residuals }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QNeuron {
    pub weights: Vec<Pow2Weight>,
    /// Bias on the accumulator grid; the accumulator resets to it.
    pub bias: i64,
    pub common_shift: u32,
}

impl QNeuron {
    pub fn new(weights: Vec<Pow2Weight>, bias: i64, spec: &QuantSpec) -> Self {
        let common_shift = extract_common_shift(&weights, spec).common;
        Self {
            weights,
            bias,
            common_shift,
        }
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|w| !w.zero).count()
    }

    /// `bias + sum_i s_i * (x_i << p_i)`.
    pub fn accumulate(&self, inputs: &[u8], spec: &QuantSpec) -> i64 {
        self.weights
            .iter()
            .zip(inputs)
            .fold(self.bias, |acc, (w, &x)| acc + w.product(x as u32, spec))
    }
}

/// How the hidden-layer qReLU truncation is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// `T = W_acc - 1 - qrelu_out_bits`: no positive accumulator can saturate.
    Static,
    /// Smallest `T` whose saturation rate over the calibration samples is at
    /// most `max_saturation`.
    Calibrated { max_saturation: f64 },
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantOptions {
    pub input_bits: u32,
    pub exponent_levels: u32,
    pub e_max: i32,
    pub qrelu_out_bits: u32,
    pub truncation: Truncation,
    pub t_output: u32,
}

impl Default for QuantOptions {
    fn default() -> Self {
        let s = QuantSpec::default();
        Self {
            input_bits: s.input_bits,
            exponent_levels: s.exponent_levels,
            e_max: s.e_max,
            qrelu_out_bits: s.qrelu_out_bits,
            truncation: Truncation::Static,
            t_output: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedModel {
    pub spec: QuantSpec,
    /// Original dataset feature index of every circuit input, in the order
    /// the inputs are presented.
    pub kept_input_indices: Vec<usize>,
    pub hidden: Vec<QNeuron>,
    pub outputs: Vec<QNeuron>,
}

/// Every intermediate of an integer-domain forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedInference {
    pub class: usize,
    pub hidden_acc: Vec<i64>,
    pub hidden_codes: Vec<u8>,
    pub output_acc: Vec<i64>,
    /// Output accumulators after the `t_output` shift; argmax input.
    pub output_values: Vec<i64>,
}

impl QuantizedModel {
    pub fn n_inputs(&self) -> usize {
        self.kept_input_indices.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.len()
    }

    pub fn n_classes(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_neurons(&self) -> usize {
        self.hidden.len() + self.outputs.len()
    }

    pub fn layer(&self, layer: Layer) -> &[QNeuron] {
        match layer {
            Layer::Hidden => &self.hidden,
            Layer::Output => &self.outputs,
        }
    }

    pub fn fan_in(&self, layer: Layer) -> usize {
        match layer {
            Layer::Hidden => self.n_inputs(),
            Layer::Output => self.n_hidden(),
        }
    }

    pub fn acc_width(&self, layer: Layer) -> u32 {
        self.spec.acc_width(layer, self.fan_in(layer))
    }

    /// Width of the signed values the argmax compares.
    pub fn output_value_width(&self) -> u32 {
        self.acc_width(Layer::Output).saturating_sub(self.spec.t_output).max(1)
    }

    pub fn nonzero_weights(&self) -> usize {
        self.hidden
            .iter()
            .chain(&self.outputs)
            .map(QNeuron::nonzero_weights)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.hidden.is_empty() || self.outputs.is_empty() || self.n_inputs() == 0 {
            return Err(Error::InvalidModel("every layer needs at least one neuron".into()));
        }
        let e_min = self.spec.e_min();
        for layer in [Layer::Hidden, Layer::Output] {
            let fan_in = self.fan_in(layer);
            let limit = self.spec.bias_limit(layer);
            let width = self.acc_width(layer);
            if width > MAX_ACC_WIDTH {
                return Err(Error::WidthOverflow(format!(
                    "{layer:?} accumulator needs {width} bits"
                )));
            }
            for (i, n) in self.layer(layer).iter().enumerate() {
                if n.weights.len() != fan_in {
                    return Err(Error::InvalidModel(format!(
                        "{layer:?} neuron {i} has {} weights, expected {fan_in}",
                        n.weights.len()
                    )));
                }
                if n
                    .weights
                    .iter()
                    .any(|w| !w.zero && (w.exponent < e_min || w.exponent > self.spec.e_max))
                {
                    return Err(Error::InvalidModel(format!(
                        "{layer:?} neuron {i} has an exponent outside [{e_min}, {}]",
                        self.spec.e_max
                    )));
                }
                if n.bias.abs() > limit {
                    return Err(Error::InvalidModel(format!(
                        "{layer:?} neuron {i} bias {} exceeds ±{limit}",
                        n.bias
                    )));
                }
                if n.common_shift != extract_common_shift(&n.weights, &self.spec).common {
                    return Err(Error::InvalidModel(format!(
                        "{layer:?} neuron {i} has a stale common shift"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Codes of the kept features, in circuit order, from a full-width sample.
    pub fn select_inputs(&self, full_codes: &[u8]) -> Vec<u8> {
        self.kept_input_indices.iter().map(|&i| full_codes[i]).collect()
    }

    pub fn infer(&self, inputs: &[u8]) -> Result<QuantizedInference> {
        if inputs.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: inputs.len(),
            });
        }
        let spec = &self.spec;
        let hidden_acc: Vec<i64> = self.hidden.iter().map(|n| n.accumulate(inputs, spec)).collect();
        let hidden_codes: Vec<u8> = hidden_acc
            .iter()
            .map(|&a| qrelu(a, spec.t_hidden, spec.qrelu_out_bits))
            .collect();
        let output_acc: Vec<i64> = self
            .outputs
            .iter()
            .map(|n| n.accumulate(&hidden_codes, spec))
            .collect();
        let output_values: Vec<i64> = output_acc.iter().map(|&a| a >> spec.t_output).collect();
        Ok(QuantizedInference {
            class: argmax(&output_values),
            hidden_acc,
            hidden_codes,
            output_acc,
            output_values,
        })
    }

    /// Keep only the inputs at `positions` (indices into the current input
    /// list), in that order. Surviving weights stay attached to their
    /// features; common shifts are recomputed.
    pub fn project(&self, positions: &[usize]) -> Result<QuantizedModel> {
        if let Some(&p) = positions.iter().find(|&&p| p >= self.n_inputs()) {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: p + 1,
            });
        }
        let hidden = self
            .hidden
            .iter()
            .map(|n| {
                let weights = positions.iter().map(|&p| n.weights[p]).collect();
                QNeuron::new(weights, n.bias, &self.spec)
            })
            .collect();
        Ok(QuantizedModel {
            spec: self.spec,
            kept_input_indices: positions.iter().map(|&p| self.kept_input_indices[p]).collect(),
            hidden,
            outputs: self.outputs.clone(),
        })
    }
}

fn quantize_bias(bias: f64, unit: f64, limit: i64) -> i64 {
    let v = libm::round(bias / unit);
    (v.clamp(-(limit as f64), limit as f64)) as i64
}

/// Quantize a float model. `calibration` holds full-width input codes and is
/// only read by [`Truncation::Calibrated`].
pub fn quantize_model(
    model: &MlpModel,
    options: &QuantOptions,
    calibration: &[Vec<u8>],
) -> Result<QuantizedModel> {
    model.validate()?;
    let mut spec = QuantSpec {
        input_bits: options.input_bits,
        exponent_levels: options.exponent_levels,
        e_max: options.e_max,
        t_hidden: 0,
        t_output: options.t_output,
        qrelu_out_bits: options.qrelu_out_bits,
    };
    spec.validate()?;

    let e_min = spec.e_min();
    let hidden_unit = libm::exp2(e_min as f64) / spec.input_max() as f64;
    let hidden_limit = spec.bias_limit(Layer::Hidden);
    let hidden: Vec<QNeuron> = model
        .hidden
        .iter()
        .map(|n| {
            let weights = n.weights.iter().map(|&w| quantize_weight(w, &spec)).collect();
            QNeuron::new(weights, quantize_bias(n.bias, hidden_unit, hidden_limit), &spec)
        })
        .collect();

    let hidden_width = spec.acc_width(Layer::Hidden, model.n_inputs);
    spec.t_hidden = match options.truncation {
        Truncation::Static => hidden_width - 1 - spec.qrelu_out_bits,
        Truncation::Fixed(t) => t,
        Truncation::Calibrated { max_saturation } => {
            calibrate_truncation(&hidden, &spec, calibration, max_saturation, hidden_width)?
        }
    };

    let output_unit = hidden_unit * libm::exp2((e_min + spec.t_hidden as i32) as f64);
    let output_limit = spec.bias_limit(Layer::Output);
    let outputs = model
        .outputs
        .iter()
        .map(|n| {
            let weights = n.weights.iter().map(|&w| quantize_weight(w, &spec)).collect();
            QNeuron::new(weights, quantize_bias(n.bias, output_unit, output_limit), &spec)
        })
        .collect();

    let q = QuantizedModel {
        spec,
        kept_input_indices: (0..model.n_inputs).collect(),
        hidden,
        outputs,
    };
    q.validate()?;
    Ok(q)
}

fn calibrate_truncation(
    hidden: &[QNeuron],
    spec: &QuantSpec,
    calibration: &[Vec<u8>],
    max_saturation: f64,
    width: u32,
) -> Result<u32> {
    if calibration.is_empty() {
        return Err(Error::EmptySplit);
    }
    let accs: Vec<i64> = calibration
        .iter()
        .flat_map(|x| hidden.iter().map(move |n| n.accumulate(x, spec)))
        .collect();
    let code_max = spec.code_max() as i64;
    let total = accs.len() as f64;
    for t in 0..width {
        let saturated = accs
            .iter()
            .filter(|&&a| a.max(0).checked_shr(t).unwrap_or(0) > code_max)
            .count();
        if saturated as f64 / total <= max_saturation {
            return Ok(t);
        }
    }
    Ok(width - 1 - spec.qrelu_out_bits)
}
