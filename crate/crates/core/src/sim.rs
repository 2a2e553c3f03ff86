// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate, bit-exact model of the hybrid sequential circuit.
//!
//! A single counter drives three back-to-back phases:
//!
//! | cycles            | activity                                                   |
//! |-------------------|------------------------------------------------------------|
//! | `[0, N)`          | input `t` arrives; every hidden neuron consumes it          |
//! | `[N, N+H)`        | hidden code `t-N` is muxed to every output neuron           |
//! | `[N+H, N+H+C)`    | argmax compares output `t-N-H` against the best register    |
//!
//! Multi-cycle neurons hold one accumulator that resets to the bias and adds
//! `±((x << residual_t) << common_shift)` per cycle. Single-cycle neurons
//! hold a 1-bit register for the first important input and a small result
//! register written when the second one arrives. There are no inter-layer
//! shift registers: the hidden-to-output hand-off is a state-indexed mux.

use alloc::format;
use alloc::vec::Vec;

use crate::approx::{HybridPlan, NeuronApproxPlan, NeuronId};
use crate::quant::{extract_common_shift, qrelu, Layer, QuantSpec, QuantizedModel, MAX_ACC_WIDTH};
use crate::{Error, Result};

/// Datapath tables of one multi-cycle neuron, indexed by its input position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiCycleNeuron {
    pub residuals: Vec<u32>,
    pub negative: Vec<bool>,
    pub zero: Vec<bool>,
    pub common_shift: u32,
    pub bias: i64,
}

impl MultiCycleNeuron {
    pub fn max_residual(&self) -> u32 {
        self.residuals
            .iter()
            .zip(&self.zero)
            .filter(|(_, &z)| !z)
            .map(|(&r, _)| r)
            .max()
            .unwrap_or(0)
    }

    /// Contribution of input position `i` carrying code `x`.
    pub fn term(&self, i: usize, x: u8) -> i64 {
        if self.zero[i] {
            return 0;
        }
        let t = ((x as i64) << self.residuals[i]) << self.common_shift;
        if self.negative[i] {
            -t
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeuronDatapath {
    MultiCycle(MultiCycleNeuron),
    SingleCycle(NeuronApproxPlan),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Input,
    Output,
    Argmax,
    Done,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Input => "input",
            Phase::Output => "output",
            Phase::Argmax => "argmax",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitModel {
    pub spec: QuantSpec,
    /// Original feature index of every input, in arrival order.
    pub input_features: Vec<usize>,
    pub hidden: Vec<NeuronDatapath>,
    pub outputs: Vec<NeuronDatapath>,
    pub hidden_acc_width: u32,
    pub output_acc_width: u32,
}

/// Register inventory of a [`SimState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterCensus {
    pub accumulators: usize,
    /// 1-bit capture registers plus result registers of single-cycle neurons.
    pub single_cycle_registers: usize,
    pub argmax_registers: usize,
    pub counters: usize,
}

impl RegisterCensus {
    pub fn total(&self) -> usize {
        self.accumulators + self.single_cycle_registers + self.argmax_registers + self.counters
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeuronRegs {
    Accumulator(i64),
    SingleCycle { first_bit: bool, result: i8 },
}

/// Architectural state between clock edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    /// Index of the cycle about to execute.
    pub cycle: u32,
    pub hidden: Vec<NeuronRegs>,
    pub outputs: Vec<NeuronRegs>,
    pub best_value: i64,
    pub best_index: u32,
}

/// Per-cycle snapshot; `snapshots[0]` is the reset state and `snapshots[t+1]`
/// the state after cycle `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub snapshots: Vec<SimState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub class: usize,
    pub latency_cycles: u32,
    pub hidden_values: Vec<i64>,
    pub hidden_codes: Vec<u8>,
    pub output_values: Vec<i64>,
    pub trace: Option<SimTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchResult {
    pub accuracy: f64,
    pub correct: usize,
    pub samples: usize,
    pub total_cycles: u64,
}

fn datapath(qmodel: &QuantizedModel, layer: Layer, index: usize, plan: &HybridPlan) -> NeuronDatapath {
    let id = NeuronId { layer, index };
    if let Some(p) = plan.plan_for(id) {
        return NeuronDatapath::SingleCycle(*p);
    }
    let n = &qmodel.layer(layer)[index];
    let cs = extract_common_shift(&n.weights, &qmodel.spec);
    NeuronDatapath::MultiCycle(MultiCycleNeuron {
        residuals: cs.residuals.iter().map(|r| r.unwrap_or(0)).collect(),
        negative: n.weights.iter().map(|w| w.negative && !w.zero).collect(),
        zero: n.weights.iter().map(|w| w.zero).collect(),
        common_shift: cs.common,
        bias: n.bias,
    })
}

/// Elaborate the circuit for `qmodel` with the neurons flagged in `plan`
/// made single-cycle.
pub fn build_circuit(qmodel: &QuantizedModel, plan: &HybridPlan) -> Result<CircuitModel> {
    qmodel.validate()?;
    plan.validate(qmodel)?;
    let hidden = (0..qmodel.n_hidden())
        .map(|i| datapath(qmodel, Layer::Hidden, i, plan))
        .collect();
    let outputs = (0..qmodel.n_classes())
        .map(|i| datapath(qmodel, Layer::Output, i, plan))
        .collect();
    let circuit = CircuitModel {
        spec: qmodel.spec,
        input_features: qmodel.kept_input_indices.clone(),
        hidden,
        outputs,
        hidden_acc_width: qmodel.acc_width(Layer::Hidden),
        output_acc_width: qmodel.acc_width(Layer::Output),
    };
    circuit.validate()?;
    Ok(circuit)
}

fn realigned(result: i8, leading_one: u32) -> i64 {
    (result as i64) << leading_one
}

impl CircuitModel {
    pub fn n_inputs(&self) -> usize {
        self.input_features.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.len()
    }

    pub fn n_classes(&self) -> usize {
        self.outputs.len()
    }

    pub fn latency(&self) -> u32 {
        (self.n_inputs() + self.n_hidden() + self.n_classes()) as u32
    }

    /// Width of the argmax comparator and best-value register.
    pub fn output_value_width(&self) -> u32 {
        self.output_acc_width.saturating_sub(self.spec.t_output).max(1)
    }

    pub fn layer(&self, layer: Layer) -> &[NeuronDatapath] {
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
        match layer {
            Layer::Hidden => self.hidden_acc_width,
            Layer::Output => self.output_acc_width,
        }
    }

    pub fn phase(&self, cycle: u32) -> Phase {
        let n = self.n_inputs() as u32;
        let h = self.n_hidden() as u32;
        if cycle < n {
            Phase::Input
        } else if cycle < n + h {
            Phase::Output
        } else if cycle < self.latency() {
            Phase::Argmax
        } else {
            Phase::Done
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs() == 0 || self.hidden.is_empty() || self.outputs.is_empty() {
            return Err(Error::InvalidModel("circuit needs inputs, hidden and output neurons".into()));
        }
        for layer in [Layer::Hidden, Layer::Output] {
            let width = self.acc_width(layer);
            if width > MAX_ACC_WIDTH {
                return Err(Error::WidthOverflow(format!("{layer:?} accumulator of {width} bits")));
            }
            let fan_in = self.fan_in(layer);
            for n in self.layer(layer) {
                match n {
                    NeuronDatapath::MultiCycle(m) => {
                        if m.residuals.len() != fan_in
                            || m.negative.len() != fan_in
                            || m.zero.len() != fan_in
                        {
                            return Err(Error::InvalidModel(format!(
                                "{layer:?} neuron table length differs from fan-in {fan_in}"
                            )));
                        }
                    }
                    NeuronDatapath::SingleCycle(p) => {
                        p.validate(fan_in, self.spec.layer_input_bits(layer))?;
                        if (2i64 << p.leading_one) >= 1i64 << (width - 1) {
                            return Err(Error::WidthOverflow(format!(
                                "{}: leading-1 column {} exceeds the {width}-bit layer width",
                                p.id, p.leading_one
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn register_census(&self) -> RegisterCensus {
        let all = self.hidden.iter().chain(&self.outputs);
        let single = all
            .clone()
            .filter(|n| matches!(n, NeuronDatapath::SingleCycle(_)))
            .count();
        RegisterCensus {
            accumulators: self.hidden.len() + self.outputs.len() - single,
            single_cycle_registers: 2 * single,
            argmax_registers: 2,
            counters: 1,
        }
    }

    fn reset_regs(layer: &[NeuronDatapath]) -> Vec<NeuronRegs> {
        layer
            .iter()
            .map(|n| match n {
                NeuronDatapath::MultiCycle(m) => NeuronRegs::Accumulator(m.bias),
                NeuronDatapath::SingleCycle(_) => NeuronRegs::SingleCycle {
                    first_bit: false,
                    result: 0,
                },
            })
            .collect()
    }

    /// State right after `reset = 1`: accumulators hold their biases.
    pub fn reset(&self) -> SimState {
        SimState {
            cycle: 0,
            hidden: Self::reset_regs(&self.hidden),
            outputs: Self::reset_regs(&self.outputs),
            best_value: -(1i64 << (self.output_value_width() - 1)),
            best_index: 0,
        }
    }

    /// Current value of a neuron: its accumulator, or its realigned result.
    pub fn neuron_value(&self, datapath: &NeuronDatapath, regs: &NeuronRegs) -> i64 {
        match (datapath, regs) {
            (NeuronDatapath::SingleCycle(p), NeuronRegs::SingleCycle { result, .. }) => {
                realigned(*result, p.leading_one)
            }
            (_, NeuronRegs::Accumulator(a)) => *a,
            _ => unreachable!("register kind does not match datapath"),
        }
    }

    pub fn hidden_code(&self, state: &SimState, j: usize) -> u8 {
        let v = self.neuron_value(&self.hidden[j], &state.hidden[j]);
        qrelu(v, self.spec.t_hidden, self.spec.qrelu_out_bits)
    }

    pub fn output_value(&self, state: &SimState, k: usize) -> i64 {
        self.neuron_value(&self.outputs[k], &state.outputs[k]) >> self.spec.t_output
    }

    fn consume(datapaths: &[NeuronDatapath], regs: &mut [NeuronRegs], position: usize, x: u8) {
        for (d, r) in datapaths.iter().zip(regs.iter_mut()) {
            match (d, r) {
                (NeuronDatapath::MultiCycle(m), NeuronRegs::Accumulator(acc)) => {
                    *acc += m.term(position, x);
                }
                (NeuronDatapath::SingleCycle(p), NeuronRegs::SingleCycle { first_bit, result }) => {
                    let (i_first, b_first, neg_first) = p.first();
                    let (i_second, b_second, neg_second) = p.second();
                    if position == i_first {
                        *first_bit = (x >> b_first) & 1 == 1;
                    } else if position == i_second {
                        let a = *first_bit as i8;
                        let b = ((x >> b_second) & 1) as i8;
                        *result = if neg_first { -a } else { a } + if neg_second { -b } else { b };
                    }
                }
                _ => unreachable!("register kind does not match datapath"),
            }
        }
    }

    /// Advance `state` by one clock cycle in place.
    pub fn step_in_place(&self, state: &mut SimState, input: Option<u8>) -> Result<()> {
        let t = state.cycle;
        let n = self.n_inputs() as u32;
        let h = self.n_hidden() as u32;
        match (self.phase(t), input) {
            (Phase::Done, _) => return Err(Error::Finished(t)),
            (Phase::Input, None) => return Err(Error::MissingInput(t)),
            (Phase::Output | Phase::Argmax, Some(_)) => return Err(Error::UnexpectedInput(t)),
            (Phase::Input, Some(x)) => {
                Self::consume(&self.hidden, &mut state.hidden, t as usize, x);
            }
            (Phase::Output, None) => {
                let j = (t - n) as usize;
                let code = self.hidden_code(state, j);
                Self::consume(&self.outputs, &mut state.outputs, j, code);
            }
            (Phase::Argmax, None) => {
                let k = t - n - h;
                let v = self.output_value(state, k as usize);
                if v > state.best_value {
                    state.best_value = v;
                    state.best_index = k;
                }
            }
        }
        state.cycle += 1;
        Ok(())
    }

    /// One clock cycle. `input` must be present exactly during the input phase.
    pub fn step(&self, state: &SimState, input: Option<u8>) -> Result<SimState> {
        let mut next = state.clone();
        self.step_in_place(&mut next, input)?;
        Ok(next)
    }

    /// Drive `state` to completion, feeding `inputs[cycle]` while in the
    /// input phase.
    pub fn run_from(&self, mut state: SimState, inputs: &[u8], trace: Option<&mut Vec<SimState>>) -> Result<SimState> {
        if inputs.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: inputs.len(),
            });
        }
        let mut trace = trace;
        while state.cycle < self.latency() {
            let t = state.cycle as usize;
            let x = (t < inputs.len()).then(|| inputs[t]);
            self.step_in_place(&mut state, x)?;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(state.clone());
            }
        }
        Ok(state)
    }

    fn outcome(&self, state: &SimState, trace: Option<SimTrace>) -> SimOutcome {
        SimOutcome {
            class: state.best_index as usize,
            latency_cycles: state.cycle,
            hidden_values: (0..self.n_hidden())
                .map(|j| self.neuron_value(&self.hidden[j], &state.hidden[j]))
                .collect(),
            hidden_codes: (0..self.n_hidden()).map(|j| self.hidden_code(state, j)).collect(),
            output_values: (0..self.n_classes()).map(|k| self.output_value(state, k)).collect(),
            trace,
        }
    }

    /// Full inference with a per-cycle trace.
    pub fn run_inference(&self, inputs: &[u8]) -> Result<SimOutcome> {
        let reset = self.reset();
        let mut snapshots = alloc::vec![reset.clone()];
        let done = self.run_from(reset, inputs, Some(&mut snapshots))?;
        Ok(self.outcome(&done, Some(SimTrace { snapshots })))
    }

    /// Inference without recording a trace.
    pub fn classify(&self, inputs: &[u8]) -> Result<SimOutcome> {
        let done = self.run_from(self.reset(), inputs, None)?;
        Ok(self.outcome(&done, None))
    }

    /// Accuracy and total cycle count over circuit-input rows.
    pub fn batch_eval(&self, samples: &[Vec<u8>], labels: &[usize]) -> Result<BatchResult> {
        if samples.is_empty() {
            return Err(Error::EmptySplit);
        }
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                got: labels.len(),
            });
        }
        let mut correct = 0;
        for (s, &l) in samples.iter().zip(labels) {
            if self.classify(s)?.class == l {
                correct += 1;
            }
        }
        Ok(BatchResult {
            accuracy: correct as f64 / samples.len() as f64,
            correct,
            samples: samples.len(),
            total_cycles: samples.len() as u64 * self.latency() as u64,
        })
    }
}
