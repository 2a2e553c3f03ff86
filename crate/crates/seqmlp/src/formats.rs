// SPDX-License-Identifier: Apache-2.0

//! JSON artifact formats. Each document type converts losslessly to and
//! from its core counterpart.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use seqmlp_core::approx::{HybridPlan, NeuronApproxPlan, NeuronId};
use seqmlp_core::cost::{BlockKind, Cell, CellCensus, CostReport};
use seqmlp_core::model::{MlpModel, Neuron};
use seqmlp_core::quant::{Layer, Pow2Weight, QNeuron, QuantSpec, QuantizedModel};
use seqmlp_core::sim::{CircuitModel, SimState};

use crate::error::{self, Error, Result};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types always serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    error::write(path, to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = error::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronJson {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub n_inputs: usize,
    pub hidden: Vec<NeuronJson>,
    pub outputs: Vec<NeuronJson>,
}

impl From<&MlpModel> for ModelJson {
    fn from(m: &MlpModel) -> Self {
        let layer = |ns: &[Neuron]| {
            ns.iter()
                .map(|n| NeuronJson {
                    weights: n.weights.clone(),
                    bias: n.bias,
                })
                .collect()
        };
        ModelJson {
            n_inputs: m.n_inputs,
            hidden: layer(&m.hidden),
            outputs: layer(&m.outputs),
        }
    }
}

impl TryFrom<ModelJson> for MlpModel {
    type Error = seqmlp_core::Error;
    fn try_from(m: ModelJson) -> std::result::Result<Self, Self::Error> {
        let layer = |ns: Vec<NeuronJson>| ns.into_iter().map(|n| Neuron::new(n.weights, n.bias)).collect();
        MlpModel::new(m.n_inputs, layer(m.hidden), layer(m.outputs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantSpecJson {
    pub input_bits: u32,
    pub e_min: i32,
    pub e_max: i32,
    #[serde(rename = "T_hidden")]
    pub t_hidden: u32,
    #[serde(rename = "T_output")]
    pub t_output: u32,
    #[serde(default = "default_out_bits")]
    pub qrelu_out_bits: u32,
}

fn default_out_bits() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QNeuronJson {
    /// `1` or `-1` per weight.
    pub signs: Vec<i8>,
    pub exponents: Vec<i32>,
    pub zeros: Vec<bool>,
    pub bias: i64,
    pub common_shift: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedJson {
    pub spec: QuantSpecJson,
    pub hidden: Vec<QNeuronJson>,
    pub outputs: Vec<QNeuronJson>,
    pub kept_input_indices: Vec<usize>,
}

impl From<&QuantizedModel> for QuantizedJson {
    fn from(q: &QuantizedModel) -> Self {
        let layer = |ns: &[QNeuron]| {
            ns.iter()
                .map(|n| QNeuronJson {
                    signs: n.weights.iter().map(|w| if w.negative { -1 } else { 1 }).collect(),
                    exponents: n.weights.iter().map(|w| w.exponent).collect(),
                    zeros: n.weights.iter().map(|w| w.zero).collect(),
                    bias: n.bias,
                    common_shift: n.common_shift,
                })
                .collect()
        };
        QuantizedJson {
            spec: QuantSpecJson {
                input_bits: q.spec.input_bits,
                e_min: q.spec.e_min(),
                e_max: q.spec.e_max,
                t_hidden: q.spec.t_hidden,
                t_output: q.spec.t_output,
                qrelu_out_bits: q.spec.qrelu_out_bits,
            },
            hidden: layer(&q.hidden),
            outputs: layer(&q.outputs),
            kept_input_indices: q.kept_input_indices.clone(),
        }
    }
}

impl TryFrom<QuantizedJson> for QuantizedModel {
    type Error = seqmlp_core::Error;
    fn try_from(j: QuantizedJson) -> std::result::Result<Self, Self::Error> {
        use seqmlp_core::Error as E;
        if j.spec.e_max < j.spec.e_min {
            return Err(E::InvalidModel("e_max below e_min".into()));
        }
        let spec = QuantSpec {
            input_bits: j.spec.input_bits,
            exponent_levels: (j.spec.e_max - j.spec.e_min + 1) as u32,
            e_max: j.spec.e_max,
            t_hidden: j.spec.t_hidden,
            t_output: j.spec.t_output,
            qrelu_out_bits: j.spec.qrelu_out_bits,
        };
        let layer = |ns: Vec<QNeuronJson>| -> std::result::Result<Vec<QNeuron>, E> {
            ns.into_iter()
                .map(|n| {
                    if n.signs.len() != n.exponents.len() || n.zeros.len() != n.exponents.len() {
                        return Err(E::InvalidModel("signs/exponents/zeros lengths differ".into()));
                    }
                    let weights = n
                        .signs
                        .iter()
                        .zip(&n.exponents)
                        .zip(&n.zeros)
                        .map(|((&s, &e), &z)| match (z, s) {
                            (true, _) => Ok(Pow2Weight::ZERO),
                            (false, 1) => Ok(Pow2Weight::new(false, e)),
                            (false, -1) => Ok(Pow2Weight::new(true, e)),
                            _ => Err(E::InvalidModel(format!("sign must be 1 or -1, got {s}"))),
                        })
                        .collect::<std::result::Result<Vec<_>, _>>()?;
                    Ok(QNeuron {
                        weights,
                        bias: n.bias,
                        common_shift: n.common_shift,
                    })
                })
                .collect()
        };
        let q = QuantizedModel {
            spec,
            kept_input_indices: j.kept_input_indices,
            hidden: layer(j.hidden)?,
            outputs: layer(j.outputs)?,
        };
        q.validate()?;
        Ok(q)
    }
}

fn layer_name(l: Layer) -> &'static str {
    match l {
        Layer::Hidden => "hidden",
        Layer::Output => "output",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronPlanJson {
    pub layer: String,
    pub index: usize,
    pub i1: usize,
    pub i2: usize,
    #[serde(rename = "L")]
    pub leading_one: u32,
    pub b1: u32,
    pub b2: u32,
    pub s1: i8,
    pub s2: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub mask: Vec<bool>,
    pub plans: Vec<NeuronPlanJson>,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    pub max_drop: f64,
}

impl From<&HybridPlan> for PlanJson {
    fn from(p: &HybridPlan) -> Self {
        let sign = |n: bool| if n { -1 } else { 1 };
        PlanJson {
            mask: p.mask.clone(),
            plans: p
                .plans
                .iter()
                .map(|q| NeuronPlanJson {
                    layer: layer_name(q.id.layer).into(),
                    index: q.id.index,
                    i1: q.i1,
                    i2: q.i2,
                    leading_one: q.leading_one,
                    b1: q.b1,
                    b2: q.b2,
                    s1: sign(q.s1_negative),
                    s2: sign(q.s2_negative),
                })
                .collect(),
            accuracy: p.accuracy,
            baseline_accuracy: p.baseline_accuracy,
            max_drop: p.max_drop,
        }
    }
}

impl TryFrom<PlanJson> for HybridPlan {
    type Error = seqmlp_core::Error;
    fn try_from(j: PlanJson) -> std::result::Result<Self, Self::Error> {
        use seqmlp_core::Error as E;
        let negative = |s: i8| match s {
            1 => Ok(false),
            -1 => Ok(true),
            _ => Err(E::PlanMismatch(format!("sign must be 1 or -1, got {s}"))),
        };
        let plans = j
            .plans
            .into_iter()
            .map(|p| {
                let layer = match p.layer.as_str() {
                    "hidden" => Layer::Hidden,
                    "output" => Layer::Output,
                    other => return Err(E::PlanMismatch(format!("unknown layer `{other}`"))),
                };
                Ok(NeuronApproxPlan {
                    id: NeuronId { layer, index: p.index },
                    i1: p.i1,
                    i2: p.i2,
                    leading_one: p.leading_one,
                    b1: p.b1,
                    b2: p.b2,
                    s1_negative: negative(p.s1)?,
                    s2_negative: negative(p.s2)?,
                })
            })
            .collect::<std::result::Result<Vec<_>, E>>()?;
        Ok(HybridPlan {
            mask: j.mask,
            plans,
            accuracy: j.accuracy,
            baseline_accuracy: j.baseline_accuracy,
            max_drop: j.max_drop,
        })
    }
}

/// One trace record per snapshot; record 0 is the reset state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: u32,
    /// Phase of the cycle that produced this snapshot, or `reset`.
    pub phase: String,
    /// Hidden then output neuron values.
    pub accumulators: Vec<i64>,
    pub argmax_best: i64,
    pub argmax_index: u32,
}

pub fn trace_record(circuit: &CircuitModel, state: &SimState) -> TraceRecord {
    let phase = match state.cycle {
        0 => "reset",
        c => circuit.phase(c - 1).name(),
    };
    let accumulators = circuit
        .hidden
        .iter()
        .zip(&state.hidden)
        .chain(circuit.outputs.iter().zip(&state.outputs))
        .map(|(d, r)| circuit.neuron_value(d, r))
        .collect();
    TraceRecord {
        cycle: state.cycle,
        phase: phase.into(),
        accumulators,
        argmax_best: state.best_value,
        argmax_index: state.best_index,
    }
}

pub fn trace_jsonl(circuit: &CircuitModel, snapshots: &[SimState]) -> String {
    let mut s = String::new();
    for snap in snapshots {
        s.push_str(&serde_json::to_string(&trace_record(circuit, snap)).expect("trace records serialize"));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellsJson {
    pub dff: u64,
    pub mux2: u64,
    pub full_adder: u64,
    pub inverter: u64,
    pub comparator_bit: u64,
    pub shifter_stage: u64,
}

impl From<CellCensus> for CellsJson {
    fn from(c: CellCensus) -> Self {
        CellsJson {
            dff: c.dff,
            mux2: c.mux2,
            full_adder: c.full_adder,
            inverter: c.inverter,
            comparator_bit: c.comparator_bit,
            shifter_stage: c.shifter_stage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub name: String,
    pub kind: String,
    pub area: f64,
    pub power: f64,
    pub cells: CellsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaPower {
    pub area: f64,
    pub power: f64,
}

/// Area/power grouped by block kind, plus the share of all multiplexers and
/// all registers across blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownJson {
    pub controller: AreaPower,
    pub hidden: AreaPower,
    pub output: AreaPower,
    pub inter_layer_mux: AreaPower,
    pub argmax: AreaPower,
    pub muxes: AreaPower,
    pub registers: AreaPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostJson {
    pub area: f64,
    pub power: f64,
    pub latency_cycles: u32,
    pub clock_period_s: f64,
    pub energy: f64,
    pub cells: CellsJson,
    pub breakdown: BreakdownJson,
    pub blocks: Vec<BlockJson>,
}

impl CostJson {
    pub fn new(r: &CostReport, tech: &seqmlp_core::cost::TechLibrary) -> Self {
        let kind = |k: BlockKind| {
            let f = r.by_kind(k);
            AreaPower { area: f.area, power: f.power }
        };
        let cell = |c: Cell, f: seqmlp_core::cost::CellFigures| AreaPower {
            area: r.cells.count(c) as f64 * f.area,
            power: r.cells.count(c) as f64 * f.power,
        };
        CostJson {
            area: r.area,
            power: r.power,
            latency_cycles: r.latency_cycles,
            clock_period_s: r.clock_period_s,
            energy: r.energy,
            cells: r.cells.into(),
            breakdown: BreakdownJson {
                controller: kind(BlockKind::Controller),
                hidden: kind(BlockKind::Hidden),
                output: kind(BlockKind::Output),
                inter_layer_mux: kind(BlockKind::InterLayerMux),
                argmax: kind(BlockKind::Argmax),
                muxes: cell(Cell::Mux2, tech.mux2),
                registers: cell(Cell::Dff, tech.dff),
            },
            blocks: r
                .blocks
                .iter()
                .map(|b| BlockJson {
                    name: b.name.clone(),
                    kind: b.kind.name().into(),
                    area: b.area,
                    power: b.power,
                    cells: b.census.into(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqmlp_core::approx::plan_candidates;
    use seqmlp_core::sim::build_circuit;
    use seqmlp_core::synth::random_quantized_model;

    fn quantized() -> QuantizedModel {
        let mut q = random_quantized_model(6, 3, 2, QuantSpec { t_hidden: 7, ..QuantSpec::default() }, 4);
        q = q.project(&[4, 0, 2, 1, 5, 3]).unwrap();
        q
    }

    #[test]
    fn model_round_trip() {
        let m = MlpModel::new(
            2,
            vec![Neuron::new(vec![0.1, -1.0 / 3.0], 0.25)],
            vec![Neuron::new(vec![1e-17], -2.5), Neuron::new(vec![3.0], 0.0)],
        )
        .unwrap();
        let text = to_json(&ModelJson::from(&m));
        let back: MlpModel = serde_json::from_str::<ModelJson>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn quantized_round_trip() {
        let q = quantized();
        let j = QuantizedJson::from(&q);
        assert_eq!(j.spec.e_min, -7);
        let text = to_json(&j);
        assert!(text.contains("\"T_hidden\": 7"));
        let back: QuantizedModel = serde_json::from_str::<QuantizedJson>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn stale_common_shift_is_rejected() {
        let mut j = QuantizedJson::from(&quantized());
        j.hidden[0].common_shift += 1;
        assert!(QuantizedModel::try_from(j).is_err());
    }

    #[test]
    fn plan_round_trip() {
        let q = quantized();
        let samples: Vec<Vec<u8>> = (0..20u8).map(|i| (0..6).map(|j| (i + j) % 16).collect()).collect();
        let c = plan_candidates(&q, &samples).unwrap();
        let mask: Vec<bool> = c.iter().map(Option::is_some).collect();
        let mut p = HybridPlan::from_mask(&mask, &c).unwrap();
        p.accuracy = 0.75;
        let text = to_json(&PlanJson::from(&p));
        assert!(text.contains("\"L\""));
        let back: HybridPlan = serde_json::from_str::<PlanJson>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn trace_has_one_record_per_snapshot() {
        let q = quantized();
        let c = build_circuit(&q, &HybridPlan::exact(5)).unwrap();
        let r = c.run_inference(&[1, 2, 3, 4, 5, 6]).unwrap();
        let text = trace_jsonl(&c, &r.trace.unwrap().snapshots);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("{\"cycle\":0,\"phase\":\"reset\",\"accumulators\":["));
        assert!(lines[11].contains("\"phase\":\"argmax\""));
        let last: TraceRecord = serde_json::from_str(lines[11]).unwrap();
        assert_eq!(last.argmax_index as usize, r.class);
    }
}
