// SPDX-License-Identifier: Apache-2.0

//! Cell-census area/power/energy model.
//!
//! Every block is reduced to a [`CellCensus`]; area and power are the census
//! dotted with the per-cell figures of a [`TechLibrary`]. Power is a static
//! per-cell sum. Glue gates (enable ANDs, reset muxing) are not counted.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::approx::NeuronApproxPlan;
use crate::quant::{Layer, QuantizedModel};
use crate::sim::{CircuitModel, MultiCycleNeuron, NeuronDatapath};
use crate::{bits_for, ceil_log2, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellFigures {
    pub area: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechLibrary {
    pub dff: CellFigures,
    pub mux2: CellFigures,
    pub full_adder: CellFigures,
    pub inverter: CellFigures,
    pub comparator_bit: CellFigures,
    pub shifter_stage: CellFigures,
    /// Clock period of the sequential design, seconds.
    pub sequential_clock_s: f64,
    /// Clock period of the combinational baseline, seconds.
    pub combinational_clock_s: f64,
}

impl Default for TechLibrary {
    /// Relative units only: a 2-to-1 mux bit is a quarter of two flip-flops
    /// and flip-flops dominate power.
    fn default() -> Self {
        let c = |area, power| CellFigures { area, power };
        Self {
            dff: c(2.0, 4.0),
            mux2: c(1.0, 1.0),
            full_adder: c(1.5, 1.5),
            inverter: c(0.25, 0.2),
            comparator_bit: c(1.25, 1.2),
            shifter_stage: c(1.0, 1.0),
            sequential_clock_s: 0.08,
            combinational_clock_s: 0.2,
        }
    }
}

impl TechLibrary {
    /// Keys accepted by [`TechLibrary::set`].
    pub const KEYS: [&'static str; 14] = [
        "dff_area",
        "dff_power",
        "mux2_area",
        "mux2_power",
        "full_adder_area",
        "full_adder_power",
        "inverter_area",
        "inverter_power",
        "comparator_bit_area",
        "comparator_bit_power",
        "shifter_stage_area",
        "shifter_stage_power",
        "clock_period_s",
        "combinational_clock_period_s",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "dff_area" => &mut self.dff.area,
            "dff_power" => &mut self.dff.power,
            "mux2_area" => &mut self.mux2.area,
            "mux2_power" => &mut self.mux2.power,
            "full_adder_area" => &mut self.full_adder.area,
            "full_adder_power" => &mut self.full_adder.power,
            "inverter_area" => &mut self.inverter.area,
            "inverter_power" => &mut self.inverter.power,
            "comparator_bit_area" => &mut self.comparator_bit.area,
            "comparator_bit_power" => &mut self.comparator_bit.power,
            "shifter_stage_area" => &mut self.shifter_stage.area,
            "shifter_stage_power" => &mut self.shifter_stage.power,
            "clock_period_s" => &mut self.sequential_clock_s,
            "combinational_clock_period_s" => &mut self.combinational_clock_s,
            _ => return Err(Error::InvalidConfig(format!("unknown tech key `{key}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "dff_area" => self.dff.area,
            "dff_power" => self.dff.power,
            "mux2_area" => self.mux2.area,
            "mux2_power" => self.mux2.power,
            "full_adder_area" => self.full_adder.area,
            "full_adder_power" => self.full_adder.power,
            "inverter_area" => self.inverter.area,
            "inverter_power" => self.inverter.power,
            "comparator_bit_area" => self.comparator_bit.area,
            "comparator_bit_power" => self.comparator_bit.power,
            "shifter_stage_area" => self.shifter_stage.area,
            "shifter_stage_power" => self.shifter_stage.power,
            "clock_period_s" => self.sequential_clock_s,
            "combinational_clock_period_s" => self.combinational_clock_s,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for key in Self::KEYS {
            let v = self.get(key).unwrap_or(0.0);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("tech parameter `{key}` must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn cell(&self, c: Cell) -> CellFigures {
        match c {
            Cell::Dff => self.dff,
            Cell::Mux2 => self.mux2,
            Cell::FullAdder => self.full_adder,
            Cell::Inverter => self.inverter,
            Cell::ComparatorBit => self.comparator_bit,
            Cell::ShifterStage => self.shifter_stage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Dff,
    Mux2,
    FullAdder,
    Inverter,
    ComparatorBit,
    ShifterStage,
}

impl Cell {
    pub const ALL: [Cell; 6] = [
        Cell::Dff,
        Cell::Mux2,
        Cell::FullAdder,
        Cell::Inverter,
        Cell::ComparatorBit,
        Cell::ShifterStage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Cell::Dff => "dff",
            Cell::Mux2 => "mux2",
            Cell::FullAdder => "full_adder",
            Cell::Inverter => "inverter",
            Cell::ComparatorBit => "comparator_bit",
            Cell::ShifterStage => "shifter_stage",
        }
    }
}

/// Bit-level cell counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCensus {
    pub dff: u64,
    pub mux2: u64,
    pub full_adder: u64,
    pub inverter: u64,
    pub comparator_bit: u64,
    pub shifter_stage: u64,
}

impl CellCensus {
    pub fn count(&self, c: Cell) -> u64 {
        match c {
            Cell::Dff => self.dff,
            Cell::Mux2 => self.mux2,
            Cell::FullAdder => self.full_adder,
            Cell::Inverter => self.inverter,
            Cell::ComparatorBit => self.comparator_bit,
            Cell::ShifterStage => self.shifter_stage,
        }
    }

    pub fn area(&self, tech: &TechLibrary) -> f64 {
        Cell::ALL.iter().map(|&c| self.count(c) as f64 * tech.cell(c).area).sum()
    }

    pub fn power(&self, tech: &TechLibrary) -> f64 {
        Cell::ALL.iter().map(|&c| self.count(c) as f64 * tech.cell(c).power).sum()
    }

    /// `true` when every count is ≤ the matching count of `other`.
    pub fn is_subset_of(&self, other: &CellCensus) -> bool {
        Cell::ALL.iter().all(|&c| self.count(c) <= other.count(c))
    }
}

impl Add for CellCensus {
    type Output = CellCensus;
    fn add(self, o: CellCensus) -> CellCensus {
        CellCensus {
            dff: self.dff + o.dff,
            mux2: self.mux2 + o.mux2,
            full_adder: self.full_adder + o.full_adder,
            inverter: self.inverter + o.inverter,
            comparator_bit: self.comparator_bit + o.comparator_bit,
            shifter_stage: self.shifter_stage + o.shifter_stage,
        }
    }
}

impl AddAssign for CellCensus {
    fn add_assign(&mut self, o: CellCensus) {
        *self = *self + o;
    }
}

impl core::iter::Sum for CellCensus {
    fn sum<I: Iterator<Item = CellCensus>>(iter: I) -> CellCensus {
        iter.fold(CellCensus::default(), Add::add)
    }
}

/// Census of an `n`-input, `width`-bit mux tree.
pub fn mux_tree(n_inputs: usize, width: u32) -> CellCensus {
    CellCensus {
        mux2: n_inputs.saturating_sub(1) as u64 * width as u64,
        ..CellCensus::default()
    }
}

pub fn register(width: u32) -> CellCensus {
    CellCensus {
        dff: width as u64,
        ..CellCensus::default()
    }
}

/// Log-stage barrel shifter: `stages` levels of `width` bits.
pub fn barrel_shifter(stages: u32, width: u32) -> CellCensus {
    CellCensus {
        shifter_stage: stages as u64 * width as u64,
        ..CellCensus::default()
    }
}

/// Ripple adder/subtractor: an adder, a conditional inverter and its select.
pub fn add_sub(width: u32) -> CellCensus {
    CellCensus {
        full_adder: width as u64,
        inverter: width as u64,
        mux2: width as u64,
        ..CellCensus::default()
    }
}

pub fn adder(width: u32) -> CellCensus {
    CellCensus {
        full_adder: width as u64,
        ..CellCensus::default()
    }
}

pub fn comparator(width: u32) -> CellCensus {
    CellCensus {
        comparator_bit: width as u64,
        ..CellCensus::default()
    }
}

/// Clamp-to-zero and saturate stages of qReLU on the output code.
pub fn qrelu_cells(out_bits: u32) -> CellCensus {
    mux_tree(2, 2 * out_bits)
}

pub fn mux_cost(n_inputs: usize, bit_width: u32, tech: &TechLibrary) -> CellFigures {
    let c = mux_tree(n_inputs, bit_width);
    CellFigures {
        area: c.area(tech),
        power: c.power(tech),
    }
}

pub fn register_chain_cost(n_entries: usize, bit_width: u32, tech: &TechLibrary) -> CellFigures {
    let c = register(n_entries as u32 * bit_width);
    CellFigures {
        area: c.area(tech),
        power: c.power(tech),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Controller,
    Hidden,
    Output,
    InterLayerMux,
    Argmax,
}

impl BlockKind {
    pub fn name(&self) -> &'static str {
        match self {
            BlockKind::Controller => "controller",
            BlockKind::Hidden => "hidden",
            BlockKind::Output => "output",
            BlockKind::InterLayerMux => "inter_layer_mux",
            BlockKind::Argmax => "argmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCost {
    pub name: String,
    pub kind: BlockKind,
    pub census: CellCensus,
    pub area: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub area: f64,
    pub power: f64,
    pub latency_cycles: u32,
    pub clock_period_s: f64,
    pub energy: f64,
    pub cells: CellCensus,
    pub blocks: Vec<BlockCost>,
}

impl CostReport {
    fn from_blocks(blocks: Vec<(String, BlockKind, CellCensus)>, latency_cycles: u32, clock_period_s: f64, tech: &TechLibrary) -> Self {
        let blocks: Vec<BlockCost> = blocks
            .into_iter()
            .map(|(name, kind, census)| BlockCost {
                name,
                kind,
                area: census.area(tech),
                power: census.power(tech),
                census,
            })
            .collect();
        let area = blocks.iter().map(|b| b.area).sum();
        let power: f64 = blocks.iter().map(|b| b.power).sum();
        CostReport {
            area,
            power,
            latency_cycles,
            clock_period_s,
            energy: power * latency_cycles as f64 * clock_period_s,
            cells: blocks.iter().map(|b| b.census).sum(),
            blocks,
        }
    }

    /// Area and power summed over the blocks of one kind.
    pub fn by_kind(&self, kind: BlockKind) -> CellFigures {
        let mut f = CellFigures { area: 0.0, power: 0.0 };
        for b in self.blocks.iter().filter(|b| b.kind == kind) {
            f.area += b.area;
            f.power += b.power;
        }
        f
    }

    pub fn block(&self, name: &str) -> Option<&BlockCost> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Width of the step counter for a design of `latency` cycles.
pub fn counter_width(latency: u32) -> u32 {
    ceil_log2(latency as u64 + 1).max(1)
}

pub fn controller_cells(latency: u32) -> CellCensus {
    let w = counter_width(latency);
    // counter, incrementer, two phase-offset subtractors, three bound compares
    register(w) + adder(w) + adder(2 * w) + comparator(3 * w)
}

/// Census of a multi-cycle neuron with `fan_in` inputs of `in_bits` bits.
pub fn multi_cycle_cells(n: &MultiCycleNeuron, fan_in: usize, in_bits: u32, acc_width: u32, layer: Layer, out_bits: u32) -> CellCensus {
    let max_res = n.max_residual();
    let res_bits = bits_for(max_res as u64);
    let mut c = mux_tree(fan_in, res_bits + 2) + add_sub(acc_width) + register(acc_width);
    if res_bits > 0 {
        c += barrel_shifter(res_bits, in_bits + max_res);
    }
    if layer == Layer::Hidden {
        c += qrelu_cells(out_bits);
    }
    c
}

/// Census of a single-cycle neuron.
pub fn single_cycle_cells(p: &NeuronApproxPlan, fan_in: usize, layer: Layer, out_bits: u32) -> CellCensus {
    // one-hot arrival decode for the two important inputs, capture bit,
    // 2-bit result, bit adder and an inverter when the signs differ
    let mut c = mux_tree(fan_in, 2) + register(1) + register(2) + adder(1);
    if p.s1_negative != p.s2_negative {
        c.inverter += 1;
    }
    if layer == Layer::Hidden {
        c += qrelu_cells(out_bits);
    }
    c
}

pub fn neuron_cells(circuit: &CircuitModel, layer: Layer, index: usize) -> CellCensus {
    let fan_in = circuit.fan_in(layer);
    let out_bits = circuit.spec.qrelu_out_bits;
    match &circuit.layer(layer)[index] {
        NeuronDatapath::MultiCycle(n) => multi_cycle_cells(
            n,
            fan_in,
            circuit.spec.layer_input_bits(layer),
            circuit.acc_width(layer),
            layer,
            out_bits,
        ),
        NeuronDatapath::SingleCycle(p) => single_cycle_cells(p, fan_in, layer, out_bits),
    }
}

pub fn argmax_cells(n_classes: usize, value_width: u32) -> CellCensus {
    let index_bits = bits_for(n_classes.saturating_sub(1) as u64).max(1);
    mux_tree(n_classes, value_width) + comparator(value_width) + register(value_width) + register(index_bits)
}

/// Block-by-block cost of an elaborated circuit.
pub fn circuit_cost(circuit: &CircuitModel, tech: &TechLibrary) -> Result<CostReport> {
    tech.validate()?;
    circuit.validate()?;
    let mut blocks = Vec::new();
    blocks.push(("controller".to_string(), BlockKind::Controller, controller_cells(circuit.latency())));
    for (layer, kind, prefix) in [
        (Layer::Hidden, BlockKind::Hidden, "hidden"),
        (Layer::Output, BlockKind::Output, "output"),
    ] {
        for i in 0..circuit.layer(layer).len() {
            blocks.push((format!("{prefix}_neuron_{i}"), kind, neuron_cells(circuit, layer, i)));
        }
    }
    blocks.push((
        "inter_layer_mux".to_string(),
        BlockKind::InterLayerMux,
        mux_tree(circuit.n_hidden(), circuit.spec.qrelu_out_bits),
    ));
    blocks.push((
        "argmax".to_string(),
        BlockKind::Argmax,
        argmax_cells(circuit.n_classes(), circuit.output_value_width()),
    ));
    Ok(CostReport::from_blocks(blocks, circuit.latency(), tech.sequential_clock_s, tech))
}

/// Fully parallel bespoke MLP: one hardwired-shift adder per non-zero
/// weight (inverted operand when negative), qReLU per hidden neuron and a
/// comparator chain for argmax. Single-cycle latency.
pub fn combinational_baseline_cost(qmodel: &QuantizedModel, tech: &TechLibrary) -> Result<CostReport> {
    tech.validate()?;
    qmodel.validate()?;
    let mut blocks = Vec::new();
    for (layer, kind, prefix) in [
        (Layer::Hidden, BlockKind::Hidden, "hidden"),
        (Layer::Output, BlockKind::Output, "output"),
    ] {
        let w = qmodel.acc_width(layer);
        for (i, n) in qmodel.layer(layer).iter().enumerate() {
            let mut c = CellCensus::default();
            for wt in n.weights.iter().filter(|w| !w.zero) {
                c += adder(w);
                if wt.negative {
                    c.inverter += w as u64;
                }
            }
            if layer == Layer::Hidden {
                c += qrelu_cells(qmodel.spec.qrelu_out_bits);
            }
            blocks.push((format!("{prefix}_neuron_{i}"), kind, c));
        }
    }
    let classes = qmodel.n_classes();
    let wv = qmodel.output_value_width();
    let index_bits = bits_for(classes.saturating_sub(1) as u64).max(1);
    let stages = classes.saturating_sub(1) as u32;
    let argmax = comparator(stages * wv) + mux_tree(2, stages * (wv + index_bits));
    blocks.push(("argmax".to_string(), BlockKind::Argmax, argmax));
    Ok(CostReport::from_blocks(blocks, 1, tech.combinational_clock_s, tech))
}

/// Number of shift-and-add instances in a combinational report.
pub fn combinational_adders(qmodel: &QuantizedModel) -> usize {
    qmodel.nonzero_weights()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::HybridPlan;
    use crate::quant::{Pow2Weight, QNeuron, QuantSpec};
    use crate::sim::build_circuit;
    use alloc::vec;
    use proptest::prelude::*;

    /// Counts the internal nodes of a balanced binary tree built by pairing.
    fn tree_nodes(mut leaves: usize) -> usize {
        let mut nodes = 0;
        while leaves > 1 {
            nodes += leaves / 2;
            leaves = leaves / 2 + leaves % 2;
        }
        nodes
    }

    #[test]
    fn mux_tree_examples() {
        let t = TechLibrary::default();
        assert_eq!(mux_cost(2, 1, &t).area, t.mux2.area);
        assert_eq!(mux_cost(1, 7, &t).area, 0.0);
        assert_eq!(mux_tree(8, 4).mux2, 28);
        assert_eq!(mux_tree(8, 4).mux2, 4 * tree_nodes(8) as u64);
        for n in 1..200 {
            assert_eq!(mux_tree(n, 1).mux2, tree_nodes(n) as u64);
        }
    }

    #[test]
    fn register_chain_examples() {
        let t = TechLibrary::default();
        assert_eq!(register_chain_cost(2, 1, &t).area, 2.0 * t.dff.area);
        assert_eq!(mux_cost(2, 1, &t).area, register_chain_cost(2, 1, &t).area / 4.0);
        let mut last = 0.0;
        for n in 2..64 {
            let gap = register_chain_cost(n, 1, &t).area - mux_cost(n, 1, &t).area;
            assert!(gap > 0.0);
            assert!(gap > last);
            last = gap;
        }
    }

    #[test]
    fn tech_keys_round_trip() {
        let mut t = TechLibrary::default();
        for (i, k) in TechLibrary::KEYS.iter().enumerate() {
            t.set(k, i as f64 + 1.0).unwrap();
            assert_eq!(t.get(k), Some(i as f64 + 1.0));
        }
        assert!(t.set("nand_area", 1.0).is_err());
        t.set("dff_power", 0.0).unwrap();
        assert!(t.validate().is_err());
    }

    fn toy() -> QuantizedModel {
        let s = QuantSpec { t_hidden: 3, ..QuantSpec::default() };
        let w = |neg, p: i32| Pow2Weight::new(neg, p - 7);
        QuantizedModel {
            spec: s,
            kept_input_indices: vec![0, 1],
            hidden: vec![
                QNeuron::new(vec![w(false, 2), w(true, 1)], 3, &s),
                QNeuron::new(vec![w(false, 0), w(false, 3)], -10, &s),
            ],
            outputs: vec![
                QNeuron::new(vec![w(false, 1), w(true, 0)], 0, &s),
                QNeuron::new(vec![w(true, 2), w(false, 2)], 1, &s),
            ],
        }
    }

    #[test]
    fn toy_hand_census() {
        let q = toy();
        let c = build_circuit(&q, &HybridPlan::exact(4)).unwrap();
        let r = circuit_cost(&c, &TechLibrary::default()).unwrap();
        // widths: hidden 4+7+2+1 = 14, output 14, latency 6 -> counter 3 bits
        assert_eq!(c.acc_width(Layer::Hidden), 14);
        let ctl = r.block("controller").unwrap().census;
        assert_eq!(ctl, CellCensus { dff: 3, full_adder: 9, comparator_bit: 9, ..Default::default() });
        // hidden 0: residuals {1, 0} -> 1 residual bit, select width 3,
        // 1 mux2 per bit, barrel 1 stage x 5 bits, addsub 14, acc 14, qrelu 8
        let h0 = r.block("hidden_neuron_0").unwrap().census;
        assert_eq!(
            h0,
            CellCensus { dff: 14, mux2: 3 + 14 + 8, full_adder: 14, inverter: 14, shifter_stage: 5, comparator_bit: 0 }
        );
        // hidden 1: residuals {0, 3} -> 2 bits, select width 4, barrel 2 x 7
        let h1 = r.block("hidden_neuron_1").unwrap().census;
        assert_eq!(h1.shifter_stage, 14);
        assert_eq!(h1.mux2, 4 + 14 + 8);
        // output 1: residuals {0, 0} -> no shifter
        let o1 = r.block("output_neuron_1").unwrap().census;
        assert_eq!(o1, CellCensus { dff: 14, mux2: 2 + 14, full_adder: 14, inverter: 14, ..Default::default() });
        assert_eq!(r.block("inter_layer_mux").unwrap().census.mux2, 4);
        // argmax: value width 14, index 1 bit
        let a = r.block("argmax").unwrap().census;
        assert_eq!(a, CellCensus { dff: 15, mux2: 14, comparator_bit: 14, ..Default::default() });
    }

    #[test]
    fn blocks_sum_and_energy_law() {
        let q = toy();
        let c = build_circuit(&q, &HybridPlan::exact(4)).unwrap();
        let t = TechLibrary::default();
        let r = circuit_cost(&c, &t).unwrap();
        let area: f64 = r.blocks.iter().map(|b| b.area).sum();
        assert_eq!(r.area, area);
        assert_eq!(r.cells.area(&t), r.area);
        assert_eq!(r.energy, r.power * r.latency_cycles as f64 * r.clock_period_s);
    }

    #[test]
    fn combinational_counts_one_adder_per_weight() {
        let q = toy();
        let t = TechLibrary::default();
        let r = combinational_baseline_cost(&q, &t).unwrap();
        assert_eq!(r.latency_cycles, 1);
        assert_eq!(combinational_adders(&q), 8);
        let adders: u64 = r
            .blocks
            .iter()
            .filter(|b| b.kind != BlockKind::Argmax)
            .map(|b| b.census.full_adder)
            .sum();
        assert_eq!(adders, 8 * 14);
    }

    fn positive() -> impl Strategy<Value = f64> {
        1e-3f64..1e3
    }

    proptest! {
        #[test]
        fn single_cycle_is_cheaper_for_any_tech(
            vals in proptest::collection::vec(positive(), 12),
            fan_in in 2usize..60,
            max_res in 0u32..8,
            s1 in any::<bool>(),
            s2 in any::<bool>(),
            hidden in any::<bool>(),
        ) {
            let mut t = TechLibrary::default();
            for (k, v) in TechLibrary::KEYS.iter().zip(&vals) {
                t.set(k, *v).unwrap();
            }
            let layer = if hidden { Layer::Hidden } else { Layer::Output };
            let mut residuals = vec![0; fan_in];
            residuals[fan_in - 1] = max_res;
            let n = MultiCycleNeuron {
                residuals,
                negative: vec![false; fan_in],
                zero: vec![false; fan_in],
                common_shift: 0,
                bias: 0,
            };
            let acc = QuantSpec::default().acc_width(layer, fan_in);
            let multi = multi_cycle_cells(&n, fan_in, 4, acc, layer, 4);
            let p = NeuronApproxPlan {
                id: crate::approx::NeuronId { layer, index: 0 },
                i1: 0, i2: 1, leading_one: 3, b1: 1, b2: 2,
                s1_negative: s1, s2_negative: s2,
            };
            let single = single_cycle_cells(&p, fan_in, layer, 4);
            prop_assert!(single.is_subset_of(&multi));
            prop_assert!(single.area(&t) < multi.area(&t));
            prop_assert!(single.power(&t) < multi.power(&t));
        }

        #[test]
        fn adding_cells_never_lowers_cost(
            a in proptest::collection::vec(0u64..1000, 6),
            b in proptest::collection::vec(0u64..1000, 6),
        ) {
            let mk = |v: &[u64]| CellCensus {
                dff: v[0], mux2: v[1], full_adder: v[2], inverter: v[3], comparator_bit: v[4], shifter_stage: v[5],
            };
            let (x, y) = (mk(&a), mk(&b));
            let t = TechLibrary::default();
            prop_assert!((x + y).area(&t) >= x.area(&t));
            prop_assert!((x + y).power(&t) >= x.power(&t));
        }
    }
}
