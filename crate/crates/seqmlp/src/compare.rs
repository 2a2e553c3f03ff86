// SPDX-License-Identifier: Apache-2.0

//! Cross-report comparison and the synthetic model-size sweep.

use serde::{Deserialize, Serialize};

use seqmlp_core::approx::HybridPlan;
use seqmlp_core::cost::{circuit_cost, combinational_baseline_cost, TechLibrary};
use seqmlp_core::quant::{Layer, QuantSpec, QuantizedModel};
use seqmlp_core::sim::build_circuit;
use seqmlp_core::synth::random_quantized_model;

use crate::error::{Error, Result};
use crate::pipeline::RunReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    /// Hybrid sequential over combinational, within the report.
    pub seq_comb_area: f64,
    pub seq_comb_power: f64,
    pub seq_comb_energy: f64,
    /// This report's hybrid design over the reference report's.
    pub area_vs_ref: f64,
    pub power_vs_ref: f64,
    pub energy_vs_ref: f64,
    pub hybrid_test_accuracy: f64,
    pub accuracy_delta_vs_ref: f64,
}

/// Compare reports against the first one. All reports must share a tech library.
pub fn report_compare(reports: &[(String, RunReport)]) -> Result<Vec<ComparisonRow>> {
    if reports.len() < 2 {
        return Err(Error::Config("compare needs at least two reports".into()));
    }
    let reference = &reports[0].1;
    for (name, r) in reports {
        if r.cost.tech != reference.cost.tech {
            return Err(Error::Config(format!(
                "{name} was costed with a different tech library than {}",
                reports[0].0
            )));
        }
    }
    let ref_h = &reference.cost.sequential_hybrid;
    Ok(reports
        .iter()
        .map(|(name, r)| {
            let h = &r.cost.sequential_hybrid;
            let c = &r.cost.combinational;
            ComparisonRow {
                name: name.clone(),
                seq_comb_area: h.area / c.area,
                seq_comb_power: h.power / c.power,
                seq_comb_energy: h.energy / c.energy,
                area_vs_ref: h.area / ref_h.area,
                power_vs_ref: h.power / ref_h.power,
                energy_vs_ref: h.energy / ref_h.energy,
                hybrid_test_accuracy: r.accuracy.hybrid.test,
                accuracy_delta_vs_ref: r.accuracy.hybrid.test - reference.accuracy.hybrid.test,
            }
        })
        .collect())
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut s = format!(
        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8}\n",
        "report", "A seq/cmb", "P seq/cmb", "E seq/cmb", "A/ref", "P/ref", "E/ref", "acc", "d acc"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>+8.4}\n",
            r.name,
            r.seq_comb_area,
            r.seq_comb_power,
            r.seq_comb_energy,
            r.area_vs_ref,
            r.power_vs_ref,
            r.energy_vs_ref,
            r.hybrid_test_accuracy,
            r.accuracy_delta_vs_ref
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub coefficients: usize,
    pub inputs: usize,
    pub sequential_area: f64,
    pub combinational_area: f64,
    pub area_ratio: f64,
    pub sequential_energy: f64,
    pub combinational_energy: f64,
}

/// Random pow2 model with 5 hidden neurons and 2 classes whose coefficient
/// count is close to `target`.
pub fn sweep_model(target: usize, seed: u64) -> QuantizedModel {
    let n = (target.saturating_sub(10) / 5).max(2);
    let spec = QuantSpec::default();
    let w = spec.acc_width(Layer::Hidden, n);
    random_quantized_model(n, 5, 2, QuantSpec { t_hidden: w - 1 - spec.qrelu_out_bits - 2, ..spec }, seed)
}

/// Exact sequential against combinational cost over growing models.
pub fn cost_sweep(targets: &[usize], tech: &TechLibrary, seed: u64) -> Result<Vec<SweepRow>> {
    targets
        .iter()
        .map(|&t| {
            let q = sweep_model(t, seed ^ t as u64);
            let seq = circuit_cost(&build_circuit(&q, &HybridPlan::exact(q.n_neurons()))?, tech)?;
            let comb = combinational_baseline_cost(&q, tech)?;
            Ok(SweepRow {
                coefficients: q.n_inputs() * q.n_hidden() + q.n_hidden() * q.n_classes(),
                inputs: q.n_inputs(),
                sequential_area: seq.area,
                combinational_area: comb.area,
                area_ratio: seq.area / comb.area,
                sequential_energy: seq.energy,
                combinational_energy: comb.energy,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("sweep rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub const DEFAULT_SWEEP: [usize; 8] = [50, 100, 200, 500, 1000, 2000, 3500, 5000];
