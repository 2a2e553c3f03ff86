// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqmlp_core::approx::HybridPlan;
use seqmlp_core::cost::{
    argmax_cells, circuit_cost, combinational_baseline_cost, controller_cells, mux_tree, neuron_cells, CellCensus,
    TechLibrary,
};
use seqmlp_core::quant::{Layer, QuantSpec, QuantizedModel};
use seqmlp_core::rtl::{census_from_text, emit_rtl, emit_testbench, register_instances};
use seqmlp_core::sim::{build_circuit, CircuitModel};
use seqmlp_core::synth::{self, random_codes, random_quantized_model};

fn fixtures() -> Vec<(&'static str, CircuitModel)> {
    synth::fixtures().into_iter().map(|f| (f.name, f.circuit)).collect()
}

#[test]
fn emitted_census_matches_cost_model() {
    for (name, c) in fixtures() {
        let bundle = emit_rtl(&c).unwrap();
        let report = circuit_cost(&c, &TechLibrary::default()).unwrap();
        let text = |f: &str| bundle.file(f).unwrap().contents.clone();
        assert_eq!(census_from_text(&text("controller.v")), controller_cells(c.latency()), "{name}");
        assert_eq!(report.block("controller").unwrap().census, controller_cells(c.latency()));
        for layer in [Layer::Hidden, Layer::Output] {
            let prefix = if layer == Layer::Hidden { "hidden" } else { "output" };
            for i in 0..c.layer(layer).len() {
                let block = format!("{prefix}_neuron_{i}");
                let emitted = census_from_text(&text(&format!("{block}.v")));
                assert_eq!(emitted, neuron_cells(&c, layer, i), "{name} {block}");
                assert_eq!(emitted, report.block(&block).unwrap().census);
            }
        }
        assert_eq!(census_from_text(&text("top.v")), mux_tree(c.n_hidden(), 4));
        assert_eq!(
            census_from_text(&text("argmax.v")),
            argmax_cells(c.n_classes(), c.output_value_width())
        );
        let total: CellCensus = bundle.files.iter().map(|f| census_from_text(&f.contents)).sum();
        assert_eq!(total, report.cells, "{name}");
        let regs: usize = bundle.files.iter().map(|f| register_instances(&f.contents)).sum();
        assert_eq!(regs, c.register_census().total(), "{name}");
    }
}

#[test]
fn emission_is_deterministic() {
    for ((_, a), (_, b)) in fixtures().into_iter().zip(fixtures()) {
        let x = emit_rtl(&a).unwrap();
        let y = emit_rtl(&b).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.bundle_hash(), y.bundle_hash());
    }
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn golden_files() {
    let update = std::env::var_os("SEQMLP_UPDATE_GOLDEN").is_some();
    for (name, c) in fixtures() {
        let bundle = emit_rtl(&c).unwrap();
        let dir = golden_dir().join(name);
        if update {
            std::fs::create_dir_all(&dir).unwrap();
        }
        for f in &bundle.files {
            let path = dir.join(&f.name);
            if update {
                std::fs::write(&path, &f.contents).unwrap();
            }
            let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(f.contents, want, "{name}/{}", f.name);
        }
        let path = dir.join("manifest.json");
        if update {
            std::fs::write(&path, bundle.manifest_json()).unwrap();
        }
        assert_eq!(bundle.manifest_json(), std::fs::read_to_string(&path).unwrap());
    }
}

#[test]
fn testbench_has_one_check_per_vector() {
    let (_, c) = fixtures().remove(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vectors: Vec<Vec<u8>> = (0..100).map(|_| random_codes(c.n_inputs(), 4, &mut rng)).collect();
    let expected: Vec<usize> = vectors.iter().map(|v| c.run_inference(v).unwrap().class).collect();
    let tb = emit_testbench(&c, &vectors, &expected).unwrap();
    assert_eq!(tb.matches("    run_vector(").count(), 100);
    let one = emit_testbench(&c, &vectors[..1], &expected[..1]).unwrap();
    assert_eq!(one.matches("    run_vector(").count(), 1);
    let none = emit_testbench(&c, &[], &[]).unwrap();
    assert_eq!(none.matches("    run_vector(").count(), 0);
    assert!(none.contains("$finish"));
    let b = emit_rtl(&c).unwrap().with_testbench(tb);
    assert_eq!(b.manifest.len(), b.files.len() + 1);
}

fn model_with_coefficients(target: usize, seed: u64) -> QuantizedModel {
    // fixed 5 hidden / 2 classes; inputs grow with the coefficient budget
    let n = (target.saturating_sub(10) / 5).max(2);
    let spec = QuantSpec::default();
    let w = spec.acc_width(Layer::Hidden, n);
    random_quantized_model(n, 5, 2, QuantSpec { t_hidden: w - 5, ..spec }, seed)
}

#[test]
fn sequential_gains_grow_with_model_size() {
    let tech = TechLibrary::default();
    let mut last = f64::INFINITY;
    for target in [50, 100, 200, 500, 1000, 2000, 5000] {
        let q = model_with_coefficients(target, target as u64);
        let c = build_circuit(&q, &HybridPlan::exact(q.n_neurons())).unwrap();
        let seq = circuit_cost(&c, &tech).unwrap();
        let comb = combinational_baseline_cost(&q, &tech).unwrap();
        let ratio = seq.area / comb.area;
        assert!(ratio < last, "{target}: {ratio} >= {last}");
        assert!(seq.energy > comb.energy, "{target}");
        last = ratio;
    }
}

#[test]
fn hybrid_is_cheaper_than_exact() {
    let tech = TechLibrary::default();
    for f in synth::fixtures() {
        let (name, c) = (f.name, &f.circuit);
        let approximated = c
            .hidden
            .iter()
            .chain(&c.outputs)
            .filter(|d| matches!(d, seqmlp_core::sim::NeuronDatapath::SingleCycle(_)))
            .count();
        if approximated == 0 {
            continue;
        }
        let hybrid = circuit_cost(c, &tech).unwrap();
        let exact_plan = HybridPlan::exact(f.model.n_neurons());
        let exact = circuit_cost(&build_circuit(&f.model, &exact_plan).unwrap(), &tech).unwrap();
        assert!(hybrid.area < exact.area, "{name}");
        assert!(hybrid.power < exact.power, "{name}");
    }
}
