// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqmlp::compare::{cost_sweep, DEFAULT_SWEEP};
use seqmlp::config::PipelineConfig;
use seqmlp::pipeline::{run_pipeline, run_until, RfpSummary, RunReport, Stage};
use seqmlp_core::approx::{hybrid_infer, plan_candidates, HybridEvaluator, HybridPlan};
use seqmlp_core::cost::{circuit_cost, mux_cost, register_chain_cost, TechLibrary};
use seqmlp_core::nsga2::{nsga2_select, GaConfig};
use seqmlp_core::quant::{Layer, QuantSpec, QuantizedModel};
use seqmlp_core::rtl::{census_from_text, emit_rtl, register_instances};
use seqmlp_core::sim::{build_circuit, NeuronDatapath, NeuronRegs};
use seqmlp_core::synth::{fixtures, random_codes, random_quantized_model};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_model(seed: u64) -> QuantizedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=16);
    let h = rng.random_range(2..=5);
    let c = rng.random_range(2..=4);
    let base = QuantSpec::default();
    let t = base.acc_width(Layer::Hidden, n) - 1 - base.qrelu_out_bits - 3;
    random_quantized_model(n, h, c, QuantSpec { t_hidden: t, ..base }, seed)
}

fn accumulator(r: &NeuronRegs) -> Option<i64> {
    match r {
        NeuronRegs::Accumulator(a) => Some(*a),
        NeuronRegs::SingleCycle { .. } => None,
    }
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut vectors = 0;
    for seed in 0..20 {
        let q = random_model(seed);
        let c = build_circuit(&q, &HybridPlan::exact(q.n_neurons())).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        for v in 0..1000 {
            let x = random_codes(q.n_inputs(), 4, &mut rng);
            let want = q.infer(&x).map_err(|e| e.to_string())?;
            let got = c.run_inference(&x).map_err(|e| e.to_string())?;
            let last = got.trace.as_ref().and_then(|t| t.snapshots.last()).ok_or("empty trace")?;
            let hidden: Vec<_> = last.hidden.iter().map(accumulator).collect();
            let outputs: Vec<_> = last.outputs.iter().map(accumulator).collect();
            let ok = got.class == want.class
                && hidden == want.hidden_acc.iter().copied().map(Some).collect::<Vec<_>>()
                && outputs == want.output_acc.iter().copied().map(Some).collect::<Vec<_>>()
                && got.hidden_codes == want.hidden_codes
                && got.output_values == want.output_values;
            ensure(ok, || format!("model {seed} vector {v}: simulator and integer inference disagree"))?;
            vectors += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("20 models, {vectors} vectors, 0 mismatches in {:.1}s", took.as_secs_f64()))
}

fn hybrid_coupling() -> Check {
    let mut plans = 0;
    for seed in 0..20 {
        let q = random_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        let samples: Vec<Vec<u8>> = (0..200).map(|_| random_codes(q.n_inputs(), 4, &mut rng)).collect();
        let labels: Vec<usize> = samples.iter().map(|s| s[0] as usize % q.n_classes()).collect();
        let candidates = plan_candidates(&q, &samples).map_err(|e| e.to_string())?;
        let eval = HybridEvaluator::new(&q, &candidates, &samples, &labels).map_err(|e| e.to_string())?;
        for p in 0..10 {
            let mask: Vec<bool> = candidates.iter().map(|c| c.is_some() && rng.random_bool(0.5)).collect();
            let plan = HybridPlan::from_mask(&mask, &candidates).map_err(|e| e.to_string())?;
            let c = build_circuit(&q, &plan).map_err(|e| e.to_string())?;
            let mut correct = 0;
            for (i, (s, &l)) in samples.iter().zip(&labels).enumerate() {
                let sim = c.classify(s).map_err(|e| e.to_string())?;
                let off = hybrid_infer(&q, &plan, s).map_err(|e| e.to_string())?;
                ensure(sim.hidden_codes == off.hidden_codes && sim.output_values == off.output_values, || {
                    format!("model {seed} plan {p} vector {i}: codes differ")
                })?;
                correct += (sim.class == l) as usize;
            }
            ensure(correct == eval.correct(&mask), || format!("model {seed} plan {p}: accuracy differs"))?;
            plans += 1;
        }
    }
    Ok(format!("{plans} hybrid plans x 200 vectors, 0 mismatches"))
}

fn latency_law() -> Check {
    let mut circuits = 0;
    let mut check = |c: &seqmlp_core::sim::CircuitModel| -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(circuits as u64);
        let x = random_codes(c.n_inputs(), 4, &mut rng);
        let out = c.run_inference(&x).map_err(|e| e.to_string())?;
        let want = (c.n_inputs() + c.n_hidden() + c.n_classes()) as u32;
        let snapshots = out.trace.map(|t| t.snapshots.len()).unwrap_or(0);
        ensure(out.latency_cycles == want && snapshots == want as usize + 1, || {
            format!("{} cycles, expected N+H+C = {want}", out.latency_cycles)
        })?;
        circuits += 1;
        Ok(())
    };
    for seed in 0..20 {
        let q = random_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Vec<u8>> = (0..50).map(|_| random_codes(q.n_inputs(), 4, &mut rng)).collect();
        let candidates = plan_candidates(&q, &samples).map_err(|e| e.to_string())?;
        let all: Vec<bool> = candidates.iter().map(Option::is_some).collect();
        check(&build_circuit(&q, &HybridPlan::exact(q.n_neurons())).map_err(|e| e.to_string())?)?;
        let plan = HybridPlan::from_mask(&all, &candidates).map_err(|e| e.to_string())?;
        check(&build_circuit(&q, &plan).map_err(|e| e.to_string())?)?;
    }
    for f in fixtures() {
        check(&f.circuit)?;
    }
    Ok(format!("{circuits} circuits, cycles = N + H + C"))
}

fn mux_register_trend() -> Check {
    let tech = TechLibrary::default();
    let m = mux_cost(2, 1, &tech);
    let r = register_chain_cost(2, 1, &tech);
    ensure(m.area * 4.0 == r.area, || format!("mux {} vs register {} area", m.area, r.area))?;
    let mut last = f64::NEG_INFINITY;
    for n in 2..=64 {
        let gap = register_chain_cost(n, 1, &tech).area - mux_cost(n, 1, &tech).area;
        ensure(gap > last, || format!("gap not increasing at n = {n}"))?;
        last = gap;
    }
    Ok(format!("mux:register = 1:{}, gap grows for n = 2..64", r.area / m.area))
}

fn spectf_config(out: &Path, max_drop: f64) -> Result<PipelineConfig, String> {
    let mut cfg = PipelineConfig::load(&root().join("configs/spectf.toml")).map_err(|e| e.to_string())?;
    cfg.out_dir = out.to_path_buf();
    cfg.ga.max_drop = max_drop;
    Ok(cfg)
}

fn rfp_contract(tmp: &Path) -> Check {
    let start = Instant::now();
    let out = tmp.join("rfp");
    run_until(spectf_config(&out, 0.02)?, Stage::Prune).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(out.join("rfp.json")).map_err(|e| e.to_string())?;
    let rfp: RfpSummary = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let k = rfp.kept_indices.len();
    let acc = &rfp.prefix_accuracies;
    ensure(rfp.ranking.len() == 44, || format!("{} features ranked", rfp.ranking.len()))?;
    ensure(rfp.threshold_met && acc.len() == k, || "threshold not met".into())?;
    ensure(acc[k - 1] >= rfp.threshold, || format!("prefix {k} misses the threshold"))?;
    ensure(k == 1 || acc[k - 2] < rfp.threshold, || format!("prefix {} already passes", k - 1))?;
    ensure(rfp.kept_indices == rfp.ranking[..k], || "kept set is not a ranking prefix".into())?;
    let report = run_pipeline(spectf_config(&out, 0.02)?).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!(
        "k* = {k} of 44 ({:.1}% kept, reference average 81%), threshold {:.4}, pruned test accuracy {:.4}",
        100.0 * rfp.kept_fraction,
        rfp.threshold,
        report.accuracy.pruned.test
    ))
}

fn labelled(q: &QuantizedModel, n: usize, seed: u64) -> (Vec<Vec<u8>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<u8>> = (0..n).map(|_| random_codes(q.n_inputs(), 4, &mut rng)).collect();
    let labels = samples
        .iter()
        .map(|s| {
            if rng.random_bool(0.1) {
                rng.random_range(0..q.n_classes())
            } else {
                q.infer(s).expect("valid sample").class
            }
        })
        .collect();
    (samples, labels)
}

fn ga_optimality() -> Check {
    let start = Instant::now();
    let spec = QuantSpec { t_hidden: 6, ..QuantSpec::default() };
    let mut cases = 0;
    for seed in 0..4 {
        let q = random_quantized_model(8, 4, 2, spec, 40 + seed);
        let (samples, labels) = labelled(&q, 300, seed);
        let candidates = plan_candidates(&q, &samples).map_err(|e| e.to_string())?;
        let eval = HybridEvaluator::new(&q, &candidates, &samples, &labels).map_err(|e| e.to_string())?;
        let n = q.n_neurons();
        let base = eval.correct(&vec![false; n]);
        for max_drop in [0.01, 0.02, 0.05] {
            let need = base as f64 - max_drop * samples.len() as f64 - 1e-9;
            let best = (0u32..1 << n)
                .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<bool>>())
                .filter(|m| m.iter().zip(&candidates).all(|(&b, c)| !b || c.is_some()))
                .filter(|m| eval.correct(m) as f64 >= need)
                .map(|m| m.iter().filter(|&&b| b).count())
                .max()
                .unwrap_or(0);
            let cfg = GaConfig { population: 20, generations: 30, seed, max_drop, ..GaConfig::default() };
            let got = nsga2_select(&q, &samples, &labels, &cfg).map_err(|e| e.to_string())?;
            ensure(got.chosen.approximated() == best, || {
                format!("seed {seed} drop {max_drop}: GA {} vs exhaustive {best}", got.chosen.approximated())
            })?;
            cases += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("{cases} cases over 64 masks each, GA count equals exhaustive"))
}

fn drop_guarantee(tmp: &Path) -> Check {
    let mut parts = Vec::new();
    for drop in [0.01, 0.02, 0.05] {
        let r = run_pipeline(spectf_config(&tmp.join(format!("drop{drop}")), drop)?).map_err(|e| e.to_string())?;
        let (hybrid, pruned) = (r.accuracy.hybrid.train, r.accuracy.pruned.train);
        ensure(hybrid >= pruned - drop - 1e-12, || format!("drop {drop}: hybrid {hybrid:.4} < {pruned:.4} - {drop}"))?;
        parts.push(format!("{:.0}%: {hybrid:.4} vs {pruned:.4}, {} approx", drop * 100.0, r.approximated_neurons));
    }
    Ok(parts.join("; "))
}

fn cost_trends() -> Check {
    let tech = TechLibrary::default();
    for seed in 0..3 {
        let rows = cost_sweep(&DEFAULT_SWEEP, &tech, seed).map_err(|e| e.to_string())?;
        for w in rows.windows(2) {
            ensure(w[1].area_ratio < w[0].area_ratio, || {
                format!("seed {seed}: ratio rises from {} to {} coefficients", w[0].coefficients, w[1].coefficients)
            })?;
        }
        for r in &rows {
            ensure(r.sequential_energy > r.combinational_energy, || {
                format!("seed {seed}: sequential energy not above combinational at {}", r.coefficients)
            })?;
        }
    }
    let mut hybrids = 0;
    for f in fixtures() {
        let single = |d: &&NeuronDatapath| matches!(d, NeuronDatapath::SingleCycle(_));
        if f.circuit.hidden.iter().chain(&f.circuit.outputs).filter(single).count() == 0 {
            continue;
        }
        let exact = build_circuit(&f.model, &HybridPlan::exact(f.model.n_neurons())).map_err(|e| e.to_string())?;
        let a = circuit_cost(&f.circuit, &tech).map_err(|e| e.to_string())?.area;
        let b = circuit_cost(&exact, &tech).map_err(|e| e.to_string())?.area;
        ensure(a < b, || format!("{}: hybrid area {a} >= exact {b}", f.name))?;
        hybrids += 1;
    }
    Ok(format!(
        "3 sweeps over {} sizes: ratio decreasing, seq energy > comb; hybrid < exact on {hybrids} circuits",
        DEFAULT_SWEEP.len()
    ))
}

fn determinism(tmp: &Path) -> Check {
    let a = tmp.join("det_a");
    let b = tmp.join("det_b");
    let ra: RunReport = run_pipeline(spectf_config(&a, 0.02)?).map_err(|e| e.to_string())?;
    let rb: RunReport = run_pipeline(spectf_config(&b, 0.02)?).map_err(|e| e.to_string())?;
    for f in ["model.json", "plan.json", "report.json", "rtl/manifest.json"] {
        let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{f} differs"))?;
    }
    ensure(ra.rtl_bundle_sha256 == rb.rtl_bundle_sha256, || "bundle hash differs".into())?;
    Ok(format!("byte-identical artifacts, bundle {}", &ra.rtl_bundle_sha256[..16]))
}

fn emitter_fidelity() -> Check {
    let tech = TechLibrary::default();
    let golden = root().join("crates/core/tests/golden");
    let mut names = Vec::new();
    for f in fixtures() {
        let bundle = emit_rtl(&f.circuit).map_err(|e| e.to_string())?;
        let report = circuit_cost(&f.circuit, &tech).map_err(|e| e.to_string())?;
        for block in &report.blocks {
            let file = bundle.file(&format!("{}.v", block.name)).or_else(|| {
                (block.name == "inter_layer_mux").then(|| bundle.file("top.v")).flatten()
            });
            let file = file.ok_or_else(|| format!("{}: no file for {}", f.name, block.name))?;
            ensure(census_from_text(&file.contents) == block.census, || {
                format!("{}: census of {} differs", f.name, block.name)
            })?;
        }
        let total: seqmlp_core::cost::CellCensus = bundle.files.iter().map(|x| census_from_text(&x.contents)).sum();
        ensure(total == report.cells, || format!("{}: total census differs", f.name))?;
        let regs: usize = bundle.files.iter().map(|x| register_instances(&x.contents)).sum();
        ensure(regs == f.circuit.register_census().total(), || format!("{}: register count", f.name))?;
        for file in &bundle.files {
            let want = std::fs::read_to_string(golden.join(f.name).join(&file.name)).map_err(|e| e.to_string())?;
            ensure(file.contents == want, || format!("{}/{} differs from golden", f.name, file.name))?;
        }
        let manifest = std::fs::read_to_string(golden.join(f.name).join("manifest.json")).map_err(|e| e.to_string())?;
        ensure(bundle.manifest_json() == manifest, || format!("{}: manifest differs", f.name))?;
        names.push(f.name);
    }
    Ok(format!("census and golden bytes match for {}", names.join(", ")))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let tmp = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("hybrid coupling", Box::new(hybrid_coupling)),
        ("latency law", Box::new(latency_law)),
        ("mux/register trend", Box::new(mux_register_trend)),
        ("RFP contract", Box::new(|| rfp_contract(tmp))),
        ("GA optimality", Box::new(ga_optimality)),
        ("accuracy-drop guarantee", Box::new(|| drop_guarantee(tmp))),
        ("cost trends", Box::new(cost_trends)),
        ("determinism", Box::new(|| determinism(tmp))),
        ("emitter fidelity", Box::new(emitter_fidelity)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
