// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use seqmlp::compare::report_compare;
use seqmlp::config::PipelineConfig;
use seqmlp::formats::read_json;
use seqmlp::pipeline::{load_plan, run_pipeline, run_stage, run_until, RunReport, Stage};

fn config(out: &Path) -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/spectf.toml");
    let mut cfg = PipelineConfig::load(&path).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn same_file(a: &Path, b: &Path, name: &str) {
    assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
}

#[test]
fn stage_by_stage_matches_one_shot() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(config(&a)).unwrap();
    for stage in Stage::ALL {
        run_stage(config(&b), stage).unwrap();
    }
    for f in ["model.json", "quantized.json", "pruned.json", "plan.json", "simulation.json", "trace.jsonl", "cost.json"] {
        same_file(&a, &b, f);
    }
    same_file(&a.join("rtl"), &b.join("rtl"), "manifest.json");
}

#[test]
fn later_stage_without_inputs_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run_stage(config(tmp.path()), Stage::Simulate).unwrap_err().to_string();
    assert!(err.contains("simulate"), "{err}");
}

#[test]
fn run_until_stops_early() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_until(config(tmp.path()), Stage::Prune).unwrap().is_none());
    assert!(tmp.path().join("pruned.json").exists());
    assert!(!tmp.path().join("plan.json").exists());
}

#[test]
fn disabled_ga_keeps_every_neuron_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    cfg.ga.enabled = false;
    let r = run_pipeline(cfg).unwrap();
    assert_eq!(r.approximated_neurons, 0);
    assert_eq!(load_plan(&tmp.path().join("plan.json")).unwrap().approximated(), 0);
    assert_eq!(r.accuracy.hybrid.train, r.accuracy.pruned.train);
    assert_eq!(r.cost.sequential_hybrid.area, r.cost.sequential_exact.area);
}

#[test]
fn disabled_rfp_keeps_every_feature() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    cfg.rfp.enabled = false;
    let r = run_pipeline(cfg).unwrap();
    assert_eq!(r.kept_features, r.features);
    assert_eq!(r.accuracy.pruned, r.accuracy.quantized);
}

#[test]
fn seed_changes_the_model() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_until(config(&a), Stage::Train).unwrap();
    let mut cfg = config(&b);
    cfg.seed += 1;
    run_until(cfg, Stage::Train).unwrap();
    assert_ne!(std::fs::read(a.join("model.json")).unwrap(), std::fs::read(b.join("model.json")).unwrap());
}

#[test]
fn compare_against_itself_is_unity() {
    let tmp = tempfile::tempdir().unwrap();
    run_pipeline(config(tmp.path())).unwrap();
    let r: RunReport = read_json(&tmp.path().join("report.json")).unwrap();
    let rows = report_compare(&[("a".into(), r.clone()), ("b".into(), r)]).unwrap();
    for row in rows {
        assert_eq!(row.area_vs_ref, 1.0);
        assert_eq!(row.energy_vs_ref, 1.0);
        assert_eq!(row.accuracy_delta_vs_ref, 0.0);
        assert!(row.seq_comb_area > 0.0);
    }
}

#[test]
fn trace_covers_every_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_pipeline(config(tmp.path())).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("trace.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), r.latency_cycles as usize + 1);
    assert_eq!(lines[0]["phase"], "reset");
    assert_eq!(lines.last().unwrap()["phase"], "argmax");
}
