// SPDX-License-Identifier: Apache-2.0

//! Stage-by-stage pipeline. Every stage writes its artifact under the
//! output directory, so any stage can be rerun from the files of the
//! previous ones.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seqmlp_core::approx::{hybrid_accuracy, HybridPlan};
use seqmlp_core::cost::{circuit_cost, combinational_baseline_cost, TechLibrary};
use seqmlp_core::dataset::{Split, SplitConfig};
use seqmlp_core::model::MlpModel;
use seqmlp_core::nsga2::nsga2_select;
use seqmlp_core::quant::{quantize_model, QuantizedModel};
use seqmlp_core::rfp::prune;
use seqmlp_core::rtl::{emit_rtl, emit_testbench, RtlBundle};
use seqmlp_core::sim::{build_circuit, BatchResult, CircuitModel};
use seqmlp_core::train::train;

use crate::config::PipelineConfig;
use crate::dataset_io::{load_dataset, LoadedDataset};
use crate::error::{self, Error, Result};
use crate::formats::{read_json, trace_jsonl, write_json, CostJson, ModelJson, PlanJson, QuantizedJson};
use crate::techfile::load_tech;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Train,
    Quantize,
    Prune,
    Approximate,
    Simulate,
    Cost,
    Emit,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Train,
        Stage::Quantize,
        Stage::Prune,
        Stage::Approximate,
        Stage::Simulate,
        Stage::Cost,
        Stage::Emit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Train => "train",
            Stage::Quantize => "quantize",
            Stage::Prune => "prune",
            Stage::Approximate => "approximate",
            Stage::Simulate => "simulate",
            Stage::Cost => "cost",
            Stage::Emit => "emit",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// File layout under the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub root: PathBuf,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Artifacts { root: root.into() }
    }
    pub fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }
    pub fn quantized(&self) -> PathBuf {
        self.root.join("quantized.json")
    }
    pub fn pruned(&self) -> PathBuf {
        self.root.join("pruned.json")
    }
    pub fn rfp(&self) -> PathBuf {
        self.root.join("rfp.json")
    }
    pub fn plan(&self) -> PathBuf {
        self.root.join("plan.json")
    }
    pub fn front(&self) -> PathBuf {
        self.root.join("pareto_front.json")
    }
    pub fn simulation(&self) -> PathBuf {
        self.root.join("simulation.json")
    }
    pub fn trace(&self) -> PathBuf {
        self.root.join("trace.jsonl")
    }
    pub fn cost(&self) -> PathBuf {
        self.root.join("cost.json")
    }
    pub fn rtl(&self) -> PathBuf {
        self.root.join("rtl")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

fn stage_err(stage: Stage, path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Stage {
        stage: stage.name(),
        path: path.to_path_buf(),
        source: Box::new(e),
    }
}

/// Loaded inputs shared by every stage.
pub struct Session {
    pub config: PipelineConfig,
    pub data: LoadedDataset,
    /// Full-width input codes of every sample.
    pub codes: Vec<Vec<u8>>,
    pub tech: TechLibrary,
    pub artifacts: Artifacts,
}

impl Session {
    pub fn open(config: PipelineConfig) -> Result<Self> {
        let split = SplitConfig {
            train_fraction: config.dataset.train_fraction,
            seed: config.seed,
        };
        let data = load_dataset(&config.dataset.path, &config.dataset.schema, split)
            .map_err(stage_err(Stage::Train, &config.dataset.path))?;
        let mut tech = match &config.cost.tech {
            Some(p) => load_tech(p).map_err(stage_err(Stage::Cost, p))?,
            None => TechLibrary::default(),
        };
        if let Some(c) = config.cost.clock_period_s {
            tech.sequential_clock_s = c;
            tech.validate()?;
        }
        let codes = data.dataset.codes(config.quant.input_bits);
        let artifacts = Artifacts::new(&config.out_dir);
        Ok(Session {
            config,
            data,
            codes,
            tech,
            artifacts,
        })
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        self.data.dataset.indices(split)
    }

    pub fn labels(&self, split: Split) -> Vec<usize> {
        self.indices(split).iter().map(|&i| self.data.dataset.label(i)).collect()
    }

    /// Circuit-input rows of `split` for a (possibly pruned) model.
    pub fn circuit_inputs(&self, q: &QuantizedModel, split: Split) -> Vec<Vec<u8>> {
        self.indices(split).iter().map(|&i| q.select_inputs(&self.codes[i])).collect()
    }

    fn full_rows(&self, split: Split) -> Vec<&[u8]> {
        self.indices(split).iter().map(|&i| self.codes[i].as_slice()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitAccuracy {
    pub train: f64,
    pub test: f64,
}

fn quantized_accuracy(s: &Session, q: &QuantizedModel) -> Result<SplitAccuracy> {
    let acc = |split| -> Result<f64> {
        let rows = s.circuit_inputs(q, split);
        let labels = s.labels(split);
        let correct = rows
            .iter()
            .zip(&labels)
            .map(|(r, &l)| Ok((q.infer(r)?.class == l) as usize))
            .sum::<Result<usize>>()?;
        Ok(correct as f64 / rows.len().max(1) as f64)
    };
    Ok(SplitAccuracy {
        train: acc(Split::Train)?,
        test: acc(Split::Test)?,
    })
}

pub fn float_accuracy(s: &Session, m: &MlpModel) -> Result<SplitAccuracy> {
    let d = &s.data.dataset;
    let acc = |split| -> Result<f64> {
        Ok(seqmlp_core::dataset::accuracy(d, split, |i| Ok(m.infer(&d.normalized(i))?.class))?)
    };
    Ok(SplitAccuracy {
        train: acc(Split::Train)?,
        test: acc(Split::Test)?,
    })
}

pub fn stage_train(s: &Session) -> Result<MlpModel> {
    let path = s.artifacts.model();
    let run = || -> Result<MlpModel> {
        let out = train(&s.data.dataset, &s.config.train_config())?;
        log::info!(
            "train: hidden {}, train accuracy {:.4}",
            s.config.train.hidden,
            out.train_accuracy
        );
        write_json(&path, &ModelJson::from(&out.model))?;
        Ok(out.model)
    };
    run().map_err(stage_err(Stage::Train, &path))
}

pub fn stage_quantize(s: &Session, model: &MlpModel) -> Result<QuantizedModel> {
    let path = s.artifacts.quantized();
    let run = || -> Result<QuantizedModel> {
        let calibration: Vec<Vec<u8>> = s.indices(Split::Train).iter().map(|&i| s.codes[i].clone()).collect();
        let q = quantize_model(model, &s.config.quant_options(), &calibration)?;
        log::info!("quantize: T_hidden {}", q.spec.t_hidden);
        write_json(&path, &QuantizedJson::from(&q))?;
        Ok(q)
    };
    run().map_err(stage_err(Stage::Quantize, &path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfpSummary {
    pub enabled: bool,
    pub threshold: f64,
    pub threshold_met: bool,
    /// Original feature indices, most relevant first.
    pub ranking: Vec<usize>,
    pub relevance: Vec<f64>,
    pub prefix_accuracies: Vec<f64>,
    pub kept_indices: Vec<usize>,
    pub kept_names: Vec<String>,
    pub kept_fraction: f64,
}

pub fn stage_prune(s: &Session, q: &QuantizedModel) -> Result<(QuantizedModel, RfpSummary)> {
    let path = s.artifacts.pruned();
    let run = || -> Result<(QuantizedModel, RfpSummary)> {
        let names = s.data.dataset.feature_names();
        let (model, summary) = if s.config.rfp.enabled {
            let r = prune(q, &s.full_rows(Split::Train), &s.labels(Split::Train), s.config.rfp.threshold)?;
            let summary = RfpSummary {
                enabled: true,
                threshold: r.threshold,
                threshold_met: r.threshold_met,
                ranking: r.ranking.order.iter().map(|&p| q.kept_input_indices[p]).collect(),
                relevance: r.ranking.relevance.clone(),
                prefix_accuracies: r.prefix_accuracies.clone(),
                kept_names: r.kept_indices.iter().map(|&i| names[i].clone()).collect(),
                kept_fraction: r.kept_indices.len() as f64 / q.n_inputs() as f64,
                kept_indices: r.kept_indices,
            };
            (r.model, summary)
        } else {
            let summary = RfpSummary {
                enabled: false,
                threshold: 0.0,
                threshold_met: true,
                ranking: q.kept_input_indices.clone(),
                relevance: vec![],
                prefix_accuracies: vec![],
                kept_indices: q.kept_input_indices.clone(),
                kept_names: q.kept_input_indices.iter().map(|&i| names[i].clone()).collect(),
                kept_fraction: 1.0,
            };
            (q.clone(), summary)
        };
        log::info!(
            "prune: kept {} of {} features ({:.1}%)",
            model.n_inputs(),
            q.n_inputs(),
            100.0 * summary.kept_fraction
        );
        if !summary.threshold_met {
            log::warn!("prune: no prefix reached the threshold {:.4}", summary.threshold);
        }
        write_json(&path, &QuantizedJson::from(&model))?;
        write_json(&s.artifacts.rfp(), &summary)?;
        Ok((model, summary))
    };
    run().map_err(stage_err(Stage::Prune, &path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub approximated: usize,
    pub accuracy: f64,
    pub mask: Vec<bool>,
}

pub fn stage_approximate(s: &Session, q: &QuantizedModel) -> Result<(HybridPlan, bool)> {
    let path = s.artifacts.plan();
    let run = || -> Result<(HybridPlan, bool)> {
        let samples = s.circuit_inputs(q, Split::Train);
        let labels = s.labels(Split::Train);
        let (plan, warning, front) = if s.config.ga.enabled {
            let out = nsga2_select(q, &samples, &labels, &s.config.ga_config())?;
            let front: Vec<FrontEntry> = out
                .front
                .iter()
                .map(|p| FrontEntry {
                    approximated: p.approximated(),
                    accuracy: p.accuracy,
                    mask: p.mask.clone(),
                })
                .collect();
            (out.chosen, out.warning, front)
        } else {
            let mut p = HybridPlan::exact(q.n_neurons());
            p.baseline_accuracy = hybrid_accuracy(q, &p, &samples, &labels)?;
            p.accuracy = p.baseline_accuracy;
            (p, false, vec![])
        };
        log::info!(
            "approximate: {} of {} neurons single-cycle, train accuracy {:.4} (baseline {:.4})",
            plan.approximated(),
            q.n_neurons(),
            plan.accuracy,
            plan.baseline_accuracy
        );
        if warning && s.config.ga.enabled {
            log::warn!("approximate: no neuron can be approximated within the accuracy budget");
        }
        write_json(&path, &PlanJson::from(&plan))?;
        write_json(&s.artifacts.front(), &front)?;
        Ok((plan, warning))
    };
    run().map_err(stage_err(Stage::Approximate, &path))
}

/// Data-parallel [`CircuitModel::batch_eval`]; the result is identical.
pub fn par_batch_eval(circuit: &CircuitModel, samples: &[Vec<u8>], labels: &[usize]) -> Result<BatchResult> {
    if samples.is_empty() {
        return Err(seqmlp_core::Error::EmptySplit.into());
    }
    if samples.len() != labels.len() {
        return Err(seqmlp_core::Error::DimensionMismatch {
            expected: samples.len(),
            got: labels.len(),
        }
        .into());
    }
    let correct = samples
        .par_iter()
        .zip(labels)
        .map(|(s, &l)| circuit.classify(s).map(|r| (r.class == l) as usize))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(BatchResult {
        accuracy: correct as f64 / samples.len() as f64,
        correct,
        samples: samples.len(),
        total_cycles: samples.len() as u64 * circuit.latency() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub latency_cycles: u32,
    pub train: SplitEval,
    pub test: SplitEval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub accuracy: f64,
    pub samples: usize,
    pub total_cycles: u64,
}

pub fn stage_simulate(s: &Session, q: &QuantizedModel, plan: &HybridPlan) -> Result<SimulationSummary> {
    let path = s.artifacts.simulation();
    let run = || -> Result<SimulationSummary> {
        let circuit = build_circuit(q, plan)?;
        let eval = |split| -> Result<SplitEval> {
            let samples = s.circuit_inputs(q, split);
            let labels = s.labels(split);
            let r = par_batch_eval(&circuit, &samples, &labels)?;
            let offline = hybrid_accuracy(q, plan, &samples, &labels)?;
            if offline != r.accuracy {
                return Err(seqmlp_core::Error::PlanMismatch(format!(
                    "simulated accuracy {} differs from offline evaluation {offline}",
                    r.accuracy
                ))
                .into());
            }
            Ok(SplitEval {
                accuracy: r.accuracy,
                samples: r.samples,
                total_cycles: r.total_cycles,
            })
        };
        let summary = SimulationSummary {
            latency_cycles: circuit.latency(),
            train: eval(Split::Train)?,
            test: eval(Split::Test)?,
        };
        let first = s
            .indices(Split::Test)
            .first()
            .or_else(|| s.indices(Split::Train).first())
            .copied()
            .unwrap_or(0);
        let r = circuit.run_inference(&q.select_inputs(&s.codes[first]))?;
        error::write(&s.artifacts.trace(), trace_jsonl(&circuit, &r.trace.expect("traced run").snapshots))?;
        log::info!(
            "simulate: latency {} cycles, train {:.4}, test {:.4}",
            summary.latency_cycles,
            summary.train.accuracy,
            summary.test.accuracy
        );
        write_json(&path, &summary)?;
        Ok(summary)
    };
    run().map_err(stage_err(Stage::Simulate, &path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub tech: BTreeMap<String, f64>,
    pub sequential_exact: CostJson,
    pub sequential_hybrid: CostJson,
    pub combinational: CostJson,
}

pub fn tech_map(tech: &TechLibrary) -> BTreeMap<String, f64> {
    TechLibrary::KEYS
        .iter()
        .map(|k| (k.to_string(), tech.get(k).unwrap()))
        .collect()
}

pub fn stage_cost(s: &Session, q: &QuantizedModel, plan: &HybridPlan) -> Result<CostSummary> {
    let path = s.artifacts.cost();
    let run = || -> Result<CostSummary> {
        let t = &s.tech;
        let exact = circuit_cost(&build_circuit(q, &HybridPlan::exact(q.n_neurons()))?, t)?;
        let hybrid = circuit_cost(&build_circuit(q, plan)?, t)?;
        let comb = combinational_baseline_cost(q, t)?;
        log::info!(
            "cost: area exact {:.1}, hybrid {:.1}, combinational {:.1}",
            exact.area,
            hybrid.area,
            comb.area
        );
        let summary = CostSummary {
            tech: tech_map(t),
            sequential_exact: CostJson::new(&exact, t),
            sequential_hybrid: CostJson::new(&hybrid, t),
            combinational: CostJson::new(&comb, t),
        };
        write_json(&path, &summary)?;
        Ok(summary)
    };
    run().map_err(stage_err(Stage::Cost, &path))
}

pub fn write_bundle(dir: &Path, bundle: &RtlBundle) -> Result<()> {
    for f in bundle.files.iter().chain(bundle.testbench.as_ref()) {
        error::write(&dir.join(&f.name), &f.contents)?;
    }
    error::write(&dir.join("manifest.json"), bundle.manifest_json())
}

pub fn stage_emit(s: &Session, q: &QuantizedModel, plan: &HybridPlan) -> Result<RtlBundle> {
    let dir = s.artifacts.rtl();
    let run = || -> Result<RtlBundle> {
        let circuit = build_circuit(q, plan)?;
        let vectors: Vec<Vec<u8>> = s
            .circuit_inputs(q, Split::Test)
            .into_iter()
            .take(s.config.emit.testbench_vectors)
            .collect();
        let expected = vectors
            .iter()
            .map(|v| Ok(circuit.run_inference(v)?.class))
            .collect::<Result<Vec<usize>>>()?;
        let tb = emit_testbench(&circuit, &vectors, &expected)?;
        let bundle = emit_rtl(&circuit)?.with_testbench(tb);
        write_bundle(&dir, &bundle)?;
        log::info!("emit: {} files, bundle {}", bundle.manifest.len(), &bundle.bundle_hash()[..16]);
        Ok(bundle)
    };
    run().map_err(stage_err(Stage::Emit, &dir))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAccuracies {
    pub float: SplitAccuracy,
    pub quantized: SplitAccuracy,
    pub pruned: SplitAccuracy,
    pub hybrid: SplitAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub seed: u64,
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub accuracy: StageAccuracies,
    pub t_hidden: u32,
    pub kept_features: usize,
    pub kept_fraction: f64,
    pub neurons: usize,
    pub approximated_neurons: usize,
    pub max_drop: f64,
    pub ga_warning: bool,
    pub latency_cycles: u32,
    pub cost: CostSummary,
    pub rtl_bundle_sha256: String,
}

/// Load a stage artifact written by an earlier run.
pub fn load_model(path: &Path) -> Result<MlpModel> {
    Ok(read_json::<ModelJson>(path)?.try_into()?)
}

pub fn load_quantized(path: &Path) -> Result<QuantizedModel> {
    Ok(read_json::<QuantizedJson>(path)?.try_into()?)
}

pub fn load_plan(path: &Path) -> Result<HybridPlan> {
    Ok(read_json::<PlanJson>(path)?.try_into()?)
}

/// Run stages in order up to and including `last`. Returns the report only
/// when every stage ran.
pub fn run_until(config: PipelineConfig, last: Stage) -> Result<Option<RunReport>> {
    let s = Session::open(config)?;
    let model = stage_train(&s)?;
    if last == Stage::Train {
        return Ok(None);
    }
    let quantized = stage_quantize(&s, &model)?;
    if last == Stage::Quantize {
        return Ok(None);
    }
    let (pruned, rfp) = stage_prune(&s, &quantized)?;
    if last == Stage::Prune {
        return Ok(None);
    }
    let (plan, warning) = stage_approximate(&s, &pruned)?;
    if last == Stage::Approximate {
        return Ok(None);
    }
    let sim = stage_simulate(&s, &pruned, &plan)?;
    if last == Stage::Simulate {
        return Ok(None);
    }
    let cost = stage_cost(&s, &pruned, &plan)?;
    if last == Stage::Cost {
        return Ok(None);
    }
    let bundle = stage_emit(&s, &pruned, &plan)?;

    let report_path = s.artifacts.report();
    let report = RunReport {
        dataset: s
            .config
            .dataset
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        seed: s.config.seed,
        samples: s.data.dataset.n_samples(),
        features: s.data.dataset.n_features(),
        classes: s.data.dataset.n_classes(),
        accuracy: StageAccuracies {
            float: float_accuracy(&s, &model)?,
            quantized: quantized_accuracy(&s, &quantized)?,
            pruned: quantized_accuracy(&s, &pruned)?,
            hybrid: SplitAccuracy {
                train: sim.train.accuracy,
                test: sim.test.accuracy,
            },
        },
        t_hidden: quantized.spec.t_hidden,
        kept_features: pruned.n_inputs(),
        kept_fraction: rfp.kept_fraction,
        neurons: pruned.n_neurons(),
        approximated_neurons: plan.approximated(),
        max_drop: plan.max_drop,
        ga_warning: warning,
        latency_cycles: sim.latency_cycles,
        cost,
        rtl_bundle_sha256: bundle.bundle_hash(),
    };
    write_json(&report_path, &report).map_err(stage_err(Stage::Emit, &report_path))?;
    Ok(Some(report))
}

pub fn run_pipeline(config: PipelineConfig) -> Result<RunReport> {
    Ok(run_until(config, Stage::Emit)?.expect("all stages ran"))
}

/// Run a single stage, reading its inputs from the artifacts of earlier stages.
pub fn run_stage(config: PipelineConfig, stage: Stage) -> Result<()> {
    let s = Session::open(config)?;
    let a = &s.artifacts;
    let need = |p: PathBuf, f: fn(&Path) -> Result<_>| f(&p).map_err(stage_err(stage, &p));
    match stage {
        Stage::Train => {
            stage_train(&s)?;
        }
        Stage::Quantize => {
            let m = load_model(&a.model()).map_err(stage_err(stage, &a.model()))?;
            stage_quantize(&s, &m)?;
        }
        Stage::Prune => {
            stage_prune(&s, &need(a.quantized(), load_quantized)?)?;
        }
        Stage::Approximate => {
            stage_approximate(&s, &need(a.pruned(), load_quantized)?)?;
        }
        Stage::Simulate | Stage::Cost | Stage::Emit => {
            let q = need(a.pruned(), load_quantized)?;
            let plan = load_plan(&a.plan()).map_err(stage_err(stage, &a.plan()))?;
            match stage {
                Stage::Simulate => {
                    stage_simulate(&s, &q, &plan)?;
                }
                Stage::Cost => {
                    stage_cost(&s, &q, &plan)?;
                }
                _ => {
                    stage_emit(&s, &q, &plan)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqmlp_core::quant::QuantSpec;
    use seqmlp_core::synth::{random_codes, random_quantized_model};
    use rand::SeedableRng;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("synth".parse::<Stage>().is_err());
    }

    #[test]
    fn parallel_batch_matches_sequential() {
        let q = random_quantized_model(10, 4, 3, QuantSpec { t_hidden: 7, ..QuantSpec::default() }, 2);
        let c = build_circuit(&q, &HybridPlan::exact(7)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<Vec<u8>> = (0..300).map(|_| random_codes(10, 4, &mut rng)).collect();
        let labels: Vec<usize> = (0..300).map(|i| i % 3).collect();
        assert_eq!(par_batch_eval(&c, &samples, &labels).unwrap(), c.batch_eval(&samples, &labels).unwrap());
        assert!(par_batch_eval(&c, &[], &[]).is_err());
    }
}
