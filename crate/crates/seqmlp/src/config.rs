// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration (TOML). Relative paths resolve against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seqmlp_core::nsga2::GaConfig;
use seqmlp_core::quant::{QuantOptions, Truncation};
use seqmlp_core::train::{Loss, TrainConfig};

use crate::dataset_io::DatasetSchema;
use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSection {
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: DatasetSchema,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_train_fraction() -> f64 {
    0.7
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    CrossEntropy,
    MeanSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss: LossName,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            hidden: d.hidden,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            loss: LossName::CrossEntropy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    Static,
    Calibrated,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantSection {
    pub input_bits: u32,
    pub exponent_levels: u32,
    pub e_max: i32,
    pub qrelu_out_bits: u32,
    pub truncation: TruncationMode,
    /// Saturation budget for `calibrated`.
    pub max_saturation: f64,
    /// Truncation for `fixed`.
    pub t_hidden: u32,
    pub t_output: u32,
}

impl Default for QuantSection {
    fn default() -> Self {
        let d = QuantOptions::default();
        QuantSection {
            input_bits: d.input_bits,
            exponent_levels: d.exponent_levels,
            e_max: d.e_max,
            qrelu_out_bits: d.qrelu_out_bits,
            truncation: TruncationMode::Calibrated,
            max_saturation: 0.01,
            t_hidden: 0,
            t_output: d.t_output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfpSection {
    pub enabled: bool,
    /// Accuracy the kept prefix must reach; defaults to the quantized
    /// model's train accuracy.
    pub threshold: Option<f64>,
}

impl Default for RfpSection {
    fn default() -> Self {
        RfpSection {
            enabled: true,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub enabled: bool,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: Option<f64>,
    pub max_drop: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::default();
        GaSection {
            enabled: true,
            population: d.population,
            generations: d.generations,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            max_drop: d.max_drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    /// Technology file; the built-in relative library when absent.
    pub tech: Option<PathBuf>,
    /// Overrides the sequential clock period of the tech file.
    pub clock_period_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitSection {
    /// Test-split vectors written into the testbench.
    pub testbench_vectors: usize,
}

impl Default for EmitSection {
    fn default() -> Self {
        EmitSection { testbench_vectors: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub quant: QuantSection,
    #[serde(default)]
    pub rfp: RfpSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub emit: EmitSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        let base = origin.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.dataset.path);
        resolve(&mut cfg.out_dir);
        if let Some(t) = cfg.cost.tech.as_mut() {
            resolve(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&error::read_to_string(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(0.0 < self.dataset.train_fraction && self.dataset.train_fraction < 1.0) {
            return bad("dataset.train_fraction must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.ga.max_drop) {
            return bad("ga.max_drop must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.quant.max_saturation) {
            return bad("quant.max_saturation must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.train.hidden,
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            seed: self.seed,
            loss: match self.train.loss {
                LossName::CrossEntropy => Loss::CrossEntropy,
                LossName::MeanSquared => Loss::MeanSquared,
            },
        }
    }

    pub fn quant_options(&self) -> QuantOptions {
        let q = &self.quant;
        QuantOptions {
            input_bits: q.input_bits,
            exponent_levels: q.exponent_levels,
            e_max: q.e_max,
            qrelu_out_bits: q.qrelu_out_bits,
            truncation: match q.truncation {
                TruncationMode::Static => Truncation::Static,
                TruncationMode::Calibrated => Truncation::Calibrated {
                    max_saturation: q.max_saturation,
                },
                TruncationMode::Fixed => Truncation::Fixed(q.t_hidden),
            },
            t_output: q.t_output,
        }
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            population: self.ga.population,
            generations: self.ga.generations,
            crossover_rate: self.ga.crossover_rate,
            mutation_rate: self.ga.mutation_rate,
            seed: self.seed,
            max_drop: self.ga.max_drop,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::LabelColumn;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = PipelineConfig::parse("[dataset]\npath = \"d.csv\"\nlabel = \"y\"\n", Path::new("cfg/x.toml")).unwrap();
        assert_eq!(c.dataset.path, PathBuf::from("cfg/d.csv"));
        assert_eq!(c.out_dir, PathBuf::from("cfg/out"));
        assert_eq!(c.dataset.schema.label, LabelColumn::Name("y".into()));
        assert_eq!(c.ga.max_drop, 0.01);
        assert_eq!(c.train.hidden, 5);
        assert!(c.rfp.enabled);
    }

    #[test]
    fn label_by_index() {
        let c = PipelineConfig::parse("[dataset]\npath = \"/d.csv\"\nlabel = 3\ndrop = [\"a\"]\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.dataset.schema.label, LabelColumn::Index(3));
        assert_eq!(c.dataset.schema.drop, vec!["a".to_string()]);
        assert_eq!(c.dataset.path, PathBuf::from("/d.csv"));
    }

    #[test]
    fn unknown_keys_and_bad_ranges_fail() {
        assert!(PipelineConfig::parse("[dataset]\npath = \"d\"\nlabel = 0\n[ga]\nmax_dorp = 0.1\n", Path::new("x")).is_err());
        assert!(PipelineConfig::parse("[dataset]\npath = \"d\"\nlabel = 0\n[ga]\nmax_drop = 2.0\n", Path::new("x")).is_err());
    }
}
