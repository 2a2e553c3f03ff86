// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

use crate::approx::NeuronId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("split is empty")]
    EmptySplit,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("neuron {0} has fewer than two inputs with non-zero expected product")]
    Ineligible(NeuronId),
    #[error("plan does not match model: {0}")]
    PlanMismatch(String),
    #[error("input code supplied outside the input phase (cycle {0})")]
    UnexpectedInput(u32),
    #[error("missing input code during the input phase (cycle {0})")]
    MissingInput(u32),
    #[error("inference already finished at cycle {0}")]
    Finished(u32),
    #[error("width overflow: {0}")]
    WidthOverflow(String),
    #[error("test vector mismatch: {0}")]
    VectorMismatch(String),
}
