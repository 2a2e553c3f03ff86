// SPDX-License-Identifier: Apache-2.0

//! File formats, configuration, pipeline orchestration and reporting on top
//! of `seqmlp-core`.

pub mod compare;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod techfile;

pub use error::{Error, Result};
