// SPDX-License-Identifier: Apache-2.0

//! Core algorithms for lowering a small multilayer perceptron into a
//! register-minimized sequential classifier circuit.
//!
//! The pipeline is: float [`model`] → pow2 [`quant`] → feature pruning
//! ([`rfp`]) → single-cycle neuron selection ([`approx`], [`nsga2`]) →
//! cycle-accurate [`sim`]ulation → [`cost`] estimation → [`rtl`] emission.
//!
//! Everything here is `no_std` + `alloc`. File formats, parallel evaluation
//! and the command line live in the `seqmlp` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod approx;
pub mod cost;
pub mod dataset;
mod error;
pub mod model;
pub mod nsga2;
pub mod quant;
pub mod rfp;
pub mod rtl;
pub mod sim;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

/// Number of bits needed to represent every value in `0..=max`.
///
/// `bits_for(0) == 0`, `bits_for(1) == 1`, `bits_for(7) == 3`, `bits_for(8) == 4`.
pub fn bits_for(max: u64) -> u32 {
    u64::BITS - max.leading_zeros()
}

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        bits_for(n - 1)
    }
}
