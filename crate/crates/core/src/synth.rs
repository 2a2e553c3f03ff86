// SPDX-License-Identifier: Apache-2.0

//! Seeded generators for synthetic models and datasets, used by the test
//! suites and by the model-size cost sweep.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{plan_candidates, HybridPlan};
use crate::dataset::{Dataset, SplitConfig};
use crate::quant::{Layer, Pow2Weight, QNeuron, QuantSpec, QuantizedModel};
use crate::sim::{build_circuit, CircuitModel};
use crate::Result;

/// Random pow2 model. Roughly one weight in eight is zero-flagged; biases are
/// uniform over a quarter of each layer's bias range.
pub fn random_quantized_model(
    n_inputs: usize,
    n_hidden: usize,
    n_classes: usize,
    spec: QuantSpec,
    seed: u64,
) -> QuantizedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = |fan_in: usize, count: usize, layer: Layer, rng: &mut ChaCha8Rng| {
        let limit = spec.bias_limit(layer) / 4;
        (0..count)
            .map(|_| {
                let weights = (0..fan_in)
                    .map(|_| {
                        if rng.random_range(0..8) == 0 {
                            Pow2Weight::ZERO
                        } else {
                            Pow2Weight::new(rng.random(), rng.random_range(spec.e_min()..=spec.e_max))
                        }
                    })
                    .collect();
                QNeuron::new(weights, rng.random_range(-limit..=limit), &spec)
            })
            .collect::<Vec<_>>()
    };
    let hidden = layer(n_inputs, n_hidden, Layer::Hidden, &mut rng);
    let outputs = layer(n_hidden, n_classes, Layer::Output, &mut rng);
    QuantizedModel {
        spec,
        kept_input_indices: (0..n_inputs).collect(),
        hidden,
        outputs,
    }
}

/// Uniformly random input codes.
pub fn random_codes(n: usize, bits: u32, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..(1u32 << bits)) as u8).collect()
}

/// Two or more Gaussian-ish blobs, one per class, with centres spread far
/// enough apart that the classes are linearly separable.
pub fn blobs(
    n_per_class: usize,
    n_features: usize,
    n_classes: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..n_classes)
        .map(|c| {
            (0..n_features)
                .map(|j| if (j + c) % n_classes == 0 { 8.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..n_per_class {
            // sum of uniforms: bounded noise in [-1.5, 1.5]
            let row = centre
                .iter()
                .map(|&m| m + (0..3).map(|_| rng.random_range(-0.5..0.5)).sum::<f64>())
                .collect();
            features.push(row);
            labels.push(c);
        }
    }
    let names: Vec<String> = (0..n_features).map(|j| format!("x{j}")).collect();
    Dataset::new(
        names,
        features,
        labels,
        SplitConfig {
            train_fraction: 0.7,
            seed,
        },
    )
}
/// A named reference circuit together with the model it was built from.
pub struct Fixture {
    pub name: &'static str,
    pub model: QuantizedModel,
    pub circuit: CircuitModel,
}

/// The 2-2-2 hand-written model behind the `toy_222` fixture.
pub fn toy_model() -> QuantizedModel {
    let s = QuantSpec { t_hidden: 3, ..QuantSpec::default() };
    let w = |neg, p: i32| Pow2Weight::new(neg, p - 7);
    QuantizedModel {
        spec: s,
        kept_input_indices: alloc::vec![0, 1],
        hidden: alloc::vec![
            QNeuron::new(alloc::vec![w(false, 2), w(true, 1)], 3, &s),
            QNeuron::new(alloc::vec![w(false, 0), w(false, 3)], -10, &s),
        ],
        outputs: alloc::vec![
            QNeuron::new(alloc::vec![w(false, 1), w(true, 0)], 0, &s),
            QNeuron::new(alloc::vec![w(true, 2), w(false, 2)], 1, &s),
        ],
    }
}

fn fixture(name: &'static str, model: QuantizedModel, seed: u64, pick: impl Fn(usize) -> bool) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<u8>> = (0..100).map(|_| random_codes(model.n_inputs(), 4, &mut rng)).collect();
    let candidates = plan_candidates(&model, &samples).expect("fixture samples");
    let mask: Vec<bool> = candidates.iter().enumerate().map(|(i, c)| c.is_some() && pick(i)).collect();
    let plan = HybridPlan::from_mask(&mask, &candidates).expect("fixture plan");
    let circuit = build_circuit(&model, &plan).expect("fixture circuit");
    Fixture { name, model, circuit }
}

/// Five circuits covering exact, hidden-approximated and output-approximated
/// datapaths.
pub fn fixtures() -> Vec<Fixture> {
    let spec = QuantSpec { t_hidden: 8, ..QuantSpec::default() };
    let a = random_quantized_model(9, 4, 3, spec, 3);
    let b = random_quantized_model(14, 5, 2, spec, 8);
    let c = random_quantized_model(6, 3, 4, spec, 21);
    alloc::vec![
        fixture("toy_222", toy_model(), 0, |_| false),
        fixture("exact_9_4_3", a.clone(), 0, |_| false),
        fixture("hidden_14_5_2", b, 1, |i| i < 5 && i % 2 == 0),
        fixture("output_6_3_4", c, 2, |i| i >= 3),
        fixture("all_9_4_3", a, 3, |_| true),
    ]
}

