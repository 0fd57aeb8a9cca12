//! Seeded inputs shared by the benchmarks.

use spca_core::synth::{generate_ground_truth, sample_observation, NoiseSpec};
use spca_core::SymMatrix;

/// Masked noisy observation of a planted instance with gap 20.
pub fn observed(d: usize, s: usize, p: f64, seed: u64) -> SymMatrix {
    let gt = generate_ground_truth(d, s, 20.0, seed).expect("valid sizes");
    let noise = NoiseSpec::new(5.0, 0.1).expect("valid noise");
    sample_observation(&gt.m_star, p, &noise, seed ^ 0x5eed).expect("valid p").m
}
