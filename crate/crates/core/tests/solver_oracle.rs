mod common;

use nalgebra::DMatrix;
use spca_core::sdp::{solve, SdpConfig};
use spca_core::synth::rng_from_seed;
use spca_core::SymMatrix;
use rand::Rng;

pub fn random_sym(d: usize, seed: u64) -> SymMatrix {
    let mut rng = rng_from_seed(seed);
    let vals: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::from_upper_fn(d, |i, j| vals[i * d + j]).unwrap()
}

#[test]
fn admm_matches_certified_bracket_on_small_instances() {
    for seed in 0..6u64 {
        for rho in [0.05, 0.2] {
            let m = random_sym(4, 100 + seed);
            let cfg = SdpConfig { tol_primal: 1e-9, tol_dual: 1e-9, ..SdpConfig::with_rho(rho) };
            let sol = solve(&m, &cfg).unwrap();
            assert!(sol.converged);
            let (lo, hi) = common::bracket_optimum(&common::to_na(&m), rho, 1e-7);
            assert!(hi - lo < 1e-6, "bracket too wide: {lo} {hi}");
            assert!(sol.objective >= lo - 1e-5 && sol.objective <= hi + 1e-5, "{} not in [{lo}, {hi}]", sol.objective);
        }
    }
}

#[test]
fn bracket_is_exact_without_penalty() {
    let m = random_sym(4, 3);
    let na: DMatrix<f64> = common::to_na(&m);
    let (lo, hi) = common::bracket_optimum(&na, 1e-12, 1e-9);
    let l1 = common::lambda_max(&na);
    assert!(lo <= l1 + 1e-9 && hi >= l1 - 1e-9 && hi - lo < 1e-6);
}
