mod common;

use proptest::prelude::*;
use rand::Rng;
use spca_core::linalg::{project_simplex, project_spectraplex, soft_threshold, sym_eig};
use spca_core::synth::{generate_ground_truth, rng_from_seed, sample_observation};
use spca_core::{NoiseSpec, SymMatrix};

fn sym_strategy(d: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-5.0f64..5.0, d * d)
        .prop_map(move |v| SymMatrix::from_upper_fn(d, |i, j| v[i * d + j]).unwrap())
}

fn random_feasible<R: Rng>(rng: &mut R, basis: &[Vec<f64>]) -> SymMatrix {
    let mut w: Vec<f64> = basis.iter().map(|_| -rng.random::<f64>().ln()).collect();
    let tot: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= tot);
    let terms: Vec<(f64, &[f64])> = w.iter().zip(basis).map(|(&a, v)| (a, v.as_slice())).collect();
    SymMatrix::from_outer_sum(basis.len(), &terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_in_the_spectraplex(s in sym_strategy(6)) {
        let p = project_spectraplex(&s).unwrap();
        prop_assert!((p.trace() - 1.0).abs() < 1e-10);
        prop_assert!(sym_eig(&p).unwrap().lambda_min() > -1e-10);
        let pp = project_spectraplex(&p).unwrap();
        prop_assert!(pp.frobenius_dist(&p) < 1e-9);
    }

    #[test]
    fn projection_is_nonexpansive(a in sym_strategy(5), b in sym_strategy(5)) {
        let pa = project_spectraplex(&a).unwrap();
        let pb = project_spectraplex(&b).unwrap();
        prop_assert!(pa.frobenius_dist(&pb) <= a.frobenius_dist(&b) + 1e-10);
    }

    #[test]
    fn projection_agrees_with_independent_oracle(s in sym_strategy(6)) {
        let p = project_spectraplex(&s).unwrap();
        let q = common::project_spectraplex(&common::to_na(&s));
        let diff = (common::to_na(&p) - q).norm();
        prop_assert!(diff < 1e-9, "diff {}", diff);
    }

    #[test]
    fn simplex_projection_is_feasible_and_order_preserving(v in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let w = project_simplex(&v);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] > v[j] { prop_assert!(w[i] >= w[j]); }
            }
        }
    }

    #[test]
    fn norms_ignore_simultaneous_permutation(s in sym_strategy(5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let a = s.norms().unwrap();
        let b = s.permuted(&perm).norms().unwrap();
        for (x, y) in [(a.spectral, b.spectral), (a.frobenius, b.frobenius), (a.l11, b.l11), (a.max, b.max),
                       (a.two_inf, b.two_inf), (a.one_inf, b.one_inf), (a.inf_two, b.inf_two)] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(s in sym_strategy(4), t in 0.0f64..3.0) {
        let y = soft_threshold(&s, t).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (s.get(i, j), y.get(i, j));
                prop_assert!(b.abs() <= a.abs() && a * b >= 0.0);
                prop_assert!(((a.abs() - b.abs()) - t.min(a.abs())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(s in sym_strategy(7)) {
        let e = sym_eig(&s).unwrap();
        prop_assert!(e.max_residual(&s) <= 1e-10 * s.frobenius().max(1.0));
        prop_assert!(e.orthonormality_error() <= 1e-10);
    }
}

/// Projection beats 1000 random feasible points per input on 100 inputs.
#[test]
fn projection_is_closest_among_sampled_feasible_points() {
    let mut rng = rng_from_seed(2024);
    for _ in 0..100 {
        let vals: Vec<f64> = (0..36).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = SymMatrix::from_upper_fn(6, |i, j| vals[i * 6 + j]).unwrap();
        let p = project_spectraplex(&s).unwrap();
        let best = s.frobenius_dist(&p);
        let basis = sym_eig(&SymMatrix::from_upper_fn(6, |i, j| vals[j * 6 + i] + (i == j) as u8 as f64).unwrap())
            .unwrap()
            .vectors;
        let own = sym_eig(&s).unwrap().vectors;
        for k in 0..1000 {
            let y = random_feasible(&mut rng, if k % 2 == 0 { &basis } else { &own });
            let dist = s.frobenius_dist(&y);
            if y.frobenius_dist(&p) > 1e-9 {
                assert!(best < dist, "{best} !< {dist}");
            }
        }
    }
}

#[test]
fn truncated_noise_variance_matches_closed_form() {
    for (b, sig) in [(5.0, 0.1), (0.5, 1.0), (1.0, 1.0)] {
        let spec = NoiseSpec::new(b, sig).unwrap();
        let mut rng = rng_from_seed(9);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = spec.sample(&mut rng);
            assert!(x.abs() <= b);
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((var / spec.variance() - 1.0).abs() < 0.01, "B={b} sigma={sig}: {var} vs {}", spec.variance());
    }
}

#[test]
fn complete_noiseless_observation_recovers_the_leading_pair() {
    let gt = generate_ground_truth(40, 6, 5.0, 8).unwrap();
    let obs = sample_observation(&gt.m_star, 1.0, &NoiseSpec::noiseless(), 1).unwrap();
    let e = sym_eig(&obs.m).unwrap();
    assert!((e.values[0] - gt.eigenvalues[0]).abs() < 1e-8);
    let dot: f64 = e.vectors[0].iter().zip(gt.u1()).map(|(a, b)| a * b).sum();
    assert!((dot.abs() - 1.0).abs() < 1e-8);
}
