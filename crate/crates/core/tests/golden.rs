//! Coherent and incoherent off-support blocks, d = 20, s = 10, J = {0..9}.

mod common;

use spca_core::sdp::{solve, SdpConfig};
use spca_core::{sym_eig, SymMatrix};

use common::appendix::*;

fn in_j(i: usize) -> bool {
    i < S
}

fn leading(m: &SymMatrix) -> Vec<f64> {
    sym_eig(m).unwrap().vectors[0].clone()
}

#[test]
fn coherent_example_entries() {
    let m = coherent_complete();
    assert_eq!(m.get(8, 8), 2.0);
    assert_eq!(m.get(8, 9), 0.0);
    assert_eq!(m.get(8, 10), 1.0);
    assert_eq!(m.get(9, 10), -1.0);
    assert_eq!(m.get(10, 10), 1.0);
    assert_eq!(m.get(0, 10), 0.0);
}

#[test]
fn coherent_example_keeps_its_support_when_entries_go_missing() {
    let full = coherent_complete();
    let masked = coherent_masked();
    assert_eq!(full.frobenius_dist(&masked), 1.0);
    for m in [&full, &masked] {
        let u = leading(m);
        for (i, x) in u.iter().enumerate() {
            if in_j(i) {
                assert!((x - 0.31623).abs() <= 5e-4, "{i}: {x}");
            } else {
                assert!(x.abs() < 1e-12, "{i}: {x}");
            }
        }
        let sol = solve(m, &SdpConfig::with_rho(0.01)).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.support, (0..S).collect::<Vec<_>>());
    }
}

#[test]
fn incoherent_example_loses_its_support() {
    let full = incoherent_complete();
    let u = leading(&full);
    assert!(u[..S].iter().all(|x| (x - 0.31623).abs() <= 5e-4));
    assert!(u[S..].iter().all(|x| x.abs() < 1e-12));

    let masked = incoherent_masked();
    let u = leading(&masked);
    let off: Vec<f64> = u[S..].iter().map(|x| x.abs()).collect();
    assert!(off.iter().all(|&x| x >= 1e-3), "{off:?}");
    assert!((u[10].abs() - 0.0115).abs() < 5e-4);
    assert!((u[0] - 0.3172).abs() < 5e-4 && (u[1] - 0.3152).abs() < 5e-4);

    // independent check of the perturbed eigenvector
    let (_, v) = common::leading(&common::to_na(&masked));
    for (a, b) in u.iter().zip(&v) {
        assert!((a - b).abs() < 1e-10);
    }
}
