//! Independent reference implementations used by the integration tests.
//! Everything here goes through nalgebra, never through the crate's own
//! linear algebra.

#![allow(dead_code)]

pub mod appendix;
pub mod theory_oracle;

use nalgebra::{DMatrix, SymmetricEigen};
use spca_core::SymMatrix;

pub fn to_na(m: &SymMatrix) -> DMatrix<f64> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m.get(i, j))
}

pub fn lambda_max(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.max()
}

/// Leading eigenpair, sign fixed so the largest-magnitude entry is positive.
pub fn leading(a: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let e = SymmetricEigen::new(a.clone());
    let k = e.eigenvalues.imax();
    let mut v: Vec<f64> = e.eigenvectors.column(k).iter().copied().collect();
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (e.eigenvalues[k], v)
}

fn simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

pub fn project_spectraplex(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let w = simplex(e.eigenvalues.as_slice());
    let q = &e.eigenvectors;
    q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w)) * q.transpose()
}

pub fn penalized_objective(m: &DMatrix<f64>, x: &DMatrix<f64>, rho: f64) -> f64 {
    m.component_mul(x).sum() - rho * x.abs().sum()
}

/// Certified bracket `[lower, upper]` on the optimum of
/// `max <M, X> - rho ||X||_1 over the spectraplex`.
///
/// Accelerated projected gradient on a Huber-smoothed penalty with a
/// decreasing smoothing parameter. Any iterate gives a lower bound, and any
/// `Z` with `|Z_ij| <= 1` gives the upper bound `lambda_max(M - rho Z)`.
pub fn bracket_optimum(m: &DMatrix<f64>, rho: f64, gap_target: f64) -> (f64, f64) {
    let d = m.nrows();
    let mut x = DMatrix::<f64>::identity(d, d) / d as f64;
    let mut best_lo = penalized_objective(m, &x, rho);
    let mut best_hi = lambda_max(m);
    let mut mu = 1e-2;
    while mu >= 1e-10 {
        let step = mu / rho.max(1e-300);
        let mut y = x.clone();
        let mut t = 1.0f64;
        for k in 0..20_000 {
            let z = y.map(|v| (v / mu).clamp(-1.0, 1.0));
            let grad = m - z * rho;
            let x_next = project_spectraplex(&(&y + grad * step));
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
            x = x_next;
            t = t_next;
            if k % 50 == 0 {
                best_lo = best_lo.max(penalized_objective(m, &x, rho));
                let zx = x.map(|v| (v / mu).clamp(-1.0, 1.0));
                best_hi = best_hi.min(lambda_max(&(m - zx * rho)));
                if best_hi - best_lo < gap_target {
                    return (best_lo, best_hi);
                }
            }
        }
        mu /= 10.0;
    }
    (best_lo, best_hi)
}

/// The library's report flattened to the oracle's names.
pub fn library_values(r: &spca_core::TheoryReport) -> theory_oracle::Values {
    let t = &r.theorem1;
    let k = &t.constants;
    let c1 = &r.corollary1;
    let c2 = r.corollary2.as_ref().expect("rank-one conditions evaluated");
    vec![
        ("mu0", r.coherence.mu0),
        ("mu1", r.coherence.mu1),
        ("mu2", r.coherence.mu2),
        ("mu3", r.coherence.mu3),
        ("r1", k.r1),
        ("r2", k.r2),
        ("r3", k.r3),
        ("r4", k.r4),
        ("r5", k.r5.unwrap()),
        ("r6", k.r6.unwrap()),
        ("k1", k.k1),
        ("k2", k.k2),
        ("k3", k.k3.unwrap()),
        ("thm1_sign", t.sign),
        ("thm1_rho_lower", t.rho_lower),
        ("thm1_eigen", t.eigen),
        ("thm1_eigen_lhs", t.eigen_lhs),
        ("thm1_factor1", t.eigen_factor1),
        ("thm1_factor2", t.eigen_factor2),
        ("success_prob", r.success_prob_bound),
        ("rescaled", r.rescaled),
        ("cor1_support", c1.support_incoherence),
        ("cor1_offblock", c1.offblock_magnitude),
        ("cor1_complement", c1.complement_magnitude),
        ("cor1_sample", c1.sample_complexity),
        ("cor1_rho", c1.rho_scale),
        ("a1", c2.a1),
        ("a2", c2.a2),
        ("cor2_gate", c2.gate),
        ("cor2_sign", c2.sign_ratio),
        ("cor2_spread", c2.spread_ratio),
        ("cor2_noise", c2.noise_bound),
        ("cor2_rho_lower", c2.rho_lower),
        ("cor2_rho_upper", c2.rho_upper),
    ]
}

/// Largest scaled disagreement `|a - b| / max(1, |b|)` and the name where it
/// occurs.
pub fn worst_mismatch(lib: &theory_oracle::Values, oracle: &theory_oracle::Values) -> (&'static str, f64) {
    assert_eq!(lib.len(), oracle.len());
    lib.iter()
        .zip(oracle)
        .map(|((n, a), (m, b))| {
            assert_eq!(n, m);
            (*n, (a - b).abs() / b.abs().max(1.0))
        })
        .fold(("", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Theory report and oracle values for one experiment-style instance.
pub fn theory_pair(
    gt: &spca_core::GroundTruth,
    p: f64,
    noise: &spca_core::NoiseSpec,
    rho: f64,
) -> (theory_oracle::Values, theory_oracle::Values) {
    let model = spca_core::ModelParams { p, sigma2: noise.variance(), bound: noise.bound };
    let rep = spca_core::theory::theory_report(&gt.m_star, &gt.support, gt.u1(), &model, rho, 1.0).unwrap();
    let m = to_na(&gt.m_star);
    let oracle = theory_oracle::compute(&theory_oracle::Inputs {
        m: &m,
        support: &gt.support,
        u1: gt.u1(),
        p,
        sigma2: model.sigma2,
        bound: model.bound,
        rho,
        c: 1.0,
    });
    (library_values(&rep), oracle)
}
