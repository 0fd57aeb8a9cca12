//! Primal-dual witness for exact support recovery.
//!
//! Given a candidate support `J` with sign pattern `z`, the witness takes
//! `x` as the leading eigenvector of `M_JJ - rho z z^T` and
//! `w = M_{J^c,J} x / (rho ||x||_1)`. If `x` carries the sign pattern `z`,
//! `||w||_inf < 1`, the penalized block and full matrices share their top
//! eigenvalue and the block eigenvalue is simple, then `x x^T` (embedded on
//! `J x J`) is the unique optimizer of the penalized program and its diagonal
//! support is exactly `J`.

use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::sdp::SdpSolution;
use crate::synth::complement;

#[derive(Clone, Debug)]
pub struct WitnessTriple {
    /// Sorted 0-based support.
    pub support: Vec<usize>,
    pub complement: Vec<usize>,
    pub rho: f64,
    /// Sign pattern on the support, entries `+1` / `-1`.
    pub z_hat: Vec<f64>,
    /// Unit leading eigenvector of the penalized block.
    pub x_hat: Vec<f64>,
    /// Off-support dual vector, indexed like `complement`.
    pub w_hat: Vec<f64>,
    /// Top two eigenvalues of the penalized block (`lambda_2 = -inf` when `s = 1`).
    pub lambda_hat: f64,
    pub lambda_second: f64,
}

impl WitnessTriple {
    pub fn dim(&self) -> usize {
        self.support.len() + self.complement.len()
    }

    /// `x x^T` on `J x J`, zero elsewhere.
    pub fn primal(&self) -> SymMatrix {
        let mut v = vec![0.0; self.dim()];
        for (k, &i) in self.support.iter().enumerate() {
            v[i] = self.x_hat[k];
        }
        SymMatrix::from_outer_sum(self.dim(), &[(1.0, &v)]).expect("dimension is positive")
    }

    /// The interleaved vector `(z, w)` in the original coordinates.
    pub fn dual_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for (k, &i) in self.support.iter().enumerate() {
            v[i] = self.z_hat[k];
        }
        for (k, &i) in self.complement.iter().enumerate() {
            v[i] = self.w_hat[k];
        }
        v
    }

    /// Dual certificate `Z = (z, w)(z, w)^T`, paired with multiplier `lambda_hat`.
    pub fn dual(&self) -> SymMatrix {
        let v = self.dual_vector();
        SymMatrix::from_outer_sum(self.dim(), &[(1.0, &v)]).expect("dimension is positive")
    }

    /// `||w||_inf`, defined as 0 when the complement is empty.
    pub fn w_inf(&self) -> f64 {
        self.w_hat.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Builds the witness triple for support `support` (0-based) and its sign pattern.
pub fn construct(m: &SymMatrix, support: &[usize], signs: &[f64], rho: f64) -> Result<WitnessTriple> {
    let d = m.dim();
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid(format!("witness needs rho > 0, got {rho}"));
    }
    if support.is_empty() || support.len() != signs.len() {
        return invalid("support must be nonempty with one sign per index");
    }
    if support.windows(2).any(|w| w[0] >= w[1]) || support.iter().any(|&i| i >= d) {
        return invalid("support must be sorted, unique and within 0..d");
    }
    if signs.iter().any(|&z| z != 1.0 && z != -1.0) {
        return invalid("signs must be +1 or -1");
    }
    let comp = complement(d, support);
    let mut block = m.principal(support)?;
    block.add_outer(-rho, signs);
    let eig = sym_eig(&block)?;
    let mut x = eig.vectors[0].clone();
    let align: f64 = x.iter().zip(signs).map(|(a, z)| a * z).sum();
    if align < 0.0 {
        x.iter_mut().for_each(|a| *a = -*a);
    }
    let x_l1: f64 = x.iter().map(|a| a.abs()).sum();
    let off = m.block(&comp, support);
    let w = off.mat_vec(&x).into_iter().map(|v| v / (rho * x_l1)).collect();
    Ok(WitnessTriple {
        support: support.to_vec(),
        complement: comp,
        rho,
        z_hat: signs.to_vec(),
        x_hat: x,
        w_hat: w,
        lambda_hat: eig.values[0],
        lambda_second: eig.values.get(1).copied().unwrap_or(f64::NEG_INFINITY),
    })
}

fn one_based<S: Serializer>(idx: &Option<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match idx {
        Some(i) => s.serialize_some(&(i + 1)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCheck {
    pub pass: bool,
    /// Index (1-based in JSON) minimizing `z_i x_i`.
    #[serde(serialize_with = "one_based")]
    pub worst_index: Option<usize>,
    /// `min_i z_i x_i`; positive iff every sign matches.
    pub worst_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueCheck {
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenMatchCheck {
    pub block: f64,
    pub full: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub cond1_sign_match: SignCheck,
    pub cond2_winf: ValueCheck,
    pub cond3_eig_equal: EigenMatchCheck,
    pub cond4_gap: ValueCheck,
    pub certified: bool,
}

/// Tolerances for the equality and strict-gap conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessTolerances {
    /// Absolute tolerance for the eigenvalue match; `None` means
    /// `1e-8 (1 + |lambda_1|)`.
    pub eq: Option<f64>,
    pub gap: f64,
}

impl Default for WitnessTolerances {
    fn default() -> Self {
        Self { eq: None, gap: 1e-8 }
    }
}

/// Evaluates the four witness conditions against `m`.
pub fn check(triple: &WitnessTriple, m: &SymMatrix, tol: &WitnessTolerances) -> Result<WitnessReport> {
    if m.dim() != triple.dim() {
        return invalid("witness check: dimension mismatch");
    }
    let (worst_k, worst_value) = triple
        .z_hat
        .iter()
        .zip(&triple.x_hat)
        .map(|(z, x)| z * x)
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, v)| if v < bv { (k, v) } else { (bk, bv) });
    let cond1 = SignCheck {
        pass: worst_value > 0.0,
        worst_index: Some(triple.support[worst_k]),
        worst_value,
    };

    let w_inf = triple.w_inf();
    let cond2 = ValueCheck {
        value: w_inf,
        pass: w_inf < 1.0,
    };

    let mut full = m.clone();
    full.add_outer(-triple.rho, &triple.dual_vector());
    let full_top = sym_eig(&full)?.lambda_max();
    let eq_tol = tol.eq.unwrap_or(1e-8 * (1.0 + triple.lambda_hat.abs()));
    let difference = (full_top - triple.lambda_hat).abs();
    let cond3 = EigenMatchCheck {
        block: triple.lambda_hat,
        full: full_top,
        difference,
        tolerance: eq_tol,
        pass: difference <= eq_tol,
    };

    let gap = triple.lambda_hat - triple.lambda_second;
    let cond4 = ValueCheck {
        value: gap,
        pass: gap > tol.gap,
    };

    let certified = cond1.pass && cond2.pass && cond3.pass && cond4.pass;
    Ok(WitnessReport {
        cond1_sign_match: cond1,
        cond2_winf: cond2,
        cond3_eig_equal: cond3,
        cond4_gap: cond4,
        certified,
    })
}

/// Cross-check of a solver output against the witness.
#[derive(Clone, Debug, Serialize)]
pub struct CertifiedOutcome {
    pub certified: bool,
    pub support_match: bool,
    /// `||X_hat - x x^T (+) 0||_F`.
    pub frobenius_gap: f64,
    /// Bound applied to `frobenius_gap` when certified: `10 * tol_primal`.
    pub gap_bound: f64,
    /// False only when the witness certifies but the solution disagrees with it.
    pub consistent: bool,
    pub report: WitnessReport,
}

/// Builds and checks the witness, then compares it with a converged solution.
pub fn certify_solution(
    m: &SymMatrix,
    support: &[usize],
    signs: &[f64],
    rho: f64,
    solution: &SdpSolution,
    tol_primal: f64,
    tol: &WitnessTolerances,
) -> Result<CertifiedOutcome> {
    if !solution.converged {
        return Err(Error::RefusesToCertify(format!(
            "solver stopped after {} iterations without converging",
            solution.iterations
        )));
    }
    let triple = construct(m, support, signs, rho)?;
    let report = check(&triple, m, tol)?;
    let support_match = solution.support == support;
    let frobenius_gap = solution.x_hat.frobenius_dist(&triple.primal());
    let gap_bound = 10.0 * tol_primal;
    let consistent = !report.certified || (support_match && frobenius_gap <= gap_bound);
    Ok(CertifiedOutcome {
        certified: report.certified,
        support_match,
        frobenius_gap,
        gap_bound,
        consistent,
        report,
    })
}

/// `2 a sqrt(t (1 - t)) <= b t + c` on an `n`-point grid over `[0, 1]`.
pub fn quadratic_bound_holds(a: f64, b: f64, c: f64, n: usize) -> bool {
    (0..n).all(|k| {
        let t = k as f64 / (n - 1) as f64;
        2.0 * a * (t * (1.0 - t)).sqrt() <= b * t + c + 1e-12 * (1.0 + b.abs() + c.abs())
    })
}
