//! ADMM solver for the l1-penalized spectraplex program
//!
//! ```text
//! maximize <M, X> - rho ||X||_{1,1}   subject to  X >= 0, tr X = 1,
//! ```
//!
//! split as `X` (spectraplex block) and `Y` (l1 block) with consensus `X = Y`
//! and scaled dual `U`:
//!
//! ```text
//! X <- P_spectraplex(Y - U + M / tau)
//! Y <- soft_threshold(X + U, rho / tau)
//! U <- U + X - Y
//! ```
//!
//! The problem is solved on `(M, rho) / ||M||_max`; its optimizer is invariant
//! under joint positive scaling, so the iterates do not depend on the units of
//! `M`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{project_spectraplex, sym_eig, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdpConfig {
    /// l1 penalty.
    pub rho: f64,
    /// ADMM penalty parameter (on the normalized problem).
    pub tau: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Threshold on `diag(X)` for the estimated support.
    pub eta_support: f64,
    /// Residual balancing: doubles or halves `tau` when one residual exceeds
    /// the other by a factor of 10.
    pub adaptive_tau: bool,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            tau: 1.0,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            max_iter: 20_000,
            eta_support: 1e-3,
            adaptive_tau: true,
        }
    }
}

impl SdpConfig {
    pub fn with_rho(rho: f64) -> Self {
        Self {
            rho,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return invalid(format!("rho must be finite and nonnegative, got {}", self.rho));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return invalid(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_dual > 0.0) {
            return invalid("stopping tolerances must be positive");
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be at least 1");
        }
        if !(self.eta_support > 0.0 && self.eta_support < 1.0) {
            return invalid(format!("eta_support must lie in (0, 1), got {}", self.eta_support));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Final spectraplex iterate.
    pub x_hat: SymMatrix,
    /// Final l1-block iterate.
    pub y_hat: SymMatrix,
    /// Estimated support, 0-based and sorted.
    pub support: Vec<usize>,
    /// `<M, X> - rho ||X||_{1,1}` at `x_hat`, in the units of the input.
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Objective evaluated at each of the last (up to) 10 iterates.
    pub recent_objectives: Vec<f64>,
}

impl SdpSolution {
    pub fn diag(&self) -> Vec<f64> {
        self.x_hat.diag()
    }
}

/// `<M, X> - rho ||X||_{1,1}`.
pub fn objective(m: &SymMatrix, x: &SymMatrix, rho: f64) -> f64 {
    m.inner(x) - rho * x.l11()
}

/// Solves the penalized program by ADMM starting from `X = Y = I/d`, `U = 0`.
///
/// Reaching `max_iter` is not an error: the returned solution carries
/// `converged = false` and the final residuals.
pub fn solve(m: &SymMatrix, cfg: &SdpConfig) -> Result<SdpSolution> {
    cfg.validate()?;
    let d = m.dim();
    let scale = match m.max_abs() {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mn = m.scaled(1.0 / scale);
    let rho = cfg.rho / scale;

    let mut tau = cfg.tau;
    let mut x = SymMatrix::identity(d)?.scaled(1.0 / d as f64);
    let mut y = x.clone();
    let mut u = SymMatrix::zeros(d)?;
    let mut recent = std::collections::VecDeque::with_capacity(10);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    let n = d * d;
    let mut arg = vec![0.0; n];
    for k in 1..=cfg.max_iter {
        iterations = k;
        {
            let (ys, us, ms) = (y.as_slice(), u.as_slice(), mn.as_slice());
            for i in 0..n {
                arg[i] = ys[i] - us[i] + ms[i] / tau;
            }
        }
        x = project_spectraplex(&SymMatrix::from_row_major_unchecked(d, arg.clone()))?;

        let thresh = rho / tau;
        let y_prev = std::mem::replace(&mut y, SymMatrix::zeros(d)?);
        let mut ydata = vec![0.0; n];
        let mut r2 = 0.0;
        let mut dy2 = 0.0;
        let mut udata = u.as_slice().to_vec();
        {
            let (xs, yp) = (x.as_slice(), y_prev.as_slice());
            for i in 0..n {
                let yi = crate::linalg::shrink_scalar(xs[i] + udata[i], thresh);
                ydata[i] = yi;
                let r = xs[i] - yi;
                udata[i] += r;
                r2 += r * r;
                let dy = yi - yp[i];
                dy2 += dy * dy;
            }
        }
        y = SymMatrix::from_row_major_unchecked(d, ydata);
        u = SymMatrix::from_row_major_unchecked(d, udata);

        let x_norm = x.frobenius().max(y.frobenius()).max(1.0);
        let lam_norm = (tau * u.frobenius()).max(1.0);
        primal = r2.sqrt() / x_norm;
        dual = tau * dy2.sqrt() / lam_norm;

        if recent.len() == 10 {
            recent.pop_front();
        }
        recent.push_back(objective(&mn, &x, rho) * scale);

        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            converged = true;
            break;
        }
        if cfg.adaptive_tau && k % 10 == 0 {
            if primal > 10.0 * dual {
                tau *= 2.0;
                u = u.scaled(0.5);
            } else if dual > 10.0 * primal {
                tau *= 0.5;
                u = u.scaled(2.0);
            }
        }
    }

    let support = extract_support(&x, cfg.eta_support);
    Ok(SdpSolution {
        objective: objective(m, &x, cfg.rho),
        support,
        x_hat: x,
        y_hat: y,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        recent_objectives: recent.into_iter().collect(),
    })
}

/// `{i : X(i, i) > eta}`.
pub fn extract_support(x: &SymMatrix, eta: f64) -> Vec<usize> {
    (0..x.dim()).filter(|&i| x.get(i, i) > eta).collect()
}

/// One optimality condition: a numeric residual and its verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub residual: f64,
    pub pass: bool,
}

/// Optimality-certificate check for a primal `X`, a dual `Z` and a
/// multiplier `mu` on the support `J`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    /// `X_JJ >= 0` and `tr X_JJ = 1`: `max(-lambda_min, |tr - 1|)`.
    pub block_feasible: ConditionCheck,
    /// `M_JJ - rho Z_JJ <= mu I`: positive part of `lambda_1 - mu`.
    pub block_dominated: ConditionCheck,
    /// `M - rho Z <= mu I`: positive part of `lambda_1 - mu`.
    pub full_dominated: ConditionCheck,
    /// `Z_ij` is a subgradient of `|X_ij|` on `J x J`: largest violation.
    pub subgradient: ConditionCheck,
    /// `|Z_ij| < 1` off `J x J`: residual is `max |Z_ij| - 1` (negative = slack).
    pub strict_dual: ConditionCheck,
    /// `||(M_JJ - rho Z_JJ) X_JJ - mu X_JJ||_F`.
    pub block_eigen: ConditionCheck,
    /// `||(M_{J^c,J} - rho Z_{J^c,J}) X_JJ||_F`.
    pub offblock_eigen: ConditionCheck,
    pub pass: bool,
}

/// Evaluates the seven optimality conditions at tolerance `tol`.
///
/// Entries of `X_JJ` with magnitude at most `tol` count as zero for the
/// subgradient condition.
pub fn kkt_check(
    m: &SymMatrix,
    x_hat: &SymMatrix,
    z_hat: &SymMatrix,
    mu_hat: f64,
    support: &[usize],
    rho: f64,
    tol: f64,
) -> Result<KktReport> {
    let d = m.dim();
    if x_hat.dim() != d || z_hat.dim() != d {
        return invalid("kkt_check: dimension mismatch");
    }
    if support.is_empty() || support.iter().any(|&i| i >= d) {
        return invalid("kkt_check: support must be a nonempty subset of 0..d");
    }
    let comp = crate::synth::complement(d, support);
    let check = |residual: f64| ConditionCheck {
        residual,
        pass: residual <= tol,
    };

    let x_jj = x_hat.principal(support)?;
    let eig_x = sym_eig(&x_jj)?;
    let block_feasible = check((-eig_x.lambda_min()).max((x_jj.trace() - 1.0).abs()));

    let penalized = m.lin_comb(1.0, z_hat, -rho);
    let pen_jj = penalized.principal(support)?;
    let block_dominated = check((sym_eig(&pen_jj)?.lambda_max() - mu_hat).max(0.0));
    let full_dominated = check((sym_eig(&penalized)?.lambda_max() - mu_hat).max(0.0));

    let mut sub = 0.0f64;
    for &i in support {
        for &j in support {
            let (xv, zv) = (x_hat.get(i, j), z_hat.get(i, j));
            let v = if xv > tol {
                (zv - 1.0).abs()
            } else if xv < -tol {
                (zv + 1.0).abs()
            } else {
                (zv.abs() - 1.0).max(0.0)
            };
            sub = sub.max(v);
        }
    }
    let subgradient = check(sub);

    let mut zmax = f64::NEG_INFINITY;
    for i in 0..d {
        for j in 0..d {
            let inside = support.binary_search(&i).is_ok() && support.binary_search(&j).is_ok();
            if !inside {
                zmax = zmax.max(z_hat.get(i, j).abs());
            }
        }
    }
    let strict_dual = if zmax == f64::NEG_INFINITY {
        ConditionCheck {
            residual: -1.0,
            pass: true,
        }
    } else {
        ConditionCheck {
            residual: zmax - 1.0,
            pass: zmax < 1.0,
        }
    };

    let s = support.len();
    let mut eig_res = 0.0;
    for a in 0..s {
        for b in 0..s {
            let prod: f64 = (0..s).map(|k| pen_jj.get(a, k) * x_jj.get(k, b)).sum();
            eig_res += (prod - mu_hat * x_jj.get(a, b)).powi(2);
        }
    }
    let block_eigen = check(eig_res.sqrt());

    let mut off_res = 0.0;
    for &i in &comp {
        for b in 0..s {
            let prod: f64 = support
                .iter()
                .enumerate()
                .map(|(k, &jk)| penalized.get(i, jk) * x_jj.get(k, b))
                .sum();
            off_res += prod * prod;
        }
    }
    let offblock_eigen = check(off_res.sqrt());

    let pass = [
        block_feasible,
        block_dominated,
        full_dominated,
        subgradient,
        strict_dual,
        block_eigen,
        offblock_eigen,
    ]
    .iter()
    .all(|c| c.pass);
    Ok(KktReport {
        block_feasible,
        block_dominated,
        full_dominated,
        subgradient,
        strict_dual,
        block_eigen,
        offblock_eigen,
        pass,
    })
}
