//! Synthetic ground truth, the Bernoulli-masked noisy observation model, and
//! pairwise-complete covariance estimation for tables with missing cells.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, SymMatrix};

/// Attempts allowed when resampling leading-eigenvector magnitudes or
/// completing the orthonormal basis.
const RESAMPLE_CAP: usize = 1000;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a key path
/// (e.g. `[cell, trial, purpose]`). Independent of scheduling.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(master ^ 0x9e37_79b9_7f4a_7c15), |acc, &k| {
        mix64(acc.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(k)))
    })
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with a known spectral decomposition and a sparse leading
/// eigenvector.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub d: usize,
    pub s: usize,
    /// Sorted, 0-based support of the leading eigenvector.
    pub support: Vec<usize>,
    /// Descending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` pairs with `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub m_star: SymMatrix,
}

impl GroundTruth {
    /// Assembles `M* = sum_k lambda_k u_k u_k^T` from a spectrum. The support is
    /// the set of exactly-nonzero entries of the first eigenvector.
    pub fn from_spectrum(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 || eigenvectors.len() != d || eigenvectors.iter().any(|v| v.len() != d) {
            return invalid("spectrum must have d eigenvalues and d eigenvectors of length d");
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return invalid("eigenvalues must be sorted descending");
        }
        if d > 1 && !(eigenvalues[0] > eigenvalues[1]) {
            return invalid("leading eigenvalue must be simple");
        }
        for (a, va) in eigenvectors.iter().enumerate() {
            if (norm2(va) - 1.0).abs() > 1e-10 {
                return invalid(format!("eigenvector {a} is not unit norm"));
            }
        }
        let terms: Vec<(f64, &[f64])> = eigenvalues
            .iter()
            .zip(&eigenvectors)
            .map(|(l, v)| (*l, v.as_slice()))
            .collect();
        let m_star = SymMatrix::from_outer_sum(d, &terms)?;
        let support: Vec<usize> = (0..d).filter(|&i| eigenvectors[0][i] != 0.0).collect();
        if support.is_empty() {
            return invalid("leading eigenvector is zero");
        }
        Ok(Self {
            d,
            s: support.len(),
            support,
            eigenvalues,
            eigenvectors,
            m_star,
        })
    }

    pub fn u1(&self) -> &[f64] {
        &self.eigenvectors[0]
    }

    pub fn spectral_gap(&self) -> f64 {
        if self.d == 1 {
            f64::INFINITY
        } else {
            self.eigenvalues[0] - self.eigenvalues[1]
        }
    }

    /// Signs of the leading eigenvector on the support, as `+1.0` / `-1.0`.
    pub fn support_signs(&self) -> Vec<f64> {
        self.support
            .iter()
            .map(|&i| self.eigenvectors[0][i].signum())
            .collect()
    }

    pub fn min_support_magnitude(&self) -> f64 {
        self.support
            .iter()
            .map(|&i| self.eigenvectors[0][i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn complement(&self) -> Vec<usize> {
        complement(self.d, &self.support)
    }

    /// Largest reconstruction error `||M* - sum lambda_k u_k u_k^T||_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let terms: Vec<(f64, &[f64])> = self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(l, v)| (*l, v.as_slice()))
            .collect();
        SymMatrix::from_outer_sum(self.d, &terms)
            .map(|m| m.frobenius_dist(&self.m_star))
            .unwrap_or(f64::INFINITY)
    }
}

/// Sorted complement of `set` in `0..d`.
pub fn complement(d: usize, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; d];
    for &i in set {
        inside[i] = true;
    }
    (0..d).filter(|&i| !inside[i]).collect()
}

/// Random ground truth: `lambda_2..lambda_d` i.i.d. standard normal (sorted),
/// `lambda_1 = lambda_2 + gap`, a leading eigenvector on a uniformly random
/// support of size `s` with entries of magnitude at least `1/(2 sqrt s)`, and
/// the remaining eigenvectors drawn as Gaussian vectors orthogonalized against
/// everything before them.
pub fn generate_ground_truth(d: usize, s: usize, gap: f64, seed: u64) -> Result<GroundTruth> {
    if d == 0 || s == 0 || s > d {
        return invalid(format!("need 1 <= s <= d, got s = {s}, d = {d}"));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return invalid(format!("spectral gap must be positive, got {gap}"));
    }
    let mut rng = rng_from_seed(seed);

    let mut rest: Vec<f64> = (1..d).map(|_| rng.sample(StandardNormal)).collect();
    rest.sort_by(|a, b| b.total_cmp(a));
    let lambda1 = rest.first().copied().unwrap_or(0.0) + gap;
    let mut eigenvalues = Vec::with_capacity(d);
    eigenvalues.push(lambda1);
    eigenvalues.extend(rest);

    let mut support = sample(&mut rng, d, s).into_vec();
    support.sort_unstable();
    let floor = 1.0 / (2.0 * (s as f64).sqrt());
    let mut u1 = None;
    for _ in 0..RESAMPLE_CAP {
        let mut v = vec![0.0; d];
        for &i in &support {
            let mag = rng.random_range(floor..=2.0 * floor);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v[i] = sign * mag;
        }
        let n = norm2(&v);
        v.iter_mut().for_each(|x| *x /= n);
        if support.iter().all(|&i| v[i].abs() >= floor) {
            u1 = Some(v);
            break;
        }
    }
    let u1 = u1.ok_or_else(|| {
        Error::GenerationFailed(format!(
            "could not meet magnitude floor {floor} after {RESAMPLE_CAP} draws"
        ))
    })?;

    let mut basis = vec![u1];
    while basis.len() < d {
        let mut accepted = false;
        for _ in 0..RESAMPLE_CAP {
            let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&g, b);
                    g.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = norm2(&g);
            if n > 1e-8 {
                g.iter_mut().for_each(|x| *x /= n);
                basis.push(g);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::GenerationFailed("orthonormal completion failed".into()));
        }
    }

    GroundTruth::from_spectrum(eigenvalues, basis)
}

/// Rank-one ground truth `lambda1 u u^T` with the same leading-eigenvector law
/// as [`generate_ground_truth`]; the remaining spectrum is zero.
pub fn generate_rank_one(d: usize, s: usize, lambda1: f64, seed: u64) -> Result<GroundTruth> {
    if !(lambda1 > 0.0) {
        return invalid("rank-one eigenvalue must be positive");
    }
    let gt = generate_ground_truth(d, s, 1.0, seed)?;
    let mut eigenvalues = vec![0.0; d];
    eigenvalues[0] = lambda1;
    GroundTruth::from_spectrum(eigenvalues, gt.eigenvectors)
}

/// Zero-mean normal with standard deviation `sigma_normal`, truncated to
/// `[-bound, bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub bound: f64,
    pub sigma_normal: f64,
}

impl NoiseSpec {
    pub fn new(bound: f64, sigma_normal: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() || !(sigma_normal >= 0.0) || !sigma_normal.is_finite() {
            return invalid(format!(
                "noise bound and sigma must be finite and nonnegative, got B = {bound}, sigma = {sigma_normal}"
            ));
        }
        Ok(Self { bound, sigma_normal })
    }

    pub fn noiseless() -> Self {
        Self {
            bound: 0.0,
            sigma_normal: 0.0,
        }
    }

    /// Variance of the truncated law,
    /// `sigma^2 (1 - 2 beta phi(beta) / (2 Phi(beta) - 1))` with `beta = B / sigma`.
    pub fn variance(&self) -> f64 {
        if self.bound == 0.0 || self.sigma_normal == 0.0 {
            return 0.0;
        }
        let sigma = self.sigma_normal;
        let beta = self.bound / sigma;
        let mass = erf(beta / std::f64::consts::SQRT_2);
        let pdf = (-0.5 * beta * beta).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = sigma * sigma * (1.0 - 2.0 * beta * pdf / mass);
        // for tiny beta the law is near-uniform on [-B, B]
        if v.is_finite() && v > 0.0 {
            v
        } else {
            self.bound * self.bound / 3.0
        }
    }

    /// Draws one noise value by rejection sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.bound == 0.0 || self.sigma_normal == 0.0 {
            return 0.0;
        }
        let beta = self.bound / self.sigma_normal;
        if beta >= 1.0 {
            let parent = Normal::new(0.0, self.sigma_normal).expect("sigma is positive");
            loop {
                let x: f64 = parent.sample(rng);
                if x.abs() <= self.bound {
                    return x;
                }
            }
        } else {
            // uniform proposal on [-B, B] accepted with the normal density ratio
            let inv = 0.5 / (self.sigma_normal * self.sigma_normal);
            loop {
                let x = rng.random_range(-self.bound..=self.bound);
                if rng.random::<f64>() < (-x * x * inv).exp() {
                    return x;
                }
            }
        }
    }
}

/// Symmetric boolean observation mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    dim: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(dim: usize, value: bool) -> Self {
        Self {
            dim,
            bits: vec![value; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.dim + j] = v;
        self.bits[j * self.dim + i] = v;
    }

    /// Fraction of observed entries over the full `d x d` grid.
    pub fn observed_fraction(&self) -> f64 {
        self.bits.iter().filter(|b| **b).count() as f64 / self.bits.len() as f64
    }

    /// Fraction of observed entries over the upper triangle `i <= j`.
    pub fn observed_fraction_upper(&self) -> f64 {
        let d = self.dim;
        let mut count = 0usize;
        for i in 0..d {
            for j in i..d {
                count += self.get(i, j) as usize;
            }
        }
        count as f64 / (d * (d + 1) / 2) as f64
    }
}

/// Zero-filled noisy observation of a ground truth.
#[derive(Clone, Debug)]
pub struct Observation {
    pub m: SymMatrix,
    pub mask: Mask,
    pub p: f64,
}

/// Samples `M_ij = M_ji = delta_ij (M*_ij + eps_ij)` for `i <= j`, with
/// `delta_ij ~ Bernoulli(p)` and `eps_ij` from `noise`. For every upper-triangle
/// entry the noise is drawn first, then the mask bit, in row-major order.
pub fn sample_observation(m_star: &SymMatrix, p: f64, noise: &NoiseSpec, seed: u64) -> Result<Observation> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("observation probability must lie in (0, 1], got {p}"));
    }
    let d = m_star.dim();
    let mut rng = rng_from_seed(seed);
    let mut m = SymMatrix::zeros(d)?;
    let mut mask = Mask::new(d, false);
    for i in 0..d {
        for j in i..d {
            let eps = noise.sample(&mut rng);
            let observed = rng.random::<f64>() < p;
            if observed {
                m.set(i, j, m_star.get(i, j) + eps);
                mask.set(i, j, true);
            }
        }
    }
    Ok(Observation { m, mask, p })
}

/// Data table with optional cells, as read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    pub headers: Vec<String>,
    /// `rows[r][c]`; `None` marks a missing cell.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl DataTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.headers.len()
    }
}

/// Pairwise-complete covariance of a table with missing cells.
#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    pub c: SymMatrix,
    pub mask: Mask,
    pub observed_fraction: f64,
    /// Columns with no observed rows; their rows and columns are fully masked.
    pub empty_columns: Vec<usize>,
}

/// Each entry `C(j, k)` uses only the rows where both columns are present,
/// centered on the means over those rows, with an `n - 1` denominator. Pairs
/// with fewer than two joint observations are masked and set to zero.
pub fn incomplete_covariance(table: &DataTable) -> Result<CovarianceEstimate> {
    let n = table.n_rows();
    let m = table.n_cols();
    if n < 2 {
        return invalid(format!("need at least 2 rows, got {n}"));
    }
    if m == 0 {
        return invalid("table has no columns");
    }
    if let Some(r) = table.rows.iter().position(|row| row.len() != m) {
        return invalid(format!("row {r} has {} cells, expected {m}", table.rows[r].len()));
    }
    let mut c = SymMatrix::zeros(m)?;
    let mut mask = Mask::new(m, false);
    for j in 0..m {
        for k in j..m {
            let pairs: Vec<(f64, f64)> = table
                .rows
                .iter()
                .filter_map(|row| match (row[j], row[k]) {
                    (Some(x), Some(y)) => Some((x, y)),
                    _ => None,
                })
                .collect();
            if pairs.len() < 2 {
                continue;
            }
            let cnt = pairs.len() as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / cnt;
            let my = pairs.iter().map(|p| p.1).sum::<f64>() / cnt;
            let cov = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (cnt - 1.0);
            if !cov.is_finite() {
                return invalid(format!("non-finite covariance for columns {j}, {k}"));
            }
            c.set(j, k, cov);
            mask.set(j, k, true);
        }
    }
    let empty_columns = (0..m)
        .filter(|&j| table.rows.iter().all(|row| row[j].is_none()))
        .collect();
    Ok(CovarianceEstimate {
        observed_fraction: mask.observed_fraction(),
        c,
        mask,
        empty_columns,
    })
}
