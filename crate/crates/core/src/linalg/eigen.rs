//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! implicit-shift QL iteration (the EISPACK `tred2`/`tql2` pair).

use super::SymMatrix;
use crate::error::{Error, Result};

/// Default relative tolerance for residual and orthonormality checks.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// QL iterations allowed per eigenvalue, summed over the whole matrix.
const SWEEPS_PER_DIM: usize = 30;

/// Eigenvalues sorted descending with their unit eigenvectors.
///
/// Each eigenvector is sign-normalized so that its first component of largest
/// absolute value is nonnegative.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector paired with `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim();
        let mut m = SymMatrix::zeros(d).expect("dimension is positive");
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            m.add_outer(*lam, v);
        }
        m
    }

    /// Largest `||A v_k - lambda_k v_k||_2` over all pairs.
    pub fn max_residual(&self, a: &SymMatrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(lam, v)| {
                a.mat_vec(v)
                    .iter()
                    .zip(v)
                    .map(|(av, vi)| (av - lam * vi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, va) in self.vectors.iter().enumerate() {
            for (b, vb) in self.vectors.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((super::dot(va, vb) - target).abs());
            }
        }
        worst
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    if n == 1 {
        return Ok(EigenDecomposition {
            values: vec![a.get(0, 0)],
            vectors: vec![vec![1.0]],
        });
    }

    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);

    // tql2 rotates columns of V; work on the transpose so rotations touch rows.
    let mut vt: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    tql2(&mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep QL output order
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col = std::mem::take(&mut vt[k]);
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Like [`sym_eig`], then verifies the residual and orthonormality invariants
/// at relative tolerance `tol` (scaled by `max(1, ||A||_F)`).
pub fn sym_eig_with(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition> {
    let eig = sym_eig(a)?;
    let scale = a.frobenius().max(1.0);
    let res = eig.max_residual(a);
    let orth = eig.orthonormality_error();
    if res > tol * scale || orth > tol.max(1e-12) * (a.dim() as f64).sqrt() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: res.max(orth),
        });
    }
    Ok(eig)
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Householder reduction to tridiagonal form; `v` ends holding the
/// accumulated orthogonal transform, `d` the diagonal, `e` the subdiagonal.
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e.iter_mut().take(i).for_each(|x| *x = 0.0);

            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`. `vt` holds eigenvectors as rows.
fn tql2(vt: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let cap = SWEEPS_PER_DIM * n;
    let mut total_iter = 0usize;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            loop {
                total_iter += 1;
                if total_iter > cap {
                    return Err(Error::NoConvergence {
                        iterations: total_iter - 1,
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut(i + 1);
                    let vi = &mut lo[i];
                    let vi1 = &mut hi[0];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
