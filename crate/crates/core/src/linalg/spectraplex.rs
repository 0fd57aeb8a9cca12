use super::{sym_eig, SymMatrix};
use crate::error::{invalid, Result};

/// Euclidean projection of `v` onto the probability simplex `{w >= 0, sum w = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius projection onto the spectraplex `{X >= 0, tr X = 1}`.
///
/// The eigenvalues are projected onto the simplex and the matrix is
/// recomposed from the eigenvectors with positive weight.
pub fn project_spectraplex(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(s)?;
    let w = project_simplex(&eig.values);
    let mut out = SymMatrix::zeros(s.dim())?;
    for (wk, vk) in w.iter().zip(&eig.vectors) {
        if *wk > 0.0 {
            out.add_outer(*wk, vk);
        }
    }
    Ok(out)
}

/// Entrywise soft-thresholding `sign(a) max(|a| - t, 0)`.
pub fn soft_threshold(a: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if !(t >= 0.0) {
        return invalid(format!("threshold must be nonnegative, got {t}"));
    }
    Ok(a.map(|x| shrink(x, t)))
}

#[inline]
pub(crate) fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
