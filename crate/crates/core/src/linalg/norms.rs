use serde::Serialize;

use super::{sym_eig, Mat, SymMatrix};
use crate::error::{invalid, Result};

/// The matrix norms used by the recovery conditions.
///
/// Column-indexed norms follow the convention `||A||_{2,inf} = max_j ||A_{:,j}||_2`
/// and `||A||_{1,inf} = max_j ||A_{:,j}||_1`. `inf_two` is
/// `sqrt(sum_j (max_i |A_{i,j}|)^2)`, the 2-norm of the column-wise max
/// magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub spectral: f64,
    pub frobenius: f64,
    pub l11: f64,
    pub max: f64,
    pub two_inf: f64,
    pub one_inf: f64,
    pub inf_two: f64,
}

/// All seven norms of a (possibly rectangular) matrix view.
pub fn norms(a: &Mat) -> Result<NormReport> {
    if a.is_empty() {
        return invalid("norms of an empty matrix view");
    }
    let (rows, cols) = (a.rows(), a.cols());
    let mut frob2 = 0.0;
    let mut l11 = 0.0;
    let mut max = 0.0f64;
    let mut two_inf = 0.0f64;
    let mut one_inf = 0.0f64;
    let mut inf_two2 = 0.0;
    for j in 0..cols {
        let (mut c2, mut c1, mut cmax) = (0.0, 0.0, 0.0f64);
        for i in 0..rows {
            let x = a.get(i, j).abs();
            c2 += x * x;
            c1 += x;
            cmax = cmax.max(x);
        }
        frob2 += c2;
        l11 += c1;
        max = max.max(cmax);
        two_inf = two_inf.max(c2.sqrt());
        one_inf = one_inf.max(c1);
        inf_two2 += cmax * cmax;
    }
    Ok(NormReport {
        spectral: spectral_norm(a)?,
        frobenius: frob2.sqrt(),
        l11,
        max,
        two_inf,
        one_inf,
        inf_two: inf_two2.sqrt(),
    })
}

/// Largest singular value, from the smaller of the two Gram matrices.
pub fn spectral_norm(a: &Mat) -> Result<f64> {
    if a.is_empty() {
        return invalid("spectral norm of an empty matrix view");
    }
    let gram = if a.cols() <= a.rows() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let eig = sym_eig(&gram)?;
    Ok(eig.lambda_max().max(0.0).sqrt())
}

impl SymMatrix {
    /// Spectral norm `max_k |lambda_k|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let eig = sym_eig(self)?;
        Ok(eig.lambda_max().abs().max(eig.lambda_min().abs()))
    }

    pub fn norms(&self) -> Result<NormReport> {
        let mut rep = norms(&self.to_mat())?;
        rep.spectral = self.spectral_norm()?;
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_3() {
        let r = SymMatrix::identity(3).unwrap().norms().unwrap();
        assert!((r.spectral - 1.0).abs() < 1e-15);
        assert!((r.frobenius - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.l11, 3.0);
        assert_eq!(r.max, 1.0);
        assert_eq!(r.two_inf, 1.0);
        assert_eq!(r.one_inf, 1.0);
        assert!((r.inf_two - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn all_ones_2x3() {
        let a = Mat::new(2, 3, vec![1.0; 6]).unwrap();
        let r = norms(&a).unwrap();
        assert_eq!(r.max, 1.0);
        assert!((r.frobenius - 6f64.sqrt()).abs() < 1e-15);
        assert!((r.two_inf - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.l11, 6.0);
        assert_eq!(r.one_inf, 2.0);
        assert!((r.inf_two - 3f64.sqrt()).abs() < 1e-15);
        assert!((r.spectral - 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_view_is_rejected() {
        let a = Mat::new(0, 3, vec![]).unwrap();
        assert!(norms(&a).is_err());
    }

    #[test]
    fn single_entry_block_norms_coincide() {
        let mut data = vec![0.0; 12];
        data[7] = -2.5;
        let r = norms(&Mat::new(3, 4, data).unwrap()).unwrap();
        for v in [r.spectral, r.frobenius, r.l11, r.max, r.two_inf, r.one_inf, r.inf_two] {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }
}
