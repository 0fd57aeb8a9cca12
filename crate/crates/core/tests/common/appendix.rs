//! The coherent and incoherent examples with d = 20, s = 10, J = {0..9}.

use spca_core::SymMatrix;

pub const D: usize = 20;
pub const S: usize = 10;

fn in_j(i: usize) -> f64 {
    (i < S) as u8 as f64
}

/// `1_J 1_J^T + v v^T` with `v = e_8 - e_9 + e_10` (0-based).
pub fn coherent_complete() -> SymMatrix {
    let mut v = [0.0; D];
    v[8] = 1.0;
    v[9] = -1.0;
    v[10] = 1.0;
    SymMatrix::from_upper_fn(D, |i, j| in_j(i) * in_j(j) + v[i] * v[j]).unwrap()
}

/// The coherent example with its missing entries zeroed; of those entries
/// only `(10, 10)` is nonzero in the complete matrix.
pub fn coherent_masked() -> SymMatrix {
    let mut m = coherent_complete();
    for (i, j) in [(0, 11), (7, 10), (8, 19), (10, 10), (10, 19)] {
        m.set(i, j, 0.0);
    }
    m
}

/// `3 * 1_J 1_J^T + a a^T` with `a` alternating +1, -1.
pub fn incoherent_complete() -> SymMatrix {
    let a = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    SymMatrix::from_upper_fn(D, |i, j| 3.0 * in_j(i) * in_j(j) + a(i) * a(j)).unwrap()
}

/// The incoherent example with the single pair `(9, 10)` missing.
pub fn incoherent_masked() -> SymMatrix {
    let mut m = incoherent_complete();
    m.set(9, 10, 0.0);
    m
}
