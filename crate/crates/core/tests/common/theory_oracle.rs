//! Second implementation of the closed-form recovery quantities, written
//! directly from the formulas with nalgebra blocks.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::SQRT_2;

pub struct Inputs<'a> {
    pub m: &'a DMatrix<f64>,
    pub support: &'a [usize],
    pub u1: &'a [f64],
    pub p: f64,
    pub sigma2: f64,
    pub bound: f64,
    pub rho: f64,
    pub c: f64,
}

/// Named values, in a fixed order.
pub type Values = Vec<(&'static str, f64)>;

fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn mx(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn col2(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn colmax2(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.amax().powi(2)).sum::<f64>().sqrt()
}

fn spectral(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().max()
}

fn eigs_desc(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

fn k_of(c: f64, a: f64, b: f64, n: f64) -> f64 {
    (c + 1.0) * a * n.ln() + (2.0 * (c + 1.0)).sqrt() * b * n.ln().sqrt()
}

/// Requires `0 < s < d` and nonzero off-support blocks.
pub fn compute(x: &Inputs) -> Values {
    let d = x.m.nrows();
    let j = x.support;
    let jc: Vec<usize> = (0..d).filter(|i| !j.contains(i)).collect();
    let (s, df) = (j.len() as f64, d as f64);
    let ds = df - s;
    let (p, c, rho) = (x.p, x.c, x.rho);

    let a_jj = block(x.m, j, j);
    let a_cj = block(x.m, &jc, j);
    let a_jc = a_cj.transpose();
    let a_cc = block(x.m, &jc, &jc);
    let ev = eigs_desc(&a_jj);
    let lbar = ev[0] - ev[1];
    let lam_cc = eigs_desc(&a_cc)[0];

    let mu0 = mx(&a_jj) / lbar;
    let mu1 = mx(&a_jj) / col2(&a_jj);
    let m2 = mx(&a_cj);
    let mu2 = (m2 / a_cj.norm()).min((m2 / col2(&a_cj)).max(m2 / col2(&a_jc))).min(m2 / colmax2(&a_jc));
    let mu3 = (mx(&a_cc) / spectral(&a_cc)).min(mx(&a_cc) / col2(&a_cc));

    let q = (p * (1.0 - p)).sqrt();
    let r = |a: &DMatrix<f64>| ((1.0 - p) * mx(a) + x.bound).max(p * mx(a));
    let r1 = r(&a_jj);
    let r2 = q * col2(&a_jj) + (p * s * x.sigma2).sqrt();
    let r3 = r(&a_cj);
    let r4 = (q * col2(&a_cj) + (p * ds * x.sigma2).sqrt()).max(q * col2(&a_jc) + (p * s * x.sigma2).sqrt());
    let r5 = r(&a_cc);
    let r6 = q * col2(&a_cc) + (p * ds * x.sigma2).sqrt();
    let k1 = k_of(c, r1, r2, 2.0 * s);
    let k2 = k_of(c, r3, r4, df);
    let k3 = k_of(c, r5, r6, 2.0 * ds);

    let umin = j.iter().map(|&i| x.u1[i].abs()).fold(f64::INFINITY, f64::min);
    let umax = j.iter().map(|&i| x.u1[i].abs()).fold(0.0, f64::max);

    let cond_a = umin - 2.0 * SQRT_2 * (k1 + rho * s) / (p * lbar);
    let cond_b = rho
        - (2.0 * (p * s.powf(c) * ((1.0 - p) * a_cj.norm_squared() + ds * s * x.sigma2)).sqrt() + p * m2);
    let lhs = (k2 + p * spectral(&a_cj)).powi(2) * (1.0 + s.sqrt()).powi(2);
    let f1 = p * lbar - 2.0 * k1 - 2.0 * rho * s;
    let f2 = p * (ev[0] - lam_cc) - k1 - k3 - rho * df;
    let cond_c = if f1 >= 0.0 && f2 >= 0.0 { f1 * f2 - lhs } else { f1.min(f2) - lhs };
    let prob = 1.0 - s.powf(-c) - df.powf(-c) - (2.0 * s).powf(-c) - (2.0 * ds).powf(-c);

    let t1 = mu1 * s.ln().sqrt();
    let t2 = lbar * mu2 / m2 * (1.0 / (s * s * s.sqrt())).min(1.0 / (s * (s * ds).sqrt()));
    let t3 = lbar * mu3 / mx(&a_cc) / ds.ln().sqrt();
    let tmin = t1.min(t2).min(t3);
    let rescaled = (p / (1.0 - p)).sqrt() * tmin;

    let c1 = mu0 * s.sqrt() * s.ln();
    let c2 = m2 / (lbar / s * mu2.min(1.0 / s).min(s.sqrt() / df.ln()));
    let c3 = mx(&a_cc) / (lbar * mu3.min(1.0 / ds.ln()));
    let c4 = ((1.0 - p) / p).sqrt() / tmin;
    let c5 = rho * s * s / (p * lbar);

    // rank-one conditions, evaluated with lambda_1 of the whole matrix
    let l1 = eigs_desc(x.m)[0];
    let lead = 2.0 - 1.0 / p;
    let a1 = lead * df.ln() / (8.0 * SQRT_2 * (2.0 * s).ln())
        + ds.max(s).sqrt() * df.ln().sqrt() / (16.0 * s * s * ds.sqrt());
    let a2 = lead * (2.0 * ds).ln() / (8.0 * SQRT_2 * (2.0 * s).ln()) + (2.0 * ds).ln().sqrt() / (16.0 * s * s);
    let g = ds / s;
    let w = (1.0 + s.sqrt()).powi(2);
    let gate = (12.0 + g + 8.0 * SQRT_2 * a2 - ((4.0 - g - 8.0 * SQRT_2 * a2).powi(2) + 512.0 * a1 * a1 * w).sqrt())
        / (4.0 * SQRT_2 + SQRT_2 * g + 16.0 * a2 - 16.0 * SQRT_2 * a1 * a1 * w)
        - 1.0 / s.sqrt();
    let cor2_sign = 1.0 / (16.0 * SQRT_2 * (2.0 * s).ln()) - umax * umax / umin;
    let cor2_spread = (p / (1.0 - p)).sqrt() / (16.0 * SQRT_2 * (2.0 * s).ln().sqrt()) - umax / umin;
    let cor2_noise = (2.0 * p - 1.0) * l1 * umax * umax - x.bound;
    let cor2_lo = rho - 2.0 * SQRT_2 * (p * x.sigma2 * s * s * ds).sqrt();
    let cor2_hi = p * l1 * umin / (8.0 * SQRT_2 * s) - rho;

    vec![
        ("mu0", mu0),
        ("mu1", mu1),
        ("mu2", mu2),
        ("mu3", mu3),
        ("r1", r1),
        ("r2", r2),
        ("r3", r3),
        ("r4", r4),
        ("r5", r5),
        ("r6", r6),
        ("k1", k1),
        ("k2", k2),
        ("k3", k3),
        ("thm1_sign", cond_a),
        ("thm1_rho_lower", cond_b),
        ("thm1_eigen", cond_c),
        ("thm1_eigen_lhs", lhs),
        ("thm1_factor1", f1),
        ("thm1_factor2", f2),
        ("success_prob", prob),
        ("rescaled", rescaled),
        ("cor1_support", c1),
        ("cor1_offblock", c2),
        ("cor1_complement", c3),
        ("cor1_sample", c4),
        ("cor1_rho", c5),
        ("a1", a1),
        ("a2", a2),
        ("cor2_gate", gate),
        ("cor2_sign", cor2_sign),
        ("cor2_spread", cor2_spread),
        ("cor2_noise", cor2_noise),
        ("cor2_rho_lower", cor2_lo),
        ("cor2_rho_upper", cor2_hi),
    ]
}
