//! Closed-form recovery conditions.
//!
//! Everything here is a deterministic function of the true matrix `M*`, its
//! support `J`, the leading eigenvector and the sampling/noise parameters
//! `(p, sigma^2, B)`. Blocks are named by their row and column index sets:
//! `JJ` is `M*_{J,J}`, `CJ` is `M*_{J^c,J}` and `CC` is `M*_{J^c,J^c}`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{norms, sym_eig, NormReport, SymMatrix};
use crate::synth::complement;

/// Norms and spectra of the three blocks of `M*`.
#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub d: usize,
    pub s: usize,
    pub jj: NormReport,
    pub jj_lambda1: f64,
    pub jj_lambda2: f64,
    /// `lambda_1(M*_JJ) - lambda_2(M*_JJ)`.
    pub lambda_bar: f64,
    /// `M*_{J^c,J}`; `None` when `J^c` is empty.
    pub cj: Option<NormReport>,
    /// `M*_{J,J^c}`, the transpose of `cj`.
    pub jc: Option<NormReport>,
    pub cc: Option<NormReport>,
    pub cc_lambda1: Option<f64>,
}

impl BlockSummary {
    pub fn new(m_star: &SymMatrix, support: &[usize]) -> Result<Self> {
        let d = m_star.dim();
        let s = support.len();
        if s == 0 || support.iter().any(|&i| i >= d) || support.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("support must be a nonempty sorted subset of 0..d");
        }
        if s < 2 {
            return invalid("spectral gap of the support block needs |J| >= 2");
        }
        let comp = complement(d, support);
        let jj_mat = m_star.principal(support)?;
        let jj_eig = sym_eig(&jj_mat)?;
        let jj = jj_mat.norms()?;
        let (cj, jc, cc, cc_lambda1) = if comp.is_empty() {
            (None, None, None, None)
        } else {
            let cj_mat = m_star.block(&comp, support);
            let cc_mat = m_star.principal(&comp)?;
            (
                Some(norms(&cj_mat)?),
                Some(norms(&cj_mat.transpose())?),
                Some(cc_mat.norms()?),
                Some(sym_eig(&cc_mat)?.lambda_max()),
            )
        };
        Ok(Self {
            d,
            s,
            jj,
            jj_lambda1: jj_eig.values[0],
            jj_lambda2: jj_eig.values[1],
            lambda_bar: jj_eig.values[0] - jj_eig.values[1],
            cj,
            jc,
            cc,
            cc_lambda1,
        })
    }

    fn cj_or_zero(&self) -> NormReport {
        self.cj.unwrap_or(ZERO_NORMS)
    }

    fn jc_or_zero(&self) -> NormReport {
        self.jc.unwrap_or(ZERO_NORMS)
    }

    fn cc_or_zero(&self) -> NormReport {
        self.cc.unwrap_or(ZERO_NORMS)
    }
}

const ZERO_NORMS: NormReport = NormReport {
    spectral: 0.0,
    frobenius: 0.0,
    l11: 0.0,
    max: 0.0,
    two_inf: 0.0,
    one_inf: 0.0,
    inf_two: 0.0,
};

/// `num / den`, or `None` when the denominator vanishes.
fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceParams {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Set when a block is zero or empty (or the gap vanishes) and the
    /// parameter was defaulted to 1.
    pub degenerate: [bool; 4],
    /// Whether each parameter lies in its nominal range
    /// (`[1/s, 1]`, `[1/sqrt s, 1]`, `[1/sqrt(s(d-s)), 1]`, `[1/(d-s), 1]`).
    pub in_range: [bool; 4],
}

pub fn coherence(m_star: &SymMatrix, support: &[usize]) -> Result<CoherenceParams> {
    Ok(coherence_from(&BlockSummary::new(m_star, support)?))
}

pub fn coherence_from(b: &BlockSummary) -> CoherenceParams {
    let (s, ds) = (b.s as f64, (b.d - b.s) as f64);
    let jj_max = b.jj.max;
    let mu0 = ratio(jj_max, b.lambda_bar);
    let mu1 = ratio(jj_max, b.jj.two_inf);

    let mu2 = match (b.cj, b.jc) {
        (Some(cj), Some(jc)) if cj.max > 0.0 => Some(
            (cj.max / cj.frobenius)
                .min((cj.max / cj.two_inf).max(cj.max / jc.two_inf))
                .min(cj.max / jc.inf_two),
        ),
        _ => None,
    };
    let mu3 = match b.cc {
        Some(cc) if cc.max > 0.0 => Some((cc.max / cc.spectral).min(cc.max / cc.two_inf)),
        _ => None,
    };

    let vals = [mu0, mu1, mu2, mu3];
    let degenerate = vals.map(|v| v.is_none());
    let [mu0, mu1, mu2, mu3] = vals.map(|v| v.unwrap_or(1.0));
    let slack = 1e-12;
    let within = |v: f64, lo: f64| v >= lo * (1.0 - slack) && v <= 1.0 + slack;
    let in_range = [
        within(mu0, 1.0 / s),
        within(mu1, 1.0 / s.sqrt()),
        ds == 0.0 || within(mu2, 1.0 / (s * ds).sqrt()),
        ds == 0.0 || within(mu3, 1.0 / ds),
    ];
    CoherenceParams {
        mu0,
        mu1,
        mu2,
        mu3,
        degenerate,
        in_range,
    }
}

/// Sampling and noise parameters of the observation model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub p: f64,
    pub sigma2: f64,
    pub bound: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return invalid(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.sigma2 >= 0.0) || !(self.bound >= 0.0) {
            return invalid("sigma^2 and B must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernsteinConstants {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    /// `None` when `J^c` is empty.
    pub r5: Option<f64>,
    pub r6: Option<f64>,
    pub k1: f64,
    pub k2: f64,
    pub k3: Option<f64>,
    pub c: f64,
}

/// `(c + 1) R log n + sqrt(2 (c + 1)) R' sqrt(log n)`.
fn bernstein_k(c: f64, r_lin: f64, r_sqrt: f64, n: f64) -> f64 {
    let l = n.ln();
    (c + 1.0) * r_lin * l + (2.0 * (c + 1.0)).sqrt() * r_sqrt * l.sqrt()
}

pub fn bernstein_constants(
    m_star: &SymMatrix,
    support: &[usize],
    model: &ModelParams,
    c: f64,
) -> Result<BernsteinConstants> {
    bernstein_from(&BlockSummary::new(m_star, support)?, model, c)
}

pub fn bernstein_from(b: &BlockSummary, model: &ModelParams, c: f64) -> Result<BernsteinConstants> {
    model.validate()?;
    if !(c > 0.0) {
        return invalid(format!("confidence exponent c must be positive, got {c}"));
    }
    let ModelParams { p, sigma2, bound } = *model;
    let (s, d) = (b.s as f64, b.d as f64);
    let ds = d - s;
    let q = (p * (1.0 - p)).sqrt();
    let r_max = |mx: f64| ((1.0 - p) * mx + bound).max(p * mx);
    let (cj, jc, cc) = (b.cj_or_zero(), b.jc_or_zero(), b.cc_or_zero());

    let r1 = r_max(b.jj.max);
    let r2 = q * b.jj.two_inf + (p * s * sigma2).sqrt();
    let r3 = r_max(cj.max);
    let r4 = (q * cj.two_inf + (p * ds * sigma2).sqrt()).max(q * jc.two_inf + (p * s * sigma2).sqrt());
    let has_comp = b.cc.is_some();
    let r5 = has_comp.then(|| r_max(cc.max));
    let r6 = has_comp.then(|| q * cc.two_inf + (p * ds * sigma2).sqrt());

    let k1 = bernstein_k(c, r1, r2, 2.0 * s);
    let k2 = bernstein_k(c, r3, r4, d);
    let k3 = match (r5, r6) {
        (Some(a), Some(bb)) => Some(bernstein_k(c, a, bb, 2.0 * ds)),
        _ => None,
    };
    Ok(BernsteinConstants {
        r1,
        r2,
        r3,
        r4,
        r5,
        r6,
        k1,
        k2,
        k3,
        c,
    })
}

/// `1 - s^-c - d^-c - (2s)^-c - (2(d - s))^-c`; the last term is dropped when
/// `J^c` is empty.
pub fn success_prob_bound(d: usize, s: usize, c: f64) -> f64 {
    let (d, s) = (d as f64, s as f64);
    let tail = if d > s { (2.0 * (d - s)).powf(-c) } else { 0.0 };
    1.0 - s.powf(-c) - d.powf(-c) - (2.0 * s).powf(-c) - tail
}

/// Signed margins (right side minus left side) of the three sufficient
/// conditions; positive means satisfied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Margins {
    /// Sign-consistency condition: `min |u_1i| - 2 sqrt2 (K1 + rho s) / (p lambda_bar)`.
    pub sign: f64,
    /// Dual-feasibility condition on `rho`.
    pub rho_lower: f64,
    /// Eigenvalue-match condition; when either factor on the right is
    /// negative the margin is `min(factor) - lhs`.
    pub eigen: f64,
    pub eigen_lhs: f64,
    pub eigen_factor1: f64,
    pub eigen_factor2: f64,
    pub success_prob_bound: f64,
    pub constants: BernsteinConstants,
}

impl Theorem1Margins {
    pub fn all_positive(&self) -> bool {
        self.sign >= 0.0 && self.rho_lower > 0.0 && self.eigen >= 0.0
    }
}

pub fn theorem1_margins(
    m_star: &SymMatrix,
    support: &[usize],
    u1: &[f64],
    model: &ModelParams,
    rho: f64,
    c: f64,
) -> Result<Theorem1Margins> {
    theorem1_from(&BlockSummary::new(m_star, support)?, support, u1, model, rho, c)
}

pub fn theorem1_from(
    b: &BlockSummary,
    support: &[usize],
    u1: &[f64],
    model: &ModelParams,
    rho: f64,
    c: f64,
) -> Result<Theorem1Margins> {
    if !(b.lambda_bar > 0.0) {
        return invalid(format!(
            "spectral gap of the support block must be positive, got {}",
            b.lambda_bar
        ));
    }
    if !(rho >= 0.0) {
        return invalid("rho must be nonnegative");
    }
    let k = bernstein_from(b, model, c)?;
    let ModelParams { p, sigma2, .. } = *model;
    let (s, d) = (b.s as f64, b.d as f64);
    let cj = b.cj_or_zero();
    let umin = min_abs_on(u1, support);

    let sign = umin - 2.0 * SQRT_2 * (k.k1 + rho * s) / (p * b.lambda_bar);

    let inner = (1.0 - p) * cj.frobenius.powi(2) + (d - s) * s * sigma2;
    let rho_lower = rho - (2.0 * (p * s.powf(c) * inner).sqrt() + p * cj.max);

    let eigen_lhs = (k.k2 + p * cj.spectral).powi(2) * (1.0 + s.sqrt()).powi(2);
    let f1 = p * b.lambda_bar - 2.0 * k.k1 - 2.0 * rho * s;
    let f2 = p * (b.jj_lambda1 - b.cc_lambda1.unwrap_or(0.0)) - k.k1 - k.k3.unwrap_or(0.0) - rho * d;
    let eigen = if f1 >= 0.0 && f2 >= 0.0 {
        f1 * f2 - eigen_lhs
    } else {
        f1.min(f2) - eigen_lhs
    };

    Ok(Theorem1Margins {
        sign,
        rho_lower,
        eigen,
        eigen_lhs,
        eigen_factor1: f1,
        eigen_factor2: f2,
        success_prob_bound: success_prob_bound(b.d, b.s, c),
        constants: k,
    })
}

fn min_abs_on(u: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&i| u[i].abs()).fold(f64::INFINITY, f64::min)
}

fn max_abs_on(u: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&i| u[i].abs()).fold(0.0, f64::max)
}

/// The three-term minimum driving the sample-complexity condition; block
/// terms whose `||.||_max` vanishes (or whose log factor is zero) are `+inf`.
fn complexity_min(b: &BlockSummary, mu: &CoherenceParams) -> f64 {
    let (s, d) = (b.s as f64, b.d as f64);
    let ds = d - s;
    let t1 = mu.mu1 * s.ln().sqrt();
    let t2 = match b.cj {
        Some(cj) if cj.max > 0.0 => {
            b.lambda_bar * mu.mu2 / cj.max * (1.0 / (s * s * s.sqrt())).min(1.0 / (s * (s * ds).sqrt()))
        }
        _ => f64::INFINITY,
    };
    let t3 = match b.cc {
        Some(cc) if cc.max > 0.0 && ds > 1.0 => b.lambda_bar * mu.mu3 / cc.max / ds.ln().sqrt(),
        _ => f64::INFINITY,
    };
    t1.min(t2).min(t3)
}

/// `sqrt(p / (1 - p))` times the three-term complexity minimum.
///
/// Returns `+inf` at `p = 1`.
pub fn rescaled_parameter(m_star: &SymMatrix, support: &[usize], p: f64) -> Result<f64> {
    let b = BlockSummary::new(m_star, support)?;
    rescaled_from(&b, &coherence_from(&b), p)
}

pub fn rescaled_from(b: &BlockSummary, mu: &CoherenceParams, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("p must lie in (0, 1], got {p}"));
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((p / (1.0 - p)).sqrt() * complexity_min(b, mu))
}

/// Slack used to read the asymptotic conditions at a single instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticSlack {
    /// A little-o ratio counts as consistent when at most this value.
    pub little_o: f64,
    /// A Theta ratio counts as consistent inside this interval.
    pub theta: (f64, f64),
}

impl Default for AsymptoticSlack {
    fn default() -> Self {
        Self {
            little_o: 1.0,
            theta: (0.1, 10.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Corollary1Report {
    /// `mu0 sqrt(s) log s`.
    pub support_incoherence: f64,
    /// `||M*_CJ||_max / (lambda_bar / s * min{mu2, 1/s, sqrt(s)/log d})`.
    pub offblock_magnitude: f64,
    /// `||M*_CC||_max / (lambda_bar * min{mu3, 1/log(d - s)})`.
    pub complement_magnitude: f64,
    /// `sqrt((1 - p)/p)`.
    pub missingness: f64,
    /// `missingness` over the three-term complexity minimum.
    pub sample_complexity: f64,
    /// `rho s^2 / (p lambda_bar)`.
    pub rho_scale: f64,
    /// Consistency flags for the five ratios, in the order above
    /// (the first four little-o, the last Theta).
    pub consistent: [bool; 5],
}

pub fn corollary1_report(
    m_star: &SymMatrix,
    support: &[usize],
    p: f64,
    rho: f64,
    slack: &AsymptoticSlack,
) -> Result<Corollary1Report> {
    let b = BlockSummary::new(m_star, support)?;
    corollary1_from(&b, &coherence_from(&b), p, rho, slack)
}

pub fn corollary1_from(
    b: &BlockSummary,
    mu: &CoherenceParams,
    p: f64,
    rho: f64,
    slack: &AsymptoticSlack,
) -> Result<Corollary1Report> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("p must lie in (0, 1], got {p}"));
    }
    let (s, d) = (b.s as f64, b.d as f64);
    let ds = d - s;
    let lb = b.lambda_bar;
    let support_incoherence = mu.mu0 * s.sqrt() * s.ln();

    let cj_max = b.cj.map_or(0.0, |n| n.max);
    let offblock_magnitude = if cj_max == 0.0 {
        0.0
    } else {
        cj_max / (lb / s * mu.mu2.min(1.0 / s).min(s.sqrt() / d.ln()))
    };
    let cc_max = b.cc.map_or(0.0, |n| n.max);
    let complement_magnitude = if cc_max == 0.0 {
        0.0
    } else {
        let log_term = if ds > 1.0 { 1.0 / ds.ln() } else { f64::INFINITY };
        cc_max / (lb * mu.mu3.min(log_term))
    };
    let missingness = ((1.0 - p) / p).sqrt();
    let sample_complexity = missingness / complexity_min(b, mu);
    let rho_scale = rho * s * s / (p * lb);

    let o = |r: f64| r <= slack.little_o;
    let consistent = [
        o(support_incoherence),
        o(offblock_magnitude),
        o(complement_magnitude),
        o(sample_complexity),
        rho_scale >= slack.theta.0 && rho_scale <= slack.theta.1,
    ];
    Ok(Corollary1Report {
        support_incoherence,
        offblock_magnitude,
        complement_magnitude,
        missingness,
        sample_complexity,
        rho_scale,
        consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Corollary2Report {
    pub a1: f64,
    pub a2: f64,
    /// Right side minus `1/sqrt(s)` of the dimension gate.
    pub gate: f64,
    /// `1/(16 sqrt2 log 2s) - max|u_i u_j| / min|u_i|`.
    pub sign_ratio: f64,
    /// `sqrt(p/(1-p)) / (16 sqrt2 sqrt(log 2s)) - max|u_i| / min|u_i|`.
    pub spread_ratio: f64,
    /// `(2p - 1) lambda_1 max|u_i u_j| - B`.
    pub noise_bound: f64,
    /// `rho - 2 sqrt2 sqrt(p sigma^2 s^2 (d - s))` (must be strictly positive).
    pub rho_lower: f64,
    /// `p lambda_1 min|u_i| / (8 sqrt2 s) - rho`.
    pub rho_upper: f64,
    /// `p < 0.5`: outside the regime the conditions were derived for.
    pub out_of_regime: bool,
    pub satisfied: bool,
}

/// Conditions for a rank-one truth `lambda1 u1 u1^T`.
#[allow(clippy::too_many_arguments)]
pub fn corollary2_report(
    lambda1: f64,
    u1: &[f64],
    support: &[usize],
    d: usize,
    model: &ModelParams,
    rho: f64,
) -> Result<Corollary2Report> {
    model.validate()?;
    if !(lambda1 > 0.0) {
        return invalid("rank-one eigenvalue must be positive");
    }
    let s_n = support.len();
    if s_n == 0 || s_n >= d {
        return invalid("rank-one conditions need 1 <= s < d");
    }
    let ModelParams { p, sigma2, bound } = *model;
    let (s, df) = (s_n as f64, d as f64);
    let ds = df - s;
    let log2s = (2.0 * s).ln();
    let lead = 2.0 - 1.0 / p;

    let a1 = lead * df.ln() / (8.0 * SQRT_2 * log2s)
        + ds.max(s).sqrt() * df.ln().sqrt() / (16.0 * s * s * ds.sqrt());
    let a2 = lead * (2.0 * ds).ln() / (8.0 * SQRT_2 * log2s) + (2.0 * ds).ln().sqrt() / (16.0 * s * s);

    let q = ds / s;
    let ss = (1.0 + s.sqrt()).powi(2);
    let num = 12.0 + q + 8.0 * SQRT_2 * a2
        - ((4.0 - q - 8.0 * SQRT_2 * a2).powi(2) + 512.0 * a1 * a1 * ss).sqrt();
    let den = 4.0 * SQRT_2 + SQRT_2 * q + 16.0 * a2 - 16.0 * SQRT_2 * a1 * a1 * ss;
    let gate = num / den - 1.0 / s.sqrt();

    let umin = min_abs_on(u1, support);
    let umax = max_abs_on(u1, support);
    let sign_ratio = 1.0 / (16.0 * SQRT_2 * log2s) - umax * umax / umin;
    let spread_rhs = if p < 1.0 {
        (p / (1.0 - p)).sqrt() / (16.0 * SQRT_2 * log2s.sqrt())
    } else {
        f64::INFINITY
    };
    let spread_ratio = spread_rhs - umax / umin;
    let noise_bound = (2.0 * p - 1.0) * lambda1 * umax * umax - bound;
    let rho_lower = rho - 2.0 * SQRT_2 * (p * sigma2 * s * s * ds).sqrt();
    let rho_upper = p * lambda1 * umin / (8.0 * SQRT_2 * s) - rho;

    let out_of_regime = p < 0.5;
    let satisfied = !out_of_regime
        && gate >= 0.0
        && sign_ratio >= 0.0
        && spread_ratio >= 0.0
        && noise_bound >= 0.0
        && rho_lower > 0.0
        && rho_upper >= 0.0;
    Ok(Corollary2Report {
        a1,
        a2,
        gate,
        sign_ratio,
        spread_ratio,
        noise_bound,
        rho_lower,
        rho_upper,
        out_of_regime,
        satisfied,
    })
}

/// Every closed-form quantity for one instance.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub d: usize,
    pub s: usize,
    pub model: ModelParams,
    pub rho: f64,
    pub lambda_bar: f64,
    pub coherence: CoherenceParams,
    pub theorem1: Theorem1Margins,
    pub corollary1: Corollary1Report,
    /// Evaluated with `lambda_1(M*)` and `u1` whether or not `M*` is rank one.
    pub corollary2: Option<Corollary2Report>,
    pub rescaled: f64,
    pub success_prob_bound: f64,
}

pub fn theory_report(
    m_star: &SymMatrix,
    support: &[usize],
    u1: &[f64],
    model: &ModelParams,
    rho: f64,
    c: f64,
) -> Result<TheoryReport> {
    let b = BlockSummary::new(m_star, support)?;
    let mu = coherence_from(&b);
    let theorem1 = theorem1_from(&b, support, u1, model, rho, c)?;
    let corollary1 = corollary1_from(&b, &mu, model.p, rho, &AsymptoticSlack::default())?;
    let lambda1 = sym_eig(m_star)?.lambda_max();
    let corollary2 = if support.len() < m_star.dim() && lambda1 > 0.0 {
        Some(corollary2_report(lambda1, u1, support, m_star.dim(), model, rho)?)
    } else {
        None
    };
    Ok(TheoryReport {
        d: b.d,
        s: b.s,
        model: *model,
        rho,
        lambda_bar: b.lambda_bar,
        rescaled: rescaled_from(&b, &mu, model.p)?,
        success_prob_bound: theorem1.success_prob_bound,
        coherence: mu,
        theorem1,
        corollary1,
        corollary2,
    })
}
