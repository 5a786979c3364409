//! The extended Bayes information criterion and its numerical companions.
//!
//! For a submodel `s` of size `ν` drawn from `p` candidate features,
//!
//! ```text
//! EBIC_γ(s) = n ln(RSS(s)/n) + ν ln n + 2γ ln C(p, ν)
//! ```
//!
//! With `γ = 0` this is the ordinary BIC; `γ = 1` is asymptotically the
//! modified BIC. The `lemma1_*` and `chi2_*` functions expose the two
//! asymptotic approximations the consistency argument rests on, so they can
//! be checked numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_factorial_ratio, ln_gamma, ln_gamma_q};
use crate::support::SupportSet;

/// Below this size `ln C(p, k)` is summed term by term.
const DIRECT_SUM_LIMIT: u64 = 1000;

/// `ln C(p, j)`, stable for `p` up to ~1e15.
pub fn log_binomial(p: u64, j: u64) -> Result<f64> {
    if j > p {
        return Err(Error::InvalidArgument(format!(
            "log_binomial: j = {j} outside [0, {p}]"
        )));
    }
    let k = j.min(p - j);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= DIRECT_SUM_LIMIT {
        let sum = (0..k)
            .map(|i| ((p - i) as f64 / (k - i) as f64).ln())
            .sum();
        return Ok(sum);
    }
    // k > 1000 and p - k >= k, so both Stirling expansions are in range.
    let (p, k) = (p as f64, k as f64);
    Ok(ln_factorial_ratio(p, p - k) - ln_factorial(k))
}

/// EBIC of a fitted submodel.
///
/// `p` is the size of the full feature space the submodel was chosen from,
/// not the size of any screened subset.
pub fn ebic_score(rss: f64, n: usize, p: usize, s_size: usize, gamma: f64) -> Result<f64> {
    if !(rss > 0.0) || !rss.is_finite() {
        return Err(Error::DegenerateFit { rss });
    }
    if n == 0 || s_size > p || s_size >= n {
        return Err(Error::InvalidArgument(format!(
            "ebic_score: need 0 <= s_size <= min(p, n-1), got s_size={s_size}, n={n}, p={p}"
        )));
    }
    if gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("ebic_score: gamma = {gamma} < 0")));
    }
    let nf = n as f64;
    let fit = nf * (rss / nf).ln();
    let size_penalty = s_size as f64 * nf.ln();
    let class_penalty = if gamma == 0.0 {
        0.0
    } else {
        2.0 * gamma * log_binomial(p as u64, s_size as u64)?
    };
    Ok(fit + size_penalty + class_penalty)
}

/// `γ = 1 − ln n / (C ln p)`, clamped to `[0, 1]`.
pub fn gamma_sc(n: usize, p: usize, c_divisor: f64) -> f64 {
    let g = 1.0 - (n as f64).ln() / (c_divisor * (p as f64).ln());
    g.clamp(0.0, 1.0)
}

/// Lower bound on `γ` for selection consistency when `ln p₀ / ln p → δ`:
/// `(1+δ)/(1−δ) − ln n / (2(1−δ) ln p)`.
pub fn gamma_threshold(n: usize, p: usize, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "gamma_threshold: delta = {delta} outside [0, 1)"
        )));
    }
    let ln_n = (n as f64).ln();
    let ln_p = (p as f64).ln();
    Ok((1.0 + delta) / (1.0 - delta) - ln_n / (2.0 * (1.0 - delta) * ln_p))
}

/// `ln C(p, j) / (j ln p (1 − δ))` with `δ = ln j / ln p`. Tends to one as
/// `p → ∞` with `ln j / ln p` held near `δ`.
pub fn lemma1_ratio(p: u64, j: u64) -> Result<f64> {
    if j == 0 || j >= p {
        return Err(Error::InvalidArgument(format!(
            "lemma1_ratio: need 1 <= j < p, got j={j}, p={p}"
        )));
    }
    let ln_p = (p as f64).ln();
    let delta = (j as f64).ln() / ln_p;
    Ok(log_binomial(p, j)? / (j as f64 * ln_p * (1.0 - delta)))
}

/// Smallest integer `j ≥ p^δ`, treating values within 1e-9 relative of an
/// integer as that integer (so `(10⁶)^{1/3}` gives 100, not 101).
pub fn ceil_power(p: u64, delta: f64) -> u64 {
    let r = (p as f64).powf(delta);
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        r.ceil() as u64
    }
}

/// `ln P(χ²_k ≥ m)`.
pub fn ln_chi2_tail_exact(k: u32, m: f64) -> f64 {
    ln_gamma_q(k as f64 / 2.0, m / 2.0)
}

/// `P(χ²_k ≥ m)` via the regularized upper incomplete gamma `Q(k/2, m/2)`.
/// Underflows to zero for very large `m`; use [`ln_chi2_tail_exact`] there.
pub fn chi2_tail_exact(k: u32, m: f64) -> f64 {
    ln_chi2_tail_exact(k, m).exp()
}

/// `ln` of the leading tail term `(m/2)^{k/2−1} e^{−m/2} / Γ(k/2)`.
pub fn ln_chi2_tail_approx(k: u32, m: f64) -> f64 {
    let half_k = k as f64 / 2.0;
    let half_m = m / 2.0;
    (half_k - 1.0) * half_m.ln() - half_m - ln_gamma(half_k)
}

pub fn chi2_tail_approx(k: u32, m: f64) -> f64 {
    ln_chi2_tail_approx(k, m).exp()
}

/// `approx / exact`, evaluated in log space so it stays finite where both
/// tails underflow.
pub fn chi2_tail_ratio(k: u32, m: f64) -> f64 {
    (ln_chi2_tail_approx(k, m) - ln_chi2_tail_exact(k, m)).exp()
}

/// How `γ` is chosen for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaPolicy {
    Fixed(f64),
    /// `γ = 1 − ln n / (C ln p)` for a divisor `C > 2`.
    ScaledConsistent(f64),
}

impl GammaPolicy {
    pub fn bic() -> Self {
        GammaPolicy::Fixed(0.0)
    }

    pub fn mbic() -> Self {
        GammaPolicy::Fixed(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GammaPolicy::Fixed(g) if !(0.0..=1.0).contains(&g) => Err(Error::config(
                "gamma",
                format!("fixed gamma {g} outside [0, 1]"),
            )),
            GammaPolicy::ScaledConsistent(c) if !(c > 2.0) => Err(Error::config(
                "gamma",
                format!("scaled-consistent divisor {c} must exceed 2"),
            )),
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, n: usize, p: usize) -> f64 {
        match *self {
            GammaPolicy::Fixed(g) => g.clamp(0.0, 1.0),
            GammaPolicy::ScaledConsistent(c) => gamma_sc(n, p.max(2), c),
        }
    }
}

/// A scored submodel.
#[derive(Debug, Clone, PartialEq)]
pub struct EbicScore {
    pub value: f64,
    pub support: SupportSet,
    pub gamma: f64,
}
