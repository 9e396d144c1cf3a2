//! Beta-binomial observation model for the number of sampled triangles.
//!
//! A node with `i` triangles shows `j` of them after sampling with
//! probability
//!
//! ```text
//! b_ji(a) = C(i,j) * prod_{s<j}(s a + p) * prod_{s<i-j}(s a + 1 - p) / prod_{s<i}(s a + 1)
//! ```
//!
//! where `p` is the per-triangle sampling probability and `a >= 0` the
//! overdispersion. At `a = 0` this is `Binomial(i, p)`. Everything is
//! evaluated as sums of logarithms; `i` runs up to 10^4.
//!
//! Derived quantities:
//! - `q_i(a) = P(Y = 0 | X = i) = prod_{s<i} (1 - p / (s a + 1))`
//! - `a_ji(a) = b_ji(a) / (1 - q_i(a))`, the law of `Y` given `Y >= 1`
//! - `q(theta+, a) = sum_i q_i(a) theta+_i`

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::model::TriadicDistribution;

/// Upper end of the overdispersion search interval.
pub const ALPHA_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaBinParams {
    pub p_delta: f64,
    pub alpha: f64,
}

impl BetaBinParams {
    pub fn new(p_delta: f64, alpha: f64) -> Result<Self> {
        if !(p_delta > 0.0 && p_delta <= 1.0) {
            return Err(Error::Domain(format!("p_delta must lie in (0, 1], got {p_delta}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(BetaBinParams { p_delta, alpha })
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        BetaBinParams { alpha, ..self }
    }

    /// Pairwise covariance `a p (1 - p) / (1 + a)` between the Bernoulli
    /// indicators of two triangles of the same node. Diagnostic only.
    pub fn pairwise_covariance(&self) -> f64 {
        self.alpha * self.p_delta * (1.0 - self.p_delta) / (1.0 + self.alpha)
    }
}

/// `sum_{s<len} ln(s * step + start)`, with `ln 0 = -inf` for the s = 0 term.
fn log_rising(start: f64, step: f64, len: usize) -> f64 {
    (0..len).map(|s| (s as f64 * step + start).ln()).sum()
}

/// `ln b_ji(alpha)` by direct summation.
pub fn log_b(j: usize, i: usize, params: &BetaBinParams) -> Result<f64> {
    if j > i {
        return Err(Error::Domain(format!("j={j} exceeds i={i}")));
    }
    let a = params.alpha;
    let p = params.p_delta;
    Ok(ln_binomial(i as u64, j as u64) + log_rising(p, a, j) + log_rising(1.0 - p, a, i - j)
        - log_rising(1.0, a, i))
}

/// `ln q_i(alpha)`.
pub fn log_q_i(i: usize, params: &BetaBinParams) -> f64 {
    (0..i)
        .map(|s| (-params.p_delta / (s as f64 * params.alpha + 1.0)).ln_1p())
        .sum()
}

/// Probability that none of a node's `i` triangles is sampled.
pub fn q_i(i: usize, params: &BetaBinParams) -> f64 {
    log_q_i(i, params).exp()
}

/// `ln(1 - q)` given `ln q`, accurate when `q` is close to 0 or 1.
pub(crate) fn log_one_minus_exp(ln_q: f64) -> f64 {
    if ln_q > -std::f64::consts::LN_2 {
        (-ln_q.exp_m1()).ln()
    } else {
        (-ln_q.exp()).ln_1p()
    }
}

/// `ln a_ji(alpha)`: the sampled-triangle law conditioned on `Y >= 1`.
pub fn log_a(j: usize, i: usize, params: &BetaBinParams) -> Result<f64> {
    if j == 0 || j > i {
        return Err(Error::Domain(format!("a_ji needs 1 <= j <= i, got j={j} i={i}")));
    }
    let ln_q = log_q_i(i, params);
    if ln_q == 0.0 {
        return Err(Error::Domain(format!("q_{i} = 1: no triangle can be sampled")));
    }
    Ok(log_b(j, i, params)? - log_one_minus_exp(ln_q))
}

/// `q(theta+, alpha) = sum_i q_i(alpha) theta+_i`, the chance that a node
/// with at least one triangle shows none.
pub fn q_aggregate(theta_plus: &TriadicDistribution, params: &BetaBinParams) -> f64 {
    let table = KernelTable::new(params, theta_plus.w());
    theta_plus
        .sparse()
        .into_iter()
        .map(|(i, p)| table.q(i) * p)
        .sum()
}

/// Prefix sums with Neumaier compensation: `out[k] = sum_{s<k} f(s)`.
fn prefix_log_sums(len: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for s in 0..len {
        let x = f(s);
        if x.is_infinite() || sum.is_infinite() {
            sum += x;
            comp = 0.0;
        } else {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        out.push(sum + comp);
    }
    out
}

/// Log-factorials `ln k!` for `k = 0..=n`.
#[derive(Clone, Debug)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        LnFactorials(
            (0..=n as u64)
                .map(|k| if k < 2 { 0.0 } else { statrs::function::gamma::ln_gamma(k as f64 + 1.0) })
                .collect(),
        )
    }

    pub fn ln_choose(&self, i: usize, j: usize) -> f64 {
        if j == 0 || j == i {
            return 0.0;
        }
        self.0[i] - self.0[j] - self.0[i - j]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Every factor of `b_ji` and `q_i` for one `(p_delta, alpha)`, prefix-summed
/// up to `w`, so a table entry costs O(1) after an O(w) build.
#[derive(Clone, Debug)]
pub struct KernelTable {
    params: BetaBinParams,
    ln_success: Vec<f64>,
    ln_failure: Vec<f64>,
    ln_norm: Vec<f64>,
    ln_q: Vec<f64>,
    ln_fact: std::sync::Arc<LnFactorials>,
}

impl KernelTable {
    pub fn new(params: &BetaBinParams, w: usize) -> Self {
        Self::with_factorials(params, w, std::sync::Arc::new(LnFactorials::new(w)))
    }

    /// Reuses a log-factorial table across `alpha` updates.
    pub fn with_factorials(
        params: &BetaBinParams,
        w: usize,
        ln_fact: std::sync::Arc<LnFactorials>,
    ) -> Self {
        assert!(ln_fact.len() > w, "log-factorial table shorter than w");
        let a = params.alpha;
        let p = params.p_delta;
        KernelTable {
            params: *params,
            ln_success: prefix_log_sums(w, |s| (s as f64 * a + p).ln()),
            ln_failure: prefix_log_sums(w, |s| (s as f64 * a + 1.0 - p).ln()),
            ln_norm: prefix_log_sums(w, |s| (s as f64 * a + 1.0).ln()),
            ln_q: prefix_log_sums(w, |s| (-p / (s as f64 * a + 1.0)).ln_1p()),
            ln_fact,
        }
    }

    pub fn params(&self) -> &BetaBinParams {
        &self.params
    }

    pub fn w(&self) -> usize {
        self.ln_norm.len() - 1
    }

    /// `ln b_ji`; `-inf` when `j > i`.
    #[inline]
    pub fn log_b(&self, j: usize, i: usize) -> f64 {
        if j > i {
            return f64::NEG_INFINITY;
        }
        self.ln_fact.ln_choose(i, j) + self.ln_success[j] + self.ln_failure[i - j] - self.ln_norm[i]
    }

    #[inline]
    pub fn log_q(&self, i: usize) -> f64 {
        self.ln_q[i]
    }

    #[inline]
    pub fn q(&self, i: usize) -> f64 {
        self.ln_q[i].exp()
    }

    /// `ln(1 - q_i)`.
    #[inline]
    pub fn log_detect(&self, i: usize) -> f64 {
        log_one_minus_exp(self.ln_q[i])
    }

    /// `ln a_ji`; `-inf` outside `1 <= j <= i`.
    #[inline]
    pub fn log_a(&self, j: usize, i: usize) -> f64 {
        if j == 0 || j > i {
            return f64::NEG_INFINITY;
        }
        self.log_b(j, i) - self.log_detect(i)
    }
}
