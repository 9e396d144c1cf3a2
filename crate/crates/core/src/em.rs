//! Maximum-likelihood estimation of triadic cardinality distributions by EM.
//!
//! Two variants share one engine:
//!
//! - **known population** ([`em_known_n`]): the histogram is calibrated so
//!   `g_0` counts every node without a sampled triangle, and the model is
//!   `P(Y = j) = sum_i b_ji(alpha) theta_i` over `i = 0..=W`.
//! - **unknown population** ([`em_unknown_n`]): `g_0` is discarded and the
//!   zero-truncated model `P(Y = j | Y >= 1) = sum_i a_ji(alpha) phi_i` is fit
//!   over `i = 1..=W`. `phi` is then mapped back to `theta+` and the number of
//!   triangle-bearing nodes `n+` is estimated from the miss probability.
//!
//! Each iteration is an E-step (posterior over the hidden true count), a
//! closed-form M-step for the distribution, and a bounded one-dimensional
//! search for `alpha`. The search never returns a point with lower expected
//! complete log-likelihood than the current `alpha`, so the observed
//! log-likelihood trace is non-decreasing.

use std::sync::Arc;

use crate::betabin::{log_one_minus_exp, BetaBinParams, KernelTable, LnFactorials, ALPHA_MAX};
use crate::error::{Error, Result};
use crate::model::{SupportFloor, TriadicDistribution, TriadicHistogram, DEFAULT_W};

/// Rows whose probability stays below this for [`FREEZE_AFTER`] consecutive
/// iterations are dropped from the active support.
pub const FREEZE_THRESHOLD: f64 = 1e-15;
pub const FREEZE_AFTER: usize = 5;
/// The `alpha` step runs on every one of the first `ALPHA_WARMUP`
/// iterations and on every `ALPHA_EVERY`-th after that. Skipping it keeps
/// the log-likelihood non-decreasing since the distribution step alone
/// already increases it.
pub const ALPHA_WARMUP: usize = 10;
pub const ALPHA_EVERY: usize = 10;
/// Mass re-seeded when an observed count loses all model support.
pub const RESEED_MASS: f64 = 1e-12;
/// `q(theta+, alpha)` at or above `1 - UNSTABLE_EPS` makes `n+` meaningless.
pub const UNSTABLE_EPS: f64 = 1e-9;

/// Starting point for the distribution iterate.
#[derive(Clone, Debug, PartialEq)]
pub enum InitTheta {
    /// Uniform over the support.
    Uniform,
    /// Each observed count `j` placed at `round(j / p_delta)`, mixed with a
    /// uniform floor carrying `floor_mass` of the total so no cell starts
    /// at zero.
    ScaledEmpirical { floor_mass: f64 },
    /// Explicit weights over `0..=W` (known population) or `1..=W`.
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    /// Truncation bound `W`.
    pub w: usize,
    pub max_iters: usize,
    /// Stop when `|dL| <= ll_tol * |L|`.
    pub ll_tol: f64,
    /// Absolute tolerance of the `alpha` line search.
    pub alpha_tol: f64,
    pub init_theta: InitTheta,
    pub init_alpha: f64,
    pub alpha_max: f64,
    /// When false `alpha` stays at the value in the model parameters.
    pub fit_alpha: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            w: DEFAULT_W,
            max_iters: 500,
            ll_tol: 1e-8,
            alpha_tol: 1e-7,
            init_theta: InitTheta::ScaledEmpirical { floor_mass: 1e-3 },
            init_alpha: 0.01,
            alpha_max: ALPHA_MAX,
            fit_alpha: true,
        }
    }
}

impl EmConfig {
    pub fn with_w(mut self, w: usize) -> Self {
        self.w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.w == 0 {
            return Err(Error::Config("W must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.ll_tol > 0.0) || !(self.alpha_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.alpha_max > 0.0) || !(self.init_alpha >= 0.0) || self.init_alpha > self.alpha_max
        {
            return Err(Error::Config(format!(
                "need 0 <= init_alpha <= alpha_max, got {} and {}",
                self.init_alpha, self.alpha_max
            )));
        }
        if let InitTheta::ScaledEmpirical { floor_mass } = self.init_theta {
            if !(floor_mass > 0.0 && floor_mass <= 1.0) {
                return Err(Error::Config("floor_mass must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Which observation law the engine fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Channel {
    /// `b_ji`, support from 0, observations from 0.
    Full,
    /// `a_ji`, support from 1, observations from 1.
    ZeroTruncated,
}

impl Channel {
    fn floor(self) -> usize {
        match self {
            Channel::Full => 0,
            Channel::ZeroTruncated => 1,
        }
    }

    #[inline]
    fn log_kernel(self, table: &KernelTable, j: usize, i: usize) -> f64 {
        match self {
            Channel::Full => table.log_b(j, i),
            Channel::ZeroTruncated => table.log_a(j, i),
        }
    }
}

/// Posterior expected counts `E[z_ij]`: nodes with `i` true triangles of which
/// `j` were sampled. Stored column-wise for each observed `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedCounts {
    w: usize,
    columns: Vec<(usize, Vec<f64>)>,
}

impl ExpectedCounts {
    pub fn w(&self) -> usize {
        self.w
    }

    /// `E[z_ij]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns
            .iter()
            .find(|(jj, _)| *jj == j)
            .and_then(|(_, col)| col.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Observed sampled-triangle counts with a column.
    pub fn observed(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns.iter().map(|(j, _)| *j)
    }

    /// `sum_i E[z_ij]`, which equals `g_j` after an E-step.
    pub fn column_sum(&self, j: usize) -> f64 {
        self.columns
            .iter()
            .find(|(jj, _)| *jj == j)
            .map(|(_, col)| col.iter().sum())
            .unwrap_or(0.0)
    }

    /// `sum_j E[z_ij]` for every `i = 0..=W`.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.w + 1];
        for (_, col) in &self.columns {
            for (r, z) in rows.iter_mut().zip(col) {
                *r += z;
            }
        }
        rows
    }

    pub fn total(&self) -> f64 {
        self.columns.iter().map(|(_, c)| c.iter().sum::<f64>()).sum()
    }

    /// Builds a matrix from explicit columns; used to drive the M-steps
    /// directly.
    pub fn from_columns(w: usize, columns: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        for (j, col) in &columns {
            if col.len() != w + 1 {
                return Err(Error::Domain(format!("column {j} has length {}, expected {}", col.len(), w + 1)));
            }
            if col.iter().any(|&z| !(z >= 0.0)) {
                return Err(Error::Domain(format!("column {j} has a negative entry")));
            }
        }
        Ok(ExpectedCounts { w, columns })
    }
}

/// Iterate of the EM loop.
#[derive(Clone, Debug)]
pub struct EmState {
    /// `theta` for the known-population fit, `phi` for the unknown one.
    pub theta_or_phi: TriadicDistribution,
    pub alpha: f64,
    pub expected_z: ExpectedCounts,
    /// Observed log-likelihood at every E-step; the last entry belongs to the
    /// returned parameters.
    pub ll_trace: Vec<f64>,
    pub converged: bool,
    /// Number of M-steps performed.
    pub iterations: usize,
}

/// Known-population fit.
#[derive(Clone, Debug)]
pub struct KnownSizeFit {
    pub theta: TriadicDistribution,
    pub alpha: f64,
    pub state: EmState,
}

/// Unknown-population fit.
#[derive(Clone, Debug)]
pub struct UnknownSizeFit {
    pub theta_plus: TriadicDistribution,
    pub alpha: f64,
    /// Estimated number of nodes with at least one triangle; not rounded.
    pub n_plus: f64,
    pub state: EmState,
}

/// Observed log-likelihood `sum_j g_j ln sum_i b_ji(alpha) theta_i` of a
/// calibrated histogram.
pub fn log_likelihood(
    histogram: &TriadicHistogram,
    theta: &TriadicDistribution,
    params: &BetaBinParams,
) -> Result<f64> {
    if !histogram.is_calibrated() {
        return Err(Error::Uncalibrated);
    }
    let w = theta.w();
    let obs = observations(&histogram.clamped(w), Channel::Full);
    let table = KernelTable::new(params, w);
    let dense = theta.dense(w);
    Ok(observed_ll(&obs, &dense, &table, Channel::Full, &support_of(&dense, 0)))
}

/// Zero-truncated log-likelihood `sum_{j>=1} g_j ln sum_i a_ji(alpha) phi_i`.
pub fn log_likelihood_truncated(
    histogram: &TriadicHistogram,
    phi: &TriadicDistribution,
    params: &BetaBinParams,
) -> Result<f64> {
    let w = phi.w();
    let obs = observations(&histogram.positive_part().clamped(w), Channel::ZeroTruncated);
    let table = KernelTable::new(params, w);
    let mut dense = phi.dense(w);
    dense[0] = 0.0;
    Ok(observed_ll(&obs, &dense, &table, Channel::ZeroTruncated, &support_of(&dense, 1)))
}

/// One E-step of the known-population fit: `E[z_ij] = g_j p(i | j)`.
pub fn e_step(
    histogram: &TriadicHistogram,
    theta: &TriadicDistribution,
    params: &BetaBinParams,
) -> Result<ExpectedCounts> {
    if !histogram.is_calibrated() {
        return Err(Error::Uncalibrated);
    }
    let w = theta.w();
    let obs = observations(&histogram.clamped(w), Channel::Full);
    let table = KernelTable::new(params, w);
    let dense = theta.dense(w);
    let active = support_of(&dense, 0);
    let mut z = empty_counts(w, &obs);
    match expectation(&obs, &dense, &active, &table, Channel::Full, &mut z) {
        Ok(_) => Ok(z),
        Err(j) => Err(Error::ModelSupport { j }),
    }
}

/// Closed-form distribution update `theta_i = sum_j E[z_ij] / sum E[z]`.
pub fn m_step_theta(expected_z: &ExpectedCounts) -> Result<TriadicDistribution> {
    m_step_distribution(expected_z, SupportFloor::Zero)
}

fn m_step_distribution(expected_z: &ExpectedCounts, floor: SupportFloor) -> Result<TriadicDistribution> {
    let rows = expected_z.row_sums();
    let total: f64 = rows[floor.offset()..].iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("expected counts are all zero".into()));
    }
    let probs: Vec<f64> = rows[floor.offset()..].iter().map(|r| r / total).collect();
    Ok(TriadicDistribution::new(probs, floor).unwrap_or_else(|_| {
        // Re-normalise away accumulated rounding.
        let s: f64 = rows[floor.offset()..].iter().sum();
        TriadicDistribution::from_weights(rows[floor.offset()..].iter().map(|r| r / s).collect(), floor)
            .expect("positive total")
    }))
}

/// `alpha` update for the known-population fit: maximises
/// `Q(alpha) = sum_ij E[z_ij] ln b_ji(alpha)` over `[0, alpha_max]`.
pub fn m_step_alpha(
    expected_z: &ExpectedCounts,
    alpha_current: f64,
    params: &BetaBinParams,
    config: &EmConfig,
) -> Result<f64> {
    let objective = AlphaObjective::new(expected_z, params.p_delta, Channel::Full);
    maximize_alpha(&objective, alpha_current, config)
}

/// Expected complete log-likelihood of `alpha` (dropping terms constant in
/// `alpha`), for the known-population kernel.
pub fn alpha_objective(expected_z: &ExpectedCounts, params: &BetaBinParams) -> f64 {
    AlphaObjective::new(expected_z, params.p_delta, Channel::Full).eval(params.alpha)
}

/// Runs EM on a calibrated histogram.
pub fn em_known_n(
    histogram: &TriadicHistogram,
    params: &BetaBinParams,
    config: &EmConfig,
) -> Result<KnownSizeFit> {
    if !histogram.is_calibrated() {
        return Err(Error::Uncalibrated);
    }
    if histogram.total() == 0 {
        return Err(Error::Degenerate("histogram is empty".into()));
    }
    let state = run(histogram, params, config, Channel::Full)?;
    Ok(KnownSizeFit {
        theta: state.theta_or_phi.clone(),
        alpha: state.alpha,
        state,
    })
}

/// Runs EM on `g+` (bin 0 is ignored), rescales `phi` to `theta+` and
/// estimates `n+`.
pub fn em_unknown_n(
    histogram: &TriadicHistogram,
    params: &BetaBinParams,
    config: &EmConfig,
) -> Result<UnknownSizeFit> {
    let positive = histogram.positive_part();
    if positive.with_triangles() == 0 {
        return Err(Error::NoSignal);
    }
    let state = run(&positive, params, config, Channel::ZeroTruncated)?;
    let fitted = params.with_alpha(state.alpha);
    let theta_plus = theta_plus_from_phi(&state.theta_or_phi, &fitted)?;
    let n_plus = estimate_n_plus(&positive, &theta_plus, &fitted)?;
    Ok(UnknownSizeFit {
        theta_plus,
        alpha: state.alpha,
        n_plus,
        state,
    })
}

/// `phi_i ∝ theta+_i (1 - q_i)`: the law of the true count among nodes that
/// show at least one sampled triangle.
pub fn phi_from_theta_plus(
    theta_plus: &TriadicDistribution,
    params: &BetaBinParams,
) -> Result<TriadicDistribution> {
    let w = theta_plus.w();
    let table = KernelTable::new(params, w);
    let weights: Vec<f64> = (1..=w)
        .map(|i| theta_plus.prob(i) * table.log_detect(i).exp())
        .collect();
    TriadicDistribution::from_weights(weights, SupportFloor::One)
}

/// Inverse of [`phi_from_theta_plus`]: `theta+_i ∝ phi_i / (1 - q_i)`.
pub fn theta_plus_from_phi(phi: &TriadicDistribution, params: &BetaBinParams) -> Result<TriadicDistribution> {
    let w = phi.w();
    let table = KernelTable::new(params, w);
    let weights: Vec<f64> = (1..=w)
        .map(|i| {
            let p = phi.prob(i);
            if p > 0.0 {
                p * (-table.log_detect(i)).exp()
            } else {
                0.0
            }
        })
        .collect();
    TriadicDistribution::from_weights(weights, SupportFloor::One)
}

/// `n+ = sum_{j>=1} g_j / (1 - q(theta+, alpha))`.
pub fn estimate_n_plus(
    histogram: &TriadicHistogram,
    theta_plus: &TriadicDistribution,
    params: &BetaBinParams,
) -> Result<f64> {
    let observed = histogram.with_triangles();
    if observed == 0 {
        return Err(Error::NoSignal);
    }
    let q = crate::betabin::q_aggregate(theta_plus, params);
    if !(q < 1.0 - UNSTABLE_EPS) {
        return Err(Error::Unstable { q });
    }
    Ok(observed as f64 / (1.0 - q))
}

// ---------------------------------------------------------------------------
// Engine

fn observations(histogram: &TriadicHistogram, channel: Channel) -> Vec<(usize, f64)> {
    histogram
        .sparse()
        .into_iter()
        .filter(|&(j, _)| j >= channel.floor())
        .map(|(j, c)| (j, c as f64))
        .collect()
}

fn support_of(dense: &[f64], floor: usize) -> Vec<usize> {
    (floor..dense.len()).filter(|&i| dense[i] > 0.0).collect()
}

fn empty_counts(w: usize, obs: &[(usize, f64)]) -> ExpectedCounts {
    ExpectedCounts {
        w,
        columns: obs.iter().map(|&(j, _)| (j, vec![0.0; w + 1])).collect(),
    }
}

/// `ln sum_i exp(log_kernel(j, i) + ln theta_i)` over the active support.
fn log_mix(j: usize, theta: &[f64], active: &[usize], table: &KernelTable, channel: Channel) -> f64 {
    let start = active.partition_point(|&i| i < j);
    let mut max = f64::NEG_INFINITY;
    for &i in &active[start..] {
        let v = channel.log_kernel(table, j, i) + theta[i].ln();
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = active[start..]
        .iter()
        .map(|&i| (channel.log_kernel(table, j, i) + theta[i].ln() - max).exp())
        .sum();
    max + s.ln()
}

fn observed_ll(
    obs: &[(usize, f64)],
    theta: &[f64],
    table: &KernelTable,
    channel: Channel,
    active: &[usize],
) -> f64 {
    obs.iter()
        .map(|&(j, g)| g * log_mix(j, theta, active, table, channel))
        .sum()
}

/// Fills `z` with posterior expected counts and returns the observed
/// log-likelihood. Fails with the first `j` that has no model mass.
fn expectation(
    obs: &[(usize, f64)],
    theta: &[f64],
    active: &[usize],
    table: &KernelTable,
    channel: Channel,
    z: &mut ExpectedCounts,
) -> std::result::Result<f64, usize> {
    let mut ll = 0.0;
    for (&(j, g), (_, col)) in obs.iter().zip(z.columns.iter_mut()) {
        col.iter_mut().for_each(|c| *c = 0.0);
        let start = active.partition_point(|&i| i < j);
        let mut max = f64::NEG_INFINITY;
        for &i in &active[start..] {
            let v = channel.log_kernel(table, j, i) + theta[i].ln();
            col[i] = v;
            if v > max {
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(j);
        }
        let mut s = 0.0;
        for &i in &active[start..] {
            let e = (col[i] - max).exp();
            col[i] = e;
            s += e;
        }
        let scale = g / s;
        for &i in &active[start..] {
            col[i] *= scale;
        }
        ll += g * (max + s.ln());
    }
    Ok(ll)
}

/// `b_ji` (or `a_ji`) in linear scale for every observed `j`, each column
/// divided by its largest entry. Rebuilt only when `alpha` moves.
struct KernelCache {
    columns: Vec<Vec<f64>>,
    log_scale: Vec<f64>,
}

impl KernelCache {
    fn new(obs: &[(usize, f64)], table: &KernelTable, channel: Channel) -> Self {
        let w = table.w();
        let mut columns = Vec::with_capacity(obs.len());
        let mut log_scale = Vec::with_capacity(obs.len());
        for &(j, _) in obs {
            let mut col = vec![0.0; w + 1];
            let mut max = f64::NEG_INFINITY;
            for (i, slot) in col.iter_mut().enumerate().skip(j) {
                *slot = channel.log_kernel(table, j, i);
                max = max.max(*slot);
            }
            for v in &mut col[j..] {
                *v = if max.is_finite() { (*v - max).exp() } else { 0.0 };
            }
            columns.push(col);
            log_scale.push(max);
        }
        KernelCache { columns, log_scale }
    }
}

/// [`expectation`] using a [`KernelCache`]; columns whose linear sum
/// underflows are redone in log space.
fn expectation_cached(
    obs: &[(usize, f64)],
    theta: &[f64],
    active: &[usize],
    cache: &KernelCache,
    table: &KernelTable,
    channel: Channel,
    z: &mut ExpectedCounts,
) -> std::result::Result<f64, usize> {
    let mut ll = 0.0;
    for (k, (&(j, g), (_, col))) in obs.iter().zip(z.columns.iter_mut()).enumerate() {
        let kern = &cache.columns[k];
        let start = active.partition_point(|&i| i < j);
        let support = &active[start..];
        let s: f64 = support.iter().map(|&i| kern[i] * theta[i]).sum();
        col.iter_mut().for_each(|c| *c = 0.0);
        if s > 1e-280 && s.is_finite() {
            let scale = g / s;
            for &i in support {
                col[i] = kern[i] * theta[i] * scale;
            }
            ll += g * (cache.log_scale[k] + s.ln());
        } else {
            let single = [(j, g)];
            let mut one = ExpectedCounts {
                w: z.w,
                columns: vec![(j, std::mem::take(col))],
            };
            ll += expectation(&single, theta, active, table, channel, &mut one)?;
            *col = one.columns.pop().expect("one column").1;
        }
    }
    Ok(ll)
}

fn initial_theta(
    obs: &[(usize, f64)],
    p_delta: f64,
    config: &EmConfig,
    channel: Channel,
) -> Result<Vec<f64>> {
    let w = config.w;
    let floor = channel.floor();
    let cells = (w + 1 - floor) as f64;
    let mut theta = vec![0.0; w + 1];
    match &config.init_theta {
        InitTheta::Uniform => {
            theta[floor..].iter_mut().for_each(|t| *t = 1.0 / cells);
        }
        InitTheta::ScaledEmpirical { floor_mass } => {
            let total: f64 = obs.iter().map(|&(_, g)| g).sum();
            for &(j, g) in obs {
                let i = ((j as f64 / p_delta).round() as usize).clamp(floor.max(j), w);
                theta[i] += (1.0 - floor_mass) * g / total;
            }
            theta[floor..].iter_mut().for_each(|t| *t += floor_mass / cells);
        }
        InitTheta::Custom(weights) => {
            let expected = w + 1 - floor;
            let src: &[f64] = if weights.len() == expected {
                weights
            } else if weights.len() == w + 1 && floor == 1 {
                &weights[1..]
            } else {
                return Err(Error::Config(format!(
                    "custom initial distribution has {} entries, expected {expected}",
                    weights.len()
                )));
            };
            let s: f64 = src.iter().sum();
            if !(s > 0.0) || src.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::Config("custom initial distribution must be non-negative with positive mass".into()));
            }
            for (t, &x) in theta[floor..].iter_mut().zip(src) {
                *t = x / s;
            }
        }
    }
    Ok(theta)
}

fn normalize(theta: &mut [f64]) {
    let s: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= s);
}

fn run(
    histogram: &TriadicHistogram,
    params: &BetaBinParams,
    config: &EmConfig,
    channel: Channel,
) -> Result<EmState> {
    config.validate()?;
    let w = config.w;
    let obs = observations(&histogram.clamped(w), channel);
    if obs.is_empty() {
        return Err(Error::NoSignal);
    }
    let ln_fact = Arc::new(LnFactorials::new(w));
    let mut alpha = if config.fit_alpha { config.init_alpha } else { params.alpha };
    let mut theta = initial_theta(&obs, params.p_delta, config, channel)?;
    let mut active = support_of(&theta, channel.floor());
    let mut small_streak = vec![0usize; w + 1];
    let mut z = empty_counts(w, &obs);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let table_for = |a: f64| KernelTable::with_factorials(&params.with_alpha(a), w, ln_fact.clone());
    let mut table = table_for(alpha);
    let mut cache = KernelCache::new(&obs, &table, channel);
    // alpha is refreshed every iteration at first, then every
    // ALPHA_EVERY iterations; convergence is only accepted right after a
    // refresh so the reported alpha is a maximiser for the final theta.
    let mut alpha_fresh = !config.fit_alpha;

    loop {
        let ll = loop {
            match expectation_cached(&obs, &theta, &active, &cache, &table, channel, &mut z) {
                Ok(ll) => break ll,
                Err(j) => reseed(&mut theta, &mut active, &mut small_streak, j, w)?,
            }
        };
        if !ll.is_finite() {
            return Err(Error::Numeric(format!(
                "log-likelihood {ll} at iteration {iterations} (alpha {alpha})"
            )));
        }
        let mut settled = false;
        if let Some(&prev) = trace.last() {
            let delta: f64 = ll - prev;
            settled = delta.abs() <= config.ll_tol * ll.abs();
            if settled && alpha_fresh {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == config.max_iters {
            break;
        }

        // M-step: distribution.
        let rows = z.row_sums();
        let total: f64 = rows[channel.floor()..].iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("expected counts are all zero".into()));
        }
        for &i in &active {
            theta[i] = rows[i] / total;
        }
        // M-step: alpha.
        if config.fit_alpha {
            let due = iterations < ALPHA_WARMUP || iterations % ALPHA_EVERY == 0 || settled;
            alpha_fresh = due;
            if due {
                let objective = AlphaObjective::new(&z, params.p_delta, channel);
                let next = maximize_alpha(&objective, alpha, config)?;
                if (next - alpha).abs() > config.alpha_tol {
                    alpha = next;
                    table = table_for(alpha);
                    cache = KernelCache::new(&obs, &table, channel);
                }
            }
        }
        freeze_small_rows(&mut theta, &mut active, &mut small_streak);
        iterations += 1;
    }

    let floor = if channel == Channel::Full { SupportFloor::Zero } else { SupportFloor::One };
    let probs = theta[channel.floor()..].to_vec();
    let theta_or_phi = TriadicDistribution::from_weights(probs, floor)?;
    Ok(EmState {
        theta_or_phi,
        alpha,
        expected_z: z,
        ll_trace: trace,
        converged,
        iterations,
    })
}

fn freeze_small_rows(theta: &mut [f64], active: &mut Vec<usize>, streak: &mut [usize]) {
    let mut dropped = false;
    active.retain(|&i| {
        if theta[i] < FREEZE_THRESHOLD {
            streak[i] += 1;
            if streak[i] >= FREEZE_AFTER {
                theta[i] = 0.0;
                dropped = true;
                return false;
            }
        } else {
            streak[i] = 0;
        }
        true
    });
    if dropped {
        normalize(theta);
    }
}

fn reseed(
    theta: &mut [f64],
    active: &mut Vec<usize>,
    streak: &mut [usize],
    j: usize,
    w: usize,
) -> Result<()> {
    if j > w {
        return Err(Error::ModelSupport { j });
    }
    log::debug!("re-seeding support at i >= {j}");
    let share = RESEED_MASS / (w + 1 - j) as f64;
    for i in j..=w {
        theta[i] += share;
        streak[i] = 0;
    }
    normalize(theta);
    let floor = active.first().copied().unwrap_or(0).min(j);
    *active = (floor..=w).filter(|&i| theta[i] > 0.0).collect();
    Ok(())
}

/// `Q(alpha)` reduced to O(W) work per evaluation.
///
/// Every log factor of `b_ji` is a prefix sum over `s`, so the expected
/// complete log-likelihood collapses to
/// `sum_s [S_s ln(s a + p) + F_s ln(s a + 1 - p) - N_s ln(s a + 1)]`
/// with tail weights `S_s = sum_{j > s} z_.j`, `F_s = sum_{i - j > s} z_ij`,
/// `N_s = sum_{i > s} z_i.`. The zero-truncated kernel adds
/// `- sum_i z_i. ln(1 - q_i(a))`.
struct AlphaObjective {
    p: f64,
    success: Vec<f64>,
    failure: Vec<f64>,
    norm: Vec<f64>,
    detect: Option<Vec<f64>>,
}

fn tail_sums(mut v: Vec<f64>) -> Vec<f64> {
    // tail[s] = sum_{k > s} v[k]
    let mut acc = 0.0;
    for k in (0..v.len()).rev() {
        let here = v[k];
        v[k] = acc;
        acc += here;
    }
    v
}

impl AlphaObjective {
    fn new(z: &ExpectedCounts, p: f64, channel: Channel) -> Self {
        let w = z.w;
        let mut by_j = vec![0.0; w + 1];
        let mut by_gap = vec![0.0; w + 1];
        let mut by_i = vec![0.0; w + 1];
        for (j, col) in &z.columns {
            for (i, &v) in col.iter().enumerate().skip(*j) {
                if v > 0.0 {
                    by_j[*j] += v;
                    by_gap[i - j] += v;
                    by_i[i] += v;
                }
            }
        }
        let detect = (channel == Channel::ZeroTruncated).then(|| by_i.clone());
        AlphaObjective {
            p,
            success: tail_sums(by_j),
            failure: tail_sums(by_gap),
            norm: tail_sums(by_i),
            detect,
        }
    }

    fn eval(&self, a: f64) -> f64 {
        let mut q = 0.0;
        for s in 0..self.norm.len() {
            let x = s as f64 * a;
            if self.success[s] > 0.0 {
                q += self.success[s] * (x + self.p).ln();
            }
            if self.failure[s] > 0.0 {
                q += self.failure[s] * (x + 1.0 - self.p).ln();
            }
            if self.norm[s] > 0.0 {
                q -= self.norm[s] * x.ln_1p();
            } else if self.success[s] == 0.0 && self.failure[s] == 0.0 {
                break;
            }
        }
        if let Some(weights) = &self.detect {
            let mut ln_q = 0.0;
            for (i, &wt) in weights.iter().enumerate() {
                if wt > 0.0 {
                    q -= wt * log_one_minus_exp(ln_q);
                }
                ln_q += (-self.p / (i as f64 * a + 1.0)).ln_1p();
            }
        }
        q
    }
}

const ALPHA_GRID: [f64; 16] = [
    0.0, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0, 10.0,
];

/// Coarse log-spaced scan, then golden-section refinement around the best
/// grid point. Returns the current value unless something strictly better
/// was found.
fn maximize_alpha(objective: &AlphaObjective, current: f64, config: &EmConfig) -> Result<f64> {
    let amax = config.alpha_max;
    let q_current = objective.eval(current);
    if q_current.is_nan() {
        return Err(Error::Numeric(format!("Q(alpha={current}) is NaN")));
    }
    let mut grid: Vec<f64> = ALPHA_GRID.iter().copied().filter(|&a| a < amax).collect();
    grid.push(amax);
    let values: Vec<f64> = grid.iter().map(|&a| objective.eval(a)).collect();
    let (k, &q_best) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Numeric("Q(alpha) is NaN across the whole bracket".into()))?;
    if !q_best.is_finite() && !q_current.is_finite() {
        return Err(Error::Numeric(format!(
            "Q(alpha) is not finite on [0, {amax}]: grid values {values:?}"
        )));
    }
    let lo = if k == 0 { grid[0] } else { grid[k - 1] };
    let hi = if k + 1 < grid.len() { grid[k + 1] } else { grid[k] };
    let (a_ref, q_ref) = golden_section(|a| objective.eval(a), lo, hi, config.alpha_tol);

    let mut best = (current, q_current);
    for cand in [(grid[k], q_best), (a_ref, q_ref)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best.0)
}

fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use crate::sampler::calibrate_g0;

    fn calibrated(counts: &[u64]) -> TriadicHistogram {
        let h = TriadicHistogram::new(counts.to_vec(), Mode::UserUser);
        let n = h.total();
        calibrate_g0(&h, n).unwrap()
    }

    fn params(p: f64, a: f64) -> BetaBinParams {
        BetaBinParams::new(p, a).unwrap()
    }

    #[test]
    fn log_likelihood_examples() {
        let h = calibrated(&[5]);
        let pm = TriadicDistribution::point_mass(0, 3, SupportFloor::Zero).unwrap();
        assert_eq!(log_likelihood(&h, &pm, &params(0.3, 0.0)).unwrap(), 0.0);

        let h = calibrated(&[1, 1]);
        let uni = TriadicDistribution::uniform(1, SupportFloor::Zero);
        let got = log_likelihood(&h, &uni, &params(0.5, 0.0)).unwrap();
        let want = 0.75f64.ln() + 0.25f64.ln();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn uncalibrated_histogram_rejected() {
        let h = TriadicHistogram::new(vec![1, 1], Mode::UserUser);
        let uni = TriadicDistribution::uniform(1, SupportFloor::Zero);
        assert!(matches!(log_likelihood(&h, &uni, &params(0.5, 0.0)), Err(Error::Uncalibrated)));
        assert!(matches!(em_known_n(&h, &params(0.5, 0.0), &EmConfig::default()), Err(Error::Uncalibrated)));
    }

    #[test]
    fn e_step_point_mass_posterior() {
        let h = calibrated(&[4, 2, 1]);
        let theta = TriadicDistribution::point_mass(3, 5, SupportFloor::Zero).unwrap();
        let z = e_step(&h, &theta, &params(0.4, 0.05)).unwrap();
        for j in 0..=2 {
            assert!((z.get(3, j) - h.get(j) as f64).abs() < 1e-12);
            assert!((z.column_sum(j) - h.get(j) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn e_step_reports_unsupported_observation() {
        let h = calibrated(&[1, 0, 0, 1]);
        let theta = TriadicDistribution::point_mass(1, 5, SupportFloor::Zero).unwrap();
        assert!(matches!(
            e_step(&h, &theta, &params(0.4, 0.0)),
            Err(Error::ModelSupport { j: 3 })
        ));
    }

    #[test]
    fn m_step_theta_point_mass_and_degenerate() {
        let mut col = vec![0.0; 4];
        col[2] = 7.0;
        let z = ExpectedCounts::from_columns(3, vec![(0, col.clone()), (1, col)]).unwrap();
        let t = m_step_theta(&z).unwrap();
        assert_eq!(t.prob(2), 1.0);
        let zero = ExpectedCounts::from_columns(3, vec![(0, vec![0.0; 4])]).unwrap();
        assert!(matches!(m_step_theta(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn alpha_step_never_decreases_q() {
        let h = calibrated(&[40, 12, 6, 3, 1]);
        let theta = TriadicDistribution::uniform(30, SupportFloor::Zero);
        let cfg = EmConfig::default().with_w(30);
        for &a0 in &[0.0, 0.01, 0.5, 9.0] {
            let pr = params(0.2, a0);
            let z = e_step(&h, &theta, &pr).unwrap();
            let a1 = m_step_alpha(&z, a0, &pr, &cfg).unwrap();
            assert!((0.0..=ALPHA_MAX).contains(&a1));
            let q0 = alpha_objective(&z, &pr);
            let q1 = alpha_objective(&z, &pr.with_alpha(a1));
            assert!(q1 >= q0 - 1e-12, "{q1} < {q0}");
        }
    }

    #[test]
    fn alpha_objective_matches_direct_sum() {
        let h = calibrated(&[30, 9, 4, 2]);
        let theta = TriadicDistribution::uniform(12, SupportFloor::Zero);
        let pr = params(0.25, 0.03);
        let z = e_step(&h, &theta, &pr).unwrap();
        for &a in &[0.0, 0.001, 0.2] {
            let direct_full: f64 = z
                .observed()
                .flat_map(|j| (j..=12).map(move |i| (i, j)))
                .map(|(i, j)| {
                    let v = z.get(i, j);
                    if v > 0.0 {
                        v * (crate::betabin::log_b(j, i, &pr.with_alpha(a)).unwrap()
                            - statrs::function::factorial::ln_binomial(i as u64, j as u64))
                    } else {
                        0.0
                    }
                })
                .sum();
            let fast = alpha_objective(&z, &pr.with_alpha(a));
            assert!((direct_full - fast).abs() < 1e-9 * direct_full.abs().max(1.0));
        }
    }

    #[test]
    fn identity_channel_recovers_histogram_in_one_iteration() {
        let h = calibrated(&[6, 3, 0, 1]);
        let cfg = EmConfig {
            max_iters: 1,
            ..EmConfig::default().with_w(10)
        };
        let fit = em_known_n(&h, &params(1.0, 0.0), &cfg).unwrap();
        for (j, want) in [(0, 0.6), (1, 0.3), (2, 0.0), (3, 0.1)] {
            assert!((fit.theta.prob(j) - want).abs() < 1e-12);
        }
        assert_eq!(fit.state.iterations, 1);
    }

    #[test]
    fn unknown_n_identity_channel() {
        let h = TriadicHistogram::new(vec![99, 5, 3, 2], Mode::UserUser);
        let fit = em_unknown_n(&h, &params(1.0, 0.0), &EmConfig::default().with_w(10)).unwrap();
        assert!((fit.n_plus - 10.0).abs() < 1e-9);
        assert!((fit.theta_plus.prob(1) - 0.5).abs() < 1e-9);
        assert!((fit.theta_plus.prob(3) - 0.2).abs() < 1e-9);
    }

    #[test]
    fn unknown_n_point_mass_closed_form() {
        let pd = 0.3;
        let h = TriadicHistogram::new(vec![0, 42], Mode::UserUser);
        let cfg = EmConfig {
            fit_alpha: false,
            init_theta: InitTheta::Custom({
                let mut v = vec![0.0; 5];
                v[0] = 1.0;
                v
            }),
            ..EmConfig::default().with_w(5)
        };
        let fit = em_unknown_n(&h, &params(pd, 0.0), &cfg).unwrap();
        assert!((fit.n_plus - 42.0 / pd).abs() < 1e-9);
    }

    #[test]
    fn unknown_n_needs_signal() {
        let h = TriadicHistogram::new(vec![10], Mode::UserUser);
        assert!(matches!(
            em_unknown_n(&h, &params(0.3, 0.0), &EmConfig::default()),
            Err(Error::NoSignal)
        ));
    }

    #[test]
    fn rescaling_round_trip() {
        let pr = params(0.1, 0.004);
        let phi = TriadicDistribution::from_weights(vec![0.4, 0.3, 0.0, 0.2, 0.1], SupportFloor::One).unwrap();
        let theta_plus = theta_plus_from_phi(&phi, &pr).unwrap();
        let back = phi_from_theta_plus(&theta_plus, &pr).unwrap();
        for i in 1..=5 {
            assert!((back.prob(i) - phi.prob(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(EmConfig { max_iters: 0, ..EmConfig::default() }.validate().is_err());
        assert!(EmConfig { ll_tol: 0.0, ..EmConfig::default() }.validate().is_err());
        assert!(EmConfig { init_alpha: 11.0, ..EmConfig::default() }.validate().is_err());
        assert!(EmConfig::default().validate().is_ok());
    }

    #[test]
    fn uniform_init_converges_on_small_problem() {
        let h = calibrated(&[50, 20, 8, 2]);
        let cfg = EmConfig {
            init_theta: InitTheta::Uniform,
            ..EmConfig::default().with_w(20)
        };
        let fit = em_known_n(&h, &params(0.5, 0.0), &cfg).unwrap();
        let trace = &fit.state.ll_trace;
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(fit.theta.tail_mass(3) > 0.0);
    }
}
