//! Burst scoring: KL divergence of a window's distribution from a base
//! distribution averaged over dormant windows.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TriadicDistribution;

/// Additive smoothing applied to both sides before taking the divergence.
pub const KL_EPSILON: f64 = 1e-9;

/// Average of the distributions of the dormant windows.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseDistribution {
    pub probs: TriadicDistribution,
    pub source_windows: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BurstScore {
    pub window: u64,
    pub kl: f64,
    pub n_plus_hat: Option<f64>,
    pub flagged: bool,
}

/// How the flagging threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// Mean plus three standard deviations of the base windows' scores.
    Auto,
    Fixed(f64),
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("threshold must be 'auto' or a number, got {s:?}")))?;
        if !(v >= 0.0) {
            return Err(Error::Config(format!("threshold must be non-negative, got {v}")));
        }
        Ok(Threshold::Fixed(v))
    }
}

fn smoothed(dense: &[f64]) -> Vec<f64> {
    let z = 1.0 + KL_EPSILON * dense.len() as f64;
    dense.iter().map(|&x| (x + KL_EPSILON) / z).collect()
}

/// `D(base || current)` after padding both to a common support and
/// smoothing each cell by [`KL_EPSILON`].
pub fn kl_divergence(base: &TriadicDistribution, current: &TriadicDistribution) -> f64 {
    let w = base.w().max(current.w());
    let b = smoothed(&base.dense(w));
    let c = smoothed(&current.dense(w));
    let kl: f64 = b
        .iter()
        .zip(&c)
        .map(|(&x, &y)| if x == y { 0.0 } else { x * (x / y).ln() })
        .sum();
    kl.max(0.0)
}

/// Component-wise mean of the given estimates.
pub fn build_base(estimates: &[TriadicDistribution], windows: &[u64]) -> Result<BaseDistribution> {
    let first = estimates
        .first()
        .ok_or_else(|| Error::Degenerate("base distribution needs at least one window".into()))?;
    if windows.len() != estimates.len() {
        return Err(Error::Domain(format!(
            "{} estimates but {} window indices",
            estimates.len(),
            windows.len()
        )));
    }
    let (w, floor) = (first.w(), first.floor());
    if let Some(bad) = estimates.iter().find(|e| e.w() != w || e.floor() != floor) {
        return Err(Error::Domain(format!(
            "base estimates disagree on support: W={w} vs W={}",
            bad.w()
        )));
    }
    let mut mean = vec![0.0; first.probs().len()];
    for e in estimates {
        for (m, p) in mean.iter_mut().zip(e.probs()) {
            *m += p;
        }
    }
    Ok(BaseDistribution {
        probs: TriadicDistribution::from_weights(mean, floor)?,
        source_windows: windows.to_vec(),
    })
}

pub fn score_window(
    window: u64,
    estimate: &TriadicDistribution,
    base: &BaseDistribution,
    n_plus: Option<f64>,
    threshold: f64,
) -> Result<BurstScore> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!("threshold must be non-negative, got {threshold}")));
    }
    let kl = kl_divergence(&base.probs, estimate);
    Ok(BurstScore {
        window,
        kl,
        n_plus_hat: n_plus,
        flagged: kl > threshold,
    })
}

/// Divergence of each base window from the mean of the other base windows.
/// Leaving the window out keeps these scores comparable to those of windows
/// that did not contribute to the base.
pub fn leave_one_out_scores(estimates: &[TriadicDistribution]) -> Result<Vec<f64>> {
    if estimates.len() < 2 {
        return Ok(vec![0.0; estimates.len()]);
    }
    let idx: Vec<u64> = (0..estimates.len() as u64).collect();
    (0..estimates.len())
        .map(|k| {
            let rest: Vec<TriadicDistribution> = estimates
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, e)| e.clone())
                .collect();
            let base = build_base(&rest, &idx[..rest.len()])?;
            Ok(kl_divergence(&base.probs, &estimates[k]))
        })
        .collect()
}

/// `mean + 3 * stddev` (sample standard deviation) of base-window scores.
pub fn auto_threshold(base_scores: &[f64]) -> Result<f64> {
    if base_scores.is_empty() {
        return Err(Error::Degenerate("automatic threshold needs base-window scores".into()));
    }
    let n = base_scores.len() as f64;
    let mean = base_scores.iter().sum::<f64>() / n;
    let var = if base_scores.len() > 1 {
        base_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(mean + 3.0 * var.sqrt())
}
