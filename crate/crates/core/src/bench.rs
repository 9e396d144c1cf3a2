//! Wall-clock comparison of exact triangle counting on the full graph with
//! sampling plus estimation.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::betabin::BetaBinParams;
use crate::em::{em_known_n, em_unknown_n, EmConfig};
use crate::error::{Error, Result};
use crate::io::parse_stream_file;
use crate::model::{Activity, Mode, TimeWindow, DEFAULT_W};
use crate::oracle::{enumerate_interaction_triangles, exact_distribution};
use crate::sampler::{build_sampled_graph, calibrate_g0, compute_histogram, sample_activity, SamplerConfig};

/// Speed-up reported in the literature at `p = 0.3`, printed for context.
pub const REFERENCE_SPEEDUP: f64 = 50.0;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub w: usize,
    pub seed: u64,
    /// Population size; when absent the unknown-size estimator is timed.
    pub n: Option<u64>,
    pub em: EmConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            w: DEFAULT_W,
            seed: 0,
            n: None,
            em: EmConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    /// `"exact"` or `"sample-estimate"`.
    pub method: &'static str,
    pub p: Option<f64>,
    pub seconds: f64,
    /// Edges the method had to look at.
    pub edges: usize,
    /// Exact time divided by this row's time.
    pub speedup: Option<f64>,
}

/// Treats all user-user activities as one window and times both routes.
/// Returns one exact row followed by one row per entry of `p_list`.
pub fn run_benchmark_on(activities: &[Activity], p_list: &[f64], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let uu: Vec<Activity> = activities.iter().filter(|a| a.mode() == Mode::UserUser).copied().collect();
    let (lo, hi) = match (uu.iter().map(|a| a.timestamp).min(), uu.iter().map(|a| a.timestamp).max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::Degenerate("benchmark graph has no user-user activities".into())),
    };
    let window = TimeWindow::nth(lo, hi - lo + 1, 0)?;
    let em = config.em.clone().with_w(config.w);

    let t0 = Instant::now();
    let full = build_sampled_graph(&uu, &window, &SamplerConfig::new(1.0, 1.0, 0, Mode::UserUser)?)?;
    let counts = enumerate_interaction_triangles(&full);
    let population = config.n.unwrap_or(counts.len() as u64).max(counts.len() as u64);
    let exact = exact_distribution(&counts, population, config.w)?;
    let exact_secs = t0.elapsed().as_secs_f64();
    log::info!("exact: {} nodes, mean count {:.2}, {exact_secs:.3}s", counts.len(), exact.mean());

    let mut rows = vec![BenchRow {
        method: "exact",
        p: None,
        seconds: exact_secs,
        edges: uu.len(),
        speedup: Some(1.0),
    }];
    for &p in p_list {
        let sampler = SamplerConfig::new(p, 1.0, config.seed, Mode::UserUser)?;
        let t0 = Instant::now();
        let kept: Vec<Activity> = uu
            .iter()
            .enumerate()
            .filter(|(k, a)| sample_activity(a, &sampler, 0, *k as u64))
            .map(|(_, a)| *a)
            .collect();
        let graph = build_sampled_graph(&kept, &window, &sampler)?;
        let h = compute_histogram(&graph);
        let params = BetaBinParams::new(sampler.p_delta(), em.init_alpha)?;
        if h.with_triangles() > 0 {
            match config.n {
                Some(n) => {
                    em_known_n(&calibrate_g0(&h, n)?, &params, &em)?;
                }
                None => {
                    em_unknown_n(&h, &params, &em)?;
                }
            }
        } else {
            log::warn!("p={p}: no sampled triangles, timing covers sampling only");
        }
        let secs = t0.elapsed().as_secs_f64();
        rows.push(BenchRow {
            method: "sample-estimate",
            p: Some(p),
            seconds: secs,
            edges: kept.len(),
            speedup: (secs > 0.0).then(|| exact_secs / secs),
        });
    }
    Ok(rows)
}

pub fn run_benchmark(graph_path: impl AsRef<Path>, p_list: &[f64], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let activities = parse_stream_file(graph_path)?;
    run_benchmark_on(&activities, p_list, config)
}
