//! Window-by-window processing of an activity stream: sample, summarise,
//! estimate, score against the base windows, report.
//!
//! Only the sampled activities of the open window, the base-window
//! estimates and not-yet-emitted base reports are held in memory.

use std::path::Path;
use std::time::Instant;

use crate::betabin::BetaBinParams;
use crate::burst::{auto_threshold, build_base, kl_divergence, leave_one_out_scores, BaseDistribution, Threshold};
use crate::em::{em_known_n, em_unknown_n, EmConfig};
use crate::error::{Error, Result};
use crate::io::{read_social_graph_file, EstimateKind, StreamReader, WindowReport, WindowStatus};
use crate::model::{Activity, Mode, SocialGraph, TimeWindow, Timestamp, TriadicDistribution, TriadicHistogram, DEFAULT_W};
use crate::sampler::{build_sampled_graph, calibrate_g0, check_pairs, compute_histogram, sample_activity, SamplerConfig};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub p: f64,
    pub p_prime: f64,
    pub window_seconds: u64,
    /// Population size; selects the known-size estimator when present.
    pub n: Option<u64>,
    pub w: usize,
    /// The first `base_windows` windows form the base distribution.
    pub base_windows: usize,
    pub threshold: Threshold,
    pub seed: u64,
    /// Start of window 0; defaults to the first activity's timestamp.
    pub stream_start: Option<Timestamp>,
    pub em: EmConfig,
}

impl PipelineConfig {
    pub fn new(mode: Mode, p: f64, window_seconds: u64) -> Self {
        PipelineConfig {
            mode,
            p,
            p_prime: 1.0,
            window_seconds,
            n: None,
            w: DEFAULT_W,
            base_windows: 0,
            threshold: Threshold::Auto,
            seed: 0,
            stream_start: None,
            em: EmConfig::default(),
        }
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        SamplerConfig::new(self.p, self.p_prime, self.seed, self.mode)
    }

    pub fn em_config(&self) -> EmConfig {
        self.em.clone().with_w(self.w)
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler()?;
        if self.window_seconds == 0 {
            return Err(Error::Config("window length must be positive".into()));
        }
        if self.n == Some(0) {
            return Err(Error::Config("population size must be positive".into()));
        }
        if let Threshold::Fixed(t) = self.threshold {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("threshold must be non-negative, got {t}")));
            }
        }
        self.em_config().validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineSummary {
    pub windows: u64,
    pub flagged: Vec<u64>,
    /// Threshold actually applied, once the base was built.
    pub threshold: Option<f64>,
}

/// Estimate for one window, before scoring.
struct WindowEstimate {
    histogram: TriadicHistogram,
    estimate: Option<TriadicDistribution>,
    alpha: Option<f64>,
    n_plus: Option<f64>,
    iterations: Option<usize>,
    converged: Option<bool>,
}

fn estimate_window(histogram: TriadicHistogram, config: &PipelineConfig, sampler: &SamplerConfig) -> Result<WindowEstimate> {
    let mut out = WindowEstimate {
        histogram,
        estimate: None,
        alpha: None,
        n_plus: None,
        iterations: None,
        converged: None,
    };
    if out.histogram.with_triangles() == 0 {
        return Ok(out);
    }
    let em = config.em_config();
    let params = BetaBinParams::new(sampler.p_delta(), em.init_alpha)?;
    let state = match config.n {
        Some(n) => {
            let fit = em_known_n(&calibrate_g0(&out.histogram, n)?, &params, &em)?;
            out.estimate = Some(fit.theta);
            fit.state
        }
        None => {
            let fit = em_unknown_n(&out.histogram, &params, &em)?;
            out.estimate = Some(fit.theta_plus);
            out.n_plus = Some(fit.n_plus);
            fit.state
        }
    };
    out.alpha = Some(state.alpha);
    out.iterations = Some(state.iterations);
    out.converged = Some(state.converged);
    Ok(out)
}

/// Drives the per-window state machine. Windows are closed in order;
/// reports for base windows wait until the base is complete.
struct Runner<'a, F> {
    config: &'a PipelineConfig,
    sampler: SamplerConfig,
    social: Option<&'a SocialGraph>,
    sink: F,
    base_estimates: Vec<(u64, TriadicDistribution)>,
    pending: Vec<(WindowReport, Option<usize>)>,
    base: Option<(BaseDistribution, f64)>,
    base_closed: bool,
    summary: PipelineSummary,
}

impl<F: FnMut(&WindowReport) -> Result<()>> Runner<'_, F> {
    fn close(&mut self, window: TimeWindow, kept: &[Activity], sampled: usize) -> Result<()> {
        let t0 = Instant::now();
        let mut graph = build_sampled_graph(kept, &window, &self.sampler).map_err(|e| e.in_window(window.index))?;
        if let Some(social) = self.social {
            check_pairs(&mut graph, social, &self.sampler);
        }
        let est = estimate_window(compute_histogram(&graph), self.config, &self.sampler)
            .map_err(|e| e.in_window(window.index))?;
        let mut report = WindowReport {
            window: window.index,
            start: window.start,
            mode: self.config.mode,
            p: self.config.p,
            p_prime: self.config.p_prime,
            sampled_activities: sampled,
            histogram: est.histogram.sparse(),
            status: if est.estimate.is_some() { WindowStatus::Ok } else { WindowStatus::NoSignal },
            estimate_kind: est.estimate.as_ref().map(|_| {
                if self.config.n.is_some() {
                    EstimateKind::Theta
                } else {
                    EstimateKind::ThetaPlus
                }
            }),
            estimate: est.estimate.as_ref().map(|d| d.sparse()),
            alpha: est.alpha,
            n_plus: est.n_plus,
            kl: None,
            flagged: false,
            base: (window.index as usize) < self.config.base_windows,
            em_iterations: est.iterations,
            converged: est.converged,
            wall_ms: 0.0,
        };
        report.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        self.summary.windows += 1;

        if report.base {
            let slot = est.estimate.map(|d| {
                self.base_estimates.push((window.index, d));
                self.base_estimates.len() - 1
            });
            self.pending.push((report, slot));
            if window.index as usize + 1 == self.config.base_windows {
                self.finish_base()?;
            }
            return Ok(());
        }
        if let (Some((base, threshold)), Some(d)) = (&self.base, &est.estimate) {
            let kl = kl_divergence(&base.probs, d);
            report.kl = Some(kl);
            report.flagged = kl > *threshold;
        }
        self.emit(report)
    }

    fn finish_base(&mut self) -> Result<()> {
        if self.base_closed {
            return Ok(());
        }
        self.base_closed = true;
        if !self.base_estimates.is_empty() {
            let (windows, dists): (Vec<u64>, Vec<TriadicDistribution>) = self.base_estimates.drain(..).unzip();
            let base = build_base(&dists, &windows)?;
            let scores = leave_one_out_scores(&dists)?;
            let threshold = match self.config.threshold {
                Threshold::Fixed(t) => t,
                Threshold::Auto => {
                    if dists.len() < 2 {
                        log::warn!("automatic threshold from {} base window(s) is unreliable", dists.len());
                    }
                    auto_threshold(&scores)?
                }
            };
            for (report, slot) in &mut self.pending {
                if let Some(k) = *slot {
                    report.kl = Some(scores[k]);
                    report.flagged = scores[k] > threshold;
                }
            }
            self.summary.threshold = Some(threshold);
            self.base = Some((base, threshold));
        } else if self.config.base_windows > 0 {
            log::warn!("no base window produced an estimate; windows will not be scored");
        }
        for (report, _) in std::mem::take(&mut self.pending) {
            self.emit(report)?;
        }
        Ok(())
    }

    fn emit(&mut self, report: WindowReport) -> Result<()> {
        if report.flagged {
            self.summary.flagged.push(report.window);
        }
        (self.sink)(&report)
    }
}

/// Processes `(line, activity)` records in stream order. Timestamps may be
/// out of order within a window but never fall into an already closed one.
pub fn run_pipeline_on<I, F>(
    records: I,
    social: Option<&SocialGraph>,
    config: &PipelineConfig,
    sink: F,
) -> Result<PipelineSummary>
where
    I: IntoIterator<Item = Result<(usize, Activity)>>,
    F: FnMut(&WindowReport) -> Result<()>,
{
    config.validate()?;
    if config.mode == Mode::UserContent && social.is_none() {
        return Err(Error::Config("user-content mode needs a social graph (--social)".into()));
    }
    let mut runner = Runner {
        config,
        sampler: config.sampler()?,
        social,
        sink,
        base_estimates: Vec::new(),
        pending: Vec::new(),
        base: None,
        base_closed: false,
        summary: PipelineSummary::default(),
    };
    let len = config.window_seconds;
    let mut start = config.stream_start;
    let mut current: Option<TimeWindow> = None;
    let mut kept: Vec<Activity> = Vec::new();
    let mut ordinal = 0u64;

    for record in records {
        let (line, a) = record?;
        let s = *start.get_or_insert(a.timestamp);
        if a.timestamp < s {
            return Err(Error::Parse {
                path: "<stream>".into(),
                line,
                msg: format!("timestamp {} precedes stream start {s}", a.timestamp),
            });
        }
        let index = (a.timestamp - s) / len;
        let mut window = match current {
            Some(w) => w,
            None => TimeWindow::nth(s, len, index)?,
        };
        if index < window.index {
            return Err(Error::Parse {
                path: "<stream>".into(),
                line,
                msg: format!("timestamp {} belongs to window {index}, already closed", a.timestamp),
            });
        }
        // Windows before the first activity still get (empty) reports.
        if current.is_none() {
            for k in 0..index {
                runner.close(TimeWindow::nth(s, len, k)?, &[], 0)?;
            }
        }
        while window.index < index {
            runner.close(window, &kept, kept.len())?;
            kept.clear();
            ordinal = 0;
            window = TimeWindow::nth(s, len, window.index + 1)?;
        }
        current = Some(window);
        if sample_activity(&a, &runner.sampler, window.index, ordinal) {
            kept.push(a);
        }
        ordinal += 1;
    }
    if let Some(window) = current {
        runner.close(window, &kept, kept.len())?;
    }
    runner.finish_base()?;
    Ok(runner.summary)
}

/// Runs the pipeline over a stream file, loading the social graph if given.
pub fn run_pipeline<F>(
    stream_path: impl AsRef<Path>,
    social_path: Option<&Path>,
    undirected: bool,
    config: &PipelineConfig,
    sink: F,
) -> Result<PipelineSummary>
where
    F: FnMut(&WindowReport) -> Result<()>,
{
    config.validate()?;
    if config.mode == Mode::UserContent && social_path.is_none() {
        return Err(Error::Config("user-content mode needs a social graph (--social)".into()));
    }
    let social = social_path
        .map(|p| read_social_graph_file(p, undirected))
        .transpose()?;
    let reader = StreamReader::open(stream_path)?;
    run_pipeline_on(reader, social.as_ref(), config, sink)
}

/// In-memory convenience: activities in stream order, reports collected.
pub fn run_activities(
    activities: &[Activity],
    social: Option<&SocialGraph>,
    config: &PipelineConfig,
) -> Result<(Vec<WindowReport>, PipelineSummary)> {
    let mut reports = Vec::new();
    let records = activities.iter().enumerate().map(|(k, a)| Ok((k + 1, *a)));
    let summary = run_pipeline_on(records, social, config, |r| {
        reports.push(r.clone());
        Ok(())
    })?;
    Ok((reports, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_stream(windows: u64, len: u64) -> Vec<Activity> {
        let mut out = Vec::new();
        for k in 0..windows {
            let t = k * len;
            out.push(Activity::user(1, 2, t).unwrap());
            out.push(Activity::user(2, 3, t + 1).unwrap());
            out.push(Activity::user(3, 1, t + 2).unwrap());
        }
        out
    }

    #[test]
    fn one_report_per_window_including_gaps() {
        let mut acts = triangle_stream(1, 100);
        acts.push(Activity::user(1, 2, 350).unwrap());
        let mut cfg = PipelineConfig::new(Mode::UserUser, 1.0, 100);
        cfg.n = Some(5);
        cfg.w = 10;
        let (reports, summary) = run_activities(&acts, None, &cfg).unwrap();
        assert_eq!(summary.windows, 4);
        let statuses: Vec<WindowStatus> = reports.iter().map(|r| r.status).collect();
        assert_eq!(
            statuses,
            [WindowStatus::Ok, WindowStatus::NoSignal, WindowStatus::NoSignal, WindowStatus::NoSignal]
        );
        assert_eq!(reports[0].estimate.as_ref().unwrap(), &vec![(0, 0.4), (1, 0.6)]);
        assert!(reports[1].estimate.is_none() && reports[1].kl.is_none());
    }

    #[test]
    fn user_content_needs_social_graph() {
        let cfg = PipelineConfig::new(Mode::UserContent, 0.5, 10);
        let err = run_activities(&[], None, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn closed_window_is_a_data_error() {
        let acts = [Activity::user(1, 2, 500).unwrap(), Activity::user(1, 3, 10).unwrap()];
        let mut cfg = PipelineConfig::new(Mode::UserUser, 1.0, 100);
        cfg.stream_start = Some(0);
        let err = run_activities(&acts, None, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn base_reports_are_emitted_in_order() {
        let acts = triangle_stream(4, 100);
        let mut cfg = PipelineConfig::new(Mode::UserUser, 1.0, 100);
        cfg.n = Some(4);
        cfg.w = 10;
        cfg.base_windows = 2;
        let (reports, summary) = run_activities(&acts, None, &cfg).unwrap();
        let order: Vec<u64> = reports.iter().map(|r| r.window).collect();
        assert_eq!(order, [0, 1, 2, 3]);
        assert!(reports[0].base && !reports[2].base);
        assert!(reports.iter().all(|r| r.kl == Some(0.0) && !r.flagged));
        assert_eq!(summary.threshold, Some(0.0));
    }
}
