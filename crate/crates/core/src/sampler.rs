//! Single-pass Bernoulli sampling of an activity stream and the per-window
//! summary statistics computed from what was kept.
//!
//! Every coin flip is a pure function of `(seed, window index, position)`:
//! a SplitMix64 finaliser is applied to the key and the top 53 bits become a
//! uniform draw in `[0, 1)`. Re-running a window therefore reproduces the
//! same sample regardless of how windows are scheduled.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{
    Activity, CheckedSocialEdge, ContentId, InteractionEdge, Mode, SampledMultigraph, SocialGraph,
    Target, TimeWindow, Timestamp, TriadicHistogram, UserId,
};

const ACTIVITY_DOMAIN: u64 = 0x6163_7469_7669_7479;
const PAIR_DOMAIN: u64 = 0x7061_6972_6368_6563;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Probability of keeping an activity.
    pub p: f64,
    /// Probability of checking a user pair against the social graph.
    pub p_prime: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl SamplerConfig {
    pub fn new(p: f64, p_prime: f64, seed: u64, mode: Mode) -> Result<Self> {
        for (name, v) in [("p", p), ("p'", p_prime)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(SamplerConfig {
            p,
            p_prime,
            seed,
            mode,
        })
    }

    /// Probability that a single triangle survives sampling: `p^3` for an
    /// interaction triangle, `p^2 p'` for an influence triangle.
    pub fn p_delta(&self) -> f64 {
        derive_p_delta(self)
    }
}

pub fn derive_p_delta(config: &SamplerConfig) -> f64 {
    match config.mode {
        Mode::UserUser => config.p.powi(3),
        Mode::UserContent => config.p * config.p * config.p_prime,
    }
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` keyed on a sequence of words.
pub(crate) fn keyed_uniform(key: &[u64]) -> f64 {
    let h = key.iter().fold(0u64, |acc, &k| splitmix(acc ^ k));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Keep/drop decision for the activity at `ordinal` within window
/// `window_index`. The decision depends only on the seed and the position.
pub fn sample_activity(
    _activity: &Activity,
    config: &SamplerConfig,
    window_index: u64,
    ordinal: u64,
) -> bool {
    keyed_uniform(&[config.seed, ACTIVITY_DOMAIN, window_index, ordinal]) < config.p
}

/// Collects kept activities of the configured mode into a multigraph.
/// Activities of the other kind are ignored.
pub fn build_sampled_graph(
    kept: &[Activity],
    window: &TimeWindow,
    config: &SamplerConfig,
) -> Result<SampledMultigraph> {
    let mut graph = SampledMultigraph::empty(config.mode, *window);
    for a in kept {
        if !window.contains(a.timestamp) {
            return Err(Error::Rejected(format!(
                "activity at t={} outside window [{}, {})",
                a.timestamp,
                window.start,
                window.end()
            )));
        }
        match (config.mode, a.target) {
            (Mode::UserUser, Target::User(v)) => {
                if v == a.actor {
                    return Err(Error::Rejected(format!("self-interaction of user {v}")));
                }
                graph.interaction_edges.push(InteractionEdge {
                    a: a.actor,
                    b: v,
                    timestamp: a.timestamp,
                });
            }
            (Mode::UserContent, Target::Content(c)) => {
                graph.interaction_edges.push(InteractionEdge {
                    a: a.actor,
                    b: c,
                    timestamp: a.timestamp,
                });
            }
            _ => {}
        }
    }
    Ok(graph)
}

/// Checks user pairs of one content node against the social graph.
///
/// `adopters` must be ordered by interaction time with distinct users. Each
/// pair `(u_i, u_j)` with `u_i` strictly earlier is checked with probability
/// `p'`; a check queries whether `u_j` follows `u_i`. Pairs with equal
/// timestamps cannot form an influence triangle and are not queried.
pub fn pair_check(
    content: ContentId,
    adopters: &[(UserId, Timestamp)],
    social: &SocialGraph,
    config: &SamplerConfig,
    window_index: u64,
) -> Vec<CheckedSocialEdge> {
    debug_assert!(adopters.windows(2).all(|w| w[0].1 <= w[1].1));
    let mut found = Vec::new();
    for (i, &(earlier, t_earlier)) in adopters.iter().enumerate() {
        for &(later, t_later) in &adopters[i + 1..] {
            if t_later <= t_earlier || later == earlier {
                continue;
            }
            let pair_key = ((earlier as u64) << 32) | later as u64;
            let draw = keyed_uniform(&[
                config.seed,
                PAIR_DOMAIN,
                window_index,
                content as u64,
                pair_key,
            ]);
            if draw < config.p_prime && social.follows(later, earlier) {
                found.push(CheckedSocialEdge {
                    follower: later,
                    followee: earlier,
                    content,
                });
            }
        }
    }
    found
}

/// Runs [`pair_check`] for every content node of a user-content graph and
/// stores the confirmed social edges on it.
pub fn check_pairs(graph: &mut SampledMultigraph, social: &SocialGraph, config: &SamplerConfig) {
    if graph.mode != Mode::UserContent {
        return;
    }
    let window_index = graph.window.index;
    let mut checked = Vec::new();
    for (content, adopters) in graph.content_adopters() {
        checked.extend(pair_check(content, &adopters, social, config, window_index));
    }
    graph.checked_social_edges = checked;
}

/// Collapses parallel user-user edges into `(min, max) -> multiplicity`.
pub(crate) fn edge_multiplicities(edges: &[InteractionEdge]) -> HashMap<(u32, u32), u64> {
    let mut mult = HashMap::with_capacity(edges.len());
    for e in edges {
        let key = if e.a < e.b { (e.a, e.b) } else { (e.b, e.a) };
        *mult.entry(key).or_insert(0) += 1;
    }
    mult
}

/// Interaction-triangle count of every node touched by an edge.
///
/// Edges are oriented from lower to higher `(degree, id)` rank so each
/// triangle of the simple skeleton is visited once; its weight is the
/// product of the three edge multiplicities.
pub fn interaction_triangle_counts(edges: &[InteractionEdge]) -> BTreeMap<u32, u64> {
    let mult = edge_multiplicities(edges);
    let mut nodes: Vec<u32> = mult.keys().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let index: HashMap<u32, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    let mut degree = vec![0usize; nodes.len()];
    for &(a, b) in mult.keys() {
        degree[index[&a]] += 1;
        degree[index[&b]] += 1;
    }
    let rank = |x: usize| (degree[x], x);

    let mut out: Vec<Vec<(usize, u64)>> = vec![Vec::new(); nodes.len()];
    for (&(a, b), &m) in &mult {
        let (x, y) = (index[&a], index[&b]);
        if rank(x) < rank(y) {
            out[x].push((y, m));
        } else {
            out[y].push((x, m));
        }
    }
    for list in &mut out {
        list.sort_unstable_by_key(|&(v, _)| v);
    }

    let mut counts = vec![0u64; nodes.len()];
    for u in 0..nodes.len() {
        for &(v, m_uv) in &out[u] {
            let (mut i, mut j) = (0, 0);
            let (ou, ov) = (&out[u], &out[v]);
            while i < ou.len() && j < ov.len() {
                match ou[i].0.cmp(&ov[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        let w = ou[i].0;
                        let weight = m_uv * ou[i].1 * ov[j].1;
                        counts[u] += weight;
                        counts[v] += weight;
                        counts[w] += weight;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    nodes.into_iter().zip(counts).collect()
}

/// Influence-triangle count of every content node with a kept interaction,
/// read off the checked social edges.
pub fn influence_triangle_counts(graph: &SampledMultigraph) -> BTreeMap<ContentId, u64> {
    let mut counts: BTreeMap<ContentId, u64> =
        graph.observed_nodes().into_iter().map(|c| (c, 0)).collect();
    for e in &graph.checked_social_edges {
        *counts.entry(e.content).or_insert(0) += 1;
    }
    counts
}

/// Histogram `g` (user-user) or `f` (user-content) over observed nodes.
/// Bin 0 holds only observed nodes; see [`calibrate_g0`].
pub fn compute_histogram(graph: &SampledMultigraph) -> TriadicHistogram {
    let per_node = match graph.mode {
        Mode::UserUser => interaction_triangle_counts(&graph.interaction_edges),
        Mode::UserContent => influence_triangle_counts(graph),
    };
    TriadicHistogram::from_node_counts(per_node.into_values(), graph.mode)
}

/// Sets `g_0 = n - sum_{j>=1} g_j` so unobserved nodes are accounted for.
pub fn calibrate_g0(histogram: &TriadicHistogram, n: u64) -> Result<TriadicHistogram> {
    let observed = histogram.with_triangles();
    if n < observed || n == 0 {
        return Err(Error::Calibration { n, observed });
    }
    let mut counts = histogram.counts().to_vec();
    if counts.is_empty() {
        counts.push(0);
    }
    counts[0] = n - observed;
    let mut h = TriadicHistogram::new(counts, histogram.mode);
    h.n_known = Some(n);
    Ok(h)
}

/// Samples the activities of one window and returns the sampled multigraph,
/// with pair checks applied in user-content mode.
pub fn sample_window(
    activities: &[Activity],
    window: &TimeWindow,
    config: &SamplerConfig,
    social: Option<&SocialGraph>,
) -> Result<SampledMultigraph> {
    if config.mode == Mode::UserContent && social.is_none() {
        return Err(Error::Config("user-content mode needs a social graph".into()));
    }
    let kept: Vec<Activity> = activities
        .iter()
        .enumerate()
        .filter(|(k, a)| sample_activity(a, config, window.index, *k as u64))
        .map(|(_, a)| *a)
        .collect();
    let mut graph = build_sampled_graph(&kept, window, config)?;
    if let Some(social) = social {
        check_pairs(&mut graph, social, config);
    }
    Ok(graph)
}
