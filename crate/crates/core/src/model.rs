//! Domain types shared by the sampler, the estimators and the burst detector.
//!
//! Node ids are dense `u32` values handed out by the ingestion layer's
//! interning table. Timestamps are integers so window boundaries are exact.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UserId = u32;
pub type ContentId = u32;
pub type Timestamp = u64;

/// Default truncation bound for triadic cardinality distributions.
pub const DEFAULT_W: usize = 10_000;

/// Tolerance used when checking that a distribution sums to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Which interaction multigraph a window is summarised from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// User-user interactions; interaction triangles; statistics `g`.
    #[serde(rename = "uu")]
    UserUser,
    /// User-content interactions; influence triangles; statistics `f`.
    #[serde(rename = "uc")]
    UserContent,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::UserUser => f.write_str("uu"),
            Mode::UserContent => f.write_str("uc"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uu" => Ok(Mode::UserUser),
            "uc" => Ok(Mode::UserContent),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected uu or uc"))),
        }
    }
}

/// The other end of an interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    User(UserId),
    Content(ContentId),
}

/// One timestamped interaction: a user acting on another user or on a piece
/// of content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Activity {
    pub actor: UserId,
    pub target: Target,
    pub timestamp: Timestamp,
}

impl Activity {
    /// Builds an activity, rejecting self-interactions.
    pub fn new(actor: UserId, target: Target, timestamp: Timestamp) -> Result<Self> {
        if target == Target::User(actor) {
            return Err(Error::Rejected(format!("user {actor} interacts with itself")));
        }
        Ok(Activity {
            actor,
            target,
            timestamp,
        })
    }

    pub fn user(actor: UserId, target: UserId, timestamp: Timestamp) -> Result<Self> {
        Self::new(actor, Target::User(target), timestamp)
    }

    pub fn content(actor: UserId, content: ContentId, timestamp: Timestamp) -> Result<Self> {
        Self::new(actor, Target::Content(content), timestamp)
    }

    pub fn mode(&self) -> Mode {
        match self.target {
            Target::User(_) => Mode::UserUser,
            Target::Content(_) => Mode::UserContent,
        }
    }
}

/// Half-open interval `[start, start + length)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub length: u64,
    pub index: u64,
}

impl TimeWindow {
    /// The `index`-th window of a stream starting at `stream_start`.
    pub fn nth(stream_start: Timestamp, length: u64, index: u64) -> Result<Self> {
        if length == 0 {
            return Err(Error::Config("window length must be positive".into()));
        }
        Ok(TimeWindow {
            start: stream_start + index * length,
            length,
            index,
        })
    }

    pub fn end(&self) -> Timestamp {
        self.start + self.length
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        t >= self.start && t < self.end()
    }
}

/// Index of the window an activity belongs to.
pub fn assign_window(activity: &Activity, stream_start: Timestamp, length: u64) -> Result<u64> {
    if length == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    if activity.timestamp < stream_start {
        return Err(Error::Rejected(format!(
            "timestamp {} precedes stream start {}",
            activity.timestamp, stream_start
        )));
    }
    Ok((activity.timestamp - stream_start) / length)
}

/// Follower relation of the underlying social network.
///
/// `follows(v, u)` is a pure membership test except that every call bumps an
/// atomic query counter, which is how pair-check cost is measured.
#[derive(Debug, Default)]
pub struct SocialGraph {
    following: HashMap<UserId, HashSet<UserId>>,
    edges: usize,
    queries: AtomicU64,
}

impl Clone for SocialGraph {
    fn clone(&self) -> Self {
        SocialGraph {
            following: self.following.clone(),
            edges: self.edges,
            queries: AtomicU64::new(self.query_count()),
        }
    }
}

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from `(follower, followee)` pairs. With `undirected`
    /// every pair is inserted in both directions. Self-loops are dropped.
    pub fn from_edges<I>(edges: I, undirected: bool) -> Self
    where
        I: IntoIterator<Item = (UserId, UserId)>,
    {
        let mut g = SocialGraph::new();
        for (a, b) in edges {
            g.add_edge(a, b);
            if undirected {
                g.add_edge(b, a);
            }
        }
        g
    }

    /// Registers a user without edges so it still counts as a member.
    pub fn add_user(&mut self, u: UserId) {
        self.following.entry(u).or_default();
    }

    /// Inserts `follower -> followee`; returns false if already present.
    pub fn add_edge(&mut self, follower: UserId, followee: UserId) -> bool {
        if follower == followee {
            return false;
        }
        let inserted = self.following.entry(follower).or_default().insert(followee);
        if inserted {
            self.edges += 1;
        }
        inserted
    }

    /// Does `v` follow `u`? Counts as one query.
    pub fn follows(&self, v: UserId, u: UserId) -> bool {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.following.get(&v).is_some_and(|s| s.contains(&u))
    }

    /// Membership test that does not touch the query counter.
    pub fn has_edge(&self, v: UserId, u: UserId) -> bool {
        self.following.get(&v).is_some_and(|s| s.contains(&u))
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_query_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Users `u` follows, in ascending id order.
    pub fn followees(&self, u: UserId) -> Vec<UserId> {
        let mut out: Vec<UserId> = self
            .following
            .get(&u)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Every user appearing as a follower or followee, ascending.
    pub fn users(&self) -> Vec<UserId> {
        let mut all: HashSet<UserId> = self.following.keys().copied().collect();
        for s in self.following.values() {
            all.extend(s.iter().copied());
        }
        let mut out: Vec<UserId> = all.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Directed edges in ascending `(follower, followee)` order.
    pub fn edges(&self) -> Vec<(UserId, UserId)> {
        let mut out: Vec<(UserId, UserId)> = self
            .following
            .iter()
            .flat_map(|(&a, s)| s.iter().map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges == 0
    }
}

/// An interaction edge in a sampled multigraph. In user-content mode `a` is
/// the user and `b` the content id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteractionEdge {
    pub a: u32,
    pub b: u32,
    pub timestamp: Timestamp,
}

/// A social edge confirmed by a pair check, tagged with the content whose
/// influence triangle it closes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CheckedSocialEdge {
    pub follower: UserId,
    pub followee: UserId,
    pub content: ContentId,
}

/// Interaction edges kept in one window, plus the social edges confirmed by
/// pair checks when summarising user-content interactions.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledMultigraph {
    pub mode: Mode,
    pub window: TimeWindow,
    pub interaction_edges: Vec<InteractionEdge>,
    pub checked_social_edges: Vec<CheckedSocialEdge>,
}

impl SampledMultigraph {
    pub fn empty(mode: Mode, window: TimeWindow) -> Self {
        SampledMultigraph {
            mode,
            window,
            interaction_edges: Vec::new(),
            checked_social_edges: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.interaction_edges.is_empty()
    }

    /// Distinct nodes that carry triadic cardinalities: users touched by an
    /// edge in user-user mode, content nodes in user-content mode.
    pub fn observed_nodes(&self) -> Vec<u32> {
        let mut nodes: Vec<u32> = match self.mode {
            Mode::UserUser => self
                .interaction_edges
                .iter()
                .flat_map(|e| [e.a, e.b])
                .collect(),
            Mode::UserContent => self.interaction_edges.iter().map(|e| e.b).collect(),
        };
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Per-content user lists ordered by each user's earliest interaction.
    /// Repeat interactions of one user with one content collapse to the
    /// earliest timestamp.
    pub fn content_adopters(&self) -> BTreeMap<ContentId, Vec<(UserId, Timestamp)>> {
        let mut first: HashMap<(ContentId, UserId), Timestamp> = HashMap::new();
        for e in &self.interaction_edges {
            first
                .entry((e.b, e.a))
                .and_modify(|t| *t = (*t).min(e.timestamp))
                .or_insert(e.timestamp);
        }
        let mut out: BTreeMap<ContentId, Vec<(UserId, Timestamp)>> = BTreeMap::new();
        for ((c, u), t) in first {
            out.entry(c).or_default().push((u, t));
        }
        for users in out.values_mut() {
            users.sort_unstable_by_key(|&(u, t)| (t, u));
        }
        out
    }
}

/// Maps a cardinality onto `0..=w`, warning when it has to be clamped.
pub fn clamp_cardinality(c: u64, w: usize) -> usize {
    if c > w as u64 {
        log::warn!("triadic cardinality {c} exceeds truncation bound {w}; clamped");
        w
    } else {
        c as usize
    }
}

/// Number of nodes observed with exactly `j` triangles, `j = 0..=M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriadicHistogram {
    counts: Vec<u64>,
    pub mode: Mode,
    pub n_known: Option<u64>,
}

impl TriadicHistogram {
    /// Trailing zero bins are trimmed, so `counts().len() == M + 1`.
    pub fn new(mut counts: Vec<u64>, mode: Mode) -> Self {
        while counts.last() == Some(&0) {
            counts.pop();
        }
        TriadicHistogram {
            counts,
            mode,
            n_known: None,
        }
    }

    pub fn empty(mode: Mode) -> Self {
        Self::new(Vec::new(), mode)
    }

    /// Builds a histogram from per-node triangle counts.
    pub fn from_node_counts<I: IntoIterator<Item = u64>>(node_counts: I, mode: Mode) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        for c in node_counts {
            let c = c as usize;
            if counts.len() <= c {
                counts.resize(c + 1, 0);
            }
            counts[c] += 1;
        }
        Self::new(counts, mode)
    }

    /// Builds a histogram from `(index, count)` pairs.
    pub fn from_sparse<I: IntoIterator<Item = (usize, u64)>>(pairs: I, mode: Mode) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        for (j, c) in pairs {
            if counts.len() <= j {
                counts.resize(j + 1, 0);
            }
            counts[j] += c;
        }
        Self::new(counts, mode)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, j: usize) -> u64 {
        self.counts.get(j).copied().unwrap_or(0)
    }

    /// Largest index with a non-zero count, or `None` for an empty histogram.
    pub fn max_index(&self) -> Option<usize> {
        self.counts.len().checked_sub(1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Nodes observed with at least one triangle, `sum_{j>=1} counts[j]`.
    pub fn with_triangles(&self) -> u64 {
        self.counts.iter().skip(1).sum()
    }

    pub fn is_calibrated(&self) -> bool {
        self.n_known.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// The histogram with bin 0 dropped (`g+`), as used when the population
    /// is unknown.
    pub fn positive_part(&self) -> TriadicHistogram {
        let mut counts = self.counts.clone();
        if let Some(c0) = counts.first_mut() {
            *c0 = 0;
        }
        let mut h = TriadicHistogram::new(counts, self.mode);
        if h.with_triangles() == 0 {
            h.counts.clear();
        }
        h
    }

    /// Re-bins any index above `w` into `w`.
    pub fn clamped(&self, w: usize) -> TriadicHistogram {
        if self.counts.len() <= w + 1 {
            return self.clone();
        }
        log::warn!(
            "histogram index {} exceeds truncation bound {w}; tail clamped",
            self.counts.len() - 1
        );
        let mut counts = self.counts[..=w].to_vec();
        counts[w] += self.counts[w + 1..].iter().sum::<u64>();
        TriadicHistogram {
            counts,
            mode: self.mode,
            n_known: self.n_known,
        }
    }

    /// Non-zero bins as `(index, count)` pairs.
    pub fn sparse(&self) -> Vec<(usize, u64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j, c))
            .collect()
    }
}

/// Whether a distribution covers cardinalities from 0 or from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportFloor {
    Zero,
    One,
}

impl SupportFloor {
    pub fn offset(self) -> usize {
        match self {
            SupportFloor::Zero => 0,
            SupportFloor::One => 1,
        }
    }
}

/// Probability vector over triadic cardinalities `floor..=W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriadicDistribution {
    probs: Vec<f64>,
    floor: SupportFloor,
}

impl TriadicDistribution {
    /// Validates non-negativity and unit mass.
    pub fn new(probs: Vec<f64>, floor: SupportFloor) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("distribution has no support".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("distribution has a negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("distribution sums to {total}, not 1")));
        }
        Ok(TriadicDistribution { probs, floor })
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: Vec<f64>, floor: SupportFloor) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Degenerate("weights must be non-negative with positive finite sum".into()));
        }
        Ok(TriadicDistribution {
            probs: weights.into_iter().map(|w| w / total).collect(),
            floor,
        })
    }

    pub fn uniform(w: usize, floor: SupportFloor) -> Self {
        let len = w + 1 - floor.offset();
        TriadicDistribution {
            probs: vec![1.0 / len as f64; len],
            floor,
        }
    }

    pub fn point_mass(i: usize, w: usize, floor: SupportFloor) -> Result<Self> {
        if i < floor.offset() || i > w {
            return Err(Error::Domain(format!("point mass at {i} outside {}..={w}", floor.offset())));
        }
        let mut probs = vec![0.0; w + 1 - floor.offset()];
        probs[i - floor.offset()] = 1.0;
        Ok(TriadicDistribution { probs, floor })
    }

    /// Probabilities over `floor..=W` (entry `k` is cardinality `k + floor`).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn floor(&self) -> SupportFloor {
        self.floor
    }

    /// Truncation bound `W`.
    pub fn w(&self) -> usize {
        self.probs.len() - 1 + self.floor.offset()
    }

    /// Probability of cardinality `i` (zero outside the support).
    pub fn prob(&self, i: usize) -> f64 {
        i.checked_sub(self.floor.offset())
            .and_then(|k| self.probs.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// Dense vector over `0..=w`, padded with zeros.
    pub fn dense(&self, w: usize) -> Vec<f64> {
        let mut out = vec![0.0; w.max(self.w()) + 1];
        for (k, &p) in self.probs.iter().enumerate() {
            out[k + self.floor.offset()] = p;
        }
        out
    }

    /// Occupied bins as `(cardinality, probability)`.
    pub fn sparse(&self) -> Vec<(usize, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| (k + self.floor.offset(), p))
            .collect()
    }

    /// `0.5 * sum |p_i - q_i|` over the union of both supports.
    pub fn total_variation(&self, other: &TriadicDistribution) -> f64 {
        let w = self.w().max(other.w());
        let a = self.dense(w);
        let b = other.dense(w);
        0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// Conditions on cardinality >= 1 and renormalises.
    pub fn positive_part(&self) -> Result<TriadicDistribution> {
        let probs: Vec<f64> = (1..=self.w()).map(|i| self.prob(i)).collect();
        if probs.is_empty() {
            return Err(Error::Degenerate("no cardinalities above zero".into()));
        }
        TriadicDistribution::from_weights(probs, SupportFloor::One)
    }

    /// Expected cardinality.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k + self.floor.offset()) as f64 * p)
            .sum()
    }

    /// Mass at cardinalities `>= i`.
    pub fn tail_mass(&self, i: usize) -> f64 {
        (i.max(self.floor.offset())..=self.w()).map(|k| self.prob(k)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(t: Timestamp) -> Activity {
        Activity::user(1, 2, t).unwrap()
    }

    #[test]
    fn window_assignment_examples() {
        assert_eq!(assign_window(&at(0), 0, 86_400).unwrap(), 0);
        assert_eq!(assign_window(&at(86_400), 0, 86_400).unwrap(), 1);
        assert_eq!(assign_window(&at(90_000), 0, 86_400).unwrap(), 1);
    }

    #[test]
    fn window_assignment_rejects_early_timestamps() {
        assert!(matches!(assign_window(&at(5), 10, 3), Err(Error::Rejected(_))));
        assert!(matches!(assign_window(&at(5), 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn self_interaction_rejected() {
        assert!(Activity::user(3, 3, 0).is_err());
        assert!(Activity::content(3, 3, 0).is_ok());
    }

    #[test]
    fn window_is_half_open() {
        let w = TimeWindow::nth(100, 10, 2).unwrap();
        assert!(w.contains(120));
        assert!(w.contains(129));
        assert!(!w.contains(130));
        assert!(!w.contains(119));
    }

    #[test]
    fn histogram_trims_trailing_zeros() {
        let h = TriadicHistogram::new(vec![3, 0, 2, 0, 0], Mode::UserUser);
        assert_eq!(h.counts(), &[3, 0, 2]);
        assert_eq!(h.max_index(), Some(2));
        assert_eq!(h.with_triangles(), 2);
        assert!(TriadicHistogram::new(vec![0, 0], Mode::UserUser).is_empty());
    }

    #[test]
    fn histogram_clamp_folds_tail() {
        let h = TriadicHistogram::new(vec![1, 2, 3, 4, 5], Mode::UserUser);
        assert_eq!(h.clamped(2).counts(), &[1, 2, 12]);
        assert_eq!(h.clamped(10), h);
    }

    #[test]
    fn distribution_validation() {
        assert!(TriadicDistribution::new(vec![0.5, 0.5], SupportFloor::Zero).is_ok());
        assert!(TriadicDistribution::new(vec![0.5, 0.6], SupportFloor::Zero).is_err());
        assert!(TriadicDistribution::new(vec![1.5, -0.5], SupportFloor::Zero).is_err());
        let d = TriadicDistribution::from_weights(vec![1.0, 3.0], SupportFloor::One).unwrap();
        assert_eq!(d.w(), 2);
        assert_eq!(d.prob(0), 0.0);
        assert!((d.prob(2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn positive_part_renormalises() {
        let d = TriadicDistribution::new(vec![0.5, 0.25, 0.25], SupportFloor::Zero).unwrap();
        let p = d.positive_part().unwrap();
        assert_eq!(p.floor(), SupportFloor::One);
        assert!((p.prob(1) - 0.5).abs() < 1e-15);
        assert!((d.total_variation(&d) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn social_graph_counts_queries() {
        let g = SocialGraph::from_edges([(1, 2), (2, 3)], false);
        assert!(g.follows(1, 2));
        assert!(!g.follows(2, 1));
        assert!(g.has_edge(2, 3));
        assert_eq!(g.query_count(), 2);
        let u = SocialGraph::from_edges([(1, 2)], true);
        assert!(u.has_edge(2, 1));
        assert_eq!(u.edge_count(), 2);
    }
}
