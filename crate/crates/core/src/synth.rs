//! Seeded synthetic data: social graphs, activity streams with a planted
//! triadic cardinality distribution, triangle bursts and spam injection.
//!
//! Streams are built from explicit gadgets so the exact distribution of every
//! window is known:
//!
//! - a `k`-clique gives each member `C(k-1, 2)` triangles;
//! - a hub joined to every node of `r` disjoint paths with `c` edges in
//!   total gives the hub `c` triangles, path ends 1 and path interiors 2;
//! - a simple path closes no triangle and carries the zero-count filler
//!   traffic.
//!
//! Each window is verified with the exact oracle and its distribution is
//! emitted as ground truth.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    Activity, InteractionEdge, Mode, SampledMultigraph, SocialGraph, Target, TimeWindow, Timestamp,
    TriadicDistribution, UserId, DEFAULT_W,
};
use crate::oracle::{enumerate_interaction_triangles, exact_distribution};

/// Attempts made by [`generate_baseline_stream`] per window.
pub const MAX_ATTEMPTS: usize = 10;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Social graph families.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphModel {
    /// `edges` undirected edges chosen uniformly.
    Random { edges: usize },
    /// Nodes split into consecutive communities of `community_size`; a
    /// fraction `intra_fraction` of the edges falls inside communities.
    Clustered {
        edges: usize,
        community_size: usize,
        intra_fraction: f64,
    },
}

/// Undirected social graph on users `0..n`.
pub fn generate_social_graph(n: usize, model: &GraphModel, seed: u64) -> Result<SocialGraph> {
    if n < 3 {
        return Err(Error::Config(format!("social graph needs at least 3 nodes, got {n}")));
    }
    let max_edges = n * (n - 1) / 2;
    let mut rng = rng_for(seed, 1);
    let mut chosen: HashSet<(u32, u32)> = HashSet::new();
    let key = |a: usize, b: usize| ((a.min(b)) as u32, (a.max(b)) as u32);

    let total = match model {
        GraphModel::Random { edges } => *edges,
        GraphModel::Clustered { edges, .. } => *edges,
    };
    if total > max_edges {
        return Err(Error::Config(format!("{total} edges do not fit on {n} nodes")));
    }

    if let GraphModel::Clustered {
        edges,
        community_size,
        intra_fraction,
    } = model
    {
        if *community_size < 2 || !(0.0..=1.0).contains(intra_fraction) {
            return Err(Error::Config("need community_size >= 2 and intra_fraction in [0, 1]".into()));
        }
        let k = *community_size;
        let intra_pairs: usize = (0..n)
            .step_by(k)
            .map(|s| {
                let m = k.min(n - s);
                m * (m - 1) / 2
            })
            .sum();
        let want = (*edges as f64 * intra_fraction).round() as usize;
        if want > intra_pairs {
            return Err(Error::Config(format!(
                "{want} intra-community edges requested but only {intra_pairs} pairs exist"
            )));
        }
        while chosen.len() < want {
            let u = rng.random_range(0..n);
            let start = u / k * k;
            let size = k.min(n - start);
            if size < 2 {
                continue;
            }
            let v = start + rng.random_range(0..size);
            if u != v {
                chosen.insert(key(u, v));
            }
        }
    }

    if 2 * total > max_edges {
        let mut rest: Vec<(u32, u32)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a as u32, b as u32)))
            .filter(|e| !chosen.contains(e))
            .collect();
        rest.shuffle(&mut rng);
        let need = total - chosen.len();
        chosen.extend(rest.into_iter().take(need));
    } else {
        while chosen.len() < total {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                chosen.insert(key(u, v));
            }
        }
    }

    let mut edges: Vec<(u32, u32)> = chosen.into_iter().collect();
    edges.sort_unstable();
    let mut g = SocialGraph::from_edges(edges, true);
    for u in 0..n as u32 {
        g.add_user(u);
    }
    Ok(g)
}

/// Friendship as used by the Random-Friend spam strategy: users who
/// interacted at least once, in either direction.
pub fn social_graph_from_activities(activities: &[Activity]) -> SocialGraph {
    SocialGraph::from_edges(
        activities.iter().filter_map(|a| match a.target {
            Target::User(v) => Some((a.actor, v)),
            Target::Content(_) => None,
        }),
        true,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamConfig {
    pub windows: usize,
    /// Minimum number of activities per window; filler traffic on
    /// zero-count users makes up any shortfall.
    pub rate: usize,
    pub window_length: u64,
    pub start: Timestamp,
    pub w: usize,
    /// Largest accepted total variation between planted and realized
    /// distributions.
    pub max_tv: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            windows: 1,
            rate: 0,
            window_length: 86_400,
            start: 0,
            w: DEFAULT_W,
            max_tv: 0.02,
        }
    }
}

/// Exact per-window statistics emitted with a synthetic stream.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowTruth {
    pub index: u64,
    /// Triangle count of every user touched in the window.
    pub counts: BTreeMap<UserId, u64>,
    /// Distribution over the whole population.
    pub theta: TriadicDistribution,
}

#[derive(Clone, Debug)]
pub struct SyntheticStream {
    /// Chronological activities of all windows.
    pub activities: Vec<Activity>,
    pub truth: Vec<WindowTruth>,
    pub population: u64,
    pub start: Timestamp,
    pub window_length: u64,
    pub w: usize,
}

impl SyntheticStream {
    pub fn window(&self, k: u64) -> TimeWindow {
        TimeWindow::nth(self.start, self.window_length, k).expect("positive window length")
    }

    pub fn window_activities(&self, k: u64) -> &[Activity] {
        let win = self.window(k);
        let lo = self.activities.partition_point(|a| a.timestamp < win.start);
        let hi = self.activities.partition_point(|a| a.timestamp < win.end());
        &self.activities[lo..hi]
    }

    /// Recomputes the exact distribution of window `k` from its activities.
    pub fn recompute_truth(&mut self, k: u64) -> Result<()> {
        let truth = window_truth(self.window_activities(k), self.window(k), self.population, self.w)?;
        self.truth[k as usize] = truth;
        Ok(())
    }

    fn insert(&mut self, mut extra: Vec<Activity>) {
        self.activities.append(&mut extra);
        self.activities.sort_by_key(|a| a.timestamp);
    }
}

/// Exact distribution of one window's user-user activities.
pub fn window_truth(activities: &[Activity], window: TimeWindow, population: u64, w: usize) -> Result<WindowTruth> {
    let mut g = SampledMultigraph::empty(Mode::UserUser, window);
    g.interaction_edges = activities
        .iter()
        .filter_map(|a| match a.target {
            Target::User(v) => Some(InteractionEdge {
                a: a.actor,
                b: v,
                timestamp: a.timestamp,
            }),
            Target::Content(_) => None,
        })
        .collect();
    let counts = enumerate_interaction_triangles(&g);
    let theta = exact_distribution(&counts, population, w)?;
    Ok(WindowTruth {
        index: window.index,
        counts,
        theta,
    })
}

/// Node counts per cardinality by largest remainder, summing to `n`.
fn allocate(theta: &TriadicDistribution, n: usize) -> Vec<usize> {
    let dense = theta.dense(theta.w());
    let raw: Vec<f64> = dense.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
    let short = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Clique size `k` with `C(k-1, 2) = c`, if any.
fn clique_size(c: usize) -> Option<usize> {
    let k = ((1.0 + (1.0 + 8.0 * c as f64).sqrt()) / 2.0).round() as usize + 1;
    (k >= 3 && (k - 1) * (k - 2) / 2 == c).then_some(k)
}

/// Gadget wiring over abstract slots `0..used`.
struct Wiring {
    edges: Vec<(usize, usize)>,
    used: usize,
}

impl Wiring {
    fn take(&mut self, k: usize) -> std::ops::Range<usize> {
        let r = self.used..self.used + k;
        self.used += k;
        r
    }

    fn clique(&mut self, k: usize) {
        let nodes = self.take(k);
        for a in nodes.clone() {
            for b in a + 1..nodes.end {
                self.edges.push((a, b));
            }
        }
    }

    /// Hub with `c` triangles over `r` paths.
    fn hub(&mut self, c: usize, r: usize) {
        let hub = self.take(1).start;
        let base = c / r;
        for seg in 0..r {
            let len = base + usize::from(seg < c % r);
            let path = self.take(len + 1);
            for v in path.clone() {
                self.edges.push((hub, v));
                if v + 1 < path.end {
                    self.edges.push((v, v + 1));
                }
            }
        }
    }
}

/// Number of paths for a hub of `c` triangles that best fits the remaining
/// demand for 1- and 2-triangle nodes.
fn choose_paths(c: usize, ones: usize, twos: usize) -> usize {
    let surplus = |r: usize| (c - r).saturating_sub(twos) + (2 * r).saturating_sub(ones);
    let cands = [1, c, c.saturating_sub(twos), ones / 2, ones / 2 + 1];
    cands
        .into_iter()
        .map(|r| r.clamp(1, c))
        .min_by_key(|&r| (surplus(r), r))
        .unwrap()
}

fn wire(demand: &[usize], n: usize) -> Option<Wiring> {
    let mut d = demand.to_vec();
    d.resize(d.len().max(3), 0);
    let mut wiring = Wiring { edges: Vec::new(), used: 0 };
    for c in (2..d.len()).rev() {
        if let Some(k) = clique_size(c) {
            while d[c] >= k {
                wiring.clique(k);
                d[c] -= k;
            }
            // Round the remainder to the nearest whole clique.
            if 2 * d[c] >= k {
                wiring.clique(k);
            }
            d[c] = 0;
        }
        while d[c] > 0 {
            d[c] -= 1;
            let r = choose_paths(c, d[1], d[2]);
            wiring.hub(c, r);
            d[2] = d[2].saturating_sub(c - r);
            d[1] = d[1].saturating_sub(2 * r);
            if wiring.used > n {
                return None;
            }
        }
    }
    while d[1] >= 3 {
        wiring.clique(3);
        d[1] -= 3;
    }
    (wiring.used <= n).then_some(wiring)
}

fn window_activities(
    wiring: &Wiring,
    users: &[UserId],
    rate: usize,
    window: &TimeWindow,
    rng: &mut ChaCha8Rng,
) -> Vec<Activity> {
    let mut perm: Vec<UserId> = users.to_vec();
    perm.shuffle(rng);
    let mut pairs: Vec<(UserId, UserId)> = wiring.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();

    let idle = &perm[wiring.used..];
    let filler = rate.saturating_sub(pairs.len());
    if filler > 0 && idle.len() >= 2 {
        let chain = filler.min(idle.len() - 1);
        let links: Vec<(UserId, UserId)> = (0..chain).map(|k| (idle[k], idle[k + 1])).collect();
        pairs.extend(&links);
        for _ in chain..filler {
            pairs.push(*links.choose(rng).expect("chain is non-empty"));
        }
    }

    let mut out: Vec<Activity> = pairs
        .into_iter()
        .map(|(a, b)| {
            let (actor, target) = if rng.random::<bool>() { (a, b) } else { (b, a) };
            let t = window.start + rng.random_range(0..window.length);
            Activity::user(actor, target, t).expect("gadget edges join distinct users")
        })
        .collect();
    out.sort_by_key(|a| a.timestamp);
    out
}

/// One window whose exact distribution is within `max_tv` of `planted`.
fn generate_window(
    users: &[UserId],
    planted: &TriadicDistribution,
    config: &StreamConfig,
    window: TimeWindow,
    seed: u64,
) -> Result<(Vec<Activity>, WindowTruth)> {
    let n = users.len();
    let target = allocate(planted, n);
    let mut demand = target.clone();
    let mut best: Option<(f64, Vec<Activity>, WindowTruth)> = None;
    let mut rng = rng_for(seed, 2 + window.index);

    for attempt in 0..MAX_ATTEMPTS {
        let Some(wiring) = wire(&demand, n) else {
            log::debug!("window {}: attempt {attempt} needs more than {n} users", window.index);
            break;
        };
        let acts = window_activities(&wiring, users, config.rate, &window, &mut rng);
        let truth = window_truth(&acts, window, n as u64, config.w)?;
        let tv = truth.theta.total_variation(planted);
        let better = best.as_ref().is_none_or(|(b, _, _)| tv < *b);
        if better {
            best = Some((tv, acts, truth.clone()));
        }
        if tv <= config.max_tv {
            break;
        }
        // Shift each bin's request against the error it produced.
        let realized = allocate(&truth.theta, n);
        for c in 1..demand.len() {
            let err = realized.get(c).copied().unwrap_or(0) as i64 - target[c] as i64;
            demand[c] = (demand[c] as i64 - err).max(0) as usize;
        }
    }
    match best {
        Some((tv, acts, truth)) if tv <= config.max_tv => Ok((acts, truth)),
        Some((tv, _, _)) => Err(Error::Infeasible { best_tv: tv }),
        None => Err(Error::Infeasible { best_tv: 1.0 }),
    }
}

/// User-user stream over the users of `social` where every window realises
/// `planted` up to `config.max_tv` total variation.
pub fn generate_baseline_stream(
    social: &SocialGraph,
    config: &StreamConfig,
    planted: &TriadicDistribution,
    seed: u64,
) -> Result<SyntheticStream> {
    let users = social.users();
    if users.len() < 3 {
        return Err(Error::Config("baseline stream needs at least 3 users".into()));
    }
    if config.window_length == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    let mut activities = Vec::new();
    let mut truth = Vec::with_capacity(config.windows);
    for k in 0..config.windows as u64 {
        let window = TimeWindow::nth(config.start, config.window_length, k)?;
        let (acts, t) = generate_window(&users, planted, config, window, seed).map_err(|e| e.in_window(k))?;
        activities.extend(acts);
        truth.push(t);
    }
    Ok(SyntheticStream {
        activities,
        truth,
        population: users.len() as u64,
        start: config.start,
        window_length: config.window_length,
        w: config.w,
    })
}

/// Adds disjoint `clique_size`-cliques over `members` users of window `k`
/// that had no triangle, shifting their mass to `C(clique_size - 1, 2)`.
pub fn plant_burst(
    stream: &mut SyntheticStream,
    social: &SocialGraph,
    k: u64,
    members: usize,
    clique_size: usize,
    seed: u64,
) -> Result<()> {
    if clique_size < 3 {
        return Err(Error::Config("burst cliques need at least 3 members".into()));
    }
    let truth = stream
        .truth
        .get(k as usize)
        .ok_or_else(|| Error::Config(format!("window {k} is not part of the stream")))?;
    let mut idle: Vec<UserId> = social
        .users()
        .into_iter()
        .filter(|u| truth.counts.get(u).copied().unwrap_or(0) == 0)
        .collect();
    let members = members / clique_size * clique_size;
    if idle.len() < members {
        return Err(Error::Config(format!(
            "burst needs {members} users without triangles, window {k} has {}",
            idle.len()
        )));
    }
    let mut rng = rng_for(seed, 0x6275_7273);
    idle.shuffle(&mut rng);
    let window = stream.window(k);
    let mut extra = Vec::new();
    for group in idle[..members].chunks(clique_size) {
        for (x, &a) in group.iter().enumerate() {
            for &b in &group[x + 1..] {
                let t = window.start + rng.random_range(0..window.length);
                extra.push(Activity::user(a, b, t)?);
            }
        }
    }
    stream.insert(extra);
    stream.recompute_truth(k)
}

/// Identity of the spamming account.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spammer {
    /// A user id not used anywhere in the stream or pool.
    Fresh,
    Existing(UserId),
}

fn spammer_id(spammer: Spammer, activities: &[Activity], pool: &[UserId]) -> UserId {
    match spammer {
        Spammer::Existing(u) => u,
        Spammer::Fresh => {
            let in_stream = activities.iter().flat_map(|a| {
                let t = match a.target {
                    Target::User(v) => v,
                    Target::Content(_) => 0,
                };
                [a.actor, t]
            });
            in_stream.chain(pool.iter().copied()).max().map_or(0, |m| m + 1)
        }
    }
}

fn merge(activities: &[Activity], mut spam: Vec<Activity>) -> Vec<Activity> {
    let mut out = activities.to_vec();
    out.append(&mut spam);
    out.sort_by_key(|a| a.timestamp);
    out
}

/// Appends `volume` interactions from one spammer to uniformly chosen users
/// of `user_pool`, at uniform times within `window`.
pub fn inject_spam_random(
    activities: &[Activity],
    window: &TimeWindow,
    volume: usize,
    user_pool: &[UserId],
    spammer: Spammer,
    seed: u64,
) -> Result<Vec<Activity>> {
    if volume == 0 {
        return Ok(activities.to_vec());
    }
    let from = spammer_id(spammer, activities, user_pool);
    let targets: Vec<UserId> = user_pool.iter().copied().filter(|&u| u != from).collect();
    if targets.is_empty() {
        return Err(Error::Config("spam target pool is empty".into()));
    }
    let mut rng = rng_for(seed, 0x7370_616d);
    let spam = (0..volume)
        .map(|_| {
            let to = *targets.choose(&mut rng).expect("non-empty");
            Activity::user(from, to, window.start + rng.random_range(0..window.length))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(activities, spam))
}

/// For each of `steps` steps picks a random user with at least one friend
/// and one of their friends, and spams both.
pub fn inject_spam_random_friend(
    activities: &[Activity],
    window: &TimeWindow,
    steps: usize,
    social: &SocialGraph,
    spammer: Spammer,
    seed: u64,
) -> Result<Vec<Activity>> {
    if steps == 0 {
        return Ok(activities.to_vec());
    }
    let users = social.users();
    let from = spammer_id(spammer, activities, &users);
    let befriended: Vec<(UserId, Vec<UserId>)> = users
        .into_iter()
        .filter(|&u| u != from)
        .map(|u| (u, social.followees(u).into_iter().filter(|&v| v != from).collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
        .collect();
    if befriended.is_empty() {
        return Err(Error::Config("no user in the social graph has a friend".into()));
    }
    let mut rng = rng_for(seed, 0x6672_6e64);
    let mut spam = Vec::with_capacity(2 * steps);
    for _ in 0..steps {
        let (u, friends) = befriended.choose(&mut rng).expect("non-empty");
        let v = *friends.choose(&mut rng).expect("non-empty");
        for to in [*u, v] {
            spam.push(Activity::user(from, to, window.start + rng.random_range(0..window.length))?);
        }
    }
    Ok(merge(activities, spam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SupportFloor;

    fn ring_social(n: u32) -> SocialGraph {
        SocialGraph::from_edges((0..n).map(|u| (u, (u + 1) % n)), true)
    }

    #[test]
    fn complete_graph_when_edges_are_maxed() {
        let g = generate_social_graph(4, &GraphModel::Random { edges: 6 }, 1).unwrap();
        assert_eq!(g.edge_count(), 12);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(g.has_edge(a, b), a != b);
            }
        }
        assert!(generate_social_graph(4, &GraphModel::Random { edges: 7 }, 1).is_err());
        assert!(generate_social_graph(2, &GraphModel::Random { edges: 1 }, 1).is_err());
    }

    #[test]
    fn social_graph_is_deterministic() {
        let m = GraphModel::Clustered {
            edges: 300,
            community_size: 10,
            intra_fraction: 0.8,
        };
        let a = generate_social_graph(200, &m, 9).unwrap();
        let b = generate_social_graph(200, &m, 9).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.users().len(), 200);
    }

    #[test]
    fn clique_sizes() {
        assert_eq!(clique_size(1), Some(3));
        assert_eq!(clique_size(3), Some(4));
        assert_eq!(clique_size(6), Some(5));
        assert_eq!(clique_size(4851), Some(100));
        assert_eq!(clique_size(2), None);
        assert_eq!(clique_size(5), None);
    }

    #[test]
    fn allocation_sums_to_population() {
        let t = TriadicDistribution::new(vec![0.333, 0.333, 0.334], SupportFloor::Zero).unwrap();
        assert_eq!(allocate(&t, 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn hub_gadget_counts() {
        for (c, r) in [(5, 1), (5, 5), (7, 3), (2, 2)] {
            let mut w = Wiring { edges: Vec::new(), used: 0 };
            w.hub(c, r);
            let mut g = SampledMultigraph::empty(Mode::UserUser, TimeWindow::nth(0, 1, 0).unwrap());
            g.interaction_edges = w
                .edges
                .iter()
                .map(|&(a, b)| InteractionEdge { a: a as u32, b: b as u32, timestamp: 0 })
                .collect();
            let counts = enumerate_interaction_triangles(&g);
            assert_eq!(counts[&0], c as u64);
            let ones = counts.values().filter(|&&x| x == 1).count();
            assert_eq!(ones, 2 * r, "c={c} r={r}");
        }
    }

    #[test]
    fn zero_point_mass_has_no_triangles() {
        let social = ring_social(30);
        let planted = TriadicDistribution::point_mass(0, 10, SupportFloor::Zero).unwrap();
        let cfg = StreamConfig { rate: 40, w: 10, ..StreamConfig::default() };
        let s = generate_baseline_stream(&social, &cfg, &planted, 3).unwrap();
        assert!(s.truth[0].counts.values().all(|&c| c == 0));
        assert_eq!(s.activities.len(), 40);
    }

    #[test]
    fn five_user_shape_is_exact() {
        let social = ring_social(5);
        let planted = TriadicDistribution::new(vec![0.0, 0.8, 0.2], SupportFloor::Zero).unwrap();
        let cfg = StreamConfig { w: 5, max_tv: 0.0, ..StreamConfig::default() };
        let s = generate_baseline_stream(&social, &cfg, &planted, 5).unwrap();
        assert_eq!(s.truth[0].theta.total_variation(&planted), 0.0);
    }

    #[test]
    fn spam_volume_zero_is_identity() {
        let acts = vec![Activity::user(1, 2, 5).unwrap()];
        let win = TimeWindow::nth(0, 10, 0).unwrap();
        assert_eq!(inject_spam_random(&acts, &win, 0, &[1, 2], Spammer::Fresh, 1).unwrap(), acts);
        let social = ring_social(4);
        assert_eq!(inject_spam_random_friend(&acts, &win, 0, &social, Spammer::Fresh, 1).unwrap(), acts);
    }

    #[test]
    fn fresh_spammer_is_new() {
        let acts = vec![Activity::user(1, 7, 5).unwrap()];
        let win = TimeWindow::nth(0, 10, 0).unwrap();
        let out = inject_spam_random(&acts, &win, 20, &[1, 2, 3], Spammer::Fresh, 1).unwrap();
        assert_eq!(out.len(), 21);
        assert!(out.iter().filter(|a| a.actor == 8).count() == 20);
        assert!(out.iter().all(|a| win.contains(a.timestamp)));
    }

    #[test]
    fn random_friend_spams_adjacent_pairs() {
        let social = ring_social(10);
        let win = TimeWindow::nth(0, 10, 0).unwrap();
        let out = inject_spam_random_friend(&[], &win, 50, &social, Spammer::Fresh, 2).unwrap();
        assert_eq!(out.len(), 100);
        assert!(out.iter().all(|a| a.actor == 10));
    }
}
