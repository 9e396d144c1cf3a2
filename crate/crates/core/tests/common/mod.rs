#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use triadic::betabin::{log_b, BetaBinParams};
use triadic::model::{Activity, Mode, SocialGraph, SupportFloor, TimeWindow, TriadicDistribution, TriadicHistogram};
use triadic::synth::{generate_social_graph, GraphModel};

/// Two triangles sharing user 0: the centre has two, the others one each.
pub fn bowtie_activities() -> Vec<Activity> {
    [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Activity::user(a, b, 10 + k as u64).unwrap())
        .collect()
}

pub fn bowtie_histogram() -> TriadicHistogram {
    TriadicHistogram::from_sparse([(1, 4), (2, 1)], Mode::UserUser)
}

/// Five users and four content items where only content 2 has an influence
/// triangle: user 1 follows user 2 and adopts content 2 after them.
pub fn influence_example() -> (Vec<Activity>, SocialGraph) {
    let social = SocialGraph::from_edges([(1, 2), (3, 5), (2, 4)], false);
    let acts = vec![
        Activity::content(5, 1, 1).unwrap(),
        Activity::content(2, 2, 1).unwrap(),
        Activity::content(1, 2, 2).unwrap(),
        Activity::content(3, 3, 3).unwrap(),
        Activity::content(4, 3, 5).unwrap(),
        Activity::content(1, 4, 4).unwrap(),
        Activity::content(2, 4, 6).unwrap(),
    ];
    (acts, social)
}

pub fn influence_histogram() -> TriadicHistogram {
    TriadicHistogram::from_sparse([(0, 3), (1, 1)], Mode::UserContent)
}

pub fn window(len: u64) -> TimeWindow {
    TimeWindow::nth(0, len, 0).unwrap()
}

pub const FAMILY_CLIQUES: [usize; 7] = [10, 14, 20, 30, 45, 70, 100];

/// Heavy-tailed planted distribution: a `tail_share` fraction of the `n`
/// users sits in cliques of the sizes above, each size getting nodes in
/// proportion to `1/k`; everyone else has no triangle.
pub fn clique_family(n: usize, tail_share: f64, w: usize) -> TriadicDistribution {
    clique_family_over(&FAMILY_CLIQUES, n, tail_share, w)
}

pub fn clique_family_over(sizes: &[usize], n: usize, tail_share: f64, w: usize) -> TriadicDistribution {
    let z: f64 = sizes.iter().map(|&k| 1.0 / k as f64).sum();
    let mut probs = vec![0.0; w + 1];
    let mut rest = 1.0;
    for &k in sizes {
        let c = (k - 1) * (k - 2) / 2;
        let nodes = (tail_share * n as f64 / k as f64 / z / k as f64).round() * k as f64;
        probs[c.min(w)] += nodes / n as f64;
        rest -= nodes / n as f64;
    }
    probs[0] += rest;
    TriadicDistribution::from_weights(probs, SupportFloor::Zero).unwrap()
}

pub fn clustered_social(n: usize, seed: u64) -> SocialGraph {
    let model = GraphModel::Clustered {
        edges: 5 * n,
        community_size: 50,
        intra_fraction: 0.8,
    };
    generate_social_graph(n, &model, seed).unwrap()
}

/// Draws `n` nodes from `theta` and thins each node's triangles through the
/// observation model by inverse-CDF sampling.
pub fn simulate_histogram(rng: &mut ChaCha8Rng, theta: &[f64], params: &BetaBinParams, n: usize) -> TriadicHistogram {
    let mut counts = vec![0u64; theta.len()];
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let mut i = 0;
        while i + 1 < theta.len() && u >= theta[i] {
            u -= theta[i];
            i += 1;
        }
        let mut v: f64 = rng.random();
        let mut j = 0;
        while j < i {
            let b = log_b(j, i, params).unwrap().exp();
            if v < b {
                break;
            }
            v -= b;
            j += 1;
        }
        counts[j] += 1;
    }
    TriadicHistogram::new(counts, Mode::UserUser)
}
