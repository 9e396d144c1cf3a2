//! Brute-force ground truth on unsampled graphs.
//!
//! Nothing here shares code with the sampler's counting path: interaction
//! triangles are found by a node iterator over neighbour sets, influence
//! triangles by checking every ordered pair of adopters.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::betabin::{BetaBinParams, KernelTable};
use crate::error::{Error, Result};
use crate::model::{
    clamp_cardinality, ContentId, Mode, SampledMultigraph, SocialGraph, SupportFloor, TriadicDistribution,
    TriadicHistogram, UserId,
};

/// Exact interaction-triangle count per node. Every node touched by an edge
/// appears in the result; parallel edges multiply.
pub fn enumerate_interaction_triangles(graph: &SampledMultigraph) -> BTreeMap<UserId, u64> {
    let mut mult: HashMap<(u32, u32), u64> = HashMap::new();
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in &graph.interaction_edges {
        let key = (e.a.min(e.b), e.a.max(e.b));
        *mult.entry(key).or_default() += 1;
        adj.entry(e.a).or_default().insert(e.b);
        adj.entry(e.b).or_default().insert(e.a);
    }
    let m = |x: u32, y: u32| mult.get(&(x.min(y), x.max(y))).copied().unwrap_or(0);

    let mut counts = BTreeMap::new();
    for (&u, nbrs) in &adj {
        let nbrs: Vec<u32> = nbrs.iter().copied().collect();
        let mut c = 0u64;
        for (k, &v) in nbrs.iter().enumerate() {
            for &w in &nbrs[k + 1..] {
                if adj[&v].contains(&w) {
                    c += m(u, v) * m(u, w) * m(v, w);
                }
            }
        }
        counts.insert(u, c);
    }
    counts
}

/// Exact influence-triangle count per content node: ordered user pairs
/// (earlier `u`, later `v`) with `v` following `u`. Repeat interactions count
/// from the user's first one; equal timestamps never form a triangle.
pub fn enumerate_influence_triangles(
    graph: &SampledMultigraph,
    social: &SocialGraph,
) -> BTreeMap<ContentId, u64> {
    let mut first: BTreeMap<ContentId, BTreeMap<UserId, u64>> = BTreeMap::new();
    for e in &graph.interaction_edges {
        let t = first.entry(e.b).or_default().entry(e.a).or_insert(e.timestamp);
        *t = (*t).min(e.timestamp);
    }
    first
        .into_iter()
        .map(|(c, users)| {
            let mut n = 0;
            for (&u, &tu) in &users {
                for (&v, &tv) in &users {
                    if tu < tv && social.has_edge(v, u) {
                        n += 1;
                    }
                }
            }
            (c, n)
        })
        .collect()
}

/// Per-node counts for whichever mode the graph is in.
pub fn exact_counts(graph: &SampledMultigraph, social: Option<&SocialGraph>) -> Result<BTreeMap<u32, u64>> {
    match graph.mode {
        Mode::UserUser => Ok(enumerate_interaction_triangles(graph)),
        Mode::UserContent => social
            .map(|s| enumerate_influence_triangles(graph, s))
            .ok_or_else(|| Error::Config("user-content mode needs a social graph".into())),
    }
}

/// Histogram of exact counts over the counted nodes.
pub fn exact_histogram(counts: &BTreeMap<u32, u64>, mode: Mode) -> TriadicHistogram {
    TriadicHistogram::from_node_counts(counts.values().copied(), mode)
}

/// `theta_i`: the fraction of a population of `population` nodes whose count
/// is `i`; nodes missing from `counts` have count 0. Counts above `w` fold
/// into `w`.
pub fn exact_distribution(
    counts: &BTreeMap<u32, u64>,
    population: u64,
    w: usize,
) -> Result<TriadicDistribution> {
    let counted = counts.len() as u64;
    if population < counted || population == 0 {
        return Err(Error::Calibration {
            n: population,
            observed: counted,
        });
    }
    let mut bins = vec![0.0; w + 1];
    bins[0] = (population - counted) as f64;
    for &c in counts.values() {
        bins[clamp_cardinality(c, w)] += 1.0;
    }
    TriadicDistribution::from_weights(bins, SupportFloor::Zero)
}

/// Best point found by [`grid_mle`].
#[derive(Clone, Debug)]
pub struct GridOptimum {
    pub theta: TriadicDistribution,
    pub alpha: f64,
    pub log_likelihood: f64,
}

/// Exhaustive maximisation of the known-population likelihood over the
/// simplex on `0..=w_small` discretised at `grid_step`, for each `alpha` in
/// `alpha_grid`. Ties keep the first point visited.
pub fn grid_mle(
    histogram: &TriadicHistogram,
    p_delta: f64,
    w_small: usize,
    grid_step: f64,
    alpha_grid: &[f64],
) -> Result<GridOptimum> {
    if w_small > 4 {
        return Err(Error::Config(format!("grid search needs W <= 4, got {w_small}")));
    }
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::Config(format!("grid step must lie in (0, 0.01], got {grid_step}")));
    }
    if alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if !histogram.is_calibrated() {
        return Err(Error::Uncalibrated);
    }
    let units = (1.0 / grid_step).round() as usize;
    let obs: Vec<(usize, f64)> = histogram.sparse().into_iter().map(|(j, g)| (j, g as f64)).collect();

    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    for &alpha in alpha_grid {
        let params = BetaBinParams::new(p_delta, alpha)?;
        let table = KernelTable::new(&params, w_small);
        // kernel[o][i] = b_{j_o, i}
        let kernel: Vec<Vec<f64>> = obs
            .iter()
            .map(|&(j, _)| (0..=w_small).map(|i| table.log_b(j, i).exp()).collect())
            .collect();
        let mut parts = vec![0usize; w_small + 1];
        for_each_composition(units, &mut parts, 0, &mut |parts| {
            let mut ll = 0.0;
            for ((_, g), row) in obs.iter().zip(&kernel) {
                let mix: f64 = row.iter().zip(parts.iter()).map(|(b, &k)| b * k as f64).sum::<f64>()
                    / units as f64;
                ll += g * mix.ln();
                if ll == f64::NEG_INFINITY {
                    return;
                }
            }
            if best.as_ref().is_none_or(|(b, _, _)| ll > *b) {
                best = Some((ll, parts.to_vec(), alpha));
            }
        });
    }
    let (ll, parts, alpha) = best.ok_or_else(|| Error::ModelSupport {
        j: histogram.max_index().unwrap_or(0),
    })?;
    let theta = TriadicDistribution::from_weights(
        parts.iter().map(|&k| k as f64).collect(),
        SupportFloor::Zero,
    )?;
    Ok(GridOptimum {
        theta,
        alpha,
        log_likelihood: ll,
    })
}

fn for_each_composition(remaining: usize, parts: &mut [usize], at: usize, f: &mut impl FnMut(&[usize])) {
    if at + 1 == parts.len() {
        parts[at] = remaining;
        f(parts);
        return;
    }
    for k in 0..=remaining {
        parts[at] = k;
        for_each_composition(remaining - k, parts, at + 1, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InteractionEdge, TimeWindow};
    use crate::sampler::calibrate_g0;

    fn uu(edges: &[(u32, u32)]) -> SampledMultigraph {
        let mut g = SampledMultigraph::empty(Mode::UserUser, TimeWindow::nth(0, 10, 0).unwrap());
        g.interaction_edges = edges
            .iter()
            .map(|&(a, b)| InteractionEdge { a, b, timestamp: 0 })
            .collect();
        g
    }

    #[test]
    fn bowtie_counts() {
        // u = 0 shared by triangles (0,1,2) and (0,3,4)
        let g = uu(&[(1, 2), (2, 0), (0, 3), (3, 4), (4, 0), (0, 1)]);
        let c = enumerate_interaction_triangles(&g);
        assert_eq!(c[&0], 2);
        for v in 1..=4 {
            assert_eq!(c[&v], 1);
        }
    }

    #[test]
    fn doubled_edge_and_edgeless() {
        let c = enumerate_interaction_triangles(&uu(&[(0, 1), (0, 1), (1, 2), (2, 0)]));
        assert!(c.values().all(|&x| x == 2));
        assert!(enumerate_interaction_triangles(&uu(&[])).is_empty());
        let path = enumerate_interaction_triangles(&uu(&[(0, 1), (1, 2)]));
        assert!(path.values().all(|&x| x == 0));
    }

    #[test]
    fn influence_ties_do_not_count() {
        let mut g = SampledMultigraph::empty(Mode::UserContent, TimeWindow::nth(0, 10, 0).unwrap());
        g.interaction_edges = vec![
            InteractionEdge { a: 1, b: 7, timestamp: 3 },
            InteractionEdge { a: 2, b: 7, timestamp: 3 },
        ];
        let social = SocialGraph::from_edges([(2, 1), (1, 2)], false);
        assert_eq!(enumerate_influence_triangles(&g, &social)[&7], 0);
    }

    #[test]
    fn distribution_examples() {
        let counts: BTreeMap<u32, u64> = [(0, 2), (1, 1), (2, 1), (3, 1), (4, 1)].into_iter().collect();
        let d = exact_distribution(&counts, 5, 5).unwrap();
        assert!((d.prob(1) - 0.8).abs() < 1e-15 && (d.prob(2) - 0.2).abs() < 1e-15);
        let zeros: BTreeMap<u32, u64> = [(0, 0), (1, 0)].into_iter().collect();
        assert_eq!(exact_distribution(&zeros, 10, 3).unwrap().prob(0), 1.0);
        assert!(exact_distribution(&counts, 4, 5).is_err());
    }

    #[test]
    fn grid_identity_channel() {
        let h = calibrate_g0(&TriadicHistogram::new(vec![0, 3, 1], Mode::UserUser), 10).unwrap();
        let opt = grid_mle(&h, 1.0, 3, 0.01, &[0.0]).unwrap();
        for (i, want) in [(0, 0.6), (1, 0.3), (2, 0.1), (3, 0.0)] {
            assert!((opt.theta.prob(i) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_single_observation_picks_best_point_mass() {
        // one node seen with j = 1 at p = 0.5: b_1i = i / 2^i peaks at i = 1, 2
        let h = calibrate_g0(&TriadicHistogram::new(vec![0, 1], Mode::UserUser), 1).unwrap();
        let opt = grid_mle(&h, 0.5, 3, 0.01, &[0.0]).unwrap();
        assert!((opt.log_likelihood - 0.5f64.ln()).abs() < 1e-12);
        let h = calibrate_g0(&TriadicHistogram::new(vec![0, 0, 1], Mode::UserUser), 1).unwrap();
        let opt = grid_mle(&h, 0.6, 3, 0.01, &[0.0]).unwrap();
        // b_22 = .36, b_23 = 3 * .36 * .4 = .432
        assert_eq!(opt.theta.prob(3), 1.0);
    }

    #[test]
    fn grid_rejects_large_problems() {
        let h = calibrate_g0(&TriadicHistogram::new(vec![0, 1], Mode::UserUser), 1).unwrap();
        assert!(grid_mle(&h, 0.5, 5, 0.01, &[0.0]).is_err());
        assert!(grid_mle(&h, 0.5, 3, 0.02, &[0.0]).is_err());
    }
}
