//! Estimates the distribution over users with at least one triangle, and
//! how many such users there are, without knowing the population size.

use triadic::prelude::*;
use triadic::synth::{generate_baseline_stream, generate_social_graph, GraphModel, StreamConfig};

fn main() -> triadic::Result<()> {
    let n = 20_000;
    let w = 1_000;
    let social = generate_social_graph(n, &GraphModel::Clustered { edges: 5 * n, community_size: 50, intra_fraction: 0.8 }, 2)?;
    let mut weights = vec![0.0; w + 1];
    for (k, share) in [(10usize, 0.02), (20, 0.01), (40, 0.01)] {
        weights[(k - 1) * (k - 2) / 2] = share;
    }
    weights[0] = 1.0 - weights.iter().sum::<f64>();
    let planted = TriadicDistribution::from_weights(weights, SupportFloor::Zero)?;
    let stream = generate_baseline_stream(&social, &StreamConfig { w, ..StreamConfig::default() }, &planted, 5)?;
    let true_n_plus = stream.truth[0].counts.values().filter(|&&c| c > 0).count();

    for p in [0.3, 0.5, 0.7] {
        let sampler = SamplerConfig::new(p, 1.0, 1, Mode::UserUser)?;
        let graph = sample_window(stream.window_activities(0), &stream.window(0), &sampler, None)?;
        let h = compute_histogram(&graph);
        let params = BetaBinParams::new(sampler.p_delta(), 0.01)?;
        let fit = em_unknown_n(&h, &params, &EmConfig::default().with_w(w))?;
        println!(
            "p={p}: {} users seen with triangles, estimated {:.0} (true {true_n_plus}), alpha {:.4}",
            h.with_triangles(),
            fit.n_plus,
            fit.alpha
        );
    }
    Ok(())
}
