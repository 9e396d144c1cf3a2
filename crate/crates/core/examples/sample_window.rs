//! Samples one day of a synthetic interaction stream at several rates and
//! prints the observed triangle histogram next to the exact one.

use triadic::oracle::exact_histogram;
use triadic::prelude::*;
use triadic::synth::{generate_baseline_stream, generate_social_graph, GraphModel, StreamConfig};

fn main() -> triadic::Result<()> {
    let n = 5_000;
    let social = generate_social_graph(n, &GraphModel::Clustered { edges: 5 * n, community_size: 50, intra_fraction: 0.8 }, 1)?;
    // Half a percent of users in 10-cliques, the same share in 20-cliques.
    let mut weights = vec![0.0; 200];
    weights[0] = 0.99;
    weights[36] = 0.005;
    weights[171] = 0.005;
    let planted = TriadicDistribution::from_weights(weights, SupportFloor::Zero)?;
    let stream = generate_baseline_stream(&social, &StreamConfig { w: 199, ..StreamConfig::default() }, &planted, 7)?;
    let acts = stream.window_activities(0);
    println!("{} activities in window 0", acts.len());
    println!("exact:   {:?}", exact_histogram(&stream.truth[0].counts, Mode::UserUser).sparse());

    for p in [1.0, 0.5, 0.3, 0.1] {
        let config = SamplerConfig::new(p, 1.0, 42, Mode::UserUser)?;
        let graph = sample_window(acts, &stream.window(0), &config, None)?;
        let h = compute_histogram(&graph);
        println!(
            "p={p:<4} kept {:>6} edges, triangle keep rate {:.4}: {:?}",
            graph.interaction_edges.len(),
            config.p_delta(),
            h.sparse()
        );
    }
    Ok(())
}
