//! Recovers the full triadic cardinality distribution of a window from a
//! 50% sample when the number of users is known.

use triadic::prelude::*;
use triadic::synth::{generate_baseline_stream, generate_social_graph, GraphModel, StreamConfig};

fn main() -> triadic::Result<()> {
    let n = 10_000;
    let w = 2_000;
    let social = generate_social_graph(n, &GraphModel::Clustered { edges: 5 * n, community_size: 50, intra_fraction: 0.8 }, 1)?;
    let mut weights = vec![0.0; w + 1];
    for (k, share) in [(6usize, 0.02), (12, 0.012), (25, 0.006), (50, 0.004)] {
        weights[(k - 1) * (k - 2) / 2] = share;
    }
    weights[0] = 1.0 - weights.iter().sum::<f64>();
    let planted = TriadicDistribution::from_weights(weights, SupportFloor::Zero)?;
    let stream = generate_baseline_stream(&social, &StreamConfig { w, ..StreamConfig::default() }, &planted, 3)?;
    let truth = &stream.truth[0].theta;

    let sampler = SamplerConfig::new(0.5, 1.0, 9, Mode::UserUser)?;
    let graph = sample_window(stream.window_activities(0), &stream.window(0), &sampler, None)?;
    let h = calibrate_g0(&compute_histogram(&graph), n as u64)?;
    let params = BetaBinParams::new(sampler.p_delta(), 0.01)?;
    let fit = em_known_n(&h, &params, &EmConfig::default().with_w(w))?;

    println!("{} EM iterations, alpha {:.4}", fit.state.iterations, fit.alpha);
    println!("{:>6} {:>12} {:>12}", "i", "true P(X>=i)", "estimate");
    for i in [1, 5, 10, 30, 55, 100, 276, 600, 1176] {
        println!("{i:>6} {:>12.5} {:>12.5}", truth.tail_mass(i), fit.theta.tail_mass(i));
    }
    println!("total variation {:.4}", fit.theta.total_variation(truth));
    Ok(())
}
