//! Runs the windowed pipeline over a two-week synthetic stream with a
//! clique burst on day 10 and prints the divergence of every day.

use triadic::prelude::*;
use triadic::synth::{generate_baseline_stream, generate_social_graph, plant_burst, GraphModel, StreamConfig};

fn main() -> triadic::Result<()> {
    let n = 5_000;
    let w = 1_000;
    let social = generate_social_graph(n, &GraphModel::Clustered { edges: 5 * n, community_size: 50, intra_fraction: 0.8 }, 1)?;
    let mut weights = vec![0.0; w + 1];
    for (k, share) in [(4usize, 0.02), (6, 0.013), (10, 0.008), (14, 0.006), (20, 0.004)] {
        weights[(k - 1) * (k - 2) / 2] = share;
    }
    weights[0] = 1.0 - weights.iter().sum::<f64>();
    let planted = TriadicDistribution::from_weights(weights, SupportFloor::Zero)?;
    let config = StreamConfig { windows: 14, rate: 2 * n, w, ..StreamConfig::default() };
    let mut stream = generate_baseline_stream(&social, &config, &planted, 11)?;
    // 1500 quiet users suddenly interact in groups of 20.
    plant_burst(&mut stream, &social, 9, 1_500, 20, 11)?;

    let mut pipeline = PipelineConfig::new(Mode::UserUser, 0.3, config.window_length);
    pipeline.n = Some(n as u64);
    pipeline.w = w;
    pipeline.base_windows = 7;
    pipeline.stream_start = Some(0);
    let (reports, summary) = run_activities(&stream.activities, None, &pipeline)?;
    for r in &reports {
        println!(
            "day {:>2} {:<5} kl {:.4}{}",
            r.window + 1,
            if r.base { "base" } else { "" },
            r.kl.unwrap_or(f64::NAN),
            if r.flagged { "  <- burst" } else { "" }
        );
    }
    println!("threshold {:.4}", summary.threshold.unwrap_or(f64::NAN));
    Ok(())
}
