//! Compares how far three kinds of injected traffic move the exact
//! distribution of one week: random spam, spam to pairs of friends, and a
//! clique burst of the same volume.

use triadic::prelude::*;
use triadic::synth::{
    generate_baseline_stream, generate_social_graph, inject_spam_random, inject_spam_random_friend, plant_burst,
    social_graph_from_activities, window_truth, GraphModel, Spammer, StreamConfig,
};

fn main() -> triadic::Result<()> {
    let n = 10_000;
    let w = 5_000;
    let social = generate_social_graph(n, &GraphModel::Clustered { edges: 5 * n, community_size: 50, intra_fraction: 0.8 }, 1)?;
    let mut weights = vec![0.0; w + 1];
    for (k, share) in [(10usize, 0.02), (20, 0.01), (45, 0.01), (100, 0.01)] {
        weights[(k - 1) * (k - 2) / 2] = share;
    }
    weights[0] = 1.0 - weights.iter().sum::<f64>();
    let planted = TriadicDistribution::from_weights(weights, SupportFloor::Zero)?;
    let config = StreamConfig { windows: 8, window_length: 7 * 86_400, w, ..StreamConfig::default() };
    let stream = generate_baseline_stream(&social, &config, &planted, 4)?;

    let week = 6;
    let win = stream.window(week);
    let acts = stream.window_activities(week).to_vec();
    let population = n as u64 + 1;
    let exact = |a: &[Activity]| window_truth(a, win, population, w).map(|t| t.theta);
    let original = exact(&acts)?;

    let random = inject_spam_random(&acts, &win, 10_000, &social.users(), Spammer::Fresh, 1)?;
    let friends = social_graph_from_activities(&stream.activities);
    let paired = inject_spam_random_friend(&acts, &win, 5_000, &friends, Spammer::Fresh, 1)?;
    let mut burst = stream.clone();
    plant_burst(&mut burst, &social, week, 5_000, 5, 1)?;

    println!("KL from the clean week:");
    println!("  random spam        {:.4}", kl_divergence(&original, &exact(&random)?));
    println!("  random-friend spam {:.4}", kl_divergence(&original, &exact(&paired)?));
    println!("  clique burst       {:.4}", kl_divergence(&original, &exact(burst.window_activities(week))?));
    Ok(())
}
