//! Times exact triangle counting on a whole graph against sampling plus
//! estimation. Pass the number of users as the first argument.

use triadic::bench::{run_benchmark_on, BenchConfig, REFERENCE_SPEEDUP};
use triadic::prelude::*;
use triadic::synth::{generate_social_graph, GraphModel};

fn main() -> triadic::Result<()> {
    let users: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let social = generate_social_graph(users, &GraphModel::Clustered { edges: 5 * users, community_size: 50, intra_fraction: 0.8 }, 1)?;
    let acts: Vec<Activity> = social
        .edges()
        .into_iter()
        .filter(|&(a, b)| a < b)
        .enumerate()
        .map(|(k, (a, b))| Activity::user(a, b, k as u64))
        .collect::<triadic::Result<_>>()?;
    let config = BenchConfig { n: Some(users as u64), ..BenchConfig::default() };
    for row in run_benchmark_on(&acts, &[0.1, 0.3, 0.5], &config)? {
        println!(
            "{:<16} p={:<4} {:>8.3}s  {:>8} edges  speedup {}",
            row.method,
            row.p.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
            row.seconds,
            row.edges,
            row.speedup.map(|s| format!("{s:.1}x")).unwrap_or_else(|| "-".into())
        );
    }
    println!("reference speedup at p=0.3: ~{REFERENCE_SPEEDUP}x");
    Ok(())
}
