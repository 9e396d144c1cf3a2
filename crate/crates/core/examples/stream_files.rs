//! Writes a synthetic stream and follower graph to disk in the CLI's
//! formats, then runs the file-based pipeline in user-content mode.
//!
//! The same run from the shell:
//! `triadic stream.tsv --mode uc --social social.tsv --p 0.5 --p-prime 0.5 --base-windows 5 --threshold 0.3 --W 500 --undirected`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triadic::io::{write_report_line, write_social_graph, write_stream_file};
use triadic::pipeline::run_pipeline;
use triadic::prelude::*;
use triadic::synth::{generate_social_graph, GraphModel};

fn main() -> triadic::Result<()> {
    let dir = std::env::temp_dir().join("triadic-stream-files");
    std::fs::create_dir_all(&dir)?;
    let users = 2_000;
    let social = generate_social_graph(users, &GraphModel::Clustered { edges: 10 * users, community_size: 40, intra_fraction: 0.9 }, 1)?;
    let social_path = dir.join("social.tsv");
    write_social_graph(std::io::BufWriter::new(std::fs::File::create(&social_path)?), &social)?;

    // Content spreads along friend edges: each adoption is copied by a
    // random friend of the adopter a little later. On day 7 cascades run
    // much longer.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut acts = Vec::new();
    for day in 0..9u64 {
        let longest = if day == 6 { 30 } else { 6 };
        for c in 0..5_000 {
            let content = (day * 10_000 + c) as u32;
            let mut user = rng.random_range(0..users as u32);
            let mut t = day * 86_400 + rng.random_range(0..40_000);
            for _ in 0..rng.random_range(1..longest) {
                acts.push(Activity::content(user, content, t)?);
                let friends = social.followees(user);
                if friends.is_empty() {
                    break;
                }
                user = friends[rng.random_range(0..friends.len())];
                t += rng.random_range(1..3_600);
            }
        }
    }
    acts.sort_by_key(|a| a.timestamp);
    let stream_path = dir.join("stream.tsv");
    write_stream_file(&stream_path, &acts)?;

    let mut config = PipelineConfig::new(Mode::UserContent, 0.5, 86_400);
    config.p_prime = 0.5;
    config.base_windows = 5;
    // Five base days understate the spread of unknown-size estimates.
    config.threshold = Threshold::Fixed(0.3);
    config.w = 500;
    let report_path = dir.join("reports.jsonl");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&report_path)?);
    let summary = run_pipeline(&stream_path, Some(social_path.as_path()), true, &config, |r| {
        println!(
            "day {} {:<4} sampled {:>5}  contents with triangles ~{:>6.0}  kl {:.3}{}",
            r.window + 1,
            if r.base { "base" } else { "" },
            r.sampled_activities,
            r.n_plus.unwrap_or(f64::NAN),
            r.kl.unwrap_or(f64::NAN),
            if r.flagged { "  <- burst" } else { "" }
        );
        write_report_line(&mut out, r)
    })?;
    println!("reports in {}; flagged {:?}", report_path.display(), summary.flagged);
    Ok(())
}
