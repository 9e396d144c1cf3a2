use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use triadic::bench::{run_benchmark, BenchConfig, REFERENCE_SPEEDUP};
use triadic::burst::Threshold;
use triadic::io::write_report_line;
use triadic::model::{Mode, DEFAULT_W};
use triadic::pipeline::{run_pipeline, PipelineConfig};
use triadic::{Error, Result};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Uu,
    Uc,
}

/// Sample an activity stream window by window, estimate each window's
/// triadic cardinality distribution and flag bursts.
#[derive(Debug, Parser)]
#[command(name = "triadic", version)]
struct Args {
    /// Activity stream: `timestamp<TAB>U|C<TAB>actor<TAB>target` per line.
    #[arg(required_unless_present = "bench")]
    stream: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "uu")]
    mode: ModeArg,

    /// Probability of keeping an activity.
    #[arg(long, default_value_t = 0.3)]
    p: f64,

    /// Probability of checking a user pair against the social graph.
    #[arg(long = "p-prime", default_value_t = 0.3)]
    p_prime: f64,

    #[arg(long = "window-seconds", default_value_t = 86_400)]
    window_seconds: u64,

    /// Population size; enables the known-size estimator.
    #[arg(long)]
    n: Option<u64>,

    /// Largest triangle count represented; larger counts are clamped.
    #[arg(long = "W", default_value_t = DEFAULT_W)]
    w: usize,

    /// Number of leading windows that form the base distribution.
    #[arg(long = "base-windows", default_value_t = 0)]
    base_windows: usize,

    /// `auto` or a fixed divergence value.
    #[arg(long, default_value = "auto")]
    threshold: String,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Follower edge list `follower<TAB>followee`; required with `--mode uc`.
    #[arg(long)]
    social: Option<PathBuf>,

    /// Treat each social edge as mutual.
    #[arg(long)]
    undirected: bool,

    /// Report destination (JSON lines); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Time exact counting against sample-and-estimate on this graph.
    #[arg(long, value_name = "GRAPH")]
    bench: Option<PathBuf>,

    /// Sampling rates for `--bench`.
    #[arg(long = "p-list", value_delimiter = ',', default_values_t = [0.1, 0.3])]
    p_list: Vec<f64>,

    /// More log output on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn bench(args: &Args, graph: &PathBuf) -> Result<()> {
    let config = BenchConfig {
        w: args.w,
        seed: args.seed,
        n: args.n,
        ..BenchConfig::default()
    };
    let rows = run_benchmark(graph, &args.p_list, &config)?;
    let mut out = output(&args.out)?;
    for row in &rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if let Some(row) = rows.iter().find(|r| r.p == Some(0.3)) {
        eprintln!(
            "speedup at p=0.3: {:.1}x (reference figure ~{REFERENCE_SPEEDUP}x)",
            row.speedup.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn run(args: Args) -> Result<()> {
    if let Some(graph) = &args.bench {
        return bench(&args, graph);
    }
    let mode = match args.mode {
        ModeArg::Uu => Mode::UserUser,
        ModeArg::Uc => Mode::UserContent,
    };
    let mut config = PipelineConfig::new(mode, args.p, args.window_seconds);
    config.p_prime = args.p_prime;
    config.n = args.n;
    config.w = args.w;
    config.base_windows = args.base_windows;
    config.threshold = args.threshold.parse::<Threshold>()?;
    config.seed = args.seed;
    let stream = args
        .stream
        .as_ref()
        .ok_or_else(|| Error::Config("missing stream path".into()))?;

    let mut out = output(&args.out)?;
    let summary = run_pipeline(stream, args.social.as_deref(), args.undirected, &config, |r| {
        write_report_line(&mut out, r)
    })?;
    out.flush()?;
    eprintln!(
        "{} windows, flagged {:?}{}",
        summary.windows,
        summary.flagged,
        summary.threshold.map(|t| format!(", threshold {t:.4}")).unwrap_or_default()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("triadic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
