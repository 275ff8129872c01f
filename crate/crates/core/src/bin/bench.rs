//! Command-line front end of the experiment harness.
//!
//! Exit codes: 0 on success, 2 when every requested cell was skipped, 1 on
//! error (including crash-check violations).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmem_prims::bench::{self, CrashCheckConfig, Experiment, ExperimentConfig, Position, Scenario};
use pmem_prims::nodes::LayoutKind;
use pmem_prims::tree::Placement;
use pmem_prims::{FaStrategy, Result};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Persistent-memory primitive experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its result rows as CSV.
    Run(RunArgs),
    /// Turn result CSVs into per-layout performance profiles.
    Profile {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crash an operation at every event and verify recovery.
    Crashcheck {
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, value_delimiter = ',', default_value = "tx")]
        fa: Vec<FaStrategy>,
        #[arg(long)]
        adversarial: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Experiment,
    #[arg(long, value_delimiter = ',')]
    layouts: Vec<LayoutKind>,
    #[arg(long, value_delimiter = ',')]
    node_sizes: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    positions: Vec<Position>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    fa: Vec<FaStrategy>,
    #[arg(long, value_delimiter = ',')]
    placement: Vec<Placement>,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::new(args.experiment).with_env_arena()?;
    if !args.layouts.is_empty() {
        cfg.layouts = args.layouts;
    }
    if !args.node_sizes.is_empty() {
        cfg.node_sizes = args.node_sizes;
    }
    if !args.positions.is_empty() {
        cfg.positions = args.positions;
    }
    if !args.placement.is_empty() {
        cfg.placements = args.placement;
    }
    cfg.iterations = args.iterations.unwrap_or(cfg.iterations);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.fa = args.fa;
    let report = bench::run(&cfg)?;
    if report.skipped_all() {
        eprintln!("every cell was skipped:");
        for s in &report.skipped {
            eprintln!("  {s}");
        }
        return Ok(ExitCode::from(2));
    }
    bench::emit_csv(&report.rows, &args.out)?;
    eprintln!(
        "{} rows -> {} ({} cells skipped)",
        report.rows.len(),
        args.out.display(),
        report.skipped.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn profile(inputs: Vec<PathBuf>, out: PathBuf) -> Result<ExitCode> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(bench::read_csv(std::fs::File::open(&p)?)?);
    }
    let scores = bench::build_profile(&rows)?;
    bench::emit_profile(&scores, &out)?;
    eprintln!("{} layouts -> {}", scores.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn crashcheck(
    scenario: Scenario,
    fa: Vec<FaStrategy>,
    adversarial: bool,
    seed: u64,
) -> Result<ExitCode> {
    let mut cfg = CrashCheckConfig::new(scenario);
    cfg.fa = fa;
    cfg.adversarial = adversarial;
    cfg.seed = seed;
    let rep = bench::crashcheck(&cfg)?;
    println!(
        "cases={} violations={} torn_words={}",
        rep.cases, rep.violations, rep.torn_words
    );
    for d in &rep.details {
        println!("  {d}");
    }
    Ok(if rep.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are errors (1); clap's own code 2 means skipped-all here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let res = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Profile { inputs, out } => profile(inputs, out),
        Cmd::Crashcheck {
            scenario,
            fa,
            adversarial,
            seed,
        } => crashcheck(scenario, fa, adversarial, seed),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
