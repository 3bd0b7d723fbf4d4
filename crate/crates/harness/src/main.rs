use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use gaplab::emit::ALL_FORMATS;
use gaplab::{emit, parse_config, run, write_index, Kind};

#[derive(Parser)]
#[command(name = "gaplab", version, about = "Fundamental-gap experiments on geodesic balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpairs of the 1-D model.
    Solve1d(Common),
    /// Dirichlet eigenpairs of a geodesic ball.
    Solveball(Common),
    /// Gap comparison, condition and modulus checks on one ball.
    Verify(Common),
    /// Reflection-coupling Monte Carlo.
    Couple(Common),
    /// A grid of experiments.
    Sweep(Common),
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Solve1d(a) => (Kind::Solve1d, a),
        Command::Solveball(a) => (Kind::Solveball, a),
        Command::Verify(a) => (Kind::Verify, a),
        Command::Couple(a) => (Kind::Couple, a),
        Command::Sweep(a) => (Kind::Sweep, a),
    };
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let text = if text.split_whitespace().any(|t| t.starts_with("kind=")) {
        text
    } else {
        format!("kind={}\n{text}", kind.name())
    };
    let mut cfg = parse_config(&text)?;
    if cfg.kind != kind {
        bail!("configuration is kind={} but the subcommand is {}", cfg.kind.name(), kind.name());
    }
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = args.out {
        cfg = cfg.with_out(out);
    }
    let Some(out) = cfg.out.clone() else {
        bail!("no output directory: pass --out or set out= in the configuration");
    };
    let report = run(&cfg)?;
    let files = emit(&report, &out, &ALL_FORMATS).with_context(|| format!("writing to {}", out.display()))?;
    write_index(&out)?;
    for (section, check) in report.checks() {
        println!("{} {}: {}", if check.pass { "PASS" } else { "FAIL" }, section.label, check.name);
    }
    println!("{} files written to {}", files.len(), out.display());
    Ok(report.pass)
}
