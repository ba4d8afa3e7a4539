//! `ksurf` — construct and certify pseudospherical surface nets on time scales.
//!
//! Exit codes: 0 all checks pass, 1 a numeric check failed (the report is
//! still written), 2 configuration error, 3 i/o error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ksurf::pipeline::{self, PipelineConfig, RunOptions};
use ksurf::timescale::{construct_timescale, TimeScaleSpec};
use ksurf::Error;

#[derive(Parser)]
#[command(
    name = "ksurf",
    version,
    about = "Pseudospherical surfaces on time scales: build, transform, verify, export"
)]
struct Cli {
    /// Worker threads for verification (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the randomized algebra checks.
    #[arg(long = "seed-rng", global = true, default_value_t = 0)]
    seed_rng: u64,

    /// Suppress progress output (reports and artifacts are still written).
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: construct, propagate, transform, verify, export.
    Run(ConfigArg),
    /// Run the verification checks only; no artifacts except the report.
    Verify(ConfigArg),
    /// Export the mesh (and field file) without gating on verification.
    Export(ConfigArg),
    /// Print the points of a time scale given its JSON spec.
    BuildTs {
        /// Spec such as '{"kind":"cantor","level":2,"a":0,"b":1}'.
        spec: String,
    },
    /// Canned example: one-soliton pseudosphere on a Cantor-by-uniform grid.
    Demo {
        /// Output directory for mesh, field, and report.
        #[arg(long, default_value = "ksurf-demo")]
        out: PathBuf,
    },
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Map an error to the exit-code contract.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Construction(_) | Error::Json(_) => 2,
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn print_summary(report: &ksurf::pipeline::VerificationReport, quiet: bool) {
    if quiet {
        return;
    }
    for check in &report.checks {
        let status = if check.pass { "ok  " } else { "FAIL" };
        println!(
            "{status} {:<42} {:>12.3e} <= {:.1e}",
            check.name, check.value, check.tolerance
        );
    }
    for s in &report.surfaces {
        if s.valid_nodes > 0 {
            println!(
                "surface[{}]: K expected {:.6}, max |K err| = {:.3e} ({} valid, {} degenerate nodes)",
                s.index, s.k_expected, s.k_max_abs_err, s.valid_nodes, s.degenerate_nodes
            );
        } else {
            println!(
                "surface[{}]: degenerate ({} nodes flagged)",
                s.index, s.degenerate_nodes
            );
        }
    }
    println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });
}

fn run_config(config: &PipelineConfig, opts: &RunOptions, quiet: bool) -> Result<ExitCode, Error> {
    let outcome = pipeline::run(config, opts)?;
    print_summary(&outcome.report, quiet);
    if !quiet {
        for path in &outcome.written {
            println!("wrote {}", path.display());
        }
    }
    Ok(if outcome.report.pass || !opts.verify {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    let threads = cli.threads.unwrap_or_else(default_threads).max(1);
    match cli.command {
        Command::Run(args) => {
            let config = PipelineConfig::from_path(&args.config)?;
            let opts = RunOptions {
                verify: true,
                export: true,
                rng_seed: cli.seed_rng,
                threads,
                ..RunOptions::default()
            };
            run_config(&config, &opts, cli.quiet)
        }
        Command::Verify(args) => {
            let mut config = PipelineConfig::from_path(&args.config)?;
            // checks only: keep the report artifact, drop mesh and fields
            config.outputs.obj = None;
            config.outputs.fields = None;
            let opts = RunOptions {
                verify: true,
                export: true,
                rng_seed: cli.seed_rng,
                threads,
                ..RunOptions::default()
            };
            run_config(&config, &opts, cli.quiet)
        }
        Command::Export(args) => {
            let mut config = PipelineConfig::from_path(&args.config)?;
            // mesh only
            config.outputs.report = None;
            config.outputs.fields = None;
            let opts = RunOptions {
                verify: false,
                export: true,
                rng_seed: cli.seed_rng,
                threads,
                ..RunOptions::default()
            };
            run_config(&config, &opts, cli.quiet)
        }
        Command::BuildTs { spec } => {
            let spec: TimeScaleSpec = serde_json::from_str(&spec)
                .map_err(|e| Error::Config(format!("time-scale spec: {e}")))?;
            let ts = construct_timescale(&spec)?;
            println!("{}", serde_json::to_string(&ts)?);
            if !cli.quiet {
                eprintln!(
                    "# {} points, graininess in [{:.6}, {:.6}], {} dense-approximating steps",
                    ts.len(),
                    ts.min_graininess(),
                    ts.max_graininess(),
                    ts.dense_step_count(ksurf::timescale::DENSE_EPSILON)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo { out } => {
            std::fs::create_dir_all(&out)?;
            let config = pipeline::demo_config(&out);
            let opts = RunOptions {
                verify: true,
                export: true,
                rng_seed: cli.seed_rng,
                threads,
                ..RunOptions::default()
            };
            run_config(&config, &opts, cli.quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
