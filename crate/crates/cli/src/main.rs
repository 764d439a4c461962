use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "zonoid", version, about = "Guaranteed parameter identification with zonotopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a turbocharger measurement stream.
    SynthEngine {
        /// Engine configuration (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the true parameter vector of every step.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run an estimator over a stream.
    Estimate {
        /// Estimator configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Trajectory of the last pass (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured algorithm (cazi, pazi, box).
        #[arg(long)]
        algo: Option<String>,
        #[arg(long, default_value_t = 1)]
        passes: usize,
        /// Accepted for symmetry with synth-engine; estimation is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Write every LMI solve of the last pass (JSON lines).
        #[arg(long)]
        dump_lmi: Option<PathBuf>,
        /// Truth sidecar used for the containment check.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write the run summary here as well as to stdout.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Exact feasible sets of a planar stream.
    Oracle {
        /// Estimator configuration providing the initial set.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-step comparison table of two trajectories and the oracle.
    Report {
        #[arg(long)]
        cazi: PathBuf,
        #[arg(long)]
        pazi: PathBuf,
        #[arg(long)]
        fss: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Boundary points of every set, one JSON object per step.
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ZONOID_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthEngine { config, seed, out, truth } => commands::synth(config, seed, &out, truth),
        Command::Estimate {
            config,
            data,
            out,
            algo,
            passes,
            seed: _,
            dump_lmi,
            truth,
            summary,
        } => commands::estimate(commands::EstimateArgs {
            config,
            data,
            out,
            algo,
            passes,
            dump_lmi,
            truth,
            summary,
        }),
        Command::Oracle { config, data, out } => commands::oracle(config, &data, &out),
        Command::Report {
            cazi,
            pazi,
            fss,
            truth,
            out,
            boundary,
        } => commands::report(&cazi, &pazi, &fss, truth, &out, boundary),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
