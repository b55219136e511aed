// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for option discovery and the learning and
//! exploration experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diffopts::cli::{
    cmd_difficulty, cmd_discover, cmd_pairsteps, compare, load_config, run_experiment,
};
use diffopts::Error;

#[derive(Parser)]
#[command(
    name = "diffopts",
    version,
    about = "Diffusion-option discovery and experiments"
)]
struct Args {
    /// Number of worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover options and write options.csv.
    Discover {
        /// Config file (key=value lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also dump the graph and spectrum matrices as CSV.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run the full experiment: discovery, learning, pair steps, difficulty.
    Learn {
        /// Config file (key=value lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Measure steps between state pairs under the option-augmented walk.
    Pairsteps {
        /// Config file (key=value lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the domain-difficulty index.
    Difficulty {
        /// Config file (key=value lines).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several configs on one domain and merge the results.
    Compare {
        /// Config files (repeat the flag; at least two).
        #[arg(long, required = true, num_args = 1)]
        config: Vec<PathBuf>,
        /// Override every config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(args: Args) -> diffopts::Result<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("cannot size thread pool: {e}")))?;
    }
    match args.command {
        Command::Discover {
            config,
            seed,
            dump_matrices,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cmd_discover(&cfg, dump_matrices)
        }
        Command::Learn { config, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            run_experiment(&cfg)
        }
        Command::Pairsteps { config, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cmd_pairsteps(&cfg)
        }
        Command::Difficulty { config } => {
            let cfg = load_config(&config)?;
            cmd_difficulty(&cfg)
        }
        Command::Compare { config, seed } => {
            let mut cfgs = config
                .iter()
                .map(|p| load_config(p))
                .collect::<diffopts::Result<Vec<_>>>()?;
            if let Some(seed) = seed {
                for cfg in &mut cfgs {
                    cfg.seed = seed;
                }
            }
            let path = compare(&cfgs)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::InvalidConfig(_)) | Err(e @ Error::MalformedMap(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
