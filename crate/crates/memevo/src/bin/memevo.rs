//! Thin command-line front end over the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use memevo::experiment::{
    compare_modes, read_stats_csv, run_sequence, ExperimentConfig, Mode, RunStatistics,
};

#[derive(Parser)]
#[command(name = "memevo", version, about = "Memetic routing solver with a transferable meme pool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an instance sequence described by a TOML config.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured initialization mode.
        #[arg(long)]
        mode: Option<Mode>,
        /// Override the meme pool file.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Parallel runs per instance.
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Success threshold applied to every instance (default: each
        /// instance's own average cost).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the statistics tables from one or more output directories.
    Stats {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Compare the statistics of two output directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> memevo::Result<()> {
    match cli.command {
        Command::Run {
            config,
            mode,
            pool,
            jobs,
            seed,
            out,
            threshold,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let mut config = ExperimentConfig::from_toml(&text)?;
            if let Some(mode) = mode {
                config.mode = mode;
            }
            if let Some(pool) = pool {
                config.pool_path = pool;
            }
            if let Some(jobs) = jobs {
                config.jobs = Some(jobs);
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(out) = out {
                config.output_dir = out;
            }
            if let Some(t) = threshold {
                config.success_thresholds = Some(vec![t; config.instance_paths.len()]);
            }
            let stats = run_sequence(&config)?;
            println!("{}", RunStatistics::CSV_HEADER);
            for s in &stats {
                println!("{}", s.to_csv_row());
            }
            println!(
                "wrote {} and per-run traces to {}",
                config.output_dir.join("stats.csv").display(),
                config.output_dir.display()
            );
            Ok(())
        }
        Command::Stats { dirs } => {
            for dir in dirs {
                let stats = read_stats_csv(&dir.join("stats.csv"))?;
                println!("# {}", dir.display());
                println!("{}", RunStatistics::CSV_HEADER);
                for s in &stats {
                    println!("{}", s.to_csv_row());
                }
            }
            Ok(())
        }
        Command::Compare { dir_a, dir_b } => {
            let a = read_stats_csv(&dir_a.join("stats.csv"))?;
            let b = read_stats_csv(&dir_b.join("stats.csv"))?;
            let report = compare_modes(&a, &b)?;
            println!("{}", report);
            Ok(())
        }
    }
}
