//! Drive a small two-mode experiment over bundled benchmark files and print
//! the comparison report.
//!
//! Usage: `cargo run --release --example run_experiment -- [out_dir]`

use std::path::PathBuf;

use memevo::experiment::{
    compare_modes, run_sequence, ExperimentConfig, Mode, RunStatistics,
};

fn main() -> memevo::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("memevo_experiment"));
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/cvrp");

    let config_for = |mode: Mode| ExperimentConfig {
        instance_paths: vec![data.join("A-n32-k5.vrp"), data.join("E-n33-k4.vrp")],
        mode,
        runs_per_instance: 5,
        max_evaluations: 20_000,
        pool_path: out.join(format!("pool_{}.json", mode.as_str())),
        seed: 11,
        output_dir: out.join(mode.as_str()),
        population_size: 30,
        p_local_search: 0.2,
        feature_dim: 2,
        success_thresholds: None,
        jobs: None,
    };

    let heuristic = run_sequence(&config_for(Mode::Heuristic))?;
    let meme = run_sequence(&config_for(Mode::Meme))?;

    println!("{}", RunStatistics::CSV_HEADER);
    for s in heuristic.iter().chain(&meme) {
        println!("{}", s.to_csv_row());
    }
    println!();
    println!("{}", compare_modes(&heuristic, &meme)?);
    println!("\noutputs (stats.csv, trace_*.csv, pool json) under {}", out.display());
    Ok(())
}
