//! Transfer demo: solve a family of related instances twice, once with
//! random initial populations and once with the meme pool, and compare
//! initial solution quality and evaluations-to-target per instance.
//!
//! Usage: `cargo run --release --example meme_transfer -- [runs] [evaluations]`

use memevo::experiment::{run_sequence, ExperimentConfig, Mode};
use memevo::routing::ConvergenceTrace;
use memevo::synth::{clustered_family, to_tsplib, FamilyParams};

fn main() -> memevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let max_evaluations: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);

    let dir = std::env::temp_dir().join(format!("memevo_transfer_{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let family = clustered_family(&FamilyParams::default());
    let mut instance_paths = Vec::new();
    for inst in &family {
        let path = dir.join(format!("{}.vrp", inst.name));
        std::fs::write(&path, to_tsplib(inst))?;
        instance_paths.push(path);
    }

    let population_size = 30;
    let config_for = |mode: Mode| ExperimentConfig {
        instance_paths: instance_paths.clone(),
        mode,
        runs_per_instance: runs,
        max_evaluations,
        pool_path: dir.join(format!("pool_{}.json", mode.as_str())),
        seed: 7,
        output_dir: dir.join(mode.as_str()),
        population_size,
        p_local_search: 0.2,
        feature_dim: 2,
        success_thresholds: None,
        jobs: None,
    };

    println!("running {} mode ...", Mode::Random.as_str());
    let random_stats = run_sequence(&config_for(Mode::Random))?;
    println!("running {} mode ...", Mode::Meme.as_str());
    let meme_stats = run_sequence(&config_for(Mode::Meme))?;

    println!(
        "\n{:<16} {:>12} {:>12} {:>14} {:>14} {:>12}",
        "instance", "rand ave", "meme ave", "rand init", "meme init", "meme reach"
    );
    for (j, inst) in family.iter().enumerate() {
        let mut rand_init = 0.0;
        let mut meme_init = 0.0;
        let mut reach = 0.0;
        for r in 0..runs {
            let rand_trace = read_trace(&dir.join("random"), &inst.name, r)?;
            let meme_trace = read_trace(&dir.join("meme"), &inst.name, r)?;
            rand_init += initial_best(&rand_trace, population_size) / runs as f64;
            meme_init += initial_best(&meme_trace, population_size) / runs as f64;
            let target = rand_trace.final_cost();
            let evals = meme_trace
                .evaluations_to_reach(target)
                .unwrap_or(max_evaluations);
            reach += evals as f64 / runs as f64;
        }
        println!(
            "{:<16} {:>12.1} {:>12.1} {:>14.1} {:>14.1} {:>12.0}",
            inst.name, random_stats[j].ave_cost, meme_stats[j].ave_cost, rand_init, meme_init, reach
        );
    }
    println!("\n(meme reach = mean evaluations for meme mode to match random mode's final cost; budget {})", max_evaluations);
    println!("outputs in {}", dir.display());
    Ok(())
}

fn read_trace(dir: &std::path::Path, instance: &str, run: usize) -> memevo::Result<ConvergenceTrace> {
    let text = std::fs::read_to_string(dir.join(format!("trace_{}_{}.csv", instance, run)))?;
    ConvergenceTrace::from_csv(&text)
}

/// Best cost among the initial population's evaluations.
fn initial_best(trace: &ConvergenceTrace, population_size: usize) -> f64 {
    trace
        .points
        .iter()
        .take_while(|(evals, _)| *evals <= population_size as u64)
        .last()
        .map(|(_, c)| *c)
        .unwrap_or(f64::INFINITY)
}
