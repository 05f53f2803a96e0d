//! The instance-sequence runner.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiment::{write_stats_csv, ExperimentConfig, Mode, RunStatistics};
use crate::instance::{featurize, parse_carp, parse_cvrp, RoutingInstance, TaskFeatureMatrix};
use crate::meme::{extract_constraints, learn_meme, LearnParams};
use crate::routing::{evolve, labels_of, ConvergenceTrace, EvolveParams, Solution};
use crate::transfer::{
    build_population, heuristic_population, random_population, SimilarityParams, SocietyOfMemes,
};

/// Loads an instance file, sniffing CVRP versus CARP from its keywords.
pub fn load_instance(path: &Path) -> Result<RoutingInstance> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::parse(
            path.display().to_string(),
            format!("cannot read instance file: {}", e),
        )
    })?;
    if text.contains("LIST_REQ_EDGES") {
        parse_carp(&text)
    } else {
        parse_cvrp(&text)
    }
}

/// Stable seed mixing: run `r` of instance `j` always sees the same stream
/// regardless of thread scheduling, and paired modes share per-run seeds.
pub fn mix_seed(seed: u64, instance_index: u64, run_index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ instance_index) ^ (run_index.rotate_left(17)))
}

/// Instance names come from untrusted files; keep them path-safe when used
/// as trace file stems.
fn sanitize_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "unnamed".into()
    } else {
        cleaned
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct RunOutcome {
    best: Solution,
    trace: ConvergenceTrace,
    seconds: f64,
}

/// Executes one independent run.
fn single_run(
    instance: &RoutingInstance,
    x: &TaskFeatureMatrix,
    pool: &SocietyOfMemes,
    mode: Mode,
    params: &EvolveParams,
    seed: u64,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = params.population_size;
    let population = match mode {
        Mode::Meme => build_population(
            instance,
            x,
            pool,
            size,
            &SimilarityParams::default(),
            &mut rng,
        )?,
        Mode::Random => random_population(instance, size, &mut rng)?,
        Mode::Heuristic => heuristic_population(instance, size, &mut rng)?,
    };
    let (best, trace) = evolve(instance, &population, params, &mut rng)?;
    Ok(RunOutcome {
        best,
        trace,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs the configured instance sequence.
///
/// For each instance in order: load the pool, build initial populations per
/// the mode, run `runs_per_instance` independent solver runs (in parallel up
/// to `jobs`), write one trace CSV per run and a `stats.csv` row. In meme
/// mode the best run's solution is then distilled into a meme and appended
/// to the pool file, so later instances see everything learned before them.
/// With an empty pool, meme mode runs are identical to heuristic mode runs
/// under equal seeds.
pub fn run_sequence(config: &ExperimentConfig) -> Result<Vec<RunStatistics>> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let evolve_params = EvolveParams {
        population_size: config.population_size,
        p_local_search: config.p_local_search,
        max_evaluations: config.max_evaluations,
    };

    let thread_pool = match config.jobs {
        Some(jobs) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {}", e)))?,
        ),
        None => None,
    };

    let mut all_stats = Vec::with_capacity(config.instance_paths.len());
    for (j, path) in config.instance_paths.iter().enumerate() {
        let instance = load_instance(path)?;
        let x = featurize(&instance, config.feature_dim)?;
        let pool = if config.mode == Mode::Meme {
            SocietyOfMemes::load(&config.pool_path)?
        } else {
            SocietyOfMemes::new()
        };

        let seeds: Vec<u64> = (0..config.runs_per_instance)
            .map(|r| mix_seed(config.seed, j as u64, r as u64))
            .collect();
        let run_one = |&seed: &u64| -> Result<RunOutcome> {
            single_run(&instance, &x, &pool, config.mode, &evolve_params, seed)
        };
        let outcomes: Vec<RunOutcome> = {
            use rayon::prelude::*;
            match &thread_pool {
                Some(tp) => tp.install(|| seeds.par_iter().map(run_one).collect::<Result<_>>())?,
                None => seeds.par_iter().map(run_one).collect::<Result<_>>()?,
            }
        };

        let file_stem = sanitize_name(&instance.name);
        for (r, outcome) in outcomes.iter().enumerate() {
            let trace_path = config
                .output_dir
                .join(format!("trace_{}_{}.csv", file_stem, r));
            fs::write(trace_path, outcome.trace.to_csv())?;
        }

        let costs: Vec<f64> = outcomes.iter().map(|o| o.best.total_cost).collect();
        let evals: Vec<u64> = outcomes.iter().map(|o| o.trace.total_evaluations).collect();
        let seconds: Vec<f64> = outcomes.iter().map(|o| o.seconds).collect();
        let threshold = config
            .success_thresholds
            .as_ref()
            .map(|t| t[j]);
        all_stats.push(RunStatistics::from_runs(
            &instance.name,
            config.mode,
            &costs,
            &evals,
            &seconds,
            threshold,
        ));

        if config.mode == Mode::Meme {
            let best_run = outcomes
                .iter()
                .min_by(|a, b| a.best.total_cost.total_cmp(&b.best.total_cost))
                .expect("at least one run");
            let labels = labels_of(&best_run.best);
            let constraints = extract_constraints(&best_run.best);
            let meme = learn_meme(
                &x,
                &labels,
                &constraints,
                &LearnParams::default(),
                &instance.name,
                instance.capacity,
            )?;
            SocietyOfMemes::append_to_file(&config.pool_path, meme)?;
        }
    }

    write_stats_csv(&config.output_dir, &all_stats)?;
    Ok(all_stats)
}
