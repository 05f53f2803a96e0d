//! Solve a single benchmark instance with the memetic solver.
//!
//! Usage: `cargo run --release --example solve_instance -- <file> [evaluations] [runs] [seed]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use memevo::experiment::{load_instance, mix_seed};
use memevo::routing::{evolve, EvolveParams};
use memevo::transfer::heuristic_population;

fn main() -> memevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "crates/memevo/data/cvrp/A-n32-k5.vrp".into());
    let max_evaluations: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let runs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    let instance = load_instance(std::path::Path::new(&path))?;
    println!(
        "{}: {} tasks, capacity {}, fleet {}, lower bound {:?}",
        instance.name,
        instance.task_count(),
        instance.capacity,
        instance.fleet_size,
        instance.lower_bound
    );

    let params = EvolveParams {
        max_evaluations,
        ..EvolveParams::default()
    };
    let mut best_overall = f64::INFINITY;
    for r in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0, r as u64));
        let population = heuristic_population(&instance, params.population_size, &mut rng)?;
        let (best, trace) = evolve(&instance, &population, &params, &mut rng)?;
        best_overall = best_overall.min(best.total_cost);
        println!(
            "run {:2}: best {:10.2} feasible {} routes {:2} evaluations {}",
            r,
            best.total_cost,
            best.feasible,
            best.routes.len(),
            trace.total_evaluations
        );
    }
    println!("best of {} runs: {}", runs, best_overall);
    if let Some(lb) = instance.lower_bound {
        println!("gap to published optimum: {:.2}%", 100.0 * (best_overall - lb) / lb);
    }
    Ok(())
}
