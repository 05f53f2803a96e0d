//! Solve an instance, then learn a meme from the optimized solution and
//! inspect what it captured.
//!
//! Usage: `cargo run --release --example learn_meme -- <file> [evaluations]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use memevo::experiment::load_instance;
use memevo::instance::featurize;
use memevo::meme::{
    constraint_margin, extract_constraints, hsic_score, learn_meme, LearnParams, Meme,
};
use memevo::routing::{evolve, labels_of, EvolveParams};
use memevo::transfer::heuristic_population;

fn main() -> memevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "crates/memevo/data/cvrp/A-n32-k5.vrp".into());
    let max_evaluations: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(50_000);

    let instance = load_instance(std::path::Path::new(&path))?;
    let x = featurize(&instance, 2)?;

    let params = EvolveParams {
        max_evaluations,
        ..EvolveParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let population = heuristic_population(&instance, params.population_size, &mut rng)?;
    let (best, _) = evolve(&instance, &population, &params, &mut rng)?;
    println!("solved {}: cost {:.2}, {} routes", instance.name, best.total_cost, best.routes.len());

    let labels = labels_of(&best);
    let constraints = extract_constraints(&best);
    println!("extracted {} service-order constraints", constraints.len());

    let meme = learn_meme(
        &x,
        &labels,
        &constraints,
        &LearnParams::default(),
        &instance.name,
        instance.capacity,
    )?;
    let m = meme.matrix();
    println!("learned meme (trace {:.6}):", m.trace());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:9.5}", m[(r, c)])).collect();
        println!("  [{}]", row.join(", "));
    }

    let identity = Meme::identity(x.dim());
    let satisfied = |meme: &Meme| {
        constraints
            .iter()
            .filter(|t| constraint_margin(&x, meme, t) > 0.0)
            .count()
    };
    println!(
        "HSIC score: identity {:.2} -> learned {:.2}",
        hsic_score(&x, &identity, &labels),
        hsic_score(&x, &meme, &labels)
    );
    println!(
        "constraints satisfied: identity {}/{} -> learned {}/{}",
        satisfied(&identity),
        constraints.len(),
        satisfied(&meme),
        constraints.len()
    );
    Ok(())
}
