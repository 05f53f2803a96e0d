//! Inspect a meme pool file and preview how its memes would be weighted for
//! a query instance.
//!
//! Usage: `cargo run --example inspect_pool -- <pool.json> [instance_file]`

use std::path::Path;

use memevo::experiment::load_instance;
use memevo::instance::featurize;
use memevo::transfer::{select_memes, similarities, SimilarityParams, SocietyOfMemes};

fn main() -> memevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let pool_path = args.next().unwrap_or_else(|| "pool.json".into());
    let pool = SocietyOfMemes::load(Path::new(&pool_path))?;
    println!("pool {}: {} memes", pool_path, pool.len());
    for meme in pool.memes() {
        let m = meme.matrix();
        let eig = m.clone().symmetric_eigen();
        let mut spectrum: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        println!(
            "  {:<24} capacity {:>8.1}  mean ({:>8.2}, {:>8.2})  spectrum {:?}",
            meme.source_name,
            meme.source_capacity,
            meme.source_task_mean[0],
            meme.source_task_mean.get(1).copied().unwrap_or(0.0),
            spectrum
                .iter()
                .map(|l| (l * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }

    let Some(instance_path) = args.next() else {
        return Ok(());
    };
    let instance = load_instance(Path::new(&instance_path))?;
    let x = featurize(&instance, pool.memes().first().map_or(2, |m| m.dim()))?;
    let params = SimilarityParams::default();
    let sims = similarities(&pool, &x, instance.capacity, &params);
    let (weights, blended) = select_memes(
        &pool,
        &x,
        instance.capacity,
        instance.fleet_size,
        &params,
        42,
    )?;
    println!("\nselection against {}:", instance.name);
    for (i, meme) in pool.memes().iter().enumerate() {
        println!(
            "  {:<24} similarity {:>9.4}  weight {:>8.5}",
            meme.source_name, sims[i], weights.mu[i]
        );
    }
    println!("blended meme trace: {:.6}", blended.matrix().trace());
    Ok(())
}
