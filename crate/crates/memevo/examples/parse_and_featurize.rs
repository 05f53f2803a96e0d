//! Parse a benchmark file and inspect its task feature matrix.
//!
//! Usage: `cargo run --example parse_and_featurize -- <file> [dim]`

use memevo::experiment::load_instance;
use memevo::instance::featurize;

fn main() -> memevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "crates/memevo/data/carp/E1A.dat".into());
    let dim: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);

    let instance = load_instance(std::path::Path::new(&path))?;
    println!(
        "{}: kind {:?}, {} vertices, {} tasks, capacity {}, fleet {}, lower bound {:?}",
        instance.name,
        instance.kind,
        instance.vertices,
        instance.task_count(),
        instance.capacity,
        instance.fleet_size,
        instance.lower_bound
    );

    let x = featurize(&instance, dim)?;
    println!("feature matrix: {} x {}", x.dim(), x.len());
    for i in 0..x.len().min(5) {
        println!("task {:3}: {:?}", i, x.column(i));
    }

    // How faithfully do embedded distances mirror the task distances?
    let n = x.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((instance.task_distance(i, j), x.distance(i, j)));
        }
    }
    println!("distance correlation: {:.4}", pearson(&pairs));
    Ok(())
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in pairs {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}
