//! Generational memetic evolutionary solver on the giant-tour encoding.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::instance::RoutingInstance;
use crate::routing::{
    local_search, split, Chromosome, ConvergenceTrace, Evaluator, Solution,
};

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct EvolveParams {
    pub population_size: usize,
    /// Probability of refining an offspring with local search.
    pub p_local_search: f64,
    /// Fitness evaluation budget for the whole run.
    pub max_evaluations: u64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            population_size: 30,
            p_local_search: 0.2,
            max_evaluations: 100_000,
        }
    }
}

struct Individual {
    chromosome: Chromosome,
    solution: Solution,
    fitness: f64,
}

/// Runs the memetic EA from the given initial population.
///
/// Each generation breeds `population_size` offspring by binary-tournament
/// parent selection and order crossover on giant tours, splits each child
/// tour optimally, refines it with probability `p_local_search`, discards
/// offspring whose cost duplicates a current population member, and keeps
/// the best `population_size` of parents and offspring. Stops once the
/// evaluation budget is spent. Returns the best solution ever evaluated and
/// its improvement trace.
pub fn evolve(
    instance: &RoutingInstance,
    init_population: &[Solution],
    params: &EvolveParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Solution, ConvergenceTrace)> {
    assert!(!init_population.is_empty(), "population must be nonempty");
    let mut evaluator = Evaluator::new(instance);

    let mut population: Vec<Individual> = Vec::with_capacity(init_population.len());
    for sol in init_population {
        let mut solution = sol.clone();
        evaluator.evaluate(&mut solution)?;
        let fitness = evaluator.fitness(&solution);
        population.push(Individual {
            chromosome: Chromosome::from_solution(&solution),
            solution,
            fitness,
        });
    }
    population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));

    while evaluator.count() < params.max_evaluations {
        let mut offspring: Vec<Individual> = Vec::new();
        for _ in 0..params.population_size {
            if evaluator.count() >= params.max_evaluations {
                break;
            }
            let a = tournament(&population, rng);
            let b = tournament(&population, rng);
            let child_tour = order_crossover(
                &population[a].chromosome,
                &population[b].chromosome,
                rng,
            );
            let refine = rng.gen_bool(params.p_local_search);

            let mut child = split(&child_tour, instance)?;
            evaluator.evaluate(&mut child)?;
            if refine {
                child = local_search(&child, &mut evaluator, params.max_evaluations)?;
            }

            let cost = child.total_cost;
            let duplicate = population
                .iter()
                .map(|ind| ind.solution.total_cost)
                .chain(offspring.iter().map(|ind| ind.solution.total_cost))
                .any(|c| (c - cost).abs() < 1e-9);
            if duplicate {
                continue;
            }
            let fitness = evaluator.fitness(&child);
            offspring.push(Individual {
                chromosome: Chromosome::from_solution(&child),
                solution: child,
                fitness,
            });
        }

        // Elitist replacement: best of parents and offspring survive.
        population.extend(offspring);
        population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        population.truncate(params.population_size.max(1));
    }

    let (best, trace) = evaluator.into_best_and_trace();
    Ok((best.expect("at least one evaluation happened"), trace))
}

fn tournament(population: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..population.len());
    let b = rng.gen_range(0..population.len());
    if population[a].fitness <= population[b].fitness {
        a
    } else {
        b
    }
}

/// Order crossover (OX): copy a parent-1 segment, fill the rest in parent-2
/// order. Direction flags travel with the parent that contributed the task.
fn order_crossover(p1: &Chromosome, p2: &Chromosome, rng: &mut ChaCha8Rng) -> Chromosome {
    let n = p1.giant_tour.len();
    if n < 2 {
        return p1.clone();
    }
    let mut cut1 = rng.gen_range(0..n);
    let mut cut2 = rng.gen_range(0..n);
    if cut1 > cut2 {
        std::mem::swap(&mut cut1, &mut cut2);
    }

    let mut child_ids = vec![usize::MAX; n];
    let mut child_orients = vec![false; n];
    let mut in_segment = vec![false; n];
    for pos in cut1..=cut2 {
        let t = p1.giant_tour[pos];
        child_ids[pos] = t;
        child_orients[pos] = p1.orientations[pos];
        in_segment[t] = true;
    }
    let mut fill = (cut2 + 1) % n;
    for offset in 0..n {
        let pos = (cut2 + 1 + offset) % n;
        let t = p2.giant_tour[pos];
        if in_segment[t] {
            continue;
        }
        child_ids[fill] = t;
        child_orients[fill] = p2.orientations[pos];
        fill = (fill + 1) % n;
    }
    Chromosome {
        giant_tour: child_ids,
        orientations: child_orients,
    }
}
