//! Meme imitation: biased initial solutions from transformed task features.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::instance::{ProblemKind, RoutingInstance, TaskFeatureMatrix};
use crate::meme::{factorize, Meme};
use crate::routing::{split, Chromosome, Route, Solution};
use crate::transfer::{kmeans, select_memes, SimilarityParams, SocietyOfMemes};

/// Maps task features into meme space: `X' = L^T X` with `L L^T = M_t`.
pub fn transform(x: &TaskFeatureMatrix, meme: &Meme) -> Result<TaskFeatureMatrix> {
    let l = factorize(meme);
    TaskFeatureMatrix::new(l.transpose() * x.matrix())
}

/// Orders cluster members by pairwise distance sorting.
///
/// The two members with the largest pairwise distance become the route
/// endpoints; the smaller task id of that pair is the reference and leads,
/// the other necessarily trails. Everything between is sorted by ascending
/// distance to the reference. Ties break toward smaller task ids, and among
/// equal-distance endpoint pairs the lexicographically smallest pair wins.
pub fn pds_order(x: &TaskFeatureMatrix, members: &[usize]) -> Vec<usize> {
    assert!(!members.is_empty(), "pds_order needs at least one member");
    if members.len() == 1 {
        return members.to_vec();
    }
    let mut best_pair = (members[0].min(members[1]), members[0].max(members[1]));
    let mut best_dist = x.distance(best_pair.0, best_pair.1);
    for (idx, &a) in members.iter().enumerate() {
        for &b in &members[idx + 1..] {
            let pair = (a.min(b), a.max(b));
            let d = x.distance(pair.0, pair.1);
            if d > best_dist || (d == best_dist && pair < best_pair) {
                best_dist = d;
                best_pair = pair;
            }
        }
    }
    let (reference, last) = best_pair;
    let mut middle: Vec<usize> = members
        .iter()
        .copied()
        .filter(|&t| t != reference && t != last)
        .collect();
    middle.sort_by(|&a, &b| {
        x.distance(reference, a)
            .total_cmp(&x.distance(reference, b))
            .then(a.cmp(&b))
    });
    let mut order = Vec::with_capacity(members.len());
    order.push(reference);
    order.extend(middle);
    order.push(last);
    order
}

/// Builds one meme-biased solution: k-means task assignment on the
/// transformed features, capacity repair, pairwise-distance service orders,
/// greedy edge directions for CARP.
///
/// The output always covers every task exactly once; it may be capacity
/// infeasible when repair finds no receiving cluster, in which case the
/// solver ranks it by penalized cost.
pub fn imitate(
    instance: &RoutingInstance,
    x_transformed: &TaskFeatureMatrix,
    seed: u64,
) -> Result<Solution> {
    let n = instance.task_count();
    let k = instance.fleet_size.clamp(1, n);
    let mut clusters = to_clusters(&kmeans(x_transformed, k, seed), k);
    repair_capacity(instance, x_transformed, &mut clusters);

    let mut routes = Vec::new();
    for members in clusters.iter().filter(|c| !c.is_empty()) {
        let order = pds_order(x_transformed, members);
        let orientations = greedy_orientations(instance, &order);
        routes.push(Route::new(order, orientations, instance));
    }
    Solution::new(routes, instance)
}

/// Builds the initial population for a new instance.
///
/// With an empty pool this falls back to the baseline scheme: one
/// nearest-neighbor greedy tour plus random permutations, all split
/// optimally. Otherwise memes are selected and blended once, and each
/// population slot is imitated with its own k-means seed.
pub fn build_population(
    instance: &RoutingInstance,
    x: &TaskFeatureMatrix,
    som: &SocietyOfMemes,
    size: usize,
    params: &SimilarityParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Solution>> {
    if som.is_empty() {
        return heuristic_population(instance, size, rng);
    }
    let (_, meme) = select_memes(
        som,
        x,
        instance.capacity,
        instance.fleet_size,
        params,
        rng.gen(),
    )?;
    let transformed = transform(x, &meme)?;
    (0..size)
        .map(|_| imitate(instance, &transformed, rng.gen()))
        .collect()
}

/// Baseline initialization: a nearest-neighbor greedy tour, then random
/// permutations, all through the optimal split.
pub fn heuristic_population(
    instance: &RoutingInstance,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Solution>> {
    let mut population = Vec::with_capacity(size);
    population.push(split(&nearest_neighbor_tour(instance), instance)?);
    while population.len() < size {
        population.push(split(&random_chromosome(instance, rng), instance)?);
    }
    population.truncate(size);
    Ok(population)
}

/// Purely random initialization: random permutations through the split.
pub fn random_population(
    instance: &RoutingInstance,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Solution>> {
    (0..size)
        .map(|_| split(&random_chromosome(instance, rng), instance))
        .collect()
}

fn random_chromosome(instance: &RoutingInstance, rng: &mut ChaCha8Rng) -> Chromosome {
    let n = instance.task_count();
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let orientations = if instance.kind == ProblemKind::Carp {
        (0..n).map(|_| rng.gen_bool(0.5)).collect()
    } else {
        vec![false; n]
    };
    Chromosome {
        giant_tour: ids,
        orientations,
    }
}

/// Greedy giant tour: repeatedly serve the unvisited task whose entry point
/// is nearest, choosing the nearer edge direction for CARP.
fn nearest_neighbor_tour(instance: &RoutingInstance) -> Chromosome {
    let n = instance.task_count();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut orientations = Vec::with_capacity(n);
    let mut position = instance.depot;
    for _ in 0..n {
        let mut best: Option<(f64, usize, bool)> = None;
        for (t, task) in instance.tasks.iter().enumerate() {
            if visited[t] {
                continue;
            }
            for rev in [false, true] {
                let d = instance.distance(position, task.entry(rev));
                if best.is_none_or(|(bd, bt, _)| d < bd || (d == bd && t < bt)) {
                    best = Some((d, t, rev));
                }
                if instance.kind == ProblemKind::Cvrp {
                    break;
                }
            }
        }
        let (_, t, rev) = best.expect("unvisited task exists");
        visited[t] = true;
        tour.push(t);
        orientations.push(rev);
        position = instance.tasks[t].exit(rev);
    }
    Chromosome {
        giant_tour: tour,
        orientations,
    }
}

fn to_clusters(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); k];
    for (task, &c) in assignment.iter().enumerate() {
        clusters[c].push(task);
    }
    clusters
}

/// While some cluster is overloaded, moves its member farthest from the
/// cluster centroid to the nearest centroid with enough residual capacity.
/// Stops (leaving the overload in place) as soon as no cluster can accept
/// the chosen task. Centroids are the initial cluster means and stay fixed.
fn repair_capacity(
    instance: &RoutingInstance,
    x: &TaskFeatureMatrix,
    clusters: &mut [Vec<usize>],
) {
    let p = x.dim();
    let centroids: Vec<Vec<f64>> = clusters
        .iter()
        .map(|members| {
            let mut mean = vec![0.0; p];
            for &t in members {
                for (m, v) in mean.iter_mut().zip(x.column(t)) {
                    *m += v;
                }
            }
            let count = members.len().max(1) as f64;
            mean.iter_mut().for_each(|m| *m /= count);
            mean
        })
        .collect();
    let mut loads: Vec<f64> = clusters
        .iter()
        .map(|members| members.iter().map(|&t| instance.tasks[t].demand).sum())
        .collect();

    loop {
        let Some(over) = loads
            .iter()
            .position(|&l| l > instance.capacity + 1e-9)
            .filter(|&c| !clusters[c].is_empty())
        else {
            return;
        };
        let (pos, &task) = clusters[over]
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                sq_dist(&x.column(a), &centroids[over])
                    .total_cmp(&sq_dist(&x.column(b), &centroids[over]))
                    .then(b.cmp(&a))
            })
            .expect("nonempty overloaded cluster");
        let demand = instance.tasks[task].demand;
        let target = (0..clusters.len())
            .filter(|&c| c != over && loads[c] + demand <= instance.capacity + 1e-9)
            .min_by(|&a, &b| {
                sq_dist(&x.column(task), &centroids[a])
                    .total_cmp(&sq_dist(&x.column(task), &centroids[b]))
                    .then(a.cmp(&b))
            });
        let Some(target) = target else {
            return; // nobody can take it: leave the solution infeasible
        };
        clusters[over].remove(pos);
        clusters[target].push(task);
        loads[over] -= demand;
        loads[target] += demand;
    }
}

/// Chooses, for each consecutive leg, the edge direction that minimizes the
/// connecting deadhead. CVRP routes keep all-false flags.
fn greedy_orientations(instance: &RoutingInstance, order: &[usize]) -> Vec<bool> {
    if instance.kind == ProblemKind::Cvrp {
        return vec![false; order.len()];
    }
    let mut orientations = Vec::with_capacity(order.len());
    let mut position = instance.depot;
    for &t in order {
        let task = &instance.tasks[t];
        let fwd = instance.distance(position, task.entry(false));
        let rev = instance.distance(position, task.entry(true));
        let reversed = rev < fwd;
        orientations.push(reversed);
        position = task.exit(reversed);
    }
    orientations
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
