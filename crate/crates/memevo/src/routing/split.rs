//! Optimal splitting of a giant tour into capacity-feasible routes.

use crate::error::{Error, Result};
use crate::instance::RoutingInstance;
use crate::routing::{Chromosome, Route, Solution};

/// Partitions a giant tour into contiguous routes of minimum total cost.
///
/// Shortest path on the auxiliary DAG whose node `i` means "the first `i`
/// tour positions are routed" and whose arc `(i, j)` is a single route
/// serving positions `i..j` when its load fits the capacity. The returned
/// solution is optimal over all contiguous splits of this tour and feasible
/// whenever any feasible contiguous split exists; a single task exceeding
/// the capacity is an error.
pub fn split(tour: &Chromosome, instance: &RoutingInstance) -> Result<Solution> {
    let n = tour.giant_tour.len();
    if n == 0 {
        return Solution::new(vec![], instance);
    }
    for (&t, _) in tour.giant_tour.iter().zip(&tour.orientations) {
        let task = instance.tasks.get(t).ok_or(Error::UnknownTask(t))?;
        if task.demand > instance.capacity {
            return Err(Error::TaskExceedsCapacity {
                task: t,
                demand: task.demand,
                capacity: instance.capacity,
            });
        }
    }

    let depot = instance.depot;
    let mut best = vec![f64::INFINITY; n + 1];
    let mut pred = vec![0usize; n + 1];
    best[0] = 0.0;

    for i in 0..n {
        if !best[i].is_finite() {
            continue;
        }
        let mut load = 0.0;
        let mut route_cost = 0.0;
        let mut exit_vertex = depot;
        for j in i..n {
            let t = tour.giant_tour[j];
            let rev = tour.orientations[j];
            let task = &instance.tasks[t];
            load += task.demand;
            if load > instance.capacity + 1e-9 {
                break;
            }
            route_cost += instance.distance(exit_vertex, task.entry(rev)) + task.service_cost;
            exit_vertex = task.exit(rev);
            let total = best[i] + route_cost + instance.distance(exit_vertex, depot);
            if total < best[j + 1] {
                best[j + 1] = total;
                pred[j + 1] = i;
            }
        }
    }

    // Every prefix is reachable because single-task routes always fit.
    let mut cuts = Vec::new();
    let mut pos = n;
    while pos > 0 {
        let start = pred[pos];
        cuts.push((start, pos));
        pos = start;
    }
    cuts.reverse();

    let routes: Vec<Route> = cuts
        .into_iter()
        .map(|(a, b)| {
            Route::new(
                tour.giant_tour[a..b].to_vec(),
                tour.orientations[a..b].to_vec(),
                instance,
            )
        })
        .collect();
    // The DP already costed every leg; assembling the solution directly
    // keeps construction out of the fitness-evaluation accounting.
    Ok(Solution {
        routes,
        total_cost: best[n],
        feasible: true,
    })
}

#[cfg(test)]
pub(crate) fn brute_force_split(tour: &Chromosome, instance: &RoutingInstance) -> Option<f64> {
    // Enumerates all 2^(n-1) contiguous partitions, skipping overloaded routes.
    let n = tour.giant_tour.len();
    if n == 0 {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << (n - 1)) {
        let mut cost = 0.0;
        let mut load = 0.0;
        let mut feasible = true;
        let mut entry = instance.depot;
        for pos in 0..n {
            let t = tour.giant_tour[pos];
            let rev = tour.orientations[pos];
            let task = &instance.tasks[t];
            load += task.demand;
            if load > instance.capacity + 1e-9 {
                feasible = false;
                break;
            }
            cost += instance.distance(entry, task.entry(rev)) + task.service_cost;
            entry = task.exit(rev);
            let route_ends = pos == n - 1 || mask & (1 << pos) != 0;
            if route_ends {
                cost += instance.distance(entry, instance.depot);
                entry = instance.depot;
                load = 0.0;
            }
        }
        if feasible && best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::tests::{line_cvrp, random_cvrp};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn chromosome(ids: Vec<usize>) -> Chromosome {
        let n = ids.len();
        Chromosome {
            giant_tour: ids,
            orientations: vec![false; n],
        }
    }

    #[test]
    fn single_task_yields_one_route() {
        let inst = line_cvrp(1, 5.0);
        let sol = split(&chromosome(vec![0]), &inst).unwrap();
        assert_eq!(sol.routes.len(), 1);
        assert!(sol.feasible);
    }

    #[test]
    fn oversized_task_is_an_infeasibility_error() {
        let mut inst = line_cvrp(2, 5.0);
        inst.tasks[1].demand = 9.0;
        assert!(matches!(
            split(&chromosome(vec![0, 1]), &inst),
            Err(Error::TaskExceedsCapacity { task: 1, .. })
        ));
    }

    #[test]
    fn three_task_split_matches_enumeration() {
        // Demands 4 each, capacity 12: the single combined route is allowed;
        // enumeration decides whether it is actually cheapest.
        let mut inst = random_cvrp(3, 12.0, 9);
        for t in &mut inst.tasks {
            t.demand = 4.0;
        }
        let tour = chromosome(vec![0, 1, 2]);
        let sol = split(&tour, &inst).unwrap();
        let oracle = brute_force_split(&tour, &inst).unwrap();
        assert!((sol.total_cost - oracle).abs() < 1e-9);
    }

    #[test]
    fn six_task_split_matches_brute_force() {
        let inst = random_cvrp(6, 5.0, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mut ids: Vec<usize> = (0..6).collect();
            ids.shuffle(&mut rng);
            let tour = chromosome(ids);
            let sol = split(&tour, &inst).unwrap();
            let oracle = brute_force_split(&tour, &inst).unwrap();
            assert!((sol.total_cost - oracle).abs() < 1e-9);
            assert!(sol.feasible);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // The split must match full enumeration on every feasible tour.
            #[test]
            fn split_is_optimal_over_contiguous_partitions(
                seed in 0..10_000u64,
                n in 1..9usize
            ) {
                let inst = random_cvrp(n, 6.0, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
                let mut ids: Vec<usize> = (0..n).collect();
                ids.shuffle(&mut rng);
                let tour = chromosome(ids);
                let sol = split(&tour, &inst).unwrap();
                let oracle = brute_force_split(&tour, &inst).unwrap();
                prop_assert!((sol.total_cost - oracle).abs() < 1e-9);
                prop_assert!(sol.covers_all_tasks(&inst));
            }
        }
    }

    #[test]
    fn split_preserves_tour_order_and_coverage() {
        let inst = random_cvrp(9, 6.0, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ids: Vec<usize> = (0..9).collect();
        ids.shuffle(&mut rng);
        let sol = split(&chromosome(ids.clone()), &inst).unwrap();
        let flat: Vec<usize> = sol
            .routes
            .iter()
            .flat_map(|r| r.task_ids.iter().copied())
            .collect();
        assert_eq!(flat, ids);
        assert!(sol.covers_all_tasks(&inst));
    }
}
