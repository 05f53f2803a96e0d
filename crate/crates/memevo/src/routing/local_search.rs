//! First-improvement local search over routes.

use crate::error::Result;
use crate::instance::ProblemKind;
use crate::routing::{Evaluator, Solution};

/// Improves a feasible solution by first-improvement sweeps of
/// single-insertion, swap and 2-opt moves (intra- and inter-route), until a
/// full sweep finds nothing better or the evaluation budget runs out.
///
/// Every candidate is costed through the evaluator, so each probe consumes
/// one evaluation. Candidates that would violate capacity are filtered out
/// by a load check before costing; feasibility is preserved.
pub fn local_search(
    solution: &Solution,
    evaluator: &mut Evaluator,
    max_evaluations: u64,
) -> Result<Solution> {
    let mut current = solution.clone();
    loop {
        if evaluator.count() >= max_evaluations {
            return Ok(current);
        }
        match first_improvement(&current, evaluator, max_evaluations)? {
            Some(better) => current = better,
            None => return Ok(current),
        }
    }
}

/// Scans the move neighborhood in a fixed order and returns the first strict
/// improvement, or None when the sweep completes without one.
fn first_improvement(
    current: &Solution,
    evaluator: &mut Evaluator,
    max_evaluations: u64,
) -> Result<Option<Solution>> {
    let carp = evaluator.instance.kind == ProblemKind::Carp;
    let capacity = evaluator.instance.capacity;
    let routes = &current.routes;

    let probe = |candidate: &mut Solution,
                     evaluator: &mut Evaluator|
     -> Result<Option<Solution>> {
        let cost = evaluator.evaluate(candidate)?;
        if candidate.feasible && cost < current.total_cost - 1e-9 {
            Ok(Some(candidate.clone()))
        } else {
            Ok(None)
        }
    };

    // Single insertion (relocate), trying both edge directions for CARP.
    for r1 in 0..routes.len() {
        for p1 in 0..routes[r1].len() {
            let task = routes[r1].task_ids[p1];
            let orig = routes[r1].orientations[p1];
            let demand = evaluator.instance.tasks[task].demand;
            let orients: &[bool] = if carp { &[false, true] } else { &[false] };
            for r2 in 0..routes.len() {
                if r2 != r1 && routes[r2].load + demand > capacity + 1e-9 {
                    continue;
                }
                let slots = if r2 == r1 {
                    routes[r2].len()
                } else {
                    routes[r2].len() + 1
                };
                for p2 in 0..slots {
                    for &rev in orients {
                        // Re-inserting in place with the same direction is a
                        // no-op; in place with the direction flipped is the
                        // CARP single-task orientation move.
                        if r2 == r1 && p2 == p1 && rev == orig {
                            continue;
                        }
                        if evaluator.count() >= max_evaluations {
                            return Ok(None);
                        }
                        let mut cand = current.clone();
                        let (t, _) = remove_at(&mut cand, r1, p1);
                        let target = if r2 > r1 && cand.routes.len() < routes.len() {
                            r2 - 1
                        } else {
                            r2
                        };
                        if target >= cand.routes.len() {
                            continue;
                        }
                        cand.routes[target].task_ids.insert(p2, t);
                        cand.routes[target].orientations.insert(p2, rev);
                        if let Some(better) = probe(&mut cand, evaluator)? {
                            return Ok(Some(better));
                        }
                    }
                }
            }
        }
    }

    // Pairwise swap; orientations travel with their tasks.
    for r1 in 0..routes.len() {
        for p1 in 0..routes[r1].len() {
            for r2 in r1..routes.len() {
                let start = if r2 == r1 { p1 + 1 } else { 0 };
                for p2 in start..routes[r2].len() {
                    let (d1, d2) = (
                        evaluator.instance.tasks[routes[r1].task_ids[p1]].demand,
                        evaluator.instance.tasks[routes[r2].task_ids[p2]].demand,
                    );
                    if r1 != r2
                        && (routes[r1].load - d1 + d2 > capacity + 1e-9
                            || routes[r2].load - d2 + d1 > capacity + 1e-9)
                    {
                        continue;
                    }
                    if evaluator.count() >= max_evaluations {
                        return Ok(None);
                    }
                    let mut cand = current.clone();
                    let t1 = cand.routes[r1].task_ids[p1];
                    let o1 = cand.routes[r1].orientations[p1];
                    let t2 = cand.routes[r2].task_ids[p2];
                    let o2 = cand.routes[r2].orientations[p2];
                    cand.routes[r1].task_ids[p1] = t2;
                    cand.routes[r1].orientations[p1] = o2;
                    cand.routes[r2].task_ids[p2] = t1;
                    cand.routes[r2].orientations[p2] = o1;
                    if let Some(better) = probe(&mut cand, evaluator)? {
                        return Ok(Some(better));
                    }
                }
            }
        }
    }

    // 2-opt inside a route: reverse a segment, flipping edge directions.
    for r in 0..routes.len() {
        let len = routes[r].len();
        for i in 0..len {
            for j in (i + 1)..len {
                if evaluator.count() >= max_evaluations {
                    return Ok(None);
                }
                let mut cand = current.clone();
                cand.routes[r].task_ids[i..=j].reverse();
                cand.routes[r].orientations[i..=j].reverse();
                if carp {
                    for o in &mut cand.routes[r].orientations[i..=j] {
                        *o = !*o;
                    }
                }
                if let Some(better) = probe(&mut cand, evaluator)? {
                    return Ok(Some(better));
                }
            }
        }
    }

    // 2-opt between routes: exchange route tails.
    for r1 in 0..routes.len() {
        for r2 in (r1 + 1)..routes.len() {
            for i in 0..=routes[r1].len() {
                for j in 0..=routes[r2].len() {
                    if i == routes[r1].len() && j == routes[r2].len() {
                        continue;
                    }
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let head1: f64 = prefix_load(evaluator, &routes[r1].task_ids[..i]);
                    let head2: f64 = prefix_load(evaluator, &routes[r2].task_ids[..j]);
                    let tail1 = routes[r1].load - head1;
                    let tail2 = routes[r2].load - head2;
                    if head1 + tail2 > capacity + 1e-9 || head2 + tail1 > capacity + 1e-9 {
                        continue;
                    }
                    if evaluator.count() >= max_evaluations {
                        return Ok(None);
                    }
                    let mut cand = current.clone();
                    let (a_ids, a_or) = (
                        cand.routes[r1].task_ids.split_off(i),
                        cand.routes[r1].orientations.split_off(i),
                    );
                    let (b_ids, b_or) = (
                        cand.routes[r2].task_ids.split_off(j),
                        cand.routes[r2].orientations.split_off(j),
                    );
                    cand.routes[r1].task_ids.extend(b_ids);
                    cand.routes[r1].orientations.extend(b_or);
                    cand.routes[r2].task_ids.extend(a_ids);
                    cand.routes[r2].orientations.extend(a_or);
                    cand.routes.retain(|r| !r.is_empty());
                    if let Some(better) = probe(&mut cand, evaluator)? {
                        return Ok(Some(better));
                    }
                }
            }
        }
    }

    Ok(None)
}

fn prefix_load(evaluator: &Evaluator, ids: &[usize]) -> f64 {
    ids.iter().map(|&t| evaluator.instance.tasks[t].demand).sum()
}

fn remove_at(solution: &mut Solution, r: usize, p: usize) -> (usize, bool) {
    let t = solution.routes[r].task_ids.remove(p);
    let o = solution.routes[r].orientations.remove(p);
    if solution.routes[r].is_empty() {
        solution.routes.remove(r);
    }
    (t, o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::tests::{line_cvrp, random_cvrp};
    use crate::routing::{split, Chromosome, Route};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn local_optimum_is_returned_unchanged() {
        // Four tasks on a line, one route in sorted order: no insertion,
        // swap or 2-opt move improves it.
        let inst = line_cvrp(4, 10.0);
        let sol = Solution::new(
            vec![Route::new(vec![0, 1, 2, 3], vec![false; 4], &inst)],
            &inst,
        )
        .unwrap();
        let mut ev = Evaluator::new(&inst);
        let improved = local_search(&sol, &mut ev, u64::MAX).unwrap();
        assert_eq!(improved.total_cost, sol.total_cost);
        assert_eq!(improved.routes, sol.routes);
    }

    #[test]
    fn crossing_legs_are_uncrossed() {
        let inst = line_cvrp(4, 10.0);
        // Visiting 2,0,1,3 (x = 3,1,2,4) zigzags; sorted order is optimal.
        let sol = Solution::new(
            vec![Route::new(vec![2, 0, 1, 3], vec![false; 4], &inst)],
            &inst,
        )
        .unwrap();
        let mut ev = Evaluator::new(&inst);
        let improved = local_search(&sol, &mut ev, u64::MAX).unwrap();
        assert!(improved.total_cost < sol.total_cost);
        assert_eq!(improved.total_cost, 8.0);
    }

    #[test]
    fn beats_the_best_of_random_restarts() {
        let inst = random_cvrp(10, 8.0, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ids: Vec<usize> = (0..10).collect();
        ids.shuffle(&mut rng);
        let start = split(
            &Chromosome {
                giant_tour: ids,
                orientations: vec![false; 10],
            },
            &inst,
        )
        .unwrap();
        let mut ev = Evaluator::new(&inst);
        let refined = local_search(&start, &mut ev, u64::MAX).unwrap();

        // Oracle: initial costs of 1000 random restarts, no search at all.
        let mut best_restart = f64::INFINITY;
        for _ in 0..1000 {
            let mut ids: Vec<usize> = (0..10).collect();
            ids.shuffle(&mut rng);
            let s = split(
                &Chromosome {
                    giant_tour: ids,
                    orientations: vec![false; 10],
                },
                &inst,
            )
            .unwrap();
            best_restart = best_restart.min(s.total_cost);
        }
        assert!(refined.total_cost <= best_restart + 1e-9);
    }

    #[test]
    fn carp_orientation_flip_is_reachable_in_one_move() {
        use crate::instance::{ProblemKind, RoutingInstance, Task, TaskSite};
        use nalgebra::DMatrix;
        // Route [t0, t1, t2] over edges (1,2), (3,4), (5,6). Every vertex
        // pair costs 50 except the legs of the intended tour, so the only
        // improving neighbor of the all-forward route is flipping t1 in
        // place: depot-1, 2-4, 3-5 and 6-depot are cheap, while the
        // forward legs 2-3 and 4-5 cost 10.
        let mut cost = DMatrix::from_element(7, 7, 50.0);
        for i in 0..7 {
            cost[(i, i)] = 0.0;
        }
        let mut set = |a: usize, b: usize, c: f64| {
            cost[(a, b)] = c;
            cost[(b, a)] = c;
        };
        set(0, 1, 1.0);
        set(2, 4, 1.0);
        set(3, 5, 1.0);
        set(6, 0, 1.0);
        set(2, 3, 10.0);
        set(4, 5, 10.0);
        let inst = RoutingInstance {
            kind: ProblemKind::Carp,
            name: "flip".into(),
            vertices: 7,
            depot: 0,
            tasks: (0..3)
                .map(|i| Task {
                    id: i,
                    site: TaskSite::Edge {
                        head: 2 * i + 1,
                        tail: 2 * i + 2,
                    },
                    demand: 1.0,
                    service_cost: 1.0,
                })
                .collect(),
            capacity: 3.0,
            fleet_size: 1,
            travel_cost: cost,
            lower_bound: None,
            coords: vec![],
        };
        let bad = Solution::new(
            vec![Route::new(vec![0, 1, 2], vec![false; 3], &inst)],
            &inst,
        )
        .unwrap();
        assert_eq!(bad.total_cost, 25.0); // 1 + 10 + 10 + 1 travel, 3 service
        let mut ev = Evaluator::new(&inst);
        let improved = local_search(&bad, &mut ev, u64::MAX).unwrap();
        assert_eq!(improved.total_cost, 7.0); // 1 + 1 + 1 + 1 travel, 3 service
        assert_eq!(improved.routes[0].task_ids, vec![0, 1, 2]);
        assert_eq!(improved.routes[0].orientations, vec![false, true, false]);
    }

    #[test]
    fn budget_limits_probing() {
        let inst = random_cvrp(10, 8.0, 33);
        let sol = split(
            &Chromosome {
                giant_tour: (0..10).collect(),
                orientations: vec![false; 10],
            },
            &inst,
        )
        .unwrap();
        let mut ev = Evaluator::new(&inst);
        let _ = local_search(&sol, &mut ev, 25).unwrap();
        assert!(ev.count() <= 25);
    }

    #[test]
    fn feasibility_and_coverage_are_preserved() {
        let inst = random_cvrp(12, 5.0, 77);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let mut ids: Vec<usize> = (0..12).collect();
            ids.shuffle(&mut rng);
            let start = split(
                &Chromosome {
                    giant_tour: ids,
                    orientations: vec![false; 12],
                },
                &inst,
            )
            .unwrap();
            let mut ev = Evaluator::new(&inst);
            let refined = local_search(&start, &mut ev, 4000).unwrap();
            assert!(refined.feasible);
            assert!(refined.covers_all_tasks(&inst));
            assert!(refined.total_cost <= start.total_cost + 1e-9);
        }
    }
}
