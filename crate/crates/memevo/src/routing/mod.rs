//! Solutions, cost evaluation and the baseline memetic solver.

mod evolve;
mod local_search;
mod split;

pub use evolve::{evolve, EvolveParams};
pub use local_search::local_search;
pub use split::split;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::RoutingInstance;

/// One vehicle's ordered task list. Routes implicitly start and end at the
/// depot. `orientations[i]` reverses the traversal direction of the i-th
/// task's edge (CARP only; always false for CVRP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub task_ids: Vec<usize>,
    pub orientations: Vec<bool>,
    pub load: f64,
}

impl Route {
    pub fn new(task_ids: Vec<usize>, orientations: Vec<bool>, instance: &RoutingInstance) -> Self {
        let load = task_ids.iter().map(|&t| instance.tasks[t].demand).sum();
        Route {
            task_ids,
            orientations,
            load,
        }
    }

    pub fn len(&self) -> usize {
        self.task_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.task_ids.is_empty()
    }
}

/// A complete routing solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub total_cost: f64,
    pub feasible: bool,
}

impl Solution {
    /// Builds a solution from routes, computing cost and feasibility.
    pub fn new(routes: Vec<Route>, instance: &RoutingInstance) -> Result<Solution> {
        let mut sol = Solution {
            routes,
            total_cost: 0.0,
            feasible: false,
        };
        sol.refresh(instance)?;
        Ok(sol)
    }

    /// Recomputes cost, loads and the feasibility flag in place.
    pub fn refresh(&mut self, instance: &RoutingInstance) -> Result<()> {
        for r in &mut self.routes {
            r.load = r.task_ids.iter().map(|&t| instance.tasks[t].demand).sum();
        }
        self.total_cost = cost_of(self, instance)?;
        self.feasible = self
            .routes
            .iter()
            .all(|r| r.load <= instance.capacity + 1e-9);
        Ok(())
    }

    /// Total capacity excess over all routes; zero when feasible.
    pub fn capacity_excess(&self, capacity: f64) -> f64 {
        self.routes
            .iter()
            .map(|r| (r.load - capacity).max(0.0))
            .sum()
    }

    pub fn task_count(&self) -> usize {
        self.routes.iter().map(|r| r.len()).sum()
    }

    /// Checks that every instance task appears in exactly one route once.
    pub fn covers_all_tasks(&self, instance: &RoutingInstance) -> bool {
        let n = instance.task_count();
        let mut seen = vec![false; n];
        for r in &self.routes {
            for &t in &r.task_ids {
                if t >= n || seen[t] {
                    return false;
                }
                seen[t] = true;
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// Giant-tour encoding: one permutation of all task ids plus per-task
/// direction flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub giant_tour: Vec<usize>,
    pub orientations: Vec<bool>,
}

impl Chromosome {
    /// Flattens a solution's routes into a giant tour.
    pub fn from_solution(solution: &Solution) -> Chromosome {
        let mut giant_tour = Vec::with_capacity(solution.task_count());
        let mut orientations = Vec::with_capacity(solution.task_count());
        for r in &solution.routes {
            giant_tour.extend_from_slice(&r.task_ids);
            orientations.extend_from_slice(&r.orientations);
        }
        Chromosome {
            giant_tour,
            orientations,
        }
    }

    pub fn is_permutation(&self, n: usize) -> bool {
        if self.giant_tour.len() != n || self.orientations.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &t in &self.giant_tour {
            if t >= n || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        true
    }
}

/// Route co-membership labels: `+1` when two tasks share a route, `-1`
/// otherwise, `+1` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    data: DMatrix<f64>,
}

impl LabelMatrix {
    /// Builds labels from a cluster/route index per task.
    pub fn from_assignment(assignment: &[usize]) -> LabelMatrix {
        let n = assignment.len();
        let data = DMatrix::from_fn(n, n, |i, j| {
            if assignment[i] == assignment[j] {
                1.0
            } else {
                -1.0
            }
        });
        LabelMatrix { data }
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }
}

/// Route co-membership labels of a solution.
pub fn labels_of(solution: &Solution) -> LabelMatrix {
    let n = solution.task_count();
    let mut assignment = vec![0usize; n];
    for (route_idx, r) in solution.routes.iter().enumerate() {
        for &t in &r.task_ids {
            assignment[t] = route_idx;
        }
    }
    LabelMatrix::from_assignment(&assignment)
}

/// Cost of a complete solution.
///
/// Each route is costed as depot-to-first travel, inter-task travel, and
/// last-to-depot travel, plus the service cost of every task. For CVRP the
/// service costs are zero and entry and exit coincide with the customer
/// vertex; for CARP travel legs are shortest-path deadheads between the
/// oriented edge endpoints.
pub fn cost_of(solution: &Solution, instance: &RoutingInstance) -> Result<f64> {
    #[cfg(test)]
    tests::COST_OF_CALLS.with(|c| c.set(c.get() + 1));
    let n = instance.task_count();
    let mut total = 0.0;
    for route in &solution.routes {
        if route.is_empty() {
            continue;
        }
        let mut position = instance.depot;
        for (&t, &rev) in route.task_ids.iter().zip(&route.orientations) {
            let task = instance.tasks.get(t).ok_or(Error::UnknownTask(t))?;
            if t >= n {
                return Err(Error::UnknownTask(t));
            }
            total += instance.distance(position, task.entry(rev));
            total += task.service_cost;
            position = task.exit(rev);
        }
        total += instance.distance(position, instance.depot);
    }
    Ok(total)
}

/// Counting cost evaluator.
///
/// Every call to [`Evaluator::evaluate`] is one fitness evaluation; the
/// running count, the best solution seen and its improvement trace live here
/// so the solver and local search share one budget.
pub struct Evaluator<'a> {
    pub instance: &'a RoutingInstance,
    count: u64,
    penalty_weight: f64,
    best: Option<Solution>,
    best_fitness: f64,
    trace: ConvergenceTrace,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a RoutingInstance) -> Evaluator<'a> {
        Evaluator {
            instance,
            count: 0,
            penalty_weight: capacity_penalty_weight(instance),
            best: None,
            best_fitness: f64::INFINITY,
            trace: ConvergenceTrace::default(),
        }
    }

    /// Evaluates a complete solution: recomputes cost and feasibility,
    /// increments the evaluation counter, and tracks the incumbent. A
    /// feasible solution always outranks an infeasible one, so an infeasible
    /// incumbent survives only while nothing feasible has been seen.
    pub fn evaluate(&mut self, solution: &mut Solution) -> Result<f64> {
        solution.refresh(self.instance)?;
        self.count += 1;
        let fitness = self.fitness(solution);
        let incumbent_feasible = self.best.as_ref().is_some_and(|b| b.feasible);
        let better = if solution.feasible != incumbent_feasible {
            solution.feasible
        } else {
            fitness < self.best_fitness
        };
        if better {
            self.best_fitness = fitness;
            self.best = Some(solution.clone());
            // The trace plots feasible progress; an infeasible incumbent is
            // only a stand-in until the first feasible solution shows up.
            if solution.feasible {
                self.trace.push(self.count, solution.total_cost);
            }
        }
        Ok(solution.total_cost)
    }

    /// Penalized cost used for ranking: infeasible solutions pay
    /// `penalty_weight` per unit of capacity excess.
    pub fn fitness(&self, solution: &Solution) -> f64 {
        solution.total_cost
            + self.penalty_weight * solution.capacity_excess(self.instance.capacity)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn best(&self) -> Option<&Solution> {
        self.best.as_ref()
    }

    pub fn trace(&self) -> &ConvergenceTrace {
        &self.trace
    }

    pub fn into_best_and_trace(self) -> (Option<Solution>, ConvergenceTrace) {
        let mut trace = self.trace;
        trace.total_evaluations = self.count;
        (self.best, trace)
    }
}

/// Penalty per unit of excess load: ten times the mean inter-task distance.
fn capacity_penalty_weight(instance: &RoutingInstance) -> f64 {
    let n = instance.task_count();
    if n < 2 {
        return 10.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += instance.task_distance(i, j);
            pairs += 1;
        }
    }
    10.0 * (sum / pairs as f64).max(1e-9)
}

/// Incumbent cost over evaluation count, recorded at every improvement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub points: Vec<(u64, f64)>,
    /// Evaluations consumed by the whole run, >= the last improvement point.
    pub total_evaluations: u64,
}

impl ConvergenceTrace {
    fn push(&mut self, evaluations: u64, best_cost: f64) {
        self.points.push((evaluations, best_cost));
    }

    /// Final best cost, infinity when nothing was ever evaluated.
    pub fn final_cost(&self) -> f64 {
        self.points.last().map_or(f64::INFINITY, |p| p.1)
    }

    /// Earliest evaluation count at which the trace reached `target` or
    /// better.
    pub fn evaluations_to_reach(&self, target: f64) -> Option<u64> {
        self.points
            .iter()
            .find(|(_, cost)| *cost <= target + 1e-9)
            .map(|(evals, _)| *evals)
    }

    /// Serializes as CSV rows `evaluations,best_cost` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("evaluations,best_cost\n");
        for (e, c) in &self.points {
            out.push_str(&format!("{},{}\n", e, c));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ConvergenceTrace> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let (e, c) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("trace line {}", i + 1), "expected 2 fields"))?;
            let evals: u64 = e
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("trace line {}", i + 1), "bad evaluation count"))?;
            let cost: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("trace line {}", i + 1), "bad cost"))?;
            points.push((evals, cost));
        }
        // The CSV carries improvement points only; treat the last one as the
        // consumed-budget floor.
        let total_evaluations = points.last().map_or(0, |p| p.0);
        Ok(ConvergenceTrace {
            points,
            total_evaluations,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::instance::{ProblemKind, Task, TaskSite};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    thread_local! {
        // Instrumentation for the evaluation-accounting test.
        pub(crate) static COST_OF_CALLS: std::cell::Cell<u64> =
            const { std::cell::Cell::new(0) };
    }

    pub(crate) fn line_cvrp(n_tasks: usize, capacity: f64) -> RoutingInstance {
        // Depot at the origin, tasks at x = 1..=n on a line.
        let mut coords: Vec<[f64; 2]> = vec![[0.0, 0.0]];
        for i in 0..n_tasks {
            coords.push([(i + 1) as f64, 0.0]);
        }
        let v = coords.len();
        let cost = DMatrix::from_fn(v, v, |i, j| {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            (dx * dx + dy * dy).sqrt()
        });
        RoutingInstance {
            kind: ProblemKind::Cvrp,
            name: format!("line-{}", n_tasks),
            vertices: v,
            depot: 0,
            tasks: (0..n_tasks)
                .map(|i| Task {
                    id: i,
                    site: TaskSite::Vertex(i + 1),
                    demand: 1.0,
                    service_cost: 0.0,
                })
                .collect(),
            capacity,
            fleet_size: ((n_tasks as f64) / capacity).ceil().max(1.0) as usize,
            travel_cost: cost,
            lower_bound: None,
            coords,
        }
    }

    pub(crate) fn random_cvrp(n_tasks: usize, capacity: f64, seed: u64) -> RoutingInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords: Vec<[f64; 2]> = vec![[0.0, 0.0]];
        for _ in 0..n_tasks {
            coords.push([rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]);
        }
        let v = coords.len();
        let cost = DMatrix::from_fn(v, v, |i, j| {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            (dx * dx + dy * dy).sqrt()
        });
        RoutingInstance {
            kind: ProblemKind::Cvrp,
            name: format!("rand-{}", n_tasks),
            vertices: v,
            depot: 0,
            tasks: (0..n_tasks)
                .map(|i| Task {
                    id: i,
                    site: TaskSite::Vertex(i + 1),
                    demand: rng.gen_range(1..=3) as f64,
                    service_cost: 0.0,
                })
                .collect(),
            capacity,
            fleet_size: 3,
            travel_cost: cost,
            lower_bound: None,
            coords,
        }
    }

    pub(crate) fn carp_one_edge() -> RoutingInstance {
        // Vertices: depot 0, u = 1, v = 2. Task edge (1, 2), service 5.
        let mut cost = DMatrix::zeros(3, 3);
        let entries = [(0, 1, 2.0), (0, 2, 3.0), (1, 2, 4.0)];
        for &(a, b, c) in &entries {
            cost[(a, b)] = c;
            cost[(b, a)] = c;
        }
        RoutingInstance {
            kind: ProblemKind::Carp,
            name: "one-edge".into(),
            vertices: 3,
            depot: 0,
            tasks: vec![Task {
                id: 0,
                site: TaskSite::Edge { head: 1, tail: 2 },
                demand: 1.0,
                service_cost: 5.0,
            }],
            capacity: 2.0,
            fleet_size: 1,
            travel_cost: cost,
            lower_bound: None,
            coords: vec![],
        }
    }

    #[test]
    fn cvrp_out_and_back_costs_twice_the_distance() {
        let inst = line_cvrp(1, 5.0);
        let sol = Solution::new(
            vec![Route::new(vec![0], vec![false], &inst)],
            &inst,
        )
        .unwrap();
        assert_eq!(sol.total_cost, 2.0);
        let seven = {
            let mut i = line_cvrp(1, 5.0);
            i.travel_cost[(0, 1)] = 7.0;
            i.travel_cost[(1, 0)] = 7.0;
            i
        };
        assert_eq!(cost_of(&sol, &seven).unwrap(), 14.0);
    }

    #[test]
    fn carp_route_cost_respects_orientation() {
        let inst = carp_one_edge();
        // Serving u -> v: depot->u (2) + service (5) + v->depot (3) = 10.
        let forward = Solution::new(vec![Route::new(vec![0], vec![false], &inst)], &inst).unwrap();
        assert_eq!(forward.total_cost, 10.0);
        // Reversed: depot->v (3) + service (5) + u->depot (2) = 10 too.
        let reverse = Solution::new(vec![Route::new(vec![0], vec![true], &inst)], &inst).unwrap();
        assert_eq!(reverse.total_cost, 10.0);
    }

    #[test]
    fn random_solution_matches_leg_by_leg_summation() {
        let inst = random_cvrp(8, 10.0, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ids: Vec<usize> = (0..8).collect();
        ids.shuffle(&mut rng);
        let routes: Vec<Route> = ids
            .chunks(3)
            .map(|c| Route::new(c.to_vec(), vec![false; c.len()], &inst))
            .collect();
        let sol = Solution::new(routes.clone(), &inst).unwrap();

        // Independent oracle: explicit per-leg summation over the vertices.
        let mut expected = 0.0;
        for r in &routes {
            let verts: Vec<usize> = r.task_ids.iter().map(|&t| t + 1).collect();
            expected += inst.travel_cost[(0, verts[0])];
            for w in verts.windows(2) {
                expected += inst.travel_cost[(w[0], w[1])];
            }
            expected += inst.travel_cost[(*verts.last().unwrap(), 0)];
        }
        assert!((sol.total_cost - expected).abs() < 1e-9);
    }

    #[test]
    fn cvrp_cost_is_invariant_under_route_reversal() {
        let inst = random_cvrp(8, 100.0, 5);
        let route = Route::new((0..8).collect(), vec![false; 8], &inst);
        let fwd = Solution::new(vec![route.clone()], &inst).unwrap();
        let mut rev_ids = route.task_ids.clone();
        rev_ids.reverse();
        let rev = Solution::new(vec![Route::new(rev_ids, vec![false; 8], &inst)], &inst).unwrap();
        assert!((fwd.total_cost - rev.total_cost).abs() < 1e-9);
    }

    #[test]
    fn unknown_task_id_is_an_error() {
        let inst = line_cvrp(2, 5.0);
        let sol = Solution {
            routes: vec![Route {
                task_ids: vec![7],
                orientations: vec![false],
                load: 0.0,
            }],
            total_cost: 0.0,
            feasible: true,
        };
        assert!(matches!(cost_of(&sol, &inst), Err(Error::UnknownTask(7))));
    }

    #[test]
    fn labels_of_single_route_is_all_ones() {
        let inst = line_cvrp(3, 10.0);
        let sol = Solution::new(vec![Route::new(vec![0, 1, 2], vec![false; 3], &inst)], &inst)
            .unwrap();
        let y = labels_of(&sol);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(y.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn labels_of_matches_route_membership() {
        // Routes {0,1,2}, {3,4,5}, {6..9}, {10..13}: first two tasks share,
        // tasks 0 and 3 do not.
        let inst = line_cvrp(14, 100.0);
        let groups: Vec<Vec<usize>> = vec![
            (0..3).collect(),
            (3..6).collect(),
            (6..10).collect(),
            (10..14).collect(),
        ];
        let routes: Vec<Route> = groups
            .iter()
            .map(|g| Route::new(g.clone(), vec![false; g.len()], &inst))
            .collect();
        let sol = Solution::new(routes, &inst).unwrap();
        let y = labels_of(&sol);
        assert_eq!(y.get(0, 1), 1.0);
        assert_eq!(y.get(0, 3), -1.0);
        for i in 0..14 {
            assert_eq!(y.get(i, i), 1.0);
            for j in 0..14 {
                assert_eq!(y.get(i, j), y.get(j, i));
            }
        }
    }

    #[test]
    fn labels_of_singletons_is_identity_pattern() {
        let inst = line_cvrp(4, 10.0);
        let routes: Vec<Route> = (0..4)
            .map(|t| Route::new(vec![t], vec![false], &inst))
            .collect();
        let y = labels_of(&Solution::new(routes, &inst).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(y.get(i, j), if i == j { 1.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn feasible_solutions_always_outrank_infeasible_ones() {
        let inst = line_cvrp(3, 1.0); // capacity 1: multi-task routes overload
        let mut ev = Evaluator::new(&inst);

        let mut overloaded = Solution::new(
            vec![Route::new(vec![0, 1, 2], vec![false; 3], &inst)],
            &inst,
        )
        .unwrap();
        ev.evaluate(&mut overloaded).unwrap();
        assert!(!ev.best().unwrap().feasible);
        assert!(ev.trace().points.is_empty());

        // A pricier but feasible solution takes over and stays.
        let mut singletons = Solution::new(
            (0..3)
                .map(|t| Route::new(vec![t], vec![false], &inst))
                .collect(),
            &inst,
        )
        .unwrap();
        ev.evaluate(&mut singletons).unwrap();
        assert!(ev.best().unwrap().feasible);
        let mut overloaded_again = overloaded.clone();
        ev.evaluate(&mut overloaded_again).unwrap();
        assert!(ev.best().unwrap().feasible);
        assert_eq!(ev.trace().points.len(), 1);
    }

    #[test]
    fn trace_csv_round_trips() {
        let trace = ConvergenceTrace {
            points: vec![(30, 100.0), (45, 92.5), (200, 80.25)],
            total_evaluations: 200,
        };
        let csv = trace.to_csv();
        assert!(csv.starts_with("evaluations,best_cost\n"));
        assert_eq!(ConvergenceTrace::from_csv(&csv).unwrap(), trace);
    }
}
