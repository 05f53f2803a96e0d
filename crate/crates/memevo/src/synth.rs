//! Synthetic instance generators: related CVRP families with a shared
//! hidden geometry, simple clustered instances with known optima, and
//! geometric CARP networks. Used by the examples and the test suite.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::instance::{ProblemKind, RoutingInstance, Task, TaskSite};

/// Parameters of a synthetic CVRP family sharing one hidden linear map.
#[derive(Debug, Clone)]
pub struct FamilyParams {
    pub instances: usize,
    pub clusters: usize,
    /// Inclusive range of tasks per cluster.
    pub tasks_per_cluster: (usize, usize),
    /// The hidden anisotropy applied to every template coordinate.
    pub hidden_map: [[f64; 2]; 2],
    pub seed: u64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        // Roughly a 30 degree rotation composed with a 7:0.7 axis stretch:
        // clusters that are round in template space become long diagonal
        // streaks that plain k-means struggles to tell apart.
        FamilyParams {
            instances: 6,
            clusters: 5,
            tasks_per_cluster: (8, 12),
            hidden_map: [[6.06, -0.35], [3.5, 0.61]],
            seed: 20_240_817,
        }
    }
}

/// Generates a family of CVRP instances with cluster templates drawn fresh
/// per instance but distorted by one fixed hidden linear map, so a metric
/// learned on any member transfers to the others.
pub fn clustered_family(params: &FamilyParams) -> Vec<RoutingInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.instances)
        .map(|j| {
            let seed = rng.gen();
            clustered_instance(
                &format!("SYN{:02}", j + 1),
                params.clusters,
                params.tasks_per_cluster,
                params.hidden_map,
                seed,
            )
        })
        .collect()
}

fn clustered_instance(
    name: &str,
    clusters: usize,
    tasks_per_cluster: (usize, usize),
    map: [[f64; 2]; 2],
    seed: u64,
) -> RoutingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Cluster centers on a jittered ring in template space.
    let radius = 30.0;
    let centers: Vec<[f64; 2]> = (0..clusters)
        .map(|c| {
            let angle = std::f64::consts::TAU * (c as f64 + rng.gen_range(-0.15..0.15))
                / clusters as f64;
            [
                radius * angle.cos() + rng.gen_range(-4.0..4.0),
                radius * angle.sin() + rng.gen_range(-4.0..4.0),
            ]
        })
        .collect();

    let mut coords = vec![apply(map, [0.0, 0.0])]; // depot at the template origin
    let mut demands: Vec<f64> = Vec::new();
    let mut cluster_sums = vec![0.0f64; clusters];
    for (c, center) in centers.iter().enumerate() {
        let count = rng.gen_range(tasks_per_cluster.0..=tasks_per_cluster.1);
        for _ in 0..count {
            let z = [
                center[0] + rng.gen_range(-1.8..1.8),
                center[1] + rng.gen_range(-1.8..1.8),
            ];
            coords.push(apply(map, z));
            let demand = rng.gen_range(1..=10) as f64;
            demands.push(demand);
            cluster_sums[c] += demand;
        }
    }
    let capacity = cluster_sums.iter().cloned().fold(0.0, f64::max).max(1.0);

    let n = coords.len();
    let travel_cost = DMatrix::from_fn(n, n, |i, j| {
        let dx = coords[i][0] - coords[j][0];
        let dy = coords[i][1] - coords[j][1];
        (dx * dx + dy * dy).sqrt().round()
    });
    RoutingInstance {
        kind: ProblemKind::Cvrp,
        name: format!("{}-n{}-k{}", name, n, clusters),
        vertices: n,
        depot: 0,
        tasks: demands
            .iter()
            .enumerate()
            .map(|(i, &d)| Task {
                id: i,
                site: TaskSite::Vertex(i + 1),
                demand: d,
                service_cost: 0.0,
            })
            .collect(),
        capacity,
        fleet_size: clusters,
        travel_cost,
        lower_bound: None,
        coords,
    }
}

fn apply(map: [[f64; 2]; 2], z: [f64; 2]) -> [f64; 2] {
    [
        map[0][0] * z[0] + map[0][1] * z[1],
        map[1][0] * z[0] + map[1][1] * z[1],
    ]
}

/// Two far-apart collinear clusters of `per_cluster` unit-demand tasks each;
/// the capacity fits exactly one cluster per vehicle, so the optimum is one
/// route per cluster serving tasks in line order.
pub fn two_cluster_instance(per_cluster: usize, separation: f64) -> RoutingInstance {
    let mut coords = vec![[0.0, -10.0]]; // depot below both clusters
    for i in 0..per_cluster {
        coords.push([i as f64, 0.0]);
    }
    for i in 0..per_cluster {
        coords.push([separation + i as f64, 0.0]);
    }
    let n = coords.len();
    let travel_cost = DMatrix::from_fn(n, n, |i, j| {
        let dx = coords[i][0] - coords[j][0];
        let dy = coords[i][1] - coords[j][1];
        (dx * dx + dy * dy).sqrt()
    });
    RoutingInstance {
        kind: ProblemKind::Cvrp,
        name: format!("twoblob-n{}-k2", n),
        vertices: n,
        depot: 0,
        tasks: (0..2 * per_cluster)
            .map(|i| Task {
                id: i,
                site: TaskSite::Vertex(i + 1),
                demand: 1.0,
                service_cost: 0.0,
            })
            .collect(),
        capacity: per_cluster as f64,
        fleet_size: 2,
        travel_cost,
        lower_bound: None,
        coords,
    }
}

/// Serializes a CVRP instance as TSPLIB text that [`crate::instance::parse_cvrp`]
/// reads back.
pub fn to_tsplib(instance: &RoutingInstance) -> String {
    assert_eq!(instance.kind, ProblemKind::Cvrp);
    let mut out = String::new();
    out.push_str(&format!("NAME : {}\n", instance.name));
    if let Some(lb) = instance.lower_bound {
        out.push_str(&format!(
            "COMMENT : (synthetic, Optimal value: {})\n",
            lb
        ));
    }
    out.push_str("TYPE : CVRP\n");
    out.push_str(&format!("DIMENSION : {}\n", instance.vertices));
    out.push_str("EDGE_WEIGHT_TYPE : EUC_2D\n");
    out.push_str(&format!("CAPACITY : {}\n", instance.capacity));
    out.push_str("NODE_COORD_SECTION\n");
    for (i, c) in instance.coords.iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", i + 1, c[0], c[1]));
    }
    out.push_str("DEMAND_SECTION\n");
    let mut demand = vec![0.0; instance.vertices];
    for t in &instance.tasks {
        if let TaskSite::Vertex(v) = t.site {
            demand[v] = t.demand;
        }
    }
    for (i, d) in demand.iter().enumerate() {
        out.push_str(&format!("{} {}\n", i + 1, d));
    }
    out.push_str("DEPOT_SECTION\n");
    out.push_str(&format!("{}\n-1\nEOF\n", instance.depot + 1));
    out
}

/// Generates a geometric CARP network in the egl DAT format: vertices are
/// random planar points, the graph is a nearest-neighbor spanning tree plus
/// the shortest remaining links, and `required` of the edges carry demand.
pub fn geometric_carp(
    name: &str,
    vertices: usize,
    required: usize,
    total_edges: usize,
    capacity: f64,
    lower_bound: f64,
    seed: u64,
) -> String {
    assert!(required <= total_edges);
    assert!(vertices >= 2 && total_edges >= vertices - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..vertices)
        .map(|_| [rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)])
        .collect();
    let dist = |a: usize, b: usize| -> f64 {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        (dx * dx + dy * dy).sqrt()
    };

    // Nearest-neighbor spanning tree for a road-like backbone.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut in_tree = vec![false; vertices];
    in_tree[0] = true;
    for _ in 1..vertices {
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..vertices {
            if !in_tree[u] {
                continue;
            }
            for v in 0..vertices {
                if in_tree[v] {
                    continue;
                }
                let d = dist(u, v);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, u, v));
                }
            }
        }
        let (_, u, v) = best.unwrap();
        in_tree[v] = true;
        edges.push((u.min(v), u.max(v)));
    }
    // Densify with the shortest links not yet present.
    let mut candidates: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|u| ((u + 1)..vertices).map(move |v| (u, v)))
        .filter(|e| !edges.contains(e))
        .collect();
    candidates.sort_by(|&(a, b), &(c, d)| dist(a, b).total_cmp(&dist(c, d)));
    for e in candidates {
        if edges.len() >= total_edges {
            break;
        }
        edges.push(e);
    }

    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.shuffle(&mut rng);
    let required_set: std::collections::HashSet<usize> =
        order.into_iter().take(required).collect();

    let mut out = String::new();
    out.push_str(&format!("NAME : {}\n", name));
    out.push_str(&format!("VERTICES : {}\n", vertices));
    out.push_str("DEPOT : 1\n");
    out.push_str(&format!("CAPACITY : {}\n", capacity));
    out.push_str(&format!("LOWER_BOUND : {}\n", lower_bound));
    out.push_str("LIST_REQ_EDGES :\n");
    for (i, &(u, v)) in edges.iter().enumerate() {
        if required_set.contains(&i) {
            let cost = dist(u, v).round().max(1.0);
            let demand = rng.gen_range(10..=50);
            out.push_str(&format!(
                "({},{}) cost {} demand {}\n",
                u + 1,
                v + 1,
                cost,
                demand
            ));
        }
    }
    out.push_str("LIST_NOREQ_EDGES :\n");
    for (i, &(u, v)) in edges.iter().enumerate() {
        if !required_set.contains(&i) {
            let cost = dist(u, v).round().max(1.0);
            out.push_str(&format!("({},{}) cost {}\n", u + 1, v + 1, cost));
        }
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_carp, parse_cvrp};

    #[test]
    fn family_members_share_dimensions_and_parse_back() {
        let params = FamilyParams {
            instances: 3,
            ..FamilyParams::default()
        };
        let family = clustered_family(&params);
        assert_eq!(family.len(), 3);
        for inst in &family {
            let task_count = inst.task_count();
            assert!((40..=60).contains(&task_count), "{} tasks", task_count);
            inst.validate().unwrap();
            let reparsed = parse_cvrp(&to_tsplib(inst)).unwrap();
            assert_eq!(reparsed.task_count(), task_count);
            assert_eq!(reparsed.fleet_size, inst.fleet_size);
            assert_eq!(reparsed.capacity, inst.capacity);
        }
    }

    #[test]
    fn family_generation_is_deterministic() {
        let params = FamilyParams {
            instances: 2,
            ..FamilyParams::default()
        };
        assert_eq!(clustered_family(&params), clustered_family(&params));
    }

    #[test]
    fn geometric_carp_parses_with_requested_shape() {
        let text = geometric_carp("TESTCARP", 20, 12, 28, 50.0, 123.0, 7);
        let inst = parse_carp(&text).unwrap();
        assert_eq!(inst.vertices, 20);
        assert_eq!(inst.task_count(), 12);
        assert_eq!(inst.lower_bound, Some(123.0));
    }
}
