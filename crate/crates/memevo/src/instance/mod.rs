//! Problem instances: benchmark parsing, graph distances and task features.
//!
//! Both problem classes are folded into one [`RoutingInstance`]: a CVRP task
//! is a demand-bearing vertex, a CARP task is a demand-bearing edge. Travel
//! costs are kept as a dense symmetric vertex matrix (Euclidean for CVRP,
//! all-pairs shortest paths for CARP), and [`featurize`] turns an instance
//! into the `p x n` task feature matrix the transfer machinery works on.

mod carp;
mod cvrp;
mod graph;
mod mds;

pub use carp::parse_carp;
pub use cvrp::parse_cvrp;
pub use graph::{shortest_paths, EdgeCosts};
pub use mds::mds_embed;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which routing problem class an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    Cvrp,
    Carp,
}

/// Where a task sits in the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TaskSite {
    /// CVRP: a customer vertex.
    Vertex(usize),
    /// CARP: a required edge between two vertices.
    Edge { head: usize, tail: usize },
}

/// A unit of service demand: a customer vertex (CVRP) or required edge (CARP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    /// 0-based task index; column order of the feature matrix follows it.
    pub id: usize,
    pub site: TaskSite,
    pub demand: f64,
    /// Cost of actually servicing the task. Zero for CVRP.
    pub service_cost: f64,
}

impl Task {
    /// Vertex entered when serving with the given direction flag.
    /// CVRP tasks ignore the flag.
    pub fn entry(&self, reversed: bool) -> usize {
        match self.site {
            TaskSite::Vertex(v) => v,
            TaskSite::Edge { head, tail } => {
                if reversed {
                    tail
                } else {
                    head
                }
            }
        }
    }

    /// Vertex left from after serving with the given direction flag.
    pub fn exit(&self, reversed: bool) -> usize {
        match self.site {
            TaskSite::Vertex(v) => v,
            TaskSite::Edge { head, tail } => {
                if reversed {
                    head
                } else {
                    tail
                }
            }
        }
    }
}

/// A parsed CVRP or CARP instance with precomputed vertex travel costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingInstance {
    pub kind: ProblemKind,
    pub name: String,
    /// Number of graph vertices.
    pub vertices: usize,
    /// 0-based depot vertex.
    pub depot: usize,
    pub tasks: Vec<Task>,
    /// Vehicle capacity W.
    pub capacity: f64,
    /// Number of vehicles, used as the cluster count during imitation.
    pub fleet_size: usize,
    /// Dense symmetric vertex-to-vertex travel cost matrix.
    pub travel_cost: DMatrix<f64>,
    /// Published lower bound, when the file states one.
    pub lower_bound: Option<f64>,
    /// Vertex coordinates, present for CVRP files.
    pub coords: Vec<[f64; 2]>,
}

impl RoutingInstance {
    /// Travel cost between two vertices.
    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.travel_cost[(a, b)]
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// Sum of all task demands.
    pub fn total_demand(&self) -> f64 {
        self.tasks.iter().map(|t| t.demand).sum()
    }

    /// Distance between two tasks: vertex distance for CVRP, minimum over
    /// the four endpoint pairings for CARP.
    pub fn task_distance(&self, a: usize, b: usize) -> f64 {
        let (ta, tb) = (&self.tasks[a], &self.tasks[b]);
        match (ta.site, tb.site) {
            (TaskSite::Vertex(u), TaskSite::Vertex(v)) => self.distance(u, v),
            (sa, sb) => {
                let (ah, at) = endpoints(sa);
                let (bh, bt) = endpoints(sb);
                self.distance(ah, bh)
                    .min(self.distance(ah, bt))
                    .min(self.distance(at, bh))
                    .min(self.distance(at, bt))
            }
        }
    }

    /// Checks the structural invariants shared by both problem kinds.
    pub fn validate(&self) -> Result<()> {
        if self.capacity <= 0.0 {
            return Err(Error::parse(
                self.name.clone(),
                format!("capacity must be positive, got {}", self.capacity),
            ));
        }
        if self.depot >= self.vertices {
            return Err(Error::parse(
                self.name.clone(),
                format!("depot {} out of range", self.depot),
            ));
        }
        for t in &self.tasks {
            if t.demand <= 0.0 {
                return Err(Error::parse(
                    self.name.clone(),
                    format!("task {} has nonpositive demand", t.id),
                ));
            }
            if t.demand > self.capacity {
                return Err(Error::TaskExceedsCapacity {
                    task: t.id,
                    demand: t.demand,
                    capacity: self.capacity,
                });
            }
            let (h, t2) = endpoints(t.site);
            if h >= self.vertices || t2 >= self.vertices {
                return Err(Error::parse(
                    self.name.clone(),
                    format!("task {} references an invalid vertex", t.id),
                ));
            }
        }
        let n = self.vertices;
        if self.travel_cost.nrows() != n || self.travel_cost.ncols() != n {
            return Err(Error::Dimension(format!(
                "travel cost matrix is {}x{}, expected {}x{}",
                self.travel_cost.nrows(),
                self.travel_cost.ncols(),
                n,
                n
            )));
        }
        for i in 0..n {
            if self.travel_cost[(i, i)] != 0.0 {
                return Err(Error::Dimension(format!("nonzero diagonal at {}", i)));
            }
            for j in 0..n {
                let c = self.travel_cost[(i, j)];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::NonFinite(format!("travel cost ({}, {})", i, j)));
                }
                if (c - self.travel_cost[(j, i)]).abs() > 1e-9 {
                    return Err(Error::Dimension(format!("asymmetric cost ({}, {})", i, j)));
                }
            }
        }
        Ok(())
    }
}

fn endpoints(site: TaskSite) -> (usize, usize) {
    match site {
        TaskSite::Vertex(v) => (v, v),
        TaskSite::Edge { head, tail } => (head, tail),
    }
}

/// A `p x n` matrix whose columns are the feature vectors of the tasks, in
/// task id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFeatureMatrix {
    data: DMatrix<f64>,
}

impl TaskFeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("task feature matrix".into()));
        }
        Ok(TaskFeatureMatrix { data })
    }

    /// Feature dimension p.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Task count n.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Feature vector of task `i` as a plain vector.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.data.column(i).iter().copied().collect()
    }

    /// Mean of all task feature vectors.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        let mut m = vec![0.0; self.dim()];
        for c in self.data.column_iter() {
            for (mi, v) in m.iter_mut().zip(c.iter()) {
                *mi += v / n;
            }
        }
        m
    }

    /// Euclidean distance between the feature vectors of tasks `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.data.column(i) - self.data.column(j)).norm()
    }
}

/// Builds the task feature matrix of an instance.
///
/// CVRP tasks carry their planar coordinates directly (`p` must be 2).
/// CARP tasks are embedded by classical MDS of the pairwise task distance
/// matrix, where the distance between two edges is the minimum vertex
/// shortest path over their four endpoint pairings.
pub fn featurize(instance: &RoutingInstance, p: usize) -> Result<TaskFeatureMatrix> {
    let n = instance.task_count();
    match instance.kind {
        ProblemKind::Cvrp => {
            if p != 2 {
                return Err(Error::Dimension(format!(
                    "CVRP features are native 2-d coordinates, requested p = {}",
                    p
                )));
            }
            let mut data = DMatrix::zeros(2, n);
            for (i, t) in instance.tasks.iter().enumerate() {
                let v = match t.site {
                    TaskSite::Vertex(v) => v,
                    TaskSite::Edge { .. } => {
                        return Err(Error::Dimension("CVRP task on an edge".into()))
                    }
                };
                data[(0, i)] = instance.coords[v][0];
                data[(1, i)] = instance.coords[v][1];
            }
            TaskFeatureMatrix::new(data)
        }
        ProblemKind::Carp => {
            let mut d = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let dist = instance.task_distance(i, j);
                    d[(i, j)] = dist;
                    d[(j, i)] = dist;
                }
            }
            mds_embed(&d, p)
        }
    }
}
