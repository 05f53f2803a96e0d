//! TSPLIB-style CVRP file parsing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::instance::{ProblemKind, RoutingInstance, Task, TaskSite};

/// Parses a TSPLIB-style CVRP file.
///
/// Recognizes the DIMENSION, CAPACITY, NODE_COORD_SECTION, DEMAND_SECTION and
/// DEPOT_SECTION keywords, tolerating arbitrary whitespace. Vertices with
/// positive demand become tasks. Travel costs are Euclidean distances rounded
/// to the nearest integer, the convention under which the benchmark optima
/// are stated. The fleet size comes from a `-k<m>` suffix in the instance
/// name when present, otherwise `ceil(total demand / capacity)`.
pub fn parse_cvrp(text: &str) -> Result<RoutingInstance> {
    let mut name = String::new();
    let mut comment = String::new();
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<f64> = None;
    let mut coords: Vec<Option<[f64; 2]>> = Vec::new();
    let mut demands: Vec<Option<f64>> = Vec::new();
    let mut depot: Option<usize> = None;

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Demands,
        Depot,
        Done,
    }
    let mut section = Section::Header;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let loc = || format!("line {}", lineno + 1);
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("EOF") {
            section = Section::Done;
            continue;
        }
        if upper.starts_with("NODE_COORD_SECTION") {
            let dim = dimension
                .ok_or_else(|| Error::parse(loc(), "NODE_COORD_SECTION before DIMENSION"))?;
            coords = vec![None; dim];
            section = Section::Coords;
            continue;
        }
        if upper.starts_with("DEMAND_SECTION") {
            let dim =
                dimension.ok_or_else(|| Error::parse(loc(), "DEMAND_SECTION before DIMENSION"))?;
            demands = vec![None; dim];
            section = Section::Demands;
            continue;
        }
        if upper.starts_with("DEPOT_SECTION") {
            section = Section::Depot;
            continue;
        }

        match section {
            Section::Header | Section::Done => {
                if let Some((key, value)) = split_keyword(line) {
                    match key.as_str() {
                        "NAME" => name = value.to_string(),
                        "COMMENT" => {
                            if !comment.is_empty() {
                                comment.push(' ');
                            }
                            comment.push_str(value);
                        }
                        "DIMENSION" => {
                            dimension = Some(value.parse().map_err(|_| {
                                Error::parse(loc(), format!("bad DIMENSION {:?}", value))
                            })?)
                        }
                        "CAPACITY" => {
                            capacity = Some(value.parse().map_err(|_| {
                                Error::parse(loc(), format!("bad CAPACITY {:?}", value))
                            })?)
                        }
                        // TYPE / EDGE_WEIGHT_TYPE and friends carry no data we use.
                        _ => {}
                    }
                }
            }
            Section::Coords => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 3 {
                    return Err(Error::parse(loc(), "coordinate line needs id, x, y"));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad vertex id"))?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad x coordinate"))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad y coordinate"))?;
                let slot = coords
                    .get_mut(id.wrapping_sub(1))
                    .ok_or_else(|| Error::parse(loc(), format!("vertex id {} out of range", id)))?;
                *slot = Some([x, y]);
            }
            Section::Demands => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 2 {
                    return Err(Error::parse(loc(), "demand line needs id and demand"));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad vertex id"))?;
                let d: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad demand"))?;
                let slot = demands
                    .get_mut(id.wrapping_sub(1))
                    .ok_or_else(|| Error::parse(loc(), format!("vertex id {} out of range", id)))?;
                *slot = Some(d);
            }
            Section::Depot => {
                let id: i64 = line
                    .split_whitespace()
                    .next()
                    .unwrap()
                    .parse()
                    .map_err(|_| Error::parse(loc(), "bad depot id"))?;
                if id == -1 {
                    section = Section::Done;
                } else if depot.is_some() {
                    return Err(Error::parse(loc(), "multiple depots are not supported"));
                } else if id < 1 {
                    return Err(Error::parse(loc(), format!("bad depot id {}", id)));
                } else {
                    depot = Some(id as usize - 1);
                }
            }
        }
    }

    let dimension =
        dimension.ok_or_else(|| Error::parse("header", "missing DIMENSION keyword"))?;
    let capacity = capacity.ok_or_else(|| Error::parse("header", "missing CAPACITY keyword"))?;
    if capacity <= 0.0 {
        return Err(Error::parse(
            "header",
            format!("capacity must be positive, got {}", capacity),
        ));
    }
    let depot = depot.ok_or_else(|| Error::parse("DEPOT_SECTION", "missing depot"))?;
    if depot >= dimension {
        return Err(Error::parse("DEPOT_SECTION", "depot id out of range"));
    }
    let coords: Vec<[f64; 2]> = coords
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                Error::parse("NODE_COORD_SECTION", format!("missing vertex {}", i + 1))
            })
        })
        .collect::<Result<_>>()?;
    if coords.len() != dimension {
        return Err(Error::parse("NODE_COORD_SECTION", "missing coordinates"));
    }
    let demands: Vec<f64> = demands
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            d.ok_or_else(|| Error::parse("DEMAND_SECTION", format!("missing vertex {}", i + 1)))
        })
        .collect::<Result<_>>()?;

    let mut travel_cost = DMatrix::zeros(dimension, dimension);
    for i in 0..dimension {
        for j in (i + 1)..dimension {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let d = (dx * dx + dy * dy).sqrt().round();
            travel_cost[(i, j)] = d;
            travel_cost[(j, i)] = d;
        }
    }

    let tasks: Vec<Task> = demands
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0)
        .enumerate()
        .map(|(task_id, (vertex, &demand))| Task {
            id: task_id,
            site: TaskSite::Vertex(vertex),
            demand,
            service_cost: 0.0,
        })
        .collect();

    let total_demand: f64 = tasks.iter().map(|t| t.demand).sum();
    let fleet_size = fleet_from_name(&name)
        .unwrap_or_else(|| (total_demand / capacity).ceil().max(1.0) as usize);

    let instance = RoutingInstance {
        kind: ProblemKind::Cvrp,
        name,
        vertices: dimension,
        depot,
        tasks,
        capacity,
        fleet_size,
        travel_cost,
        lower_bound: optimal_from_comment(&comment),
        coords,
    };
    instance.validate()?;
    Ok(instance)
}

fn split_keyword(line: &str) -> Option<(String, &str)> {
    let (key, value) = match line.split_once(':') {
        Some((k, v)) => (k, v),
        None => (line, ""),
    };
    let key = key.trim().to_ascii_uppercase();
    if key.is_empty() || key.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    Some((key, value.trim()))
}

/// Picks the vehicle count out of names like `A-n32-k5`.
fn fleet_from_name(name: &str) -> Option<usize> {
    let idx = name.rfind("-k")?;
    let digits: String = name[idx + 2..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok().filter(|&k| k > 0)
}

/// Extracts the published optimum from comments like
/// `(Augerat et al, No of trucks: 5, Optimal value: 784)`.
fn optimal_from_comment(comment: &str) -> Option<f64> {
    let lower = comment.to_ascii_lowercase();
    let idx = lower.find("optimal value")?;
    let rest = &comment[idx + "optimal value".len()..];
    let number: String = rest
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    number.parse().ok()
}
