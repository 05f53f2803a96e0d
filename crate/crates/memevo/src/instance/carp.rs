//! egl-style CARP DAT file parsing.

use crate::error::{Error, Result};
use crate::instance::graph::{shortest_paths, EdgeCosts};
use crate::instance::{ProblemKind, RoutingInstance, Task, TaskSite};

/// Parses an egl-style CARP file.
///
/// Header lines give NAME, VERTICES, DEPOT, CAPACITY and optionally
/// LOWER_BOUND. A `LIST_REQ_EDGES :` block lists the required edges as
/// `(u,v) cost C demand D` and a `LIST_NOREQ_EDGES :` block the remaining
/// edges as `(u,v) cost C`. Vertex ids are 1-based in the file. Required
/// edges become tasks with service cost equal to their travel cost; vertex
/// travel costs are resolved to all-pairs shortest paths, and a graph that
/// leaves any vertex unreachable is rejected.
pub fn parse_carp(text: &str) -> Result<RoutingInstance> {
    let mut name = String::new();
    let mut vertices: Option<usize> = None;
    let mut depot: Option<usize> = None;
    let mut capacity: Option<f64> = None;
    let mut lower_bound: Option<f64> = None;

    struct ReqEdge {
        head: usize,
        tail: usize,
        cost: f64,
        demand: f64,
    }
    let mut required: Vec<ReqEdge> = Vec::new();
    let mut other: Vec<(usize, usize, f64)> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Header,
        Required,
        NotRequired,
    }
    let mut section = Section::Header;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let loc = || format!("line {}", lineno + 1);
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("LIST_REQ_EDGES") {
            section = Section::Required;
            continue;
        }
        if upper.starts_with("LIST_NOREQ_EDGES") {
            section = Section::NotRequired;
            continue;
        }
        if upper.starts_with("END") || upper.starts_with("EOF") {
            break;
        }

        match section {
            Section::Header => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim()),
                    None => continue,
                };
                match key.as_str() {
                    "NAME" | "NOMBRE" => name = value.to_string(),
                    "VERTICES" => {
                        vertices = Some(value.parse().map_err(|_| {
                            Error::parse(loc(), format!("bad VERTICES {:?}", value))
                        })?)
                    }
                    "DEPOT" | "DEPOSITO" => {
                        let id: usize = value
                            .parse()
                            .map_err(|_| Error::parse(loc(), format!("bad DEPOT {:?}", value)))?;
                        if id == 0 {
                            return Err(Error::parse(loc(), "depot ids are 1-based"));
                        }
                        depot = Some(id - 1);
                    }
                    "CAPACITY" | "CAPACIDAD" => {
                        capacity = Some(value.parse().map_err(|_| {
                            Error::parse(loc(), format!("bad CAPACITY {:?}", value))
                        })?)
                    }
                    "LOWER_BOUND" => {
                        lower_bound = Some(value.parse().map_err(|_| {
                            Error::parse(loc(), format!("bad LOWER_BOUND {:?}", value))
                        })?)
                    }
                    _ => {}
                }
            }
            Section::Required => {
                let (u, v, fields) = parse_edge_line(line, &loc())?;
                let cost = field(&fields, "cost", &loc())?;
                let demand = field(&fields, "demand", &loc())?;
                required.push(ReqEdge {
                    head: u,
                    tail: v,
                    cost,
                    demand,
                });
            }
            Section::NotRequired => {
                let (u, v, fields) = parse_edge_line(line, &loc())?;
                let cost = field(&fields, "cost", &loc())?;
                other.push((u, v, cost));
            }
        }
    }

    let vertices = vertices.ok_or_else(|| Error::parse("header", "missing VERTICES"))?;
    let depot = depot.ok_or_else(|| Error::parse("header", "missing DEPOT"))?;
    let capacity = capacity.ok_or_else(|| Error::parse("header", "missing CAPACITY"))?;
    if capacity <= 0.0 {
        return Err(Error::parse("header", "capacity must be positive"));
    }
    if required.is_empty() {
        return Err(Error::parse("LIST_REQ_EDGES", "no required edges"));
    }

    let mut graph = EdgeCosts::new(vertices);
    let check = |id: usize, loc: &str| -> Result<usize> {
        if id == 0 || id > vertices {
            Err(Error::parse(loc, format!("vertex id {} out of range", id)))
        } else {
            Ok(id - 1)
        }
    };
    for e in &required {
        graph.add(
            check(e.head, "LIST_REQ_EDGES")?,
            check(e.tail, "LIST_REQ_EDGES")?,
            e.cost,
        );
    }
    for &(u, v, c) in &other {
        graph.add(
            check(u, "LIST_NOREQ_EDGES")?,
            check(v, "LIST_NOREQ_EDGES")?,
            c,
        );
    }
    let travel_cost = shortest_paths(&graph)?;

    let tasks: Vec<Task> = required
        .iter()
        .enumerate()
        .map(|(id, e)| Task {
            id,
            site: TaskSite::Edge {
                head: e.head - 1,
                tail: e.tail - 1,
            },
            demand: e.demand,
            service_cost: e.cost,
        })
        .collect();

    let total_demand: f64 = tasks.iter().map(|t| t.demand).sum();
    let fleet_size = (total_demand / capacity).ceil().max(1.0) as usize;

    let instance = RoutingInstance {
        kind: ProblemKind::Carp,
        name,
        vertices,
        depot,
        tasks,
        capacity,
        fleet_size,
        travel_cost,
        lower_bound,
        coords: vec![],
    };
    instance.validate()?;
    Ok(instance)
}

/// Parses `( u, v) key value key value ...`, returning 1-based endpoints.
fn parse_edge_line<'a>(line: &'a str, loc: &str) -> Result<(usize, usize, Vec<&'a str>)> {
    let open = line
        .find('(')
        .ok_or_else(|| Error::parse(loc, "edge line missing '('"))?;
    let close = line
        .find(')')
        .ok_or_else(|| Error::parse(loc, "edge line missing ')'"))?;
    if close < open {
        return Err(Error::parse(loc, "mismatched parentheses"));
    }
    let inner = &line[open + 1..close];
    let mut ids = inner.split(',').map(str::trim);
    let u: usize = ids
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(loc, "bad head vertex"))?;
    let v: usize = ids
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(loc, "bad tail vertex"))?;
    let fields: Vec<&str> = line[close + 1..].split_whitespace().collect();
    Ok((u, v, fields))
}

/// Finds `key <number>` in a whitespace-split field list. Also accepts the
/// Spanish egl spellings (`coste`, `demanda`).
fn field(fields: &[&str], key: &str, loc: &str) -> Result<f64> {
    let alias = match key {
        "cost" => "coste",
        "demand" => "demanda",
        other => other,
    };
    for pair in fields.windows(2) {
        let k = pair[0].to_ascii_lowercase();
        if k == key || k == alias {
            return pair[1]
                .parse()
                .map_err(|_| Error::parse(loc, format!("bad {} value {:?}", key, pair[1])));
        }
    }
    Err(Error::parse(loc, format!("missing {} field", key)))
}
