//! Readers and writers for the DAT instance format and the plain-text solution format.
//!
//! Instance files look like
//!
//! ```text
//! NOMBRE : gdb1
//! VERTICES : 12
//! ARISTAS_REQ : 22
//! ARISTAS_NOREQ : 0
//! VEHICULOS : 5
//! CAPACIDAD : 5
//! LISTA_ARISTAS_REQ :
//!  ( 1, 2)   coste 13 demanda 1
//! LISTA_ARISTAS_NOREQ :
//! DEPOSITO :   1
//! ```
//!
//! Vertices are 1-based on disk and 0-based in memory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read};

use thiserror::Error;

use crate::graph::{Cost, Demand, DistanceTable, Edge, Instance, InstanceError, TaskId};
use crate::solution::{Route, Solution};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Semantic(#[from] InstanceError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Header,
    Required,
    NonRequired,
}

fn parse_int(token: &str, line: usize, what: &str) -> Result<i64, LoadError> {
    token
        .trim()
        .parse::<i64>()
        .map_err(|_| syntax(line, format!("expected integer {what}, found `{}`", token.trim())))
}

/// Parses `( u , v ) coste c [demanda d]`. Returns 1-based endpoints.
fn parse_edge_line(text: &str, line: usize) -> Result<(i64, i64, Cost, Demand), LoadError> {
    let open = text.find('(').ok_or_else(|| syntax(line, "expected `(`"))?;
    let close = text.find(')').ok_or_else(|| syntax(line, "expected `)`"))?;
    if close < open {
        return Err(syntax(line, "malformed edge endpoints"));
    }
    let inner = &text[open + 1..close];
    let mut ends = inner.split(',');
    let (Some(u), Some(v), None) = (ends.next(), ends.next(), ends.next()) else {
        return Err(syntax(line, "edge endpoints must be `( u , v )`"));
    };
    let u = parse_int(u, line, "vertex")?;
    let v = parse_int(v, line, "vertex")?;

    let mut cost = None;
    let mut demand = None;
    let mut tokens = text[close + 1..].split_whitespace();
    while let Some(key) = tokens.next() {
        let value = tokens
            .next()
            .ok_or_else(|| syntax(line, format!("missing value after `{key}`")))?;
        match key.to_ascii_lowercase().as_str() {
            "coste" | "cost" => cost = Some(parse_int(value, line, "cost")?),
            "demanda" | "demand" => demand = Some(parse_int(value, line, "demand")?),
            other => return Err(syntax(line, format!("unknown edge attribute `{other}`"))),
        }
    }
    let cost = cost.ok_or_else(|| syntax(line, "edge without `coste`"))?;
    Ok((u, v, cost, demand.unwrap_or(0)))
}

/// Reads an instance in the DAT benchmark format.
pub fn load_instance(source: impl Read) -> Result<Instance, LoadError> {
    let reader = std::io::BufReader::new(source);
    let mut name = String::new();
    let mut vertices: Option<i64> = None;
    let mut req_count: Option<i64> = None;
    let mut noreq_count: Option<i64> = None;
    let mut capacity: Option<i64> = None;
    let mut depot: Option<(i64, usize)> = None;
    let mut required = Vec::new();
    let mut non_required = Vec::new();
    let mut block = Block::Header;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.eq_ignore_ascii_case("END") {
            continue;
        }
        if text.starts_with('(') {
            let parsed = parse_edge_line(text, lineno)?;
            match block {
                Block::Required => required.push((parsed, lineno)),
                Block::NonRequired => non_required.push((parsed, lineno)),
                Block::Header => return Err(syntax(lineno, "edge line outside an edge list")),
            }
            continue;
        }
        let Some((key, value)) = text.split_once(':') else {
            return Err(syntax(lineno, format!("expected `KEY : VALUE`, found `{text}`")));
        };
        let key = key.trim().to_ascii_uppercase();
        let value = value.trim();
        match key.as_str() {
            "NOMBRE" | "NAME" => name = value.to_string(),
            "VERTICES" => vertices = Some(parse_int(value, lineno, "vertex count")?),
            "ARISTAS_REQ" | "REQUIRED_EDGES" => req_count = Some(parse_int(value, lineno, "count")?),
            "ARISTAS_NOREQ" | "NON_REQUIRED_EDGES" => {
                noreq_count = Some(parse_int(value, lineno, "count")?)
            }
            "CAPACIDAD" | "CAPACITY" => capacity = Some(parse_int(value, lineno, "capacity")?),
            "LISTA_ARISTAS_REQ" | "LIST_REQUIRED_EDGES" => block = Block::Required,
            "LISTA_ARISTAS_NOREQ" | "LIST_NON_REQUIRED_EDGES" => block = Block::NonRequired,
            "DEPOSITO" | "DEPOT" => {
                depot = Some((parse_int(value, lineno, "depot")?, lineno));
                block = Block::Header;
            }
            // VEHICULOS, COMENTARIO, TIPO_COSTES_ARISTAS, COSTE_TOTAL_REQ, ...
            _ => {}
        }
    }

    let vertices = vertices.ok_or_else(|| syntax(0, "missing VERTICES"))?;
    if vertices <= 0 {
        return Err(InstanceError::NoVertices.into());
    }
    let capacity = capacity.ok_or_else(|| syntax(0, "missing CAPACIDAD"))?;
    let (depot, depot_line) = depot.ok_or_else(|| syntax(0, "missing DEPOSITO"))?;
    if let Some(n) = req_count {
        if n != required.len() as i64 {
            return Err(syntax(
                0,
                format!("ARISTAS_REQ declares {n} edges, list has {}", required.len()),
            ));
        }
    }
    if let Some(n) = noreq_count {
        if n != non_required.len() as i64 {
            return Err(syntax(
                0,
                format!("ARISTAS_NOREQ declares {n} edges, list has {}", non_required.len()),
            ));
        }
    }

    let vertex = |v: i64, line: usize| -> Result<usize, LoadError> {
        if v < 1 || v > vertices {
            return Err(InstanceError::DanglingVertex {
                edge: line,
                vertex: v.max(0) as usize,
                vertex_count: vertices as usize,
            }
            .into());
        }
        Ok((v - 1) as usize)
    };
    let mut edges = Vec::with_capacity(required.len() + non_required.len());
    for ((u, v, cost, demand), line) in required.into_iter().chain(non_required) {
        edges.push(Edge {
            u: vertex(u, line)?,
            v: vertex(v, line)?,
            demand,
            service_cost: cost,
            deadheading_cost: cost,
        });
    }
    if depot < 1 || depot > vertices {
        return Err(syntax(depot_line, format!("depot {depot} is not a vertex")));
    }
    Ok(Instance::new(
        name,
        vertices as usize,
        edges,
        (depot - 1) as usize,
        capacity,
    )?)
}

pub fn load_instance_file(path: impl AsRef<std::path::Path>) -> Result<Instance, LoadError> {
    load_instance(std::fs::File::open(path)?)
}

/// Writes an instance in the canonical DAT layout. Required edges are written
/// before non-required ones; service cost is written as `coste`.
pub fn write_instance(instance: &Instance) -> String {
    let (req, noreq): (Vec<&Edge>, Vec<&Edge>) =
        instance.edges.iter().partition(|e| e.is_required());
    let mut out = String::new();
    let _ = writeln!(out, "NOMBRE : {}", instance.name);
    let _ = writeln!(out, "VERTICES : {}", instance.vertex_count);
    let _ = writeln!(out, "ARISTAS_REQ : {}", req.len());
    let _ = writeln!(out, "ARISTAS_NOREQ : {}", noreq.len());
    let _ = writeln!(out, "VEHICULOS : -1");
    let _ = writeln!(out, "CAPACIDAD : {}", instance.capacity);
    let _ = writeln!(out, "TIPO_COSTES_ARISTAS : EXPLICITOS");
    let _ = writeln!(out, "COSTE_TOTAL_REQ : {}", instance.total_service_cost());
    let _ = writeln!(out, "LISTA_ARISTAS_REQ :");
    for e in req {
        let _ = writeln!(
            out,
            " ( {}, {})  coste {} demanda {}",
            e.u + 1,
            e.v + 1,
            e.service_cost,
            e.demand
        );
    }
    let _ = writeln!(out, "LISTA_ARISTAS_NOREQ :");
    for e in noreq {
        let _ = writeln!(out, " ( {}, {})  coste {}", e.u + 1, e.v + 1, e.deadheading_cost);
    }
    let _ = writeln!(out, "DEPOSITO :   {}", instance.depot + 1);
    out
}

#[derive(Debug, Error)]
pub enum SolutionReadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: no unserved task on edge ({u},{v})")]
    NoSuchTask { line: usize, u: usize, v: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Serializes a solution: `cost <total>` followed by one `route <k>:` line per
/// route listing `(head,tail)` pairs, 1-based.
pub fn write_solution(solution: &Solution, instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cost {}", solution.total_cost());
    for (k, route) in solution.routes().iter().enumerate() {
        let _ = write!(out, "route {}:", k + 1);
        for &id in route.interior() {
            let _ = write!(out, " ({},{})", instance.head(id) + 1, instance.tail(id) + 1);
        }
        out.push('\n');
    }
    out
}

/// Parsed solution plus the cost written in its header line.
#[derive(Clone, Debug)]
pub struct ReadSolution {
    pub solution: Solution,
    pub declared_cost: Cost,
}

/// Reads a solution written by [`write_solution`]. Each `(u,v)` pair is matched to
/// the lowest-indexed task on that edge not yet used; with parallel required
/// edges this keeps the total cost but may permute which copy a route serves.
pub fn read_solution(
    source: impl Read,
    instance: &Instance,
    dist: &DistanceTable,
) -> Result<ReadSolution, SolutionReadError> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, t) in instance.tasks.iter().enumerate() {
        by_edge.entry((t.u.min(t.v), t.u.max(t.v))).or_default().push(i);
    }
    let mut used = vec![false; instance.task_count()];
    let mut declared = None;
    let mut routes = Vec::new();

    let err = |line: usize, message: &str| SolutionReadError::Syntax {
        line,
        message: message.to_string(),
    };
    for (idx, line) in std::io::BufReader::new(source).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("cost") {
            declared = Some(
                rest.trim()
                    .parse::<Cost>()
                    .map_err(|_| err(lineno, "malformed cost line"))?,
            );
            continue;
        }
        let Some(rest) = text.strip_prefix("route") else {
            return Err(err(lineno, "expected `cost` or `route` line"));
        };
        let (_, pairs) = rest
            .split_once(':')
            .ok_or_else(|| err(lineno, "route line without `:`"))?;
        let mut interior = Vec::new();
        for pair in pairs.split_whitespace() {
            let inner = pair
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| err(lineno, "task must be written `(u,v)`"))?;
            let (h, t) = inner
                .split_once(',')
                .ok_or_else(|| err(lineno, "task must be written `(u,v)`"))?;
            let h: usize = h.trim().parse().map_err(|_| err(lineno, "bad vertex"))?;
            let t: usize = t.trim().parse().map_err(|_| err(lineno, "bad vertex"))?;
            if h == 0 || t == 0 {
                return Err(err(lineno, "vertices are 1-based"));
            }
            let (h, t) = (h - 1, t - 1);
            let task = by_edge
                .get(&(h.min(t), h.max(t)))
                .and_then(|c| c.iter().copied().find(|&i| !used[i]))
                .ok_or(SolutionReadError::NoSuchTask {
                    line: lineno,
                    u: h + 1,
                    v: t + 1,
                })?;
            used[task] = true;
            let fwd = TaskId::forward(task);
            let id = if instance.head(fwd) == h && instance.tail(fwd) == t {
                fwd
            } else {
                fwd.inv()
            };
            interior.push(id);
        }
        routes.push(Route::from_interior(&interior, instance, dist));
    }
    let declared_cost = declared.ok_or_else(|| err(0, "missing `cost` line"))?;
    Ok(ReadSolution {
        solution: Solution::new(routes),
        declared_cost,
    })
}
