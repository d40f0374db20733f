//! SWC neuron skeletons: `id type x y z radius parent` per sample.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{GraphNode, SkeletonGraph};
use crate::error::{Error, Result};
use crate::geometry::Point3;

pub fn load_swc(path: impl AsRef<Path>) -> Result<SkeletonGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_swc(&text)
}

/// Parses SWC text into a graph with one node per sample, in file order,
/// and one edge per parent link. Several roots give a forest.
pub fn parse_swc(text: &str) -> Result<SkeletonGraph> {
    let mut ids = Vec::new();
    let mut parents = Vec::new();
    let mut nodes = Vec::new();
    let mut index: HashMap<i64, usize> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(parse_err(format!("expected 7 fields, found {}", fields.len())));
        }
        let int = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| parse_err(format!("'{s}' is not an integer")))
        };
        let real = |s: &str| match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(format!("'{s}' is not a finite number"))),
        };
        let id = int(fields[0])?;
        int(fields[1])?;
        let position = Point3::new(real(fields[2])?, real(fields[3])?, real(fields[4])?);
        let radius = real(fields[5])?;
        let parent = int(fields[6])?;
        if index.insert(id, nodes.len()).is_some() {
            return Err(Error::DuplicateId(id));
        }
        ids.push(id);
        parents.push(parent);
        nodes.push(GraphNode { position, radius });
    }
    if nodes.is_empty() {
        return Err(Error::EmptyInput("SWC file has no samples".into()));
    }
    let mut edges = Vec::new();
    for (child, &parent) in parents.iter().enumerate() {
        if parent < 0 {
            continue;
        }
        let &p = index.get(&parent).ok_or(Error::MissingReference(parent))?;
        if p == child {
            return Err(Error::Validation(format!("sample {} is its own parent", ids[child])));
        }
        edges.push((child, p));
    }
    SkeletonGraph::from_edges(nodes, &edges)
}

/// Writes a spanning forest of `g` as SWC, ids `1..=n` in node order.
/// Each component is rooted at its smallest node; edges closing a cycle
/// are not representable and are dropped.
pub fn write_swc(g: &SkeletonGraph) -> String {
    let n = g.n_nodes();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
    }
    let mut out = String::from("# id type x y z radius parent\n");
    for (i, node) in g.nodes().iter().enumerate() {
        let p = parent[i].map_or(-1, |p| p as i64 + 1);
        let Point3 { x, y, z } = node.position;
        writeln!(out, "{} 0 {x} {y} {z} {} {p}", i + 1, node.radius).expect("writing to a String");
    }
    out
}
