//! Weighted skeleton graphs and their morphometry.
//!
//! Neuron length is the longest simple path over all start nodes, found by
//! exhaustive depth-first search with visited marking. Branches are the
//! longest simple paths that leave the trunk and avoid every node already
//! assigned.

mod swc;

use std::cmp::Ordering;
use std::fmt::Write as _;

pub use swc::{load_swc, parse_swc, write_swc};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::links::Adjacency;
use crate::skeleton::SkeletonBall;

/// Default node-visit budget for one start-node search.
pub const DEFAULT_BUDGET: u64 = 5_000_000;

const WEIGHT_TOLERANCE: f64 = 1e-6;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    pub position: Point3,
    pub radius: f64,
}

/// Undirected graph whose edge weights are the distances between endpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkeletonGraph {
    nodes: Vec<GraphNode>,
    /// Neighbour lists sorted by neighbour index.
    adjacency: Vec<Vec<(usize, f64)>>,
    n_edges: usize,
}

/// A simple path and its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub length: f64,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub trunk: PathResult,
    pub branches: Vec<PathResult>,
    pub count: usize,
}

impl SkeletonGraph {
    pub fn new(nodes: Vec<GraphNode>) -> Result<Self> {
        if let Some(i) = nodes
            .iter()
            .position(|n| !n.position.is_finite() || !n.radius.is_finite())
        {
            return Err(Error::Validation(format!("node {i} has non-finite attributes")));
        }
        let n = nodes.len();
        Ok(SkeletonGraph {
            nodes,
            adjacency: vec![Vec::new(); n],
            n_edges: 0,
        })
    }

    /// Graph over `nodes` with the listed undirected edges.
    pub fn from_edges(nodes: Vec<GraphNode>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SkeletonGraph::new(nodes)?;
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Convenience constructor for zero-radius nodes at `points`.
    pub fn from_points(points: &[Point3], edges: &[(usize, usize)]) -> Result<Self> {
        let nodes = points
            .iter()
            .map(|&position| GraphNode { position, radius: 0.0 })
            .collect();
        SkeletonGraph::from_edges(nodes, edges)
    }

    /// Adds edge `i`–`j` weighted by the distance between the two nodes.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.nodes.len();
        if i >= n || j >= n {
            return Err(Error::Validation(format!(
                "edge ({i}, {j}) references a node outside 0..{n}"
            )));
        }
        if i == j {
            return Err(Error::Validation(format!("self-loop at node {i}")));
        }
        if self.adjacency[i].iter().any(|&(k, _)| k == j) {
            return Err(Error::Validation(format!("duplicate edge ({i}, {j})")));
        }
        let w = self.nodes[i].position.distance(self.nodes[j].position);
        if w <= 0.0 {
            return Err(Error::Validation(format!("edge ({i}, {j}) joins coincident nodes")));
        }
        for (a, b) in [(i, j), (j, i)] {
            let list = &mut self.adjacency[a];
            let at = list.partition_point(|&(k, _)| k < b);
            list.insert(at, (b, w));
        }
        self.n_edges += 1;
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Edges as `(i, j, weight)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for (i, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&(j, _)| j > i).map(|&(j, w)| (i, j, w)));
        }
        out
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency.get(i)?.iter().find(|&&(k, _)| k == j).map(|&(_, w)| w)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    /// Component label of every node, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_forest(&self) -> bool {
        self.n_edges + self.n_components() == self.nodes.len()
    }

    pub fn median_edge_weight(&self) -> Option<f64> {
        let mut w: Vec<f64> = self.edges().into_iter().map(|e| e.2).collect();
        if w.is_empty() {
            return None;
        }
        w.sort_by(f64::total_cmp);
        let m = w.len();
        Some(if m % 2 == 1 {
            w[m / 2]
        } else {
            0.5 * (w[m / 2 - 1] + w[m / 2])
        })
    }

    /// Same graph with node `i` moved to index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SkeletonGraph> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Validation("not a permutation of the node indices".into()));
        }
        let mut nodes = self.nodes.clone();
        for (i, &p) in perm.iter().enumerate() {
            nodes[p] = self.nodes[i];
        }
        let edges: Vec<(usize, usize)> = self.edges().iter().map(|&(i, j, _)| (perm[i], perm[j])).collect();
        SkeletonGraph::from_edges(nodes, &edges)
    }

    /// Re-checks the weight and structure invariants.
    pub fn validate(&self) -> Result<()> {
        for (i, list) in self.adjacency.iter().enumerate() {
            for w in list.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(Error::Validation(format!(
                        "node {i} has unsorted or duplicate neighbours"
                    )));
                }
            }
            for &(j, w) in list {
                let d = self.nodes[i].position.distance(self.nodes[j].position);
                if j == i || w <= 0.0 || (w - d).abs() > WEIGHT_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "edge ({i}, {j}) has weight {w}, distance {d}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the skeleton graph of a skeleton mesh.
pub fn from_mesh(balls: &[SkeletonBall], adjacency: &Adjacency) -> Result<SkeletonGraph> {
    if adjacency.len() != balls.len() {
        return Err(Error::shape(
            "from_mesh",
            format!("{} balls but adjacency over {} nodes", balls.len(), adjacency.len()),
        ));
    }
    let nodes = balls
        .iter()
        .map(|b| GraphNode {
            position: b.center,
            radius: b.radius,
        })
        .collect();
    SkeletonGraph::from_edges(nodes, &adjacency.edges())
}

impl PathResult {
    pub fn single(i: usize) -> Self {
        PathResult {
            length: 0.0,
            nodes: vec![i],
        }
    }

    pub fn n_edges(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Checks simplicity, adjacency of consecutive nodes and the length sum.
    pub fn validate(&self, g: &SkeletonGraph) -> Result<()> {
        let mut seen = vec![false; g.n_nodes()];
        let mut total = 0.0;
        for (k, &v) in self.nodes.iter().enumerate() {
            if v >= g.n_nodes() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Validation(format!(
                    "path repeats or leaves the graph at node {v}"
                )));
            }
            if k > 0 {
                let u = self.nodes[k - 1];
                total += g
                    .weight(u, v)
                    .ok_or_else(|| Error::Validation(format!("path steps across non-edge ({u}, {v})")))?;
            }
        }
        if (total - self.length).abs() > TIE_TOLERANCE * total.max(1.0) {
            return Err(Error::Validation(format!(
                "path length {} but edges sum to {total}",
                self.length
            )));
        }
        Ok(())
    }

    /// Longer first; equal lengths order by node sequence.
    fn better_than(&self, other: &PathResult) -> bool {
        let tol = TIE_TOLERANCE * self.length.max(other.length).max(1.0);
        if self.length > other.length + tol {
            true
        } else if self.length < other.length - tol {
            false
        } else {
            self.nodes.cmp(&other.nodes) == Ordering::Less
        }
    }
}

/// Depth-first search for the longest simple path starting at `start` that
/// never enters a `blocked` node. `Err` carries the best path found when
/// the visit budget runs out.
fn search(
    g: &SkeletonGraph,
    start: usize,
    blocked: Option<&[bool]>,
    budget: u64,
) -> std::result::Result<PathResult, PathResult> {
    let mut visited = match blocked {
        Some(b) => b.to_vec(),
        None => vec![false; g.n_nodes()],
    };
    visited[start] = true;
    let mut path = vec![start];
    let mut lengths = vec![0.0];
    let mut cursors = vec![0usize];
    let mut best = PathResult::single(start);
    let mut visits: u64 = 1;
    let mut candidate = PathResult::single(start);

    while let Some(cursor) = cursors.last_mut() {
        let u = *path.last().expect("path tracks cursors");
        let list = &g.adjacency[u];
        if *cursor < list.len() {
            let (v, w) = list[*cursor];
            *cursor += 1;
            if visited[v] {
                continue;
            }
            visits += 1;
            if visits > budget {
                return Err(best);
            }
            visited[v] = true;
            path.push(v);
            let len = lengths.last().expect("non-empty") + w;
            lengths.push(len);
            cursors.push(0);
            candidate.length = len;
            candidate.nodes.clone_from(&path);
            if candidate.better_than(&best) {
                std::mem::swap(&mut best, &mut candidate);
            }
        } else {
            cursors.pop();
            lengths.pop();
            let u = path.pop().expect("non-empty");
            visited[u] = false;
        }
    }
    Ok(best)
}

fn budget_error(budget: u64, best: PathResult) -> Error {
    Error::BudgetExceeded {
        budget,
        best: Box::new(best),
    }
}

fn check_budget(budget: u64) -> Result<()> {
    if budget == 0 {
        return Err(Error::Parameter("search budget must be at least 1".into()));
    }
    Ok(())
}

/// Longest simple path from node `i`.
pub fn longest_simple_path_from(g: &SkeletonGraph, i: usize, budget: u64) -> Result<PathResult> {
    check_budget(budget)?;
    if i >= g.n_nodes() {
        return Err(Error::Parameter(format!("start node {i} outside 0..{}", g.n_nodes())));
    }
    search(g, i, None, budget).map_err(|best| budget_error(budget, best))
}

/// Longest simple path over all start nodes: the neuron length.
///
/// The budget applies to each start-node search. If any search runs out,
/// the best path seen anywhere is returned inside the budget error.
pub fn neuron_length(g: &SkeletonGraph, budget: u64) -> Result<(f64, PathResult)> {
    check_budget(budget)?;
    if g.n_nodes() == 0 {
        return Err(Error::EmptyInput("graph has no nodes".into()));
    }
    // In a forest with positive weights every maximal path ends at leaves.
    let forest = g.is_forest();
    let mut best: Option<PathResult> = None;
    let mut exhausted = false;
    for s in 0..g.n_nodes() {
        if forest && g.degree(s) > 1 {
            continue;
        }
        let found = match search(g, s, None, budget) {
            Ok(p) => p,
            Err(p) => {
                exhausted = true;
                p
            }
        };
        if best.as_ref().is_none_or(|b| found.better_than(b)) {
            best = Some(found);
        }
    }
    let best = best.expect("at least one start node");
    if exhausted {
        return Err(budget_error(budget, best));
    }
    Ok((best.length, best))
}

/// Trunk plus branches, each branch the longest simple path from an assigned
/// node through unassigned nodes only. A start node keeps seeding branches
/// until nothing of at least `min_branch_len` remains, and branch nodes seed
/// further branches in turn.
pub fn branches(g: &SkeletonGraph, min_branch_len: f64, budget: u64) -> Result<BranchSet> {
    if !(min_branch_len >= 0.0) {
        return Err(Error::Parameter(format!(
            "min_branch_len {min_branch_len} must be non-negative"
        )));
    }
    let (_, trunk) = neuron_length(g, budget)?;
    branches_from_trunk(g, trunk, min_branch_len, budget)
}

fn branches_from_trunk(g: &SkeletonGraph, trunk: PathResult, min_branch_len: f64, budget: u64) -> Result<BranchSet> {
    let mut assigned = vec![false; g.n_nodes()];
    for &v in &trunk.nodes {
        assigned[v] = true;
    }
    let mut seeds = trunk.nodes.clone();
    let mut found = Vec::new();
    let mut k = 0;
    while k < seeds.len() {
        let s = seeds[k];
        loop {
            let path = search(g, s, Some(&assigned), budget).map_err(|best| budget_error(budget, best))?;
            if path.n_edges() == 0 || path.length < min_branch_len {
                break;
            }
            for &v in &path.nodes[1..] {
                assigned[v] = true;
                seeds.push(v);
            }
            found.push(path);
        }
        k += 1;
    }
    let count = found.len();
    Ok(BranchSet {
        trunk,
        branches: found,
        count,
    })
}

/// `2 ×` the median edge weight, or 0 for an edgeless graph.
pub fn default_min_branch_len(g: &SkeletonGraph) -> f64 {
    g.median_edge_weight().map_or(0.0, |m| 2.0 * m)
}

fn relative_difference(computed: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::Domain(format!("reference value {reference} must be positive")));
    }
    Ok((computed - reference).abs() / reference)
}

/// Relative length difference.
pub fn len_pct(computed: f64, reference: f64) -> Result<f64> {
    relative_difference(computed, reference)
}

/// Relative branch-count difference.
pub fn num_pct(computed: usize, reference: usize) -> Result<f64> {
    relative_difference(computed as f64, reference as f64)
}

/// One morphometry record.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphometry {
    pub graph_id: String,
    pub length: f64,
    pub n_branches: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub exact: bool,
}

pub const MORPHOMETRY_HEADER: &str = "graph_id,length,n_branches,n_nodes,n_edges,exact_flag";

impl Morphometry {
    /// Measures `g`. A search that runs out of budget yields the best-so-far
    /// values with `exact` cleared instead of an error.
    pub fn measure(graph_id: &str, g: &SkeletonGraph, min_branch_len: f64, budget: u64) -> Result<Self> {
        let (length, n_branches, exact) = match neuron_length(g, budget) {
            Ok((length, trunk)) => match branches_from_trunk(g, trunk, min_branch_len, budget) {
                Ok(b) => (length, b.count, true),
                Err(Error::BudgetExceeded { .. }) => (length, 0, false),
                Err(e) => return Err(e),
            },
            Err(Error::BudgetExceeded { best, .. }) => (best.length, 0, false),
            Err(e) => return Err(e),
        };
        Ok(Morphometry {
            graph_id: graph_id.to_string(),
            length,
            n_branches,
            n_nodes: g.n_nodes(),
            n_edges: g.n_edges(),
            exact,
        })
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{:.9},{},{},{},{}",
            self.graph_id,
            self.length,
            self.n_branches,
            self.n_nodes,
            self.n_edges,
            u8::from(self.exact)
        )
        .expect("writing to a String");
        s
    }
}

#[cfg(test)]
mod tests;
