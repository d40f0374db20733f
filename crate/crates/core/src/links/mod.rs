//! Skeleton-mesh connectivity: geometric priors, a graph auto-encoder that
//! predicts the remaining links, and binarisation.

mod gae;

use std::fmt::Write as _;
use std::path::Path;

pub(crate) use gae::gcn_propagation;
pub use gae::{gae_train, mbce_loss, GaeConfig, LinkPrediction};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::skeleton::{center_nearest, parse_balls, SkeletonBall, WeightMatrix};

/// Symmetric boolean adjacency with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = Adjacency::new(n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::Validation(format!("edge ({i}, {j}) invalid for {n} nodes")));
            }
            a.set(i, j, true);
        }
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn has(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. The diagonal stays empty.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i != j {
            self.bits[i * self.n + j] = value;
            self.bits[j * self.n + i] = value;
        }
    }

    /// Edges with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.bits[i * self.n..(i + 1) * self.n].iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Adjacency) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Component label per node, numbered in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for (i, j) in self.edges() {
            uf.union(i, j);
        }
        uf.labels()
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `a` and `b`; false when already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if map[r] == usize::MAX {
                    map[r] = next;
                    next += 1;
                }
                map[r]
            })
            .collect()
    }
}

/// Prior labels: `known_edges` are trusted links, `known_mask` marks every
/// entry whose label (link or no link) is trusted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyInit {
    pub known_edges: Adjacency,
    pub known_mask: Adjacency,
}

impl AdjacencyInit {
    pub fn len(&self) -> usize {
        self.known_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known_edges.is_empty()
    }

    pub fn is_known_false(&self, i: usize, j: usize) -> bool {
        self.known_mask.has(i, j) && !self.known_edges.has(i, j)
    }
}

/// Sphere overlap or mutual `k`-nearest centers mark a known link; pairs
/// with neither and a gap beyond `3 (r_i + r_j)` are known non-links.
pub fn init_adjacency(balls: &[SkeletonBall], k: usize) -> Result<AdjacencyInit> {
    let n = balls.len();
    if n < 2 {
        return Err(Error::Size(format!(
            "link initialisation needs at least 2 balls, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::Parameter("mutual-neighbour count k must be at least 1".into()));
    }
    let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
    let knn: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (centers[i].distance_squared(centers[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut known_edges = Adjacency::new(n);
    let mut known_mask = Adjacency::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let d = centers[i].distance(centers[j]);
            let reach = balls[i].radius + balls[j].radius;
            let overlap = d <= reach;
            let mutual = knn[i].contains(&j) && knn[j].contains(&i);
            if overlap || mutual {
                known_edges.set(i, j, true);
                known_mask.set(i, j, true);
            } else if d > 3.0 * reach {
                known_mask.set(i, j, true);
            }
        }
    }
    Ok(AdjacencyInit {
        known_edges,
        known_mask,
    })
}

pub const NODE_FEATURE_WIDTH: usize = 7;

/// Per-ball features `[c, r, prior degree, mean spoke length, local count]`.
///
/// Surface points are assigned to the ball with the largest weight in their
/// row of `weights`, or to the nearest center when no weights are given.
/// Local count is the assigned fraction of the surface, mean spoke length
/// the mean distance from the assigned points to the center. Both are zero
/// without surface samples.
pub fn node_features(
    balls: &[SkeletonBall],
    init: &AdjacencyInit,
    samples: Option<&PointCloud>,
    weights: Option<&WeightMatrix>,
) -> Result<Tensor> {
    let n = balls.len();
    if init.len() != n {
        return Err(Error::shape(
            "node_features",
            format!("{n} balls, adjacency over {}", init.len()),
        ));
    }
    let mut spoke = vec![0.0; n];
    let mut count = vec![0usize; n];
    let mut total = 0usize;
    if let Some(cloud) = samples {
        let owner: Vec<usize> = match weights {
            Some(w) => {
                if w.n_points() != cloud.len() || w.n_balls() != n {
                    return Err(Error::shape(
                        "node_features",
                        format!(
                            "weights {}x{} for {} points and {n} balls",
                            w.n_points(),
                            w.n_balls(),
                            cloud.len()
                        ),
                    ));
                }
                let wt = w.weights();
                (0..wt.rows())
                    .map(|i| {
                        let row = wt.row(i);
                        (0..n).fold(0, |best, j| if row[j] > row[best] { j } else { best })
                    })
                    .collect()
            }
            None => {
                let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
                center_nearest(&centers, cloud.points())
            }
        };
        for (&p, &j) in cloud.points().iter().zip(&owner) {
            spoke[j] += p.distance(balls[j].center);
            count[j] += 1;
        }
        total = cloud.len();
    }
    let mut data = Vec::with_capacity(n * NODE_FEATURE_WIDTH);
    for (j, b) in balls.iter().enumerate() {
        let mean_spoke = if count[j] > 0 { spoke[j] / count[j] as f64 } else { 0.0 };
        let frac = if total > 0 { count[j] as f64 / total as f64 } else { 0.0 };
        data.extend_from_slice(&[
            b.center.x,
            b.center.y,
            b.center.z,
            b.radius,
            init.known_edges.degree(j) as f64,
            mean_spoke,
            frac,
        ]);
    }
    Tensor::new(n, NODE_FEATURE_WIDTH, data)
}

/// Binarises a prediction. Known links are kept, known non-links dropped
/// and unknown pairs linked when their probability reaches the threshold.
/// With `ensure_connected`, the shortest center-distance edges joining
/// distinct components are added Kruskal-style until one component remains.
pub fn threshold_links(
    pred: &LinkPrediction,
    init: &AdjacencyInit,
    centers: &[Point3],
    ensure_connected: bool,
) -> Result<Adjacency> {
    let n = init.len();
    if !(pred.threshold > 0.0 && pred.threshold < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold {} must lie in (0, 1)",
            pred.threshold
        )));
    }
    if pred.probabilities.shape() != (n, n) || centers.len() != n {
        return Err(Error::shape(
            "threshold_links",
            format!(
                "probabilities {:?}, {} centers, {n} nodes",
                pred.probabilities.shape(),
                centers.len()
            ),
        ));
    }
    let mut adj = Adjacency::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let link = if init.known_mask.has(i, j) {
                init.known_edges.has(i, j)
            } else {
                pred.probabilities.get(i, j) >= pred.threshold
            };
            adj.set(i, j, link);
        }
    }
    if ensure_connected {
        connect_components(&mut adj, centers);
    }
    Ok(adj)
}

/// Adds the minimum-length set of bridging edges between components.
pub fn connect_components(adj: &mut Adjacency, centers: &[Point3]) {
    let n = adj.len();
    let mut uf = UnionFind::new(n);
    let mut parts = n;
    for (i, j) in adj.edges() {
        if uf.union(i, j) {
            parts -= 1;
        }
    }
    if parts <= 1 {
        return;
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if uf.find(i) != uf.find(j) {
                pairs.push((centers[i].distance_squared(centers[j]), i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for (_, i, j) in pairs {
        if uf.union(i, j) {
            adj.set(i, j, true);
            parts -= 1;
            if parts == 1 {
                break;
            }
        }
    }
}

/// Configuration of the full link stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub k: usize,
    pub gae: GaeConfig,
    pub threshold: f64,
    pub ensure_connected: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            k: 2,
            gae: GaeConfig::default(),
            threshold: 0.5,
            ensure_connected: true,
        }
    }
}

/// Balls plus their links.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonMesh {
    pub balls: Vec<SkeletonBall>,
    pub adjacency: Adjacency,
}

/// Priors, auto-encoder and thresholding in sequence. When every pair is
/// already labelled by the priors the auto-encoder is skipped.
pub fn build_mesh(
    balls: &[SkeletonBall],
    samples: Option<&PointCloud>,
    weights: Option<&WeightMatrix>,
    cfg: &LinkConfig,
) -> Result<SkeletonMesh> {
    let init = init_adjacency(balls, cfg.k)?;
    let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
    let n = balls.len();
    let unknown = (0..n).any(|i| (i + 1..n).any(|j| !init.known_mask.has(i, j)));
    let mut pred = if unknown {
        let features = node_features(balls, &init, samples, weights)?;
        gae_train(&features, &init, &cfg.gae)?
    } else {
        LinkPrediction::empty(n)
    };
    pred.threshold = cfg.threshold;
    let adjacency = threshold_links(&pred, &init, &centers, cfg.ensure_connected)?;
    Ok(SkeletonMesh {
        balls: balls.to_vec(),
        adjacency,
    })
}

impl SkeletonMesh {
    /// `n_balls n_edges`, then `x y z r` per ball, then `i j` per edge.
    pub fn to_text(&self) -> String {
        let edges = self.adjacency.edges();
        let mut s = format!("{} {}\n", self.balls.len(), edges.len());
        s.push_str(&crate::skeleton::write_balls(&self.balls));
        for (i, j) in edges {
            writeln!(s, "{i} {j}").expect("writing to a String");
        }
        s
    }

    pub fn parse(text: &str) -> Result<SkeletonMesh> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("empty skeleton mesh".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse().ok())
            .collect::<Option<_>>()
            .filter(|v: &Vec<usize>| v.len() == 2)
            .ok_or_else(|| Error::Parse {
                line: hline + 1,
                message: "expected header 'n_balls n_edges'".into(),
            })?;
        let (nb, ne) = (counts[0], counts[1]);
        let rest: Vec<(usize, &str)> = lines.collect();
        if rest.len() != nb + ne {
            return Err(Error::Parse {
                line: rest.last().map_or(hline + 1, |l| l.0 + 1),
                message: format!("expected {} records after the header, found {}", nb + ne, rest.len()),
            });
        }
        let ball_text: String = rest[..nb].iter().map(|(_, l)| format!("{l}\n")).collect();
        let balls = if nb > 0 { parse_balls(&ball_text)? } else { Vec::new() };
        let mut adjacency = Adjacency::new(nb);
        for &(lineno, l) in &rest[nb..] {
            let ij: Vec<usize> = l
                .split_whitespace()
                .map(|f| f.parse().ok())
                .collect::<Option<_>>()
                .filter(|v: &Vec<usize>| v.len() == 2 && v[0] < nb && v[1] < nb && v[0] != v[1])
                .ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    message: format!("expected an edge 'i j' between distinct balls below {nb}"),
                })?;
            adjacency.set(ij[0], ij[1], true);
        }
        Ok(SkeletonMesh { balls, adjacency })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SkeletonMesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SkeletonMesh::parse(&text)
    }
}
