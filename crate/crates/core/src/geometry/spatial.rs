//! Nearest-neighbour queries over a fixed point set.
//!
//! Small sets are scanned exhaustively; larger ones go through a k-d tree.
//! Both paths order candidates by `(squared distance, index)`, so exact ties
//! always resolve to the lowest index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Point3;

const BRUTE_FORCE_BELOW: usize = 256;
const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PointIndex {
    pub fn new(points: &[Point3]) -> Self {
        let mut index = PointIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if points.len() >= BRUTE_FORCE_BELOW {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (lo, hi) = super::bounds_of(
            &self.order[start..end]
                .iter()
                .map(|&i| self.points[i])
                .collect::<Vec<_>>(),
        )
        .expect("non-empty range");
        let spread = hi - lo;
        let axis = if spread.x >= spread.y && spread.x >= spread.z {
            0
        } else if spread.y >= spread.z {
            1
        } else {
            2
        };
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a].coord(axis).total_cmp(&points[b].coord(axis)).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]].coord(axis);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Nearest point as `(index, squared distance)`.
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = Candidate {
            d2: f64::INFINITY,
            index: usize::MAX,
        };
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                let c = Candidate {
                    d2: p.distance_squared(q),
                    index: i,
                };
                if c < best {
                    best = c;
                }
            }
        } else {
            self.nearest_in(0, q, &mut best);
        }
        Some((best.index, best.d2))
    }

    fn nearest_in(&self, node: usize, q: Point3, best: &mut Candidate) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: self.points[i].distance_squared(q),
                        index: i,
                    };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.coord(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.d2 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest points sorted by `(squared distance, index)`.
    pub fn knn(&self, q: Point3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                push_bounded(
                    &mut heap,
                    Candidate {
                        d2: p.distance_squared(q),
                        index: i,
                    },
                    k,
                );
            }
        } else {
            self.knn_in(0, q, k, &mut heap);
        }
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.d2)).collect()
    }

    fn knn_in(&self, node: usize, q: Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    push_bounded(
                        heap,
                        Candidate {
                            d2: self.points[i].distance_squared(q),
                            index: i,
                        },
                        k,
                    );
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.coord(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_in(near, q, k, heap);
                let worst = heap.peek().map_or(f64::INFINITY, |c| c.d2);
                if heap.len() < k || diff * diff <= worst {
                    self.knn_in(far, q, k, heap);
                }
            }
        }
    }

    /// Indices of all points within distance `radius` of `q`, ascending.
    pub fn within(&self, q: Point3, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            out.extend(
                self.points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.distance_squared(q) <= r2)
                    .map(|(i, _)| i),
            );
        } else {
            self.within_in(0, q, r2, &mut out);
            out.sort_unstable();
        }
        out
    }

    fn within_in(&self, node: usize, q: Point3, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| self.points[i].distance_squared(q) <= r2),
                );
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.coord(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.within_in(near, q, r2, out);
                if diff * diff <= r2 {
                    self.within_in(far, q, r2, out);
                }
            }
        }
    }
}

fn push_bounded(heap: &mut BinaryHeap<Candidate>, c: Candidate, k: usize) {
    if heap.len() < k {
        heap.push(c);
    } else if let Some(top) = heap.peek() {
        if c < *top {
            heap.pop();
            heap.push(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    fn brute_knn(points: &[Point3], q: Point3, k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.distance_squared(q), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn tree_matches_exhaustive_scan() {
        let pts = random_points(2000, 3);
        let index = PointIndex::new(&pts);
        for q in random_points(200, 4) {
            let (i, _) = index.nearest(q).unwrap();
            assert_eq!(i, brute_knn(&pts, q, 1)[0]);
            let got: Vec<usize> = index.knn(q, 7).into_iter().map(|(i, _)| i).collect();
            assert_eq!(got, brute_knn(&pts, q, 7));
            let mut want: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].distance(q) <= 0.1).collect();
            want.sort();
            assert_eq!(index.within(q, 0.1), want);
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let mut pts: Vec<Point3> = vec![Point3::new(1.0, 0.0, 0.0); 300];
        pts.push(Point3::new(5.0, 5.0, 5.0));
        let index = PointIndex::new(&pts);
        assert_eq!(index.nearest(Point3::ORIGIN).unwrap().0, 0);
        let k: Vec<usize> = index.knn(Point3::ORIGIN, 3).into_iter().map(|c| c.0).collect();
        assert_eq!(k, vec![0, 1, 2]);
    }

    #[test]
    fn empty_index() {
        let index = PointIndex::new(&[]);
        assert!(index.nearest(Point3::ORIGIN).is_none());
        assert!(index.knn(Point3::ORIGIN, 3).is_empty());
    }
}
