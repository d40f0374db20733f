//! Spatially uniform subsampling of surface clouds.
//!
//! Every point carries a weight equal to its mean distance to its nearest
//! neighbours. Selection keeps a maximal set of points that are pairwise at
//! least `r` apart, scanning in lexicographic order, with `r` the largest
//! radius that still yields `m` points. Any surplus is eliminated one point at
//! a time, most crowded first (smallest nearest-kept distance, then smallest
//! weight, then a seeded random key).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bounds_of, Point3, PointCloud, PointIndex};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_NEIGHBORS: usize = 8;

const BISECTION_STEPS: usize = 60;

/// Draws `m` well-spread points out of `cloud`; normals follow their points.
pub fn weighted_sample(cloud: &PointCloud, m: usize, seed: u64) -> Result<PointCloud> {
    let idx = weighted_sample_indices(cloud.points(), m, seed)?;
    Ok(cloud.select(&idx))
}

/// Indices (ascending) of the sample chosen by [`weighted_sample`].
pub fn weighted_sample_indices(points: &[Point3], m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::EmptyInput("requested a sample of zero points".into()));
    }
    if m > points.len() {
        return Err(Error::Size(format!(
            "cannot sample {m} points from a cloud of {}",
            points.len()
        )));
    }
    if m == points.len() {
        return Ok((0..m).collect());
    }

    let weights = neighbor_weights(points, DEFAULT_SAMPLE_NEIGHBORS);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
            .then(a.cmp(&b))
    });

    let (lo, hi) = bounds_of(points).expect("non-empty");
    let mut r_lo = 0.0;
    let mut r_hi = (hi - lo).norm();
    let mut best: Vec<usize> = (0..points.len()).collect();
    for _ in 0..BISECTION_STEPS {
        let r = 0.5 * (r_lo + r_hi);
        if r <= r_lo || r >= r_hi {
            break;
        }
        let kept = separated_subset(points, &order, r);
        if kept.len() >= m {
            r_lo = r;
            best = kept;
            if best.len() == m {
                break;
            }
        } else {
            r_hi = r;
        }
    }

    if best.len() > m {
        best = eliminate(points, &weights, best, m, seed);
    }
    best.sort_unstable();
    Ok(best)
}

/// Mean distance from each point to its `k` nearest other points.
pub(crate) fn neighbor_weights(points: &[Point3], k: usize) -> Vec<f64> {
    let index = PointIndex::new(points);
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let nn: Vec<f64> = index
                .knn(p, k + 1)
                .into_iter()
                .filter(|&(j, _)| j != i)
                .take(k)
                .map(|(_, d2)| d2.sqrt())
                .collect();
            if nn.is_empty() {
                0.0
            } else {
                nn.iter().sum::<f64>() / nn.len() as f64
            }
        })
        .collect()
}

fn separated_subset(points: &[Point3], order: &[usize], r: f64) -> Vec<usize> {
    let r2 = r * r;
    let cell = |p: Point3| {
        (
            (p.x / r).floor() as i64,
            (p.y / r).floor() as i64,
            (p.z / r).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut kept = Vec::new();
    for &i in order {
        let p = points[i];
        let (cx, cy, cz) = cell(p);
        let mut clear = true;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if bucket.iter().any(|&j| points[j].distance_squared(p) < r2) {
                            clear = false;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if clear {
            grid.entry((cx, cy, cz)).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

#[derive(PartialEq)]
struct Crowding {
    nn: f64,
    weight: f64,
    key: f64,
    slot: usize,
}

impl Eq for Crowding {}

impl Ord for Crowding {
    // reversed: the heap pops the most crowded entry first
    fn cmp(&self, o: &Self) -> Ordering {
        o.nn.total_cmp(&self.nn)
            .then(o.weight.total_cmp(&self.weight))
            .then(o.key.total_cmp(&self.key))
            .then(o.slot.cmp(&self.slot))
    }
}

impl PartialOrd for Crowding {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn eliminate(points: &[Point3], weights: &[f64], kept: Vec<usize>, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<f64> = kept.iter().map(|_| rng.random::<f64>()).collect();
    let n = kept.len();
    let mut alive = vec![true; n];
    let mut nn = vec![(f64::INFINITY, usize::MAX); n];
    let nearest_alive = |s: usize, alive: &[bool]| {
        let mut best = (f64::INFINITY, usize::MAX);
        for t in 0..n {
            if t != s && alive[t] {
                let d = points[kept[s]].distance(points[kept[t]]);
                if d < best.0 {
                    best = (d, t);
                }
            }
        }
        best
    };
    let mut heap = BinaryHeap::with_capacity(n);
    for s in 0..n {
        nn[s] = nearest_alive(s, &alive);
        heap.push(Crowding {
            nn: nn[s].0,
            weight: weights[kept[s]],
            key: keys[s],
            slot: s,
        });
    }
    let mut remaining = n;
    while remaining > m {
        let top = heap.pop().expect("heap holds every live slot");
        if !alive[top.slot] || top.nn != nn[top.slot].0 {
            continue;
        }
        alive[top.slot] = false;
        remaining -= 1;
        for s in 0..n {
            if alive[s] && nn[s].1 == top.slot {
                nn[s] = nearest_alive(s, &alive);
                heap.push(Crowding {
                    nn: nn[s].0,
                    weight: weights[kept[s]],
                    key: keys[s],
                    slot: s,
                });
            }
        }
    }
    (0..n).filter(|&s| alive[s]).map(|s| kept[s]).collect()
}

/// Farthest-point ordering starting from `start`; returns `n` indices.
pub fn farthest_point_indices(points: &[Point3], n: usize, start: usize) -> Vec<usize> {
    let n = n.min(points.len());
    if n == 0 {
        return Vec::new();
    }
    let mut chosen = vec![start];
    let mut dist: Vec<f64> = points.iter().map(|p| p.distance_squared(points[start])).collect();
    while chosen.len() < n {
        let mut best = 0;
        for i in 1..points.len() {
            if dist[i] > dist[best] {
                best = i;
            }
        }
        chosen.push(best);
        let c = points[best];
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(p.distance_squared(c));
        }
    }
    chosen
}
