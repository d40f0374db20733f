//! Normal estimation from k-nearest-neighbour covariance.

use std::collections::BinaryHeap;

use super::{Point3, PointCloud, PointIndex};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

pub const DEFAULT_NORMAL_NEIGHBORS: usize = 16;

/// Attaches unit normals to every point.
///
/// Each normal is the smallest-eigenvalue eigenvector of the covariance of
/// the point's `k` nearest neighbours (itself included). Signs are made
/// consistent by propagating along a minimum spanning tree of the k-NN graph,
/// with edge cost `1 - |n_i·n_j|`; finally each connected piece is flipped so
/// that most of its normals point away from the cloud centroid.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::Parameter(format!("normal estimation needs k >= 3, got {k}")));
    }
    let pts = cloud.points();
    if pts.len() < k {
        return Err(Error::Size(format!(
            "normal estimation with k = {k} needs at least {k} points, got {}",
            pts.len()
        )));
    }
    let index = PointIndex::new(pts);
    let neighbors: Vec<Vec<usize>> = pts
        .iter()
        .map(|&p| index.knn(p, k).into_iter().map(|(i, _)| i).collect())
        .collect();
    let mut normals: Vec<Point3> = neighbors
        .iter()
        .map(|nb| smallest_axis(&nb.iter().map(|&i| pts[i]).collect::<Vec<_>>()))
        .collect();

    orient(pts, &neighbors, &mut normals);

    let mut out = cloud.clone();
    out.set_normals(normals)?;
    Ok(out)
}

fn smallest_axis(nb: &[Point3]) -> Point3 {
    let n = nb.len() as f64;
    let mean = nb.iter().fold(Point3::ORIGIN, |a, &p| a + p) / n;
    let mut cov = [0.0; 9];
    for &p in nb {
        let d = (p - mean).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i * 3 + j] += d[i] * d[j] / n;
            }
        }
    }
    let (values, vectors) = symmetric_eigen(&cov, 3);
    let k = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap();
    Point3::new(vectors[k][0], vectors[k][1], vectors[k][2])
        .normalized()
        .unwrap_or(Point3::new(0.0, 0.0, 1.0))
}

#[derive(PartialEq)]
struct Frontier {
    cost: f64,
    from: usize,
    to: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then(o.to.cmp(&self.to))
            .then(o.from.cmp(&self.from))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

fn orient(pts: &[Point3], neighbors: &[Vec<usize>], normals: &mut [Point3]) {
    let n = pts.len();
    // symmetric k-NN graph
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }

    let centroid = pts.iter().fold(Point3::ORIGIN, |a, &p| a + p) / n as f64;
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        // Prim's tree over this component, flipping children to agree with parents.
        let mut component = vec![root];
        visited[root] = true;
        let mut heap = BinaryHeap::new();
        let push_edges = |i: usize, heap: &mut BinaryHeap<Frontier>, normals: &[Point3], visited: &[bool]| {
            for &j in &adj[i] {
                if !visited[j] {
                    heap.push(Frontier {
                        cost: 1.0 - normals[i].dot(normals[j]).abs(),
                        from: i,
                        to: j,
                    });
                }
            }
        };
        push_edges(root, &mut heap, normals, &visited);
        while let Some(Frontier { from, to, .. }) = heap.pop() {
            if visited[to] {
                continue;
            }
            visited[to] = true;
            if normals[from].dot(normals[to]) < 0.0 {
                normals[to] = -normals[to];
            }
            component.push(to);
            push_edges(to, &mut heap, normals, &visited);
        }
        let outward = component
            .iter()
            .filter(|&&i| normals[i].dot(pts[i] - centroid) >= 0.0)
            .count();
        if 2 * outward < component.len() {
            for &i in &component {
                normals[i] = -normals[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{synth_shape, ShapeKind, SynthShapeSpec};

    #[test]
    fn plane_normals_are_consistent() {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                pts.push(Point3::new(
                    i as f64 * 0.1,
                    j as f64 * 0.13 + (i % 3) as f64 * 0.01,
                    0.0,
                ));
            }
        }
        let cloud = estimate_normals(&PointCloud::new(pts).unwrap(), 8).unwrap();
        let normals = cloud.normals().unwrap();
        let sign = normals[0].z.signum();
        for n in normals {
            assert!(n.x.abs() < 1e-9 && n.y.abs() < 1e-9);
            assert!((n.z - sign).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_normals_match_radial_directions() {
        let spec = SynthShapeSpec::new(ShapeKind::Sphere { radius: 1.0 }, 2000);
        let mut cloud = synth_shape(&spec, 11).unwrap();
        cloud.clear_normals();
        let est = estimate_normals(&cloud, DEFAULT_NORMAL_NEIGHBORS).unwrap();
        let mut total = 0.0;
        for (p, n) in est.points().iter().zip(est.normals().unwrap()) {
            assert!((n.norm() - 1.0).abs() < 1e-6);
            total += n.dot(p.normalized().unwrap()).clamp(-1.0, 1.0).acos();
        }
        let mean_deg = (total / est.len() as f64).to_degrees();
        assert!(mean_deg < 5.0, "mean angular error {mean_deg} deg");
    }

    #[test]
    fn parameter_and_size_errors() {
        let cloud = PointCloud::new(vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(estimate_normals(&cloud, 3), Err(Error::Size(_))));
        assert!(matches!(estimate_normals(&cloud, 2), Err(Error::Parameter(_))));
    }
}
