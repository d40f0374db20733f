//! Lattice medial axis of a closed surface sample, its spike filter, and
//! voxel volumes of ball unions.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{bounds_of, Point3, PointCloud, PointIndex};
use crate::skeleton::SkeletonBall;

pub const DEFAULT_EPS: f64 = 0.05;
pub const DEFAULT_MIN_ANGLE: f64 = PI / 6.0;
pub const DEFAULT_ANGLE_FLOOR: f64 = PI / 3.0;

/// Empty lattice cells kept on each side of the bounding box.
const PADDING: usize = 2;

/// Cubic lattice with per-node inside/outside flags.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorGrid {
    pub origin: Point3,
    pub spacing: f64,
    pub dims: [usize; 3],
    occupancy: Vec<bool>,
}

impl InteriorGrid {
    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    fn flat(&self, [i, j, k]: [usize; 3]) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn position(&self, cell: [usize; 3]) -> Point3 {
        self.origin + Point3::new(cell[0] as f64, cell[1] as f64, cell[2] as f64) * self.spacing
    }

    pub fn occupied(&self, cell: [usize; 3]) -> bool {
        self.occupancy[self.flat(cell)]
    }

    pub fn cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nx).flat_map(move |i| (0..ny).flat_map(move |j| (0..nz).map(move |k| [i, j, k])))
    }

    /// Positions of all inside nodes, in lattice order.
    pub fn interior_points(&self) -> Vec<Point3> {
        self.cells()
            .filter(|&c| self.occupied(c))
            .map(|c| self.position(c))
            .collect()
    }

    pub fn n_inside(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Flag of the lattice node nearest to `p`; points off the lattice are
    /// outside.
    pub fn is_inside(&self, p: Point3) -> bool {
        let rel = (p - self.origin) / self.spacing;
        let mut cell = [0usize; 3];
        for (axis, slot) in cell.iter_mut().enumerate() {
            let v = rel.coord(axis).round();
            if !(v >= 0.0 && v < self.dims[axis] as f64) {
                return false;
            }
            *slot = v as usize;
        }
        self.occupied(cell)
    }
}

fn inside_by_normal(index: &PointIndex, normals: &[Point3], q: Point3) -> bool {
    let (i, _) = index.nearest(q).expect("non-empty surface");
    normals[i].dot(q - index.points()[i]) < 0.0
}

/// Samples the cloud's bounding box (padded by two cells) on a cubic lattice
/// with `resolution` cells along the longest axis. Every axis has an odd
/// node count, so the box center is a node. A node is inside when it
/// lies behind the normal of its nearest surface sample.
pub fn interior_grid(cloud: &PointCloud, resolution: usize) -> Result<InteriorGrid> {
    let normals = cloud.require_normals("interior_grid")?;
    if resolution < 8 {
        return Err(Error::Parameter(format!(
            "grid resolution {resolution} must be at least 8"
        )));
    }
    let (lo, hi) = cloud
        .bounds()
        .ok_or_else(|| Error::EmptyInput("no surface points".into()))?;
    let extent = hi - lo;
    let longest = extent.x.max(extent.y).max(extent.z);
    if !(longest > 0.0) {
        return Err(Error::DegenerateExtent);
    }
    let spacing = longest / resolution as f64;
    let center = (lo + hi) * 0.5;
    let dims: [usize; 3] =
        std::array::from_fn(|axis| 2 * (0.5 * extent.coord(axis) / spacing).ceil() as usize + 1 + 2 * PADDING);
    let origin = Point3::from_array(std::array::from_fn(|axis| {
        center.coord(axis) - (dims[axis] - 1) as f64 * 0.5 * spacing
    }));
    let index = PointIndex::new(cloud.points());
    let mut grid = InteriorGrid {
        origin,
        spacing,
        dims,
        occupancy: Vec::with_capacity(dims.iter().product()),
    };
    let flags: Vec<bool> = grid
        .cells()
        .map(|c| inside_by_normal(&index, normals, grid.position(c)))
        .collect();
    grid.occupancy = flags;
    Ok(grid)
}

/// An interior point with at least two (near-)closest surface samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedialPoint {
    pub position: Point3,
    pub radius: f64,
    /// Largest angle between the normals at two closest samples, which
    /// stand in for the spoke directions.
    pub separation_angle: f64,
}

fn angle_between(a: Point3, b: Point3) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0).acos()
}

/// Medial points among the inside lattice nodes.
///
/// The closest samples of a node are the samples within `(1 + eps) d₁` of it
/// (`d₁` the nearest distance) whose spoke is nearly normal to the surface:
/// it may pass the sample's tangent plane foot by at most half a lattice
/// cell and deviate from the normal by at most `min_angle / 3`. A node is
/// medial when the normals at two of them differ by at least `min_angle`;
/// its radius is `d₁`.
pub fn medial_points(grid: &InteriorGrid, surface: &PointCloud, eps: f64, min_angle: f64) -> Result<Vec<MedialPoint>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps {eps} must be positive")));
    }
    if !(min_angle > 0.0 && min_angle < PI) {
        return Err(Error::Parameter(format!("min_angle {min_angle} must lie in (0, π)")));
    }
    let normals = surface.require_normals("medial_points")?;
    if surface.is_empty() {
        return Err(Error::EmptyInput("no surface points".into()));
    }
    let pts = surface.points();
    let index = PointIndex::new(pts);
    // two feet on one smooth patch can only subtend about twice this
    let tolerance = min_angle / 3.0;
    let reach = 0.5 * grid.spacing;
    let mut out = Vec::new();
    for q in grid.interior_points() {
        let (_, d2) = index.nearest(q).expect("non-empty surface");
        let d1 = d2.sqrt();
        if d1 == 0.0 {
            continue;
        }
        let feet: Vec<Point3> = index
            .within(q, d1 * (1.0 + eps))
            .into_iter()
            .filter(|&m| {
                let spoke = pts[m] - q;
                let along = spoke.dot(normals[m]);
                let offset = (spoke.norm_squared() - along * along).max(0.0).sqrt();
                offset <= reach && angle_between(spoke, normals[m]) <= tolerance
            })
            .map(|m| normals[m])
            .collect();
        let mut best = 0.0f64;
        for (a, &fa) in feet.iter().enumerate() {
            for &fb in &feet[a + 1..] {
                best = best.max(angle_between(fa, fb));
            }
        }
        if best >= min_angle {
            out.push(MedialPoint {
                position: q,
                radius: d1,
                separation_angle: best,
            });
        }
    }
    Ok(out)
}

/// Keeps medial points whose separation angle reaches `angle_floor`.
pub fn simplify_mat(points: &[MedialPoint], angle_floor: f64) -> Result<Vec<MedialPoint>> {
    if !(0.0..=PI).contains(&angle_floor) {
        return Err(Error::Parameter(format!(
            "angle_floor {angle_floor} must lie in [0, π]"
        )));
    }
    Ok(points
        .iter()
        .filter(|p| p.separation_angle >= angle_floor)
        .copied()
        .collect())
}

pub fn medial_balls(points: &[MedialPoint]) -> Vec<SkeletonBall> {
    points.iter().map(|p| SkeletonBall::new(p.position, p.radius)).collect()
}

/// `x y z r` per line.
pub fn write_medial_points(points: &[MedialPoint]) -> String {
    let mut s = String::new();
    for p in points {
        let Point3 { x, y, z } = p.position;
        writeln!(s, "{x} {y} {z} {}", p.radius).expect("writing to a String");
    }
    s
}

/// Volume of the union of balls, counted over voxel centers with
/// `resolution` voxels along the longest side of the union's bounding box.
pub fn reconstruct_volume(balls: &[SkeletonBall], resolution: usize) -> Result<f64> {
    if balls.is_empty() {
        return Err(Error::EmptyInput("no balls to reconstruct".into()));
    }
    if resolution < 16 {
        return Err(Error::Parameter(format!(
            "volume resolution {resolution} must be at least 16"
        )));
    }
    let corners: Vec<Point3> = balls
        .iter()
        .flat_map(|b| {
            let r = Point3::new(b.radius, b.radius, b.radius);
            [b.center - r, b.center + r]
        })
        .collect();
    let (lo, hi) = bounds_of(&corners).expect("non-empty");
    let extent = hi - lo;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Ok(0.0);
    }
    let h = longest / resolution as f64;
    let n = [0, 1, 2].map(|a| ((extent.coord(a) / h).ceil() as usize).max(1));
    let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
    let index = PointIndex::new(&centers);
    let reach = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
    let mut count = 0usize;
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let q = lo + Point3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                let hit = index
                    .within(q, reach)
                    .into_iter()
                    .any(|b| balls[b].center.distance_squared(q) <= balls[b].radius * balls[b].radius);
                count += usize::from(hit);
            }
        }
    }
    Ok(count as f64 * h * h * h)
}

/// `|v_recon − v_gt| / v_gt`.
pub fn vol_pct(v_recon: f64, v_gt: f64) -> Result<f64> {
    if !(v_gt > 0.0) {
        return Err(Error::Domain(format!("reference volume {v_gt} must be positive")));
    }
    if !(v_recon >= 0.0) {
        return Err(Error::Domain(format!(
            "reconstructed volume {v_recon} must be non-negative"
        )));
    }
    Ok((v_recon - v_gt).abs() / v_gt)
}

#[cfg(test)]
mod tests;
