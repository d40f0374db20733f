use super::SkeletonBall;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{chamfer_distance, CdMode, Point3, PointCloud, PointIndex};

const SPOKE_FLOOR: f64 = 1e-12;

/// Directions of a spherical Fibonacci lattice with `k` points.
pub fn fibonacci_directions(k: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / k as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Point3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// Index of the nearest center for every point, lowest index on ties.
pub fn center_nearest(centers: &[Point3], points: &[Point3]) -> Vec<usize> {
    points
        .iter()
        .map(|&p| {
            let mut best = (f64::INFINITY, 0);
            for (j, &c) in centers.iter().enumerate() {
                let d = p.distance_squared(c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

fn require_balls(balls: &[SkeletonBall]) -> Result<()> {
    if balls.is_empty() {
        return Err(Error::EmptyInput("no skeleton balls".into()));
    }
    Ok(())
}

/// Bidirectional sum of nearest distances between sphere samples `t` and
/// surface `p`.
pub fn loss_sampling(t: &[Point3], p: &[Point3]) -> Result<f64> {
    chamfer_distance(t, p, CdMode::Sum)
}

/// Point-to-sphere reconstruction error: absolute gaps between surface
/// distances and radii.
pub fn loss_point_to_sphere(p: &[Point3], balls: &[SkeletonBall]) -> Result<f64> {
    require_balls(balls)?;
    if p.is_empty() {
        return Err(Error::EmptyInput("no surface points".into()));
    }
    let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
    let mut total = 0.0;
    for (&q, j) in p.iter().zip(center_nearest(&centers, p)) {
        total += (q.distance(centers[j]) - balls[j].radius).abs();
    }
    let index = PointIndex::new(p);
    for b in balls {
        let (_, d2) = index.nearest(b.center).expect("non-empty");
        total += (d2.sqrt() - b.radius).abs();
    }
    Ok(total)
}

/// Negated radius sum.
pub fn loss_radius(balls: &[SkeletonBall]) -> f64 {
    -balls.iter().map(|b| b.radius).sum::<f64>()
}

/// Spoke misalignment `1 − n·u` over each ball's nearest surface point and
/// each surface point's nearest ball, where `u` is the unit spoke from the
/// center to the surface point.
pub fn loss_norm(p: &PointCloud, balls: &[SkeletonBall]) -> Result<f64> {
    require_balls(balls)?;
    let normals = p.require_normals("loss_norm")?;
    if p.is_empty() {
        return Err(Error::EmptyInput("no surface points".into()));
    }
    let term = |c: Point3, q: Point3, n: Point3| {
        let spoke = q - c;
        1.0 - n.dot(spoke / spoke.norm().max(SPOKE_FLOOR))
    };
    let centers: Vec<Point3> = balls.iter().map(|b| b.center).collect();
    let index = PointIndex::new(p.points());
    let mut total = 0.0;
    for &c in &centers {
        let (i, _) = index.nearest(c).expect("non-empty");
        total += term(c, p.points()[i], normals[i]);
    }
    for ((&q, &n), j) in p.points().iter().zip(normals).zip(center_nearest(&centers, p.points())) {
        total += term(centers[j], q, n);
    }
    Ok(total)
}

/// Surface samples prepared for repeated loss evaluation.
pub struct Surface {
    points: Vec<Point3>,
    index: PointIndex,
    coords: Tensor,
    normals: Option<Tensor>,
}

/// Surface coordinates (and normals) bound as tape constants.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceVars {
    pub points: Var,
    pub normals: Option<Var>,
}

fn points_tensor(points: &[Point3]) -> Tensor {
    let data = points.iter().flat_map(|p| p.to_array()).collect();
    Tensor::new(points.len(), 3, data).expect("3 coordinates per point")
}

fn tensor_points(t: &Tensor) -> Vec<Point3> {
    (0..t.rows())
        .map(|i| Point3::new(t.get(i, 0), t.get(i, 1), t.get(i, 2)))
        .collect()
}

impl Surface {
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput("no surface points".into()));
        }
        Ok(Surface {
            points: cloud.points().to_vec(),
            index: PointIndex::new(cloud.points()),
            coords: points_tensor(cloud.points()),
            normals: cloud.normals().map(points_tensor),
        })
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

    pub fn bind(&self, tape: &mut Tape) -> SurfaceVars {
        SurfaceVars {
            points: tape.constant(self.coords.clone()),
            normals: self.normals.as_ref().map(|n| tape.constant(n.clone())),
        }
    }

    fn nearest_surface(&self, qs: &[Point3]) -> Vec<usize> {
        qs.iter()
            .map(|&q| self.index.nearest(q).expect("non-empty surface").0)
            .collect()
    }
}

/// Loss terms of one objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub total: Var,
    pub sampling: Var,
    pub point_to_sphere: Var,
    pub radius: Var,
    /// Absent when the normal weight is zero.
    pub norm: Option<Var>,
    pub centers: Var,
    pub radii: Var,
}

/// Tape versions of the losses. Nearest-neighbour correspondences are
/// recomputed from current values and enter as constant gathers.
pub mod tape {
    use super::*;

    /// Centers `Wᵀ P` and radii `Wᵀ D` from weight logits.
    pub fn centers_and_radii(t: &mut Tape, logits: Var, s: &Surface, sv: SurfaceVars) -> Result<(Var, Var)> {
        let (m, _) = t.shape(logits);
        if m != s.len() {
            return Err(Error::shape(
                "centers",
                format!("{m} logit rows for {} points", s.len()),
            ));
        }
        let w = t.column_softmax(logits)?;
        let wt = t.transpose(w)?;
        let c = t.matmul(wt, sv.points)?;
        let near = center_nearest(&tensor_points(t.value(c)), &s.points);
        let cg = t.gather_rows(c, &near)?;
        let diff = t.sub(sv.points, cg)?;
        let d = t.l2_norm(diff)?;
        let r = t.matmul(wt, d)?;
        Ok((c, r))
    }

    /// Chamfer sum between `k_s` lattice samples per ball and the surface.
    pub fn sampling(t: &mut Tape, c: Var, r: Var, s: &Surface, sv: SurfaceVars, dirs: &[Point3]) -> Result<Var> {
        let n = t.shape(c).0;
        let k = dirs.len();
        let owner: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat_n(j, k)).collect();
        let tiled: Vec<Point3> = (0..n).flat_map(|_| dirs.iter().copied()).collect();
        let cg = t.gather_rows(c, &owner)?;
        let rg = t.gather_rows(r, &owner)?;
        let d = t.constant(points_tensor(&tiled));
        let off = t.mul(rg, d)?;
        let samples = t.add(cg, off)?;
        let sample_points = tensor_points(t.value(samples));

        let to_surface = s.nearest_surface(&sample_points);
        let pg = t.gather_rows(sv.points, &to_surface)?;
        let diff = t.sub(samples, pg)?;
        let dist = t.l2_norm(diff)?;
        let forward = t.sum(dist)?;

        let sample_index = PointIndex::new(&sample_points);
        let to_samples: Vec<usize> = s
            .points
            .iter()
            .map(|&p| sample_index.nearest(p).expect("non-empty").0)
            .collect();
        let tg = t.gather_rows(samples, &to_samples)?;
        let diff = t.sub(sv.points, tg)?;
        let dist = t.l2_norm(diff)?;
        let backward = t.sum(dist)?;
        t.add(forward, backward)
    }

    pub fn point_to_sphere(t: &mut Tape, c: Var, r: Var, s: &Surface, sv: SurfaceVars) -> Result<Var> {
        let centers = tensor_points(t.value(c));
        let near_c = center_nearest(&centers, &s.points);
        let cg = t.gather_rows(c, &near_c)?;
        let diff = t.sub(sv.points, cg)?;
        let dist = t.l2_norm(diff)?;
        let rg = t.gather_rows(r, &near_c)?;
        let gap = t.sub(dist, rg)?;
        let gap = t.abs(gap)?;
        let first = t.sum(gap)?;

        let near_p = s.nearest_surface(&centers);
        let pg = t.gather_rows(sv.points, &near_p)?;
        let diff = t.sub(c, pg)?;
        let dist = t.l2_norm(diff)?;
        let gap = t.sub(dist, r)?;
        let gap = t.abs(gap)?;
        let second = t.sum(gap)?;
        t.add(first, second)
    }

    pub fn radius(t: &mut Tape, r: Var) -> Result<Var> {
        let s = t.sum(r)?;
        t.neg(s)
    }

    pub fn norm(t: &mut Tape, c: Var, s: &Surface, sv: SurfaceVars) -> Result<Var> {
        let normals = sv
            .normals
            .ok_or_else(|| Error::Precondition("the normal loss requires surface normals".into()))?;
        let centers = tensor_points(t.value(c));

        let near_p = s.nearest_surface(&centers);
        let pg = t.gather_rows(sv.points, &near_p)?;
        let ng = t.gather_rows(normals, &near_p)?;
        let spoke = t.sub(pg, c)?;
        let a = aligned(t, spoke, ng)?;

        let near_c = center_nearest(&centers, &s.points);
        let cg = t.gather_rows(c, &near_c)?;
        let spoke = t.sub(sv.points, cg)?;
        let b = aligned(t, spoke, normals)?;

        let both = t.add(a, b)?;
        let neg = t.neg(both)?;
        t.add_scalar(neg, (centers.len() + s.len()) as f64)
    }

    /// `Σ n·(spoke / |spoke|)`.
    fn aligned(t: &mut Tape, spoke: Var, normals: Var) -> Result<Var> {
        let len = t.l2_norm(spoke)?;
        let len = t.clamp(len, SPOKE_FLOOR, f64::INFINITY)?;
        let unit = t.div(spoke, len)?;
        let dots = t.dot(unit, normals)?;
        t.sum(dots)
    }

    /// `L_s + L_p + λ_r L_r + λ_n L_n` as a function of the weight logits.
    pub fn objective(
        t: &mut Tape,
        logits: Var,
        s: &Surface,
        sv: SurfaceVars,
        dirs: &[Point3],
        lambda_r: f64,
        lambda_n: f64,
    ) -> Result<LossTerms> {
        let (c, r) = centers_and_radii(t, logits, s, sv)?;
        let sampling = self::sampling(t, c, r, s, sv, dirs)?;
        let point_to_sphere = self::point_to_sphere(t, c, r, s, sv)?;
        let radius = self::radius(t, r)?;
        let mut total = t.add(sampling, point_to_sphere)?;
        let weighted = t.scale(radius, lambda_r)?;
        total = t.add(total, weighted)?;
        let norm = if lambda_n > 0.0 {
            let n = self::norm(t, c, s, sv)?;
            let weighted = t.scale(n, lambda_n)?;
            total = t.add(total, weighted)?;
            Some(n)
        } else {
            None
        };
        Ok(LossTerms {
            total,
            sampling,
            point_to_sphere,
            radius,
            norm,
            centers: c,
            radii: r,
        })
    }
}
