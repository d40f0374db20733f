//! Skeleton balls as convex combinations of surface points.
//!
//! Centers are `C = Wᵀ P` for a column-stochastic weight matrix `W`, radii
//! `R = Wᵀ D` where `D` holds each surface point's distance to its nearest
//! center. The weights are fitted per shape by minimising the sampling,
//! point-to-sphere, radius and spoke-normal losses.

mod loss;
mod optimize;

use std::fmt::Write as _;
use std::path::Path;

pub use loss::{
    center_nearest, fibonacci_directions, loss_norm, loss_point_to_sphere, loss_radius, loss_sampling, tape, LossTerms,
    Surface, SurfaceVars,
};
pub use optimize::{optimize_skeleton, skeletonize, SkeletonOptConfig, SkeletonResult};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

/// One medial ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonBall {
    pub center: Point3,
    pub radius: f64,
}

impl SkeletonBall {
    pub const fn new(center: Point3, radius: f64) -> Self {
        SkeletonBall { center, radius }
    }
}

/// Logits of an `M′×N` weight matrix; weights are their column softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    logits: Tensor,
}

impl WeightMatrix {
    pub fn from_logits(logits: Tensor) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::EmptyInput("weight matrix has no entries".into()));
        }
        if !logits.is_finite() {
            return Err(Error::NonFinite("weight logits".into()));
        }
        Ok(WeightMatrix { logits })
    }

    /// Weight matrix whose column `j` puts all its mass on point `rows[j]`
    /// (up to `e^-60`).
    pub fn one_hot(m: usize, rows: &[usize]) -> Result<Self> {
        let mut logits = Tensor::zeros(m, rows.len());
        for (j, &i) in rows.iter().enumerate() {
            if i >= m {
                return Err(Error::shape("one_hot", format!("row {i} of {m}")));
            }
            logits.set(i, j, 60.0);
        }
        WeightMatrix::from_logits(logits)
    }

    pub fn logits(&self) -> &Tensor {
        &self.logits
    }

    pub fn n_points(&self) -> usize {
        self.logits.rows()
    }

    pub fn n_balls(&self) -> usize {
        self.logits.cols()
    }

    pub fn weights(&self) -> Tensor {
        let mut t = crate::autodiff::Tape::new();
        let l = t.constant(self.logits.clone());
        let w = t.column_softmax(l).expect("softmax of finite logits is finite");
        t.value(w).clone()
    }

    /// Weights as CSV, one row per surface point.
    pub fn to_csv(&self) -> String {
        let w = self.weights();
        let mut s = String::new();
        for i in 0..w.rows() {
            let row: Vec<String> = w.row(i).iter().map(|v| format!("{v:.9e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    fn check_points(&self, op: &'static str, n: usize) -> Result<()> {
        if self.n_points() != n {
            return Err(Error::shape(
                op,
                format!("weights have {} rows for {n} points", self.n_points()),
            ));
        }
        Ok(())
    }
}

/// `C = Wᵀ P`.
pub fn compute_centers(w: &WeightMatrix, p: &PointCloud) -> Result<Vec<Point3>> {
    w.check_points("compute_centers", p.len())?;
    let wt = w.weights();
    let mut out = vec![Point3::ORIGIN; w.n_balls()];
    for (i, &pi) in p.points().iter().enumerate() {
        for (j, c) in out.iter_mut().enumerate() {
            *c += pi * wt.get(i, j);
        }
    }
    Ok(out)
}

/// `R = Wᵀ D`, with `D_i` the distance from point `i` to its nearest center.
pub fn compute_radii(w: &WeightMatrix, p: &PointCloud, centers: &[Point3]) -> Result<Vec<f64>> {
    w.check_points("compute_radii", p.len())?;
    if centers.len() != w.n_balls() {
        return Err(Error::shape(
            "compute_radii",
            format!("{} centers for {} weight columns", centers.len(), w.n_balls()),
        ));
    }
    let wt = w.weights();
    let nearest = center_nearest(centers, p.points());
    let mut out = vec![0.0; centers.len()];
    for (i, &pi) in p.points().iter().enumerate() {
        let d = pi.distance(centers[nearest[i]]);
        for (j, r) in out.iter_mut().enumerate() {
            *r += wt.get(i, j) * d;
        }
    }
    Ok(out)
}

/// `k_s` points per ball on a spherical Fibonacci lattice.
pub fn sample_sphere_points(balls: &[SkeletonBall], k_s: usize) -> Result<PointCloud> {
    if k_s < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 samples per sphere, got {k_s}"
        )));
    }
    let dirs = fibonacci_directions(k_s);
    let mut points = Vec::with_capacity(balls.len() * k_s);
    for b in balls {
        points.extend(dirs.iter().map(|&d| b.center + d * b.radius));
    }
    PointCloud::new(points)
}

/// Balls as text, one `x y z r` line each.
pub fn write_balls(balls: &[SkeletonBall]) -> String {
    let mut s = String::new();
    for b in balls {
        let Point3 { x, y, z } = b.center;
        writeln!(s, "{x} {y} {z} {}", b.radius).expect("writing to a String");
    }
    s
}

pub fn parse_balls(text: &str) -> Result<Vec<SkeletonBall>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected finite numbers".into(),
            })?;
        if vals.len() != 4 || vals[3] < 0.0 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 'x y z r' with r >= 0, got {} fields", vals.len()),
            });
        }
        out.push(SkeletonBall::new(Point3::new(vals[0], vals[1], vals[2]), vals[3]));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("no balls in skeleton file".into()));
    }
    Ok(out)
}

pub fn load_balls(path: impl AsRef<Path>) -> Result<Vec<SkeletonBall>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_balls(&text)
}

#[cfg(test)]
mod tests;
