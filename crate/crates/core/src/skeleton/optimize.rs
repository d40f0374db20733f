use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{fibonacci_directions, tape, Surface};
use super::{compute_centers, compute_radii, SkeletonBall, WeightMatrix};
use crate::autodiff::{Adam, Tape, Tensor};
use crate::error::{Error, Result};
use crate::geometry::{farthest_point_indices, normalize_to_unit_cube, weighted_sample, PointCloud};

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonOptConfig {
    /// Number of skeleton balls `N`.
    pub n_skeleton_points: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub lambda_r: f64,
    pub lambda_n: f64,
    /// Lattice samples per sphere in the sampling loss.
    pub sphere_samples: usize,
    /// Clouds larger than this are subsampled to `M′` points first.
    pub input_samples: usize,
    /// Width of the Gaussian kernel that biases column `j` towards the
    /// `j`-th farthest-point sample at initialisation.
    pub init_bandwidth: f64,
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for SkeletonOptConfig {
    fn default() -> Self {
        SkeletonOptConfig {
            n_skeleton_points: 64,
            iterations: 1500,
            learning_rate: 0.01,
            lambda_r: 0.3,
            lambda_n: 0.1,
            sphere_samples: 64,
            input_samples: 1024,
            init_bandwidth: 0.5,
            init_noise: 0.01,
            seed: 0,
        }
    }
}

impl SkeletonOptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n_skeleton_points == 0 {
            return bad("n_skeleton_points must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.lambda_r >= 0.0 && self.lambda_n >= 0.0) {
            return bad("loss weights must be non-negative".into());
        }
        if self.sphere_samples < 4 {
            return bad(format!("sphere_samples {} must be at least 4", self.sphere_samples));
        }
        if self.input_samples == 0 {
            return bad("input_samples must be at least 1".into());
        }
        if !(self.init_bandwidth > 0.0) || !(self.init_noise >= 0.0) {
            return bad("init_bandwidth must be positive and init_noise non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonResult {
    pub balls: Vec<SkeletonBall>,
    pub weights: WeightMatrix,
    /// Total loss before each update.
    pub loss_trace: Vec<f64>,
    /// The `M′` surface samples the weights refer to.
    pub samples: PointCloud,
}

fn at_iteration(e: Error, it: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::NonFinite(format!("{what} at iteration {it}")),
        other => other,
    }
}

/// Gaussian noise plus a kernel bias towards farthest-point seeds.
fn init_logits(samples: &PointCloud, n: usize, cfg: &SkeletonOptConfig, rng: &mut ChaCha8Rng) -> Tensor {
    let pts = samples.points();
    let start = rng.random_range(0..pts.len());
    let seeds = farthest_point_indices(pts, n, start);
    let mut logits = Tensor::random_normal(pts.len(), n, cfg.init_noise, rng);
    let h2 = 2.0 * cfg.init_bandwidth * cfg.init_bandwidth;
    for (i, &p) in pts.iter().enumerate() {
        for (j, &s) in seeds.iter().enumerate() {
            let v = logits.get(i, j) - p.distance_squared(pts[s]) / h2;
            logits.set(i, j, v);
        }
    }
    logits
}

/// Fits `N` balls to `p` by Adam descent on the weight logits.
pub fn optimize_skeleton(p: &PointCloud, cfg: &SkeletonOptConfig) -> Result<SkeletonResult> {
    cfg.validate()?;
    p.require_normals("optimize_skeleton")?;
    if p.is_empty() {
        return Err(Error::EmptyInput("no surface points".into()));
    }
    let samples = if p.len() > cfg.input_samples {
        weighted_sample(p, cfg.input_samples, cfg.seed)?
    } else {
        p.clone()
    };
    let n = cfg.n_skeleton_points;
    if n > samples.len() {
        return Err(Error::Parameter(format!(
            "{n} skeleton points requested from {} surface samples",
            samples.len()
        )));
    }
    let surface = Surface::new(&samples)?;
    let dirs = fibonacci_directions(cfg.sphere_samples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = vec![init_logits(&samples, n, cfg, &mut rng)];
    let mut adam = Adam::new(cfg.learning_rate, &params);
    let mut trace = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let mut t = Tape::new();
        let logits = t.leaf(params[0].clone());
        let sv = surface.bind(&mut t);
        let terms = tape::objective(&mut t, logits, &surface, sv, &dirs, cfg.lambda_r, cfg.lambda_n)
            .map_err(|e| at_iteration(e, it))?;
        trace.push(t.value(terms.total).item());
        let grad = t.backward(terms.total).map_err(|e| at_iteration(e, it))?.wrt(logits);
        adam.step(&mut params, &[grad]);
        if !params[0].is_finite() {
            return Err(Error::NonFinite(format!("adam update at iteration {it}")));
        }
        if it % 250 == 0 {
            log::debug!("skeleton iteration {it}: loss {:.6}", trace[it]);
        }
    }

    let weights = WeightMatrix::from_logits(params.pop().expect("one parameter"))?;
    let centers = compute_centers(&weights, &samples)?;
    let radii = compute_radii(&weights, &samples, &centers)?;
    let balls = centers
        .into_iter()
        .zip(radii)
        .map(|(c, r)| SkeletonBall::new(c, r))
        .collect();
    Ok(SkeletonResult {
        balls,
        weights,
        loss_trace: trace,
        samples,
    })
}

/// Normalizes `p` to the unit cube, optimizes, and maps balls and samples
/// back to the input frame.
pub fn skeletonize(p: &PointCloud, cfg: &SkeletonOptConfig) -> Result<SkeletonResult> {
    let (unit, tr) = normalize_to_unit_cube(p)?;
    let mut res = optimize_skeleton(&unit, cfg)?;
    for b in &mut res.balls {
        *b = SkeletonBall::new(tr.invert(b.center), b.radius / tr.scale);
    }
    let points = res.samples.points().iter().map(|&q| tr.invert(q)).collect();
    res.samples = match res.samples.normals() {
        Some(n) => PointCloud::with_normals(points, n.to_vec())?,
        None => PointCloud::new(points)?,
    };
    Ok(res)
}
