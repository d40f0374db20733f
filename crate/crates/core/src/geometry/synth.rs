//! Synthetic test shapes sampled uniformly by surface area.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

/// Shape families with their dimensions. Every shape is centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    Sphere {
        radius: f64,
    },
    /// Cylinder of `length` along x between two hemispherical caps.
    Capsule {
        length: f64,
        radius: f64,
    },
    /// Semi-axes along x, y, z.
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Tube of radius `minor` around the circle of radius `major` in z = 0.
    Torus {
        major: f64,
        minor: f64,
    },
    /// Three capsule arms of equal length leaving the origin at 120° in z = 0.
    YBranch {
        arm_length: f64,
        radius: f64,
    },
    /// Torus arc spanning `[-half_angle, half_angle]` around +x, capped by
    /// hemispheres. Concave towards the origin.
    Crescent {
        major: f64,
        minor: f64,
        half_angle: f64,
    },
}

impl ShapeKind {
    pub const NAMES: [&'static str; 6] = ["sphere", "capsule", "ellipsoid", "torus", "ybranch", "crescent"];

    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Sphere { .. } => "sphere",
            ShapeKind::Capsule { .. } => "capsule",
            ShapeKind::Ellipsoid { .. } => "ellipsoid",
            ShapeKind::Torus { .. } => "torus",
            ShapeKind::YBranch { .. } => "ybranch",
            ShapeKind::Crescent { .. } => "crescent",
        }
    }

    /// Builds a kind from its name and dimensions in declaration order.
    /// Missing trailing dimensions take the defaults of [`FromStr`].
    pub fn from_name(name: &str, dims: &[f64]) -> Result<Self> {
        let base: ShapeKind = name.parse()?;
        let mut d = base.dims();
        if dims.len() > d.len() {
            return Err(Error::Parameter(format!(
                "{name} takes at most {} dimensions, got {}",
                d.len(),
                dims.len()
            )));
        }
        d[..dims.len()].copy_from_slice(dims);
        let kind = match base {
            ShapeKind::Sphere { .. } => ShapeKind::Sphere { radius: d[0] },
            ShapeKind::Capsule { .. } => ShapeKind::Capsule {
                length: d[0],
                radius: d[1],
            },
            ShapeKind::Ellipsoid { .. } => ShapeKind::Ellipsoid {
                a: d[0],
                b: d[1],
                c: d[2],
            },
            ShapeKind::Torus { .. } => ShapeKind::Torus {
                major: d[0],
                minor: d[1],
            },
            ShapeKind::YBranch { .. } => ShapeKind::YBranch {
                arm_length: d[0],
                radius: d[1],
            },
            ShapeKind::Crescent { .. } => ShapeKind::Crescent {
                major: d[0],
                minor: d[1],
                half_angle: d[2],
            },
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn dims(&self) -> Vec<f64> {
        match *self {
            ShapeKind::Sphere { radius } => vec![radius],
            ShapeKind::Capsule { length, radius } => vec![length, radius],
            ShapeKind::Ellipsoid { a, b, c } => vec![a, b, c],
            ShapeKind::Torus { major, minor } => vec![major, minor],
            ShapeKind::YBranch { arm_length, radius } => vec![arm_length, radius],
            ShapeKind::Crescent {
                major,
                minor,
                half_angle,
            } => vec![major, minor, half_angle],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Parameter(format!(
                "{} dimensions must be positive, got {dims:?}",
                self.name()
            )));
        }
        match *self {
            ShapeKind::Torus { major, minor } | ShapeKind::Crescent { major, minor, .. } if minor >= major => {
                Err(Error::Parameter(format!(
                    "{}: minor radius {minor} must be below major radius {major}",
                    self.name()
                )))
            }
            ShapeKind::Crescent { half_angle, .. } if half_angle >= PI => Err(Error::Parameter(format!(
                "crescent half_angle {half_angle} must be below pi"
            ))),
            _ => Ok(()),
        }
    }

    /// Line segments whose radius-`r` neighbourhood is the shape, for the
    /// capsule and branch shapes.
    pub fn axis_segments(&self) -> Vec<(Point3, Point3)> {
        match *self {
            ShapeKind::Capsule { length, .. } => {
                vec![(
                    Point3::new(-length / 2.0, 0.0, 0.0),
                    Point3::new(length / 2.0, 0.0, 0.0),
                )]
            }
            ShapeKind::YBranch { arm_length, .. } => ybranch_tips(arm_length)
                .into_iter()
                .map(|tip| (Point3::ORIGIN, tip))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Analytic point-in-solid test.
    pub fn contains(&self, p: Point3) -> bool {
        match *self {
            ShapeKind::Sphere { radius } => p.norm() < radius,
            ShapeKind::Capsule { radius, .. } | ShapeKind::YBranch { radius, .. } => self
                .axis_segments()
                .iter()
                .any(|&(a, b)| distance_to_segment(p, a, b) < radius),
            ShapeKind::Ellipsoid { a, b, c } => (p.x / a).powi(2) + (p.y / b).powi(2) + (p.z / c).powi(2) < 1.0,
            ShapeKind::Torus { major, minor } => {
                let rho = p.x.hypot(p.y);
                (rho - major).hypot(p.z) < minor
            }
            ShapeKind::Crescent {
                major,
                minor,
                half_angle,
            } => {
                let angle = p.y.atan2(p.x);
                if angle.abs() <= half_angle {
                    let rho = p.x.hypot(p.y);
                    if (rho - major).hypot(p.z) < minor {
                        return true;
                    }
                }
                crescent_ends(major, half_angle).iter().any(|&e| p.distance(e) < minor)
            }
        }
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    /// Parses a kind name into that kind with default dimensions.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => ShapeKind::Sphere { radius: 1.0 },
            "capsule" => ShapeKind::Capsule {
                length: 2.0,
                radius: 0.5,
            },
            "ellipsoid" => ShapeKind::Ellipsoid { a: 1.0, b: 0.6, c: 0.3 },
            "torus" => ShapeKind::Torus {
                major: 1.0,
                minor: 0.25,
            },
            "ybranch" => ShapeKind::YBranch {
                arm_length: 1.0,
                radius: 0.2,
            },
            "crescent" => ShapeKind::Crescent {
                major: 1.0,
                minor: 0.3,
                half_angle: 2.0,
            },
            other => {
                return Err(Error::Parameter(format!(
                    "unknown shape kind '{other}' (expected one of {})",
                    ShapeKind::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for d in self.dims() {
            write!(f, " {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthShapeSpec {
    pub kind: ShapeKind,
    pub count: usize,
}

impl SynthShapeSpec {
    pub fn new(kind: ShapeKind, count: usize) -> Self {
        SynthShapeSpec { kind, count }
    }
}

pub fn distance_to_segment(p: Point3, a: Point3, b: Point3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + ab * t)
}

fn ybranch_tips(arm: f64) -> [Point3; 3] {
    let at = |deg: f64| {
        let t = deg.to_radians();
        Point3::new(arm * t.cos(), arm * t.sin(), 0.0)
    };
    [at(90.0), at(210.0), at(330.0)]
}

fn crescent_ends(major: f64, half_angle: f64) -> [Point3; 2] {
    [
        Point3::new(major * half_angle.cos(), major * half_angle.sin(), 0.0),
        Point3::new(major * half_angle.cos(), -major * half_angle.sin(), 0.0),
    ]
}

fn unit_sphere(rng: &mut ChaCha8Rng) -> Point3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Point3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Orthonormal pair perpendicular to unit vector `u`.
fn frame(u: Point3) -> (Point3, Point3) {
    let helper = if u.x.abs() < 0.9 {
        Point3::new(1.0, 0.0, 0.0)
    } else {
        Point3::new(0.0, 1.0, 0.0)
    };
    let e1 = u.cross(helper).normalized().expect("non-parallel helper");
    (e1, u.cross(e1))
}

/// Uniform point on the surface of the capsule around segment `a`–`b`.
fn capsule_point(rng: &mut ChaCha8Rng, a: Point3, b: Point3, r: f64) -> (Point3, Point3) {
    let axis = b - a;
    let len = axis.norm();
    let u = axis / len;
    let side = 2.0 * PI * r * len;
    let caps = 4.0 * PI * r * r;
    if rng.random_range(0.0..side + caps) < side {
        let (e1, e2) = frame(u);
        let t: f64 = rng.random_range(0.0..=len);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let n = e1 * phi.cos() + e2 * phi.sin();
        (a + u * t + n * r, n)
    } else {
        let n = unit_sphere(rng);
        let c = if n.dot(u) >= 0.0 { b } else { a };
        (c + n * r, n)
    }
}

/// Samples `spec.count` points uniformly by area, with outward unit normals.
pub fn synth_shape(spec: &SynthShapeSpec, seed: u64) -> Result<PointCloud> {
    spec.kind.validate()?;
    if spec.count == 0 {
        return Err(Error::Parameter("shape sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(spec.count);
    let mut normals = Vec::with_capacity(spec.count);
    while points.len() < spec.count {
        if let Some((p, n)) = draw(&spec.kind, &mut rng) {
            points.push(p);
            normals.push(n.normalized().expect("analytic normals are nonzero"));
        }
    }
    PointCloud::with_normals(points, normals)
}

/// One rejection-sampling attempt.
fn draw(kind: &ShapeKind, rng: &mut ChaCha8Rng) -> Option<(Point3, Point3)> {
    match *kind {
        ShapeKind::Sphere { radius } => {
            let n = unit_sphere(rng);
            Some((n * radius, n))
        }
        ShapeKind::Capsule { radius, .. } => {
            let (a, b) = kind.axis_segments()[0];
            Some(capsule_point(rng, a, b, radius))
        }
        ShapeKind::Ellipsoid { a, b, c } => {
            let d = unit_sphere(rng);
            // area element of the map d -> (a dx, b dy, c dz) relative to the sphere
            let g = ((b * c * d.x).powi(2) + (a * c * d.y).powi(2) + (a * b * d.z).powi(2)).sqrt();
            let g_max = (b * c).max(a * c).max(a * b);
            if rng.random_range(0.0..g_max) >= g {
                return None;
            }
            let p = Point3::new(a * d.x, b * d.y, c * d.z);
            let n = Point3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c));
            Some((p, n))
        }
        ShapeKind::Torus { major, minor } => {
            let u: f64 = rng.random_range(0.0..2.0 * PI);
            torus_point(rng, major, minor, u)
        }
        ShapeKind::YBranch { radius, .. } => {
            let segs = kind.axis_segments();
            let arm = rng.random_range(0..segs.len());
            let (a, b) = segs[arm];
            let (p, n) = capsule_point(rng, a, b, radius);
            let buried = segs
                .iter()
                .enumerate()
                .any(|(k, &(a, b))| k != arm && distance_to_segment(p, a, b) < radius * (1.0 - 1e-9));
            (!buried).then_some((p, n))
        }
        ShapeKind::Crescent {
            major,
            minor,
            half_angle,
        } => {
            let tube = 2.0 * PI * minor * major * 2.0 * half_angle;
            let caps = 4.0 * PI * minor * minor;
            if rng.random_range(0.0..tube + caps) < tube {
                let u: f64 = rng.random_range(-half_angle..=half_angle);
                torus_point(rng, major, minor, u)
            } else {
                let mut n = unit_sphere(rng);
                let [top, bottom] = crescent_ends(major, half_angle);
                // outward arc tangents at the two ends
                let (end, t) = if rng.random_bool(0.5) {
                    (top, Point3::new(-half_angle.sin(), half_angle.cos(), 0.0))
                } else {
                    (bottom, Point3::new(-half_angle.sin(), -half_angle.cos(), 0.0))
                };
                if n.dot(t) < 0.0 {
                    n = n - t * (2.0 * n.dot(t));
                }
                Some((end + n * minor, n))
            }
        }
    }
}

fn torus_point(rng: &mut ChaCha8Rng, major: f64, minor: f64, u: f64) -> Option<(Point3, Point3)> {
    let v: f64 = rng.random_range(0.0..2.0 * PI);
    let w = (major + minor * v.cos()) / (major + minor);
    if rng.random_range(0.0..1.0) >= w {
        return None;
    }
    let n = Point3::new(v.cos() * u.cos(), v.cos() * u.sin(), v.sin());
    let centre = Point3::new(major * u.cos(), major * u.sin(), 0.0);
    Some((centre + n * minor, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(kind: ShapeKind, count: usize) -> PointCloud {
        synth_shape(&SynthShapeSpec::new(kind, count), 3).unwrap()
    }

    #[test]
    fn sphere_points_on_surface() {
        let c = cloud(ShapeKind::Sphere { radius: 1.0 }, 100);
        assert_eq!(c.len(), 100);
        for (p, n) in c.points().iter().zip(c.normals().unwrap()) {
            assert!((p.norm() - 1.0).abs() < 1e-9);
            assert!(p.distance(*n) < 1e-9);
        }
    }

    #[test]
    fn capsule_points_at_radius_from_axis() {
        let kind = ShapeKind::Capsule {
            length: 2.0,
            radius: 0.5,
        };
        let (a, b) = kind.axis_segments()[0];
        let c = cloud(kind, 1000);
        for p in c.points() {
            assert!((distance_to_segment(*p, a, b) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_points_at_minor_radius_from_circle() {
        let c = cloud(
            ShapeKind::Torus {
                major: 1.0,
                minor: 0.25,
            },
            1000,
        );
        for p in c.points() {
            let rho = p.x.hypot(p.y);
            assert!(((rho - 1.0).hypot(p.z) - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipsoid_on_surface_with_outward_normals() {
        let c = cloud(ShapeKind::Ellipsoid { a: 1.0, b: 0.6, c: 0.3 }, 500);
        for (p, n) in c.points().iter().zip(c.normals().unwrap()) {
            let f = p.x * p.x + (p.y / 0.6).powi(2) + (p.z / 0.3).powi(2);
            assert!((f - 1.0).abs() < 1e-9);
            assert!(n.dot(*p) > 0.0);
        }
    }

    #[test]
    fn ybranch_and_crescent_lie_on_boundary() {
        for kind in [
            ShapeKind::from_str("ybranch").unwrap(),
            ShapeKind::from_str("crescent").unwrap(),
        ] {
            let c = cloud(kind, 1500);
            for (p, n) in c.points().iter().zip(c.normals().unwrap()) {
                assert!(
                    kind.contains(*p - *n * 1e-6) && !kind.contains(*p + *n * 1e-6),
                    "{kind}: {p:?} not on boundary"
                );
                assert!(kind.contains(*p - *n * 1e-3), "{kind}: {p:?} inward step not inside");
                assert!(!kind.contains(*p + *n * 1e-3), "{kind}: {p:?} outward step inside");
            }
        }
    }

    #[test]
    fn capsule_area_split() {
        // caps take 4πr² / (4πr² + 2πrL) = 1/3 of the samples for L = 2, r = 0.5
        let c = cloud(
            ShapeKind::Capsule {
                length: 2.0,
                radius: 0.5,
            },
            6000,
        );
        let caps = c.points().iter().filter(|p| p.x.abs() > 1.0).count() as f64 / 6000.0;
        assert!((caps - 1.0 / 3.0).abs() < 0.03, "{caps}");
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthShapeSpec::new(ShapeKind::Torus { major: 1.0, minor: 0.3 }, 200);
        assert_eq!(synth_shape(&spec, 9).unwrap(), synth_shape(&spec, 9).unwrap());
        assert_ne!(synth_shape(&spec, 9).unwrap(), synth_shape(&spec, 10).unwrap());
    }

    #[test]
    fn parsing_and_validation() {
        assert!(matches!("cube".parse::<ShapeKind>(), Err(Error::Parameter(_))));
        assert_eq!(
            ShapeKind::from_name("capsule", &[3.0]).unwrap(),
            ShapeKind::Capsule {
                length: 3.0,
                radius: 0.5
            }
        );
        assert!(ShapeKind::from_name("sphere", &[-1.0]).is_err());
        assert!(ShapeKind::from_name("torus", &[0.2, 0.5]).is_err());
        assert!(ShapeKind::from_name("sphere", &[1.0, 2.0]).is_err());
    }

    #[test]
    fn segment_distance() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(2.0, 0.0, 0.0);
        assert_eq!(distance_to_segment(Point3::new(1.0, 3.0, 0.0), a, b), 3.0);
        assert_eq!(distance_to_segment(Point3::new(-3.0, 4.0, 0.0), a, b), 5.0);
        assert_eq!(distance_to_segment(Point3::new(5.0, 0.0, 0.0), a, a), 5.0);
    }
}
