use super::{Point3, PointCloud};
use crate::error::{Error, Result};

/// `p ↦ (p + translation) · scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub translation: Point3,
    pub scale: f64,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform {
        translation: Point3::ORIGIN,
        scale: 1.0,
    };

    pub fn apply(&self, p: Point3) -> Point3 {
        (p + self.translation) * self.scale
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        p / self.scale - self.translation
    }

    /// Lengths (radii) scale but do not translate.
    pub fn apply_length(&self, r: f64) -> f64 {
        r * self.scale
    }

    /// Transform mapping the bounding box of `points` onto `[-1, 1]` along
    /// its longest axis, centred at the origin.
    pub fn fit(points: &[Point3]) -> Result<Self> {
        let (lo, hi) =
            super::bounds_of(points).ok_or_else(|| Error::EmptyInput("cannot normalize an empty cloud".into()))?;
        let center = (lo + hi) * 0.5;
        let half = [
            (hi.x - center.x).max(center.x - lo.x),
            (hi.y - center.y).max(center.y - lo.y),
            (hi.z - center.z).max(center.z - lo.z),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if half <= 0.0 || !half.is_finite() {
            return Err(Error::DegenerateExtent);
        }
        Ok(NormalizationTransform {
            translation: -center,
            scale: 1.0 / half,
        })
    }
}

/// Centres the bounding box at the origin and scales uniformly so the largest
/// absolute coordinate is 1. Normals are unaffected by a uniform scale.
pub fn normalize_to_unit_cube(cloud: &PointCloud) -> Result<(PointCloud, NormalizationTransform)> {
    let t = NormalizationTransform::fit(cloud.points())?;
    let points = cloud.points().iter().map(|&p| t.apply(p)).collect();
    let mut out = PointCloud::new(points)?;
    if let Some(n) = cloud.normals() {
        out.set_normals(n.to_vec())?;
    }
    Ok((out, t))
}
