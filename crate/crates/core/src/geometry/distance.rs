//! Set distances between point clouds.

use super::{Point3, PointIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CdMode {
    /// Sum over both directions of nearest-neighbour distances.
    #[default]
    Sum,
    /// Each directional sum divided by its set size.
    Mean,
}

fn check(a: &[Point3], b: &[Point3]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "distance between point sets needs both non-empty".into(),
        ));
    }
    Ok(())
}

fn directed_sum(from: &[Point3], to: &PointIndex) -> f64 {
    from.iter().map(|&p| to.nearest(p).expect("non-empty").1.sqrt()).sum()
}

/// Bidirectional Chamfer distance.
pub fn chamfer_distance(a: &[Point3], b: &[Point3], mode: CdMode) -> Result<f64> {
    check(a, b)?;
    let ia = PointIndex::new(a);
    let ib = PointIndex::new(b);
    let ab = directed_sum(a, &ib);
    let ba = directed_sum(b, &ia);
    Ok(match mode {
        CdMode::Sum => ab + ba,
        CdMode::Mean => ab / a.len() as f64 + ba / b.len() as f64,
    })
}

/// `max over a of min over b` of the point distance.
pub fn directed_hausdorff(a: &[Point3], b: &[Point3]) -> Result<f64> {
    check(a, b)?;
    let ib = PointIndex::new(b);
    Ok(a.iter()
        .map(|&p| ib.nearest(p).expect("non-empty").1)
        .fold(0.0, f64::max)
        .sqrt())
}

pub fn hausdorff_distance(a: &[Point3], b: &[Point3]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
