use super::*;
use crate::geometry::{distance_to_segment, normalize_to_unit_cube, synth_shape, ShapeKind, SynthShapeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shape(kind: ShapeKind, count: usize, seed: u64) -> PointCloud {
    synth_shape(&SynthShapeSpec::new(kind, count), seed).unwrap()
}

fn sphere(count: usize) -> PointCloud {
    shape(ShapeKind::Sphere { radius: 1.0 }, count, 1)
}

#[test]
fn sphere_occupancy_matches_volume_ratio() {
    let cloud = sphere(2000);
    let grid = interior_grid(&cloud, 32).unwrap();
    let (lo, hi) = cloud.bounds().unwrap();
    let (mut inside, mut total) = (0usize, 0usize);
    for c in grid.cells() {
        let p = grid.position(c);
        if (0..3).all(|a| p.coord(a) >= lo.coord(a) && p.coord(a) <= hi.coord(a)) {
            total += 1;
            inside += usize::from(grid.occupied(c));
        }
    }
    let frac = inside as f64 / total as f64;
    assert!((frac - PI / 6.0).abs() < 0.05, "{frac}");
    assert!(grid.is_inside(Point3::ORIGIN));
    assert!(!grid.is_inside(Point3::new(2.0, 0.0, 0.0)));
    assert!(!grid.is_inside(Point3::new(1.1, 0.0, 0.0)));
}

#[test]
fn grid_preconditions() {
    let cloud = sphere(200);
    let bare = PointCloud::new(cloud.points().to_vec()).unwrap();
    assert!(matches!(interior_grid(&bare, 32), Err(Error::Precondition(_))));
    assert!(matches!(interior_grid(&cloud, 7), Err(Error::Parameter(_))));
    let grid = interior_grid(&cloud, 16).unwrap();
    assert!(matches!(
        medial_points(&grid, &cloud, 0.0, 1.0),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        medial_points(&grid, &cloud, 0.05, PI),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn sphere_medial_points_collapse_to_center() {
    let cloud = sphere(2000);
    let grid = interior_grid(&cloud, 64).unwrap();
    let mat = medial_points(&grid, &cloud, 0.05, PI / 3.0).unwrap();
    assert!(!mat.is_empty());
    for p in &mat {
        assert!(p.position.norm() <= 2.0 * grid.spacing, "{p:?}");
        assert!((p.radius - 1.0).abs() < 0.05, "{p:?}");
    }
}

#[test]
fn sphere_medial_points_converge_with_resolution() {
    let cloud = sphere(3000);
    let spread = |res| {
        let grid = interior_grid(&cloud, res).unwrap();
        medial_points(&grid, &cloud, DEFAULT_EPS, DEFAULT_MIN_ANGLE)
            .unwrap()
            .iter()
            .map(|p| p.position.norm())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (spread(16), spread(32));
    assert!(coarse > 0.0 && fine > 0.0);
    let ratio = coarse / fine;
    assert!((2.0 / 3.0..=6.0).contains(&ratio), "{coarse} -> {fine}");
}

#[test]
fn capsule_medial_points_follow_the_axis() {
    let kind = ShapeKind::Capsule {
        length: 2.0,
        radius: 0.5,
    };
    let (cloud, tf) = normalize_to_unit_cube(&shape(kind, 3000, 2)).unwrap();
    let grid = interior_grid(&cloud, 64).unwrap();
    let mat = medial_points(&grid, &cloud, DEFAULT_EPS, DEFAULT_MIN_ANGLE).unwrap();
    assert!(mat.len() > 10);
    let (a, b) = kind.axis_segments()[0];
    let (a, b) = (tf.apply(a), tf.apply(b));
    for p in &mat {
        assert!(distance_to_segment(p.position, a, b) <= 2.0 * grid.spacing, "{p:?}");
    }
}

#[test]
fn ellipsoid_medial_points_are_planar() {
    let kind = ShapeKind::Ellipsoid { a: 1.0, b: 0.6, c: 0.3 };
    let cloud = shape(kind, 4000, 3);
    let grid = interior_grid(&cloud, 64).unwrap();
    let mat = medial_points(&grid, &cloud, DEFAULT_EPS, DEFAULT_MIN_ANGLE).unwrap();
    assert!(mat.len() > 10);
    for p in &mat {
        assert!(p.position.z.abs() < 2.0 * grid.spacing, "{p:?}");
    }
}

#[test]
fn radius_bounded_by_nearest_sample() {
    let cloud = shape(ShapeKind::Torus { major: 1.0, minor: 0.3 }, 2000, 4);
    let grid = interior_grid(&cloud, 32).unwrap();
    let mat = medial_points(&grid, &cloud, DEFAULT_EPS, DEFAULT_MIN_ANGLE).unwrap();
    let index = PointIndex::new(cloud.points());
    for p in &mat {
        let d = index.nearest(p.position).unwrap().1.sqrt();
        assert!(p.radius <= d + DEFAULT_EPS * p.radius);
        assert!((0.0..=PI).contains(&p.separation_angle));
    }
}

#[test]
fn simplification_filters_monotonically() {
    let base = sphere(2000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let jittered: Vec<Point3> = base
        .points()
        .iter()
        .map(|&p| p * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
        .collect();
    let cloud = PointCloud::with_normals(jittered, base.normals().unwrap().to_vec()).unwrap();
    let grid = interior_grid(&cloud, 32).unwrap();
    let mat = medial_points(&grid, &cloud, DEFAULT_EPS, DEFAULT_MIN_ANGLE).unwrap();
    assert_eq!(simplify_mat(&mat, 0.0).unwrap(), mat);
    assert!(simplify_mat(&mat, PI).unwrap().is_empty());
    let loose = simplify_mat(&mat, PI / 3.0).unwrap();
    let tight = simplify_mat(&mat, 2.0 * PI / 3.0).unwrap();
    assert!(tight.len() < loose.len(), "{} vs {}", tight.len(), loose.len());
    assert!(tight.iter().all(|p| loose.contains(p)));
    assert!(matches!(simplify_mat(&mat, -0.1), Err(Error::Parameter(_))));
}

#[test]
fn volume_of_single_and_coincident_balls() {
    let one = [SkeletonBall::new(Point3::ORIGIN, 1.0)];
    let v = reconstruct_volume(&one, 64).unwrap();
    let exact = 4.0 * PI / 3.0;
    assert!((v - exact).abs() / exact < 0.03, "{v}");
    let two = [one[0], one[0]];
    assert_eq!(reconstruct_volume(&two, 64).unwrap(), v);
    assert!(matches!(reconstruct_volume(&[], 64), Err(Error::EmptyInput(_))));
    assert!(matches!(reconstruct_volume(&one, 15), Err(Error::Parameter(_))));
}

#[test]
fn volume_of_disjoint_balls_adds() {
    let balls = [
        SkeletonBall::new(Point3::ORIGIN, 1.0),
        SkeletonBall::new(Point3::new(3.0, 0.0, 0.0), 1.0),
    ];
    let v = reconstruct_volume(&balls, 64).unwrap();
    let exact = 8.0 * PI / 3.0;
    assert!((v - exact).abs() / exact < 0.03, "{v}");
}

#[test]
fn volume_monotone_under_added_balls() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut balls = vec![SkeletonBall::new(Point3::ORIGIN, 0.5)];
    let mut last = reconstruct_volume(&balls, 32).unwrap();
    for _ in 0..6 {
        let c = Point3::new(
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.4..0.4),
        );
        balls.push(SkeletonBall::new(c, rng.random_range(0.05..0.3)));
        // the bounding box grows with the balls, so compare at a shared lattice
        let with_anchor: Vec<SkeletonBall> = balls
            .iter()
            .copied()
            .chain([
                SkeletonBall::new(Point3::new(-1.0, -1.0, -1.0), 0.0),
                SkeletonBall::new(Point3::new(1.0, 1.0, 1.0), 0.0),
            ])
            .collect();
        let v = reconstruct_volume(&with_anchor, 32).unwrap();
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn vol_pct_examples() {
    assert_eq!(vol_pct(10.0, 10.0).unwrap(), 0.0);
    assert!((vol_pct(11.0, 10.0).unwrap() - 0.1).abs() < 1e-12);
    assert!(matches!(vol_pct(1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn export_lines() {
    let p = MedialPoint {
        position: Point3::new(0.5, -1.0, 2.0),
        radius: 0.25,
        separation_angle: 1.0,
    };
    assert_eq!(write_medial_points(&[p]), "0.5 -1 2 0.25\n");
}
