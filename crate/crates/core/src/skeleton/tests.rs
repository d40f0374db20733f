use super::*;
use crate::autodiff::{grad_check, Tape};
use crate::geometry::{synth_shape, ShapeKind, SynthShapeSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere(count: usize, seed: u64) -> PointCloud {
    synth_shape(&SynthShapeSpec::new(ShapeKind::Sphere { radius: 1.0 }, count), seed).unwrap()
}

fn random_logits(m: usize, n: usize, seed: u64) -> Tensor {
    Tensor::random_normal(m, n, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn one_hot_centers_and_radii() {
    let p = sphere(20, 1);
    let w = WeightMatrix::one_hot(20, &[3, 7]).unwrap();
    let c = compute_centers(&w, &p).unwrap();
    assert!(c[0].distance(p.points()[3]) < 1e-12);
    assert!(c[1].distance(p.points()[7]) < 1e-12);
    let r = compute_radii(&w, &p, &c).unwrap();
    // point 3 is itself a center, so its nearest-center distance is zero
    assert!(r[0].abs() < 1e-12);
    let nearest = center_nearest(&c, p.points());
    let d7 = p.points()[7].distance(c[nearest[7]]);
    assert!((r[1] - d7).abs() < 1e-12);
}

#[test]
fn uniform_weights_on_symmetric_cloud_give_centroid() {
    let pts: Vec<Point3> = [1.0, -1.0]
        .iter()
        .flat_map(|&s| {
            [
                Point3::new(s, 0.0, 0.0),
                Point3::new(0.0, s * 2.0, 0.0),
                Point3::new(0.0, 0.0, s * 3.0),
            ]
        })
        .collect();
    let p = PointCloud::new(pts).unwrap();
    let w = WeightMatrix::from_logits(Tensor::zeros(6, 2)).unwrap();
    for c in compute_centers(&w, &p).unwrap() {
        assert!(c.norm() < 1e-15);
    }
}

#[test]
fn centered_ball_on_sphere_has_unit_radius() {
    let p = sphere(200, 2);
    let w = WeightMatrix::from_logits(random_logits(200, 1, 3)).unwrap();
    let r = compute_radii(&w, &p, &[Point3::ORIGIN]).unwrap();
    assert!((r[0] - 1.0).abs() < 1e-9);
}

#[test]
fn shape_errors() {
    let p = sphere(10, 1);
    let w = WeightMatrix::from_logits(Tensor::zeros(9, 2)).unwrap();
    assert!(matches!(compute_centers(&w, &p), Err(Error::Shape { .. })));
    let w = WeightMatrix::from_logits(Tensor::zeros(10, 2)).unwrap();
    assert!(matches!(
        compute_radii(&w, &p, &[Point3::ORIGIN]),
        Err(Error::Shape { .. })
    ));
}

#[test]
fn sphere_samples() {
    let t = sample_sphere_points(&[SkeletonBall::new(Point3::ORIGIN, 2.0)], 100).unwrap();
    assert_eq!(t.len(), 100);
    assert!(t.points().iter().all(|q| (q.norm() - 2.0).abs() < 1e-9));
    let c = Point3::new(1.0, 2.0, 3.0);
    let t = sample_sphere_points(&[SkeletonBall::new(c, 0.0)], 8).unwrap();
    assert!(t.points().iter().all(|&q| q == c));
    let b = SkeletonBall::new(c, 0.7);
    let t = sample_sphere_points(&[b, b], 16).unwrap();
    assert_eq!(t.points()[..16], t.points()[16..]);
    assert!(matches!(sample_sphere_points(&[b], 3), Err(Error::Parameter(_))));
}

#[test]
fn sampling_loss_examples() {
    let p = sphere(300, 4);
    assert_eq!(loss_sampling(p.points(), p.points()).unwrap(), 0.0);
    let dense = sphere(4000, 5);
    let ball = [SkeletonBall::new(Point3::ORIGIN, 1.0)];
    let losses: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&k| loss_sampling(sample_sphere_points(&ball, k).unwrap().points(), dense.points()).unwrap())
        .collect();
    assert!(losses[0] > losses[1] && losses[1] > losses[2], "{losses:?}");
    assert!(matches!(loss_sampling(&[], p.points()), Err(Error::EmptyInput(_))));
}

#[test]
fn point_to_sphere_examples() {
    let p = sphere(500, 6);
    let exact = loss_point_to_sphere(p.points(), &[SkeletonBall::new(Point3::ORIGIN, 1.0)]).unwrap();
    assert!(exact.abs() < 1e-9);
    let empty = loss_point_to_sphere(p.points(), &[SkeletonBall::new(Point3::ORIGIN, 0.0)]).unwrap();
    assert!((empty - 501.0).abs() < 1e-9);
    assert!(matches!(
        loss_point_to_sphere(p.points(), &[]),
        Err(Error::EmptyInput(_))
    ));
}

#[test]
fn radius_loss_examples() {
    let balls: Vec<SkeletonBall> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&r| SkeletonBall::new(Point3::ORIGIN, r))
        .collect();
    assert_eq!(loss_radius(&balls), -6.0);
    assert_eq!(loss_radius(&[SkeletonBall::new(Point3::ORIGIN, 0.0)]), 0.0);
    let mut t = Tape::new();
    let r = t.leaf(Tensor::column(vec![1.0, 2.0, 3.0]));
    let l = tape::radius(&mut t, r).unwrap();
    assert_eq!(t.backward(l).unwrap().wrt(r).data(), &[-1.0, -1.0, -1.0]);
}

#[test]
fn norm_loss_examples() {
    let p = sphere(500, 7);
    let centered = loss_norm(&p, &[SkeletonBall::new(Point3::ORIGIN, 1.0)]).unwrap();
    assert!(centered.abs() < 1e-6, "{centered}");
    let bare = PointCloud::new(p.points().to_vec()).unwrap();
    assert!(matches!(
        loss_norm(&bare, &[SkeletonBall::new(Point3::ORIGIN, 1.0)]),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn norm_loss_penalises_ball_outside_concave_shape() {
    let kind = ShapeKind::Crescent {
        major: 1.0,
        minor: 0.3,
        half_angle: 2.0,
    };
    let cloud = synth_shape(&SynthShapeSpec::new(kind, 3000), 8).unwrap();
    // the origin sits in the concavity, outside the solid
    let c = Point3::ORIGIN;
    assert!(!kind.contains(c));
    let normals = cloud.normals().unwrap();
    let (i, q) = cloud
        .points()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance(c).total_cmp(&b.1.distance(c)))
        .unwrap();
    let spoke = (*q - c).normalized().unwrap();
    assert!(1.0 - normals[i].dot(spoke) > 1.0);
    // and the ball's share of the loss is the largest single term
    let inside = SkeletonBall::new(Point3::new(1.0, 0.0, 0.0), 0.3);
    let outside = SkeletonBall::new(c, 0.3);
    assert!(loss_norm(&cloud, &[outside]).unwrap() > loss_norm(&cloud, &[inside]).unwrap());
}

#[test]
fn tape_losses_match_plain_versions() {
    let p = sphere(60, 9);
    let logits = random_logits(60, 4, 10);
    let w = WeightMatrix::from_logits(logits.clone()).unwrap();
    let c = compute_centers(&w, &p).unwrap();
    let r = compute_radii(&w, &p, &c).unwrap();
    let balls: Vec<SkeletonBall> = c.iter().zip(&r).map(|(&c, &r)| SkeletonBall::new(c, r)).collect();

    let s = Surface::new(&p).unwrap();
    let mut t = Tape::new();
    let l = t.leaf(logits);
    let sv = s.bind(&mut t);
    let dirs = fibonacci_directions(16);
    let terms = tape::objective(&mut t, l, &s, sv, &dirs, 0.3, 0.1).unwrap();
    let samples = sample_sphere_points(&balls, 16).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9 * (1.0 + a.abs());
    assert!(close(
        t.value(terms.sampling).item(),
        loss_sampling(samples.points(), p.points()).unwrap()
    ));
    assert!(close(
        t.value(terms.point_to_sphere).item(),
        loss_point_to_sphere(p.points(), &balls).unwrap()
    ));
    assert!(close(t.value(terms.radius).item(), loss_radius(&balls)));
    assert!(close(
        t.value(terms.norm.unwrap()).item(),
        loss_norm(&p, &balls).unwrap()
    ));
}

fn check_term(which: &str, seed: u64) -> crate::autodiff::GradCheck {
    let p = sphere(10, 100 + seed);
    let s = Surface::new(&p).unwrap();
    let dirs = fibonacci_directions(4);
    let x = random_logits(10, 3, 200 + seed);
    grad_check(
        |t, logits| {
            let sv = s.bind(t);
            let (c, r) = tape::centers_and_radii(t, logits, &s, sv)?;
            match which {
                "sampling" => tape::sampling(t, c, r, &s, sv, &dirs),
                "point_to_sphere" => tape::point_to_sphere(t, c, r, &s, sv),
                "radius" => tape::radius(t, r),
                "norm" => tape::norm(t, c, &s, sv),
                _ => Ok(tape::objective(t, logits, &s, sv, &dirs, 0.3, 0.1)?.total),
            }
        },
        &x,
        1e-5,
    )
    .unwrap()
}

#[test]
fn loss_gradients_match_finite_differences() {
    for which in ["sampling", "point_to_sphere", "radius", "norm", "total"] {
        for seed in 0..10 {
            let r = check_term(which, seed);
            assert!(r.max_rel_error < 1e-4, "{which} seed {seed}: {r:?}");
            assert!(r.checked > 0);
        }
    }
}

#[test]
fn optimizer_preconditions() {
    let p = sphere(50, 11);
    let bare = PointCloud::new(p.points().to_vec()).unwrap();
    let cfg = SkeletonOptConfig {
        n_skeleton_points: 4,
        iterations: 5,
        ..SkeletonOptConfig::default()
    };
    assert!(matches!(optimize_skeleton(&bare, &cfg), Err(Error::Precondition(_))));
    let too_many = SkeletonOptConfig {
        n_skeleton_points: 51,
        ..cfg.clone()
    };
    assert!(matches!(optimize_skeleton(&p, &too_many), Err(Error::Parameter(_))));
    let zero = SkeletonOptConfig { iterations: 0, ..cfg };
    assert!(matches!(optimize_skeleton(&p, &zero), Err(Error::Parameter(_))));
}

#[test]
fn optimizer_is_deterministic_and_stochastic_in_columns() {
    let p = sphere(300, 12);
    let cfg = SkeletonOptConfig {
        n_skeleton_points: 6,
        iterations: 40,
        input_samples: 200,
        seed: 5,
        ..SkeletonOptConfig::default()
    };
    let a = optimize_skeleton(&p, &cfg).unwrap();
    let b = optimize_skeleton(&p, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples.len(), 200);
    assert_eq!(a.loss_trace.len(), 40);
    let w = a.weights.weights();
    for j in 0..w.cols() {
        let total: f64 = (0..w.rows()).map(|i| w.get(i, j)).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
    for ball in &a.balls {
        assert!(ball.center.norm() <= 1.0 + 1e-9);
        assert!(ball.radius >= 0.0 && ball.radius <= 2.0);
    }
    assert!(a.loss_trace.last() < a.loss_trace.first());
}

#[test]
fn lambda_n_zero_drops_the_normal_term() {
    let p = sphere(40, 13);
    let s = Surface::new(&p).unwrap();
    let dirs = fibonacci_directions(8);
    let x = random_logits(40, 3, 14);
    let mut t = Tape::new();
    let l = t.leaf(x);
    let sv = s.bind(&mut t);
    let with = tape::objective(&mut t, l, &s, sv, &dirs, 0.3, 0.0).unwrap();
    assert!(with.norm.is_none());
    let expected =
        t.value(with.sampling).item() + t.value(with.point_to_sphere).item() + 0.3 * t.value(with.radius).item();
    assert!((t.value(with.total).item() - expected).abs() < 1e-12);
}

#[test]
fn ball_text_round_trip() {
    let balls = vec![
        SkeletonBall::new(Point3::new(0.1, -0.2, 0.3), 0.25),
        SkeletonBall::new(Point3::new(1.0 / 3.0, 2.0, -5.5), 1e-3),
    ];
    assert_eq!(parse_balls(&write_balls(&balls)).unwrap(), balls);
    assert!(matches!(parse_balls("1 2 3\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_balls("1 2 3 -1\n"), Err(Error::Parse { .. })));
    assert!(matches!(parse_balls(""), Err(Error::EmptyInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn centers_stay_in_hull_and_radii_bounded(seed in any::<u64>(), n in 1usize..6) {
        let p = sphere(30, seed);
        let w = WeightMatrix::from_logits(random_logits(30, n, seed ^ 1)).unwrap();
        let c = compute_centers(&w, &p).unwrap();
        prop_assert!(c.iter().all(|c| c.norm() <= 1.0 + 1e-9));
        let r = compute_radii(&w, &p, &c).unwrap();
        prop_assert!(r.iter().all(|&r| (0.0..=2.0 + 1e-9).contains(&r)));
    }
}
