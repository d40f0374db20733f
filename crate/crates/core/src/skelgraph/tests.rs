use super::*;
use proptest::prelude::*;

fn line(xs: &[f64]) -> Vec<Point3> {
    xs.iter().map(|&x| Point3::new(x, 0.0, 0.0)).collect()
}

fn path_graph() -> SkeletonGraph {
    SkeletonGraph::from_points(&line(&[0.0, 1.0, 3.0]), &[(0, 1), (1, 2)]).unwrap()
}

/// Collinear nodes 0, 1, 3: edge weights 1, 2 and 3.
fn triangle() -> SkeletonGraph {
    SkeletonGraph::from_points(&line(&[0.0, 1.0, 3.0]), &[(0, 1), (1, 2), (0, 2)]).unwrap()
}

fn star(arms: usize) -> SkeletonGraph {
    let dirs = [
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
    ];
    let mut pts = vec![Point3::ORIGIN];
    pts.extend(dirs.iter().take(arms));
    let edges: Vec<_> = (1..=arms).map(|k| (0, k)).collect();
    SkeletonGraph::from_points(&pts, &edges).unwrap()
}

/// S–A weight 3, A–B weight 3, A–C weight 2.
fn y_tree() -> SkeletonGraph {
    let pts = [
        Point3::new(0.0, -3.0, 0.0),
        Point3::ORIGIN,
        Point3::new(0.0, 3.0, 0.0),
        Point3::new(2.0, 0.0, 0.0),
    ];
    SkeletonGraph::from_points(&pts, &[(0, 1), (1, 2), (1, 3)]).unwrap()
}

/// Every simple path, by plain recursion.
fn brute_force_longest(g: &SkeletonGraph) -> f64 {
    fn go(g: &SkeletonGraph, u: usize, seen: &mut Vec<bool>, len: f64, best: &mut f64) {
        *best = best.max(len);
        for &(v, w) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                go(g, v, seen, len + w, best);
                seen[v] = false;
            }
        }
    }
    let mut best = 0.0;
    for s in 0..g.n_nodes() {
        let mut seen = vec![false; g.n_nodes()];
        seen[s] = true;
        go(g, s, &mut seen, 0.0, &mut best);
    }
    best
}

#[test]
fn from_path_examples() {
    let g = path_graph();
    let p = longest_simple_path_from(&g, 0, DEFAULT_BUDGET).unwrap();
    assert_eq!((p.length, p.nodes.clone()), (3.0, vec![0, 1, 2]));
    let p = longest_simple_path_from(&triangle(), 1, DEFAULT_BUDGET).unwrap();
    assert_eq!(p.length, 5.0);
    let p = longest_simple_path_from(&triangle(), 0, DEFAULT_BUDGET).unwrap();
    assert_eq!((p.length, p.nodes.clone()), (5.0, vec![0, 2, 1]));
    let single = SkeletonGraph::from_points(&[Point3::ORIGIN], &[]).unwrap();
    assert_eq!(longest_simple_path_from(&single, 0, 1).unwrap(), PathResult::single(0));
}

#[test]
fn neuron_length_examples() {
    assert_eq!(neuron_length(&path_graph(), DEFAULT_BUDGET).unwrap().0, 3.0);
    assert_eq!(neuron_length(&triangle(), DEFAULT_BUDGET).unwrap().0, 5.0);
    let (len, path) = neuron_length(&star(3), DEFAULT_BUDGET).unwrap();
    assert_eq!(len, 2.0);
    assert_eq!(path.nodes, vec![1, 0, 2]);
}

#[test]
fn branch_fixtures() {
    let b = branches(&y_tree(), 0.5, DEFAULT_BUDGET).unwrap();
    assert_eq!(b.trunk.length, 6.0);
    assert_eq!(b.trunk.nodes, vec![0, 1, 2]);
    assert_eq!(b.count, 1);
    assert_eq!(b.branches[0].nodes, vec![1, 3]);
    assert_eq!(b.branches[0].length, 2.0);

    let b = branches(&star(4), 0.5, DEFAULT_BUDGET).unwrap();
    assert_eq!(b.trunk.length, 2.0);
    assert_eq!(b.count, 2);
    assert!(b.branches.iter().all(|p| p.length == 1.0));

    let b = branches(&path_graph(), 1e-6, DEFAULT_BUDGET).unwrap();
    assert_eq!(b.count, 0);
}

#[test]
fn min_branch_len_filters() {
    assert_eq!(branches(&y_tree(), 2.5, DEFAULT_BUDGET).unwrap().count, 0);
    assert_eq!(default_min_branch_len(&y_tree()), 6.0);
}

#[test]
fn branches_avoid_other_trunk_nodes() {
    // a square with a tail: branch search must not re-enter the trunk
    let pts = [
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(-0.5, 0.0, 0.0),
        Point3::new(2.0, 1.0, 0.0),
    ];
    let g = SkeletonGraph::from_points(&pts, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 5)]).unwrap();
    let b = branches(&g, 0.1, DEFAULT_BUDGET).unwrap();
    let trunk: Vec<usize> = b.trunk.nodes.clone();
    for br in &b.branches {
        br.validate(&g).unwrap();
        assert!(trunk.contains(&br.nodes[0]));
        assert!(br.nodes[1..].iter().all(|v| !trunk.contains(v)));
    }
}

#[test]
fn budget_exhaustion_reports_best_so_far() {
    let pts: Vec<Point3> = (0..6)
        .map(|i| Point3::new(i as f64, (i * i) as f64 * 0.1, 0.0))
        .collect();
    let mut edges = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            edges.push((i, j));
        }
    }
    let g = SkeletonGraph::from_points(&pts, &edges).unwrap();
    match longest_simple_path_from(&g, 0, 10) {
        Err(Error::BudgetExceeded { budget: 10, best }) => {
            best.validate(&g).unwrap();
            assert!(best.length > 0.0);
        }
        other => panic!("expected budget error, got {other:?}"),
    }
    assert!(matches!(neuron_length(&g, 0), Err(Error::Parameter(_))));
}

#[test]
fn cycle_graphs_terminate() {
    for n in 3..=12 {
        let pts: Vec<Point3> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let edges: Vec<_> = (0..n).map(|k| (k, (k + 1) % n)).collect();
        let g = SkeletonGraph::from_points(&pts, &edges).unwrap();
        let (len, path) = neuron_length(&g, DEFAULT_BUDGET).unwrap();
        let side = pts[0].distance(pts[1]);
        assert!((len - side * (n - 1) as f64).abs() < 1e-9);
        path.validate(&g).unwrap();
    }
}

#[test]
fn from_mesh_examples() {
    use crate::skeleton::SkeletonBall;
    let balls = [
        SkeletonBall::new(Point3::ORIGIN, 0.5),
        SkeletonBall::new(Point3::new(3.0, 0.0, 0.0), 0.5),
    ];
    let mut adj = Adjacency::new(2);
    adj.set(0, 1, true);
    let g = from_mesh(&balls, &adj).unwrap();
    assert_eq!(g.edges(), vec![(0, 1, 3.0)]);
    assert_eq!(from_mesh(&balls, &Adjacency::new(2)).unwrap().n_edges(), 0);
    assert!(matches!(
        from_mesh(&balls, &Adjacency::new(3)),
        Err(Error::Shape { .. })
    ));

    let chain: Vec<_> = (0..5)
        .map(|k| SkeletonBall::new(Point3::new(k as f64, 0.0, 0.0), 0.6))
        .collect();
    let mut adj = Adjacency::new(5);
    for k in 0..4 {
        adj.set(k, k + 1, true);
    }
    assert_eq!(from_mesh(&chain, &adj).unwrap().total_weight(), 4.0);
}

#[test]
fn graph_validation() {
    let pts = line(&[0.0, 1.0]);
    assert!(SkeletonGraph::from_points(&pts, &[(0, 0)]).is_err());
    assert!(SkeletonGraph::from_points(&pts, &[(0, 1), (1, 0)]).is_err());
    assert!(SkeletonGraph::from_points(&pts, &[(0, 2)]).is_err());
    assert!(SkeletonGraph::from_points(&line(&[0.0, 0.0]), &[(0, 1)]).is_err());
}

#[test]
fn pct_metrics() {
    assert_eq!(len_pct(100.0, 100.0).unwrap(), 0.0);
    assert!((len_pct(95.0, 100.0).unwrap() - 0.05).abs() < 1e-15);
    assert_eq!(num_pct(3, 3).unwrap(), 0.0);
    assert!(matches!(len_pct(1.0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(num_pct(1, 0), Err(Error::Domain(_))));
}

#[test]
fn morphometry_row() {
    let m = Morphometry::measure("y", &y_tree(), 0.5, DEFAULT_BUDGET).unwrap();
    assert_eq!(m.csv_row(), "y,6.000000000,1,4,3,1");
}

fn random_graph() -> impl Strategy<Value = SkeletonGraph> {
    (2usize..=10)
        .prop_flat_map(|n| {
            let pts = prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), n);
            let parents = prop::collection::vec(any::<prop::sample::Index>(), n - 1);
            let extra = prop::collection::vec((0..n, 0..n), 0..=(15 - (n - 1)).min(n * (n - 1) / 2));
            (pts, parents, extra)
        })
        .prop_map(|(pts, parents, extra)| {
            let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let mut g = SkeletonGraph::from_points(&pts, &[]).unwrap();
            for (k, p) in parents.iter().enumerate() {
                let child = k + 1;
                g.add_edge(child, p.index(child)).unwrap();
            }
            for (i, j) in extra {
                if i != j && g.weight(i, j).is_none() && g.n_edges() < 15 {
                    g.add_edge(i, j).unwrap();
                }
            }
            g
        })
}

proptest! {
    #[test]
    fn matches_exhaustive_enumeration(g in random_graph()) {
        let (len, path) = neuron_length(&g, DEFAULT_BUDGET).unwrap();
        prop_assert!((len - brute_force_longest(&g)).abs() < 1e-9);
        path.validate(&g).unwrap();
        g.validate().unwrap();
    }

    #[test]
    fn relabeling_invariance(g in random_graph(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut perm: Vec<usize> = (0..g.n_nodes()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let h = g.permuted(&perm).unwrap();
        let a = neuron_length(&g, DEFAULT_BUDGET).unwrap().0;
        let b = neuron_length(&h, DEFAULT_BUDGET).unwrap().0;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn adding_an_edge_never_shortens(g in random_graph(), i in 0usize..10, j in 0usize..10) {
        let n = g.n_nodes();
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j && g.weight(i, j).is_none());
        let before = neuron_length(&g, DEFAULT_BUDGET).unwrap().0;
        let mut h = g.clone();
        h.add_edge(i, j).unwrap();
        prop_assert!(neuron_length(&h, DEFAULT_BUDGET).unwrap().0 >= before - 1e-12);
    }

    #[test]
    fn branches_respect_invariants(g in random_graph()) {
        let b = branches(&g, 0.0, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(b.count, b.branches.len());
        for br in &b.branches {
            br.validate(&g).unwrap();
            prop_assert!(b.trunk.nodes.contains(&br.nodes[0]) || b.branches.iter().any(|o| o.nodes.contains(&br.nodes[0])));
            prop_assert!(br.nodes[1..].iter().all(|v| !b.trunk.nodes.contains(v)));
        }
    }
}
