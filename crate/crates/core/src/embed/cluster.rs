use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_vectors(vectors: &[Vec<f64>]) -> Result<usize> {
    let width = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != width) {
        return Err(Error::shape("vectors", "rows of differing width".to_string()));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input vectors".into()));
    }
    Ok(width)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Inertia after seeding and after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl KMeans {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().expect("seeding records an inertia")
    }
}

/// Index of the nearest center, lowest index on ties.
pub fn assign_nearest_center(v: &[f64], centers: &[Vec<f64>]) -> Result<usize> {
    if centers.is_empty() {
        return Err(Error::EmptyInput("no cluster centers".into()));
    }
    let mut best = (f64::INFINITY, 0);
    for (j, c) in centers.iter().enumerate() {
        if c.len() != v.len() {
            return Err(Error::shape(
                "assign_nearest_center",
                format!("center {j} has width {}", c.len()),
            ));
        }
        let d = sq_dist(v, c);
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(best.1)
}

fn inertia(vectors: &[Vec<f64>], centers: &[Vec<f64>], assignments: &[usize]) -> f64 {
    vectors
        .iter()
        .zip(assignments)
        .map(|(v, &a)| sq_dist(v, &centers[a]))
        .sum()
}

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing or `max_iters` is reached. Empty clusters keep their center.
pub fn kmeanspp(vectors: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    let width = check_vectors(vectors)?;
    let n = vectors.len();
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Size(format!("{k} clusters requested for {n} vectors")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![vectors[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            if d2[chosen] == 0.0 {
                chosen = (0..n).rev().find(|&i| d2[i] > 0.0).expect("positive total");
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(vectors[pick].clone());
        for (v, d) in vectors.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(v, &centers[centers.len() - 1]));
        }
    }

    let mut assignments: Vec<usize> = vectors
        .iter()
        .map(|v| assign_nearest_center(v, &centers))
        .collect::<Result<_>>()?;
    let mut trace = vec![inertia(vectors, &centers, &assignments)];
    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; width]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(v) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let next: Vec<usize> = vectors
            .iter()
            .map(|v| assign_nearest_center(v, &centers))
            .collect::<Result<_>>()?;
        let changed = next != assignments;
        assignments = next;
        trace.push(inertia(vectors, &centers, &assignments));
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        assignments,
        centers,
        inertia_trace: trace,
    })
}

/// Modal true label of each cluster, smallest label on ties. Empty clusters
/// map to `None`.
pub fn majority_label(assignments: &[usize], labels: &[usize], k: usize) -> Result<Vec<Option<usize>>> {
    if assignments.len() != labels.len() {
        return Err(Error::shape(
            "majority_label",
            format!("{} assignments for {} labels", assignments.len(), labels.len()),
        ));
    }
    let mut votes = vec![BTreeMap::<usize, usize>::new(); k];
    for (&a, &l) in assignments.iter().zip(labels) {
        if a >= k {
            return Err(Error::shape("majority_label", format!("cluster {a} of {k}")));
        }
        *votes[a].entry(l).or_default() += 1;
    }
    Ok(votes
        .into_iter()
        .enumerate()
        .map(|(c, v)| {
            let best = v.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&l, _)| l);
            if best.is_none() {
                log::warn!("cluster {c} is empty; it receives no label");
            }
            best
        })
        .collect())
}

/// Fraction of items whose cluster's majority label matches their own.
pub fn clustering_accuracy(assignments: &[usize], labels: &[usize], mapping: &[Option<usize>]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = assignments
        .iter()
        .zip(labels)
        .filter(|&(&a, &l)| mapping.get(a).copied().flatten() == Some(l))
        .count();
    hits as f64 / labels.len() as f64
}

/// Pairwise Euclidean distances.
pub fn distance_matrix(reps: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_vectors(reps)?;
    if reps.len() < 2 {
        return Err(Error::Size(format!(
            "need at least 2 representations, got {}",
            reps.len()
        )));
    }
    let n = reps.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(&reps[i], &reps[j]).sqrt();
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    Ok(m)
}

fn check_square(m: &[Vec<f64>]) -> Result<()> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Validation(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row[i] != 0.0 {
            return Err(Error::Validation(format!("diagonal entry {i} is {}", row[i])));
        }
        for (j, other) in m.iter().enumerate().take(i) {
            let (a, b) = (row[j], other[i]);
            if !a.is_finite() || (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::Validation(format!(
                    "entries ({i},{j}) and ({j},{i}) differ: {a} vs {b}"
                )));
            }
        }
    }
    Ok(())
}

/// Mean distances per class pair; `None` where no pair exists.
pub type ClassMeans = Vec<Vec<Option<f64>>>;

/// Class-by-class mean distances over sorted distinct labels; the diagonal
/// holds intra-class means over distinct pairs, `None` for singletons.
pub fn inter_intra(matrix: &[Vec<f64>], labels: &[usize]) -> Result<(Vec<usize>, ClassMeans)> {
    check_square(matrix)?;
    if labels.len() != matrix.len() {
        return Err(Error::shape(
            "inter_intra",
            format!("{} labels for {} rows", labels.len(), matrix.len()),
        ));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let slot = |l: usize| classes.binary_search(&l).expect("label present");
    let c = classes.len();
    let mut sums = vec![vec![0.0; c]; c];
    let mut counts = vec![vec![0usize; c]; c];
    for i in 0..matrix.len() {
        for j in 0..matrix.len() {
            if i != j {
                let (a, b) = (slot(labels[i]), slot(labels[j]));
                sums[a][b] += matrix[i][j];
                counts[a][b] += 1;
            }
        }
    }
    let out = (0..c)
        .map(|a| {
            (0..c)
                .map(|b| (counts[a][b] > 0).then(|| sums[a][b] / counts[a][b] as f64))
                .collect()
        })
        .collect();
    Ok((classes, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            _ => Err(Error::Parameter(format!("unknown linkage '{s}'"))),
        }
    }
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        })
    }
}

/// One agglomeration step. Leaves are `0..n`; the cluster formed at step
/// `s` gets id `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Agglomerative clustering; ties merge the pair with the smallest ids.
pub fn hierarchical_cluster(matrix: &[Vec<f64>], linkage: Linkage) -> Result<Vec<Merge>> {
    check_square(matrix)?;
    let n = matrix.len();
    // active clusters: id, members
    let mut active: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let between = |a: &[usize], b: &[usize]| -> f64 {
        let ds = a.iter().flat_map(|&i| b.iter().map(move |&j| matrix[i][j]));
        match linkage {
            Linkage::Single => ds.fold(f64::INFINITY, f64::min),
            Linkage::Complete => ds.fold(0.0, f64::max),
            Linkage::Average => ds.sum::<f64>() / (a.len() * b.len()) as f64,
        }
    };
    while active.len() > 1 {
        let mut best = (f64::INFINITY, 0, 1);
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let d = between(&active[x].1, &active[y].1);
                if d < best.0 {
                    best = (d, x, y);
                }
            }
        }
        let (height, x, y) = best;
        let (id_b, mut members_b) = active.remove(y);
        let (id_a, members_a) = &mut active[x];
        let a = *id_a;
        members_a.append(&mut members_b);
        let size = members_a.len();
        *id_a = n + merges.len();
        merges.push(Merge {
            a: a.min(id_b),
            b: a.max(id_b),
            height,
            size,
        });
    }
    Ok(merges)
}

/// `step,a,b,height` per merge.
pub fn dendrogram_csv(merges: &[Merge]) -> String {
    let mut s = String::from("step,a,b,height\n");
    for (i, m) in merges.iter().enumerate() {
        writeln!(s, "{i},{},{},{:.9}", m.a, m.b, m.height).expect("writing to a String");
    }
    s
}

/// Plain CSV of a matrix with an id header row and column.
pub fn matrix_csv(ids: &[String], matrix: &[Vec<f64>]) -> String {
    let mut s = String::from("id");
    for id in ids {
        write!(s, ",{id}").expect("writing to a String");
    }
    s.push('\n');
    for (id, row) in ids.iter().zip(matrix) {
        s.push_str(id);
        for v in row {
            write!(s, ",{v:.9}").expect("writing to a String");
        }
        s.push('\n');
    }
    s
}
