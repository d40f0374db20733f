use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AdjacencyInit;
use crate::autodiff::{sigmoid, Adam, SparseMatrix, Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaeConfig {
    pub hidden: (usize, usize),
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GaeConfig {
    fn default() -> Self {
        GaeConfig {
            hidden: (16, 8),
            epochs: 200,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

/// Link probabilities for every pair, diagonal zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPrediction {
    pub probabilities: Tensor,
    pub threshold: f64,
    pub loss_trace: Vec<f64>,
}

impl LinkPrediction {
    /// All-zero probabilities, for graphs whose pairs are all labelled.
    pub fn empty(n: usize) -> Self {
        LinkPrediction {
            probabilities: Tensor::zeros(n, n),
            threshold: 0.5,
            loss_trace: Vec::new(),
        }
    }
}

/// `D^-1/2 (A + I) D^-1/2` for an undirected edge list.
pub(crate) fn gcn_propagation(n: usize, edges: &[(usize, usize)]) -> Result<SparseMatrix> {
    let mut degree = vec![1.0f64; n];
    for &(i, j) in edges {
        degree[i] += 1.0;
        degree[j] += 1.0;
    }
    let mut entries: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0 / degree[i])).collect();
    for &(i, j) in edges {
        let v = 1.0 / (degree[i] * degree[j]).sqrt();
        entries.push((i, j, v));
        entries.push((j, i, v));
    }
    SparseMatrix::new(n, n, entries)
}

/// Column z-scores; constant columns become zero.
pub(crate) fn standardize(x: &Tensor) -> Tensor {
    let (r, c) = x.shape();
    let mut out = x.clone();
    for j in 0..c {
        let mean = (0..r).map(|i| x.get(i, j)).sum::<f64>() / r as f64;
        let var = (0..r).map(|i| (x.get(i, j) - mean).powi(2)).sum::<f64>() / r as f64;
        let sd = var.sqrt();
        for i in 0..r {
            let v = if sd > 1e-12 { (x.get(i, j) - mean) / sd } else { 0.0 };
            out.set(i, j, v);
        }
    }
    out
}

/// Per-entry weights and labels of the masked balanced cross-entropy.
struct Targets {
    weights: Tensor,
    labels: Tensor,
}

fn targets(init: &AdjacencyInit) -> Result<Targets> {
    let n = init.len();
    let (mut pos, mut neg) = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            if i != j && init.known_mask.has(i, j) {
                if init.known_edges.has(i, j) {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
        }
    }
    if pos + neg == 0 {
        return Err(Error::Degenerate("no labelled adjacency entries to train on".into()));
    }
    let classes = usize::from(pos > 0) + usize::from(neg > 0);
    let wp = if pos > 0 { 1.0 / (classes * pos) as f64 } else { 0.0 };
    let wn = if neg > 0 { 1.0 / (classes * neg) as f64 } else { 0.0 };
    let mut weights = Tensor::zeros(n, n);
    let mut labels = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && init.known_mask.has(i, j) {
                if init.known_edges.has(i, j) {
                    weights.set(i, j, wp);
                    labels.set(i, j, 1.0);
                } else {
                    weights.set(i, j, wn);
                }
            }
        }
    }
    Ok(Targets { weights, labels })
}

fn mbce_with(t: &mut Tape, scores: Var, tg: &Targets) -> Result<Var> {
    let w = t.constant(tg.weights.clone());
    let y = t.constant(tg.labels.clone());
    let sp = t.softplus(scores)?;
    let ys = t.mul(y, scores)?;
    let bce = t.sub(sp, ys)?;
    let weighted = t.mul(w, bce)?;
    t.sum(weighted)
}

/// Masked balanced cross-entropy of pair scores (pre-sigmoid) against the
/// trusted labels of `init`. Each class present contributes its mean loss
/// with equal weight.
pub fn mbce_loss(t: &mut Tape, scores: Var, init: &AdjacencyInit) -> Result<Var> {
    let n = init.len();
    if t.shape(scores) != (n, n) {
        return Err(Error::shape(
            "mbce",
            format!("scores {:?} for {n} nodes", t.shape(scores)),
        ));
    }
    let tg = targets(init)?;
    mbce_with(t, scores, &tg)
}

/// Two propagation layers, relu between, and inner-product pair scores.
fn scores(t: &mut Tape, a: &Rc<SparseMatrix>, x: Var, w1: Var, w2: Var) -> Result<Var> {
    let ax = t.spmm(a, x)?;
    let h = t.matmul(ax, w1)?;
    let h = t.relu(h)?;
    let ah = t.spmm(a, h)?;
    let z = t.matmul(ah, w2)?;
    let zt = t.transpose(z)?;
    t.matmul(z, zt)
}

/// Trains the auto-encoder on the labelled entries of `init` and returns
/// probabilities for all pairs.
pub fn gae_train(features: &Tensor, init: &AdjacencyInit, cfg: &GaeConfig) -> Result<LinkPrediction> {
    let n = init.len();
    if cfg.epochs == 0 {
        return Err(Error::Parameter("epochs must be at least 1".into()));
    }
    if cfg.hidden.0 == 0 || cfg.hidden.1 == 0 {
        return Err(Error::Parameter("hidden widths must be positive".into()));
    }
    if features.rows() != n {
        return Err(Error::shape(
            "gae_train",
            format!("{} feature rows for {n} nodes", features.rows()),
        ));
    }
    let tg = targets(init)?;
    let a = Rc::new(gcn_propagation(n, &init.known_edges.edges())?);
    let x = standardize(features);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = vec![
        Tensor::glorot(x.cols(), cfg.hidden.0, &mut rng),
        Tensor::glorot(cfg.hidden.0, cfg.hidden.1, &mut rng),
    ];
    let mut adam = Adam::new(cfg.learning_rate, &params);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..=cfg.epochs {
        let mut t = Tape::new();
        let xv = t.constant(x.clone());
        let w1 = t.leaf(params[0].clone());
        let w2 = t.leaf(params[1].clone());
        let s = scores(&mut t, &a, xv, w1, w2)?;
        if epoch == cfg.epochs {
            let mut probs = t.value(s).map(sigmoid);
            for i in 0..n {
                probs.set(i, i, 0.0);
            }
            return Ok(LinkPrediction {
                probabilities: probs,
                threshold: 0.5,
                loss_trace: trace,
            });
        }
        let loss = mbce_with(&mut t, s, &tg).map_err(|e| match e {
            Error::NonFinite(w) => Error::NonFinite(format!("{w} at epoch {epoch}")),
            other => other,
        })?;
        trace.push(t.value(loss).item());
        let g = t.backward(loss)?;
        let grads = [g.wrt(w1), g.wrt(w2)];
        adam.step(&mut params, &grads);
    }
    unreachable!("the final epoch returns")
}
