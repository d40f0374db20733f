//! Graph embeddings by mutual-information maximisation between node
//! (patch) and pooled (global) representations, a spectral baseline, and
//! the clustering protocols used to evaluate them.

mod cluster;

use std::fmt::Write as _;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cluster::{
    assign_nearest_center, clustering_accuracy, dendrogram_csv, distance_matrix, hierarchical_cluster, inter_intra,
    kmeanspp, majority_label, matrix_csv, ClassMeans, KMeans, Linkage, Merge,
};

use crate::autodiff::{softplus, Adam, SparseMatrix, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues_desc;
use crate::links::gcn_propagation;
use crate::skelgraph::SkeletonGraph;

/// Width of the per-node input `[x, y, z, r, degree]`.
pub const NODE_INPUT_WIDTH: usize = 5;
/// Discriminator scores are clamped to `±SCORE_CLAMP` before the softplus.
pub const SCORE_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Sum,
    Mean,
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Pooling::Sum),
            "mean" => Ok(Pooling::Mean),
            _ => Err(Error::Parameter(format!("unknown pooling '{s}', expected sum or mean"))),
        }
    }
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pooling::Sum => "sum",
            Pooling::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    /// Output width of each graph-convolution layer; the global
    /// representation is their concatenation.
    pub layers: Vec<usize>,
    pub pooling: Pooling,
    /// Widths of the three linear layers of each discriminator branch.
    pub disc_widths: [usize; 3],
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            layers: vec![32, 32, 36],
            pooling: Pooling::Sum,
            disc_widths: [64, 64, 32],
            epochs: 100,
            learning_rate: 0.001,
            negatives_per_positive: 1,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.contains(&0) {
            return Err(Error::Parameter("need at least one layer, all widths positive".into()));
        }
        if self.disc_widths.contains(&0) {
            return Err(Error::Parameter("discriminator widths must be positive".into()));
        }
        if self.epochs == 0 || self.negatives_per_positive == 0 {
            return Err(Error::Parameter(
                "epochs and negatives_per_positive must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn embedding_width(&self) -> usize {
        self.layers.iter().sum()
    }
}

/// Three linear layers with relu between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: [Tensor; 3],
    pub biases: [Tensor; 3],
}

impl Mlp {
    fn glorot(input: usize, widths: [usize; 3], rng: &mut ChaCha8Rng) -> Self {
        let dims = [input, widths[0], widths[1], widths[2]];
        Mlp {
            weights: [0, 1, 2].map(|l| Tensor::glorot(dims[l], dims[l + 1], rng)),
            biases: [0, 1, 2].map(|l| Tensor::zeros(1, dims[l + 1])),
        }
    }

    fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| [w, b])
    }

    fn from_tensors(it: &mut impl Iterator<Item = Tensor>) -> Self {
        let mut next = || it.next().expect("parameter layout");
        let (w0, b0, w1, b1, w2, b2) = (next(), next(), next(), next(), next(), next());
        Mlp {
            weights: [w0, w1, w2],
            biases: [b0, b1, b2],
        }
    }
}

/// Input standardisation, encoder layers and both discriminator branches.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoGraphModel {
    /// Per-column mean and standard deviation subtracted from and divided
    /// into the node inputs.
    pub input_mean: [f64; NODE_INPUT_WIDTH],
    pub input_std: [f64; NODE_INPUT_WIDTH],
    pub encoder: Vec<Tensor>,
    /// Transforms patch representations.
    pub phi: Mlp,
    /// Transforms global representations.
    pub psi: Mlp,
}

impl InfoGraphModel {
    pub fn init(cfg: &EmbedConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut input = NODE_INPUT_WIDTH;
        let mut encoder = Vec::with_capacity(cfg.layers.len());
        for &w in &cfg.layers {
            encoder.push(Tensor::glorot(input, w, rng));
            input = w;
        }
        let width = cfg.embedding_width();
        InfoGraphModel {
            input_mean: [0.0; NODE_INPUT_WIDTH],
            input_std: [1.0; NODE_INPUT_WIDTH],
            encoder,
            phi: Mlp::glorot(width, cfg.disc_widths, rng),
            psi: Mlp::glorot(width, cfg.disc_widths, rng),
        }
    }

    fn flatten(&self) -> Vec<Tensor> {
        self.encoder
            .iter()
            .chain(self.phi.tensors())
            .chain(self.psi.tensors())
            .cloned()
            .collect()
    }

    fn unflatten(&self, params: Vec<Tensor>) -> Self {
        let mut it = params.into_iter();
        let encoder = it.by_ref().take(self.encoder.len()).collect();
        let phi = Mlp::from_tensors(&mut it);
        let psi = Mlp::from_tensors(&mut it);
        InfoGraphModel {
            input_mean: self.input_mean,
            input_std: self.input_std,
            encoder,
            phi,
            psi,
        }
    }

    /// Fits the input standardisation to the stacked node inputs of
    /// `graphs`; constant columns keep unit scale.
    pub fn fit_inputs(&mut self, graphs: &[SkeletonGraph]) {
        let rows: Vec<Tensor> = graphs.iter().map(node_inputs).collect();
        let n: usize = rows.iter().map(Tensor::rows).sum();
        if n == 0 {
            return;
        }
        for c in 0..NODE_INPUT_WIDTH {
            let col = || rows.iter().flat_map(|t| (0..t.rows()).map(move |i| t.get(i, c)));
            let mean = col().sum::<f64>() / n as f64;
            let sd = (col().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            self.input_mean[c] = mean;
            self.input_std[c] = if sd > 1e-12 { sd } else { 1.0 };
        }
    }

    fn standardize(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for i in 0..x.rows() {
            for c in 0..NODE_INPUT_WIDTH {
                out.set(i, c, (x.get(i, c) - self.input_mean[c]) / self.input_std[c]);
            }
        }
        out
    }
}

/// `[x, y, z, r, degree]` per node.
pub fn node_inputs(g: &SkeletonGraph) -> Tensor {
    let data = g
        .nodes()
        .iter()
        .enumerate()
        .flat_map(|(i, n)| [n.position.x, n.position.y, n.position.z, n.radius, g.degree(i) as f64])
        .collect();
    Tensor::new(g.n_nodes(), NODE_INPUT_WIDTH, data).expect("five inputs per node")
}

/// Several graphs stacked block-diagonally.
struct Batch {
    propagation: Rc<SparseMatrix>,
    pooling: Rc<SparseMatrix>,
    inputs: Tensor,
    /// Graph of every stacked node.
    owner: Vec<usize>,
    /// First stacked row of each graph, plus the total.
    offsets: Vec<usize>,
}

impl Batch {
    fn new(graphs: &[&SkeletonGraph], pooling: Pooling) -> Result<Self> {
        let mut prop = Vec::new();
        let mut pool = Vec::new();
        let mut inputs = Vec::new();
        let mut owner = Vec::new();
        let mut offsets = vec![0];
        for (gi, g) in graphs.iter().enumerate() {
            let n = g.n_nodes();
            if n == 0 {
                return Err(Error::EmptyInput(format!("graph {gi} has no nodes")));
            }
            let base = *offsets.last().expect("non-empty");
            let edges: Vec<(usize, usize)> = g.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
            let a = gcn_propagation(n, &edges)?;
            prop.extend(a.entries().iter().map(|&(i, j, v)| (base + i, base + j, v)));
            let share = match pooling {
                Pooling::Sum => 1.0,
                Pooling::Mean => 1.0 / n as f64,
            };
            pool.extend((0..n).map(|i| (gi, base + i, share)));
            inputs.extend_from_slice(node_inputs(g).data());
            owner.extend(std::iter::repeat_n(gi, n));
            offsets.push(base + n);
        }
        let total = *offsets.last().expect("non-empty");
        Ok(Batch {
            propagation: Rc::new(SparseMatrix::new(total, total, prop)?),
            pooling: Rc::new(SparseMatrix::new(graphs.len(), total, pool)?),
            inputs: Tensor::new(total, NODE_INPUT_WIDTH, inputs)?,
            owner,
            offsets,
        })
    }

    fn n_graphs(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Patch representations (stacked rows) and global representations (one
/// row per graph) on the tape.
fn encode_on_tape(t: &mut Tape, batch: &Batch, inputs: &Tensor, encoder: &[Var]) -> Result<(Var, Var)> {
    let mut h = t.constant(inputs.clone());
    let mut outputs = Vec::with_capacity(encoder.len());
    for &w in encoder {
        let ah = t.spmm(&batch.propagation, h)?;
        let z = t.matmul(ah, w)?;
        h = t.relu(z)?;
        outputs.push(h);
    }
    let patches = t.concat_cols(&outputs)?;
    let global = t.spmm(&batch.pooling, patches)?;
    Ok((patches, global))
}

struct MlpVars {
    weights: [Var; 3],
    biases: [Var; 3],
}

fn mlp_on_tape(t: &mut Tape, m: &MlpVars, x: Var) -> Result<Var> {
    let mut h = x;
    for l in 0..3 {
        let z = t.matmul(h, m.weights[l])?;
        h = t.add(z, m.biases[l])?;
        if l < 2 {
            h = t.relu(h)?;
        }
    }
    Ok(h)
}

fn bind_mlp(t: &mut Tape, m: &Mlp, leaf: bool) -> MlpVars {
    let mut bind = |x: &Tensor| if leaf { t.leaf(x.clone()) } else { t.constant(x.clone()) };
    MlpVars {
        weights: [bind(&m.weights[0]), bind(&m.weights[1]), bind(&m.weights[2])],
        biases: [bind(&m.biases[0]), bind(&m.biases[1]), bind(&m.biases[2])],
    }
}

/// Patch and global representations of one graph under `model`.
pub fn encode(g: &SkeletonGraph, model: &InfoGraphModel, pooling: Pooling) -> Result<(Tensor, Vec<f64>)> {
    let batch = Batch::new(&[g], pooling)?;
    let mut t = Tape::new();
    let enc: Vec<Var> = model.encoder.iter().map(|w| t.constant(w.clone())).collect();
    let (patches, global) = encode_on_tape(&mut t, &batch, &model.standardize(&batch.inputs), &enc)?;
    Ok((t.value(patches).clone(), t.value(global).row(0).to_vec()))
}

/// Row-wise scores `φ(h_r)·ψ(H_r)` for paired rows of `h` and `big_h`.
pub fn discriminator_score(h: &Tensor, big_h: &Tensor, phi: &Mlp, psi: &Mlp) -> Result<Tensor> {
    if h.rows() != big_h.rows() {
        return Err(Error::shape(
            "discriminator",
            format!("{} patch rows against {} global rows", h.rows(), big_h.rows()),
        ));
    }
    let mut t = Tape::new();
    let (hv, gv) = (t.constant(h.clone()), t.constant(big_h.clone()));
    let (pv, qv) = (bind_mlp(&mut t, phi, false), bind_mlp(&mut t, psi, false));
    let s = scores_on_tape(&mut t, hv, gv, &pv, &qv)?;
    Ok(t.value(s).clone())
}

fn scores_on_tape(t: &mut Tape, h: Var, big_h: Var, phi: &MlpVars, psi: &MlpVars) -> Result<Var> {
    let a = mlp_on_tape(t, phi, h)?;
    let b = mlp_on_tape(t, psi, big_h)?;
    let s = t.dot(a, b)?;
    t.clamp(s, -SCORE_CLAMP, SCORE_CLAMP)
}

/// Jensen-Shannon estimate `mean(−sp(−T⁺)) − mean(−sp(−T⁻))`.
pub fn jsd_mi(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Degenerate(
            "MI estimate needs positive and negative scores".into(),
        ));
    }
    let term = |s: &[f64]| s.iter().map(|&x| -softplus(-x)).sum::<f64>() / s.len() as f64;
    Ok(term(positive) - term(negative))
}

/// Tape version of [`jsd_mi`] on column vectors of scores.
pub fn jsd_mi_tape(t: &mut Tape, positive: Var, negative: Var) -> Result<Var> {
    let side = |t: &mut Tape, s: Var| -> Result<Var> {
        let n = t.neg(s)?;
        let sp = t.softplus(n)?;
        let m = t.mean(sp)?;
        t.neg(m)
    };
    let p = side(t, positive)?;
    let n = side(t, negative)?;
    t.sub(p, n)
}

/// Summed per-node estimates `−sp(−T⁺) + sp(−T⁻)` over every graph, weighted
/// `1/K` for `K` graphs; the `per` negatives of a node are averaged.
fn dataset_mi(t: &mut Tape, positive: Var, negative: Var, k: usize, per: usize) -> Result<Var> {
    let np = t.neg(positive)?;
    let sp = t.softplus(np)?;
    let pos = t.sum(sp)?;
    let nn = t.neg(negative)?;
    let sn = t.softplus(nn)?;
    let neg = t.sum(sn)?;
    let neg = t.scale(neg, 1.0 / per as f64)?;
    let diff = t.sub(neg, pos)?;
    t.scale(diff, 1.0 / k as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedResult {
    /// One global representation per input graph.
    pub embeddings: Vec<Vec<f64>>,
    /// Objective value before each update.
    pub objective_trace: Vec<f64>,
    pub model: InfoGraphModel,
}

/// Negative pairs: for every node of graph `i` (times `per`), a uniformly
/// drawn node of a uniformly drawn graph `i′ ≠ i`.
fn draw_negatives(batch: &Batch, per: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let k = batch.n_graphs();
    let mut patch_rows = Vec::with_capacity(batch.owner.len() * per);
    let mut graph_rows = Vec::with_capacity(batch.owner.len() * per);
    for &g in &batch.owner {
        for _ in 0..per {
            let mut other = rng.random_range(0..k - 1);
            if other >= g {
                other += 1;
            }
            let (lo, hi) = (batch.offsets[other], batch.offsets[other + 1]);
            patch_rows.push(rng.random_range(lo..hi));
            graph_rows.push(g);
        }
    }
    (patch_rows, graph_rows)
}

/// Trains encoder and discriminator jointly by Adam ascent on the dataset
/// MI estimate and returns the final global representations.
pub fn infograph_train(graphs: &[SkeletonGraph], cfg: &EmbedConfig) -> Result<EmbedResult> {
    cfg.validate()?;
    if graphs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 graphs to draw negative pairs, got {}",
            graphs.len()
        )));
    }
    let refs: Vec<&SkeletonGraph> = graphs.iter().collect();
    let batch = Batch::new(&refs, cfg.pooling)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_layers = cfg.layers.len();
    let mut initial = InfoGraphModel::init(cfg, &mut rng);
    initial.fit_inputs(graphs);
    let inputs = initial.standardize(&batch.inputs);
    let mut params = initial.flatten();
    let mut adam = Adam::new(cfg.learning_rate, &params);
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let (neg_patch, neg_graph) = draw_negatives(&batch, cfg.negatives_per_positive, &mut rng);
        let mut t = Tape::new();
        let leaves: Vec<Var> = params.iter().map(|p| t.leaf(p.clone())).collect();
        let (enc, rest) = leaves.split_at(n_layers);
        let phi = MlpVars {
            weights: [rest[0], rest[2], rest[4]],
            biases: [rest[1], rest[3], rest[5]],
        };
        let psi = MlpVars {
            weights: [rest[6], rest[8], rest[10]],
            biases: [rest[7], rest[9], rest[11]],
        };
        let at_epoch = |e: Error| match e {
            Error::NonFinite(w) => Error::NonFinite(format!("{w} at epoch {epoch}")),
            other => other,
        };
        let (patches, global) = encode_on_tape(&mut t, &batch, &inputs, enc).map_err(at_epoch)?;
        let own = t.gather_rows(global, &batch.owner)?;
        let positive = scores_on_tape(&mut t, patches, own, &phi, &psi).map_err(at_epoch)?;
        let hp = t.gather_rows(patches, &neg_patch)?;
        let hg = t.gather_rows(global, &neg_graph)?;
        let negative = scores_on_tape(&mut t, hp, hg, &phi, &psi).map_err(at_epoch)?;
        let mi =
            dataset_mi(&mut t, positive, negative, batch.n_graphs(), cfg.negatives_per_positive).map_err(at_epoch)?;
        trace.push(t.value(mi).item());
        let loss = t.neg(mi)?;
        let g = t.backward(loss).map_err(at_epoch)?;
        let grads: Vec<Tensor> = leaves.iter().map(|&v| g.wrt(v)).collect();
        adam.step(&mut params, &grads);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("adam update at epoch {epoch}")));
        }
    }

    let model = initial.unflatten(params);
    let mut t = Tape::new();
    let enc: Vec<Var> = model.encoder.iter().map(|w| t.constant(w.clone())).collect();
    let (_, global) = encode_on_tape(&mut t, &batch, &inputs, &enc)?;
    let g = t.value(global);
    Ok(EmbedResult {
        embeddings: (0..g.rows()).map(|i| g.row(i).to_vec()).collect(),
        objective_trace: trace,
        model,
    })
}

/// Descending eigenvalues of the weighted adjacency matrix, truncated or
/// zero-padded to `d`.
pub fn graph_spectrum(g: &SkeletonGraph, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Parameter("spectrum length must be at least 1".into()));
    }
    let n = g.n_nodes();
    let mut a = vec![0.0; n * n];
    for (i, j, w) in g.edges() {
        a[i * n + j] = w;
        a[j * n + i] = w;
    }
    let mut values = symmetric_eigenvalues_desc(&a, n);
    values.resize(d, 0.0);
    Ok(values)
}

/// `graph_id` then one column per dimension.
pub fn embeddings_csv(ids: &[String], embeddings: &[Vec<f64>]) -> String {
    let width = embeddings.first().map_or(0, Vec::len);
    let mut s = String::from("graph_id");
    for c in 0..width {
        write!(s, ",e{c}").expect("writing to a String");
    }
    s.push('\n');
    for (id, e) in ids.iter().zip(embeddings) {
        s.push_str(id);
        for v in e {
            write!(s, ",{v:.9e}").expect("writing to a String");
        }
        s.push('\n');
    }
    s
}
