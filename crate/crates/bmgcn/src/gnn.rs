//! Soft-label MLP, block-guided graph convolution, losses, training
//! schedule, baselines and evaluation.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adam::AdamState;
use crate::blockmodel::{assemble_labels, block_matrix, refine_topology, similarity_matrix};
use crate::error::{Error, Result};
use crate::graph::{one_hot, AttributeMatrix, Graph, LabelAssignment, SplitMask};
use crate::sparse::{DiagMode, SparsePattern};
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

/// A loaded dataset: topology, labels and node attributes.
#[derive(Clone, Debug)]
pub struct GraphData {
    pub graph: Graph,
    pub labels: LabelAssignment,
    pub features: AttributeMatrix,
}

impl GraphData {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }
}

/// Two-layer perceptron parameters: d -> hidden -> c.
#[derive(Clone, Debug)]
pub struct MlpParams {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Tensor::from_vec(rows, cols, data)
}

impl MlpParams {
    pub fn init(d: usize, hidden: usize, c: usize, rng: &mut ChaCha8Rng) -> Self {
        MlpParams {
            w1: glorot(d, hidden, rng),
            b1: Tensor::zeros(1, hidden),
            w2: glorot(hidden, c, rng),
            b2: Tensor::zeros(1, c),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn named(&self) -> Vec<(String, Tensor)> {
        vec![
            ("mlp.w1".into(), self.w1.clone()),
            ("mlp.b1".into(), self.b1.clone()),
            ("mlp.w2".into(), self.w2.clone()),
            ("mlp.b2".into(), self.b2.clone()),
        ]
    }
}

/// Per-layer (W1, W2) pairs for the block-guided convolution stack.
#[derive(Clone, Debug)]
pub struct GcnParams {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl GcnParams {
    pub fn init(d: usize, hidden: usize, c: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(k >= 1);
        let mut widths = Vec::with_capacity(k + 1);
        widths.push(d);
        for _ in 1..k {
            widths.push(hidden);
        }
        widths.push(c);
        let layers = (0..k)
            .map(|i| {
                (
                    glorot(widths[i], widths[i + 1], rng),
                    glorot(widths[i], widths[i + 1], rng),
                )
            })
            .collect();
        GcnParams { layers }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|(a, b)| [a, b]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|(a, b)| [a, b])
            .collect()
    }

    pub fn named(&self) -> Vec<(String, Tensor)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, (a, b))| {
                [
                    (format!("gcn.{i}.w1"), a.clone()),
                    (format!("gcn.{i}.w2"), b.clone()),
                ]
            })
            .collect()
    }
}

/// Hyperparameters and training schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    /// Number of block-guided convolutional layers.
    pub layers: usize,
    pub hidden: usize,
    /// Diagonal enhancement of the block similarity matrix.
    pub alpha: f64,
    /// Self-loop coefficient in the refined topology.
    pub beta: f64,
    /// Loss balance: final = lambda * gcn + (1 - lambda) * mlp.
    pub lambda: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub pretrain_epochs: usize,
    pub joint_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Ablation: cut the gradient path from the block pipeline into the MLP.
    pub stop_gradient: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 3,
            hidden: 64,
            alpha: 2.0,
            beta: 1.0,
            lambda: 0.5,
            lr: 0.001,
            weight_decay: 0.0005,
            dropout: 0.5,
            pretrain_epochs: 400,
            joint_epochs: 1000,
            patience: 100,
            seed: 0,
            stop_gradient: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        if self.hidden < 1 {
            return Err(Error::Config("hidden width must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("lambda must lie in [0,1]".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::Config("alpha and beta must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0,1)".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::Config("lr must be positive".into()));
        }
        Ok(())
    }
}

/// splitmix64-style seed mixing for independent deterministic streams.
fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed for the model run on split `s` of the multi-split protocol.
pub fn split_run_seed(seed: u64, s: usize) -> u64 {
    mix_seed(seed, 0x5B17 + s as u64)
}

pub struct MlpVars {
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
}

impl MlpVars {
    fn record(tape: &mut Tape, p: &MlpParams) -> Self {
        MlpVars {
            w1: tape.input(p.w1.clone(), true),
            b1: tape.input(p.b1.clone(), true),
            w2: tape.input(p.w2.clone(), true),
            b2: tape.input(p.b2.clone(), true),
        }
    }

    fn ids(&self) -> Vec<VarId> {
        vec![self.w1, self.b1, self.w2, self.b2]
    }
}

/// B_bar = relu(MLP(X)); B = row_softmax(B_bar).
///
/// Returns `(logits, soft_labels)`; the logits feed the cross-entropy, the
/// soft labels feed the block pipeline.
pub fn mlp_forward(
    tape: &mut Tape,
    x: VarId,
    vars: &MlpVars,
    dropout: f64,
    train: bool,
) -> (VarId, VarId) {
    let xd = tape.dropout(x, dropout, train);
    let h = tape.matmul(xd, vars.w1);
    let h = tape.add_row_bias(h, vars.b1);
    let h = tape.relu(h);
    let hd = tape.dropout(h, dropout, train);
    let bbar = tape.matmul(hd, vars.w2);
    let bbar = tape.add_row_bias(bbar, vars.b2);
    let bbar = tape.relu(bbar);
    let b = tape.row_softmax(bbar);
    (bbar, b)
}

/// One block-guided convolutional layer: Z' = Z W1 + (A_tilde Z) W2.
pub fn conv_layer(
    tape: &mut Tape,
    z: VarId,
    pattern: &Rc<SparsePattern>,
    weights: VarId,
    w1: VarId,
    w2: VarId,
) -> VarId {
    let skip = tape.matmul(z, w1);
    let agg = tape.spmm(pattern, weights, z);
    let agg = tape.matmul(agg, w2);
    tape.add(skip, agg)
}

/// Everything the full forward pass exposes to training and tests.
pub struct FullForward {
    pub z: VarId,
    pub bbar: VarId,
    pub b: VarId,
    pub h: VarId,
    pub q: VarId,
    pub l_mlp: VarId,
    pub l_gcn: VarId,
    pub l_final: VarId,
    pub mlp_vars: MlpVars,
    pub gcn_vars: Vec<(VarId, VarId)>,
}

impl FullForward {
    /// Parameter ids in the fixed optimizer order (MLP first, then layers).
    pub fn param_ids(&self) -> Vec<VarId> {
        let mut ids = self.mlp_vars.ids();
        for &(a, b) in &self.gcn_vars {
            ids.push(a);
            ids.push(b);
        }
        ids
    }
}

/// The full pipeline on one tape: soft labels, label assembly, block matrix,
/// similarity, topology refinement, K convolutions and both losses.
pub fn forward_full(
    tape: &mut Tape,
    data: &GraphData,
    split: &SplitMask,
    mlp: &MlpParams,
    gcn: &GcnParams,
    cfg: &TrainConfig,
    train: bool,
) -> Result<FullForward> {
    let x = tape.constant(data.features.clone());
    let mlp_vars = MlpVars::record(tape, mlp);
    let gcn_vars: Vec<(VarId, VarId)> = gcn
        .layers
        .iter()
        .map(|(a, b)| (tape.input(a.clone(), true), tape.input(b.clone(), true)))
        .collect();

    let (bbar, b) = mlp_forward(tape, x, &mlp_vars, cfg.dropout, train);
    let targets = one_hot(&data.labels, &vec![0.0; data.num_classes()]);
    let l_mlp = tape.softmax_cross_entropy_masked(bbar, targets.clone(), &split.train);

    let b_blocks = if cfg.stop_gradient { tape.detach(b) } else { b };
    let ys = assemble_labels(tape, b_blocks, &data.labels, &split.train)?;
    let h = block_matrix(tape, ys, &data.graph)?;
    let q = similarity_matrix(tape, h, cfg.alpha);
    let refined = refine_topology(tape, b_blocks, q, &data.graph, cfg.beta)?;

    let mut z = x;
    let last = gcn_vars.len() - 1;
    for (i, &(w1, w2)) in gcn_vars.iter().enumerate() {
        let zd = tape.dropout(z, cfg.dropout, train);
        z = conv_layer(tape, zd, &refined.pattern, refined.weights, w1, w2);
        if i < last {
            z = tape.relu(z);
        }
    }
    let l_gcn = tape.softmax_cross_entropy_masked(z, targets, &split.train);
    let sg = tape.scale(l_gcn, cfg.lambda);
    let sm = tape.scale(l_mlp, 1.0 - cfg.lambda);
    let l_final = tape.add(sg, sm);
    Ok(FullForward {
        z,
        bbar,
        b,
        h,
        q,
        l_mlp,
        l_gcn,
        l_final,
        mlp_vars,
        gcn_vars,
    })
}

/// Fraction of masked nodes whose argmax matches the label; ties break to
/// the lowest class id.
pub fn evaluate(z: &Tensor, y: &LabelAssignment, mask: &[bool]) -> Result<f64> {
    assert_eq!(mask.len(), z.rows());
    let mut total = 0usize;
    let mut correct = 0usize;
    for (i, &active) in mask.iter().enumerate() {
        if !active {
            continue;
        }
        let label = y
            .get(i)
            .ok_or_else(|| Error::Data(format!("masked node {i} has no label")))?;
        let row = z.row(i);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        total += 1;
        if best == label {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::Data("evaluation mask is empty".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// One epoch's losses and accuracies.
#[derive(Clone, Debug, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_mlp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_gcn: Option<f64>,
    pub l_final: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// Accuracy of the best-validation epoch plus the full history.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_val_acc: f64,
    pub test_acc: f64,
}

fn check_finite_loss(loss: f64, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("loss diverged (NaN/inf) at epoch {epoch}")))
    }
}

/// Track the best-validation checkpoint; ties keep the earlier epoch.
struct BestTracker<P> {
    best_val: f64,
    test_at_best: f64,
    params: Option<P>,
    stale: usize,
}

impl<P: Clone> BestTracker<P> {
    fn new() -> Self {
        BestTracker { best_val: f64::NEG_INFINITY, test_at_best: 0.0, params: None, stale: 0 }
    }

    fn observe(&mut self, val: f64, test: f64, params: &P) -> bool {
        if val > self.best_val {
            self.best_val = val;
            self.test_at_best = test;
            self.params = Some(params.clone());
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }
}

/// Minimize the masked cross-entropy of the MLP alone, keeping the
/// parameters of the best-validation epoch. With an empty validation mask
/// the final parameters are kept.
pub fn pretrain_mlp(
    mlp: &mut MlpParams,
    data: &GraphData,
    split: &SplitMask,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    let targets = one_hot(&data.labels, &vec![0.0; data.num_classes()]);
    let shapes: Vec<(usize, usize)> = mlp.tensors().iter().map(|t| t.shape()).collect();
    let mut adam = AdamState::new(cfg.lr, cfg.weight_decay, &shapes);
    let mut history = Vec::with_capacity(cfg.pretrain_epochs);
    let mut tracker: BestTracker<MlpParams> = BestTracker::new();
    let has_val = split.validation.iter().any(|&b| b);
    for epoch in 0..cfg.pretrain_epochs {
        let mut tape = Tape::with_seed(mix_seed(cfg.seed, 0x10000 + epoch as u64));
        let x = tape.constant(data.features.clone());
        let vars = MlpVars::record(&mut tape, mlp);
        let (bbar, _) = mlp_forward(&mut tape, x, &vars, cfg.dropout, true);
        let loss = tape.softmax_cross_entropy_masked(bbar, targets.clone(), &split.train);
        let loss_val = tape.value(loss).scalar();
        check_finite_loss(loss_val, epoch)?;
        let grads = tape.backward(loss)?;
        let ids = vars.ids();
        let grad_refs: Vec<&Tensor> = ids.iter().map(|&id| grads.wrt(id)).collect();
        adam.step(&mut mlp.tensors_mut(), &grad_refs);

        // eval pass, dropout off
        let mut etape = Tape::new();
        let x = etape.constant(data.features.clone());
        let evars = MlpVars::record(&mut etape, mlp);
        let (ebbar, _) = mlp_forward(&mut etape, x, &evars, cfg.dropout, false);
        let zt = etape.value(ebbar);
        let train_acc = evaluate(zt, &data.labels, &split.train)?;
        let val_acc = if has_val {
            evaluate(zt, &data.labels, &split.validation)?
        } else {
            train_acc
        };
        let test_acc = if split.test.iter().any(|&b| b) {
            evaluate(zt, &data.labels, &split.test)?
        } else {
            0.0
        };
        tracker.observe(val_acc, test_acc, mlp);
        history.push(EpochRecord {
            epoch,
            l_mlp: Some(loss_val),
            l_gcn: None,
            l_final: loss_val,
            train_acc,
            val_acc,
            test_acc,
        });
    }
    if has_val {
        if let Some(best) = tracker.params {
            *mlp = best;
        }
    }
    Ok(history)
}

/// Block matrix produced by the current MLP's assembled labels, eval mode.
pub fn learned_block_matrix(
    data: &GraphData,
    split: &SplitMask,
    mlp: &MlpParams,
    cfg: &TrainConfig,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let x = tape.constant(data.features.clone());
    let vars = MlpVars::record(&mut tape, mlp);
    let (_, b) = mlp_forward(&mut tape, x, &vars, cfg.dropout, false);
    let ys = assemble_labels(&mut tape, b, &data.labels, &split.train)?;
    let h = block_matrix(&mut tape, ys, &data.graph)?;
    Ok(tape.value(h).clone())
}

/// Trained BM-GCN parameters plus diagnostics.
pub struct BmgcnModel {
    pub outcome: TrainOutcome,
    pub mlp: MlpParams,
    pub gcn: GcnParams,
    /// Block matrix right after pretraining (before joint training).
    pub pretrained_h: Tensor,
}

impl BmgcnModel {
    pub fn named_params(&self) -> Vec<(String, Tensor)> {
        let mut named = self.mlp.named();
        named.extend(self.gcn.named());
        named
    }
}

/// Pretrain the MLP, then jointly train MLP and convolution stack on the
/// combined loss, keeping the best-validation parameters.
pub fn train_bmgcn(data: &GraphData, split: &SplitMask, cfg: &TrainConfig) -> Result<BmgcnModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1));
    let mut mlp = MlpParams::init(data.feature_dim(), cfg.hidden, data.num_classes(), &mut rng);
    let mut gcn = GcnParams::init(
        data.feature_dim(),
        cfg.hidden,
        data.num_classes(),
        cfg.layers,
        &mut rng,
    );
    pretrain_mlp(&mut mlp, data, split, cfg)?;
    let pretrained_h = learned_block_matrix(data, split, &mlp, cfg)?;

    let shapes: Vec<(usize, usize)> = mlp
        .tensors()
        .iter()
        .chain(gcn.tensors().iter())
        .map(|t| t.shape())
        .collect();
    let mut adam = AdamState::new(cfg.lr, cfg.weight_decay, &shapes);
    let mut history = Vec::new();
    let mut tracker: BestTracker<(MlpParams, GcnParams)> = BestTracker::new();

    for epoch in 0..cfg.joint_epochs {
        let mut tape = Tape::with_seed(mix_seed(cfg.seed, 0x20000 + epoch as u64));
        let ff = forward_full(&mut tape, data, split, &mlp, &gcn, cfg, true)?;
        let l_mlp = tape.value(ff.l_mlp).scalar();
        let l_gcn = tape.value(ff.l_gcn).scalar();
        let l_final = tape.value(ff.l_final).scalar();
        check_finite_loss(l_final, epoch)?;
        let grads = tape.backward(ff.l_final)?;
        let ids = ff.param_ids();
        let grad_refs: Vec<&Tensor> = ids.iter().map(|&id| grads.wrt(id)).collect();
        let mut params = mlp.tensors_mut();
        params.extend(gcn.tensors_mut());
        adam.step(&mut params, &grad_refs);

        let mut etape = Tape::new();
        let ef = forward_full(&mut etape, data, split, &mlp, &gcn, cfg, false)?;
        let zt = etape.value(ef.z);
        let train_acc = evaluate(zt, &data.labels, &split.train)?;
        let val_acc = evaluate(zt, &data.labels, &split.validation)?;
        let test_acc = evaluate(zt, &data.labels, &split.test)?;
        tracker.observe(val_acc, test_acc, &(mlp.clone(), gcn.clone()));
        history.push(EpochRecord {
            epoch,
            l_mlp: Some(l_mlp),
            l_gcn: Some(l_gcn),
            l_final,
            train_acc,
            val_acc,
            test_acc,
        });
        if tracker.stale > cfg.patience {
            break;
        }
    }
    let (best_mlp, best_gcn) = tracker
        .params
        .clone()
        .unwrap_or((mlp.clone(), gcn.clone()));
    Ok(BmgcnModel {
        outcome: TrainOutcome {
            history,
            best_val_acc: tracker.best_val.max(0.0),
            test_acc: tracker.test_at_best,
        },
        mlp: best_mlp,
        gcn: best_gcn,
        pretrained_h,
    })
}

/// Symmetric-normalized adjacency with self-loops, as constant sparse values.
fn normalized_adjacency(g: &Graph) -> (Rc<SparsePattern>, Tensor) {
    let pattern = Rc::new(SparsePattern::from_graph(g, DiagMode::All));
    let mut vals = Tensor::zeros(pattern.nnz(), 1);
    let deg = |i: usize| (g.degree(i) + 1) as f64;
    for (i, j, k) in pattern.entries() {
        vals.set(k, 0, 1.0 / (deg(i) * deg(j)).sqrt());
    }
    (pattern, vals)
}

/// Plain 2-layer GCN baseline on the normalized adjacency.
pub fn train_baseline_gcn(
    data: &GraphData,
    split: &SplitMask,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 2));
    let d = data.feature_dim();
    let c = data.num_classes();
    let mut w1 = glorot(d, cfg.hidden, &mut rng);
    let mut w2 = glorot(cfg.hidden, c, &mut rng);
    let (pattern, adj_vals) = normalized_adjacency(&data.graph);
    let targets = one_hot(&data.labels, &vec![0.0; c]);
    let mut adam = AdamState::new(cfg.lr, cfg.weight_decay, &[w1.shape(), w2.shape()]);
    let mut history = Vec::new();
    let mut tracker: BestTracker<(Tensor, Tensor)> = BestTracker::new();

    let forward = |tape: &mut Tape, w1: &Tensor, w2: &Tensor, train: bool| -> (VarId, VarId, VarId) {
        let x = tape.constant(data.features.clone());
        let av = tape.constant(adj_vals.clone());
        let v1 = tape.input(w1.clone(), true);
        let v2 = tape.input(w2.clone(), true);
        let xd = tape.dropout(x, cfg.dropout, train);
        let h = tape.spmm(&pattern, av, xd);
        let h = tape.matmul(h, v1);
        let h = tape.relu(h);
        let hd = tape.dropout(h, cfg.dropout, train);
        let av2 = tape.constant(adj_vals.clone());
        let z = tape.spmm(&pattern, av2, hd);
        let z = tape.matmul(z, v2);
        (z, v1, v2)
    };

    for epoch in 0..cfg.joint_epochs {
        let mut tape = Tape::with_seed(mix_seed(cfg.seed, 0x30000 + epoch as u64));
        let (z, v1, v2) = forward(&mut tape, &w1, &w2, true);
        let loss = tape.softmax_cross_entropy_masked(z, targets.clone(), &split.train);
        let loss_val = tape.value(loss).scalar();
        check_finite_loss(loss_val, epoch)?;
        let grads = tape.backward(loss)?;
        adam.step(&mut [&mut w1, &mut w2], &[grads.wrt(v1), grads.wrt(v2)]);

        let mut etape = Tape::new();
        let (z, _, _) = forward(&mut etape, &w1, &w2, false);
        let zt = etape.value(z);
        let train_acc = evaluate(zt, &data.labels, &split.train)?;
        let val_acc = evaluate(zt, &data.labels, &split.validation)?;
        let test_acc = evaluate(zt, &data.labels, &split.test)?;
        tracker.observe(val_acc, test_acc, &(w1.clone(), w2.clone()));
        history.push(EpochRecord {
            epoch,
            l_mlp: None,
            l_gcn: Some(loss_val),
            l_final: loss_val,
            train_acc,
            val_acc,
            test_acc,
        });
        if tracker.stale > cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        history,
        best_val_acc: tracker.best_val.max(0.0),
        test_acc: tracker.test_at_best,
    })
}

/// Attribute-only MLP baseline: the soft-label architecture trained alone.
pub fn train_baseline_mlp(
    data: &GraphData,
    split: &SplitMask,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 3));
    let mut mlp = MlpParams::init(data.feature_dim(), cfg.hidden, data.num_classes(), &mut rng);
    let mut mlp_cfg = cfg.clone();
    mlp_cfg.pretrain_epochs = cfg.joint_epochs;
    let history = pretrain_mlp(&mut mlp, data, split, &mlp_cfg)?;
    let best = history
        .iter()
        .cloned()
        .reduce(|best, r| if r.val_acc > best.val_acc { r } else { best })
        .ok_or_else(|| Error::Config("baseline MLP trained for zero epochs".into()))?;
    Ok(TrainOutcome {
        history,
        best_val_acc: best.val_acc,
        test_acc: best.test_acc,
    })
}

/// Mean and sample standard deviation over split accuracies.
#[derive(Clone, Debug, Serialize)]
pub struct SplitSummary {
    pub accs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(accs: &[f64]) -> SplitSummary {
    let n = accs.len();
    assert!(n > 0);
    let mean = accs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    SplitSummary { accs: accs.to_vec(), mean, std }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    BmGcn,
    BaselineGcn,
    BaselineMlp,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::BmGcn => "bm-gcn",
            ModelKind::BaselineGcn => "gcn",
            ModelKind::BaselineMlp => "mlp",
        }
    }
}

/// Aggregate a model over stratified 60/20/20 splits.
///
/// Split `s` uses split seed `split_seed + s` and model seed derived from
/// `cfg.seed` and `s`, so results reproduce from the two seeds alone.
pub fn run_splits(
    data: &GraphData,
    cfg: &TrainConfig,
    kind: ModelKind,
    n_splits: usize,
    split_seed: u64,
) -> Result<(SplitSummary, Vec<TrainOutcome>)> {
    assert!(n_splits > 0);
    let mut accs = Vec::with_capacity(n_splits);
    let mut outcomes = Vec::with_capacity(n_splits);
    for s in 0..n_splits {
        let split = crate::graph::stratified_split(&data.labels, split_seed + s as u64)?;
        let mut run_cfg = cfg.clone();
        run_cfg.seed = split_run_seed(cfg.seed, s);
        let outcome = match kind {
            ModelKind::BmGcn => train_bmgcn(data, &split, &run_cfg)?.outcome,
            ModelKind::BaselineGcn => train_baseline_gcn(data, &split, &run_cfg)?,
            ModelKind::BaselineMlp => train_baseline_mlp(data, &split, &run_cfg)?,
        };
        accs.push(outcome.test_acc);
        outcomes.push(outcome);
    }
    Ok((summarize(&accs), outcomes))
}
