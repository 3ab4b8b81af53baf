//! Reverse-mode differentiation over dense matrices, with the sparse-aware
//! operators the block-guided pipeline needs.
//!
//! A [`Tape`] records primitive operations in topological order as it
//! executes them. [`Tape::backward`] walks the record in reverse, applying
//! each primitive's adjoint rule; gradient accumulation order is therefore
//! fixed by tape order, which keeps runs deterministic under a fixed seed.
//!
//! Values living on a [`SparsePattern`] are tensors of shape `(nnz, 1)`
//! aligned with the pattern's entry order.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparsePattern;
use crate::tensor::Tensor;

/// Handle to a value recorded on a tape.
pub type VarId = usize;

enum Op {
    Input,
    MatMul(VarId, VarId),
    Transpose(VarId),
    Add(VarId, VarId),
    AddRowBias(VarId, VarId),
    Scale(VarId, f64),
    Hadamard(VarId, VarId),
    /// Element-wise a / max(b, eps); rows of b entirely below eps abort.
    HadamardDivGuarded(VarId, VarId),
    Relu(VarId),
    /// Mask entries are 0 or 1/(1-rate) (inverted scaling).
    Dropout { input: VarId, mask: Vec<f64> },
    RowSoftmax(VarId),
    MaskedRowSoftmax { pattern: Rc<SparsePattern>, vals: VarId },
    /// value(i,j) = B_i Q B_j^T at every stored (i,j).
    EdgewiseBilinear { pattern: Rc<SparsePattern>, b: VarId, q: VarId },
    /// out = S * dense where S holds `vals` on `pattern`.
    Spmm { pattern: Rc<SparsePattern>, vals: VarId, dense: VarId },
    ScaleDiag(VarId, f64),
    /// Rows where mask is true came from a constant; others from `soft`.
    AssembleRows { soft: VarId, mask: Vec<bool> },
    /// Mean over masked rows of softmax cross-entropy; `targets` are one-hot.
    SceMasked { logits: VarId, targets: Tensor, mask: Vec<bool> },
    Sum(VarId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::Add(..) => "add",
            Op::AddRowBias(..) => "add_row_bias",
            Op::Scale(..) => "scale",
            Op::Hadamard(..) => "hadamard",
            Op::HadamardDivGuarded(..) => "hadamard_div",
            Op::Relu(..) => "relu",
            Op::Dropout { .. } => "dropout",
            Op::RowSoftmax(..) => "row_softmax",
            Op::MaskedRowSoftmax { .. } => "masked_row_softmax",
            Op::EdgewiseBilinear { .. } => "edgewise_bilinear",
            Op::Spmm { .. } => "spmm",
            Op::ScaleDiag(..) => "scale_diag",
            Op::AssembleRows { .. } => "assemble_rows",
            Op::SceMasked { .. } => "softmax_cross_entropy_masked",
            Op::Sum(..) => "sum",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

const DIV_EPS: f64 = 1e-12;

pub struct Tape {
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Tape {
    pub fn new() -> Self {
        Tape::with_seed(0)
    }

    /// `seed` drives dropout mask generation only.
    pub fn with_seed(seed: u64) -> Self {
        Tape {
            nodes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn value(&self, v: VarId) -> &Tensor {
        &self.nodes[v].value
    }

    pub fn requires_grad(&self, v: VarId) -> bool {
        self.nodes[v].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> VarId {
        self.nodes.push(Node { value, op, requires_grad });
        self.nodes.len() - 1
    }

    fn rg(&self, v: VarId) -> bool {
        self.nodes[v].requires_grad
    }

    pub fn input(&mut self, t: Tensor, requires_grad: bool) -> VarId {
        debug_assert!(t.is_finite(), "input tensor must be finite");
        self.push(t, Op::Input, requires_grad)
    }

    pub fn constant(&mut self, t: Tensor) -> VarId {
        self.input(t, false)
    }

    /// Re-enter a value as a constant, cutting the gradient path.
    pub fn detach(&mut self, v: VarId) -> VarId {
        let t = self.nodes[v].value.clone();
        self.push(t, Op::Input, false)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> VarId {
        let v = self.value(a).matmul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMul(a, b), rg)
    }

    pub fn transpose(&mut self, a: VarId) -> VarId {
        let v = self.value(a).transpose();
        let rg = self.rg(a);
        self.push(v, Op::Transpose(a), rg)
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> VarId {
        let v = self.value(a).add(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Add(a, b), rg)
    }

    /// Add a `1 x c` bias row to every row of `a`.
    pub fn add_row_bias(&mut self, a: VarId, bias: VarId) -> VarId {
        let (ar, ac) = self.value(a).shape();
        let bt = self.value(bias);
        assert_eq!(bt.shape(), (1, ac), "bias must be 1x{ac}");
        let mut out = self.value(a).clone();
        for i in 0..ar {
            let brow: Vec<f64> = bt.row(0).to_vec();
            for (o, b) in out.row_mut(i).iter_mut().zip(&brow) {
                *o += *b;
            }
        }
        let rg = self.rg(a) || self.rg(bias);
        self.push(out, Op::AddRowBias(a, bias), rg)
    }

    pub fn scale(&mut self, a: VarId, k: f64) -> VarId {
        let v = self.value(a).scale(k);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, k), rg)
    }

    pub fn hadamard(&mut self, a: VarId, b: VarId) -> VarId {
        let v = self.value(a).hadamard(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Hadamard(a, b), rg)
    }

    /// Element-wise division with an epsilon guard on the denominator.
    ///
    /// Errors if an entire denominator row sits below the guard: that signals
    /// a class with no incident edge mass, and silently zeroing the row would
    /// hide it.
    pub fn hadamard_div_guarded(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let at = self.value(a);
        let bt = self.value(b);
        assert_eq!(at.shape(), bt.shape(), "hadamard_div shape mismatch");
        for i in 0..bt.rows() {
            if bt.row(i).iter().all(|&v| v.abs() < DIV_EPS) {
                return Err(Error::Numeric(format!(
                    "degenerate denominator: row {i} has no mass (a class with zero incident edge mass)"
                )));
            }
        }
        let v = at.zip(bt, |x, y| x / y.max(DIV_EPS));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::HadamardDivGuarded(a, b), rg))
    }

    pub fn relu(&mut self, a: VarId) -> VarId {
        let v = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(v, Op::Relu(a), rg)
    }

    /// Inverted dropout: kept entries scale by 1/(1-rate); eval mode is the
    /// identity (returns `a` unchanged).
    pub fn dropout(&mut self, a: VarId, rate: f64, train: bool) -> VarId {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
        if !train || rate == 0.0 {
            return a;
        }
        let keep = 1.0 - rate;
        let n = self.value(a).data().len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let (r, c) = self.value(a).shape();
        let masked = Tensor::from_vec(
            r,
            c,
            self.value(a)
                .data()
                .iter()
                .zip(&mask)
                .map(|(&v, &m)| v * m)
                .collect(),
        );
        let rg = self.rg(a);
        self.push(masked, Op::Dropout { input: a, mask }, rg)
    }

    pub fn row_softmax(&mut self, a: VarId) -> VarId {
        let v = self.value(a).row_softmax();
        let rg = self.rg(a);
        self.push(v, Op::RowSoftmax(a), rg)
    }

    /// Softmax per pattern row over the stored entries only.
    pub fn masked_row_softmax(
        &mut self,
        pattern: &Rc<SparsePattern>,
        vals: VarId,
    ) -> Result<VarId> {
        assert_eq!(
            self.value(vals).shape(),
            (pattern.nnz(), 1),
            "sparse values must be (nnz, 1)"
        );
        if let Some(i) = pattern.has_empty_row() {
            return Err(Error::Numeric(format!(
                "masked_row_softmax: row {i} of the support is empty (isolated node without self-loop)"
            )));
        }
        let vt = self.value(vals);
        let mut out = Tensor::zeros(pattern.nnz(), 1);
        for i in 0..pattern.n() {
            let range = pattern.row_range(i);
            let max = range
                .clone()
                .map(|k| vt.get(k, 0))
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for k in range.clone() {
                let e = (vt.get(k, 0) - max).exp();
                out.set(k, 0, e);
                sum += e;
            }
            for k in range {
                out.set(k, 0, out.get(k, 0) / sum);
            }
        }
        let rg = self.rg(vals);
        Ok(self.push(
            out,
            Op::MaskedRowSoftmax { pattern: Rc::clone(pattern), vals },
            rg,
        ))
    }

    /// Sparse values on `pattern`: entry at stored (i,j) is `B_i Q B_j^T`.
    pub fn edgewise_bilinear(
        &mut self,
        b: VarId,
        q: VarId,
        pattern: &Rc<SparsePattern>,
    ) -> VarId {
        let bt = self.value(b);
        let qt = self.value(q);
        let c = bt.cols();
        assert_eq!(qt.shape(), (c, c), "Q must be cxc");
        assert_eq!(bt.rows(), pattern.n(), "B rows must match pattern");
        let mut out = Tensor::zeros(pattern.nnz(), 1);
        for i in 0..pattern.n() {
            let bi = bt.row(i);
            // qb_i = B_i Q, reused across the row's neighbors
            let mut qbi = vec![0.0; c];
            for (r, &br) in bi.iter().enumerate() {
                if br == 0.0 {
                    continue;
                }
                for (t, qb) in qbi.iter_mut().enumerate() {
                    *qb += br * qt.get(r, t);
                }
            }
            for k in pattern.row_range(i) {
                let j = pattern.row(i)[k - pattern.row_range(i).start];
                let bj = bt.row(j);
                let v: f64 = qbi.iter().zip(bj).map(|(a, b)| a * b).sum();
                out.set(k, 0, v);
            }
        }
        let rg = self.rg(b) || self.rg(q);
        self.push(
            out,
            Op::EdgewiseBilinear { pattern: Rc::clone(pattern), b, q },
            rg,
        )
    }

    /// Multiply the sparse matrix (`vals` on `pattern`) with a dense matrix.
    pub fn spmm(&mut self, pattern: &Rc<SparsePattern>, vals: VarId, dense: VarId) -> VarId {
        assert_eq!(self.value(vals).shape(), (pattern.nnz(), 1));
        let dt = self.value(dense);
        assert_eq!(dt.rows(), pattern.n(), "dense rows must match pattern");
        let w = dt.cols();
        let vt = self.value(vals);
        let dt = self.value(dense);
        let mut out = Tensor::zeros(pattern.n(), w);
        for (i, j, k) in pattern.entries() {
            let v = vt.get(k, 0);
            if v == 0.0 {
                continue;
            }
            let src = dt.row(j);
            let orow = &mut out.data_mut()[i * w..(i + 1) * w];
            for (o, s) in orow.iter_mut().zip(src) {
                *o += v * s;
            }
        }
        let rg = self.rg(vals) || self.rg(dense);
        self.push(out, Op::Spmm { pattern: Rc::clone(pattern), vals, dense }, rg)
    }

    /// Copy with the main diagonal scaled by `alpha`.
    pub fn scale_diag(&mut self, a: VarId, alpha: f64) -> VarId {
        let t = self.value(a);
        assert_eq!(t.rows(), t.cols(), "scale_diag needs a square matrix");
        let mut out = t.clone();
        for i in 0..out.rows() {
            let v = out.get(i, i);
            out.set(i, i, alpha * v);
        }
        let rg = self.rg(a);
        self.push(out, Op::ScaleDiag(a, alpha), rg)
    }

    /// Rows where `mask` is true are replaced by the constant `hard` rows;
    /// gradient flows only to the remaining (soft) rows.
    pub fn assemble_rows(&mut self, soft: VarId, hard: Tensor, mask: &[bool]) -> VarId {
        let st = self.value(soft);
        assert_eq!(st.shape(), hard.shape(), "assemble shape mismatch");
        assert_eq!(mask.len(), st.rows());
        let mut out = st.clone();
        for (i, &m) in mask.iter().enumerate() {
            if m {
                let row: Vec<f64> = hard.row(i).to_vec();
                out.row_mut(i).copy_from_slice(&row);
            }
        }
        let rg = self.rg(soft);
        self.push(out, Op::AssembleRows { soft, mask: mask.to_vec() }, rg)
    }

    /// Mean over masked rows of cross-entropy with fused softmax; `logits`
    /// are unnormalized, `targets` one-hot constants.
    pub fn softmax_cross_entropy_masked(
        &mut self,
        logits: VarId,
        targets: Tensor,
        mask: &[bool],
    ) -> VarId {
        let lt = self.value(logits);
        assert_eq!(lt.shape(), targets.shape(), "logits/targets shape mismatch");
        assert_eq!(mask.len(), lt.rows());
        let m = mask.iter().filter(|&&b| b).count();
        assert!(m > 0, "cross-entropy mask is empty");
        let mut loss = 0.0;
        for (i, &active) in mask.iter().enumerate() {
            if !active {
                continue;
            }
            let row = lt.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            let dot: f64 = row.iter().zip(targets.row(i)).map(|(&z, &t)| z * t).sum();
            loss += lse - dot;
        }
        loss /= m as f64;
        let rg = self.rg(logits);
        self.push(
            Tensor::from_vec(1, 1, vec![loss]),
            Op::SceMasked { logits, targets, mask: mask.to_vec() },
            rg,
        )
    }

    pub fn sum(&mut self, a: VarId) -> VarId {
        let v = self.value(a).sum();
        let rg = self.rg(a);
        self.push(Tensor::from_vec(1, 1, vec![v]), Op::Sum(a), rg)
    }

    /// Reverse sweep from a scalar loss. Returns one gradient slot per
    /// recorded variable; tensors with no path to the loss keep zeros.
    pub fn backward(&self, loss: VarId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Numeric(format!(
                "backward requires a scalar loss, got {}x{}",
                self.value(loss).rows(),
                self.value(loss).cols()
            )));
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.rows(), n.value.cols()))
            .collect();
        grads[loss].set(0, 0, 1.0);

        for id in (0..=loss).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            if node.value.has_nan() {
                return Err(Error::Numeric(format!(
                    "NaN in forward value produced by op `{}` (var {id})",
                    node.op.name()
                )));
            }
            if grads[id].has_nan() {
                return Err(Error::Numeric(format!(
                    "NaN in gradient of op `{}` (var {id})",
                    node.op.name()
                )));
            }
            let g = grads[id].clone();
            match &node.op {
                Op::Input => {}
                Op::MatMul(a, b) => {
                    if self.rg(*a) {
                        let d = g.matmul(&self.value(*b).transpose());
                        grads[*a].add_assign(&d);
                    }
                    if self.rg(*b) {
                        let d = self.value(*a).transpose().matmul(&g);
                        grads[*b].add_assign(&d);
                    }
                }
                Op::Transpose(a) => {
                    if self.rg(*a) {
                        grads[*a].add_assign(&g.transpose());
                    }
                }
                Op::Add(a, b) => {
                    if self.rg(*a) {
                        grads[*a].add_assign(&g);
                    }
                    if self.rg(*b) {
                        grads[*b].add_assign(&g);
                    }
                }
                Op::AddRowBias(a, bias) => {
                    if self.rg(*a) {
                        grads[*a].add_assign(&g);
                    }
                    if self.rg(*bias) {
                        let mut d = Tensor::zeros(1, g.cols());
                        for i in 0..g.rows() {
                            for j in 0..g.cols() {
                                d.set(0, j, d.get(0, j) + g.get(i, j));
                            }
                        }
                        grads[*bias].add_assign(&d);
                    }
                }
                Op::Scale(a, k) => {
                    if self.rg(*a) {
                        grads[*a].add_assign(&g.scale(*k));
                    }
                }
                Op::Hadamard(a, b) => {
                    if self.rg(*a) {
                        grads[*a].add_assign(&g.hadamard(self.value(*b)));
                    }
                    if self.rg(*b) {
                        grads[*b].add_assign(&g.hadamard(self.value(*a)));
                    }
                }
                Op::HadamardDivGuarded(a, b) => {
                    let bt = self.value(*b);
                    if self.rg(*a) {
                        let d = g.zip(bt, |gv, bv| gv / bv.max(DIV_EPS));
                        grads[*a].add_assign(&d);
                    }
                    if self.rg(*b) {
                        let at = self.value(*a);
                        let mut d = Tensor::zeros(bt.rows(), bt.cols());
                        for i in 0..bt.rows() {
                            for j in 0..bt.cols() {
                                let bv = bt.get(i, j);
                                // clamped region has zero derivative w.r.t. b
                                if bv >= DIV_EPS {
                                    d.set(i, j, -g.get(i, j) * at.get(i, j) / (bv * bv));
                                }
                            }
                        }
                        grads[*b].add_assign(&d);
                    }
                }
                Op::Relu(a) => {
                    if self.rg(*a) {
                        let d = g.zip(self.value(*a), |gv, av| if av > 0.0 { gv } else { 0.0 });
                        grads[*a].add_assign(&d);
                    }
                }
                Op::Dropout { input, mask } => {
                    if self.rg(*input) {
                        let mut d = g.clone();
                        for (v, m) in d.data_mut().iter_mut().zip(mask) {
                            *v *= *m;
                        }
                        grads[*input].add_assign(&d);
                    }
                }
                Op::RowSoftmax(a) => {
                    if self.rg(*a) {
                        let s = &node.value;
                        let mut d = Tensor::zeros(s.rows(), s.cols());
                        for i in 0..s.rows() {
                            let dot: f64 = g.row(i).iter().zip(s.row(i)).map(|(x, y)| x * y).sum();
                            for j in 0..s.cols() {
                                d.set(i, j, s.get(i, j) * (g.get(i, j) - dot));
                            }
                        }
                        grads[*a].add_assign(&d);
                    }
                }
                Op::MaskedRowSoftmax { pattern, vals } => {
                    if self.rg(*vals) {
                        let s = &node.value;
                        let mut d = Tensor::zeros(s.rows(), 1);
                        for i in 0..pattern.n() {
                            let range = pattern.row_range(i);
                            let dot: f64 = range
                                .clone()
                                .map(|k| g.get(k, 0) * s.get(k, 0))
                                .sum();
                            for k in range {
                                d.set(k, 0, s.get(k, 0) * (g.get(k, 0) - dot));
                            }
                        }
                        grads[*vals].add_assign(&d);
                    }
                }
                Op::EdgewiseBilinear { pattern, b, q } => {
                    let bt = self.value(*b);
                    let qt = self.value(*q);
                    let c = bt.cols();
                    let rg_b = self.rg(*b);
                    let rg_q = self.rg(*q);
                    let mut db = Tensor::zeros(bt.rows(), c);
                    let mut dq = Tensor::zeros(c, c);
                    for (i, j, k) in pattern.entries() {
                        let gk = g.get(k, 0);
                        if gk == 0.0 {
                            continue;
                        }
                        let bi = bt.row(i);
                        let bj = bt.row(j);
                        if rg_b {
                            // d/dB_i = B_j Q^T, d/dB_j = B_i Q
                            for r in 0..c {
                                let mut acc = 0.0;
                                for t in 0..c {
                                    acc += qt.get(r, t) * bj[t];
                                }
                                db.set(i, r, db.get(i, r) + gk * acc);
                            }
                            for t in 0..c {
                                let mut acc = 0.0;
                                for r in 0..c {
                                    acc += bi[r] * qt.get(r, t);
                                }
                                db.set(j, t, db.get(j, t) + gk * acc);
                            }
                        }
                        if rg_q {
                            for r in 0..c {
                                for t in 0..c {
                                    dq.set(r, t, dq.get(r, t) + gk * bi[r] * bj[t]);
                                }
                            }
                        }
                    }
                    if rg_b {
                        grads[*b].add_assign(&db);
                    }
                    if rg_q {
                        grads[*q].add_assign(&dq);
                    }
                }
                Op::Spmm { pattern, vals, dense } => {
                    let vt = self.value(*vals);
                    let dt = self.value(*dense);
                    if self.rg(*vals) {
                        let mut d = Tensor::zeros(vt.rows(), 1);
                        for (i, j, k) in pattern.entries() {
                            let dot: f64 =
                                g.row(i).iter().zip(dt.row(j)).map(|(x, y)| x * y).sum();
                            d.set(k, 0, dot);
                        }
                        grads[*vals].add_assign(&d);
                    }
                    if self.rg(*dense) {
                        let mut d = Tensor::zeros(dt.rows(), dt.cols());
                        for (i, j, k) in pattern.entries() {
                            let v = vt.get(k, 0);
                            if v == 0.0 {
                                continue;
                            }
                            for col in 0..dt.cols() {
                                d.set(j, col, d.get(j, col) + v * g.get(i, col));
                            }
                        }
                        grads[*dense].add_assign(&d);
                    }
                }
                Op::ScaleDiag(a, alpha) => {
                    if self.rg(*a) {
                        let mut d = g.clone();
                        for i in 0..d.rows() {
                            let v = d.get(i, i);
                            d.set(i, i, alpha * v);
                        }
                        grads[*a].add_assign(&d);
                    }
                }
                Op::AssembleRows { soft, mask } => {
                    if self.rg(*soft) {
                        let mut d = g.clone();
                        for (i, &m) in mask.iter().enumerate() {
                            if m {
                                for v in d.row_mut(i) {
                                    *v = 0.0;
                                }
                            }
                        }
                        grads[*soft].add_assign(&d);
                    }
                }
                Op::SceMasked { logits, targets, mask } => {
                    if self.rg(*logits) {
                        let lt = self.value(*logits);
                        let m = mask.iter().filter(|&&b| b).count() as f64;
                        let gout = g.get(0, 0);
                        let probs = lt.row_softmax();
                        let mut d = Tensor::zeros(lt.rows(), lt.cols());
                        for (i, &active) in mask.iter().enumerate() {
                            if !active {
                                continue;
                            }
                            for j in 0..lt.cols() {
                                d.set(i, j, gout * (probs.get(i, j) - targets.get(i, j)) / m);
                            }
                        }
                        grads[*logits].add_assign(&d);
                    }
                }
                Op::Sum(a) => {
                    if self.rg(*a) {
                        let gout = g.get(0, 0);
                        let (r, c) = self.value(*a).shape();
                        grads[*a].add_assign(&Tensor::full(r, c, gout));
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Gradients indexed by [`VarId`], produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn wrt(&self, v: VarId) -> &Tensor {
        &self.grads[v]
    }
}
