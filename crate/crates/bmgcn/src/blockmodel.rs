//! Block-modeling core: label assembly, block matrix H, block similarity
//! matrix Q, edge weighting and topology normalization.
//!
//! The edge weight matrix is never materialized densely: only the support of
//! the adjacency (plus requested self-loops) matters after the Hadamard mask,
//! so weights are computed entry-wise on that support.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::graph::{one_hot, Graph, LabelAssignment};
use crate::sparse::{DiagMode, SparsePattern};
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

/// Replace soft-label rows of training nodes with their one-hot ground
/// truth. Ground-truth rows become constants; the rest keep their gradient
/// path into the MLP.
pub fn assemble_labels(
    tape: &mut Tape,
    b: VarId,
    y: &LabelAssignment,
    train_mask: &[bool],
) -> Result<VarId> {
    for (i, &m) in train_mask.iter().enumerate() {
        if m && y.get(i).is_none() {
            return Err(Error::Data(format!("training node {i} has no ground-truth label")));
        }
    }
    let hard = one_hot(y, &vec![0.0; y.num_classes()]);
    Ok(tape.assemble_rows(b, hard, train_mask))
}

/// H = (Ys^T A Ys) ./ (Ys^T A E) over the symmetric 0/1 adjacency.
///
/// Errors if some class has zero incident edge mass (its denominator row
/// would be all zeros).
pub fn block_matrix(tape: &mut Tape, ys: VarId, g: &Graph) -> Result<VarId> {
    let n = g.n();
    assert_eq!(tape.value(ys).rows(), n, "label rows must match graph");
    let c = tape.value(ys).cols();
    let pattern = Rc::new(SparsePattern::from_graph(g, DiagMode::None));
    let ones = tape.constant(Tensor::full(pattern.nnz(), 1, 1.0));
    let a_ys = tape.spmm(&pattern, ones, ys);
    let yst = tape.transpose(ys);
    let num = tape.matmul(yst, a_ys);
    // A E has constant rows: row i is deg(i) in every column.
    let mut deg = Tensor::zeros(n, c);
    for i in 0..n {
        let d = g.degree(i) as f64;
        for j in 0..c {
            deg.set(i, j, d);
        }
    }
    let deg = tape.constant(deg);
    let den = tape.matmul(yst, deg);
    tape.hadamard_div_guarded(num, den)
}

/// Q = H H^T with the diagonal scaled by `alpha`.
pub fn similarity_matrix(tape: &mut Tape, h: VarId, alpha: f64) -> VarId {
    assert!(alpha >= 0.0);
    let ht = tape.transpose(h);
    let q = tape.matmul(h, ht);
    tape.scale_diag(q, alpha)
}

/// Refined adjacency: pattern plus the softmax-normalized weights on it.
pub struct RefinedAdjacency {
    pub pattern: Rc<SparsePattern>,
    /// `(nnz, 1)` values on `pattern`; rows sum to 1.
    pub weights: VarId,
}

/// Weight the support of A + beta*I by the pairwise propagation
/// probabilities B_i Q B_j^T, then softmax-normalize each row over its
/// stored entries.
///
/// Isolated nodes get a forced self-loop with multiplier `max(beta, 1)` so
/// no softmax row is empty.
pub fn refine_topology(
    tape: &mut Tape,
    b: VarId,
    q: VarId,
    g: &Graph,
    beta: f64,
) -> Result<RefinedAdjacency> {
    assert!(beta >= 0.0);
    let diag = if beta > 0.0 { DiagMode::All } else { DiagMode::IsolatedOnly };
    let pattern = Rc::new(SparsePattern::from_graph(g, diag));
    let omega = tape.edgewise_bilinear(b, q, &pattern);
    let mut mult = Tensor::zeros(pattern.nnz(), 1);
    for (i, j, k) in pattern.entries() {
        let m = if i != j {
            1.0
        } else if g.degree(i) == 0 {
            beta.max(1.0)
        } else {
            beta
        };
        mult.set(k, 0, m);
    }
    let mult = tape.constant(mult);
    let raw = tape.hadamard(omega, mult);
    let weights = tape.masked_row_softmax(&pattern, raw)?;
    Ok(RefinedAdjacency { pattern, weights })
}

/// Ground-truth block matrix from hard labels, by direct edge counting.
/// Used by `analyze` and as an independent cross-check in tests.
pub fn hard_block_matrix(g: &Graph, y: &LabelAssignment) -> Result<Tensor> {
    let c = y.num_classes();
    let mut num = Tensor::zeros(c, c);
    let mut den = vec![0.0; c];
    for i in 0..g.n() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let yi = y
            .get(i)
            .ok_or_else(|| Error::Data(format!("node {i} has edges but no label")))?;
        den[yi] += nbrs.len() as f64;
        for &j in nbrs {
            let yj = y
                .get(j)
                .ok_or_else(|| Error::Data(format!("node {j} has edges but no label")))?;
            num.set(yi, yj, num.get(yi, yj) + 1.0);
        }
    }
    let mut h = Tensor::zeros(c, c);
    for r in 0..c {
        if den[r] < 1e-12 {
            return Err(Error::Numeric(format!(
                "class {r} has zero incident edge mass; block matrix undefined"
            )));
        }
        for t in 0..c {
            h.set(r, t, num.get(r, t) / den[r]);
        }
    }
    Ok(h)
}

/// Q = H H^T with diagonal enhancement, on plain tensors.
pub fn hard_similarity(h: &Tensor, alpha: f64) -> Tensor {
    let mut q = h.matmul(&h.transpose());
    for i in 0..q.rows() {
        let v = q.get(i, i);
        q.set(i, i, alpha * v);
    }
    q
}
