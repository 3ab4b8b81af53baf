//! Graph, label, attribute and split containers plus structural statistics.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Node attributes: one row per node, `d` feature columns.
pub type AttributeMatrix = Tensor;

/// Immutable undirected graph in compressed-row form.
///
/// Stored symmetric, with no self-loops and no duplicate entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
}

impl Graph {
    /// Symmetrize, deduplicate and drop self-loops from an edge list.
    pub fn from_edges(pairs: &[(usize, usize)], n: usize) -> Result<Graph> {
        if n == 0 {
            return Err(Error::Data("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Data(format!(
                    "edge ({a},{b}) out of range for n={n}"
                )));
            }
            if a == b {
                continue;
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut rows = vec![Vec::new(); n];
        for &(a, b) in &set {
            rows[a].push(b);
            rows[b].push(a);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable();
            cols.extend_from_slice(&row);
            offsets.push(cols.len());
        }
        Ok(Graph { n, offsets, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Undirected edge list with `i < j`, in sorted order.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Per-node class ids; `None` marks an unlabeled node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<Option<usize>>,
    c: usize,
}

impl LabelAssignment {
    pub fn new(labels: Vec<Option<usize>>, c: usize) -> Result<Self> {
        for l in labels.iter().flatten() {
            if *l >= c {
                return Err(Error::Data(format!("label {l} out of range for c={c}")));
            }
        }
        Ok(LabelAssignment { labels, c })
    }

    pub fn from_full(labels: Vec<usize>, c: usize) -> Result<Self> {
        Self::new(labels.into_iter().map(Some).collect(), c)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|l| l.is_some())
    }

    /// Count of labeled nodes per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.c];
        for l in self.labels.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }
}

/// One-hot encode labels; unlabeled rows get `default` (zeros or uniform).
pub fn one_hot(y: &LabelAssignment, default: &[f64]) -> Tensor {
    let c = y.num_classes();
    assert_eq!(default.len(), c, "default row must have c entries");
    let mut out = Tensor::zeros(y.n(), c);
    for i in 0..y.n() {
        match y.get(i) {
            Some(l) => out.set(i, l, 1.0),
            None => out.row_mut(i).copy_from_slice(default),
        }
    }
    out
}

/// Mean over non-isolated nodes of the same-class neighbor fraction.
///
/// Isolated nodes are excluded: the per-node fraction divides by the
/// neighborhood size, which is undefined at degree zero.
pub fn homophily_ratio(g: &Graph, y: &LabelAssignment) -> Result<f64> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..g.n() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let yi = y
            .get(i)
            .ok_or_else(|| Error::Data(format!("node {i} has edges but no label")))?;
        let mut same = 0usize;
        for &j in nbrs {
            let yj = y
                .get(j)
                .ok_or_else(|| Error::Data(format!("node {j} has edges but no label")))?;
            if yj == yi {
                same += 1;
            }
        }
        total += same as f64 / nbrs.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Ok(0.0);
    }
    Ok(total / counted as f64)
}

/// Disjoint train/validation/test masks over the nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMask {
    pub train: Vec<bool>,
    pub validation: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMask {
    pub fn new(train: Vec<bool>, validation: Vec<bool>, test: Vec<bool>) -> Result<Self> {
        let n = train.len();
        if validation.len() != n || test.len() != n {
            return Err(Error::Data("split masks must have equal length".into()));
        }
        for i in 0..n {
            let k = usize::from(train[i]) + usize::from(validation[i]) + usize::from(test[i]);
            if k > 1 {
                return Err(Error::Data(format!("node {i} appears in multiple splits")));
            }
        }
        if !train.iter().any(|&b| b) {
            return Err(Error::Data("training mask is empty".into()));
        }
        Ok(SplitMask { train, validation, test })
    }

    pub fn n(&self) -> usize {
        self.train.len()
    }

    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|&&b| b).count()
    }
}

/// Stratified 60/20/20 split per class, seeded. Unlabeled nodes join no split.
pub fn stratified_split(y: &LabelAssignment, seed: u64) -> Result<SplitMask> {
    let n = y.n();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); y.num_classes()];
    for i in 0..n {
        if let Some(l) = y.get(i) {
            per_class[l].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    for (class, ids) in per_class.iter_mut().enumerate() {
        if ids.len() < 5 {
            return Err(Error::Data(format!(
                "class {class} has only {} labeled nodes; need at least 5 to split",
                ids.len()
            )));
        }
        ids.shuffle(&mut rng);
        let m = ids.len();
        let n_train = ((m as f64) * 0.6).floor().max(1.0) as usize;
        let n_val = ((m as f64) * 0.2).floor().max(1.0) as usize;
        for (k, &i) in ids.iter().enumerate() {
            if k < n_train {
                train[i] = true;
            } else if k < n_train + n_val {
                val[i] = true;
            } else {
                test[i] = true;
            }
        }
    }
    SplitMask::new(train, val, test)
}
