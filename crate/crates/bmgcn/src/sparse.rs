//! Fixed sparse supports in compressed-row form.
//!
//! A [`SparsePattern`] is an index structure only; the values living on it are
//! ordinary tensors of shape `(nnz, 1)` aligned with the stored entry order.

use crate::graph::Graph;

/// Which diagonal entries to add on top of a graph's edge support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagMode {
    /// Edge support only.
    None,
    /// Self-loops only for nodes with no neighbors, so no row is empty.
    IsolatedOnly,
    /// Self-loop on every node.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsePattern {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
}

impl SparsePattern {
    /// Build from per-row sorted column lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]), "row columns must be sorted");
            debug_assert!(row.iter().all(|&j| j < n));
            cols.extend_from_slice(&row);
            offsets.push(cols.len());
        }
        SparsePattern { n, offsets, cols }
    }

    pub fn from_graph(g: &Graph, diag: DiagMode) -> Self {
        let n = g.n();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let nbrs = g.neighbors(i);
            let want_diag = match diag {
                DiagMode::None => false,
                DiagMode::IsolatedOnly => nbrs.is_empty(),
                DiagMode::All => true,
            };
            let mut row = Vec::with_capacity(nbrs.len() + usize::from(want_diag));
            let mut placed = false;
            for &j in nbrs {
                if want_diag && !placed && j > i {
                    row.push(i);
                    placed = true;
                }
                row.push(j);
            }
            if want_diag && !placed {
                row.push(i);
            }
            rows.push(row);
        }
        SparsePattern::from_rows(n, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column indices stored in row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn has_empty_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.offsets[i] == self.offsets[i + 1])
    }

    /// Iterate `(row, col, entry_index)` over all stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row_range(i)
                .map(move |k| (i, self.cols[k], k))
        })
    }
}
