//! Stochastic-block-model graphs with class-conditional binary features.
//!
//! The generator is the desk-scale testbed: pick the edge-probability matrix
//! to dial a graph anywhere between strong homophily and strong heterophily.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{AttributeMatrix, Graph, LabelAssignment};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct SbmSpec {
    pub n: usize,
    pub class_sizes: Vec<usize>,
    /// Symmetric c x c edge-probability matrix.
    pub p: Vec<Vec<f64>>,
    pub feature_dim: usize,
    pub flip_prob: f64,
    pub seed: u64,
}

impl SbmSpec {
    /// Uniform within/between probabilities, near-equal class sizes.
    pub fn uniform(n: usize, classes: usize, p_in: f64, p_out: f64, feature_dim: usize, flip_prob: f64, seed: u64) -> Self {
        let mut class_sizes = vec![n / classes; classes];
        for size in class_sizes.iter_mut().take(n % classes) {
            *size += 1;
        }
        let p = (0..classes)
            .map(|r| (0..classes).map(|t| if r == t { p_in } else { p_out }).collect())
            .collect();
        SbmSpec { n, class_sizes, p, feature_dim, flip_prob, seed }
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes();
        if c == 0 || self.n == 0 {
            return Err(Error::Config("SBM needs at least one class and node".into()));
        }
        if self.class_sizes.iter().sum::<usize>() != self.n {
            return Err(Error::Config("class sizes must sum to n".into()));
        }
        if self.class_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("class sizes must be positive".into()));
        }
        if self.p.len() != c || self.p.iter().any(|row| row.len() != c) {
            return Err(Error::Config("P must be c x c".into()));
        }
        for r in 0..c {
            for t in 0..c {
                let v = self.p[r][t];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config("P entries must lie in [0,1]".into()));
                }
                if (v - self.p[t][r]).abs() > 1e-12 {
                    return Err(Error::Config("P must be symmetric".into()));
                }
            }
        }
        if !(0.0..0.5).contains(&self.flip_prob) {
            return Err(Error::Config("flip_prob must lie in [0, 0.5)".into()));
        }
        Ok(())
    }

    /// Planted class of each node: contiguous blocks in class order.
    pub fn planted_labels(&self) -> LabelAssignment {
        let mut labels = Vec::with_capacity(self.n);
        for (class, &size) in self.class_sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(Some(class)).take(size));
        }
        LabelAssignment::new(labels, self.num_classes()).expect("planted labels are in range")
    }
}

/// Exact Bernoulli sampling over all unordered pairs; O(n^2) but fine at
/// desk scale. Deterministic given the spec's seed.
pub fn sample_sbm(spec: &SbmSpec) -> Result<(Graph, LabelAssignment)> {
    spec.validate()?;
    let labels = spec.planted_labels();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::new();
    for i in 0..spec.n {
        let ci = labels.get(i).unwrap();
        for j in (i + 1)..spec.n {
            let cj = labels.get(j).unwrap();
            let p = spec.p[ci][cj];
            if rng.gen::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(&pairs, spec.n)?;
    Ok((graph, labels))
}

/// Analytic expectation of the homophily ratio under the SBM: the expected
/// same-class neighbor fraction for a node of each class, size-weighted.
pub fn planted_homophily(spec: &SbmSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.n as f64;
    let mut h = 0.0;
    for (r, &size_r) in spec.class_sizes.iter().enumerate() {
        let sr = size_r as f64;
        let same = (sr - 1.0) * spec.p[r][r];
        let mut total = same;
        for (t, &size_t) in spec.class_sizes.iter().enumerate() {
            if t != r {
                total += size_t as f64 * spec.p[r][t];
            }
        }
        if total == 0.0 {
            return Err(Error::Numeric(format!(
                "class {r} has expected degree zero; planted homophily undefined"
            )));
        }
        h += (sr / n) * (same / total);
    }
    Ok(h)
}

/// Class-prototype binary features with independent bit flips.
///
/// Class `r` owns a block of `floor(d/c)` ones at offset `r * floor(d/c)`;
/// every bit is flipped with probability `flip_prob`.
pub fn sample_features(
    y: &LabelAssignment,
    d: usize,
    flip_prob: f64,
    seed: u64,
) -> Result<AttributeMatrix> {
    let c = y.num_classes();
    if d < c {
        return Err(Error::Config(format!("feature_dim {d} must be >= class count {c}")));
    }
    if !(0.0..0.5).contains(&flip_prob) {
        return Err(Error::Config("flip_prob must lie in [0, 0.5)".into()));
    }
    let block = d / c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Tensor::zeros(y.n(), d);
    for i in 0..y.n() {
        let class = y.get(i).unwrap_or(0);
        let lo = class * block;
        let hi = lo + block;
        for j in 0..d {
            let proto = j >= lo && j < hi;
            let flip = rng.gen::<f64>() < flip_prob;
            out.set(i, j, if proto != flip { 1.0 } else { 0.0 });
        }
    }
    Ok(out)
}
