//! Central finite-difference gradient checking.
//!
//! The checker only ever calls the forward path, so it stays independent of
//! the adjoint rules it verifies.

use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central finite differences of `f` w.r.t. every entry of every parameter.
///
/// `f` must be a pure function of the parameter slice (rebuild the tape
/// inside it; reuse the same dropout seed so masks match across calls).
pub fn finite_diff_grads<F>(params: &[Tensor], f: F, step: f64) -> Vec<Tensor>
where
    F: Fn(&[Tensor]) -> f64,
{
    let mut work: Vec<Tensor> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let (r, c) = params[p].shape();
        let mut g = Tensor::zeros(r, c);
        for idx in 0..r * c {
            let orig = work[p].data()[idx];
            work[p].data_mut()[idx] = orig + step;
            let plus = f(&work);
            work[p].data_mut()[idx] = orig - step;
            let minus = f(&work);
            work[p].data_mut()[idx] = orig;
            g.data_mut()[idx] = (plus - minus) / (2.0 * step);
        }
        grads.push(g);
    }
    grads
}

/// Max relative error between analytic and numeric gradients.
pub fn max_rel_error(analytic: &[&Tensor], numeric: &[Tensor]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        for (&av, &nv) in a.data().iter().zip(n.data()) {
            let denom = av.abs().max(nv.abs()).max(1e-3);
            worst = worst.max((av - nv).abs() / denom);
        }
    }
    worst
}
