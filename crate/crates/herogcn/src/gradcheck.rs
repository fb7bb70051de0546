//! Central finite-difference verification of analytical gradients.
//!
//! The checker only ever evaluates forward losses, so it stays independent
//! of the tape's backward rules.

use crate::tensor::{Real, Tensor};

/// Step size used throughout the gradient suite.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Numerical gradient of `loss` with respect to every entry of every tensor
/// in `params`, by central differences: `(f(x+h) - f(x-h)) / 2h`.
///
/// `loss` must be a pure function of the given parameters.
pub fn numeric_gradients<F: Real>(
    params: &[Tensor<F>],
    h: f64,
    mut loss: impl FnMut(&[Tensor<F>]) -> F,
) -> Vec<Tensor<F>> {
    let step = F::of(h);
    let mut work: Vec<Tensor<F>> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for t in 0..params.len() {
        let mut grad = Tensor::zeros(params[t].rows(), params[t].cols());
        for idx in 0..params[t].len() {
            let original = work[t].data()[idx];
            work[t].data_mut()[idx] = original + step;
            let plus = loss(&work);
            work[t].data_mut()[idx] = original - step;
            let minus = loss(&work);
            work[t].data_mut()[idx] = original;
            grad.data_mut()[idx] = (plus - minus) / (F::of(2.0) * step);
        }
        grads.push(grad);
    }
    grads
}

/// Largest relative error between two gradient sets.
///
/// Per entry: `|a - b| / max(|a|, |b|, floor)`. The floor keeps near-zero
/// entries (dead ReLU units, finite-difference noise) from dividing by zero.
pub fn max_rel_err<F: Real>(analytic: &[Tensor<F>], numeric: &[Tensor<F>], floor: f64) -> f64 {
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        assert!(a.same_shape(n), "gradient shapes differ");
        for (&x, &y) in a.data().iter().zip(n.data()) {
            let (x, y) = (x.as_f64(), y.as_f64());
            let denom = x.abs().max(y.abs()).max(floor);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Convenience wrapper for single-tensor checks.
pub fn check_single<F: Real>(
    param: &Tensor<F>,
    analytic: &Tensor<F>,
    h: f64,
    tol: f64,
    loss: impl FnMut(&[Tensor<F>]) -> F,
) -> f64 {
    let numeric = numeric_gradients(std::slice::from_ref(param), h, loss);
    let err = max_rel_err(std::slice::from_ref(analytic), &numeric, 1e-6);
    assert!(err < tol, "gradient mismatch: rel err {err} >= tol {tol}");
    err
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_gradient_of_squared_norm() {
        let x = Tensor::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        let grads = numeric_gradients(std::slice::from_ref(&x), DEFAULT_STEP, |p| p[0].sq_norm());
        let expected = x.scale(2.0);
        assert!(max_rel_err(&grads, std::slice::from_ref(&expected), 1e-6) < 1e-8);
    }
}
