//! Dense linear algebra, seeded randomness, Adam and a finite-difference
//! gradient oracle. Everything is `f64`.

mod adam;
mod finite_diff;
mod matrix;
mod rng;

pub use adam::{adam_step, Adam, AdamState, BETA1, BETA2, EPSILON};
pub use finite_diff::{finite_diff_grad, max_relative_error, relative_error, RELATIVE_ERROR_FLOOR};
pub use matrix::{dot, l2_norm, matmul, Matrix};
pub use rng::RngState;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}
