use alloc::vec::Vec;

use super::glorot_uniform;
use crate::numerics::{Matrix, RngState};

/// Affine layer `z = W x + b`; activation is applied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `output x input`
    pub weight: Matrix,
    /// `output x 1`
    pub bias: Matrix,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: Matrix::zeros(output, 1),
        }
    }

    pub fn init(input: usize, output: usize, rng: &mut RngState) -> Self {
        Self {
            weight: glorot_uniform(output, input, rng),
            bias: Matrix::zeros(output, 1),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    #[inline]
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.bias.as_slice());
        self.weight.matvec_acc(x, out);
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.output_dim()];
        self.forward_into(x, &mut out);
        out
    }

    /// Accumulates parameter gradients for upstream `dz` at input `x`, and
    /// adds `W^T dz` into `dx` when requested.
    #[inline]
    pub fn backward_acc(
        &self,
        x: &[f64],
        dz: &[f64],
        grad_weight: &mut Matrix,
        grad_bias: &mut Matrix,
        dx: Option<&mut [f64]>,
    ) {
        grad_weight.outer_acc(dz, x);
        for (g, d) in grad_bias.as_mut_slice().iter_mut().zip(dz) {
            *g += d;
        }
        if let Some(dx) = dx {
            self.weight.t_matvec_acc(dz, dx);
        }
    }
}

#[inline]
pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes `grad` wherever the pre-activation was not positive.
#[inline]
pub(crate) fn relu_backward_in_place(pre: &[f64], grad: &mut [f64]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}
