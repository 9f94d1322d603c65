use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Matrix,
    second_moment: Matrix,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with Kingma & Ba's default betas and epsilon.
    pub fn new(rows: usize, cols: usize, learning_rate: f64) -> Self {
        Self {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step: 0,
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }

    pub fn for_params(params: &Matrix, learning_rate: f64) -> Self {
        Self::new(params.rows(), params.cols(), learning_rate)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &Matrix {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &Matrix {
        &self.second_moment
    }

    /// Applies one bias-corrected Adam update to `params` in place.
    pub fn update(&mut self, params: &mut Matrix, grads: &Matrix) -> Result<()> {
        params.check_same_shape("adam_step params/grads", grads)?;
        params.check_same_shape("adam_step params/moments", &self.first_moment)?;
        grads.ensure_finite("adam_step gradient")?;

        self.step += 1;
        let t = self.step as f64;
        let bias1 = 1.0 - libm::pow(self.beta1, t);
        let bias2 = 1.0 - libm::pow(self.beta2, t);
        let m = self.first_moment.as_mut_slice();
        let v = self.second_moment.as_mut_slice();
        for (((p, &g), m), v) in params
            .as_mut_slice()
            .iter_mut()
            .zip(grads.as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
        }
        params.ensure_finite("adam_step result")
    }
}

/// Value-semantics Adam step: returns the updated parameters and state,
/// leaving the inputs untouched.
pub fn adam_step(params: &Matrix, grads: &Matrix, state: &AdamState) -> Result<(Matrix, AdamState)> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.update(&mut p, grads)?;
    Ok((p, s))
}

/// One [`AdamState`] per parameter block of a model, in the model's
/// declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix>, learning_rate: f64) -> Self {
        Self {
            states: params
                .into_iter()
                .map(|p| AdamState::for_params(p, learning_rate))
                .collect(),
        }
    }

    pub fn states(&self) -> &[AdamState] {
        &self.states
    }

    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix]) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::shape(
                "Adam::step",
                alloc::format!("{} parameter blocks", self.states.len()),
                alloc::format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.states) {
            s.update(p, g)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gradient_leaves_params() {
        let p = Matrix::new(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let s = AdamState::for_params(&p, 0.01);
        let (q, s2) = adam_step(&p, &Matrix::zeros(2, 2), &s).unwrap();
        assert_eq!(q, p);
        assert_eq!(s2.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        for g in [3.7, -0.02, 1e-3] {
            let p = Matrix::column(&[0.0]);
            let s = AdamState::for_params(&p, 0.05);
            let (q, _) = adam_step(&p, &Matrix::column(&[g]), &s).unwrap();
            // m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps).
            let expect = -0.05 * g / (g.abs() + EPSILON);
            assert!((q[(0, 0)] - expect).abs() < 1e-15);
            assert!((q[(0, 0)] + 0.05 * g.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let p = Matrix::new(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        let g = Matrix::new(1, 3, vec![-1.0, 0.5, 2.0]).unwrap();
        let s = AdamState::for_params(&p, 1e-3);
        let a = adam_step(&p, &g, &s).unwrap();
        let b = adam_step(&p, &g, &s).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.0.as_slice().iter().zip(b.0.as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Matrix::zeros(2, 1);
        let s = AdamState::for_params(&p, 0.1);
        assert!(matches!(
            adam_step(&p, &Matrix::zeros(1, 2), &s),
            Err(Error::Shape { .. })
        ));
        let nan = Matrix::column(&[f64::NAN, 0.0]);
        assert!(matches!(adam_step(&p, &nan, &s), Err(Error::Numeric(_))));
    }
}
