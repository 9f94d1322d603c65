use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::numerics::{dot, l2_norm, sigmoid, softplus, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearLoss {
    /// `0.5 (z - t)^2` against real targets.
    Squared,
    /// `max(0, 1 - t z)` against `+1/-1` targets.
    Hinge,
    /// `softplus(-t z)` against `+1/-1` targets.
    Logistic,
}

impl LinearLoss {
    fn value_and_slope(&self, z: f64, t: f64) -> (f64, f64) {
        match self {
            LinearLoss::Squared => (0.5 * (z - t) * (z - t), z - t),
            LinearLoss::Hinge => {
                let m = 1.0 - t * z;
                if m > 0.0 {
                    (m, -t)
                } else {
                    (0.0, 0.0)
                }
            }
            LinearLoss::Logistic => (softplus(-t * z), -t * sigmoid(-t * z)),
        }
    }

    /// Upper bound on the loss curvature in `z` (1 for the non-smooth hinge,
    /// used as its step-size scale).
    fn curvature(&self) -> f64 {
        match self {
            LinearLoss::Logistic => 0.25,
            LinearLoss::Squared | LinearLoss::Hinge => 1.0,
        }
    }
}

/// Soft-margin constant and iteration budget for the linear baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFitConfig {
    /// Soft-margin constant `C`; the L2 strength is `1 / (2 C n)`.
    pub c: f64,
    pub iterations: usize,
}

impl Default for LinearFitConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            iterations: 500,
        }
    }
}

/// Independent linear maps `z_r = w_r . x + b_r`, one per output row, each
/// fitted by full-batch gradient descent on `mean loss + lambda ||w_r||^2`.
/// Biases are not penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `outputs x inputs`
    pub weight: Matrix,
    /// `outputs x 1`
    pub bias: Matrix,
    pub lambda: f64,
    pub loss: LinearLoss,
}

impl LinearModel {
    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::shape("LinearModel::predict", self.inputs(), x.len()));
        }
        let mut out = self.bias.as_slice().to_vec();
        self.weight.matvec_acc(x, &mut out);
        Ok(out)
    }

    /// Objective of output row `r` on `(features, targets column r)`.
    pub fn objective(&self, features: &Matrix, targets: &Matrix, r: usize) -> f64 {
        let n = features.rows();
        let w = self.weight.row(r);
        let b = self.bias.as_slice()[r];
        let mut total = 0.0;
        for i in 0..n {
            total += self
                .loss
                .value_and_slope(dot(w, features.row(i)) + b, targets[(i, r)])
                .0;
        }
        total / n as f64 + self.lambda * dot(w, w)
    }
}

/// Largest eigenvalue of `A^T A / n` for `A = [features | 1]`, by power iteration.
fn smoothness(features: &Matrix) -> f64 {
    let (n, d) = features.shape();
    let mut v = alloc::vec![1.0; d + 1];
    let mut estimate = 1.0;
    for _ in 0..100 {
        let norm = l2_norm(&v);
        for x in &mut v {
            *x /= norm;
        }
        let mut next = alloc::vec![0.0; d + 1];
        for i in 0..n {
            let row = features.row(i);
            let a = dot(row, &v[..d]) + v[d];
            for (o, x) in next.iter_mut().zip(row) {
                *o += a * x;
            }
            next[d] += a;
        }
        for x in &mut next {
            *x /= n as f64;
        }
        estimate = l2_norm(&next);
        v = next;
        if estimate == 0.0 {
            break;
        }
    }
    estimate
}

/// Fits one linear map per column of `targets` (`n x outputs`) on the rows of
/// `features` (`n x inputs`). The hinge loss uses subgradient steps and keeps
/// the iterate with the lowest objective.
pub fn fit_linear(features: &Matrix, targets: &Matrix, loss: LinearLoss, cfg: LinearFitConfig) -> Result<LinearModel> {
    let (n, d) = features.shape();
    if n == 0 || d == 0 {
        return Err(config_err!("linear fit needs at least one example and feature"));
    }
    if targets.rows() != n || targets.cols() == 0 {
        return Err(Error::shape("fit_linear targets", n, targets.rows()));
    }
    if !(cfg.c > 0.0) || !cfg.c.is_finite() {
        return Err(config_err!("soft-margin constant must be > 0, got {}", cfg.c));
    }
    features.ensure_finite("linear features")?;
    targets.ensure_finite("linear targets")?;
    if loss != LinearLoss::Squared && targets.as_slice().iter().any(|&t| t != 1.0 && t != -1.0) {
        return Err(Error::Domain("classification targets must be +1 or -1".into()));
    }
    let outputs = targets.cols();
    let lambda = 1.0 / (2.0 * cfg.c * n as f64);
    let step = 1.0 / (loss.curvature() * smoothness(features) + 2.0 * lambda);

    let mut model = LinearModel {
        weight: Matrix::zeros(outputs, d),
        bias: Matrix::zeros(outputs, 1),
        lambda,
        loss,
    };
    for r in 0..outputs {
        let mut w = alloc::vec![0.0; d];
        let mut b = 0.0;
        let mut best = (f64::INFINITY, w.clone(), b);
        for _ in 0..=cfg.iterations {
            let mut gw = alloc::vec![0.0; d];
            let mut gb = 0.0;
            let mut value = 0.0;
            for i in 0..n {
                let x = features.row(i);
                let (l, slope) = loss.value_and_slope(dot(&w, x) + b, targets[(i, r)]);
                value += l;
                if slope != 0.0 {
                    for (g, xv) in gw.iter_mut().zip(x) {
                        *g += slope * xv;
                    }
                    gb += slope;
                }
            }
            value = value / n as f64 + lambda * dot(&w, &w);
            if value < best.0 {
                best = (value, w.clone(), b);
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * (g / n as f64 + 2.0 * lambda * *wi);
            }
            b -= step * gb / n as f64;
        }
        let (_, w, b) = if loss == LinearLoss::Hinge { best } else { (0.0, w, b) };
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Numeric("linear model parameters".into()));
        }
        model.weight.row_mut(r).copy_from_slice(&w);
        model.bias.as_mut_slice()[r] = b;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_fit_recovers_a_line() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0], [3.0], [5.0], [7.0]]).unwrap();
        let m = fit_linear(
            &x,
            &t,
            LinearLoss::Squared,
            LinearFitConfig {
                c: 1e6,
                iterations: 5000,
            },
        )
        .unwrap();
        assert!((m.weight[(0, 0)] - 2.0).abs() < 1e-3, "{m:?}");
        assert!((m.bias[(0, 0)] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn strong_penalty_shrinks_weights_to_zero() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5], [0.3, -2.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let m = fit_linear(
            &x,
            &t,
            LinearLoss::Squared,
            LinearFitConfig {
                c: 1e-9,
                iterations: 2000,
            },
        )
        .unwrap();
        assert!(m.weight.max_abs() < 1e-6);
        let p = m.predict(&[5.0, 5.0]).unwrap()[0];
        assert!((p - m.bias[(0, 0)]).abs() < 1e-4);
    }

    #[test]
    fn classifiers_separate_separable_data() {
        let x = Matrix::from_rows(&[[2.0, 0.1], [1.5, -0.2], [-1.8, 0.3], [-2.2, -0.1]]).unwrap();
        let t = Matrix::from_rows(&[[1.0], [1.0], [-1.0], [-1.0]]).unwrap();
        for loss in [LinearLoss::Hinge, LinearLoss::Logistic] {
            let m = fit_linear(&x, &t, loss, LinearFitConfig::default()).unwrap();
            for i in 0..4 {
                assert!(m.predict(x.row(i)).unwrap()[0] * t[(i, 0)] > 0.0, "{loss:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Matrix::zeros(2, 1);
        assert!(fit_linear(
            &x,
            &Matrix::zeros(3, 1),
            LinearLoss::Squared,
            LinearFitConfig::default()
        )
        .is_err());
        assert!(fit_linear(&x, &Matrix::zeros(2, 1), LinearLoss::Hinge, LinearFitConfig::default()).is_err());
        let cfg = LinearFitConfig { c: 0.0, iterations: 1 };
        assert!(fit_linear(&x, &Matrix::zeros(2, 1), LinearLoss::Squared, cfg).is_err());
    }
}
