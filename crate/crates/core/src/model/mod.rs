//! Visual and semantic embedding networks with hand-written backprop.

mod dense;
mod lstm;
mod semantic;
mod visual;

use alloc::string::String;
use alloc::vec::Vec;

pub use dense::Dense;
pub use lstm::{lstm_forward, LstmCache, LstmLayer, FORGET_BIAS};
pub use semantic::{semantic_embed, SemanticCache, SemanticDims, SemanticEncoder, SemanticModel};
pub use visual::{model_backward, visual_embed, SequenceKind, SequenceLayer, VisualDims, VisualEmbedding, VisualModel};

use crate::error::Result;
use crate::numerics::{Matrix, RngState};

/// Ordered access to a model's parameter blocks. Gradients, optimizer state
/// and checkpoints all use this order.
pub trait Parameters {
    fn params(&self) -> Vec<&Matrix>;
    /// Mutable access. Invalidates forward caches taken before the call.
    fn params_mut(&mut self) -> Vec<&mut Matrix>;
    fn param_names(&self) -> Vec<String>;
}

/// Gradient blocks aligned with [`Parameters::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Matrix>);

impl Gradients {
    pub fn zeros_like(params: Vec<&Matrix>) -> Self {
        Gradients(params.into_iter().map(Matrix::zeros_like).collect())
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.0 {
            g.scale(factor);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }
}

/// `rows x cols` weights drawn uniformly from `±sqrt(6 / (fan_in + fan_out))`
/// with `fan_in = cols`, `fan_out = rows`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut RngState) -> Matrix {
    let limit = glorot_limit(rows, cols);
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = rng.uniform(-limit, limit);
    }
    m
}

pub fn glorot_limit(rows: usize, cols: usize) -> f64 {
    libm::sqrt(6.0 / (rows + cols) as f64)
}

/// Flattens all parameters in declaration order.
pub fn flatten_params<P: Parameters + ?Sized>(model: &P) -> Vec<f64> {
    model
        .params()
        .iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .collect()
}

/// Overwrites all parameters from a flat vector in declaration order.
pub fn load_flat_params<P: Parameters + ?Sized>(model: &mut P, flat: &[f64]) -> Result<()> {
    let total: usize = model.params().iter().map(|m| m.len()).sum();
    if total != flat.len() {
        return Err(crate::Error::shape("load_flat_params", total, flat.len()));
    }
    let mut offset = 0;
    for p in model.params_mut() {
        let n = p.len();
        p.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_deterministic_and_bounded() {
        let dims = VisualDims {
            input_dim: 6,
            sequence_units: 5,
            dense_units: 7,
            embed_dim: 4,
        };
        let a = VisualModel::init(dims, SequenceKind::Lstm, 0.0, 42).unwrap();
        let b = VisualModel::init(dims, SequenceKind::Lstm, 0.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.dense.weight.max_abs() <= glorot_limit(7, 5));
        assert!(a.embed.weight.max_abs() <= glorot_limit(4, 7));
        assert!(a.dense.bias.as_slice().iter().all(|&v| v == 0.0));

        let sdims = SemanticDims {
            input_dim: 3,
            hidden_units: 5,
            embed_dim: 4,
        };
        let s = SemanticModel::init(sdims, 42).unwrap();
        assert_eq!(s, SemanticModel::init(sdims, 42).unwrap());
        assert!(s.hidden.weight.max_abs() <= glorot_limit(5, 3));
    }

    #[test]
    fn different_seeds_differ() {
        let dims = SemanticDims {
            input_dim: 4,
            hidden_units: 4,
            embed_dim: 3,
        };
        let models: Vec<_> = (0..10).map(|s| SemanticModel::init(dims, s).unwrap()).collect();
        for i in 0..models.len() {
            for j in i + 1..models.len() {
                assert_ne!(models[i], models[j]);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let sdims = SemanticDims {
            input_dim: 2,
            hidden_units: 3,
            embed_dim: 2,
        };
        let a = SemanticModel::init(sdims, 1).unwrap();
        let mut b = SemanticModel::zeros(sdims);
        load_flat_params(&mut b, &flatten_params(&a)).unwrap();
        assert_eq!(flatten_params(&a), flatten_params(&b));
        assert!(load_flat_params(&mut b, &[1.0]).is_err());
    }
}
