use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::dense::{relu_backward_in_place, relu_in_place, Dense};
use super::{Gradients, Parameters};
use crate::error::{config_err, Error, Result};
use crate::numerics::{Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticDims {
    /// Semantic vector width `d_s`.
    pub input_dim: usize,
    pub hidden_units: usize,
    /// Joint embedding width `d_e`; must equal the visual model's.
    pub embed_dim: usize,
}

/// Dense ReLU -> linear embedding over a label's semantic vector.
#[derive(Debug, Clone)]
pub struct SemanticModel {
    pub hidden: Dense,
    pub embed: Dense,
    generation: u64,
}

/// Compares parameters only; the cache generation counter is ignored.
impl PartialEq for SemanticModel {
    fn eq(&self, other: &Self) -> bool {
        self.hidden == other.hidden && self.embed == other.embed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticCache {
    generation: u64,
    input: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
}

impl SemanticCache {
    /// Smallest `|z|` over the hidden ReLU pre-activations.
    pub fn relu_margin(&self) -> f64 {
        self.pre.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
    }
}

impl SemanticModel {
    pub fn from_parts(hidden: Dense, embed: Dense) -> Result<Self> {
        if embed.input_dim() != hidden.output_dim() {
            return Err(Error::shape(
                "SemanticModel::from_parts",
                hidden.output_dim(),
                embed.input_dim(),
            ));
        }
        Ok(Self {
            hidden,
            embed,
            generation: 0,
        })
    }

    pub fn zeros(dims: SemanticDims) -> Self {
        Self {
            hidden: Dense::zeros(dims.input_dim, dims.hidden_units),
            embed: Dense::zeros(dims.hidden_units, dims.embed_dim),
            generation: 0,
        }
    }

    pub fn init(dims: SemanticDims, seed: u64) -> Result<Self> {
        if dims.input_dim == 0 || dims.hidden_units == 0 || dims.embed_dim == 0 {
            return Err(config_err!("semantic model dims must all be >= 1, got {dims:?}"));
        }
        let mut rng = RngState::new(seed);
        let hidden = Dense::init(dims.input_dim, dims.hidden_units, &mut rng);
        let embed = Dense::init(dims.hidden_units, dims.embed_dim, &mut rng);
        Ok(Self {
            hidden,
            embed,
            generation: 0,
        })
    }

    pub fn dims(&self) -> SemanticDims {
        SemanticDims {
            input_dim: self.hidden.input_dim(),
            hidden_units: self.hidden.output_dim(),
            embed_dim: self.embed.output_dim(),
        }
    }

    pub fn forward(&self, s: &[f64]) -> Result<(Vec<f64>, SemanticCache)> {
        if s.len() != self.hidden.input_dim() {
            return Err(Error::shape(
                "semantic_embed",
                format!("{} semantic dims", self.hidden.input_dim()),
                s.len(),
            ));
        }
        let pre = self.hidden.forward(s);
        let mut act = pre.clone();
        relu_in_place(&mut act);
        let out = self.embed.forward(&act);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("semantic embedding".into()));
        }
        Ok((
            out,
            SemanticCache {
                generation: self.generation,
                input: s.to_vec(),
                pre,
                act,
            },
        ))
    }

    pub fn backward(&self, cache: &SemanticCache, upstream: &[f64]) -> Result<Gradients> {
        if cache.generation != self.generation {
            return Err(Error::State(format!(
                "semantic cache from generation {} used with generation {}",
                cache.generation, self.generation
            )));
        }
        if cache.input.len() != self.hidden.input_dim() || cache.pre.len() != self.hidden.output_dim() {
            return Err(Error::State("semantic cache dims do not match model".into()));
        }
        if upstream.len() != self.embed.output_dim() {
            return Err(Error::shape(
                "semantic backward upstream",
                self.embed.output_dim(),
                upstream.len(),
            ));
        }
        let mut grads = Gradients::zeros_like(self.params());
        let [gw_h, gb_h, gw_e, gb_e] = &mut grads.0[..] else {
            unreachable!("semantic model has four blocks")
        };
        let mut d_act = vec![0.0; self.hidden.output_dim()];
        self.embed
            .backward_acc(&cache.act, upstream, gw_e, gb_e, Some(&mut d_act));
        relu_backward_in_place(&cache.pre, &mut d_act);
        self.hidden.backward_acc(&cache.input, &d_act, gw_h, gb_h, None);
        Ok(grads)
    }
}

impl Parameters for SemanticModel {
    fn params(&self) -> Vec<&Matrix> {
        vec![
            &self.hidden.weight,
            &self.hidden.bias,
            &self.embed.weight,
            &self.embed.bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.generation += 1;
        vec![
            &mut self.hidden.weight,
            &mut self.hidden.bias,
            &mut self.embed.weight,
            &mut self.embed.bias,
        ]
    }

    fn param_names(&self) -> Vec<String> {
        ["hidden.weight", "hidden.bias", "embed.weight", "embed.bias"]
            .map(String::from)
            .to_vec()
    }
}

pub fn semantic_embed(model: &SemanticModel, s: &[f64]) -> Result<Vec<f64>> {
    model.forward(s).map(|(e, _)| e)
}

/// Label-side encoder: the learned semantic model, or the identity map used
/// when labels are scored directly in semantic space (the WSE ablation).
#[derive(Debug, Clone, PartialEq)]
pub enum SemanticEncoder {
    Network(SemanticModel),
    Identity { dim: usize },
}

impl SemanticEncoder {
    pub fn embed_dim(&self) -> usize {
        match self {
            SemanticEncoder::Network(m) => m.dims().embed_dim,
            SemanticEncoder::Identity { dim } => *dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SemanticEncoder::Network(m) => m.dims().input_dim,
            SemanticEncoder::Identity { dim } => *dim,
        }
    }

    pub fn embed(&self, s: &[f64]) -> Result<Vec<f64>> {
        match self {
            SemanticEncoder::Network(m) => semantic_embed(m, s),
            SemanticEncoder::Identity { dim } => {
                if s.len() != *dim {
                    return Err(Error::shape("identity semantic encoder", *dim, s.len()));
                }
                Ok(s.to_vec())
            }
        }
    }

    /// Embeds rows `ids` of `table` (`|C| x d_s`) into the columns of a
    /// `d_e x ids.len()` matrix.
    pub fn embed_labels(&self, table: &Matrix, ids: &[usize]) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.embed_dim(), ids.len());
        for (col, &id) in ids.iter().enumerate() {
            if id >= table.rows() {
                return Err(Error::Data(format!(
                    "label id {id} outside semantic table of {} rows",
                    table.rows()
                )));
            }
            let e = self.embed(table.row(id))?;
            for (r, v) in e.into_iter().enumerate() {
                out[(r, col)] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> SemanticDims {
        SemanticDims {
            input_dim: 3,
            hidden_units: 4,
            embed_dim: 2,
        }
    }

    #[test]
    fn zero_model_gives_zero_vector() {
        let m = SemanticModel::zeros(dims());
        assert_eq!(semantic_embed(&m, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dead_relu_yields_embed_bias() {
        let mut m = SemanticModel::init(dims(), 4).unwrap();
        m.hidden.weight.fill(0.0);
        m.hidden.bias.fill(-1.0);
        m.embed.bias = Matrix::column(&[0.25, -3.0]);
        assert_eq!(semantic_embed(&m, &[5.0, -1.0, 2.0]).unwrap(), vec![0.25, -3.0]);
    }

    #[test]
    fn wrong_width_is_shape_error() {
        let m = SemanticModel::zeros(dims());
        assert!(matches!(semantic_embed(&m, &[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn identity_encoder_copies_columns() {
        let table = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let enc = SemanticEncoder::Identity { dim: 2 };
        let e = enc.embed_labels(&table, &[2, 0]).unwrap();
        assert_eq!(e, Matrix::from_rows(&[[5.0, 1.0], [6.0, 2.0]]).unwrap());
    }
}
