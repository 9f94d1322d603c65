use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::dense::{relu_backward_in_place, relu_in_place, Dense};
use super::lstm::{LstmCache, LstmLayer};
use super::{Gradients, Parameters};
use crate::error::{config_err, Error, Result};
use crate::numerics::{Matrix, RngState};

/// Per-segment layer at the bottom of the visual model.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceLayer {
    Lstm(LstmLayer),
    /// Per-segment ReLU layer without recurrent connections (the NRC ablation).
    Feedforward(Dense),
}

impl SequenceLayer {
    pub fn output_dim(&self) -> usize {
        match self {
            SequenceLayer::Lstm(l) => l.hidden_dim(),
            SequenceLayer::Feedforward(d) => d.output_dim(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SequenceLayer::Lstm(l) => l.input_dim(),
            SequenceLayer::Feedforward(d) => d.input_dim(),
        }
    }

    pub fn kind(&self) -> SequenceKind {
        match self {
            SequenceLayer::Lstm(_) => SequenceKind::Lstm,
            SequenceLayer::Feedforward(_) => SequenceKind::Feedforward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Lstm,
    Feedforward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisualDims {
    /// Segment feature width `d_x`.
    pub input_dim: usize,
    /// LSTM (or NRC dense) units.
    pub sequence_units: usize,
    /// ReLU units above the sequence layer.
    pub dense_units: usize,
    /// Joint embedding width `d_e`.
    pub embed_dim: usize,
}

/// LSTM -> dense ReLU -> linear embedding, applied to every segment.
#[derive(Debug, Clone)]
pub struct VisualModel {
    pub sequence: SequenceLayer,
    pub dense: Dense,
    pub embed: Dense,
    pub dropout_rate: f64,
    generation: u64,
}

/// Compares parameters and dropout rate; the cache generation counter is ignored.
impl PartialEq for VisualModel {
    fn eq(&self, other: &Self) -> bool {
        self.sequence == other.sequence
            && self.dense == other.dense
            && self.embed == other.embed
            && self.dropout_rate == other.dropout_rate
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SequenceCache {
    Lstm(LstmCache),
    Feedforward { input: Matrix, pre: Matrix },
}

#[derive(Debug, Clone, PartialEq)]
struct VisualCache {
    generation: u64,
    sequence: SequenceCache,
    /// Inverted-dropout multipliers (0 or 1/(1-p)); `None` when dropout is off.
    mask: Option<Matrix>,
    sequence_out: Matrix,
    dense_pre: Matrix,
    dense_act: Matrix,
}

/// Per-segment embeddings (`T x d_e`) plus the activations backprop needs.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualEmbedding {
    pub embeddings: Matrix,
    cache: VisualCache,
}

impl VisualEmbedding {
    pub fn segments(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn into_embeddings(self) -> Matrix {
        self.embeddings
    }

    /// Smallest `|z|` over all ReLU pre-activations of the forward pass.
    pub fn relu_margin(&self) -> f64 {
        let mut m = self
            .cache
            .dense_pre
            .as_slice()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if let SequenceCache::Feedforward { pre, .. } = &self.cache.sequence {
            m = pre.as_slice().iter().fold(m, |a, v| a.min(v.abs()));
        }
        m
    }
}

fn check_dropout(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(config_err!("dropout rate must lie in [0, 1), got {rate}"));
    }
    Ok(())
}

impl VisualModel {
    pub fn from_parts(sequence: SequenceLayer, dense: Dense, embed: Dense, dropout_rate: f64) -> Result<Self> {
        check_dropout(dropout_rate)?;
        if dense.input_dim() != sequence.output_dim() || embed.input_dim() != dense.output_dim() {
            return Err(Error::shape(
                "VisualModel::from_parts",
                "chained layer widths",
                format!(
                    "{}->{} | {}->{} | {}->{}",
                    sequence.input_dim(),
                    sequence.output_dim(),
                    dense.input_dim(),
                    dense.output_dim(),
                    embed.input_dim(),
                    embed.output_dim()
                ),
            ));
        }
        Ok(Self {
            sequence,
            dense,
            embed,
            dropout_rate,
            generation: 0,
        })
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(dims: VisualDims, kind: SequenceKind) -> Self {
        let sequence = match kind {
            SequenceKind::Lstm => SequenceLayer::Lstm(LstmLayer::zeros(dims.input_dim, dims.sequence_units)),
            SequenceKind::Feedforward => SequenceLayer::Feedforward(Dense::zeros(dims.input_dim, dims.sequence_units)),
        };
        Self {
            sequence,
            dense: Dense::zeros(dims.sequence_units, dims.dense_units),
            embed: Dense::zeros(dims.dense_units, dims.embed_dim),
            dropout_rate: 0.0,
            generation: 0,
        }
    }

    /// Random initialization from `seed`; see [`super::glorot_uniform`].
    pub fn init(dims: VisualDims, kind: SequenceKind, dropout_rate: f64, seed: u64) -> Result<Self> {
        check_dims(&dims)?;
        check_dropout(dropout_rate)?;
        let mut rng = RngState::new(seed);
        let sequence = match kind {
            SequenceKind::Lstm => SequenceLayer::Lstm(LstmLayer::init(dims.input_dim, dims.sequence_units, &mut rng)?),
            SequenceKind::Feedforward => {
                SequenceLayer::Feedforward(Dense::init(dims.input_dim, dims.sequence_units, &mut rng))
            }
        };
        let dense = Dense::init(dims.sequence_units, dims.dense_units, &mut rng);
        let embed = Dense::init(dims.dense_units, dims.embed_dim, &mut rng);
        Ok(Self {
            sequence,
            dense,
            embed,
            dropout_rate,
            generation: 0,
        })
    }

    pub fn dims(&self) -> VisualDims {
        VisualDims {
            input_dim: self.sequence.input_dim(),
            sequence_units: self.sequence.output_dim(),
            dense_units: self.dense.output_dim(),
            embed_dim: self.embed.output_dim(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.output_dim()
    }

    pub fn kind(&self) -> SequenceKind {
        self.sequence.kind()
    }

    /// Maps `x` (`T x d_x`) to per-segment embeddings. Dropout is applied to
    /// the sequence-layer outputs only when `training` is set and the rate is
    /// positive; `rng` is not touched otherwise.
    pub fn forward(&self, x: &Matrix, training: bool, rng: &mut RngState) -> Result<VisualEmbedding> {
        let dims = self.dims();
        if x.cols() != dims.input_dim {
            return Err(Error::shape(
                "visual_embed",
                format!("{} segment columns", dims.input_dim),
                x.cols(),
            ));
        }
        let steps = x.rows();
        let (mut seq_out, seq_cache) = match &self.sequence {
            SequenceLayer::Lstm(l) => {
                let (h, cache) = l.forward(x)?;
                (h, SequenceCache::Lstm(cache))
            }
            SequenceLayer::Feedforward(d) => {
                let mut pre = Matrix::zeros(steps, dims.sequence_units);
                for t in 0..steps {
                    d.forward_into(x.row(t), pre.row_mut(t));
                }
                let mut act = pre.clone();
                relu_in_place(act.as_mut_slice());
                (act, SequenceCache::Feedforward { input: x.clone(), pre })
            }
        };
        let sequence_out = seq_out.clone();
        let mask = if training && self.dropout_rate > 0.0 {
            let keep = 1.0 - self.dropout_rate;
            let mut m = Matrix::zeros(steps, dims.sequence_units);
            for v in m.as_mut_slice() {
                *v = if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 };
            }
            for (s, k) in seq_out.as_mut_slice().iter_mut().zip(m.as_slice()) {
                *s *= k;
            }
            Some(m)
        } else {
            None
        };
        let mut dense_pre = Matrix::zeros(steps, dims.dense_units);
        let mut embeddings = Matrix::zeros(steps, dims.embed_dim);
        for t in 0..steps {
            self.dense.forward_into(seq_out.row(t), dense_pre.row_mut(t));
        }
        let mut dense_act = dense_pre.clone();
        relu_in_place(dense_act.as_mut_slice());
        for t in 0..steps {
            self.embed.forward_into(dense_act.row(t), embeddings.row_mut(t));
        }
        embeddings.ensure_finite("visual embedding")?;
        Ok(VisualEmbedding {
            embeddings,
            cache: VisualCache {
                generation: self.generation,
                sequence: seq_cache,
                mask,
                sequence_out,
                dense_pre,
                dense_act,
            },
        })
    }

    /// Exact parameter gradients for upstream gradients w.r.t. the embeddings.
    pub fn backward(&self, emb: &VisualEmbedding, upstream: &Matrix) -> Result<Gradients> {
        let cache = &emb.cache;
        if cache.generation != self.generation {
            return Err(Error::State(format!(
                "cache from parameter generation {} used with generation {}",
                cache.generation, self.generation
            )));
        }
        let dims = self.dims();
        let steps = emb.embeddings.rows();
        if cache.dense_pre.cols() != dims.dense_units || cache.sequence_out.cols() != dims.sequence_units {
            return Err(Error::State("cache dims do not match model".into()));
        }
        if upstream.shape() != (steps, dims.embed_dim) {
            return Err(Error::shape(
                "model_backward upstream",
                format!("{steps}x{}", dims.embed_dim),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        let n_seq = match &self.sequence {
            SequenceLayer::Lstm(l) => l.params().len(),
            SequenceLayer::Feedforward(_) => 2,
        };
        let mut grads = Gradients::zeros_like(self.params());
        let (seq_grads, rest) = grads.0.split_at_mut(n_seq);
        let [gw_dense, gb_dense, gw_embed, gb_embed] = rest else {
            unreachable!("visual model has four non-sequence blocks")
        };

        let mut d_seq = Matrix::zeros(steps, dims.sequence_units);
        let mut d_act = vec![0.0; dims.dense_units];
        let dropped = match &cache.mask {
            Some(m) => {
                let mut d = cache.sequence_out.clone();
                for (v, k) in d.as_mut_slice().iter_mut().zip(m.as_slice()) {
                    *v *= k;
                }
                d
            }
            None => cache.sequence_out.clone(),
        };
        for t in 0..steps {
            d_act.fill(0.0);
            self.embed.backward_acc(
                cache.dense_act.row(t),
                upstream.row(t),
                gw_embed,
                gb_embed,
                Some(&mut d_act),
            );
            relu_backward_in_place(cache.dense_pre.row(t), &mut d_act);
            self.dense
                .backward_acc(dropped.row(t), &d_act, gw_dense, gb_dense, Some(d_seq.row_mut(t)));
        }
        if let Some(m) = &cache.mask {
            for (d, k) in d_seq.as_mut_slice().iter_mut().zip(m.as_slice()) {
                *d *= k;
            }
        }
        match (&self.sequence, &cache.sequence) {
            (SequenceLayer::Lstm(l), SequenceCache::Lstm(c)) => {
                let g = l.backward(c, &d_seq)?;
                for (dst, src) in seq_grads.iter_mut().zip(g.0) {
                    *dst = src;
                }
            }
            (SequenceLayer::Feedforward(d), SequenceCache::Feedforward { input, pre }) => {
                let [gw, gb] = seq_grads else {
                    unreachable!("feedforward layer has two blocks")
                };
                for t in 0..steps {
                    let mut da = d_seq.row(t).to_vec();
                    relu_backward_in_place(pre.row(t), &mut da);
                    d.backward_acc(input.row(t), &da, gw, gb, None);
                }
            }
            _ => return Err(Error::State("cache built by a different sequence layer".into())),
        }
        Ok(grads)
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|m| m.len()).sum()
    }
}

fn check_dims(d: &VisualDims) -> Result<()> {
    if d.input_dim == 0 || d.sequence_units == 0 || d.dense_units == 0 || d.embed_dim == 0 {
        return Err(config_err!("visual model dims must all be >= 1, got {d:?}"));
    }
    Ok(())
}

impl Parameters for VisualModel {
    fn params(&self) -> Vec<&Matrix> {
        let mut out = match &self.sequence {
            SequenceLayer::Lstm(l) => l.params(),
            SequenceLayer::Feedforward(d) => vec![&d.weight, &d.bias],
        };
        out.extend([
            &self.dense.weight,
            &self.dense.bias,
            &self.embed.weight,
            &self.embed.bias,
        ]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.generation += 1;
        let mut out = match &mut self.sequence {
            SequenceLayer::Lstm(l) => l.params_mut(),
            SequenceLayer::Feedforward(d) => vec![&mut d.weight, &mut d.bias],
        };
        out.extend([
            &mut self.dense.weight,
            &mut self.dense.bias,
            &mut self.embed.weight,
            &mut self.embed.bias,
        ]);
        out
    }

    fn param_names(&self) -> Vec<String> {
        let mut out: Vec<String> = match &self.sequence {
            SequenceLayer::Lstm(_) => LstmLayer::PARAM_NAMES.iter().map(|n| format!("lstm.{n}")).collect(),
            SequenceLayer::Feedforward(_) => vec!["nrc.weight".into(), "nrc.bias".into()],
        };
        out.extend(["dense.weight", "dense.bias", "embed.weight", "embed.bias"].map(String::from));
        out
    }
}

/// Free-function form of [`VisualModel::forward`].
pub fn visual_embed(model: &VisualModel, x: &Matrix, training: bool, rng: &mut RngState) -> Result<VisualEmbedding> {
    model.forward(x, training, rng)
}

/// Free-function form of [`VisualModel::backward`].
pub fn model_backward(model: &VisualModel, emb: &VisualEmbedding, upstream: &Matrix) -> Result<Gradients> {
    model.backward(emb, upstream)
}
