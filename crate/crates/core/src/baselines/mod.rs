//! Ablations of the full model and the comparative zero-shot methods.

mod comparative;
mod linear;

pub use comparative::{
    conse_embedding, conse_fit, conse_predict, conse_weights, costa_beta, costa_fit, costa_predict, dsp_fit,
    dsp_predict, feature_scores, instance_features, mean_semantic_vector, train_conse, train_costa, train_dsp, Conse,
    ConseNorm, Costa, Dsp, CONSE_TOP,
};
pub use linear::{fit_linear, LinearFitConfig, LinearLoss, LinearModel};

use crate::data::{Dataset, SplitSpec};
use crate::error::{config_err, Result};
use crate::model::{SequenceKind, VisualDims, VisualModel};
use crate::numerics::{l2_norm, Matrix, RngState};
use crate::train::{alternate_train, SemanticMode, TrainConfig, TrainOutcome};

/// `cfg` with the recurrent layer replaced by a per-segment ReLU layer.
pub fn nrc_config(cfg: &TrainConfig) -> TrainConfig {
    TrainConfig {
        sequence: SequenceKind::Feedforward,
        ..cfg.clone()
    }
}

/// Freshly initialized non-recurrent visual model with `cfg.lstm_units`
/// units in place of the LSTM.
pub fn build_nrc_model(dims: VisualDims, dropout: f64, seed: u64) -> Result<VisualModel> {
    VisualModel::init(dims, SequenceKind::Feedforward, dropout, seed)
}

pub fn train_nrc(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    alternate_train(ds, split, &nrc_config(cfg))
}

/// Visual model trained against the raw semantic vectors (no semantic model,
/// embedding width `d_s`).
pub fn train_wse(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    alternate_train(
        ds,
        split,
        &TrainConfig {
            semantic_mode: SemanticMode::Fixed,
            ..cfg.clone()
        },
    )
}

/// `num_labels x dim` table of independent standard normal vectors scaled to
/// unit length.
pub fn randomize_label_reps(num_labels: usize, dim: usize, seed: u64) -> Result<Matrix> {
    if num_labels == 0 || dim == 0 {
        return Err(config_err!("random label table needs positive dims"));
    }
    let mut rng = RngState::new(seed);
    let mut table = Matrix::zeros(num_labels, dim);
    for r in 0..num_labels {
        let mut norm = 0.0;
        while norm == 0.0 {
            for v in table.row_mut(r) {
                *v = rng.normal();
            }
            norm = l2_norm(table.row(r));
        }
        for v in table.row_mut(r) {
            *v /= norm;
        }
    }
    Ok(table)
}

/// Full model trained and evaluated on random label vectors.
pub fn train_rlr(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig, seed: u64) -> Result<(Dataset, TrainOutcome)> {
    let random = ds.with_semantics(randomize_label_reps(ds.num_labels(), ds.semantic_dim(), seed)?)?;
    let outcome = alternate_train(&random, split, cfg)?;
    Ok((random, outcome))
}
