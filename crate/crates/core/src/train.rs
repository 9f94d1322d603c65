//! Alternate training of the visual and semantic models with early stopping
//! on validation I-MAP.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{Dataset, SplitSpec};
use crate::error::{config_err, Error, Result};
use crate::eval::{evaluate_i_map, Scenario, ScenarioKind};
use crate::loss::{RankLoss, RegularizerForm, TargetVector};
use crate::model::{
    Gradients, Parameters, SemanticDims, SemanticEncoder, SemanticModel, SequenceKind, VisualDims, VisualModel,
};
use crate::numerics::{Adam, Matrix, RngState};
use crate::scoring::{segment_scores, Pooling, ScoreMatrix};

/// How labels are embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SemanticMode {
    /// Trainable semantic network, alternated with the visual model.
    #[default]
    Learned,
    /// Raw semantic vectors used as label embeddings; only the visual model
    /// is trained and the embedding width becomes `d_s`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: RankLoss,
    pub lr_visual: f64,
    pub lr_semantic: f64,
    /// Instances per visual update.
    pub batch_size: usize,
    /// Labels per semantic update.
    pub semantic_batch_size: usize,
    pub embed_dim: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub semantic_units: usize,
    pub dropout: f64,
    /// Rounds without a validation improvement before stopping.
    pub patience: usize,
    pub max_rounds: usize,
    pub seed: u64,
    pub pooling: Pooling,
    pub sequence: SequenceKind,
    pub semantic_mode: SemanticMode,
    pub regularizer: RegularizerForm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: RankLoss::RankNet,
            lr_visual: 1e-3,
            lr_semantic: 1e-3,
            batch_size: 32,
            semantic_batch_size: 8,
            embed_dim: 24,
            lstm_units: 32,
            dense_units: 32,
            semantic_units: 32,
            dropout: 0.0,
            patience: 10,
            max_rounds: 50,
            seed: 0,
            pooling: Pooling::Average,
            sequence: SequenceKind::Lstm,
            semantic_mode: SemanticMode::Learned,
            regularizer: RegularizerForm::Softplus,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, lr) in [("lr_visual", self.lr_visual), ("lr_semantic", self.lr_semantic)] {
            if !(lr >= 0.0) || !lr.is_finite() {
                return Err(config_err!("{name} must be finite and >= 0, got {lr}"));
            }
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("semantic_batch_size", self.semantic_batch_size),
            ("embed_dim", self.embed_dim),
            ("lstm_units", self.lstm_units),
            ("dense_units", self.dense_units),
            ("semantic_units", self.semantic_units),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return Err(config_err!("{name} must be >= 1"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(config_err!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if let RankLoss::Hinge { margin } = self.loss {
            if !(margin > 0.0) {
                return Err(config_err!("hinge margin must be > 0, got {margin}"));
            }
        }
        Ok(())
    }

    /// Joint embedding width actually used (`d_s` for a fixed semantic side).
    pub fn effective_embed_dim(&self, semantic_dim: usize) -> usize {
        match self.semantic_mode {
            SemanticMode::Learned => self.embed_dim,
            SemanticMode::Fixed => semantic_dim,
        }
    }
}

const STREAM_VISUAL_INIT: u64 = 1;
const STREAM_SEMANTIC_INIT: u64 = 2;
const STREAM_VISUAL_EPOCH: u64 = 3;
const STREAM_SEMANTIC_EPOCH: u64 = 4;

/// Best-so-far snapshot of both models.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub visual: VisualModel,
    pub semantic: SemanticEncoder,
    /// Round that produced the snapshot (0 = initialization).
    pub round: usize,
    pub best_val_imap: f64,
}

/// One record per round; round 0 describes the initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub visual_loss: Option<f64>,
    pub semantic_loss: Option<f64>,
    pub val_i_map: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<RoundLog>,
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    RngState::new(seed).substream(stream).next_u64()
}

/// Freshly initialized visual model and label encoder for `cfg`.
pub fn init_models(ds: &Dataset, cfg: &TrainConfig) -> Result<(VisualModel, SemanticEncoder)> {
    cfg.validate()?;
    let embed_dim = cfg.effective_embed_dim(ds.semantic_dim());
    let visual = VisualModel::init(
        VisualDims {
            input_dim: ds.feature_dim,
            sequence_units: cfg.lstm_units,
            dense_units: cfg.dense_units,
            embed_dim,
        },
        cfg.sequence,
        cfg.dropout,
        derived_seed(cfg.seed, STREAM_VISUAL_INIT),
    )?;
    let semantic = match cfg.semantic_mode {
        SemanticMode::Learned => SemanticEncoder::Network(SemanticModel::init(
            SemanticDims {
                input_dim: ds.semantic_dim(),
                hidden_units: cfg.semantic_units,
                embed_dim,
            },
            derived_seed(cfg.seed, STREAM_SEMANTIC_INIT),
        )?),
        SemanticMode::Fixed => SemanticEncoder::Identity { dim: ds.semantic_dim() },
    };
    Ok((visual, semantic))
}

/// `+1/-1` targets of instance `id` over `labels`.
fn instance_targets(ds: &Dataset, id: usize, labels: &[usize]) -> Result<TargetVector> {
    let inst = &ds.instances[id];
    TargetVector::from_positives(
        labels.len(),
        labels
            .iter()
            .enumerate()
            .filter(|(_, l)| inst.has_label(**l))
            .map(|(j, _)| j),
    )
}

/// Loss and parameter gradients of one instance against fixed label
/// embeddings `es` (`d_e x |labels|`).
pub fn visual_instance_grad(
    vm: &VisualModel,
    x: &Matrix,
    es: &Matrix,
    y: &TargetVector,
    loss: RankLoss,
    pooling: Pooling,
    training: bool,
    rng: &mut RngState,
) -> Result<(f64, Gradients)> {
    let emb = vm.forward(x, training, rng)?;
    let s = segment_scores(&emb.embeddings, es)?;
    let o = pooling.pool(&s)?;
    let (value, d_o) = loss.visual(&o, y)?;
    let d_s = pooling.pool_backward(&s, &d_o)?;
    let upstream = d_s.matmul(&es.transpose())?;
    Ok((value, vm.backward(&emb, &upstream)?))
}

/// Pooled scores of one label embedding against frozen per-segment
/// embeddings, plus the loss gradient w.r.t. that label embedding.
fn label_loss_grad(frozen: &[Matrix], e_c: &[f64], y: &TargetVector, cfg: &TrainConfig) -> Result<(f64, Vec<f64>)> {
    let column = Matrix::column(e_c);
    let mut o = Vec::with_capacity(frozen.len());
    let mut seg = Vec::with_capacity(frozen.len());
    for ev in frozen {
        let s = segment_scores(ev, &column)?;
        o.push(cfg.pooling.pool_column(s.0.as_slice())?);
        seg.push(s);
    }
    let (value, d_o) = cfg.loss.semantic(&o, y, cfg.regularizer)?;
    let mut d_e = alloc::vec![0.0; e_c.len()];
    for ((ev, s), &g) in frozen.iter().zip(&seg).zip(&d_o) {
        if g == 0.0 {
            continue;
        }
        let d_s = cfg.pooling.pool_column_backward(s.0.as_slice(), g)?;
        ev.t_matvec_acc(&d_s, &mut d_e);
    }
    Ok((value, d_e))
}

/// One pass of mini-batch updates of the visual model over the shuffled
/// training instances, with label embeddings `es` (`d_e x |known|`) held
/// fixed. Returns the mean instance loss seen during the pass.
pub fn train_epoch_visual(
    vm: &mut VisualModel,
    opt: &mut Adam,
    es: &Matrix,
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<f64> {
    if es.cols() != split.known.len() {
        return Err(Error::shape("train_epoch_visual", split.known.len(), es.cols()));
    }
    let mut order = split.train.clone();
    rng.shuffle(&mut order);
    let mut total = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        let mut acc = Gradients::zeros_like(vm.params());
        for &id in batch {
            let y = instance_targets(ds, id, &split.known)?;
            let (value, g) =
                visual_instance_grad(vm, &ds.instances[id].segments, es, &y, cfg.loss, cfg.pooling, true, rng)?;
            total += value;
            acc.add_assign(&g)?;
        }
        acc.scale(1.0 / batch.len() as f64);
        opt.step(vm.params_mut(), &acc.0)?;
    }
    Ok(total / order.len().max(1) as f64)
}

/// One pass of mini-batch updates of the semantic model over the shuffled
/// known labels. `frozen[i]` is the inference-mode embedding of
/// `split.train[i]`. Returns the mean per-label loss seen during the pass.
pub fn train_epoch_semantic(
    sm: &mut SemanticModel,
    opt: &mut Adam,
    frozen: &[Matrix],
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<f64> {
    if frozen.len() != split.train.len() {
        return Err(Error::shape("train_epoch_semantic", split.train.len(), frozen.len()));
    }
    let mut order = split.known.clone();
    rng.shuffle(&mut order);
    let mut total = 0.0;
    for batch in order.chunks(cfg.semantic_batch_size) {
        let mut acc = Gradients::zeros_like(sm.params());
        for &label in batch {
            let (e_c, cache) = sm.forward(ds.semantics.row(label))?;
            let y = TargetVector::from_positives(
                split.train.len(),
                split
                    .train
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| ds.instances[i].has_label(label))
                    .map(|(j, _)| j),
            )?;
            let (value, d_e) = label_loss_grad(frozen, &e_c, &y, cfg)?;
            total += value;
            acc.add_assign(&sm.backward(&cache, &d_e)?)?;
        }
        acc.scale(1.0 / batch.len() as f64);
        opt.step(sm.params_mut(), &acc.0)?;
    }
    Ok(total / order.len().max(1) as f64)
}

/// Inference-mode per-segment embeddings of the given instances.
pub fn embed_instances(vm: &VisualModel, ds: &Dataset, ids: &[usize]) -> Result<Vec<Matrix>> {
    let mut unused = RngState::new(0);
    ids.iter()
        .map(|&i| Ok(vm.forward(&ds.instances[i].segments, false, &mut unused)?.embeddings))
        .collect()
}

/// Pooled relatedness scores of `instances` against `labels`.
pub fn predict_scores(
    vm: &VisualModel,
    encoder: &SemanticEncoder,
    ds: &Dataset,
    instances: &[usize],
    labels: &[usize],
    pooling: Pooling,
) -> Result<ScoreMatrix> {
    let es = encoder.embed_labels(&ds.semantics, labels)?;
    let mut out = Matrix::zeros(instances.len(), labels.len());
    let mut unused = RngState::new(0);
    for (row, &i) in instances.iter().enumerate() {
        let emb = vm.forward(&ds.instances[i].segments, false, &mut unused)?;
        let pooled = pooling.pool(&segment_scores(&emb.embeddings, &es)?)?;
        out.row_mut(row).copy_from_slice(&pooled);
    }
    ScoreMatrix::new(instances.to_vec(), labels.to_vec(), out)
}

/// Mean inference-mode visual loss over the training instances.
pub fn mean_visual_loss(
    vm: &VisualModel,
    encoder: &SemanticEncoder,
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<f64> {
    let scores = predict_scores(vm, encoder, ds, &split.train, &split.known, cfg.pooling)?;
    let mut total = 0.0;
    for (row, &id) in split.train.iter().enumerate() {
        let y = instance_targets(ds, id, &split.known)?;
        total += cfg.loss.visual(scores.scores.row(row), &y)?.0;
    }
    Ok(total / split.train.len().max(1) as f64)
}

/// Mean per-label semantic loss over the known labels.
pub fn mean_semantic_loss(
    vm: &VisualModel,
    encoder: &SemanticEncoder,
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<f64> {
    let scores = predict_scores(vm, encoder, ds, &split.train, &split.known, cfg.pooling)?;
    let mut total = 0.0;
    for (col, &label) in split.known.iter().enumerate() {
        let y = TargetVector::from_positives(
            split.train.len(),
            split
                .train
                .iter()
                .enumerate()
                .filter(|(_, &i)| ds.instances[i].has_label(label))
                .map(|(j, _)| j),
        )?;
        total += cfg
            .loss
            .semantic(&scores.scores.col_to_vec(col), &y, cfg.regularizer)?
            .0;
    }
    Ok(total / split.known.len().max(1) as f64)
}

fn validation_i_map(
    vm: &VisualModel,
    encoder: &SemanticEncoder,
    ds: &Dataset,
    split: &SplitSpec,
    pooling: Pooling,
) -> Result<f64> {
    let scores = predict_scores(vm, encoder, ds, &split.val, &split.known, pooling)?;
    let truths: Vec<Vec<usize>> = split.val.iter().map(|&i| ds.instances[i].labels.clone()).collect();
    evaluate_i_map(&scores, &truths, &Scenario::from_split(ScenarioKind::KnownOnly, split))
}

fn check_inputs(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    cfg.pooling
        .validate(ds.segments)
        .map_err(|e| config_err!("pooling does not fit {} segments: {e}", ds.segments))?;
    split.check(ds)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(config_err!(
            "training needs non-empty train and validation sets (got {} and {})",
            split.train.len(),
            split.val.len()
        ));
    }
    if split.known.len() < 2 {
        return Err(config_err!("training needs at least two known labels"));
    }
    Ok(())
}

/// Alternates one visual epoch and one semantic epoch per round, scoring
/// validation I-MAP over the known labels after every round, and returns the
/// best snapshot seen (the initialization counts as round 0).
pub fn alternate_train(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    check_inputs(ds, split, cfg)?;
    let (mut visual, mut semantic) = init_models(ds, cfg)?;
    let root = RngState::new(cfg.seed);
    let mut visual_rng = root.substream(STREAM_VISUAL_EPOCH);
    let mut semantic_rng = root.substream(STREAM_SEMANTIC_EPOCH);
    let mut visual_opt = Adam::new(visual.params(), cfg.lr_visual);
    let mut semantic_opt = match &semantic {
        SemanticEncoder::Network(m) => Some(Adam::new(m.params(), cfg.lr_semantic)),
        SemanticEncoder::Identity { .. } => None,
    };

    let initial = validation_i_map(&visual, &semantic, ds, split, cfg.pooling)?;
    let mut log = alloc::vec![RoundLog {
        round: 0,
        visual_loss: None,
        semantic_loss: None,
        val_i_map: initial,
    }];
    let mut best = Checkpoint {
        visual: visual.clone(),
        semantic: semantic.clone(),
        round: 0,
        best_val_imap: initial,
    };
    let mut stale = 0usize;
    let mut es = semantic.embed_labels(&ds.semantics, &split.known)?;

    for round in 1..=cfg.max_rounds {
        let visual_loss = train_epoch_visual(&mut visual, &mut visual_opt, &es, ds, split, cfg, &mut visual_rng)?;
        let semantic_loss = match (&mut semantic, &mut semantic_opt) {
            (SemanticEncoder::Network(sm), Some(opt)) => {
                let frozen = embed_instances(&visual, ds, &split.train)?;
                let loss = train_epoch_semantic(sm, opt, &frozen, ds, split, cfg, &mut semantic_rng)?;
                es = semantic.embed_labels(&ds.semantics, &split.known)?;
                Some(loss)
            }
            _ => None,
        };
        let val = validation_i_map(&visual, &semantic, ds, split, cfg.pooling)?;
        log.push(RoundLog {
            round,
            visual_loss: Some(visual_loss),
            semantic_loss,
            val_i_map: val,
        });
        if val > best.best_val_imap {
            best = Checkpoint {
                visual: visual.clone(),
                semantic: semantic.clone(),
                round,
                best_val_imap: val,
            };
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if !best.best_val_imap.is_finite() {
        return Err(Error::Numeric(format!("validation I-MAP {}", best.best_val_imap)));
    }
    Ok(TrainOutcome { checkpoint: best, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, make_lfs_split, SyntheticConfig};
    use crate::model::flatten_params;

    fn setup() -> (Dataset, SplitSpec, TrainConfig) {
        let ds = generate_synthetic(&SyntheticConfig {
            num_labels: 8,
            num_clusters: 2,
            num_instances: 60,
            segments: 4,
            min_segments: 4,
            feature_dim: 6,
            semantic_dim: 5,
            labels_per_instance: (2, 3),
            episodes_per_instance: (2, 4),
            feature_noise: 0.3,
            semantic_jitter: 0.2,
            second_cluster_prob: 0.3,
            seed: 11,
        })
        .unwrap();
        let split = make_lfs_split(&ds, &[3], 8, 1).unwrap();
        let cfg = TrainConfig {
            batch_size: 8,
            semantic_batch_size: 3,
            embed_dim: 4,
            lstm_units: 5,
            dense_units: 5,
            semantic_units: 5,
            max_rounds: 3,
            lr_visual: 5e-3,
            lr_semantic: 5e-3,
            seed: 2,
            ..TrainConfig::default()
        };
        (ds, split, cfg)
    }

    #[test]
    fn zero_rounds_returns_initialization() {
        let (ds, split, mut cfg) = setup();
        cfg.max_rounds = 0;
        let out = alternate_train(&ds, &split, &cfg).unwrap();
        let (v, s) = init_models(&ds, &cfg).unwrap();
        assert_eq!(out.checkpoint.visual, v);
        assert_eq!(out.checkpoint.semantic, s);
        assert_eq!(out.checkpoint.round, 0);
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let (ds, split, cfg) = setup();
        let a = alternate_train(&ds, &split, &cfg).unwrap();
        let b = alternate_train(&ds, &split, &cfg).unwrap();
        assert_eq!(a, b);
        let best = a.log.iter().map(|r| r.val_i_map).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.checkpoint.best_val_imap, best);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let (ds, split, mut cfg) = setup();
        cfg.lr_visual = 0.0;
        cfg.lr_semantic = 0.0;
        let (mut v, s) = init_models(&ds, &cfg).unwrap();
        let before = flatten_params(&v);
        let es = s.embed_labels(&ds.semantics, &split.known).unwrap();
        let mut opt = Adam::new(v.params(), 0.0);
        train_epoch_visual(&mut v, &mut opt, &es, &ds, &split, &cfg, &mut RngState::new(0)).unwrap();
        assert_eq!(before, flatten_params(&v));

        let SemanticEncoder::Network(mut sm) = s else { panic!() };
        let before = flatten_params(&sm);
        let frozen = embed_instances(&v, &ds, &split.train).unwrap();
        let mut opt = Adam::new(sm.params(), 0.0);
        train_epoch_semantic(&mut sm, &mut opt, &frozen, &ds, &split, &cfg, &mut RngState::new(0)).unwrap();
        assert_eq!(before, flatten_params(&sm));
    }

    #[test]
    fn epochs_reduce_training_loss() {
        let (ds, split, cfg) = setup();
        let (mut v, s) = init_models(&ds, &cfg).unwrap();
        let before = mean_visual_loss(&v, &s, &ds, &split, &cfg).unwrap();
        let es = s.embed_labels(&ds.semantics, &split.known).unwrap();
        let mut opt = Adam::new(v.params(), cfg.lr_visual);
        let mut rng = RngState::new(4);
        for _ in 0..3 {
            train_epoch_visual(&mut v, &mut opt, &es, &ds, &split, &cfg, &mut rng).unwrap();
        }
        assert!(mean_visual_loss(&v, &s, &ds, &split, &cfg).unwrap() < before);

        let SemanticEncoder::Network(mut sm) = s else { panic!() };
        let enc_before = SemanticEncoder::Network(sm.clone());
        let before = mean_semantic_loss(&v, &enc_before, &ds, &split, &cfg).unwrap();
        let frozen = embed_instances(&v, &ds, &split.train).unwrap();
        let mut opt = Adam::new(sm.params(), cfg.lr_semantic);
        for _ in 0..3 {
            train_epoch_semantic(&mut sm, &mut opt, &frozen, &ds, &split, &cfg, &mut rng).unwrap();
        }
        let after = mean_semantic_loss(&v, &SemanticEncoder::Network(sm), &ds, &split, &cfg).unwrap();
        assert!(after < before);
    }

    #[test]
    fn fixed_semantic_side_uses_raw_vectors() {
        let (ds, split, mut cfg) = setup();
        cfg.semantic_mode = SemanticMode::Fixed;
        let out = alternate_train(&ds, &split, &cfg).unwrap();
        assert_eq!(out.checkpoint.semantic, SemanticEncoder::Identity { dim: 5 });
        assert_eq!(out.checkpoint.visual.embed_dim(), 5);
        assert!(out.log.iter().skip(1).all(|r| r.semantic_loss.is_none()));
    }

    #[test]
    fn rejects_bad_setups() {
        let (ds, mut split, mut cfg) = setup();
        cfg.patience = 0;
        assert!(matches!(alternate_train(&ds, &split, &cfg), Err(Error::Config(_))));
        cfg.patience = 2;
        split.val.clear();
        assert!(alternate_train(&ds, &split, &cfg).is_err());
    }
}
