//! TOML run configuration.
//!
//! ```toml
//! [data]                 # read by `generate`; every key is required
//! num_labels = 40
//! num_clusters = 5
//! num_instances = 1100
//! segments = 12
//! min_segments = 6
//! feature_dim = 32
//! semantic_dim = 16
//! labels_per_instance = [2, 3]
//! episodes_per_instance = [2, 4]
//! feature_noise = 1.0
//! semantic_jitter = 0.2
//! second_cluster_prob = 0.3
//! seed = 1
//!
//! [split]                # every key optional
//! mode = "lfs"           # or "ifs"
//! unseen = [3, 17]       # explicit unseen labels; otherwise `unseen_count` are sampled
//! unseen_count = 8
//! val_count = 100        # lfs
//! fractions = [0.6, 0.2, 0.2]   # ifs
//! seed = 1
//!
//! [train]                # every key optional
//! variant = "full"       # full, nrc, wse or rlr
//! loss = "ranknet"       # or "hinge"
//! margin = 1.0
//! lr_visual = 0.001
//! lr_semantic = 0.001
//! batch_size = 32
//! semantic_batch_size = 8
//! embed_dim = 24
//! lstm_units = 32
//! dense_units = 32
//! semantic_units = 32
//! dropout = 0.0
//! patience = 10
//! max_rounds = 50
//! pooling = "average"    # average, max or lagm
//! lagm_groups = 2
//! regularizer = "softplus"   # or "literal"
//! seed = 1
//! random_label_seed = 1  # rlr only
//!
//! [eval]                 # every key optional
//! scenario = "all"       # all, gzsl, known or unseen
//! k = 5
//! rgs_trials = 100
//! baseline_c = 1.0
//! baseline_iterations = 500
//! conse_norm = "l2"      # or "l1"
//! conse_top = 5
//! seed = 1
//!
//! [gradcheck]            # every key optional
//! cases = 100
//! tolerance = 1e-4       # overrides the per-family defaults
//! seed = 1
//! ```

use std::path::Path;

use mlzsr_core::baselines::{ConseNorm, LinearFitConfig, CONSE_TOP};
use mlzsr_core::data::SyntheticConfig;
use mlzsr_core::eval::{ScenarioKind, DEFAULT_K, RGS_TRIALS};
use mlzsr_core::loss::{RankLoss, RegularizerForm};
use mlzsr_core::model::SequenceKind;
use mlzsr_core::scoring::Pooling;
use mlzsr_core::train::{SemanticMode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: Option<DataSection>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub gradcheck: GradcheckSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub num_labels: usize,
    pub num_clusters: usize,
    pub num_instances: usize,
    pub segments: usize,
    pub min_segments: usize,
    pub feature_dim: usize,
    pub semantic_dim: usize,
    pub labels_per_instance: [usize; 2],
    pub episodes_per_instance: [usize; 2],
    pub feature_noise: f64,
    pub semantic_jitter: f64,
    pub second_cluster_prob: f64,
    pub seed: u64,
}

impl DataSection {
    pub fn to_synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            num_labels: self.num_labels,
            num_clusters: self.num_clusters,
            num_instances: self.num_instances,
            segments: self.segments,
            min_segments: self.min_segments,
            feature_dim: self.feature_dim,
            semantic_dim: self.semantic_dim,
            labels_per_instance: (self.labels_per_instance[0], self.labels_per_instance[1]),
            episodes_per_instance: (self.episodes_per_instance[0], self.episodes_per_instance[1]),
            feature_noise: self.feature_noise,
            semantic_jitter: self.semantic_jitter,
            second_cluster_prob: self.second_cluster_prob,
            seed: self.seed,
        }
    }

    pub fn from_synthetic(c: &SyntheticConfig) -> Self {
        Self {
            num_labels: c.num_labels,
            num_clusters: c.num_clusters,
            num_instances: c.num_instances,
            segments: c.segments,
            min_segments: c.min_segments,
            feature_dim: c.feature_dim,
            semantic_dim: c.semantic_dim,
            labels_per_instance: [c.labels_per_instance.0, c.labels_per_instance.1],
            episodes_per_instance: [c.episodes_per_instance.0, c.episodes_per_instance.1],
            feature_noise: c.feature_noise,
            semantic_jitter: c.semantic_jitter,
            second_cluster_prob: c.second_cluster_prob,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Ifs,
    Lfs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub mode: ModeName,
    pub unseen: Option<Vec<usize>>,
    pub unseen_count: usize,
    pub val_count: usize,
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            mode: ModeName::Lfs,
            unseen: None,
            unseen_count: 8,
            val_count: 100,
            fractions: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Recurrent visual model with the learned semantic model.
    Full,
    /// Per-segment ReLU layer in place of the recurrent layer.
    Nrc,
    /// Raw semantic vectors in place of the semantic model.
    Wse,
    /// Random unit label vectors in place of the semantic table.
    Rlr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LossName {
    Ranknet,
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingName {
    Average,
    Max,
    Lagm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerName {
    Softplus,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub variant: Variant,
    pub loss: LossName,
    pub margin: f64,
    pub lr_visual: f64,
    pub lr_semantic: f64,
    pub batch_size: usize,
    pub semantic_batch_size: usize,
    pub embed_dim: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub semantic_units: usize,
    pub dropout: f64,
    pub patience: usize,
    pub max_rounds: usize,
    pub pooling: PoolingName,
    pub lagm_groups: usize,
    pub regularizer: RegularizerName,
    pub seed: u64,
    pub random_label_seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            variant: Variant::Full,
            loss: LossName::Ranknet,
            margin: 1.0,
            lr_visual: d.lr_visual,
            lr_semantic: d.lr_semantic,
            batch_size: d.batch_size,
            semantic_batch_size: d.semantic_batch_size,
            embed_dim: d.embed_dim,
            lstm_units: d.lstm_units,
            dense_units: d.dense_units,
            semantic_units: d.semantic_units,
            dropout: d.dropout,
            patience: d.patience,
            max_rounds: d.max_rounds,
            pooling: PoolingName::Average,
            lagm_groups: 2,
            regularizer: RegularizerName::Softplus,
            seed: d.seed,
            random_label_seed: 0,
        }
    }
}

impl TrainSection {
    pub fn pooling(&self) -> Pooling {
        match self.pooling {
            PoolingName::Average => Pooling::Average,
            PoolingName::Max => Pooling::Max,
            PoolingName::Lagm => Pooling::LocalAverageGlobalMax {
                groups: self.lagm_groups,
            },
        }
    }

    pub fn to_train_config(&self) -> AppResult<TrainConfig> {
        let cfg = TrainConfig {
            loss: match self.loss {
                LossName::Ranknet => RankLoss::RankNet,
                LossName::Hinge => RankLoss::Hinge { margin: self.margin },
            },
            lr_visual: self.lr_visual,
            lr_semantic: self.lr_semantic,
            batch_size: self.batch_size,
            semantic_batch_size: self.semantic_batch_size,
            embed_dim: self.embed_dim,
            lstm_units: self.lstm_units,
            dense_units: self.dense_units,
            semantic_units: self.semantic_units,
            dropout: self.dropout,
            patience: self.patience,
            max_rounds: self.max_rounds,
            seed: self.seed,
            pooling: self.pooling(),
            sequence: match self.variant {
                Variant::Nrc => SequenceKind::Feedforward,
                _ => SequenceKind::Lstm,
            },
            semantic_mode: match self.variant {
                Variant::Wse => SemanticMode::Fixed,
                _ => SemanticMode::Learned,
            },
            regularizer: match self.regularizer {
                RegularizerName::Softplus => RegularizerForm::Softplus,
                RegularizerName::Literal => RegularizerForm::Literal,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    All,
    Gzsl,
    Known,
    Unseen,
}

impl ScenarioName {
    pub fn kinds(&self) -> Vec<ScenarioKind> {
        match self {
            ScenarioName::All => ScenarioKind::ALL.to_vec(),
            ScenarioName::Gzsl => vec![ScenarioKind::Gzsl],
            ScenarioName::Known => vec![ScenarioKind::KnownOnly],
            ScenarioName::Unseen => vec![ScenarioKind::UnseenOnly],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormName {
    L2,
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub scenario: ScenarioName,
    pub k: usize,
    pub rgs_trials: usize,
    pub baseline_c: f64,
    pub baseline_iterations: usize,
    pub conse_norm: NormName,
    pub conse_top: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let lin = LinearFitConfig::default();
        Self {
            scenario: ScenarioName::All,
            k: DEFAULT_K,
            rgs_trials: RGS_TRIALS,
            baseline_c: lin.c,
            baseline_iterations: lin.iterations,
            conse_norm: NormName::L2,
            conse_top: CONSE_TOP,
            seed: 0,
        }
    }
}

impl EvalSection {
    pub fn linear(&self) -> LinearFitConfig {
        LinearFitConfig {
            c: self.baseline_c,
            iterations: self.baseline_iterations,
        }
    }

    pub fn conse_norm(&self) -> ConseNorm {
        match self.conse_norm {
            NormName::L2 => ConseNorm::L2,
            NormName::L1 => ConseNorm::L1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    pub cases: usize,
    pub tolerance: Option<f64>,
    pub seed: u64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            cases: 100,
            tolerance: None,
            seed: 0,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> AppResult<Config> {
        toml::from_str(text).map_err(|e: toml::de::Error| AppError::config(e.message()))
    }

    /// Reads `path`, or returns the defaults when no file is given. A `.json`
    /// path is read as a run manifest and yields the configuration it recorded.
    pub fn load(path: Option<&Path>) -> AppResult<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) if p.extension().is_some_and(|e| e == "json") => Ok(RunManifest::load(p)?.config),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| AppError::config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e: toml::de::Error| AppError::config(format!("{}: {}", p.display(), e.message())))
            }
        }
    }

    pub fn data(&self) -> AppResult<&DataSection> {
        self.data
            .as_ref()
            .ok_or_else(|| AppError::config("missing table `data`"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are representable in TOML")
    }
}
