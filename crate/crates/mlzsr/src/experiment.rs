//! The synthetic zero-shot benchmark: one dataset, one label-first split, the
//! full model under both losses, their fusion, the ablations and the
//! comparative baselines, all scored on the same test instances.

use mlzsr_core::baselines::{
    conse_predict, costa_predict, dsp_predict, feature_scores, train_conse, train_costa, train_dsp, train_nrc,
    train_rlr, train_wse, ConseNorm, LinearFitConfig,
};
use mlzsr_core::data::{generate_synthetic, make_lfs_split, sample_unseen, Dataset, SplitSpec, SyntheticConfig};
use mlzsr_core::eval::{evaluate, rgs_baseline, EvalReport, Scenario, ScenarioKind, DEFAULT_K, RGS_TRIALS};
use mlzsr_core::loss::RankLoss;
use mlzsr_core::scoring::{fuse_score_matrices, ScoreMatrix};
use mlzsr_core::train::{alternate_train, predict_scores, TrainConfig, TrainOutcome};
use mlzsr_core::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub data: SyntheticConfig,
    pub unseen_labels: usize,
    pub val_count: usize,
    /// Shared training settings; the loss is set per model.
    pub train: TrainConfig,
    pub hinge_margin: f64,
    pub linear: LinearFitConfig,
    pub rgs_trials: usize,
    pub k: usize,
}

impl BenchmarkConfig {
    /// 40 labels in 5 clusters, 8 of them unseen, 12 segments of 32 features,
    /// 16-dimensional label vectors and a 24-dimensional joint space.
    pub fn desk(seed: u64) -> Self {
        Self {
            data: SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            },
            unseen_labels: 8,
            val_count: 100,
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            hinge_margin: 1.0,
            linear: LinearFitConfig::default(),
            rgs_trials: RGS_TRIALS,
            k: DEFAULT_K,
        }
    }
}

/// Scores and per-scenario reports of one method on the test set.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub name: &'static str,
    pub scores: Option<ScoreMatrix>,
    pub outcome: Option<TrainOutcome>,
    /// One report per scenario, in [`ScenarioKind::ALL`] order.
    pub reports: Vec<EvalReport>,
}

impl MethodResult {
    pub fn report(&self, kind: ScenarioKind) -> &EvalReport {
        self.reports
            .iter()
            .find(|r| r.scenario == kind)
            .expect("every scenario is evaluated")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub dataset: Dataset,
    pub split: SplitSpec,
    pub methods: Vec<MethodResult>,
}

impl BenchmarkResult {
    pub fn method(&self, name: &str) -> &MethodResult {
        self.methods
            .iter()
            .find(|m| m.name == name)
            .unwrap_or_else(|| panic!("no method named {name}"))
    }

    pub fn i_map(&self, name: &str, kind: ScenarioKind) -> f64 {
        self.method(name).report(kind).values.i_map
    }
}

pub const METHODS: [&str; 10] = [
    "ranknet", "hinge", "fusion", "nrc", "wse", "rlr", "dsp", "conse", "costa", "rgs",
];

pub fn test_truths(ds: &Dataset, split: &SplitSpec) -> Vec<Vec<usize>> {
    split.test.iter().map(|&i| ds.instances[i].labels.clone()).collect()
}

/// All three scenario reports of one score table.
pub fn scenario_reports(
    scores: &ScoreMatrix,
    truths: &[Vec<usize>],
    split: &SplitSpec,
    k: usize,
) -> Result<Vec<EvalReport>> {
    ScenarioKind::ALL
        .iter()
        .map(|&kind| evaluate(scores, truths, &Scenario::from_split(kind, split), k))
        .collect()
}

fn all_labels(ds: &Dataset) -> Vec<usize> {
    (0..ds.num_labels()).collect()
}

fn trained(
    name: &'static str,
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    outcome: TrainOutcome,
    k: usize,
) -> Result<MethodResult> {
    let scores = predict_scores(
        &outcome.checkpoint.visual,
        &outcome.checkpoint.semantic,
        ds,
        &split.test,
        &all_labels(ds),
        cfg.pooling,
    )?;
    let reports = scenario_reports(&scores, &test_truths(ds, split), split, k)?;
    Ok(MethodResult {
        name,
        scores: Some(scores),
        outcome: Some(outcome),
        reports,
    })
}

fn scored(
    name: &'static str,
    scores: ScoreMatrix,
    truths: &[Vec<usize>],
    split: &SplitSpec,
    k: usize,
) -> Result<MethodResult> {
    let reports = scenario_reports(&scores, truths, split, k)?;
    Ok(MethodResult {
        name,
        scores: Some(scores),
        outcome: None,
        reports,
    })
}

pub fn benchmark_split(ds: &Dataset, cfg: &BenchmarkConfig) -> Result<SplitSpec> {
    let unseen = sample_unseen(ds.num_labels(), cfg.unseen_labels, cfg.data.seed)?;
    make_lfs_split(ds, &unseen, cfg.val_count, cfg.data.seed)
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    let ds = generate_synthetic(&cfg.data)?;
    let split = benchmark_split(&ds, cfg)?;
    let truths = test_truths(&ds, &split);
    let labels = all_labels(&ds);
    let mut methods = Vec::new();

    let ranknet_cfg = TrainConfig {
        loss: RankLoss::RankNet,
        ..cfg.train.clone()
    };
    let hinge_cfg = TrainConfig {
        loss: RankLoss::Hinge {
            margin: cfg.hinge_margin,
        },
        ..cfg.train.clone()
    };
    let ranknet = trained(
        "ranknet",
        &ds,
        &split,
        &ranknet_cfg,
        alternate_train(&ds, &split, &ranknet_cfg)?,
        cfg.k,
    )?;
    let hinge = trained(
        "hinge",
        &ds,
        &split,
        &hinge_cfg,
        alternate_train(&ds, &split, &hinge_cfg)?,
        cfg.k,
    )?;
    let fused = fuse_score_matrices(
        ranknet.scores.as_ref().expect("trained scores"),
        hinge.scores.as_ref().expect("trained scores"),
    )?;
    methods.push(ranknet);
    methods.push(hinge);
    methods.push(scored("fusion", fused, &truths, &split, cfg.k)?);

    methods.push(trained(
        "nrc",
        &ds,
        &split,
        &ranknet_cfg,
        train_nrc(&ds, &split, &ranknet_cfg)?,
        cfg.k,
    )?);
    methods.push(trained(
        "wse",
        &ds,
        &split,
        &ranknet_cfg,
        train_wse(&ds, &split, &ranknet_cfg)?,
        cfg.k,
    )?);
    let (random_ds, rlr) = train_rlr(&ds, &split, &ranknet_cfg, cfg.data.seed ^ 0x5EED)?;
    methods.push(trained("rlr", &random_ds, &split, &ranknet_cfg, rlr, cfg.k)?);

    let dsp = train_dsp(&ds, &split, cfg.linear)?;
    let s = feature_scores(&ds, &split.test, &labels, |x| {
        dsp_predict(&dsp, x, &ds.semantics, &labels)
    })?;
    methods.push(scored("dsp", s, &truths, &split, cfg.k)?);
    let conse = train_conse(&ds, &split, ConseNorm::L2, cfg.linear)?;
    let s = feature_scores(&ds, &split.test, &labels, |x| {
        conse_predict(&conse, x, &ds.semantics, &labels)
    })?;
    methods.push(scored("conse", s, &truths, &split, cfg.k)?);
    let costa = train_costa(&ds, &split, cfg.linear)?;
    let s = feature_scores(&ds, &split.test, &labels, |x| costa_predict(&costa, x, &labels))?;
    methods.push(scored("costa", s, &truths, &split, cfg.k)?);

    let rgs = ScenarioKind::ALL
        .iter()
        .map(|&kind| {
            rgs_baseline(
                &split.test,
                &labels,
                &truths,
                &Scenario::from_split(kind, &split),
                cfg.k,
                cfg.rgs_trials,
                cfg.data.seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    methods.push(MethodResult {
        name: "rgs",
        scores: None,
        outcome: None,
        reports: rgs,
    });

    Ok(BenchmarkResult {
        dataset: ds,
        split,
        methods,
    })
}
