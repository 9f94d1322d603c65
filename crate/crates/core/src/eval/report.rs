use alloc::vec::Vec;

use super::metrics::{i_map, l_map, overall_prf};
use super::scenario::{apply_scenario, Scenario, ScenarioKind};
use crate::error::{config_err, Result};
use crate::scoring::ScoreMatrix;

/// Default cut-off for the top-k metrics.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValues {
    pub i_map: f64,
    pub l_map: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricValues {
    pub const NAMES: [&'static str; 5] = ["i_map", "l_map", "precision", "recall", "f1"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.i_map, self.l_map, self.precision, self.recall, self.f1]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            i_map: v[0],
            l_map: v[1],
            precision: v[2],
            recall: v[3],
            f1: v[4],
        }
    }
}

/// Mean and standard error of the mean of repeated measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: MetricValues,
    pub sem: MetricValues,
    pub trials: usize,
    /// `false` for a single trial, where the SEM is reported as 0.
    pub sem_defined: bool,
}

/// Mean and `stdev / sqrt(n)` per metric, with the sample (n - 1) stdev.
pub fn summarize(samples: &[MetricValues]) -> Result<MetricSummary> {
    let n = samples.len();
    if n == 0 {
        return Err(config_err!("cannot summarize zero trials"));
    }
    let mut mean = [0.0; 5];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.to_array()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut sem = [0.0; 5];
    if n > 1 {
        for s in samples {
            for ((acc, v), m) in sem.iter_mut().zip(s.to_array()).zip(mean) {
                *acc += (v - m) * (v - m);
            }
        }
        for acc in &mut sem {
            *acc = libm::sqrt(*acc / (n - 1) as f64) / libm::sqrt(n as f64);
        }
    }
    Ok(MetricSummary {
        mean: MetricValues::from_array(mean),
        sem: MetricValues::from_array(sem),
        trials: n,
        sem_defined: n > 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenario: ScenarioKind,
    /// Cut-off actually used: the requested k clamped to the candidate count.
    pub k: usize,
    /// Instances with a non-empty truth under the scenario.
    pub instances: usize,
    /// Candidate labels under the scenario.
    pub labels: usize,
    pub values: MetricValues,
    pub summary: Option<MetricSummary>,
}

/// One line of a textual report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scenario: ScenarioKind,
    pub metric: &'static str,
    pub k: usize,
    pub value: f64,
    pub mean: Option<f64>,
    pub sem: Option<f64>,
}

impl EvalReport {
    pub fn records(&self) -> Vec<MetricRecord> {
        let values = self.values.to_array();
        let means = self.summary.map(|s| s.mean.to_array());
        let sems = self.summary.map(|s| s.sem.to_array());
        MetricValues::NAMES
            .iter()
            .enumerate()
            .map(|(i, &metric)| MetricRecord {
                scenario: self.scenario,
                metric,
                k: self.k,
                value: values[i],
                mean: means.map(|m| m[i]),
                sem: sems.map(|s| s[i]),
            })
            .collect()
    }
}

/// All metrics of one score table under one scenario.
///
/// `truths[i]` holds the full label set of `scores.instance_ids[i]`.
pub fn evaluate(scores: &ScoreMatrix, truths: &[Vec<usize>], scenario: &Scenario, k: usize) -> Result<EvalReport> {
    if k == 0 {
        return Err(config_err!("k must be >= 1"));
    }
    let view = apply_scenario(scores, truths, scenario)?;
    let labels = view.scores.label_ids.len();
    let k_used = k.min(labels);
    let imap = i_map(&view.truths, &view.rankings)?;
    let (positives, label_rankings) = view.label_view();
    let lmap = l_map(&positives, &label_rankings)?;
    let prf = overall_prf(&view.truths, &view.rankings, k_used)?;
    Ok(EvalReport {
        scenario: scenario.kind,
        k: k_used,
        instances: view.truths.iter().filter(|t| !t.is_empty()).count(),
        labels,
        values: MetricValues {
            i_map: imap,
            l_map: lmap,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
        },
        summary: None,
    })
}

/// I-MAP alone, as used for model selection.
pub fn evaluate_i_map(scores: &ScoreMatrix, truths: &[Vec<usize>], scenario: &Scenario) -> Result<f64> {
    let view = apply_scenario(scores, truths, scenario)?;
    i_map(&view.truths, &view.rankings)
}

/// Combines per-trial reports of one scenario into a mean report.
pub fn aggregate_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or_else(|| config_err!("no reports to aggregate"))?;
    let samples: Vec<MetricValues> = reports.iter().map(|r| r.values).collect();
    let summary = summarize(&samples)?;
    Ok(EvalReport {
        values: summary.mean,
        summary: Some(summary),
        ..first.clone()
    })
}
