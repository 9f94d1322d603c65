use alloc::vec::Vec;

use super::report::{aggregate_reports, evaluate, EvalReport};
use super::scenario::Scenario;
use crate::error::{config_err, Result};
use crate::numerics::{Matrix, RngState};
use crate::scoring::ScoreMatrix;

/// Default number of random-guess trials.
pub const RGS_TRIALS: usize = 100;

/// Random guessing of scores: every trial draws i.i.d. uniform scores for
/// every (instance, label) pair and evaluates them. The report carries the
/// mean as its values and the mean/SEM summary.
pub fn rgs_baseline(
    instance_ids: &[usize],
    label_ids: &[usize],
    truths: &[Vec<usize>],
    scenario: &Scenario,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<EvalReport> {
    if trials == 0 {
        return Err(config_err!("random-guess baseline needs at least one trial"));
    }
    let mut rng = RngState::new(seed);
    let mut reports = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut scores = Matrix::zeros(instance_ids.len(), label_ids.len());
        for v in scores.as_mut_slice() {
            *v = rng.uniform(0.0, 1.0);
        }
        let sm = ScoreMatrix::new(instance_ids.to_vec(), label_ids.to_vec(), scores)?;
        reports.push(evaluate(&sm, truths, scenario, k)?);
    }
    aggregate_reports(&reports)
}
