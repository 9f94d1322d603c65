use alloc::vec::Vec;

use crate::error::{domain_err, Error, Result};

/// Fraction of the first `k` entries of `ranked` that belong to `truth`.
pub fn precision_at_k(truth: &[usize], ranked: &[usize], k: usize) -> Result<f64> {
    if k == 0 || k > ranked.len() {
        return Err(domain_err!("k = {k} outside [1, {}]", ranked.len()));
    }
    Ok(hits_at(truth, ranked, k) as f64 / k as f64)
}

fn hits_at(truth: &[usize], ranked: &[usize], k: usize) -> usize {
    ranked.iter().take(k).filter(|r| truth.contains(r)).count()
}

/// Average precision of one ranking: the mean over relevant items of the
/// precision at that item's rank. `None` when `truth` is empty.
///
/// Relevant items missing from `ranked` count as never retrieved.
pub fn average_precision(truth: &[usize], ranked: &[usize]) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, item) in ranked.iter().enumerate() {
        if truth.contains(item) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Some(sum / truth.len() as f64)
}

/// Mean average precision over the queries with a non-empty truth set.
///
/// Used per instance over label rankings (I-MAP) and per label over instance
/// rankings (L-MAP).
pub fn mean_average_precision(truths: &[Vec<usize>], rankings: &[Vec<usize>]) -> Result<f64> {
    if truths.len() != rankings.len() {
        return Err(Error::shape("mean_average_precision", truths.len(), rankings.len()));
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for (t, r) in truths.iter().zip(rankings) {
        if let Some(ap) = average_precision(t, r) {
            sum += ap;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(domain_err!("every query has an empty ground truth"));
    }
    Ok(sum / counted as f64)
}

/// Instance-centric MAP: one label ranking and one truth set per instance.
pub fn i_map(truths: &[Vec<usize>], rankings: &[Vec<usize>]) -> Result<f64> {
    mean_average_precision(truths, rankings)
}

/// Label-centric MAP: one positive-instance set and one instance ranking per label.
pub fn l_map(positives: &[Vec<usize>], rankings: &[Vec<usize>]) -> Result<f64> {
    mean_average_precision(positives, rankings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Overall top-`k` precision, recall and F1, pooled over all instances.
///
/// Instances with an empty truth set are skipped. Rankings shorter than `k`
/// contribute the hits they have while the precision denominator stays `k`.
pub fn overall_prf(truths: &[Vec<usize>], rankings: &[Vec<usize>], k: usize) -> Result<Prf> {
    if k == 0 {
        return Err(domain_err!("k must be >= 1"));
    }
    if truths.len() != rankings.len() {
        return Err(Error::shape("overall_prf", truths.len(), rankings.len()));
    }
    let mut hits = 0usize;
    let mut relevant = 0usize;
    let mut instances = 0usize;
    for (t, r) in truths.iter().zip(rankings) {
        if t.is_empty() {
            continue;
        }
        hits += hits_at(t, r, k);
        relevant += t.len();
        instances += 1;
    }
    if instances == 0 {
        return Err(domain_err!("every instance has an empty ground truth"));
    }
    let precision = hits as f64 / (k * instances) as f64;
    let recall = hits as f64 / relevant as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf { precision, recall, f1 })
}
