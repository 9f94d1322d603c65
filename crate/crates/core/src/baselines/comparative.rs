use alloc::vec::Vec;

use super::linear::{fit_linear, LinearFitConfig, LinearLoss, LinearModel};
use crate::data::{Dataset, SplitSpec};
use crate::error::{config_err, Error, Result};
use crate::numerics::{dot, l2_norm, Matrix};
use crate::scoring::{rank_order, ScoreMatrix};

/// Instance-level features: the mean of all `T` segment rows.
pub fn instance_features(ds: &Dataset, ids: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(ids.len(), ds.feature_dim);
    for (r, &i) in ids.iter().enumerate() {
        out.row_mut(r).copy_from_slice(&ds.instances[i].mean_feature());
    }
    out
}

/// Training instances with at least one known label.
fn labelled_train(ds: &Dataset, split: &SplitSpec) -> Vec<usize> {
    split
        .train
        .iter()
        .copied()
        .filter(|&i| !split.known_targets(ds, i).is_empty())
        .collect()
}

/// `n x |known|` matrix of `+1/-1` membership targets.
fn membership_targets(ds: &Dataset, ids: &[usize], known: &[usize]) -> Matrix {
    let mut t = Matrix::filled(ids.len(), known.len(), -1.0);
    for (r, &i) in ids.iter().enumerate() {
        for (c, &l) in known.iter().enumerate() {
            if ds.instances[i].has_label(l) {
                t[(r, c)] = 1.0;
            }
        }
    }
    t
}

/// Mean of the semantic vectors of `labels`.
pub fn mean_semantic_vector(table: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Domain("mean semantic vector of an empty label set".into()));
    }
    let mut acc = alloc::vec![0.0; table.cols()];
    for &l in labels {
        for (a, v) in acc.iter_mut().zip(table.row(l)) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= labels.len() as f64;
    }
    Ok(acc)
}

/// `<s_hat, s_c>` for every label in `labels`.
fn semantic_scores(s_hat: &[f64], table: &Matrix, labels: &[usize]) -> Vec<f64> {
    labels.iter().map(|&c| dot(s_hat, table.row(c))).collect()
}

/// Regression from instance features to the mean semantic vector of the
/// instance's labels, scored by dot product with every label's vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dsp {
    pub model: LinearModel,
}

/// Ridge fit of `targets` (`n x d_s`) on `features` (`n x d_x`).
pub fn dsp_fit(features: &Matrix, targets: &Matrix, cfg: LinearFitConfig) -> Result<Dsp> {
    Ok(Dsp {
        model: fit_linear(features, targets, LinearLoss::Squared, cfg)?,
    })
}

pub fn dsp_predict(model: &Dsp, x: &[f64], table: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    let s_hat = model.model.predict(x)?;
    if s_hat.len() != table.cols() {
        return Err(Error::shape("dsp_predict", table.cols(), s_hat.len()));
    }
    Ok(semantic_scores(&s_hat, table, labels))
}

/// Fits on the training instances that carry a known label, with the mean of
/// their known labels' semantic vectors as targets.
pub fn train_dsp(ds: &Dataset, split: &SplitSpec, cfg: LinearFitConfig) -> Result<Dsp> {
    let ids = labelled_train(ds, split);
    let mut targets = Matrix::zeros(ids.len(), ds.semantic_dim());
    for (r, &i) in ids.iter().enumerate() {
        targets
            .row_mut(r)
            .copy_from_slice(&mean_semantic_vector(&ds.semantics, &split.known_targets(ds, i))?);
    }
    dsp_fit(&instance_features(ds, &ids), &targets, cfg)
}

/// How the top label probabilities are turned into combination weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConseNorm {
    /// Divide by the L2 norm of the selected probabilities.
    #[default]
    L2,
    /// Divide by their sum (a convex combination).
    L1,
}

pub const CONSE_TOP: usize = 5;

/// One-vs-rest logistic classifiers over the known labels; an instance is
/// embedded as the weighted sum of its most probable labels' semantic vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Conse {
    pub classifiers: LinearModel,
    pub known: Vec<usize>,
    pub top: usize,
    pub norm: ConseNorm,
}

pub fn conse_fit(
    features: &Matrix,
    targets: &Matrix,
    known: &[usize],
    top: usize,
    norm: ConseNorm,
    cfg: LinearFitConfig,
) -> Result<Conse> {
    if top == 0 {
        return Err(config_err!("ConSE needs top >= 1"));
    }
    if targets.cols() != known.len() {
        return Err(Error::shape("conse_fit", known.len(), targets.cols()));
    }
    Ok(Conse {
        classifiers: fit_linear(features, targets, LinearLoss::Logistic, cfg)?,
        known: known.to_vec(),
        top,
        norm,
    })
}

/// Combination weights of the `top` most probable labels (ties by ascending
/// label id), as `(position in known, weight)` pairs.
pub fn conse_weights(probs: &[f64], known: &[usize], top: usize, norm: ConseNorm) -> Vec<(usize, f64)> {
    let order = rank_order(probs, known);
    let chosen = &order[..top.min(order.len())];
    let scale = match norm {
        ConseNorm::L2 => l2_norm(&chosen.iter().map(|&j| probs[j]).collect::<Vec<_>>()),
        ConseNorm::L1 => chosen.iter().map(|&j| probs[j]).sum(),
    };
    chosen.iter().map(|&j| (j, probs[j] / scale)).collect()
}

/// Semantic embedding `s_hat` of one instance.
pub fn conse_embedding(model: &Conse, x: &[f64], table: &Matrix) -> Result<Vec<f64>> {
    let probs: Vec<f64> = model
        .classifiers
        .predict(x)?
        .into_iter()
        .map(crate::numerics::sigmoid)
        .collect();
    let mut s_hat = alloc::vec![0.0; table.cols()];
    for (j, w) in conse_weights(&probs, &model.known, model.top, model.norm) {
        for (s, v) in s_hat.iter_mut().zip(table.row(model.known[j])) {
            *s += w * v;
        }
    }
    Ok(s_hat)
}

pub fn conse_predict(model: &Conse, x: &[f64], table: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    Ok(semantic_scores(&conse_embedding(model, x, table)?, table, labels))
}

pub fn train_conse(ds: &Dataset, split: &SplitSpec, norm: ConseNorm, cfg: LinearFitConfig) -> Result<Conse> {
    let ids = split.train.clone();
    conse_fit(
        &instance_features(ds, &ids),
        &membership_targets(ds, &ids, &split.known),
        &split.known,
        CONSE_TOP,
        norm,
        cfg,
    )
}

/// One-vs-rest hinge classifiers over the known labels; every other label's
/// classifier is the softmax(-distance)-weighted combination of the known
/// ones in semantic space.
#[derive(Debug, Clone, PartialEq)]
pub struct Costa {
    pub classifiers: LinearModel,
    pub known: Vec<usize>,
    /// `|C| x d_x`, one row per label id.
    pub weight: Matrix,
    /// `|C| x 1`
    pub bias: Matrix,
}

/// `labels.len() x known.len()` matrix of `exp(-d_ck) / sum_j exp(-d_cj)` with
/// `d` the Euclidean distance between semantic vectors.
pub fn costa_beta(table: &Matrix, labels: &[usize], known: &[usize]) -> Result<Matrix> {
    if known.is_empty() {
        return Err(config_err!("COSTA needs at least one known label"));
    }
    let mut beta = Matrix::zeros(labels.len(), known.len());
    for (r, &c) in labels.iter().enumerate() {
        let neg_dist: Vec<f64> = known
            .iter()
            .map(|&k| {
                let diff: Vec<f64> = table.row(c).iter().zip(table.row(k)).map(|(a, b)| a - b).collect();
                -l2_norm(&diff)
            })
            .collect();
        let top = neg_dist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = neg_dist.iter().map(|v| libm::exp(v - top)).collect();
        let total: f64 = exps.iter().sum();
        for (j, e) in exps.into_iter().enumerate() {
            beta[(r, j)] = e / total;
        }
    }
    Ok(beta)
}

pub fn costa_fit(
    features: &Matrix,
    targets: &Matrix,
    known: &[usize],
    table: &Matrix,
    cfg: LinearFitConfig,
) -> Result<Costa> {
    if targets.cols() != known.len() {
        return Err(Error::shape("costa_fit", known.len(), targets.cols()));
    }
    let classifiers = fit_linear(features, targets, LinearLoss::Hinge, cfg)?;
    let all: Vec<usize> = (0..table.rows()).collect();
    let beta = costa_beta(table, &all, known)?;
    let d = classifiers.inputs();
    let mut weight = Matrix::zeros(all.len(), d);
    let mut bias = Matrix::zeros(all.len(), 1);
    for c in all {
        if let Some(j) = known.iter().position(|&k| k == c) {
            weight.row_mut(c).copy_from_slice(classifiers.weight.row(j));
            bias[(c, 0)] = classifiers.bias[(j, 0)];
            continue;
        }
        for j in 0..known.len() {
            let b = beta[(c, j)];
            for (w, v) in weight.row_mut(c).iter_mut().zip(classifiers.weight.row(j)) {
                *w += b * v;
            }
            bias[(c, 0)] += b * classifiers.bias[(j, 0)];
        }
    }
    Ok(Costa {
        classifiers,
        known: known.to_vec(),
        weight,
        bias,
    })
}

pub fn costa_predict(model: &Costa, x: &[f64], labels: &[usize]) -> Result<Vec<f64>> {
    if x.len() != model.weight.cols() {
        return Err(Error::shape("costa_predict", model.weight.cols(), x.len()));
    }
    labels
        .iter()
        .map(|&c| {
            if c >= model.weight.rows() {
                return Err(Error::Data(alloc::format!("label {c} unknown to COSTA model")));
            }
            Ok(dot(model.weight.row(c), x) + model.bias[(c, 0)])
        })
        .collect()
}

pub fn train_costa(ds: &Dataset, split: &SplitSpec, cfg: LinearFitConfig) -> Result<Costa> {
    let ids = split.train.clone();
    costa_fit(
        &instance_features(ds, &ids),
        &membership_targets(ds, &ids, &split.known),
        &split.known,
        &ds.semantics,
        cfg,
    )
}

/// Score table of an instance-level predictor over `instances` x `labels`.
pub fn feature_scores<F>(ds: &Dataset, instances: &[usize], labels: &[usize], mut predict: F) -> Result<ScoreMatrix>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let features = instance_features(ds, instances);
    let mut out = Matrix::zeros(instances.len(), labels.len());
    for r in 0..instances.len() {
        let s = predict(features.row(r))?;
        if s.len() != labels.len() {
            return Err(Error::shape("feature_scores", labels.len(), s.len()));
        }
        out.row_mut(r).copy_from_slice(&s);
    }
    out.ensure_finite("baseline scores")?;
    ScoreMatrix::new(instances.to_vec(), labels.to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_two_vectors() {
        let table = Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0], [9.0, 9.0]]).unwrap();
        assert_eq!(mean_semantic_vector(&table, &[0, 1]).unwrap(), alloc::vec![0.5, 1.5]);
        assert!(mean_semantic_vector(&table, &[]).is_err());
    }

    #[test]
    fn conse_single_label_reproduces_its_vector() {
        let w = conse_weights(&[1.0], &[4], 5, ConseNorm::L2);
        assert_eq!(w, alloc::vec![(0, 1.0)]);
    }

    #[test]
    fn conse_weights_norms() {
        let probs = [0.9, 0.1, 0.5, 0.7, 0.3, 0.2, 0.8];
        let known = [0, 1, 2, 3, 4, 5, 6];
        let w = conse_weights(&probs, &known, 5, ConseNorm::L2);
        assert_eq!(w.iter().map(|p| p.0).collect::<Vec<_>>(), alloc::vec![0, 6, 3, 2, 4]);
        let norm: f64 = w.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let l1 = conse_weights(&probs, &known, 5, ConseNorm::L1);
        assert!((l1.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(conse_weights(&probs[..3], &known[..3], 5, ConseNorm::L2).len(), 3);
    }

    #[test]
    fn costa_beta_properties() {
        let table = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [0.0, 0.0]]).unwrap();
        let b = costa_beta(&table, &[4], &[0, 1, 2, 3]).unwrap();
        for j in 0..4 {
            assert!((b[(0, j)] - 0.25).abs() < 1e-15);
        }
        let far = Matrix::from_rows(&[[0.0, 0.0], [100.0, 0.0], [0.0, 0.0]]).unwrap();
        let b = costa_beta(&far, &[2], &[0, 1]).unwrap();
        assert!((b[(0, 0)] - 1.0).abs() < 1e-12);
        let rows = costa_beta(&table, &[0, 1, 2, 3, 4], &[0, 2]).unwrap();
        for r in 0..5 {
            assert!((rows.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
