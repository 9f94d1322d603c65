//! Randomized comparison of every hand-written gradient against central
//! finite differences.

use alloc::vec::Vec;

use crate::error::Result;
use crate::loss::{
    hinge_semantic_loss, hinge_visual_loss, ranknet_semantic_loss, ranknet_visual_loss, RankLoss, TargetVector,
};
use crate::model::{
    flatten_params, load_flat_params, Dense, LstmLayer, Parameters, SemanticDims, SemanticModel, SequenceKind,
    VisualDims, VisualModel,
};
use crate::numerics::{dot, finite_diff_grad, max_relative_error, Matrix, RngState};
use crate::scoring::Pooling;
use crate::train::visual_instance_grad;

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Tolerance for layer and model gradients.
pub const MODEL_TOLERANCE: f64 = 1e-4;
/// Tolerance for loss gradients w.r.t. scores.
pub const LOSS_TOLERANCE: f64 = 1e-6;
/// Minimum distance of every ReLU input and hinge argument from its kink.
const KINK_CLEARANCE: f64 = 1e-3;
const MAX_RESAMPLES: usize = 1000;

/// Worst relative error of one gradient family over all sampled cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub name: &'static str,
    pub cases: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= self.tolerance
    }
}

type CaseFn = fn(&mut RngState) -> Result<f64>;

/// The checked gradient families with their default tolerances.
pub const CHECKS: [(&str, CaseFn, f64); 10] = [
    ("lstm_layer", lstm_case, MODEL_TOLERANCE),
    ("dense_layer", dense_case, MODEL_TOLERANCE),
    ("visual_model", visual_lstm_case, MODEL_TOLERANCE),
    ("visual_model_nrc", visual_nrc_case, MODEL_TOLERANCE),
    ("semantic_model", semantic_case, MODEL_TOLERANCE),
    ("pooled_loss_pipeline", pipeline_case, MODEL_TOLERANCE),
    (
        "ranknet_visual_loss",
        |r| loss_case(r, LossKind::RankNetVisual),
        LOSS_TOLERANCE,
    ),
    (
        "ranknet_semantic_loss",
        |r| loss_case(r, LossKind::RankNetSemantic),
        LOSS_TOLERANCE,
    ),
    (
        "hinge_visual_loss",
        |r| loss_case(r, LossKind::HingeVisual),
        LOSS_TOLERANCE,
    ),
    (
        "hinge_semantic_loss",
        |r| loss_case(r, LossKind::HingeSemantic),
        LOSS_TOLERANCE,
    ),
];

/// Runs `cases` random instances of every family. Family `i` draws from
/// substream `i` of `seed`.
pub fn run_gradchecks(seed: u64, cases: usize) -> Result<Vec<GradCheck>> {
    let root = RngState::new(seed);
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, &(name, case, tolerance))| {
            let mut rng = root.substream(i as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..cases {
                worst = worst.max(case(&mut rng)?);
            }
            Ok(GradCheck {
                name,
                cases,
                max_relative_error: worst,
                tolerance,
            })
        })
        .collect()
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut RngState) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = scale * rng.normal();
    }
    m
}

fn random_vec(n: usize, scale: f64, rng: &mut RngState) -> Vec<f64> {
    (0..n).map(|_| scale * rng.normal()).collect()
}

fn frobenius(a: &Matrix, b: &Matrix) -> f64 {
    dot(a.as_slice(), b.as_slice())
}

fn randomize<P: Parameters>(model: &mut P, rng: &mut RngState) -> Result<()> {
    let n = flatten_params(model).len();
    load_flat_params(model, &random_vec(n, 0.5, rng))
}

fn lstm_flat(layer: &LstmLayer) -> Vec<f64> {
    layer
        .params()
        .iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .collect()
}

fn lstm_load(layer: &mut LstmLayer, flat: &[f64]) {
    let mut offset = 0;
    for p in layer.params_mut() {
        let n = p.len();
        p.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
}

fn lstm_case(rng: &mut RngState) -> Result<f64> {
    let (d_x, n, t) = (rng.between(1, 6), rng.between(1, 6), rng.between(1, 5));
    let mut layer = LstmLayer::zeros(d_x, n);
    let flat = random_vec(lstm_flat(&layer).len(), 0.5, rng);
    lstm_load(&mut layer, &flat);
    let x = random_matrix(t, d_x, 1.0, rng);
    let u = random_matrix(t, n, 1.0, rng);
    let (_, cache) = layer.forward(&x)?;
    let analytic = layer.backward(&cache, &u)?.flatten();
    let numeric = finite_diff_grad(
        |p| {
            let mut l = layer.clone();
            lstm_load(&mut l, p);
            l.forward(&x).map(|(h, _)| frobenius(&h, &u)).unwrap_or(f64::NAN)
        },
        &flat,
        STEP,
    )?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// `<u, relu(W x + b)>` w.r.t. `W`, `b` and `x`.
fn dense_case(rng: &mut RngState) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let (d_in, d_out) = (rng.between(1, 8), rng.between(1, 8));
        let mut layer = Dense::zeros(d_in, d_out);
        layer.weight = random_matrix(d_out, d_in, 0.7, rng);
        layer.bias = random_matrix(d_out, 1, 0.5, rng);
        let x = random_vec(d_in, 1.0, rng);
        let u = random_vec(d_out, 1.0, rng);
        let pre = layer.forward(&x);
        if pre.iter().any(|z| z.abs() < KINK_CLEARANCE) {
            continue;
        }
        let dz: Vec<f64> = u
            .iter()
            .zip(&pre)
            .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
            .collect();
        let mut gw = Matrix::zeros_like(&layer.weight);
        let mut gb = Matrix::zeros_like(&layer.bias);
        let mut dx = alloc::vec![0.0; d_in];
        layer.backward_acc(&x, &dz, &mut gw, &mut gb, Some(&mut dx));

        let mut point: Vec<f64> = layer.weight.as_slice().to_vec();
        point.extend_from_slice(layer.bias.as_slice());
        point.extend_from_slice(&x);
        let (nw, nb) = (layer.weight.len(), layer.bias.len());
        let numeric = finite_diff_grad(
            |p| {
                let mut l = layer.clone();
                l.weight.as_mut_slice().copy_from_slice(&p[..nw]);
                l.bias.as_mut_slice().copy_from_slice(&p[nw..nw + nb]);
                let out = l.forward(&p[nw + nb..]);
                out.iter().zip(&u).map(|(z, g)| z.max(0.0) * g).sum()
            },
            &point,
            STEP,
        )?;
        let mut analytic: Vec<f64> = gw.into_vec();
        analytic.extend(gb.into_vec());
        analytic.extend(dx);
        return Ok(max_relative_error(&analytic, &numeric));
    }
    Err(crate::Error::Numeric(
        "dense gradient check found no kink-free sample".into(),
    ))
}

fn visual_case(rng: &mut RngState, kind: SequenceKind) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let dims = VisualDims {
            input_dim: rng.between(1, 6),
            sequence_units: rng.between(1, 6),
            dense_units: rng.between(1, 6),
            embed_dim: rng.between(1, 6),
        };
        let t = rng.between(1, 5);
        let mut model = VisualModel::zeros(dims, kind);
        randomize(&mut model, rng)?;
        if rng.bernoulli(0.5) {
            model.dropout_rate = 0.3;
        }
        let training = model.dropout_rate > 0.0;
        let mask_seed = rng.next_u64();
        let x = random_matrix(t, dims.input_dim, 1.0, rng);
        let u = random_matrix(t, dims.embed_dim, 1.0, rng);
        let emb = model.forward(&x, training, &mut RngState::new(mask_seed))?;
        if emb.relu_margin() < KINK_CLEARANCE {
            continue;
        }
        let analytic = model.backward(&emb, &u)?.flatten();
        let flat = flatten_params(&model);
        let numeric = finite_diff_grad(
            |p| {
                let mut m = model.clone();
                if load_flat_params(&mut m, p).is_err() {
                    return f64::NAN;
                }
                m.forward(&x, training, &mut RngState::new(mask_seed))
                    .map(|e| frobenius(&e.embeddings, &u))
                    .unwrap_or(f64::NAN)
            },
            &flat,
            STEP,
        )?;
        return Ok(max_relative_error(&analytic, &numeric));
    }
    Err(crate::Error::Numeric(
        "visual gradient check found no kink-free sample".into(),
    ))
}

fn visual_lstm_case(rng: &mut RngState) -> Result<f64> {
    visual_case(rng, SequenceKind::Lstm)
}

fn visual_nrc_case(rng: &mut RngState) -> Result<f64> {
    visual_case(rng, SequenceKind::Feedforward)
}

fn semantic_case(rng: &mut RngState) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let dims = SemanticDims {
            input_dim: rng.between(1, 8),
            hidden_units: rng.between(1, 8),
            embed_dim: rng.between(1, 8),
        };
        let mut model = SemanticModel::zeros(dims);
        randomize(&mut model, rng)?;
        let s = random_vec(dims.input_dim, 1.0, rng);
        let u = random_vec(dims.embed_dim, 1.0, rng);
        let (_, cache) = model.forward(&s)?;
        if cache.relu_margin() < KINK_CLEARANCE {
            continue;
        }
        let analytic = model.backward(&cache, &u)?.flatten();
        let flat = flatten_params(&model);
        let numeric = finite_diff_grad(
            |p| {
                let mut m = model.clone();
                if load_flat_params(&mut m, p).is_err() {
                    return f64::NAN;
                }
                m.forward(&s).map(|(e, _)| dot(&e, &u)).unwrap_or(f64::NAN)
            },
            &flat,
            STEP,
        )?;
        return Ok(max_relative_error(&analytic, &numeric));
    }
    Err(crate::Error::Numeric(
        "semantic gradient check found no kink-free sample".into(),
    ))
}

fn random_targets(n: usize, rng: &mut RngState) -> Result<TargetVector> {
    TargetVector::new((0..n).map(|_| if rng.bernoulli(0.4) { 1 } else { -1 }).collect())
}

/// Averaged-pooling RankNet loss of one instance w.r.t. every visual parameter.
fn pipeline_case(rng: &mut RngState) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let dims = VisualDims {
            input_dim: rng.between(1, 6),
            sequence_units: rng.between(1, 6),
            dense_units: rng.between(1, 6),
            embed_dim: rng.between(1, 6),
        };
        let t = rng.between(1, 5);
        let labels = rng.between(2, 6);
        let mut model = VisualModel::zeros(dims, SequenceKind::Lstm);
        randomize(&mut model, rng)?;
        let x = random_matrix(t, dims.input_dim, 1.0, rng);
        let es = random_matrix(dims.embed_dim, labels, 1.0, rng);
        let y = random_targets(labels, rng)?;
        let mut unused = RngState::new(0);
        if model.forward(&x, false, &mut unused)?.relu_margin() < KINK_CLEARANCE {
            continue;
        }
        let (_, grads) = visual_instance_grad(
            &model,
            &x,
            &es,
            &y,
            RankLoss::RankNet,
            Pooling::Average,
            false,
            &mut unused,
        )?;
        let flat = flatten_params(&model);
        let numeric = finite_diff_grad(
            |p| {
                let mut m = model.clone();
                if load_flat_params(&mut m, p).is_err() {
                    return f64::NAN;
                }
                visual_instance_grad(
                    &m,
                    &x,
                    &es,
                    &y,
                    RankLoss::RankNet,
                    Pooling::Average,
                    false,
                    &mut RngState::new(0),
                )
                .map(|(v, _)| v)
                .unwrap_or(f64::NAN)
            },
            &flat,
            STEP,
        )?;
        return Ok(max_relative_error(&grads.flatten(), &numeric));
    }
    Err(crate::Error::Numeric(
        "pipeline gradient check found no kink-free sample".into(),
    ))
}

#[derive(Debug, Clone, Copy)]
enum LossKind {
    RankNetVisual,
    RankNetSemantic,
    HingeVisual,
    HingeSemantic,
}

const HINGE_MARGIN: f64 = 1.0;

/// True when no hinge argument lies within the clearance of its kink.
fn hinge_kink_free(o: &[f64], y: &TargetVector, margin: f64) -> bool {
    let ys = y.as_slice();
    let clear = |v: f64| v.abs() >= KINK_CLEARANCE;
    let pairs = y
        .positives()
        .all(|p| y.negatives().all(|q| clear(margin - o[p] + o[q])));
    pairs && o.iter().zip(ys).all(|(v, &t)| clear(margin - f64::from(t) * v))
}

fn loss_case(rng: &mut RngState, kind: LossKind) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let n = rng.between(1, 8);
        let o = random_vec(n, 1.5, rng);
        let y = random_targets(n, rng)?;
        let f = |o: &[f64]| match kind {
            LossKind::RankNetVisual => ranknet_visual_loss(o, &y),
            LossKind::RankNetSemantic => ranknet_semantic_loss(o, &y),
            LossKind::HingeVisual => hinge_visual_loss(o, &y, HINGE_MARGIN),
            LossKind::HingeSemantic => hinge_semantic_loss(o, &y, HINGE_MARGIN),
        };
        if matches!(kind, LossKind::HingeVisual | LossKind::HingeSemantic) && !hinge_kink_free(&o, &y, HINGE_MARGIN) {
            continue;
        }
        let (_, analytic) = f(&o)?;
        let numeric = finite_diff_grad(|p| f(p).map(|(v, _)| v).unwrap_or(f64::NAN), &o, STEP)?;
        return Ok(max_relative_error(&analytic, &numeric));
    }
    Err(crate::Error::Numeric(
        "loss gradient check found no kink-free sample".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_pass_on_a_few_cases() {
        for check in run_gradchecks(5, 8).unwrap() {
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(run_gradchecks(1, 2).unwrap(), run_gradchecks(1, 2).unwrap());
    }
}
