//! Regularized pairwise rank losses over score vectors.
//!
//! Every loss has the shape
//!
//! ```text
//! w * ( sum_{p in +} sum_{q in -} pair(o_q - o_p)  +  sum_j point(-y_j o_j) )
//! w = 1 / (|+| * |-| + n)
//! ```
//!
//! where `+`/`-` are the indices with target `+1`/`-1`. For the RankNet
//! variant both terms are softplus, for the hinge variant both are
//! `max(0, m + .)`. The visual losses rank labels for one instance; the
//! semantic losses rank instances for one label. The formulas coincide, only
//! the meaning of the index set differs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, domain_err, Error, Result};
use crate::numerics::{sigmoid, softplus};

/// Per-entry `+1 / -1` relevance targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetVector(Vec<i8>);

impl TargetVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(domain_err!("target entries must be +1 or -1, found {bad}"));
        }
        Ok(Self(values))
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for &v in values {
            if v == 1.0 {
                out.push(1);
            } else if v == -1.0 {
                out.push(-1);
            } else {
                return Err(domain_err!("target entries must be +1 or -1, found {v}"));
            }
        }
        Ok(Self(out))
    }

    /// `+1` at the given positions, `-1` elsewhere.
    pub fn from_positives(len: usize, positives: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v = vec![-1i8; len];
        for p in positives {
            if p >= len {
                return Err(domain_err!("positive index {p} outside target of length {len}"));
            }
            v[p] = 1;
        }
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i)
    }

    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| v < 0).map(|(i, _)| i)
    }

    /// `1 / (|+| * |-| + n)`.
    pub fn weight(&self) -> f64 {
        let pos = self.positives().count();
        let neg = self.len() - pos;
        1.0 / (pos * neg + self.len()) as f64
    }
}

/// Form of the per-entry term of the semantic RankNet loss: `Softplus` is
/// `log(1 + exp(-y o))` as in the visual loss, `Literal` is `1 + exp(-y o)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizerForm {
    #[default]
    Softplus,
    Literal,
}

/// Which rank loss drives training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankLoss {
    RankNet,
    Hinge { margin: f64 },
}

impl RankLoss {
    pub fn visual(&self, o: &[f64], y: &TargetVector) -> Result<(f64, Vec<f64>)> {
        match *self {
            RankLoss::RankNet => ranknet_visual_loss(o, y),
            RankLoss::Hinge { margin } => hinge_visual_loss(o, y, margin),
        }
    }

    pub fn semantic(&self, o: &[f64], y: &TargetVector, form: RegularizerForm) -> Result<(f64, Vec<f64>)> {
        match *self {
            RankLoss::RankNet => ranknet_semantic_loss_with(o, y, form),
            RankLoss::Hinge { margin } => hinge_semantic_loss(o, y, margin),
        }
    }
}

fn check_inputs(op: &'static str, o: &[f64], y: &TargetVector) -> Result<()> {
    if o.len() != y.len() {
        return Err(Error::shape(op, format!("{} scores", y.len()), o.len()));
    }
    if o.is_empty() {
        return Err(domain_err!("{op}: empty score vector"));
    }
    if o.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{op} scores")));
    }
    Ok(())
}

fn split_indices(y: &TargetVector) -> (Vec<usize>, Vec<usize>) {
    (y.positives().collect(), y.negatives().collect())
}

fn ranknet(op: &'static str, o: &[f64], y: &TargetVector, form: RegularizerForm) -> Result<(f64, Vec<f64>)> {
    check_inputs(op, o, y)?;
    let (pos, neg) = split_indices(y);
    let w = y.weight();
    let mut loss = 0.0;
    let mut grad = vec![0.0; o.len()];
    for &p in &pos {
        for &q in &neg {
            let d = o[q] - o[p];
            loss += softplus(d);
            let s = sigmoid(d);
            grad[q] += s;
            grad[p] -= s;
        }
    }
    for (j, (&oj, &yj)) in o.iter().zip(y.as_slice()).enumerate() {
        let yj = yj as f64;
        let z = -yj * oj;
        match form {
            RegularizerForm::Softplus => {
                loss += softplus(z);
                grad[j] -= yj * sigmoid(z);
            }
            RegularizerForm::Literal => {
                let e = libm::exp(z);
                loss += 1.0 + e;
                grad[j] -= yj * e;
            }
        }
    }
    for g in &mut grad {
        *g *= w;
    }
    let loss = w * loss;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("{op} value")));
    }
    Ok((loss, grad))
}

fn hinge(op: &'static str, o: &[f64], y: &TargetVector, margin: f64) -> Result<(f64, Vec<f64>)> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(config_err!("hinge margin must be positive, got {margin}"));
    }
    check_inputs(op, o, y)?;
    let (pos, neg) = split_indices(y);
    let w = y.weight();
    let mut loss = 0.0;
    let mut grad = vec![0.0; o.len()];
    // Subgradient 0 at the kink: only strictly violated terms contribute.
    for &p in &pos {
        for &q in &neg {
            let v = margin - o[p] + o[q];
            if v > 0.0 {
                loss += v;
                grad[p] -= 1.0;
                grad[q] += 1.0;
            }
        }
    }
    for (j, (&oj, &yj)) in o.iter().zip(y.as_slice()).enumerate() {
        let yj = yj as f64;
        let v = margin - yj * oj;
        if v > 0.0 {
            loss += v;
            grad[j] -= yj;
        }
    }
    for g in &mut grad {
        *g *= w;
    }
    Ok((w * loss, grad))
}

/// RankNet loss ranking an instance's relevant labels above irrelevant ones.
pub fn ranknet_visual_loss(o: &[f64], y: &TargetVector) -> Result<(f64, Vec<f64>)> {
    ranknet("ranknet_visual_loss", o, y, RegularizerForm::Softplus)
}

/// RankNet loss ranking a label's positive instances above the rest.
pub fn ranknet_semantic_loss(o: &[f64], y: &TargetVector) -> Result<(f64, Vec<f64>)> {
    ranknet("ranknet_semantic_loss", o, y, RegularizerForm::Softplus)
}

pub fn ranknet_semantic_loss_with(o: &[f64], y: &TargetVector, form: RegularizerForm) -> Result<(f64, Vec<f64>)> {
    ranknet("ranknet_semantic_loss", o, y, form)
}

pub fn hinge_visual_loss(o: &[f64], y: &TargetVector, margin: f64) -> Result<(f64, Vec<f64>)> {
    hinge("hinge_visual_loss", o, y, margin)
}

pub fn hinge_semantic_loss(o: &[f64], y: &TargetVector, margin: f64) -> Result<(f64, Vec<f64>)> {
    hinge("hinge_semantic_loss", o, y, margin)
}
