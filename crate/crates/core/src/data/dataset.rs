use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain_err, Error, Result};
use crate::numerics::Matrix;

/// One weakly-annotated sequence: `T x d_x` segment features and its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub segments: Matrix,
    /// Sorted, deduplicated label ids.
    pub labels: Vec<usize>,
}

impl Instance {
    pub fn new(segments: Matrix, mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        Self { segments, labels }
    }

    pub fn has_label(&self, id: usize) -> bool {
        self.labels.binary_search(&id).is_ok()
    }

    /// Mean over all `T` segment rows, padding included.
    pub fn mean_feature(&self) -> Vec<f64> {
        let t = self.segments.rows();
        let mut acc = alloc::vec![0.0; self.segments.cols()];
        for r in 0..t {
            for (a, v) in acc.iter_mut().zip(self.segments.row(r)) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= t as f64;
        }
        acc
    }
}

/// Instances, label vocabulary and the per-label semantic vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    /// Label names indexed by id.
    pub vocabulary: Vec<String>,
    /// `|C| x d_s`
    pub semantics: Matrix,
    /// Segments per instance after padding.
    pub segments: usize,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(
        instances: Vec<Instance>,
        vocabulary: Vec<String>,
        semantics: Matrix,
        segments: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        let ds = Self {
            instances,
            vocabulary,
            semantics,
            segments,
            feature_dim,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_labels(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn semantic_dim(&self) -> usize {
        self.semantics.cols()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.vocabulary.len();
        if c == 0 {
            return Err(Error::Data("empty label vocabulary".into()));
        }
        if self.semantics.rows() != c {
            return Err(Error::Data(format!(
                "semantic table has {} rows for {c} labels",
                self.semantics.rows()
            )));
        }
        if self.semantics.cols() == 0 || self.segments == 0 || self.feature_dim == 0 {
            return Err(Error::Data("dataset dims must be >= 1".into()));
        }
        self.semantics.ensure_finite("semantic table")?;
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.labels.is_empty() {
                return Err(Error::Data(format!("instance {i} has no labels")));
            }
            if let Some(&bad) = inst.labels.iter().find(|&&l| l >= c) {
                return Err(Error::Data(format!("instance {i} carries label {bad} >= {c}")));
            }
            if inst.labels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Data(format!("instance {i} labels not sorted and unique")));
            }
            if inst.segments.shape() != (self.segments, self.feature_dim) {
                return Err(Error::Data(format!(
                    "instance {i} has {}x{} segments, expected {}x{}",
                    inst.segments.rows(),
                    inst.segments.cols(),
                    self.segments,
                    self.feature_dim
                )));
            }
            inst.segments.ensure_finite("instance segments")?;
        }
        Ok(())
    }

    /// Copy with a different semantic table (same label count).
    pub fn with_semantics(&self, semantics: Matrix) -> Result<Dataset> {
        let mut ds = self.clone();
        ds.semantics = semantics;
        ds.validate()?;
        Ok(ds)
    }
}

/// Appends all-zero rows so `segments` has exactly `total` rows.
pub fn pad_segments(segments: &Matrix, total: usize) -> Result<Matrix> {
    let t = segments.rows();
    if t == 0 {
        return Err(domain_err!("cannot pad an empty segment sequence"));
    }
    if t > total {
        return Err(domain_err!("{t} segments exceed the padded length {total}"));
    }
    let mut out = Matrix::zeros(total, segments.cols());
    out.as_mut_slice()[..segments.len()].copy_from_slice(segments.as_slice());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_behaviour() {
        let s = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let p = pad_segments(&s, 3).unwrap();
        assert_eq!(p, Matrix::from_rows(&[[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]]).unwrap());
        let full = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert_eq!(pad_segments(&full, 2).unwrap(), full);
        assert!(pad_segments(&Matrix::zeros(0, 2), 3).is_err());
        assert!(pad_segments(&full, 1).is_err());
    }

    #[test]
    fn validation_catches_bad_instances() {
        let sem = Matrix::zeros(2, 3);
        let vocab = alloc::vec!["a".into(), "b".into()];
        let good = Instance::new(Matrix::zeros(2, 1), alloc::vec![1, 0, 1]);
        assert_eq!(good.labels, alloc::vec![0, 1]);
        assert!(Dataset::new(alloc::vec![good.clone()], vocab.clone(), sem.clone(), 2, 1).is_ok());
        let bad_label = Instance::new(Matrix::zeros(2, 1), alloc::vec![5]);
        assert!(Dataset::new(alloc::vec![bad_label], vocab.clone(), sem.clone(), 2, 1).is_err());
        let empty = Instance::new(Matrix::zeros(2, 1), alloc::vec![]);
        assert!(Dataset::new(alloc::vec![empty], vocab.clone(), sem.clone(), 2, 1).is_err());
        let short = Instance::new(Matrix::zeros(1, 1), alloc::vec![0]);
        assert!(Dataset::new(alloc::vec![short], vocab, sem, 2, 1).is_err());
    }
}
