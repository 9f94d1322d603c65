//! Relatedness scores: segment-level dot products, temporal pooling, label
//! ranking, test-set min-max normalization and two-model fusion.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{config_err, domain_err, Error, Result};
use crate::numerics::{dot, Matrix};

/// `T x |C|` matrix of per-segment relatedness scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScores(pub Matrix);

impl SegmentScores {
    pub fn segments(&self) -> usize {
        self.0.rows()
    }

    pub fn labels(&self) -> usize {
        self.0.cols()
    }
}

/// Dot products between every segment embedding (rows of `ev`, `T x d_e`)
/// and every label embedding (columns of `es`, `d_e x |C|`).
pub fn segment_scores(ev: &Matrix, es: &Matrix) -> Result<SegmentScores> {
    if ev.cols() != es.rows() {
        return Err(Error::shape(
            "segment_scores",
            format!("semantic embedding rows == {}", ev.cols()),
            es.rows(),
        ));
    }
    let s = ev.matmul(es)?;
    s.ensure_finite("segment scores")?;
    Ok(SegmentScores(s))
}

/// Temporal pooling of per-segment scores into one score per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Average,
    Max,
    /// Local average, global maximum over `groups` half-overlapping windows.
    LocalAverageGlobalMax {
        groups: usize,
    },
}

impl Pooling {
    /// Checks that the pooling is defined for sequences of length `segments`.
    pub fn validate(&self, segments: usize) -> Result<()> {
        if segments == 0 {
            return Err(domain_err!("pooling needs at least one segment"));
        }
        if let Pooling::LocalAverageGlobalMax { groups } = *self {
            lagm_stride(segments, groups)?;
        }
        Ok(())
    }

    /// Pools one label's column of segment scores.
    pub fn pool_column(&self, column: &[f64]) -> Result<f64> {
        self.validate(column.len())?;
        Ok(match *self {
            Pooling::Average => mean(column),
            Pooling::Max => column.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Pooling::LocalAverageGlobalMax { groups } => {
                let stride = lagm_stride(column.len(), groups)?;
                lagm_windows(column.len(), groups, stride)
                    .map(|(a, b)| mean(&column[a..b]))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        })
    }

    /// Gradient of [`Pooling::pool_column`] w.r.t. the column, scaled by
    /// `upstream`. Max-type poolings route to the first maximizer.
    pub fn pool_column_backward(&self, column: &[f64], upstream: f64) -> Result<Vec<f64>> {
        self.validate(column.len())?;
        let n = column.len();
        let mut g = vec![0.0; n];
        match *self {
            Pooling::Average => g.fill(upstream / n as f64),
            Pooling::Max => g[argmax(column.iter().copied())] = upstream,
            Pooling::LocalAverageGlobalMax { groups } => {
                let stride = lagm_stride(n, groups)?;
                let windows: Vec<(usize, usize)> = lagm_windows(n, groups, stride).collect();
                let best = argmax(windows.iter().map(|&(a, b)| mean(&column[a..b])));
                let (a, b) = windows[best];
                let share = upstream / (b - a) as f64;
                g[a..b].fill(share);
            }
        }
        Ok(g)
    }

    /// Pools every column of `s`.
    pub fn pool(&self, s: &SegmentScores) -> Result<Vec<f64>> {
        self.validate(s.segments())?;
        (0..s.labels()).map(|c| self.pool_column(&s.0.col_to_vec(c))).collect()
    }

    /// Gradient w.r.t. the segment scores for `upstream` w.r.t. the pooled
    /// scores (one value per label).
    pub fn pool_backward(&self, s: &SegmentScores, upstream: &[f64]) -> Result<Matrix> {
        if upstream.len() != s.labels() {
            return Err(Error::shape("pool_backward", s.labels(), upstream.len()));
        }
        let mut out = Matrix::zeros(s.segments(), s.labels());
        for (c, &u) in upstream.iter().enumerate() {
            let g = self.pool_column_backward(&s.0.col_to_vec(c), u)?;
            for (t, v) in g.into_iter().enumerate() {
                out[(t, c)] = v;
            }
        }
        Ok(out)
    }
}

fn mean(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in v {
        acc += x;
    }
    acc / v.len() as f64
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Half-window stride `N_g / 2 = T / t_s`. Requires `t_s | T` so every window
/// boundary is a whole segment.
fn lagm_stride(segments: usize, groups: usize) -> Result<usize> {
    if groups == 0 {
        return Err(config_err!("LAGM pooling needs at least one group"));
    }
    if groups > segments || !segments.is_multiple_of(groups) {
        return Err(config_err!(
            "LAGM pooling: {segments} segments cannot be split into {groups} half-overlapping groups"
        ));
    }
    Ok(segments / groups)
}

/// Windows `[(g-1) N_g/2, min((g+1) N_g/2, T))` for `g = 1..=t_s`, 0-based
/// half-open. The last window is clipped to the sequence.
fn lagm_windows(segments: usize, groups: usize, stride: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..groups).map(move |g| (g * stride, ((g + 2) * stride).min(segments)))
}

pub fn pool_average(s: &SegmentScores) -> Result<Vec<f64>> {
    Pooling::Average.pool(s)
}

pub fn pool_max(s: &SegmentScores) -> Result<Vec<f64>> {
    Pooling::Max.pool(s)
}

pub fn pool_lagm(s: &SegmentScores, groups: usize) -> Result<Vec<f64>> {
    Pooling::LocalAverageGlobalMax { groups }.pool(s)
}

/// Mean over segments of `<e_t, e_c>`; bitwise equal to the corresponding
/// entry of `pool_average(segment_scores(ev, es))`.
pub fn instance_label_score(ev: &Matrix, e_c: &[f64]) -> Result<f64> {
    if ev.cols() != e_c.len() {
        return Err(Error::shape("instance_label_score", ev.cols(), e_c.len()));
    }
    if ev.rows() == 0 {
        return Err(domain_err!("instance_label_score: no segments"));
    }
    let mut acc = 0.0;
    for t in 0..ev.rows() {
        acc += dot(ev.row(t), e_c);
    }
    Ok(acc / ev.rows() as f64)
}

/// Labels sorted by descending score, ties by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedLabels {
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
}

pub fn rank_labels(scores: &[f64], ids: &[usize]) -> Result<RankedLabels> {
    if scores.len() != ids.len() {
        return Err(Error::shape("rank_labels", ids.len(), scores.len()));
    }
    let order = rank_order(scores, ids);
    Ok(RankedLabels {
        ids: order.iter().map(|&i| ids[i]).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
    })
}

/// Positions of `scores` in ranked order (descending score, then ascending key).
pub fn rank_order(scores: &[f64], keys: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(keys[a].cmp(&keys[b]))
    });
    order
}

/// Instance-by-label score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub instance_ids: Vec<usize>,
    pub label_ids: Vec<usize>,
    /// `instances x labels`
    pub scores: Matrix,
}

impl ScoreMatrix {
    pub fn new(instance_ids: Vec<usize>, label_ids: Vec<usize>, scores: Matrix) -> Result<Self> {
        if scores.shape() != (instance_ids.len(), label_ids.len()) {
            return Err(Error::shape(
                "ScoreMatrix::new",
                format!("{}x{}", instance_ids.len(), label_ids.len()),
                format!("{}x{}", scores.rows(), scores.cols()),
            ));
        }
        Ok(Self {
            instance_ids,
            label_ids,
            scores,
        })
    }

    /// Restricts to the given label ids (in that order).
    pub fn select_labels(&self, ids: &[usize]) -> Result<ScoreMatrix> {
        let cols: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.label_ids
                    .iter()
                    .position(|l| l == id)
                    .ok_or_else(|| domain_err!("label {id} not present in score matrix"))
            })
            .collect::<Result<_>>()?;
        let mut m = Matrix::zeros(self.instance_ids.len(), ids.len());
        for i in 0..self.instance_ids.len() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self.scores[(i, c)];
            }
        }
        ScoreMatrix::new(self.instance_ids.clone(), ids.to_vec(), m)
    }
}

/// Extrema of a score collection, gathered in a first pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl ScoreRange {
    pub fn gather<'a>(scores: impl IntoIterator<Item = &'a f64>) -> Result<Self> {
        let mut it = scores.into_iter();
        let first = *it
            .next()
            .ok_or_else(|| domain_err!("cannot normalize an empty score set"))?;
        let mut r = ScoreRange { min: first, max: first };
        for &v in it {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
        if !r.min.is_finite() || !r.max.is_finite() {
            return Err(Error::Numeric("score range".into()));
        }
        Ok(r)
    }

    /// `(s - min) / (max - min)`, or `0.5` everywhere when the range is empty.
    pub fn apply(&self, s: f64) -> f64 {
        if self.max == self.min {
            0.5
        } else {
            (s - self.min) / (self.max - self.min)
        }
    }
}

/// Min-max normalization with extrema over the whole matrix.
pub fn normalize_scores(scores: &Matrix) -> Result<Matrix> {
    let range = ScoreRange::gather(scores.as_slice())?;
    let mut out = scores.clone();
    for v in out.as_mut_slice() {
        *v = range.apply(*v);
    }
    Ok(out)
}

/// Elementwise mean of two normalized score tables.
pub fn fuse_scores(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape("fuse_scores", b)?;
    let mut out = a.clone();
    for (o, v) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *o = (*o + v) / 2.0;
    }
    Ok(out)
}

/// Normalizes both score matrices over their whole extent and averages them.
/// Instance and label ids must match.
pub fn fuse_score_matrices(a: &ScoreMatrix, b: &ScoreMatrix) -> Result<ScoreMatrix> {
    if a.instance_ids != b.instance_ids || a.label_ids != b.label_ids {
        return Err(Error::Data(
            "fused score tables index different instances or labels".into(),
        ));
    }
    let fused = fuse_scores(&normalize_scores(&a.scores)?, &normalize_scores(&b.scores)?)?;
    ScoreMatrix::new(a.instance_ids.clone(), a.label_ids.clone(), fused)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> SegmentScores {
        SegmentScores(Matrix::column(v))
    }

    #[test]
    fn orthogonal_and_self_products() {
        let ev = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let es = Matrix::from_rows(&[[0.0, 0.0], [2.0, -1.0]]).unwrap();
        assert_eq!(segment_scores(&ev, &es).unwrap().0, Matrix::zeros(1, 2));

        let e = [0.5, -2.0, 3.0];
        let ev = Matrix::from_rows(&[e]).unwrap();
        let es = Matrix::column(&e);
        assert_eq!(segment_scores(&ev, &es).unwrap().0[(0, 0)], dot(&e, &e));
    }

    #[test]
    fn two_by_two_by_hand() {
        let ev = Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5]]).unwrap();
        let es = Matrix::from_rows(&[[3.0, 0.0], [1.0, -2.0]]).unwrap();
        let s = segment_scores(&ev, &es).unwrap().0;
        assert_eq!(s, Matrix::from_rows(&[[5.0, -4.0], [-2.5, -1.0]]).unwrap());
        assert!(segment_scores(&ev, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn pooling_by_hand() {
        let s = col(&[1.0, 3.0, 2.0]);
        assert_eq!(pool_average(&s).unwrap(), vec![2.0]);
        assert_eq!(pool_max(&s).unwrap(), vec![3.0]);
        let rows = SegmentScores(Matrix::from_rows(&[[1.0, -2.0], [1.0, -2.0]]).unwrap());
        assert_eq!(pool_average(&rows).unwrap(), vec![1.0, -2.0]);
        let single = SegmentScores(Matrix::from_rows(&[[0.7, -0.1]]).unwrap());
        assert_eq!(pool_max(&single).unwrap(), pool_average(&single).unwrap());
    }

    #[test]
    fn lagm_clips_last_group() {
        // T = 4, t_s = 2: windows 1..4 and 3..4.
        let s = col(&[0.0, 0.0, 10.0, 10.0]);
        assert_eq!(pool_lagm(&s, 2).unwrap(), vec![10.0]);
        let s = col(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(pool_lagm(&s, 1).unwrap(), pool_average(&s).unwrap());
        assert!(matches!(pool_lagm(&s, 4), Err(Error::Config(_))));
        assert!(matches!(pool_lagm(&s, 0), Err(Error::Config(_))));
        assert_eq!(pool_lagm(&col(&[2.5; 6]), 3).unwrap(), vec![2.5]);
    }

    #[test]
    fn ranking_and_ties() {
        let r = rank_labels(&[0.2, 0.9, 0.5], &[10, 11, 12]).unwrap();
        assert_eq!(r.ids, vec![11, 12, 10]);
        assert_eq!(r.scores, vec![0.9, 0.5, 0.2]);
        let r = rank_labels(&[1.0; 4], &[3, 1, 2, 0]).unwrap();
        assert_eq!(r.ids, vec![0, 1, 2, 3]);
        let r = rank_labels(&[3.0, 2.0, 1.0], &[0, 1, 2]).unwrap();
        assert_eq!(r.ids, vec![0, 1, 2]);
    }

    #[test]
    fn normalization_by_hand() {
        let m = Matrix::from_rows(&[[2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(normalize_scores(&m).unwrap().as_slice(), &[0.0, 0.5, 1.0]);
        let flat = Matrix::filled(2, 2, 3.0);
        assert_eq!(normalize_scores(&flat).unwrap(), Matrix::filled(2, 2, 0.5));
        assert!(matches!(normalize_scores(&Matrix::zeros(0, 3)), Err(Error::Domain(_))));
    }

    #[test]
    fn fusion_by_hand() {
        let a = Matrix::column(&[0.2]);
        let b = Matrix::column(&[0.6]);
        assert!((fuse_scores(&a, &b).unwrap()[(0, 0)] - 0.4).abs() < 1e-15);
        assert_eq!(fuse_scores(&a, &a).unwrap(), a);
    }

    #[test]
    fn instance_score_matches_average_pooling_exactly() {
        let mut rng = RngState::new(5);
        let ev = Matrix::new(7, 4, (0..28).map(|_| rng.normal()).collect()).unwrap();
        let es = Matrix::new(4, 3, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let pooled = pool_average(&segment_scores(&ev, &es).unwrap()).unwrap();
        for c in 0..3 {
            let direct = instance_label_score(&ev, &es.col_to_vec(c)).unwrap();
            assert_eq!(direct.to_bits(), pooled[c].to_bits());
        }
        assert_eq!(
            instance_label_score(&Matrix::zeros(3, 4), &es.col_to_vec(0)).unwrap(),
            0.0
        );
        // Hand case: rows (1,0), (0,1) against e = (2, 4) -> (2 + 4) / 2.
        let ev = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(instance_label_score(&ev, &[2.0, 4.0]).unwrap(), 3.0);
    }

    #[test]
    fn pool_backward_matches_finite_differences() {
        let mut rng = RngState::new(8);
        for pooling in [
            Pooling::Average,
            Pooling::Max,
            Pooling::LocalAverageGlobalMax { groups: 3 },
        ] {
            let v: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
            let g = pooling.pool_column_backward(&v, 1.0).unwrap();
            let fd = crate::numerics::finite_diff_grad(|x| pooling.pool_column(x).unwrap(), &v, 1e-6).unwrap();
            assert!(crate::numerics::max_relative_error(&g, &fd) < 1e-6);
        }
    }

    fn score_matrix() -> impl Strategy<Value = SegmentScores> {
        (1usize..5, 1usize..4).prop_flat_map(|(groups, labels)| {
            (1usize..4).prop_flat_map(move |mult| {
                let t = groups * mult;
                proptest::collection::vec(-10.0f64..10.0, t * labels)
                    .prop_map(move |d| SegmentScores(Matrix::new(t, labels, d).unwrap()))
            })
        })
    }

    proptest! {
        #[test]
        fn pooling_order(s in score_matrix(), pick in 0usize..4) {
            let t = s.segments();
            let divisors: Vec<usize> = (1..=t).filter(|g| t % g == 0).collect();
            let groups = divisors[pick % divisors.len()];
            let avg = pool_average(&s).unwrap();
            let lagm = pool_lagm(&s, groups).unwrap();
            let max = pool_max(&s).unwrap();
            for c in 0..s.labels() {
                prop_assert!(max[c] >= lagm[c] - 1e-12);
                prop_assert!(lagm[c] >= avg[c] - 1e-12);
            }
            let one = pool_lagm(&s, 1).unwrap();
            for (a, b) in one.iter().zip(&avg) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn ranking_invariant_under_monotone_transform(v in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
            let ids: Vec<usize> = (0..v.len()).collect();
            let t: Vec<f64> = v.iter().map(|x| libm::exp(*x) * 3.0 + 1.0).collect();
            prop_assert_eq!(rank_labels(&v, &ids).unwrap().ids, rank_labels(&t, &ids).unwrap().ids);
            let n = normalize_scores(&Matrix::column(&v)).unwrap();
            prop_assert_eq!(rank_labels(&v, &ids).unwrap().ids, rank_labels(n.as_slice(), &ids).unwrap().ids);
        }

        #[test]
        fn fused_scores_stay_in_unit_interval(
            a in proptest::collection::vec(-50.0f64..50.0, 1..12),
            shift in -5.0f64..5.0,
        ) {
            let b: Vec<f64> = a.iter().rev().map(|x| x * 0.3 + shift).collect();
            let na = normalize_scores(&Matrix::column(&a)).unwrap();
            let nb = normalize_scores(&Matrix::column(&b)).unwrap();
            let f = fuse_scores(&na, &nb).unwrap();
            for ((x, y), z) in na.as_slice().iter().zip(nb.as_slice()).zip(f.as_slice()) {
                prop_assert!((0.0..=1.0).contains(z));
                prop_assert!(*z >= x.min(*y) && *z <= x.max(*y));
            }
        }
    }
}
