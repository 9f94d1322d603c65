use alloc::format;
use alloc::vec::Vec;

use super::dataset::{pad_segments, Dataset, Instance};
use crate::error::{config_err, Result};
use crate::numerics::{l2_norm, Matrix, RngState};

/// Parameters of the synthetic multi-action generator.
///
/// Labels are grouped into semantic clusters (label `c` belongs to cluster
/// `c % num_clusters`). Each instance is a sequence of contiguous episodes,
/// one or more per label it carries, and every segment of an episode is
/// `G s_label + noise` for one hidden linear map `G` shared by all labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_labels: usize,
    pub num_clusters: usize,
    pub num_instances: usize,
    /// Padded sequence length `T`.
    pub segments: usize,
    /// Shortest unpadded sequence; lengths are uniform in `[min_segments, segments]`.
    pub min_segments: usize,
    pub feature_dim: usize,
    pub semantic_dim: usize,
    /// Inclusive range; the lower bound must be at least 2.
    pub labels_per_instance: (usize, usize),
    /// Inclusive range of episode counts (raised to the label count when lower).
    pub episodes_per_instance: (usize, usize),
    /// Standard deviation of the per-segment Gaussian feature noise.
    pub feature_noise: f64,
    /// Standard deviation of the per-component jitter around cluster centers.
    pub semantic_jitter: f64,
    /// Chance an instance draws its labels from a second cluster too.
    pub second_cluster_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_labels: 40,
            num_clusters: 5,
            num_instances: 1100,
            segments: 12,
            min_segments: 6,
            feature_dim: 32,
            semantic_dim: 16,
            labels_per_instance: (2, 3),
            episodes_per_instance: (2, 4),
            feature_noise: 1.0,
            semantic_jitter: 0.2,
            second_cluster_prob: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.labels_per_instance;
        let (elo, ehi) = self.episodes_per_instance;
        if self.num_labels == 0 || self.num_clusters == 0 || self.num_clusters > self.num_labels {
            return Err(config_err!(
                "need 1 <= num_clusters ({}) <= num_labels ({})",
                self.num_clusters,
                self.num_labels
            ));
        }
        if self.segments == 0 || self.feature_dim == 0 || self.semantic_dim == 0 {
            return Err(config_err!("segments, feature_dim and semantic_dim must be >= 1"));
        }
        if lo < 2 || hi < lo {
            return Err(config_err!(
                "labels_per_instance must satisfy 2 <= min <= max, got ({lo}, {hi})"
            ));
        }
        let smallest_cluster = self.num_labels / self.num_clusters;
        let reachable = if self.num_clusters >= 2 {
            2 * smallest_cluster
        } else {
            smallest_cluster
        };
        if hi > reachable {
            return Err(config_err!(
                "up to {hi} labels per instance cannot be drawn from at most two clusters of {smallest_cluster} labels"
            ));
        }
        if elo > ehi || ehi < hi {
            return Err(config_err!(
                "episodes_per_instance ({elo}, {ehi}) must be ordered and allow {hi} episodes"
            ));
        }
        if self.min_segments < ehi || self.min_segments > self.segments {
            return Err(config_err!(
                "min_segments ({}) must lie in [{ehi}, {}] so every episode gets a segment",
                self.min_segments,
                self.segments
            ));
        }
        if !(self.feature_noise >= 0.0) || !(self.semantic_jitter >= 0.0) {
            return Err(config_err!("noise levels must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.second_cluster_prob) {
            return Err(config_err!("second_cluster_prob must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn cluster_of(&self, label: usize) -> usize {
        label % self.num_clusters
    }

    pub fn cluster_members(&self, cluster: usize) -> Vec<usize> {
        (0..self.num_labels)
            .filter(|&c| self.cluster_of(c) == cluster)
            .collect()
    }
}

/// Hidden structure behind a generated dataset, for tests and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    /// `d_x x d_s` map from semantic vectors to segment features.
    pub feature_map: Matrix,
    /// Unpadded length of every instance.
    pub lengths: Vec<usize>,
    /// Label of every unpadded segment of every instance.
    pub segment_labels: Vec<Vec<usize>>,
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    generate_synthetic_with_truth(cfg).map(|(ds, _)| ds)
}

pub fn generate_synthetic_with_truth(cfg: &SyntheticConfig) -> Result<(Dataset, SyntheticTruth)> {
    cfg.validate()?;
    let root = RngState::new(cfg.seed);
    let semantics = semantic_table(cfg, &mut root.substream(0));

    let mut map_rng = root.substream(1);
    let mut feature_map = Matrix::zeros(cfg.feature_dim, cfg.semantic_dim);
    for v in feature_map.as_mut_slice() {
        *v = map_rng.normal();
    }
    let prototypes: Vec<Vec<f64>> = (0..cfg.num_labels)
        .map(|c| {
            let mut out = alloc::vec![0.0; cfg.feature_dim];
            feature_map.matvec_acc(semantics.row(c), &mut out);
            out
        })
        .collect();

    let mut rng = root.substream(2);
    let mut instances = Vec::with_capacity(cfg.num_instances);
    let mut lengths = Vec::with_capacity(cfg.num_instances);
    let mut segment_labels = Vec::with_capacity(cfg.num_instances);
    for _ in 0..cfg.num_instances {
        let labels = sample_label_set(cfg, &mut rng);
        let length = rng.between(cfg.min_segments, cfg.segments);
        let episodes = episode_plan(cfg, &labels, length, &mut rng);
        let mut raw = Matrix::zeros(length, cfg.feature_dim);
        for (t, &label) in episodes.iter().enumerate() {
            for (x, p) in raw.row_mut(t).iter_mut().zip(&prototypes[label]) {
                *x = *p + cfg.feature_noise * rng.normal();
            }
        }
        instances.push(Instance::new(pad_segments(&raw, cfg.segments)?, labels));
        lengths.push(length);
        segment_labels.push(episodes);
    }

    let vocabulary = (0..cfg.num_labels)
        .map(|c| format!("action_{}_{}", cfg.cluster_of(c), c / cfg.num_clusters))
        .collect();
    let ds = Dataset::new(instances, vocabulary, semantics, cfg.segments, cfg.feature_dim)?;
    Ok((
        ds,
        SyntheticTruth {
            feature_map,
            lengths,
            segment_labels,
        },
    ))
}

/// Unit cluster centers plus per-label Gaussian jitter.
fn semantic_table(cfg: &SyntheticConfig, rng: &mut RngState) -> Matrix {
    let centers: Vec<Vec<f64>> = (0..cfg.num_clusters)
        .map(|_| {
            let v: Vec<f64> = (0..cfg.semantic_dim).map(|_| rng.normal()).collect();
            let n = l2_norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let mut table = Matrix::zeros(cfg.num_labels, cfg.semantic_dim);
    for c in 0..cfg.num_labels {
        let center = &centers[cfg.cluster_of(c)];
        for (v, m) in table.row_mut(c).iter_mut().zip(center) {
            *v = m + cfg.semantic_jitter * rng.normal();
        }
    }
    table
}

fn sample_label_set(cfg: &SyntheticConfig, rng: &mut RngState) -> Vec<usize> {
    let count = rng.between(cfg.labels_per_instance.0, cfg.labels_per_instance.1);
    let first = rng.below(cfg.num_clusters);
    let mut pool = cfg.cluster_members(first);
    let want_second = cfg.num_clusters >= 2 && rng.bernoulli(cfg.second_cluster_prob);
    if want_second || pool.len() < count {
        let mut second = rng.below(cfg.num_clusters - 1);
        if second >= first {
            second += 1;
        }
        pool.extend(cfg.cluster_members(second));
    }
    rng.shuffle(&mut pool);
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

/// Label of each of the `length` unpadded segments.
fn episode_plan(cfg: &SyntheticConfig, labels: &[usize], length: usize, rng: &mut RngState) -> Vec<usize> {
    let lo = cfg.episodes_per_instance.0.max(labels.len());
    let count = rng.between(lo, cfg.episodes_per_instance.1.max(lo));
    let mut order: Vec<usize> = labels.to_vec();
    while order.len() < count {
        order.push(labels[rng.below(labels.len())]);
    }
    rng.shuffle(&mut order);

    let mut cuts: Vec<usize> = (1..length).collect();
    rng.shuffle(&mut cuts);
    cuts.truncate(count - 1);
    cuts.sort_unstable();
    cuts.push(length);

    let mut out = Vec::with_capacity(length);
    let mut start = 0;
    for (label, end) in order.into_iter().zip(cuts) {
        out.extend(core::iter::repeat_n(label, end - start));
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            num_labels: 12,
            num_clusters: 3,
            num_instances: 50,
            segments: 8,
            min_segments: 5,
            feature_dim: 6,
            semantic_dim: 4,
            labels_per_instance: (2, 3),
            episodes_per_instance: (2, 4),
            feature_noise: 0.5,
            semantic_jitter: 0.2,
            second_cluster_prob: 0.3,
            seed: 3,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let mut other = small();
        other.seed = 4;
        assert_ne!(a, generate_synthetic(&other).unwrap());
    }

    #[test]
    fn noiseless_episodes_are_exact_prototypes() {
        let mut cfg = small();
        cfg.feature_noise = 0.0;
        cfg.num_labels = 3;
        cfg.num_clusters = 3;
        cfg.labels_per_instance = (2, 2);
        cfg.episodes_per_instance = (2, 2);
        let (ds, truth) = generate_synthetic_with_truth(&cfg).unwrap();
        for (inst, (len, seg_labels)) in ds.instances.iter().zip(truth.lengths.iter().zip(&truth.segment_labels)) {
            for t in 0..*len {
                let mut expect = alloc::vec![0.0; cfg.feature_dim];
                truth
                    .feature_map
                    .matvec_acc(ds.semantics.row(seg_labels[t]), &mut expect);
                assert_eq!(inst.segments.row(t), &expect[..]);
            }
            for t in *len..cfg.segments {
                assert!(inst.segments.row(t).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn label_counts_and_episodes() {
        let cfg = small();
        let (ds, truth) = generate_synthetic_with_truth(&cfg).unwrap();
        for (inst, seg) in ds.instances.iter().zip(&truth.segment_labels) {
            assert!((2..=3).contains(&inst.labels.len()));
            let mut seen = seg.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen, inst.labels);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small();
        c.labels_per_instance = (1, 2);
        assert!(c.validate().is_err());
        let mut c = small();
        c.min_segments = 1;
        assert!(c.validate().is_err());
        let mut c = small();
        c.labels_per_instance = (2, 9);
        assert!(c.validate().is_err());
    }
}
