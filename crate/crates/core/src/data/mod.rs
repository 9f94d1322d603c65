//! Datasets of segment sequences, the synthetic generator and split protocols.

mod dataset;
mod split;
mod synthetic;

pub use dataset::{pad_segments, Dataset, Instance};
pub use split::{make_ifs_split, make_lfs_split, sample_unseen, SplitMode, SplitSpec};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, SyntheticConfig, SyntheticTruth};
