use alloc::format;
use alloc::vec::Vec;

use super::dataset::Dataset;
use crate::error::{config_err, Error, Result};
use crate::numerics::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Instance-first: partition instances at random, then strip unseen
    /// labels from the train and validation targets.
    Ifs,
    /// Label-first: every instance carrying an unseen label is a test instance.
    Lfs,
}

/// Train/validation/test partition plus the known/unseen label partition.
///
/// Instance and label id lists are kept in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub known: Vec<usize>,
    pub unseen: Vec<usize>,
    pub seed: u64,
    /// Train/val/test fractions (IFS only).
    pub fractions: Option<[f64; 3]>,
    /// Requested validation size (LFS only).
    pub val_count: Option<usize>,
}

impl SplitSpec {
    pub fn is_unseen(&self, label: usize) -> bool {
        self.unseen.binary_search(&label).is_ok()
    }

    /// Labels of instance `id` restricted to the known labels.
    pub fn known_targets(&self, ds: &Dataset, id: usize) -> Vec<usize> {
        ds.instances[id]
            .labels
            .iter()
            .copied()
            .filter(|&l| !self.is_unseen(l))
            .collect()
    }

    /// Checks every structural invariant of the split against `ds`.
    pub fn check(&self, ds: &Dataset) -> Result<()> {
        let n = ds.len();
        let c = ds.num_labels();
        let mut owner = alloc::vec![0u8; n];
        for (role, ids) in [(1u8, &self.train), (2, &self.val), (3, &self.test)] {
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Data("split id lists must be strictly ascending".into()));
            }
            for &i in ids {
                if i >= n {
                    return Err(Error::Data(format!("split references instance {i} of {n}")));
                }
                if owner[i] != 0 {
                    return Err(Error::Data(format!("instance {i} appears in two split roles")));
                }
                owner[i] = role;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == 0) {
            return Err(Error::Data(format!("instance {i} is in no split role")));
        }
        let mut label_owner = alloc::vec![0u8; c];
        for (role, ids) in [(1u8, &self.known), (2, &self.unseen)] {
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Data("label id lists must be strictly ascending".into()));
            }
            for &l in ids {
                if l >= c || label_owner[l] != 0 {
                    return Err(Error::Data(format!("label {l} is out of range or listed twice")));
                }
                label_owner[l] = role;
            }
        }
        if label_owner.contains(&0) {
            return Err(Error::Data("known and unseen labels must cover the vocabulary".into()));
        }
        if self.mode == SplitMode::Lfs {
            for &i in self.train.iter().chain(&self.val) {
                if ds.instances[i].labels.iter().any(|&l| self.is_unseen(l)) {
                    return Err(Error::Data(format!(
                        "instance {i} carries an unseen label outside test"
                    )));
                }
            }
            for &i in &self.test {
                if !ds.instances[i].labels.iter().any(|&l| self.is_unseen(l)) {
                    return Err(Error::Data(format!("test instance {i} carries no unseen label")));
                }
            }
        }
        Ok(())
    }
}

fn label_partition(num_labels: usize, unseen: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut unseen = unseen.to_vec();
    unseen.sort_unstable();
    unseen.dedup();
    if unseen.is_empty() {
        return Err(config_err!("at least one unseen label is required"));
    }
    if unseen.len() >= num_labels {
        return Err(config_err!("at least one label must stay known"));
    }
    if let Some(&bad) = unseen.iter().find(|&&l| l >= num_labels) {
        return Err(config_err!("unseen label {bad} outside vocabulary of {num_labels}"));
    }
    let known = (0..num_labels).filter(|l| unseen.binary_search(l).is_err()).collect();
    Ok((known, unseen))
}

/// Random instance-first split by `[train, val, test]` fractions.
///
/// Train and validation sizes are `round(fraction * n)`; the test set takes
/// the remainder. Instances whose labels are all unseen stay in train or
/// validation with an empty known target set.
pub fn make_ifs_split(ds: &Dataset, unseen: &[usize], fractions: [f64; 3], seed: u64) -> Result<SplitSpec> {
    let (known, unseen) = label_partition(ds.num_labels(), unseen)?;
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || libm::fabs(fractions.iter().sum::<f64>() - 1.0) > 1e-9 {
        return Err(config_err!(
            "split fractions {fractions:?} must be in [0, 1] and sum to 1"
        ));
    }
    let n = ds.len();
    let n_train = libm::round(fractions[0] * n as f64) as usize;
    let n_val = (libm::round(fractions[1] * n as f64) as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);

    let mut order: Vec<usize> = (0..n).collect();
    RngState::new(seed).substream(0).shuffle(&mut order);
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        mode: SplitMode::Ifs,
        train,
        val,
        test,
        known,
        unseen,
        seed,
        fractions: Some(fractions),
        val_count: None,
    })
}

/// Label-first split: instances with any unseen label form the test set,
/// `val_count` of the rest (drawn uniformly) form the validation set.
pub fn make_lfs_split(ds: &Dataset, unseen: &[usize], val_count: usize, seed: u64) -> Result<SplitSpec> {
    let (known, unseen) = label_partition(ds.num_labels(), unseen)?;
    let (test, mut rest): (Vec<usize>, Vec<usize>) =
        (0..ds.len()).partition(|&i| ds.instances[i].labels.iter().any(|l| unseen.binary_search(l).is_ok()));
    if rest.len() <= val_count {
        return Err(Error::SplitInfeasible(format!(
            "{} instances free of unseen labels cannot supply {val_count} validation instances and a training set",
            rest.len()
        )));
    }
    RngState::new(seed).substream(0).shuffle(&mut rest);
    let mut val = rest[..val_count].to_vec();
    let mut train = rest[val_count..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok(SplitSpec {
        mode: SplitMode::Lfs,
        train,
        val,
        test,
        known,
        unseen,
        seed,
        fractions: None,
        val_count: Some(val_count),
    })
}

/// `count` distinct label ids drawn uniformly from `0..num_labels`, ascending.
pub fn sample_unseen(num_labels: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 || count >= num_labels {
        return Err(config_err!("unseen label count {count} must lie in [1, {num_labels})"));
    }
    let mut ids: Vec<usize> = (0..num_labels).collect();
    RngState::new(seed).substream(1).shuffle(&mut ids);
    ids.truncate(count);
    ids.sort_unstable();
    Ok(ids)
}
