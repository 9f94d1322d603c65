use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::SplitSpec;
use crate::error::{domain_err, Error, Result};
use crate::scoring::{rank_order, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// All labels are candidates.
    Gzsl,
    /// Candidates and truths restricted to the known labels.
    KnownOnly,
    /// Candidates and truths restricted to the unseen labels.
    UnseenOnly,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Gzsl, ScenarioKind::KnownOnly, ScenarioKind::UnseenOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Gzsl => "gzsl",
            ScenarioKind::KnownOnly => "known",
            ScenarioKind::UnseenOnly => "unseen",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gzsl" => Ok(ScenarioKind::Gzsl),
            "known" => Ok(ScenarioKind::KnownOnly),
            "unseen" => Ok(ScenarioKind::UnseenOnly),
            other => Err(Error::Config(alloc::format!(
                "unknown scenario `{other}` (expected gzsl, known or unseen)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub known: Vec<usize>,
    pub unseen: Vec<usize>,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, known: Vec<usize>, unseen: Vec<usize>) -> Self {
        Self { kind, known, unseen }
    }

    pub fn from_split(kind: ScenarioKind, split: &SplitSpec) -> Self {
        Self::new(kind, split.known.clone(), split.unseen.clone())
    }

    /// Candidate labels, ascending.
    pub fn labels(&self) -> Vec<usize> {
        match self.kind {
            ScenarioKind::KnownOnly => self.known.clone(),
            ScenarioKind::UnseenOnly => self.unseen.clone(),
            ScenarioKind::Gzsl => {
                let mut all: Vec<usize> = self.known.iter().chain(&self.unseen).copied().collect();
                all.sort_unstable();
                all
            }
        }
    }
}

/// Rankings and truths after restricting to a scenario's candidate labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioView {
    pub scores: ScoreMatrix,
    /// Per instance, truth labels among the candidates (possibly empty).
    pub truths: Vec<Vec<usize>>,
    /// Per instance, candidate label ids by descending score.
    pub rankings: Vec<Vec<usize>>,
}

impl ScenarioView {
    /// Per candidate label: the instance ids that carry it and the instance
    /// ids ranked by descending score (ties by ascending instance id).
    pub fn label_view(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let ids = &self.scores.instance_ids;
        let mut positives = Vec::with_capacity(self.scores.label_ids.len());
        let mut rankings = Vec::with_capacity(self.scores.label_ids.len());
        for (j, label) in self.scores.label_ids.iter().enumerate() {
            positives.push(
                ids.iter()
                    .zip(&self.truths)
                    .filter(|(_, t)| t.contains(label))
                    .map(|(&i, _)| i)
                    .collect(),
            );
            let column = self.scores.scores.col_to_vec(j);
            rankings.push(rank_order(&column, ids).into_iter().map(|p| ids[p]).collect());
        }
        (positives, rankings)
    }
}

/// Restricts candidates to the scenario's labels and intersects every truth
/// set with them. Instances left with an empty truth are kept here and
/// skipped by the metrics.
pub fn apply_scenario(scores: &ScoreMatrix, truths: &[Vec<usize>], scenario: &Scenario) -> Result<ScenarioView> {
    if truths.len() != scores.instance_ids.len() {
        return Err(Error::shape("apply_scenario", scores.instance_ids.len(), truths.len()));
    }
    let labels = scenario.labels();
    if labels.is_empty() {
        return Err(domain_err!("scenario {} has no candidate labels", scenario.kind));
    }
    let filtered = scores.select_labels(&labels)?;
    let truths = truths
        .iter()
        .map(|t| t.iter().copied().filter(|l| labels.binary_search(l).is_ok()).collect())
        .collect();
    let rankings = (0..filtered.instance_ids.len())
        .map(|i| {
            rank_order(filtered.scores.row(i), &labels)
                .into_iter()
                .map(|p| labels[p])
                .collect()
        })
        .collect();
    Ok(ScenarioView {
        scores: filtered,
        truths,
        rankings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use alloc::vec;

    fn fixture() -> (ScoreMatrix, Vec<Vec<usize>>) {
        let scores = Matrix::from_rows(&[[0.1, 0.9, 0.5], [0.7, 0.2, 0.3]]).unwrap();
        (
            ScoreMatrix::new(vec![10, 11], vec![0, 1, 2], scores).unwrap(),
            vec![vec![0, 2], vec![2]],
        )
    }

    #[test]
    fn gzsl_is_identity() {
        let (s, t) = fixture();
        let v = apply_scenario(&s, &t, &Scenario::new(ScenarioKind::Gzsl, vec![0, 1], vec![2])).unwrap();
        assert_eq!(v.scores, s);
        assert_eq!(v.truths, t);
        assert_eq!(v.rankings, vec![vec![1, 2, 0], vec![0, 2, 1]]);
    }

    #[test]
    fn known_only_empties_unseen_truths() {
        let (s, t) = fixture();
        let v = apply_scenario(&s, &t, &Scenario::new(ScenarioKind::KnownOnly, vec![0, 1], vec![2])).unwrap();
        assert_eq!(v.truths, vec![vec![0], vec![]]);
        assert_eq!(v.scores.label_ids, vec![0, 1]);
    }

    #[test]
    fn unseen_only_on_mixed_truth() {
        let (s, t) = fixture();
        let v = apply_scenario(&s, &t, &Scenario::new(ScenarioKind::UnseenOnly, vec![0, 1], vec![2])).unwrap();
        assert_eq!(v.truths, vec![vec![2], vec![2]]);
        assert_eq!(v.rankings, vec![vec![2], vec![2]]);
        let (pos, rank) = v.label_view();
        assert_eq!(pos, vec![vec![10, 11]]);
        assert_eq!(rank, vec![vec![10, 11]]);
    }

    #[test]
    fn parses_kinds() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("zsl".parse::<ScenarioKind>().is_err());
    }
}
