//! The `MLZSR-SCORES v1` score dump: a test-set score matrix with its ground
//! truth and the known/unseen label partition, enough to fuse and evaluate
//! without reloading any model.
//!
//! ```text
//! MLZSR-SCORES v1
//! known <label ids>
//! unseen <label ids>
//! labels <label ids of the score columns>
//! <instance id> <one score per column> | <true label ids>
//! ...
//! ```

use mlzsr_core::scoring::ScoreMatrix;
use mlzsr_core::Matrix;

use super::{push_floats, push_ids, LineReader, ParseResult};

pub const SCORES_HEADER: &str = "MLZSR-SCORES v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDump {
    pub scores: ScoreMatrix,
    /// Full label set of each scored instance, in row order.
    pub truths: Vec<Vec<usize>>,
    pub known: Vec<usize>,
    pub unseen: Vec<usize>,
}

fn push_keyed(out: &mut String, key: &str, ids: &[usize]) {
    out.push_str(key);
    if ids.is_empty() {
        out.push('\n');
    } else {
        out.push(' ');
        push_ids(out, ids);
    }
}

pub fn write_scores(dump: &ScoreDump) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    push_keyed(&mut out, "known", &dump.known);
    push_keyed(&mut out, "unseen", &dump.unseen);
    push_keyed(&mut out, "labels", &dump.scores.label_ids);
    for (i, (&id, truth)) in dump.scores.instance_ids.iter().zip(&dump.truths).enumerate() {
        out.push_str(&id.to_string());
        out.push(' ');
        let mut row = String::new();
        push_floats(&mut row, dump.scores.scores.row(i));
        out.push_str(row.trim_end());
        out.push_str(" |");
        if !truth.is_empty() {
            out.push(' ');
            push_ids(&mut out, truth);
        } else {
            out.push('\n');
        }
    }
    out
}

pub fn parse_scores(text: &str) -> ParseResult<ScoreDump> {
    let mut r = LineReader::new(text);
    r.expect_exact(SCORES_HEADER)?;
    let known = r.keyed_values::<usize>("known", "label id")?;
    let unseen = r.keyed_values::<usize>("unseen", "label id")?;
    let labels = r.keyed_values::<usize>("labels", "label id")?;
    if labels.is_empty() {
        return Err(r.error("score dump has no label columns"));
    }
    let mut instance_ids = Vec::new();
    let mut truths = Vec::new();
    let mut values = Vec::new();
    while let Ok(l) = r.next("score row") {
        if l.trim().is_empty() {
            r.finish()?;
            break;
        }
        let (row, truth) = l
            .split_once('|')
            .ok_or_else(|| r.error("score row lacks the `|` truth separator"))?;
        let (id, row) = row.trim().split_once(' ').unwrap_or((row.trim(), ""));
        instance_ids.push(r.value::<usize>(id, "instance id")?);
        values.extend(r.floats(row, labels.len())?);
        truths.push(r.values::<usize>(truth, "label id")?);
    }
    let scores = Matrix::new(instance_ids.len(), labels.len(), values).map_err(|e| r.error(e.to_string()))?;
    let scores = ScoreMatrix::new(instance_ids, labels, scores).map_err(|e| r.error(e.to_string()))?;
    Ok(ScoreDump {
        scores,
        truths,
        known,
        unseen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::Location;

    fn dump() -> ScoreDump {
        ScoreDump {
            scores: ScoreMatrix::new(
                vec![4, 9],
                vec![0, 1, 2],
                Matrix::from_rows(&[[0.5, -1e-9, 3.0], [0.1 + 0.2, 2.0, -7.25]]).unwrap(),
            )
            .unwrap(),
            truths: vec![vec![1, 2], vec![]],
            known: vec![0, 1],
            unseen: vec![2],
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let d = dump();
        let text = write_scores(&d);
        assert!(text.contains("\n4 0.5 -1e-9 3.0 | 1 2\n9 "));
        assert_eq!(parse_scores(&text).unwrap(), d);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = write_scores(&dump()).replace("| 1 2", "1 2");
        assert_eq!(parse_scores(&text).unwrap_err().location, Location::Line(5));
        let text = write_scores(&dump()).replace("2.0 -7.25", "2.0");
        assert_eq!(parse_scores(&text).unwrap_err().location, Location::Line(6));
    }
}
