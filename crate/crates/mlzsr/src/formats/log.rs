//! The `MLZSR-TRAINLOG v1` training log: one record per alternation round,
//! `round visual_loss semantic_loss val_i_map`, with `-` for losses that were
//! not computed (round 0 and the fixed-semantic mode).

use mlzsr_core::train::RoundLog;

use super::{LineReader, ParseResult};

pub const LOG_HEADER: &str = "MLZSR-TRAINLOG v1";
pub const LOG_COLUMNS: &str = "# round visual_loss semantic_loss val_i_map";

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:?}"))
}

pub fn log_record(r: &RoundLog) -> String {
    format!(
        "{} {} {} {:?}",
        r.round,
        optional(r.visual_loss),
        optional(r.semantic_loss),
        r.val_i_map
    )
}

pub fn write_log(log: &[RoundLog]) -> String {
    let mut out = format!("{LOG_HEADER}\n{LOG_COLUMNS}\n");
    for r in log {
        out.push_str(&log_record(r));
        out.push('\n');
    }
    out
}

pub fn parse_log(text: &str) -> ParseResult<Vec<RoundLog>> {
    let mut r = LineReader::new(text);
    r.expect_exact(LOG_HEADER)?;
    r.expect_exact(LOG_COLUMNS)?;
    let mut out = Vec::new();
    while let Ok(l) = r.next("record") {
        if l.trim().is_empty() {
            r.finish()?;
            break;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(r.error(format!("expected 4 fields, found {}", f.len())));
        }
        let opt = |s: &str| -> ParseResult<Option<f64>> {
            if s == "-" {
                Ok(None)
            } else {
                r.value::<f64>(s, "loss").map(Some)
            }
        };
        out.push(RoundLog {
            round: r.value(f[0], "round")?,
            visual_loss: opt(f[1])?,
            semantic_loss: opt(f[2])?,
            val_i_map: r.value(f[3], "validation I-MAP")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let log = vec![
            RoundLog {
                round: 0,
                visual_loss: None,
                semantic_loss: None,
                val_i_map: 0.125,
            },
            RoundLog {
                round: 1,
                visual_loss: Some(0.1 + 0.2),
                semantic_loss: None,
                val_i_map: 0.5,
            },
        ];
        let text = write_log(&log);
        assert!(text.ends_with("\n1 0.30000000000000004 - 0.5\n"));
        assert_eq!(parse_log(&text).unwrap(), log);
    }
}
