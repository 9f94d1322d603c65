//! The `MLZSR-SPLIT v1` text format.
//!
//! ```text
//! MLZSR-SPLIT v1
//! mode ifs|lfs
//! seed <u64>
//! fractions <train> <val> <test>     ifs only
//! val_count <n>                      lfs only
//! known <label ids>
//! unseen <label ids>
//! train <instance ids>
//! val <instance ids>
//! test <instance ids>
//! ```

use mlzsr_core::data::{SplitMode, SplitSpec};

use super::{push_floats, push_ids, LineReader, ParseResult};

pub const SPLIT_HEADER: &str = "MLZSR-SPLIT v1";

pub fn mode_name(mode: SplitMode) -> &'static str {
    match mode {
        SplitMode::Ifs => "ifs",
        SplitMode::Lfs => "lfs",
    }
}

pub fn parse_mode(text: &str) -> Option<SplitMode> {
    match text {
        "ifs" => Some(SplitMode::Ifs),
        "lfs" => Some(SplitMode::Lfs),
        _ => None,
    }
}

fn push_keyed_ids(out: &mut String, key: &str, ids: &[usize]) {
    out.push_str(key);
    if ids.is_empty() {
        out.push('\n');
    } else {
        out.push(' ');
        push_ids(out, ids);
    }
}

pub fn write_split(split: &SplitSpec) -> String {
    let mut out = format!("{SPLIT_HEADER}\nmode {}\nseed {}\n", mode_name(split.mode), split.seed);
    if let Some(f) = split.fractions {
        out.push_str("fractions ");
        push_floats(&mut out, &f);
    }
    if let Some(v) = split.val_count {
        out.push_str(&format!("val_count {v}\n"));
    }
    push_keyed_ids(&mut out, "known", &split.known);
    push_keyed_ids(&mut out, "unseen", &split.unseen);
    push_keyed_ids(&mut out, "train", &split.train);
    push_keyed_ids(&mut out, "val", &split.val);
    push_keyed_ids(&mut out, "test", &split.test);
    out
}

/// Parses a split file. Consistency with a dataset is checked separately by
/// [`SplitSpec::check`].
pub fn parse_split(text: &str) -> ParseResult<SplitSpec> {
    let mut r = LineReader::new(text);
    r.expect_exact(SPLIT_HEADER)?;
    let m = r.keyed("mode")?;
    let mode = parse_mode(m.trim()).ok_or_else(|| r.error(format!("unknown split mode `{m}`")))?;
    let seed = r.keyed_value::<u64>("seed", "seed")?;
    let (fractions, val_count) = match mode {
        SplitMode::Ifs => {
            let f = r.keyed_floats("fractions", 3)?;
            (Some([f[0], f[1], f[2]]), None)
        }
        SplitMode::Lfs => (None, Some(r.keyed_value::<usize>("val_count", "validation count")?)),
    };
    let mut lists = Vec::with_capacity(5);
    for key in ["known", "unseen", "train", "val", "test"] {
        let ids = r.keyed_values::<usize>(key, "id")?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(r.error(format!("{key} ids must be strictly increasing")));
        }
        lists.push(ids);
    }
    r.finish()?;
    let mut lists = lists.into_iter();
    let mut next = || lists.next().expect("five lists");
    Ok(SplitSpec {
        mode,
        known: next(),
        unseen: next(),
        train: next(),
        val: next(),
        test: next(),
        seed,
        fractions,
        val_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::Location;
    use mlzsr_core::data::{generate_synthetic, make_ifs_split, make_lfs_split, SyntheticConfig};

    fn dataset() -> mlzsr_core::data::Dataset {
        generate_synthetic(&SyntheticConfig {
            num_instances: 60,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn both_modes_round_trip() {
        let ds = dataset();
        let ifs = make_ifs_split(&ds, &[1, 5, 9], [0.6, 0.2, 0.2], 4).unwrap();
        let lfs = make_lfs_split(&ds, &[2, 3], 5, 8).unwrap();
        for s in [ifs, lfs] {
            let text = write_split(&s);
            let back = parse_split(&text).unwrap();
            assert_eq!(back, s);
            back.check(&ds).unwrap();
            assert_eq!(write_split(&back), text);
        }
    }

    #[test]
    fn rejects_unknown_mode_and_unsorted_ids() {
        let ds = dataset();
        let text = write_split(&make_lfs_split(&ds, &[2, 3], 5, 8).unwrap());
        let err = parse_split(&text.replace("mode lfs", "mode xfs")).unwrap_err();
        assert_eq!(err.location, Location::Line(2));
        let err = parse_split(&text.replace("unseen 2 3", "unseen 3 2")).unwrap_err();
        assert_eq!(err.location, Location::Line(6));
    }
}
