//! The `MLZSR v1` dataset text format.
//!
//! ```text
//! MLZSR v1
//! <labels> <semantic dim> <segments> <feature dim> <instances>
//! <id> <name>                      one line per label, ids 0.. in order
//! <semantic vector>                one line per label
//! <label ids>                      per instance: its label ids (may be empty)
//! <segment features>               followed by one line per segment
//! ```

use mlzsr_core::data::{Dataset, Instance};
use mlzsr_core::Matrix;

use super::{push_floats, push_ids, push_line, LineReader, ParseResult};

pub const DATASET_HEADER: &str = "MLZSR v1";

/// Label names must be single-line, non-empty and free of surrounding
/// whitespace so that they survive the round trip unchanged.
pub fn check_label_name(name: &str) -> Result<(), String> {
    if name.is_empty() || name.trim() != name || name.contains(['\n', '\r']) {
        return Err(format!(
            "label name {name:?} must be a non-empty single line without surrounding whitespace"
        ));
    }
    Ok(())
}

pub fn write_dataset(ds: &Dataset) -> Result<String, String> {
    for name in &ds.vocabulary {
        check_label_name(name)?;
    }
    let mut out = String::new();
    push_line(&mut out, format_args!("{DATASET_HEADER}"));
    push_line(
        &mut out,
        format_args!(
            "{} {} {} {} {}",
            ds.num_labels(),
            ds.semantic_dim(),
            ds.segments,
            ds.feature_dim,
            ds.len()
        ),
    );
    for (id, name) in ds.vocabulary.iter().enumerate() {
        push_line(&mut out, format_args!("{id} {name}"));
    }
    for r in 0..ds.num_labels() {
        push_floats(&mut out, ds.semantics.row(r));
    }
    for inst in &ds.instances {
        push_ids(&mut out, &inst.labels);
        for t in 0..inst.segments.rows() {
            push_floats(&mut out, inst.segments.row(t));
        }
    }
    Ok(out)
}

pub fn parse_dataset(text: &str) -> ParseResult<Dataset> {
    let mut r = LineReader::new(text);
    let first = r.next("header")?;
    if first.trim_end() != DATASET_HEADER {
        return Err(r.error(format!("expected `{DATASET_HEADER}` header, found `{first}`")));
    }
    let dims_line = r.next("dimension line")?;
    let dims = r.exact_values::<usize>(dims_line, 5, "dimension")?;
    let [labels, sem_dim, segments, feature_dim, count] = [dims[0], dims[1], dims[2], dims[3], dims[4]];
    if labels == 0 || sem_dim == 0 || segments == 0 || feature_dim == 0 {
        return Err(r.error("label count and dimensions must be positive"));
    }

    let mut vocabulary = Vec::with_capacity(labels);
    for id in 0..labels {
        let l = r.next("vocabulary entry")?;
        let (tok, name) = l.split_once(' ').unwrap_or((l, ""));
        if tok.parse::<usize>().ok() != Some(id) {
            return Err(r.error(format!("expected vocabulary id {id}, found `{tok}`")));
        }
        check_label_name(name).map_err(|m| r.error(m))?;
        vocabulary.push(name.to_string());
    }

    let mut semantics = Matrix::zeros(labels, sem_dim);
    for c in 0..labels {
        let l = r.next("semantic vector")?;
        semantics.row_mut(c).copy_from_slice(&r.floats(l, sem_dim)?);
    }

    let mut instances = Vec::with_capacity(count);
    for _ in 0..count {
        let l = r.next("instance label line")?;
        let ids = r.values::<usize>(l, "label id")?;
        if let Some(bad) = ids.iter().find(|&&c| c >= labels) {
            return Err(r.error(format!("label id {bad} out of range for {labels} labels")));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(r.error("label ids must be strictly increasing"));
        }
        let mut feats = Matrix::zeros(segments, feature_dim);
        for t in 0..segments {
            let l = r.next("segment features")?;
            feats.row_mut(t).copy_from_slice(&r.floats(l, feature_dim)?);
        }
        instances.push(Instance::new(feats, ids));
    }
    r.finish()?;
    Dataset::new(instances, vocabulary, semantics, segments, feature_dim).map_err(|e| r.error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::Location;
    use mlzsr_core::data::{generate_synthetic, SyntheticConfig};

    fn small() -> Dataset {
        generate_synthetic(&SyntheticConfig {
            num_labels: 6,
            num_clusters: 2,
            num_instances: 5,
            segments: 4,
            min_segments: 4,
            feature_dim: 4,
            semantic_dim: 3,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let ds = small();
        let text = write_dataset(&ds).unwrap();
        let back = parse_dataset(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(write_dataset(&back).unwrap(), text);
    }

    #[test]
    fn extreme_values_survive() {
        let mut ds = small();
        ds.semantics[(0, 0)] = 1e-300;
        ds.semantics[(0, 1)] = -0.0;
        ds.semantics[(1, 2)] = 0.1 + 0.2;
        ds.instances[0].segments[(0, 0)] = f64::MAX;
        let back = parse_dataset(&write_dataset(&ds).unwrap()).unwrap();
        for (a, b) in back.semantics.as_slice().iter().zip(ds.semantics.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.instances[0].segments[(0, 0)], f64::MAX);
    }

    #[test]
    fn errors_name_the_line() {
        let text = write_dataset(&small()).unwrap();
        let bad = text.replacen("MLZSR v1", "MLZSR v2", 1);
        assert_eq!(parse_dataset(&bad).unwrap_err().location, Location::Line(1));

        let mut lines: Vec<&str> = text.lines().collect();
        lines[2 + 6] = "1.0 oops 2.0";
        let err = parse_dataset(&lines.join("\n")).unwrap_err();
        assert_eq!(err.location, Location::Line(9));
        assert!(err.message.contains("oops"));

        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_dataset(&truncated).unwrap_err().location, Location::Line(21));
    }

    #[test]
    fn rejects_out_of_range_labels_and_bad_names() {
        let text = write_dataset(&small()).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let label_line = 2 + 6 + 6;
        lines[label_line] = "0 99".into();
        let err = parse_dataset(&lines.join("\n")).unwrap_err();
        assert_eq!(err.location, Location::Line(label_line + 1));

        let mut ds = small();
        ds.vocabulary[0] = " padded".into();
        assert!(write_dataset(&ds).is_err());
    }
}
