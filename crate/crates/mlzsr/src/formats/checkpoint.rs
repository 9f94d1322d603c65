//! Model checkpoints: a binary layout for storage and an equivalent text dump
//! for inspection. Both carry everything needed to score a dataset: the two
//! trained models, the pooling used in training, and where the label vectors
//! come from.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic          8 bytes  "MLZSRCKP"
//! version        u32      1
//! sequence       u8       0 lstm, 1 feedforward
//! semantic       u8       0 network, 1 identity
//! pooling        u8       0 average, 1 max, 2 local-average-global-max
//! groups         u64      window count for pooling 2, else 0
//! labels         u8       0 dataset vectors, 1 random unit vectors
//! label seed     u64      seed of the random table, else 0
//! visual dims    4 x u64  input, sequence units, dense units, embedding
//! semantic dims  3 x u64  input, hidden units, embedding (identity: d, 0, d)
//! dropout        f64
//! round          u64
//! best val I-MAP f64
//! visual params  u64 count, then f64 values in declaration order
//! semantic params u64 count, then f64 values (count 0 for identity)
//! ```

use mlzsr_core::model::{
    flatten_params, load_flat_params, Parameters, SemanticDims, SemanticEncoder, SemanticModel, SequenceKind,
    VisualDims, VisualModel,
};
use mlzsr_core::scoring::Pooling;
use mlzsr_core::train::Checkpoint;

use super::{push_floats, push_line, BinReader, BinWriter, LineReader, ParseError, ParseResult};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MLZSRCKP";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_TEXT_HEADER: &str = "MLZSR-CHECKPOINT v1";

/// Semantic table the models were trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Dataset,
    /// Unit-norm random vectors drawn from this seed.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub checkpoint: Checkpoint,
    pub pooling: Pooling,
    pub labels: LabelSource,
}

struct Header {
    sequence: SequenceKind,
    identity: bool,
    pooling: Pooling,
    labels: LabelSource,
    visual: VisualDims,
    semantic: SemanticDims,
    dropout: f64,
    round: usize,
    best_val_imap: f64,
}

impl Header {
    fn of(m: &ModelFile) -> Self {
        let c = &m.checkpoint;
        let (identity, semantic) = match &c.semantic {
            SemanticEncoder::Network(s) => (false, s.dims()),
            SemanticEncoder::Identity { dim } => (
                true,
                SemanticDims {
                    input_dim: *dim,
                    hidden_units: 0,
                    embed_dim: *dim,
                },
            ),
        };
        Self {
            sequence: c.visual.kind(),
            identity,
            pooling: m.pooling,
            labels: m.labels,
            visual: c.visual.dims(),
            semantic,
            dropout: c.visual.dropout_rate,
            round: c.round,
            best_val_imap: c.best_val_imap,
        }
    }

    fn check(&self) -> Result<(), String> {
        let v = &self.visual;
        if v.input_dim == 0 || v.sequence_units == 0 || v.dense_units == 0 || v.embed_dim == 0 {
            return Err(format!("visual dims must be positive, got {v:?}"));
        }
        let s = &self.semantic;
        if s.embed_dim != v.embed_dim {
            return Err(format!(
                "visual embedding width {} differs from semantic width {}",
                v.embed_dim, s.embed_dim
            ));
        }
        if self.identity {
            if s.input_dim != s.embed_dim || s.hidden_units != 0 {
                return Err(format!("identity encoder dims must be (d, 0, d), got {s:?}"));
            }
        } else if s.input_dim == 0 || s.hidden_units == 0 {
            return Err(format!("semantic dims must be positive, got {s:?}"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout rate {} outside [0, 1)", self.dropout));
        }
        if let Pooling::LocalAverageGlobalMax { groups: 0 } = self.pooling {
            return Err("pooling group count must be positive".into());
        }
        Ok(())
    }

    fn empty_models(&self) -> (VisualModel, SemanticEncoder) {
        let mut visual = VisualModel::zeros(self.visual, self.sequence);
        visual.dropout_rate = self.dropout;
        let semantic = if self.identity {
            SemanticEncoder::Identity {
                dim: self.semantic.embed_dim,
            }
        } else {
            SemanticEncoder::Network(SemanticModel::zeros(self.semantic))
        };
        (visual, semantic)
    }

    fn finish(self, visual: VisualModel, semantic: SemanticEncoder) -> ModelFile {
        ModelFile {
            checkpoint: Checkpoint {
                visual,
                semantic,
                round: self.round,
                best_val_imap: self.best_val_imap,
            },
            pooling: self.pooling,
            labels: self.labels,
        }
    }
}

fn semantic_params(enc: &SemanticEncoder) -> Vec<f64> {
    match enc {
        SemanticEncoder::Network(m) => flatten_params(m),
        SemanticEncoder::Identity { .. } => Vec::new(),
    }
}

fn semantic_param_count(enc: &SemanticEncoder) -> usize {
    match enc {
        SemanticEncoder::Network(m) => m.params().iter().map(|p| p.len()).sum(),
        SemanticEncoder::Identity { .. } => 0,
    }
}

pub fn encode_checkpoint(m: &ModelFile) -> Vec<u8> {
    let h = Header::of(m);
    let mut w = BinWriter::default();
    w.raw(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u8(match h.sequence {
        SequenceKind::Lstm => 0,
        SequenceKind::Feedforward => 1,
    });
    w.u8(h.identity as u8);
    let (pool, groups) = match h.pooling {
        Pooling::Average => (0, 0),
        Pooling::Max => (1, 0),
        Pooling::LocalAverageGlobalMax { groups } => (2, groups),
    };
    w.u8(pool);
    w.usize(groups);
    let (src, seed) = match h.labels {
        LabelSource::Dataset => (0, 0),
        LabelSource::Random { seed } => (1, seed),
    };
    w.u8(src);
    w.u64(seed);
    for d in [
        h.visual.input_dim,
        h.visual.sequence_units,
        h.visual.dense_units,
        h.visual.embed_dim,
    ] {
        w.usize(d);
    }
    for d in [h.semantic.input_dim, h.semantic.hidden_units, h.semantic.embed_dim] {
        w.usize(d);
    }
    w.f64(h.dropout);
    w.usize(h.round);
    w.f64(h.best_val_imap);
    w.f64s(&flatten_params(&m.checkpoint.visual));
    w.f64s(&semantic_params(&m.checkpoint.semantic));
    w.bytes
}

pub fn decode_checkpoint(bytes: &[u8]) -> ParseResult<ModelFile> {
    let mut r = BinReader::new(bytes);
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(ParseError::at_offset(0, "not a checkpoint file (bad magic bytes)"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(r.error(format!("unsupported checkpoint version {version}")));
    }
    let sequence = match r.u8("sequence kind")? {
        0 => SequenceKind::Lstm,
        1 => SequenceKind::Feedforward,
        k => return Err(r.error(format!("unknown sequence kind {k}"))),
    };
    let identity = match r.u8("semantic kind")? {
        0 => false,
        1 => true,
        k => return Err(r.error(format!("unknown semantic kind {k}"))),
    };
    let pool = r.u8("pooling")?;
    let groups = r.usize("pooling groups")?;
    let pooling = match pool {
        0 => Pooling::Average,
        1 => Pooling::Max,
        2 => Pooling::LocalAverageGlobalMax { groups },
        k => return Err(r.error(format!("unknown pooling {k}"))),
    };
    let src = r.u8("label source")?;
    let seed = r.u64("label seed")?;
    let labels = match src {
        0 => LabelSource::Dataset,
        1 => LabelSource::Random { seed },
        k => return Err(r.error(format!("unknown label source {k}"))),
    };
    let mut vd = [0usize; 4];
    for d in &mut vd {
        *d = r.usize("visual dims")?;
    }
    let mut sd = [0usize; 3];
    for d in &mut sd {
        *d = r.usize("semantic dims")?;
    }
    let h = Header {
        sequence,
        identity,
        pooling,
        labels,
        visual: VisualDims {
            input_dim: vd[0],
            sequence_units: vd[1],
            dense_units: vd[2],
            embed_dim: vd[3],
        },
        semantic: SemanticDims {
            input_dim: sd[0],
            hidden_units: sd[1],
            embed_dim: sd[2],
        },
        dropout: r.f64("dropout")?,
        round: r.usize("round")?,
        best_val_imap: r.f64("best validation I-MAP")?,
    };
    h.check().map_err(|m| r.error(m))?;
    let (mut visual, mut semantic) = h.empty_models();
    let flat = r.f64s(visual.param_count(), "visual parameters")?;
    load_flat_params(&mut visual, &flat).map_err(|e| r.error(e.to_string()))?;
    let flat = r.f64s(semantic_param_count(&semantic), "semantic parameters")?;
    if let SemanticEncoder::Network(m) = &mut semantic {
        load_flat_params(m, &flat).map_err(|e| r.error(e.to_string()))?;
    }
    r.finish()?;
    Ok(h.finish(visual, semantic))
}

fn kind_name(k: SequenceKind) -> &'static str {
    match k {
        SequenceKind::Lstm => "lstm",
        SequenceKind::Feedforward => "feedforward",
    }
}

pub fn pooling_name(p: Pooling) -> String {
    match p {
        Pooling::Average => "average".into(),
        Pooling::Max => "max".into(),
        Pooling::LocalAverageGlobalMax { groups } => format!("lagm {groups}"),
    }
}

pub fn parse_pooling(text: &str) -> Option<Pooling> {
    let mut parts = text.split_whitespace();
    let p = match (parts.next()?, parts.next()) {
        ("average", None) => Pooling::Average,
        ("max", None) => Pooling::Max,
        ("lagm", Some(g)) => Pooling::LocalAverageGlobalMax {
            groups: g.parse().ok()?,
        },
        _ => return None,
    };
    parts.next().is_none().then_some(p)
}

fn push_blocks<P: Parameters>(out: &mut String, prefix: &str, model: &P) {
    for (name, p) in model.param_names().iter().zip(model.params()) {
        push_line(out, format_args!("param {prefix}.{name} {} {}", p.rows(), p.cols()));
        for r in 0..p.rows() {
            push_floats(out, p.row(r));
        }
    }
}

/// Text dump with the same content as the binary layout: a header of
/// `key value` lines, then every parameter block as `param <name> <rows>
/// <cols>` followed by its rows.
pub fn checkpoint_to_text(m: &ModelFile) -> String {
    let h = Header::of(m);
    let mut out = String::new();
    push_line(&mut out, format_args!("{CHECKPOINT_TEXT_HEADER}"));
    push_line(&mut out, format_args!("sequence {}", kind_name(h.sequence)));
    push_line(
        &mut out,
        format_args!("semantic {}", if h.identity { "identity" } else { "network" }),
    );
    push_line(&mut out, format_args!("pooling {}", pooling_name(h.pooling)));
    match h.labels {
        LabelSource::Dataset => push_line(&mut out, format_args!("labels dataset")),
        LabelSource::Random { seed } => push_line(&mut out, format_args!("labels random {seed}")),
    }
    let v = h.visual;
    push_line(
        &mut out,
        format_args!(
            "visual_dims {} {} {} {}",
            v.input_dim, v.sequence_units, v.dense_units, v.embed_dim
        ),
    );
    let s = h.semantic;
    push_line(
        &mut out,
        format_args!("semantic_dims {} {} {}", s.input_dim, s.hidden_units, s.embed_dim),
    );
    push_line(&mut out, format_args!("dropout {:?}", h.dropout));
    push_line(&mut out, format_args!("round {}", h.round));
    push_line(&mut out, format_args!("best_val_imap {:?}", h.best_val_imap));
    push_blocks(&mut out, "visual", &m.checkpoint.visual);
    if let SemanticEncoder::Network(sm) = &m.checkpoint.semantic {
        push_blocks(&mut out, "semantic", sm);
    }
    out
}

fn read_blocks<P: Parameters>(r: &mut LineReader<'_>, prefix: &str, model: &mut P) -> ParseResult<()> {
    let names = model.param_names();
    for (name, p) in names.iter().zip(model.params_mut()) {
        let rest = r.keyed("param")?;
        let expected = format!("{prefix}.{name} {} {}", p.rows(), p.cols());
        if rest != expected {
            return Err(r.error(format!("expected parameter block `{expected}`, found `{rest}`")));
        }
        let cols = p.cols();
        for row in 0..p.rows() {
            let l = r.next("parameter row")?;
            p.row_mut(row).copy_from_slice(&r.floats(l, cols)?);
        }
    }
    Ok(())
}

pub fn checkpoint_from_text(text: &str) -> ParseResult<ModelFile> {
    let mut r = LineReader::new(text);
    r.expect_exact(CHECKPOINT_TEXT_HEADER)?;
    let sequence = match r.keyed("sequence")? {
        "lstm" => SequenceKind::Lstm,
        "feedforward" => SequenceKind::Feedforward,
        other => return Err(r.error(format!("unknown sequence kind `{other}`"))),
    };
    let identity = match r.keyed("semantic")? {
        "network" => false,
        "identity" => true,
        other => return Err(r.error(format!("unknown semantic kind `{other}`"))),
    };
    let p = r.keyed("pooling")?;
    let pooling = parse_pooling(p).ok_or_else(|| r.error(format!("unknown pooling `{p}`")))?;
    let l = r.keyed("labels")?;
    let labels = match l.split_once(' ') {
        None if l == "dataset" => LabelSource::Dataset,
        Some(("random", seed)) => LabelSource::Random {
            seed: r.value(seed, "label seed")?,
        },
        _ => return Err(r.error(format!("unknown label source `{l}`"))),
    };
    let vd = r.keyed_exact::<usize>("visual_dims", 4, "visual dim")?;
    let sd = r.keyed_exact::<usize>("semantic_dims", 3, "semantic dim")?;
    let h = Header {
        sequence,
        identity,
        pooling,
        labels,
        visual: VisualDims {
            input_dim: vd[0],
            sequence_units: vd[1],
            dense_units: vd[2],
            embed_dim: vd[3],
        },
        semantic: SemanticDims {
            input_dim: sd[0],
            hidden_units: sd[1],
            embed_dim: sd[2],
        },
        dropout: r.keyed_value("dropout", "dropout")?,
        round: r.keyed_value("round", "round")?,
        best_val_imap: r.keyed_value("best_val_imap", "validation I-MAP")?,
    };
    h.check().map_err(|m| r.error(m))?;
    let (mut visual, mut semantic) = h.empty_models();
    read_blocks(&mut r, "visual", &mut visual)?;
    if let SemanticEncoder::Network(m) = &mut semantic {
        read_blocks(&mut r, "semantic", m)?;
    }
    r.finish()?;
    Ok(h.finish(visual, semantic))
}
