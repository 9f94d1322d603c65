//! Binary files for the fitted comparative baselines, following the checkpoint
//! conventions: magic bytes, a version, a dims header and little-endian f64
//! values in declaration order.
//!
//! ```text
//! magic       8 bytes "MLZSRBSL"
//! version     u32     1
//! method      u8      0 dsp, 1 conse, 2 costa
//! classifiers linear model
//! conse:      u64 top, u8 norm (0 l2, 1 l1), id list of known labels
//! costa:      id list of known labels, label weight matrix, label bias matrix
//!
//! linear model: u8 loss (0 squared, 1 hinge, 2 logistic), f64 lambda,
//!               weight matrix, bias matrix
//! matrix:       u64 rows, u64 cols, u64 count, count f64 values row-major
//! id list:      u64 count, count u64 ids
//! ```

use mlzsr_core::baselines::{Conse, ConseNorm, Costa, Dsp, LinearLoss, LinearModel};
use mlzsr_core::Matrix;

use super::{BinReader, BinWriter, ParseError, ParseResult};

pub const BASELINE_MAGIC: &[u8; 8] = b"MLZSRBSL";
pub const BASELINE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Dsp(Dsp),
    Conse(Conse),
    Costa(Costa),
}

fn write_matrix(w: &mut BinWriter, m: &Matrix) {
    w.usize(m.rows());
    w.usize(m.cols());
    w.f64s(m.as_slice());
}

fn read_matrix(r: &mut BinReader<'_>, what: &str) -> ParseResult<Matrix> {
    let rows = r.usize(what)?;
    let cols = r.usize(what)?;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| r.error(format!("{what} dims overflow")))?;
    let data = r.f64s(len, what)?;
    Matrix::new(rows, cols, data).map_err(|e| r.error(e.to_string()))
}

fn write_ids(w: &mut BinWriter, ids: &[usize]) {
    w.usize(ids.len());
    for &i in ids {
        w.usize(i);
    }
}

fn read_ids(r: &mut BinReader<'_>, what: &str) -> ParseResult<Vec<usize>> {
    let n = r.usize(what)?;
    (0..n).map(|_| r.usize(what)).collect()
}

fn write_linear(w: &mut BinWriter, m: &LinearModel) {
    w.u8(match m.loss {
        LinearLoss::Squared => 0,
        LinearLoss::Hinge => 1,
        LinearLoss::Logistic => 2,
    });
    w.f64(m.lambda);
    write_matrix(w, &m.weight);
    write_matrix(w, &m.bias);
}

fn read_linear(r: &mut BinReader<'_>) -> ParseResult<LinearModel> {
    let loss = match r.u8("loss kind")? {
        0 => LinearLoss::Squared,
        1 => LinearLoss::Hinge,
        2 => LinearLoss::Logistic,
        k => return Err(r.error(format!("unknown linear loss {k}"))),
    };
    let lambda = r.f64("lambda")?;
    let weight = read_matrix(r, "weight")?;
    let bias = read_matrix(r, "bias")?;
    if bias.shape() != (weight.rows(), 1) {
        return Err(r.error(format!(
            "bias shape {:?} does not match {} outputs",
            bias.shape(),
            weight.rows()
        )));
    }
    if !lambda.is_finite() || weight.as_slice().iter().chain(bias.as_slice()).any(|v| !v.is_finite()) {
        return Err(r.error("non-finite linear model parameters"));
    }
    Ok(LinearModel {
        weight,
        bias,
        lambda,
        loss,
    })
}

pub fn encode_baseline(model: &BaselineModel) -> Vec<u8> {
    let mut w = BinWriter::default();
    w.raw(BASELINE_MAGIC);
    w.u32(BASELINE_VERSION);
    match model {
        BaselineModel::Dsp(d) => {
            w.u8(0);
            write_linear(&mut w, &d.model);
        }
        BaselineModel::Conse(c) => {
            w.u8(1);
            write_linear(&mut w, &c.classifiers);
            w.usize(c.top);
            w.u8(match c.norm {
                ConseNorm::L2 => 0,
                ConseNorm::L1 => 1,
            });
            write_ids(&mut w, &c.known);
        }
        BaselineModel::Costa(c) => {
            w.u8(2);
            write_linear(&mut w, &c.classifiers);
            write_ids(&mut w, &c.known);
            write_matrix(&mut w, &c.weight);
            write_matrix(&mut w, &c.bias);
        }
    }
    w.bytes
}

pub fn decode_baseline(bytes: &[u8]) -> ParseResult<BaselineModel> {
    let mut r = BinReader::new(bytes);
    if r.take(8, "magic")? != BASELINE_MAGIC {
        return Err(ParseError::at_offset(0, "not a baseline model file (bad magic bytes)"));
    }
    let version = r.u32("version")?;
    if version != BASELINE_VERSION {
        return Err(r.error(format!("unsupported baseline version {version}")));
    }
    let model = match r.u8("method")? {
        0 => BaselineModel::Dsp(Dsp {
            model: read_linear(&mut r)?,
        }),
        1 => {
            let classifiers = read_linear(&mut r)?;
            let top = r.usize("top")?;
            let norm = match r.u8("norm")? {
                0 => ConseNorm::L2,
                1 => ConseNorm::L1,
                k => return Err(r.error(format!("unknown weight norm {k}"))),
            };
            let known = read_ids(&mut r, "known labels")?;
            if known.len() != classifiers.outputs() {
                return Err(r.error("known label count differs from classifier count"));
            }
            BaselineModel::Conse(Conse {
                classifiers,
                known,
                top,
                norm,
            })
        }
        2 => {
            let classifiers = read_linear(&mut r)?;
            let known = read_ids(&mut r, "known labels")?;
            let weight = read_matrix(&mut r, "label weights")?;
            let bias = read_matrix(&mut r, "label biases")?;
            if known.len() != classifiers.outputs() || bias.shape() != (weight.rows(), 1) {
                return Err(r.error("inconsistent label classifier shapes"));
            }
            BaselineModel::Costa(Costa {
                classifiers,
                known,
                weight,
                bias,
            })
        }
        k => return Err(r.error(format!("unknown baseline method {k}"))),
    };
    r.finish()?;
    Ok(model)
}
