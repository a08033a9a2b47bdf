//! Checkpoint format: `key = value` header lines, a `weights` line, then the
//! flat parameter vector as little-endian `f32`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::model::{GinModel, HeadKind, ModelShape, LOGVAR_MAX, LOGVAR_MIN};
use super::PredictorError;

const MAGIC: &str = "qaoa-trust-gin 1";
const WEIGHTS_MARKER: &str = "weights";

/// A model plus the uncertainty normalization fitted on validation data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: GinModel,
    pub u_med: Option<f64>,
    pub u_iqr: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

pub fn write_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let s = ck.model.shape();
    let header = format!(
        "{MAGIC}\nhead = {}\nk = {}\np = {}\nhidden = {}\nlayers = {}\nlogvar_min = {}\nlogvar_max = {}\nparams = {}\nu_med = {}\nu_iqr = {}\n{WEIGHTS_MARKER}\n",
        ck.model.head().as_str(),
        s.k,
        s.p,
        s.hidden,
        s.layers,
        LOGVAR_MIN,
        LOGVAR_MAX,
        ck.model.num_params(),
        opt(ck.u_med),
        opt(ck.u_iqr),
    );
    let mut out = header.into_bytes();
    for p in ck.model.params() {
        out.extend_from_slice(&(*p as f32).to_le_bytes());
    }
    out
}

fn field<'a>(h: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str, PredictorError> {
    h.get(key)
        .map(String::as_str)
        .ok_or_else(|| PredictorError::Malformed(format!("missing header field `{key}`")))
}

fn parse<T: std::str::FromStr>(
    h: &BTreeMap<String, String>,
    key: &str,
) -> Result<T, PredictorError> {
    let v = field(h, key)?;
    v.parse()
        .map_err(|_| PredictorError::Malformed(format!("bad value `{v}` for `{key}`")))
}

fn parse_opt(h: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, PredictorError> {
    match field(h, key)? {
        "none" => Ok(None),
        _ => parse(h, key).map(Some),
    }
}

fn expect_eq<T: PartialEq + ToString>(
    field: &str,
    expected: T,
    got: T,
) -> Result<(), PredictorError> {
    if expected == got {
        Ok(())
    } else {
        Err(PredictorError::HeaderMismatch {
            field: field.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        })
    }
}

/// Parses a checkpoint. `expected_k`, when given, must match the header.
pub fn read_checkpoint(
    bytes: &[u8],
    expected_k: Option<usize>,
) -> Result<Checkpoint, PredictorError> {
    let mut header = BTreeMap::new();
    let mut pos = 0;
    let mut first = true;
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| PredictorError::Malformed("header is not terminated".into()))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| PredictorError::Malformed("header is not text".into()))?;
        pos += end + 1;
        if first {
            if line != MAGIC {
                return Err(PredictorError::Malformed(format!(
                    "unknown format line `{line}`"
                )));
            }
            first = false;
            continue;
        }
        if line == WEIGHTS_MARKER {
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| PredictorError::Malformed(format!("bad header line `{line}`")))?;
        header.insert(k.trim().to_string(), v.trim().to_string());
    }

    let head = match field(&header, "head")? {
        "gaussian" => HeadKind::Gaussian,
        "point" => HeadKind::Point,
        other => return Err(PredictorError::Malformed(format!("unknown head `{other}`"))),
    };
    let k: usize = parse(&header, "k")?;
    if let Some(want) = expected_k {
        expect_eq("k", want, k)?;
    }
    let shape = ModelShape::new(k, parse(&header, "p")?);
    expect_eq("hidden", shape.hidden, parse(&header, "hidden")?)?;
    expect_eq("layers", shape.layers, parse(&header, "layers")?)?;
    expect_eq("logvar_min", LOGVAR_MIN, parse(&header, "logvar_min")?)?;
    expect_eq("logvar_max", LOGVAR_MAX, parse(&header, "logvar_max")?)?;
    let count: usize = parse(&header, "params")?;
    let expected_count = GinModel::zeros(shape, head).num_params();
    expect_eq("params", expected_count, count)?;

    let body = &bytes[pos..];
    if body.len() != 4 * count {
        return Err(PredictorError::Truncated {
            expected: 4 * count,
            got: body.len(),
        });
    }
    let params = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Checkpoint {
        model: GinModel::from_params(shape, head, params)?,
        u_med: parse_opt(&header, "u_med")?,
        u_iqr: parse_opt(&header, "u_iqr")?,
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), PredictorError> {
    fs::write(path, write_checkpoint(ck))?;
    Ok(())
}

pub fn load_checkpoint(
    path: &Path,
    expected_k: Option<usize>,
) -> Result<Checkpoint, PredictorError> {
    read_checkpoint(&fs::read(path)?, expected_k)
}
