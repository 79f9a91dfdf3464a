//! File formats.
//!
//! # MOBE
//!
//! A little-endian binary matrix:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"MOBE"`                         |
//! | 4      | 2    | version, `u16` = 1                      |
//! | 6      | 1    | dtype, `u8`: 0 = `f32`, 1 = `f64`       |
//! | 7      | 1    | reserved, `u8` = 0                      |
//! | 8      | 8    | `n`, `u64`                              |
//! | 16     | 8    | `d`, `u64`                              |
//! | 24     | …    | `n·d` scalars, row-major                |
//!
//! # Embedding CSV
//!
//! One token per line, `d` comma-separated values, optional header line.
//!
//! # Selection document
//!
//! A JSON object with exactly the fields `indices_prompt`, `indices_visual`,
//! `eps_p_directed`, `eps_p_symmetric`, `eps_v`, `eta`,
//! `shortfall_reassigned` and `config`. Reals are written with 17
//! significant digits so they parse back to the same bits.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::covering::{PruneConfig, SelectionResult};
use crate::embedding::{EmbeddingSet, IndexList};
use crate::error::{MobError, Result};

pub const MOBE_MAGIC: [u8; 4] = *b"MOBE";
pub const MOBE_VERSION: u16 = 1;
pub const MOBE_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(MobError::UnsupportedDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MobeHeader {
    pub dtype: Dtype,
    pub n: u64,
    pub d: u64,
}

impl MobeHeader {
    pub fn to_bytes(&self) -> [u8; MOBE_HEADER_LEN] {
        let mut out = [0u8; MOBE_HEADER_LEN];
        out[0..4].copy_from_slice(&MOBE_MAGIC);
        out[4..6].copy_from_slice(&MOBE_VERSION.to_le_bytes());
        out[6] = self.dtype.code();
        out[7] = 0;
        out[8..16].copy_from_slice(&self.n.to_le_bytes());
        out[16..24].copy_from_slice(&self.d.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MOBE_HEADER_LEN {
            return Err(MobError::TruncatedPayload {
                expected: MOBE_HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MOBE_MAGIC {
            return Err(MobError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != MOBE_VERSION {
            return Err(MobError::UnsupportedVersion(version));
        }
        let dtype = Dtype::from_code(bytes[6])?;
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        Ok(Self { dtype, n, d })
    }

    pub fn payload_len(&self) -> Option<u64> {
        self.n
            .checked_mul(self.d)?
            .checked_mul(self.dtype.size() as u64)
    }
}

/// Decodes a complete MOBE byte buffer.
pub fn decode_mobe(bytes: &[u8]) -> Result<EmbeddingSet> {
    let header = MobeHeader::parse(bytes)?;
    let payload = &bytes[MOBE_HEADER_LEN..];
    let expected = header.payload_len().ok_or(MobError::TruncatedPayload {
        expected: u64::MAX,
        found: payload.len() as u64,
    })?;
    let found = payload.len() as u64;
    if found < expected {
        return Err(MobError::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(MobError::TrailingBytes { expected, found });
    }
    let data: Vec<f64> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    EmbeddingSet::new(data, header.n as usize, header.d as usize)
}

/// Encodes a set; `f32` storage rounds each value to nearest.
pub fn encode_mobe(set: &EmbeddingSet, dtype: Dtype) -> Vec<u8> {
    let header = MobeHeader {
        dtype,
        n: set.n() as u64,
        d: set.d() as u64,
    };
    let mut out = Vec::with_capacity(MOBE_HEADER_LEN + set.as_slice().len() * dtype.size());
    out.extend_from_slice(&header.to_bytes());
    for &x in set.as_slice() {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&x.to_le_bytes()),
        }
    }
    out
}

pub fn read_mobe(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| MobError::io(path, e))?;
    decode_mobe(&bytes)
}

pub fn write_mobe(set: &EmbeddingSet, dtype: Dtype, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_mobe(set, dtype)).map_err(|e| MobError::io(path, e))
}

/// Parses the embedding CSV format. A first line that does not parse as
/// numbers is taken to be a header.
pub fn parse_embedding_csv(text: &str, origin: &Path) -> Result<EmbeddingSet> {
    let parse_err = |line: usize, msg: String| MobError::Parse {
        path: origin.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(parse_err(
                            lineno + 1,
                            format!("expected {} columns, found {}", first.len(), row.len()),
                        ));
                    }
                }
                rows.push(row);
            }
            Err(_) if rows.is_empty() && lineno == 0 => continue,
            Err(e) => return Err(parse_err(lineno + 1, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    EmbeddingSet::from_rows(&rows)
}

pub fn read_embedding_csv(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| MobError::io(path, e))?;
    parse_embedding_csv(&text, path)
}

/// Writes one row per token with shortest round-trip formatting.
pub fn write_embedding_csv(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in set.rows() {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| MobError::io(path, e))
}

/// Reads MOBE when the extension is `.mobe`, CSV otherwise.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("mobe") => read_mobe(path),
        _ => read_embedding_csv(path),
    }
}

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn real(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        format_real(x)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted real is valid JSON")
}

#[derive(Serialize)]
struct SelectionOut<'a> {
    indices_prompt: &'a [usize],
    indices_visual: &'a [usize],
    eps_p_directed: Box<RawValue>,
    eps_p_symmetric: Box<RawValue>,
    eps_v: Box<RawValue>,
    eta: Box<RawValue>,
    shortfall_reassigned: usize,
    config: &'a PruneConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionIn {
    indices_prompt: Vec<usize>,
    indices_visual: Vec<usize>,
    eps_p_directed: f64,
    eps_p_symmetric: f64,
    eps_v: f64,
    eta: f64,
    shortfall_reassigned: usize,
    config: PruneConfig,
}

pub const SELECTION_FIELDS: [&str; 8] = [
    "indices_prompt",
    "indices_visual",
    "eps_p_directed",
    "eps_p_symmetric",
    "eps_v",
    "eta",
    "shortfall_reassigned",
    "config",
];

pub fn selection_to_string(result: &SelectionResult) -> String {
    let doc = SelectionOut {
        indices_prompt: result.prompt_centers.as_slice(),
        indices_visual: result.visual_centers.as_slice(),
        eps_p_directed: real(result.eps_p_directed),
        eps_p_symmetric: real(result.eps_p_symmetric),
        eps_v: real(result.eps_v),
        eta: real(result.eta),
        shortfall_reassigned: result.shortfall_reassigned,
        config: &result.config,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("selection serializes");
    text.push('\n');
    text
}

pub fn selection_from_str(text: &str, origin: &Path) -> Result<SelectionResult> {
    let doc: SelectionIn = serde_json::from_str(text).map_err(|e| MobError::Parse {
        path: origin.to_path_buf(),
        msg: e.to_string(),
    })?;
    // the document does not record n; only duplicates can be checked
    let bound = doc
        .indices_prompt
        .iter()
        .chain(&doc.indices_visual)
        .max()
        .map_or(0, |m| m + 1);
    Ok(SelectionResult {
        prompt_centers: IndexList::new(doc.indices_prompt, bound)?,
        visual_centers: IndexList::new(doc.indices_visual, bound)?,
        eps_p_directed: doc.eps_p_directed,
        eps_p_symmetric: doc.eps_p_symmetric,
        eps_v: doc.eps_v,
        eta: doc.eta,
        shortfall_reassigned: doc.shortfall_reassigned,
        config: doc.config,
    })
}

pub fn write_selection(result: &SelectionResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| MobError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(selection_to_string(result).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| MobError::io(path, e))
}

pub fn read_selection(path: impl AsRef<Path>) -> Result<SelectionResult> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| MobError::io(path, e))?;
    selection_from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::Heuristic;

    fn dyadic() -> EmbeddingSet {
        EmbeddingSet::from_rows(&[[0.5, -1.25], [3.0, 0.125], [-2.0, 1024.0]]).unwrap()
    }

    #[test]
    fn mobe_round_trip_both_dtypes() {
        let s = dyadic();
        for dtype in [Dtype::F32, Dtype::F64] {
            let back = decode_mobe(&encode_mobe(&s, dtype)).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn mobe_header_layout() {
        let bytes = encode_mobe(&dyadic(), Dtype::F64);
        assert_eq!(&bytes[0..4], b"MOBE");
        assert_eq!(&bytes[4..8], &[1, 0, 1, 0]);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 24 + 6 * 8);
    }

    #[test]
    fn mobe_errors() {
        let good = encode_mobe(&dyadic(), Dtype::F64);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_mobe(&bad), Err(MobError::BadMagic(m)) if &m == b"XOBE"));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(
            decode_mobe(&bad),
            Err(MobError::UnsupportedVersion(2))
        ));

        let mut bad = good.clone();
        bad[6] = 7;
        assert!(matches!(
            decode_mobe(&bad),
            Err(MobError::UnsupportedDtype(7))
        ));

        let short = &good[..good.len() - 8];
        assert!(matches!(
            decode_mobe(short),
            Err(MobError::TruncatedPayload {
                expected: 48,
                found: 40
            })
        ));

        let mut long = good.clone();
        long.push(0);
        assert!(matches!(
            decode_mobe(&long),
            Err(MobError::TrailingBytes { .. })
        ));

        let mut nan = good;
        nan[24..32].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            decode_mobe(&nan),
            Err(MobError::NonFiniteValue { row: 0, col: 0 })
        ));
    }

    #[test]
    fn csv_with_and_without_header() {
        let p = Path::new("inline.csv");
        let a = parse_embedding_csv("x,y\n1,2\n3.5,-4\n", p).unwrap();
        let b = parse_embedding_csv("1,2\n3.5,-4\n", p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 2);
        assert!(parse_embedding_csv("1,2\n3\n", p).is_err());
        assert!(parse_embedding_csv("x,y\n", p).is_err());
    }

    fn sample_result(prompt: Vec<usize>) -> SelectionResult {
        SelectionResult {
            prompt_centers: IndexList::new(prompt, 10).unwrap(),
            visual_centers: IndexList::new(vec![7, 2, 9], 10).unwrap(),
            eps_p_directed: 0.1 + 0.2,
            eps_p_symmetric: 1.0 / 3.0,
            eps_v: std::f64::consts::PI / 7.0,
            eta: 1.2345678901234567,
            shortfall_reassigned: 1,
            config: PruneConfig {
                budget_k: 5,
                budget_kp: 2,
                fold_k: 1,
                heuristic: Heuristic::Manual,
            },
        }
    }

    #[test]
    fn selection_round_trip_is_exact() {
        let r = sample_result(vec![4, 1]);
        let text = selection_to_string(&r);
        let back = selection_from_str(&text, Path::new("x.json")).unwrap();
        assert_eq!(back, r);
        assert!(text.contains("\"eps_p_directed\": 3.0000000000000004e-1"));
    }

    #[test]
    fn empty_prompt_list_is_not_null() {
        let text = selection_to_string(&sample_result(vec![]));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["indices_prompt"], serde_json::json!([]));
    }

    #[test]
    fn selection_schema_has_exactly_eight_fields() {
        let text = selection_to_string(&sample_result(vec![0]));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut want = SELECTION_FIELDS.to_vec();
        want.sort_unstable();
        assert_eq!(keys, want);
        // unknown fields are rejected on read
        let extra = text.replacen('{', "{\"bogus\": 1,", 1);
        assert!(selection_from_str(&extra, Path::new("x.json")).is_err());
    }
}
