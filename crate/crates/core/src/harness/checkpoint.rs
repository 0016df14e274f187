//! Binary checkpoint records.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `b"SDLAB\0\0\x01"` |
//! | 8 | 1 | record type: 1 model, 2 mask, 3 synthetic dataset, 4 curve, 5 grid |
//! | 9 | 3 | reserved, zero |
//! | 12 | 4 | header length `h` in bytes |
//! | 16 | h | UTF-8 TOML header |
//! | 16 + h | rest | payload: `count` little-endian floats of width `dtype` |
//!
//! The header always carries `count`, `dtype` (`"f32"` or `"f64"`),
//! `payload_sha256` (hex digest of the payload bytes) and `config_hash`, plus
//! a `[meta]` table specific to the record type. Masks are stored as `f32`
//! zeros and ones; everything holding real-valued parameters or losses is
//! stored as `f64` so loads are bit-exact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::distill::SyntheticDataset;
use crate::landscape::{LandscapeGrid, Plane};
use crate::nn::{ArchSpec, ModelState};
use crate::pruning::{sparsity, SparsityMask};
use crate::stability::{CurveMeta, InterpolationCurve};

pub const MAGIC: [u8; 8] = *b"SDLAB\0\0\x01";
const PREFIX_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint: bad magic {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("checkpoint: truncated ({0})")]
    Truncated(String),
    #[error("checkpoint: unknown record type {0}")]
    UnknownRecordType(u8),
    #[error("checkpoint: unreadable header: {0}")]
    HeaderParse(String),
    #[error("checkpoint: header declares {declared} values but the payload holds {found}")]
    LengthMismatch { declared: usize, found: usize },
    #[error("checkpoint: payload hash {found} does not match header {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("checkpoint: config hash {found} does not match the expected {expected}")]
    ConfigHashMismatch { expected: String, found: String },
    #[error("checkpoint: expected a {expected} record, found {found}")]
    WrongRecordType { expected: RecordType, found: RecordType },
    #[error("checkpoint: bad metadata: {0}")]
    BadMetadata(String),
}

type CkResult<T> = std::result::Result<T, CheckpointError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordType {
    Model = 1,
    Mask = 2,
    SyntheticDataset = 3,
    Curve = 4,
    Grid = 5,
}

impl RecordType {
    pub fn from_byte(b: u8) -> CkResult<Self> {
        Ok(match b {
            1 => RecordType::Model,
            2 => RecordType::Mask,
            3 => RecordType::SyntheticDataset,
            4 => RecordType::Curve,
            5 => RecordType::Grid,
            other => return Err(CheckpointError::UnknownRecordType(other)),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecordType::Model => "model",
            RecordType::Mask => "mask",
            RecordType::SyntheticDataset => "synthetic_dataset",
            RecordType::Curve => "curve",
            RecordType::Grid => "grid",
        }
    }
}

impl std::fmt::Display for RecordType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    count: usize,
    dtype: Dtype,
    payload_sha256: String,
    config_hash: String,
    #[serde(default)]
    meta: Table,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRecord {
    pub record_type: RecordType,
    pub dtype: Dtype,
    pub config_hash: String,
    pub meta: Table,
    pub payload: Vec<f64>,
}

impl CheckpointRecord {
    fn encode_payload(&self) -> CkResult<Vec<u8>> {
        let mut out = Vec::with_capacity(self.payload.len() * self.dtype.width());
        for &v in &self.payload {
            match self.dtype {
                Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
                Dtype::F32 => {
                    let narrow = v as f32;
                    if f64::from(narrow).to_bits() != v.to_bits() {
                        return Err(CheckpointError::BadMetadata(format!("{v} is not exactly representable as f32")));
                    }
                    out.extend_from_slice(&narrow.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> CkResult<Vec<u8>> {
        let payload = self.encode_payload()?;
        let header = Header {
            count: self.payload.len(),
            dtype: self.dtype,
            payload_sha256: crate::digest(&payload),
            config_hash: self.config_hash.clone(),
            meta: self.meta.clone(),
        };
        let text = toml::to_string(&header).map_err(|e| CheckpointError::HeaderParse(e.to_string()))?;
        let header_len = u32::try_from(text.len()).map_err(|_| CheckpointError::HeaderParse("header too large".into()))?;
        let mut out = Vec::with_capacity(PREFIX_LEN + text.len() + payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(self.record_type as u8);
        out.extend_from_slice(&[0, 0, 0]);
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> CkResult<Self> {
        if bytes.len() < MAGIC.len() {
            return Err(CheckpointError::Truncated(format!("{} bytes, shorter than the magic", bytes.len())));
        }
        if bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic {
                found: bytes[..8].to_vec(),
            });
        }
        if bytes.len() < PREFIX_LEN {
            return Err(CheckpointError::Truncated(format!("{} bytes, shorter than the fixed prefix", bytes.len())));
        }
        let record_type = RecordType::from_byte(bytes[8])?;
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let payload_start = PREFIX_LEN
            .checked_add(header_len)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                CheckpointError::Truncated(format!(
                    "header needs {header_len} bytes, only {} remain",
                    bytes.len() - PREFIX_LEN
                ))
            })?;
        let text = std::str::from_utf8(&bytes[PREFIX_LEN..payload_start])
            .map_err(|e| CheckpointError::HeaderParse(e.to_string()))?;
        let header: Header = toml::from_str(text).map_err(|e| CheckpointError::HeaderParse(e.to_string()))?;

        let payload = &bytes[payload_start..];
        let width = header.dtype.width();
        if !payload.len().is_multiple_of(width) {
            return Err(CheckpointError::Truncated(format!(
                "payload of {} bytes is not a whole number of {width}-byte values",
                payload.len()
            )));
        }
        if payload.len() / width != header.count {
            return Err(CheckpointError::LengthMismatch {
                declared: header.count,
                found: payload.len() / width,
            });
        }
        let found = crate::digest(payload);
        if found != header.payload_sha256 {
            return Err(CheckpointError::HashMismatch {
                expected: header.payload_sha256,
                found,
            });
        }
        let values = match header.dtype {
            Dtype::F64 => payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
            Dtype::F32 => payload
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                .collect(),
        };
        Ok(Self {
            record_type,
            dtype: header.dtype,
            config_hash: header.config_hash,
            meta: header.meta,
            payload: values,
        })
    }

    pub fn expect_type(&self, expected: RecordType) -> CkResult<()> {
        if self.record_type != expected {
            return Err(CheckpointError::WrongRecordType {
                expected,
                found: self.record_type,
            });
        }
        Ok(())
    }
}

pub fn save_checkpoint(record: &CheckpointRecord, path: &Path) -> CkResult<PathBuf> {
    let io = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, record.to_bytes()?).map_err(io)?;
    Ok(path.to_path_buf())
}

pub fn load_checkpoint(path: &Path) -> CkResult<CheckpointRecord> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    CheckpointRecord::from_bytes(&bytes)
}

/// Loads a record and checks that it was produced under `config_hash`.
pub fn load_checkpoint_verified(path: &Path, config_hash: &str) -> CkResult<CheckpointRecord> {
    let record = load_checkpoint(path)?;
    if record.config_hash != config_hash {
        return Err(CheckpointError::ConfigHashMismatch {
            expected: config_hash.to_string(),
            found: record.config_hash,
        });
    }
    Ok(record)
}

// Metadata helpers. Seeds and counts are stored as decimal strings or
// integers; floats as TOML floats, which round-trip exactly.

fn meta_err(key: &str, what: &str) -> CheckpointError {
    CheckpointError::BadMetadata(format!("`{key}` missing or not {what}"))
}

fn get_str<'a>(meta: &'a Table, key: &str) -> CkResult<&'a str> {
    meta.get(key).and_then(Value::as_str).ok_or_else(|| meta_err(key, "a string"))
}

fn get_f64(meta: &Table, key: &str) -> CkResult<f64> {
    meta.get(key).and_then(Value::as_float).ok_or_else(|| meta_err(key, "a float"))
}

fn get_usize(meta: &Table, key: &str) -> CkResult<usize> {
    meta.get(key)
        .and_then(Value::as_integer)
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| meta_err(key, "a non-negative integer"))
}

fn get_u64(meta: &Table, key: &str) -> CkResult<u64> {
    get_str(meta, key)?.parse().map_err(|_| meta_err(key, "a decimal u64"))
}

fn get_floats(meta: &Table, key: &str) -> CkResult<Vec<f64>> {
    meta.get(key)
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(Value::as_float).collect())
        .ok_or_else(|| meta_err(key, "an array of floats"))
}

fn get_pair(meta: &Table, key: &str) -> CkResult<(f64, f64)> {
    match get_floats(meta, key)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(meta_err(key, "a pair")),
    }
}

fn floats(values: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(values.into_iter().map(Value::Float).collect())
}

fn count(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn put_arch(meta: &mut Table, arch: &ArchSpec) -> CkResult<()> {
    let table = Table::try_from(arch).map_err(|e| CheckpointError::BadMetadata(e.to_string()))?;
    meta.insert("arch".into(), Value::Table(table));
    Ok(())
}

fn get_arch(meta: &Table) -> CkResult<ArchSpec> {
    let table = meta.get("arch").and_then(Value::as_table).ok_or_else(|| meta_err("arch", "a table"))?;
    let arch: ArchSpec = table
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CheckpointError::BadMetadata(e.to_string()))?;
    arch.validate().map_err(|e| CheckpointError::BadMetadata(e.to_string()))?;
    Ok(arch)
}

fn record(record_type: RecordType, dtype: Dtype, config_hash: &str, meta: Table, payload: Vec<f64>) -> CheckpointRecord {
    CheckpointRecord {
        record_type,
        dtype,
        config_hash: config_hash.to_string(),
        meta,
        payload,
    }
}

fn take<'a>(payload: &mut &'a [f64], n: usize, what: &str) -> CkResult<&'a [f64]> {
    if payload.len() < n {
        return Err(CheckpointError::BadMetadata(format!("payload too short for {what}")));
    }
    let (head, rest) = payload.split_at(n);
    *payload = rest;
    Ok(head)
}

impl CheckpointRecord {
    pub fn from_model(model: &ModelState, config_hash: &str) -> CkResult<Self> {
        let mut meta = Table::new();
        put_arch(&mut meta, &model.arch)?;
        meta.insert("seed".into(), Value::String(model.seed.to_string()));
        Ok(record(RecordType::Model, Dtype::F64, config_hash, meta, model.params.clone()))
    }

    pub fn to_model(&self) -> CkResult<ModelState> {
        self.expect_type(RecordType::Model)?;
        let arch = get_arch(&self.meta)?;
        ModelState::new(arch, self.payload.clone(), get_u64(&self.meta, "seed")?)
            .map_err(|e| CheckpointError::BadMetadata(e.to_string()))
    }

    pub fn from_mask(mask: &SparsityMask, arch: &ArchSpec, config_hash: &str) -> CkResult<Self> {
        let mut meta = Table::new();
        put_arch(&mut meta, arch)?;
        meta.insert("sparsity".into(), Value::Float(sparsity(mask)));
        let payload = mask.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Ok(record(RecordType::Mask, Dtype::F32, config_hash, meta, payload))
    }

    pub fn to_mask(&self) -> CkResult<(SparsityMask, ArchSpec)> {
        self.expect_type(RecordType::Mask)?;
        let arch = get_arch(&self.meta)?;
        let bits = self
            .payload
            .iter()
            .map(|&v| match v {
                1.0 => Ok(true),
                0.0 => Ok(false),
                other => Err(CheckpointError::BadMetadata(format!("mask value {other} is not 0 or 1"))),
            })
            .collect::<CkResult<Vec<bool>>>()?;
        let mask = SparsityMask::from_bits(&arch, bits).map_err(|e| CheckpointError::BadMetadata(e.to_string()))?;
        Ok((mask, arch))
    }

    pub fn from_synthetic(syn: &SyntheticDataset, config_hash: &str) -> Self {
        let mut meta = Table::new();
        meta.insert("dim".into(), count(syn.dim));
        meta.insert("class_count".into(), count(syn.class_count));
        meta.insert("ipc".into(), count(syn.ipc));
        meta.insert("source_name".into(), Value::String(syn.source_name.clone()));
        meta.insert("distill_config_hash".into(), Value::String(syn.distill_config_hash.clone()));
        meta.insert("initial_matching_loss".into(), Value::Float(syn.initial_matching_loss));
        meta.insert("final_matching_loss".into(), Value::Float(syn.final_matching_loss));
        meta.insert("matching_loss_history".into(), floats(syn.matching_loss_history.iter().copied()));
        record(RecordType::SyntheticDataset, Dtype::F64, config_hash, meta, syn.features.clone())
    }

    pub fn to_synthetic(&self) -> CkResult<SyntheticDataset> {
        self.expect_type(RecordType::SyntheticDataset)?;
        let m = &self.meta;
        let mut syn = SyntheticDataset::from_features(
            self.payload.clone(),
            get_usize(m, "dim")?,
            get_usize(m, "class_count")?,
            get_usize(m, "ipc")?,
            get_str(m, "source_name")?,
            get_str(m, "distill_config_hash")?,
        )
        .map_err(|e| CheckpointError::BadMetadata(e.to_string()))?;
        syn.initial_matching_loss = get_f64(m, "initial_matching_loss")?;
        syn.final_matching_loss = get_f64(m, "final_matching_loss")?;
        syn.matching_loss_history = get_floats(m, "matching_loss_history")?;
        Ok(syn)
    }

    pub fn from_curve(curve: &InterpolationCurve, config_hash: &str) -> Self {
        let mut meta = Table::new();
        meta.insert("len".into(), count(curve.len()));
        meta.insert("sparsity".into(), Value::Float(curve.meta.sparsity));
        meta.insert("seed_a".into(), Value::String(curve.meta.seed_a.to_string()));
        meta.insert("seed_b".into(), Value::String(curve.meta.seed_b.to_string()));
        meta.insert("dataset".into(), Value::String(curve.meta.dataset.clone()));
        let payload = curve
            .alphas
            .iter()
            .chain(&curve.train_loss)
            .chain(&curve.val_accuracy)
            .copied()
            .collect();
        record(RecordType::Curve, Dtype::F64, config_hash, meta, payload)
    }

    pub fn to_curve(&self) -> CkResult<InterpolationCurve> {
        self.expect_type(RecordType::Curve)?;
        let m = &self.meta;
        let n = get_usize(m, "len")?;
        let mut rest = self.payload.as_slice();
        let alphas = take(&mut rest, n, "alphas")?.to_vec();
        let loss = take(&mut rest, n, "train_loss")?.to_vec();
        let acc = take(&mut rest, n, "val_accuracy")?.to_vec();
        let meta = CurveMeta {
            sparsity: get_f64(m, "sparsity")?,
            seed_a: get_u64(m, "seed_a")?,
            seed_b: get_u64(m, "seed_b")?,
            dataset: get_str(m, "dataset")?.to_string(),
        };
        InterpolationCurve::new(alphas, loss, acc, meta).map_err(|e| CheckpointError::BadMetadata(e.to_string()))
    }

    pub fn from_grid(grid: &LandscapeGrid, config_hash: &str) -> CkResult<Self> {
        let plane = &grid.plane;
        let mut meta = Table::new();
        put_arch(&mut meta, plane.arch())?;
        meta.insert("origin_seed".into(), Value::String(plane.origin.seed.to_string()));
        meta.insert("scale_u".into(), Value::Float(plane.scale_u));
        meta.insert("ref_coords".into(), floats(plane.ref_coords.iter().flat_map(|&(x, y)| [x, y])));
        meta.insert("x_range".into(), floats([grid.x_range.0, grid.x_range.1]));
        meta.insert("y_range".into(), floats([grid.y_range.0, grid.y_range.1]));
        meta.insert(
            "resolution".into(),
            Value::Array(vec![count(grid.resolution.0), count(grid.resolution.1)]),
        );
        meta.insert("evaluations".into(), count(grid.evaluations));
        meta.insert("flagged".into(), Value::Array(grid.flagged.iter().map(|&i| count(i)).collect()));
        meta.insert(
            "warnings".into(),
            Value::Array(grid.warnings.iter().cloned().map(Value::String).collect()),
        );
        let payload = grid
            .losses
            .iter()
            .chain(&plane.origin.params)
            .chain(&plane.u)
            .chain(&plane.v)
            .copied()
            .collect();
        Ok(record(RecordType::Grid, Dtype::F64, config_hash, meta, payload))
    }

    pub fn to_grid(&self) -> CkResult<LandscapeGrid> {
        self.expect_type(RecordType::Grid)?;
        let m = &self.meta;
        let arch = get_arch(m)?;
        let resolution = match m.get("resolution").and_then(Value::as_array).map(|a| a.as_slice()) {
            Some([nx, ny]) => match (nx.as_integer(), ny.as_integer()) {
                (Some(nx), Some(ny)) if nx >= 0 && ny >= 0 => (nx as usize, ny as usize),
                _ => return Err(meta_err("resolution", "two integers")),
            },
            _ => return Err(meta_err("resolution", "two integers")),
        };
        let refs = get_floats(m, "ref_coords")?;
        let ref_coords: [(f64, f64); 3] = match refs.as_slice() {
            [a, b, c, d, e, f] => [(*a, *b), (*c, *d), (*e, *f)],
            _ => return Err(meta_err("ref_coords", "six floats")),
        };
        let p = arch.param_count();
        let mut rest = self.payload.as_slice();
        let losses = take(&mut rest, resolution.0 * resolution.1, "losses")?.to_vec();
        let origin = take(&mut rest, p, "origin")?.to_vec();
        let u = take(&mut rest, p, "u")?.to_vec();
        let v = take(&mut rest, p, "v")?.to_vec();
        let origin = ModelState::new(arch, origin, get_u64(m, "origin_seed")?)
            .map_err(|e| CheckpointError::BadMetadata(e.to_string()))?;
        let flagged = m
            .get("flagged")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(|v| v.as_integer().map(|i| i as usize)).collect())
            .ok_or_else(|| meta_err("flagged", "an array of integers"))?;
        let warnings = m
            .get("warnings")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(|v| v.as_str().map(String::from)).collect())
            .ok_or_else(|| meta_err("warnings", "an array of strings"))?;
        Ok(LandscapeGrid {
            plane: Plane {
                origin,
                u,
                v,
                scale_u: get_f64(m, "scale_u")?,
                ref_coords,
            },
            x_range: get_pair(m, "x_range")?,
            y_range: get_pair(m, "y_range")?,
            resolution,
            losses,
            flagged,
            evaluations: get_usize(m, "evaluations")?,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_model;

    fn model_bytes() -> (ModelState, Vec<u8>) {
        let m = init_model(&ArchSpec::mlp(&[2, 16, 16, 3]), 9).unwrap();
        let bytes = CheckpointRecord::from_model(&m, "cfg").unwrap().to_bytes().unwrap();
        (m, bytes)
    }

    #[test]
    fn model_round_trip_is_bitwise() {
        let (m, bytes) = model_bytes();
        assert_eq!(&bytes[..8], b"SDLAB\0\0\x01");
        assert_eq!(bytes[8], 1);
        let back = CheckpointRecord::from_bytes(&bytes).unwrap().to_model().unwrap();
        assert_eq!(back.arch, m.arch);
        assert_eq!(back.seed, 9);
        assert!(back.params.iter().zip(&m.params).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupted_magic() {
        let (_, mut bytes) = model_bytes();
        bytes[0] ^= 0xff;
        assert!(matches!(CheckpointRecord::from_bytes(&bytes), Err(CheckpointError::BadMagic { .. })));
    }

    #[test]
    fn short_payload_is_length_error() {
        let (m, bytes) = model_bytes();
        assert_eq!(m.params.len(), 371);
        let cut = &bytes[..bytes.len() - 8];
        assert!(matches!(
            CheckpointRecord::from_bytes(cut),
            Err(CheckpointError::LengthMismatch {
                declared: 371,
                found: 370
            })
        ));
        assert!(matches!(
            CheckpointRecord::from_bytes(&bytes[..bytes.len() - 3]),
            Err(CheckpointError::Truncated(_))
        ));
        assert!(matches!(CheckpointRecord::from_bytes(&bytes[..40]), Err(CheckpointError::Truncated(_))));
    }

    #[test]
    fn flipped_payload_bit_is_hash_error() {
        let (_, mut bytes) = model_bytes();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert!(matches!(CheckpointRecord::from_bytes(&bytes), Err(CheckpointError::HashMismatch { .. })));
    }

    #[test]
    fn unknown_type_and_wrong_type() {
        let (_, mut bytes) = model_bytes();
        let rec = CheckpointRecord::from_bytes(&bytes).unwrap();
        assert!(matches!(rec.to_mask(), Err(CheckpointError::WrongRecordType { .. })));
        bytes[8] = 42;
        assert!(matches!(CheckpointRecord::from_bytes(&bytes), Err(CheckpointError::UnknownRecordType(42))));
    }

    #[test]
    fn mask_round_trip_uses_f32() {
        let arch = ArchSpec::mlp(&[2, 3, 2]);
        let mut bits = vec![true; arch.param_count()];
        bits[0] = false;
        bits[4] = false;
        let mask = SparsityMask::from_bits(&arch, bits).unwrap();
        let rec = CheckpointRecord::from_mask(&mask, &arch, "h").unwrap();
        let bytes = rec.to_bytes().unwrap();
        let back = CheckpointRecord::from_bytes(&bytes).unwrap();
        assert_eq!(back.dtype, Dtype::F32);
        assert_eq!(back.to_mask().unwrap().0, mask);
    }

    #[test]
    fn verified_load_checks_config_hash() {
        let dir = tempfile::tempdir().unwrap();
        let (m, _) = model_bytes();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&CheckpointRecord::from_model(&m, "abc").unwrap(), &path).unwrap();
        assert!(load_checkpoint_verified(&path, "abc").is_ok());
        assert!(matches!(
            load_checkpoint_verified(&path, "xyz"),
            Err(CheckpointError::ConfigHashMismatch { .. })
        ));
        assert!(matches!(
            load_checkpoint(&dir.path().join("absent")),
            Err(CheckpointError::Io { .. })
        ));
    }
}
