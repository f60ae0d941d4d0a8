//! Field snapshot files.
//!
//! Layout: the 8-byte magic `RHFIELD1`, one line of compact UTF-8 JSON header
//! terminated by `\n`, then `M^N` little-endian `f64` values in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Field, Grid};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RHFIELD1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic bytes")]
    Magic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload holds {actual} bytes, header implies {expected}")]
    Payload { expected: usize, actual: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
    pub byte_order: String,
    /// Multiplier applied to the stored values on read.
    pub scaling: f64,
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let header = SnapshotHeader {
        dim: g.dim(),
        points_per_axis: g.points_per_axis(),
        box_length: g.box_length(),
        byte_order: "little".into(),
        scaling: 1.0,
    };
    let mut out = Vec::with_capacity(8 + 128 + 8 * field.values().len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(serde_json::to_string(&header).expect("header").as_bytes());
    out.push(b'\n');
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field, SnapshotError> {
    if bytes.len() < 8 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::Magic);
    }
    let rest = &bytes[8..];
    let newline = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SnapshotError::Header("missing header terminator".into()))?;
    let text = std::str::from_utf8(&rest[..newline]).map_err(|e| SnapshotError::Header(e.to_string()))?;
    let header: SnapshotHeader = serde_json::from_str(text).map_err(|e| SnapshotError::Header(e.to_string()))?;
    if header.byte_order != "little" {
        return Err(SnapshotError::Header(format!(
            "unsupported byte order {:?}",
            header.byte_order
        )));
    }
    if !header.scaling.is_finite() {
        return Err(SnapshotError::Header("non-finite scaling".into()));
    }
    let grid = Grid::new(header.dim, header.points_per_axis, header.box_length)
        .map_err(|e| SnapshotError::Header(e.to_string()))?;
    let payload = &rest[newline + 1..];
    let expected = 8 * grid.len();
    if payload.len() != expected {
        return Err(SnapshotError::Payload {
            expected,
            actual: payload.len(),
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let raw = f64::from_le_bytes(chunk.try_into().unwrap());
        let v = if header.scaling == 1.0 {
            raw
        } else {
            raw * header.scaling
        };
        if !v.is_finite() {
            return Err(SnapshotError::NonFinite(i));
        }
        values.push(v);
    }
    Ok(Field::from_values(grid, values).expect("validated above"))
}

/// Writes through a temporary sibling and renames into place.
pub fn write_field(path: &Path, field: &Field) -> Result<(), SnapshotError> {
    write_atomic(path, &encode_field(field))
}

pub fn read_field(path: &Path) -> Result<Field, SnapshotError> {
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_field(&bytes)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SnapshotError> {
    let io = |source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".into(),
    });
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in prop::collection::vec(-1e300f64..1e300, 64)) {
            let g = Grid::new(2, 8, 3.5).unwrap();
            let f = Field::from_values(g, values).unwrap();
            let back = decode_field(&encode_field(&f)).unwrap();
            prop_assert_eq!(back.grid(), f.grid());
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn corrupted_inputs_are_rejected() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let bytes = encode_field(&Field::constant(g, 2.0));
        assert!(matches!(decode_field(b"nonsense"), Err(SnapshotError::Magic)));
        assert!(matches!(
            decode_field(&bytes[..bytes.len() - 3]),
            Err(SnapshotError::Payload { .. })
        ));
        let mut bad = bytes.clone();
        bad[9] = b'#';
        assert!(matches!(decode_field(&bad), Err(SnapshotError::Header(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.fld");
        let g = Grid::new(2, 8, 2.0).unwrap();
        let f = Field::gaussian(g, &[0.0, 0.0], 0.5);
        write_field(&path, &f).unwrap();
        assert_eq!(read_field(&path).unwrap(), f);
    }
}
