//! WBSL snapshot files: little-endian header followed by the raw f64 payload.
//!
//! ```text
//! "WBSL" | version u32 | nx ny nz u32 | spacing f64 | origin 3×f64 | time f64 | values f64…
//! ```

use std::fs;
use std::path::Path;

use super::{Grid3D, ScalarField3D, Vec3};
use crate::error::{LabError, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"WBSL";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 12 + 8 + 24 + 8;

pub fn encode_field(field: &ScalarField3D) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    for &n in &grid.dims {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.spacing.to_le_bytes());
    for a in 0..3 {
        out.extend_from_slice(&grid.origin[a].to_le_bytes());
    }
    out.extend_from_slice(&field.time.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ScalarField3D> {
    if bytes.len() < HEADER_LEN {
        return Err(LabError::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != SNAPSHOT_MAGIC {
        return Err(LabError::Format("bad magic, expected WBSL".into()));
    }
    let mut cursor = 4;
    let u32_at = |c: &mut usize| {
        let v = u32::from_le_bytes(bytes[*c..*c + 4].try_into().expect("4 bytes"));
        *c += 4;
        v
    };
    let version = u32_at(&mut cursor);
    if version != SNAPSHOT_VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    let dims = [u32_at(&mut cursor), u32_at(&mut cursor), u32_at(&mut cursor)];
    let f64_at = |c: &mut usize| {
        let v = f64::from_le_bytes(bytes[*c..*c + 8].try_into().expect("8 bytes"));
        *c += 8;
        v
    };
    let spacing = f64_at(&mut cursor);
    let origin = Vec3::new(f64_at(&mut cursor), f64_at(&mut cursor), f64_at(&mut cursor));
    let time = f64_at(&mut cursor);

    let count = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n as usize));
    let expected = count.and_then(|c| c.checked_mul(8)).and_then(|b| b.checked_add(HEADER_LEN));
    match expected {
        Some(len) if len == bytes.len() => {}
        _ => {
            return Err(LabError::Format(format!(
                "declared dims {dims:?} do not match payload of {} bytes",
                bytes.len() - HEADER_LEN
            )))
        }
    }
    let grid = Grid3D::new(origin, spacing, dims.map(|n| n as usize))
        .map_err(|e| LabError::Format(format!("invalid grid header: {e}")))?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = ScalarField3D::new(grid, values).map_err(|e| LabError::Format(e.to_string()))?;
    Ok(field.with_time(time))
}

pub fn write_field(field: &ScalarField3D, path: &Path) -> Result<()> {
    fs::write(path, encode_field(field)).map_err(|e| LabError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<ScalarField3D> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode_field(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField3D {
        let g = Grid3D::new(Vec3::new(-0.5, 0.0, 1.5), 0.25, [3, 4, 2]).unwrap();
        ScalarField3D::from_fn(g, |p| p[0] * 1e-300 + p[1].exp() - p[2] / 3.0).with_time(-1.75)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = sample();
        let back = decode_field(&encode_field(&f)).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.time.to_bits(), f.time.to_bits());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let bytes = encode_field(&sample());
        assert!(matches!(decode_field(&bytes[..bytes.len() - 3]), Err(LabError::Format(_))));
        assert!(matches!(decode_field(&bytes[..10]), Err(LabError::Format(_))));
    }

    #[test]
    fn mismatched_dims_are_a_format_error() {
        let mut bytes = encode_field(&sample());
        bytes[8..12].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(decode_field(&bytes), Err(LabError::Format(_))));
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let mut bytes = encode_field(&sample());
        bytes[0] = b'X';
        assert!(decode_field(&bytes).is_err());
        let mut bytes = encode_field(&sample());
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(decode_field(&bytes).is_err());
    }
}
