//! Binary field snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 16    | magic `KJBLAB-FIELD\0\0\0\0`              |
//! | 4     | `u32` complex dimension `n`               |
//! | 4     | `u32` samples per axis `N`                |
//! | 1     | `u8` kind: 0 scalar, 1 Hermitian          |
//! | rest  | `f64` values in grid row-major order      |
//!
//! Hermitian snapshots store the `n²` entries of each matrix row-major as
//! `(re, im)` pairs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::field::{GridSpec, HermitianField, ScalarField};
use crate::herm::Herm;

pub const MAGIC: &[u8; 16] = b"KJBLAB-FIELD\0\0\0\0";

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Scalar(ScalarField),
    Hermitian(HermitianField),
}

impl Snapshot {
    pub fn grid(&self) -> GridSpec {
        match self {
            Snapshot::Scalar(f) => f.grid(),
            Snapshot::Hermitian(f) => f.grid(),
        }
    }
}

fn header(grid: GridSpec, kind: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(25);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.size() as u32).to_le_bytes());
    out.push(kind);
    out
}

pub fn encode_scalar(f: &ScalarField) -> Vec<u8> {
    let mut out = header(f.grid(), 0);
    out.reserve(8 * f.values().len());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_hermitian(f: &HermitianField) -> Vec<u8> {
    let mut out = header(f.grid(), 1);
    for m in f.matrices() {
        for c in m.entries() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 25 || &bytes[..16] != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let n = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let size = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let kind = bytes[24];
    let grid = GridSpec::new(n, size).map_err(|e| LabError::Format(e.to_string()))?;
    let body = &bytes[25..];
    let per_point = match kind {
        0 => 1,
        1 => 2 * n * n,
        k => return Err(LabError::Format(format!("unknown kind {k}"))),
    };
    if body.len() != 8 * per_point * grid.len() {
        return Err(LabError::Format(format!(
            "payload has {} bytes, expected {}",
            body.len(),
            8 * per_point * grid.len()
        )));
    }
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    match kind {
        0 => Ok(Snapshot::Scalar(ScalarField::new(grid, floats)?)),
        _ => {
            let data = floats
                .chunks_exact(per_point)
                .map(|c| {
                    let entries: Vec<Complex64> = c
                        .chunks_exact(2)
                        .map(|p| Complex64::new(p[0], p[1]))
                        .collect();
                    Herm::from_row_major(n, &entries)
                })
                .collect();
            Ok(Snapshot::Hermitian(HermitianField::new(grid, data)?))
        }
    }
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_scalar(f))?;
    Ok(())
}

pub fn write_hermitian(path: &Path, f: &HermitianField) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_hermitian(f))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    match read(path)? {
        Snapshot::Scalar(f) => Ok(f),
        Snapshot::Hermitian(_) => Err(LabError::Format("expected a scalar field".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::complex_hessian;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, 8).unwrap();
        let bytes = encode_scalar(&ScalarField::zeros(g));
        assert_eq!(&bytes[..12], b"KJBLAB-FIELD");
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &2u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &8u32.to_le_bytes());
        assert_eq!(bytes[24], 0);
        assert_eq!(bytes.len(), 25 + 8 * 4096);
    }

    #[test]
    fn hermitian_round_trip() {
        let g = GridSpec::new(2, 8).unwrap();
        let f = ScalarField::from_fn(g, |x| (6.0 * x[0]).sin() * (6.0 * x[3]).cos());
        let h = complex_hessian(&f);
        let bytes = encode_hermitian(&h);
        assert_eq!(bytes.len(), 25 + 8 * 8 * g.len());
        match decode(&bytes).unwrap() {
            Snapshot::Hermitian(back) => assert_eq!(back, h),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = GridSpec::new(1, 8).unwrap();
        let mut bytes = encode_scalar(&ScalarField::zeros(g));
        bytes.pop();
        assert!(decode(&bytes).is_err());
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
    }
}
