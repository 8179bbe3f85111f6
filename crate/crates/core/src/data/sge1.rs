//! SGE1 embedding files.
//!
//! ```text
//! offset  size         content
//! 0       4            magic "SGE1" (53 47 45 31)
//! 4       4            rows, u32 little-endian
//! 8       4            cols, u32 little-endian
//! 12      4·rows·cols  f32 little-endian, row-major
//! ```
//!
//! Values are widened to `f64` on read and narrowed to `f32` on write.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkern::Matrix;

pub const MAGIC: [u8; 4] = *b"SGE1";
pub const HEADER_LEN: usize = 12;

pub fn encode(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows())
        .map_err(|_| Error::InvalidInput(format!("{} rows do not fit in u32", m.rows())))?;
    let cols = u32::try_from(m.cols())
        .map_err(|_| Error::InvalidInput(format!("{} cols do not fit in u32", m.cols())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Parses an SGE1 buffer; `origin` names the source in error messages.
pub fn decode(bytes: &[u8], origin: &str) -> Result<Matrix> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        let got = &bytes[..bytes.len().min(4)];
        return Err(Error::Format(format!(
            "{origin}: bad magic {:02x?}, expected \"SGE1\"",
            got
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            path: origin.to_string(),
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("{origin}: {rows}x{cols} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::Length {
            path: origin.to_string(),
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

pub fn write_embedding_file(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(m)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
