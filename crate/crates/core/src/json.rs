//! Byte-stable JSON: compact layout, struct field order, floats written with
//! 17 significant digits.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone, Copy)]
pub struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, RoundTripFormatter);
    value.serialize(&mut ser)?;
    Ok(out)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(String::from_utf8(to_vec(value)?).expect("serde_json writes UTF-8"))
}

/// Writes `value` followed by a newline.
pub fn write_file<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = to_vec(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// One compact JSON object per line.
pub fn write_lines<T: Serialize>(path: impl AsRef<Path>, values: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend(to_vec(v)?);
        bytes.push(b'\n');
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, -2.5e-300, 1.0 / 3.0, 123456789.125, 0.0, -0.0, f64::MIN_POSITIVE / 8.0] {
            let s = to_string(&v).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(to_string(&0.5).unwrap(), "5.0000000000000000e-1");
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_string(&vec![f64::NAN, 1.0]).unwrap(), "[null,1.0000000000000000e0]");
    }

    #[test]
    fn integers_untouched() {
        assert_eq!(to_string(&(3u32, "x")).unwrap(), "[3,\"x\"]");
    }
}
