//! `LUQ1` matrix files: magic, u16 version, u32 rows, u32 cols, then
//! `rows × cols` little-endian f64 values, row-major.

use std::fs;
use std::path::Path;

use super::bytes::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"LUQ1";
pub const MATRIX_VERSION: u16 = 1;
pub const MATRIX_HEADER_LEN: usize = 14;

pub fn encode_matrix(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::InvalidArgument("too many rows for a matrix file".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::InvalidArgument("too many columns for a matrix file".into()))?;
    let mut w = ByteWriter::new();
    w.bytes(MATRIX_MAGIC);
    w.u16(MATRIX_VERSION);
    w.u32(rows);
    w.u32(cols);
    for &v in m.data() {
        w.f64(v);
    }
    Ok(w.into_inner())
}

/// Decodes a matrix file image; `path` only labels errors.
pub fn decode_matrix(bytes: &[u8], path: &str) -> Result<Matrix> {
    let mut r = ByteReader::new(bytes, path, 0);
    let magic = r.take(4, "magic")?;
    if magic != MATRIX_MAGIC {
        return Err(Error::Format {
            path: path.to_string(),
            offset: 0,
            message: "not a matrix file (bad magic)".into(),
        });
    }
    let version = r.u16("version")?;
    if version != MATRIX_VERSION {
        return Err(Error::Format {
            path: path.to_string(),
            offset: 4,
            message: format!("unsupported matrix file version {version}"),
        });
    }
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let expected = rows as u64 * cols as u64 * 8;
    if r.remaining() as u64 != expected {
        let at = if (r.remaining() as u64) < expected {
            (MATRIX_HEADER_LEN + r.remaining()) as u64
        } else {
            MATRIX_HEADER_LEN as u64 + expected
        };
        return Err(Error::Format {
            path: path.to_string(),
            offset: at,
            message: format!(
                "payload holds {} bytes but the header declares {rows}×{cols} values ({expected} bytes)",
                r.remaining()
            ),
        });
    }
    let data = (0..rows * cols).map(|_| r.f64("payload")).collect::<Result<Vec<_>>>()?;
    Matrix::from_vec(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode_matrix(m)?)?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    decode_matrix(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let m = Matrix::from_rows(&[[1.5, -0.0, f64::MIN_POSITIVE], [1e300, -7.25, 0.1]]).unwrap();
        let bytes = encode_matrix(&m).unwrap();
        assert_eq!(bytes.len(), MATRIX_HEADER_LEN + 6 * 8);
        let back = decode_matrix(&bytes, "m").unwrap();
        let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(encode_matrix(&back).unwrap(), bytes);
    }

    #[test]
    fn truncation_reports_offset() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let bytes = encode_matrix(&m).unwrap();
        match decode_matrix(&bytes[..30], "cut.bin") {
            Err(Error::Format { offset, path, .. }) => {
                assert_eq!(offset, 30);
                assert_eq!(path, "cut.bin");
            }
            other => panic!("{other:?}"),
        }
        match decode_matrix(&bytes[..10], "cut.bin") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("{other:?}"),
        }
        assert!(decode_matrix(b"LUQ2\x01\x00", "x").is_err());
    }
}
