//! Raw complex-field dump.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 4    | magic `CF2D`                    |
//! | 4      | 4    | `u32` width                     |
//! | 8      | 4    | `u32` height                    |
//! | 12     | 4    | `u32` layout, `0` = interleaved |
//! | 16     | 8·wh | `f32` re, `f32` im, row-major   |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::{ComplexField, Space};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CF2D";
pub const LAYOUT_INTERLEAVED: u32 = 0;
pub const HEADER_LEN: usize = 16;

pub fn write_cf2d<W: Write>(field: &ComplexField, mut out: W) -> Result<()> {
    let (w, h) = field.dims();
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("dimension {v} exceeds u32")))
    };
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * w * h);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&to_u32(w)?.to_le_bytes());
    buf.extend_from_slice(&to_u32(h)?.to_le_bytes());
    buf.extend_from_slice(&LAYOUT_INTERLEAVED.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&(v.re as f32).to_le_bytes());
        buf.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a dump. The format does not record the domain, so the caller says
/// which space the samples belong to.
pub fn read_cf2d<R: Read>(mut input: R, space: Space) -> Result<ComplexField> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::MalformedInput("missing CF2D magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (w, h, layout) = (word(4) as usize, word(8) as usize, word(12));
    if layout != LAYOUT_INTERLEAVED {
        return Err(Error::MalformedInput(format!("unsupported CF2D layout {layout}")));
    }
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 8 * w * h {
        return Err(Error::MalformedInput(format!(
            "CF2D body holds {} bytes, expected {} for {w}x{h}",
            body.len(),
            8 * w * h
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ComplexField::new(w, h, values, space)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_bit_exact() {
        let field = ComplexField::from_fn(3, 2, Space::Spatial, |x, y| {
            Complex64::new(x as f64, -(y as f64) * 0.5)
        });
        let mut bytes = Vec::new();
        write_cf2d(&field, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 16 + 8 * 6);
        assert_eq!(&bytes[..16], b"CF2D\x03\0\0\0\x02\0\0\0\0\0\0\0");
        // second sample: x=1, y=0 -> (1.0, -0.0)
        assert_eq!(&bytes[24..28], &1.0f32.to_le_bytes());
    }

    #[test]
    fn round_trip_at_f32_precision() {
        let field = ComplexField::from_fn(5, 4, Space::Fourier, |x, y| {
            Complex64::new((x as f64 + 0.1).sin(), (y as f64 * 0.7).cos())
        });
        let mut bytes = Vec::new();
        write_cf2d(&field, &mut bytes).unwrap();
        let back = read_cf2d(bytes.as_slice(), Space::Fourier).unwrap();
        assert_eq!(back.dims(), (5, 4));
        for (a, b) in field.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_truncated_and_bad_magic() {
        let field = ComplexField::zeros(2, 2, Space::Spatial);
        let mut bytes = Vec::new();
        write_cf2d(&field, &mut bytes).unwrap();
        assert!(read_cf2d(&bytes[..bytes.len() - 1], Space::Spatial).is_err());
        bytes[0] = b'X';
        assert!(read_cf2d(bytes.as_slice(), Space::Spatial).is_err());
    }
}
