//! Minimal NumPy `.npy` support: little-endian `float32` (read/write) and
//! `int32` (write only), C order.
//!
//! The header layout follows numpy's own writer for format version 1.0, so a
//! file written here is byte-identical to `np.save` of the same array.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// An n-dimensional `float32` array as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_npy(&bytes)
}

pub fn write_npy(shape: &[usize], data: &[f32], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_npy_f32(shape, data)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_npy_i32(shape: &[usize], data: &[i32], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_shape(shape, data.len())?;
    let mut out = header_bytes("<i4", shape);
    out.reserve(data.len() * 4);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn encode_npy_f32(shape: &[usize], data: &[f32]) -> Result<Vec<u8>> {
    check_shape(shape, data.len())?;
    let mut out = header_bytes("<f4", shape);
    out.reserve(data.len() * 4);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    let n: usize = shape.iter().product();
    if n != len {
        return Err(Error::Shape(format!("shape {shape:?} holds {n} values, buffer has {len}")));
    }
    Ok(())
}

fn header_bytes(descr: &str, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape {
        [n] => format!("({n},)"),
        _ => {
            let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    };
    let mut dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}");
    // magic(6) + version(2) + header_len(2) + dict + '\n' must be a multiple of ALIGN
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format("missing NPY magic".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(Error::Format("truncated NPY header".into()));
            }
            (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
        }
        _ => return Err(Error::Format(format!("unsupported NPY version {major}.{minor}"))),
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(Error::Format("truncated NPY header".into()));
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start])
        .map_err(|_| Error::Format("NPY header is not valid text".into()))?;
    let header = Header::parse(header)?;

    match header.descr.as_str() {
        "<f4" => {}
        "|f4" | "=f4" if cfg!(target_endian = "little") => {}
        other => return Err(Error::Format(format!("unsupported dtype {other:?}, expected '<f4'"))),
    }
    if header.fortran_order {
        return Err(Error::Format("Fortran-ordered arrays are not supported".into()));
    }

    let n: usize = header.shape.iter().product();
    let payload = &bytes[data_start..];
    if payload.len() != n * 4 {
        return Err(Error::Format(format!(
            "payload has {} bytes, shape {:?} needs {}",
            payload.len(),
            header.shape,
            n * 4
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(NpyArray {
        shape: header.shape,
        data,
    })
}

#[derive(Debug)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl Header {
    /// Parses the Python dict literal numpy writes. Only the three standard
    /// keys are understood; anything else is a format error.
    fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("NPY header: {msg}"));
        let body = text
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| bad("not a dict"))?;

        let mut descr = None;
        let mut fortran = None;
        let mut shape = None;
        let mut rest = body.trim_start();
        while !rest.is_empty() {
            let (key, after) = take_quoted(rest).ok_or_else(|| bad("expected quoted key"))?;
            let after = after.trim_start().strip_prefix(':').ok_or_else(|| bad("expected ':'"))?;
            let after = after.trim_start();
            rest = match key {
                "descr" => {
                    let (v, r) = take_quoted(after).ok_or_else(|| bad("descr must be a string"))?;
                    descr = Some(v.to_string());
                    r
                }
                "fortran_order" => {
                    if let Some(r) = after.strip_prefix("False") {
                        fortran = Some(false);
                        r
                    } else if let Some(r) = after.strip_prefix("True") {
                        fortran = Some(true);
                        r
                    } else {
                        return Err(bad("fortran_order must be a bool"));
                    }
                }
                "shape" => {
                    let inner = after.strip_prefix('(').ok_or_else(|| bad("shape must be a tuple"))?;
                    let close = inner.find(')').ok_or_else(|| bad("unterminated shape"))?;
                    let dims = inner[..close]
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.trim_end_matches('L').parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("shape entries must be integers"))?;
                    shape = Some(dims);
                    &inner[close + 1..]
                }
                other => return Err(bad(&format!("unexpected key {other:?}"))),
            };
            rest = rest.trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        }
        Ok(Self {
            descr: descr.ok_or_else(|| bad("missing descr"))?,
            fortran_order: fortran.ok_or_else(|| bad("missing fortran_order"))?,
            shape: shape.ok_or_else(|| bad("missing shape"))?,
        })
    }
}

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let q = s.chars().next().filter(|c| *c == '\'' || *c == '"')?;
    let end = s[1..].find(q)? + 1;
    Some((&s[1..end], &s[end + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fortran_bytes() -> Vec<u8> {
        let mut b = encode_npy_f32(&[2, 2], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let text = String::from_utf8_lossy(&b[10..]).replace("'fortran_order': False", "'fortran_order': True ");
        b.truncate(10);
        b.extend_from_slice(text.as_bytes());
        b
    }

    #[test]
    fn header_is_aligned_and_matches_numpy() {
        let b = encode_npy_f32(&[2, 3], &[0.0; 6]).unwrap();
        let hlen = u16::from_le_bytes([b[8], b[9]]) as usize;
        assert_eq!((10 + hlen) % 64, 0);
        let text = std::str::from_utf8(&b[10..10 + hlen]).unwrap();
        assert!(text.starts_with("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn round_trip_small() {
        let data: Vec<f32> = (0..6).map(|i| i as f32).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.npy");
        write_npy(&[2, 3], &data, &path).unwrap();
        let back = read_npy(&path).unwrap();
        assert_eq!(back.shape, vec![2, 3]);
        assert_eq!(back.data, data);
    }

    #[test]
    fn one_dimensional_shape_uses_trailing_comma() {
        let b = encode_npy_f32(&[3], &[1.0, 2.0, 3.0]).unwrap();
        assert!(String::from_utf8_lossy(&b).contains("'shape': (3,)"));
        assert_eq!(parse_npy(&b).unwrap().shape, vec![3]);
    }

    #[test]
    fn fortran_order_is_rejected() {
        assert!(matches!(parse_npy(&fortran_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_dtype_and_magic_are_rejected() {
        let mut b = encode_npy_f32(&[1], &[1.0]).unwrap();
        let text = String::from_utf8_lossy(&b[10..]).replace("<f4", "<f8");
        b.truncate(10);
        b.extend_from_slice(text.as_bytes());
        assert!(matches!(parse_npy(&b), Err(Error::Format(_))));
        assert!(matches!(parse_npy(b"NOTNPY0000"), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut b = encode_npy_f32(&[4], &[1.0; 4]).unwrap();
        b.pop();
        assert!(matches!(parse_npy(&b), Err(Error::Format(_))));
    }

    #[test]
    fn token_feature_shape_is_accepted() {
        let data = vec![0.25f32; 577 * 1024];
        let b = encode_npy_f32(&[577, 1024], &data).unwrap();
        let arr = parse_npy(&b).unwrap();
        assert_eq!(arr.shape, vec![577, 1024]);
        assert_eq!(arr.data.len(), 577 * 1024);
    }

    #[test]
    fn writes_int32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.npy");
        write_npy_i32(&[2], &[-1, 7], &path).unwrap();
        let b = std::fs::read(&path).unwrap();
        assert!(String::from_utf8_lossy(&b).contains("'descr': '<i4'"));
        assert_eq!(&b[b.len() - 8..], &[0xff, 0xff, 0xff, 0xff, 7, 0, 0, 0]);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bits in proptest::collection::vec(any::<u32>(), 1..64), split in 1usize..8) {
            // arbitrary bit patterns, including NaN payloads, survive unchanged
            let data: Vec<f32> = bits.iter().map(|b| f32::from_bits(*b)).collect();
            let shape = if data.len().is_multiple_of(split) { vec![split, data.len() / split] } else { vec![data.len()] };
            let enc = encode_npy_f32(&shape, &data).unwrap();
            let dec = parse_npy(&enc).unwrap();
            prop_assert_eq!(dec.shape, shape);
            let back: Vec<u32> = dec.data.iter().map(|f| f.to_bits()).collect();
            prop_assert_eq!(back, bits);
        }
    }
}
