//! Array files: a short text header followed by little-endian `f64`s.
//!
//! ```text
//! penopt-array 1
//! kind real            (or complex: interleaved re, im)
//! dims 51 51           (first index fastest)
//! spacing 0.02 0.02
//! origin 0 0
//! end
//! <payload>
//! ```
//!
//! The payload starts right after the newline of the `end` line and holds
//! `prod(dims)` values (twice that many doubles for complex arrays).

use std::fs;
use std::io::Write;
use std::path::Path;

use penopt::Complex64;

use crate::error::{ExpError, Result};

const MAGIC: &str = "penopt-array 1";

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl ArrayData {
    pub fn len(&self) -> usize {
        match self {
            ArrayData::Real(v) => v.len(),
            ArrayData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayFile {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub data: ArrayData,
}

impl ArrayFile {
    pub fn real(dims: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>, data: Vec<f64>) -> Self {
        Self { dims, spacing, origin, data: ArrayData::Real(data) }
    }

    pub fn complex(dims: Vec<usize>, data: Vec<Complex64>) -> Self {
        let n = dims.len();
        Self { dims, spacing: vec![1.0; n], origin: vec![0.0; n], data: ArrayData::Complex(data) }
    }

    pub fn into_real(self) -> Result<Vec<f64>> {
        match self.data {
            ArrayData::Real(v) => Ok(v),
            ArrayData::Complex(_) => Err(ExpError::Format("expected a real array".into())),
        }
    }

    pub fn into_complex(self) -> Result<Vec<Complex64>> {
        match self.data {
            ArrayData::Complex(v) => Ok(v),
            ArrayData::Real(_) => Err(ExpError::Format("expected a complex array".into())),
        }
    }

    fn join<T: std::fmt::Display>(v: &[T]) -> String {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let kind = match self.data {
            ArrayData::Real(_) => "real",
            ArrayData::Complex(_) => "complex",
        };
        let mut out = format!(
            "{MAGIC}\nkind {kind}\ndims {}\nspacing {}\norigin {}\nend\n",
            Self::join(&self.dims),
            Self::join(&self.spacing),
            Self::join(&self.origin)
        )
        .into_bytes();
        match &self.data {
            ArrayData::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ArrayData::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| ExpError::Format(format!("array file: {m}"));
        let mut pos = 0;
        let mut lines = vec![];
        loop {
            let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))? + pos;
            let line = std::str::from_utf8(&bytes[pos..end]).map_err(|_| bad("header is not UTF-8"))?.trim().to_string();
            pos = end + 1;
            if line == "end" {
                break;
            }
            lines.push(line);
            if lines.len() > 16 {
                return Err(bad("header too long"));
            }
        }
        if lines.first().map(String::as_str) != Some(MAGIC) {
            return Err(bad("missing magic line"));
        }
        let field = |key: &str| -> Result<Vec<&str>> {
            let line = lines.iter().find(|l| l.split_whitespace().next() == Some(key)).ok_or_else(|| bad(&format!("missing `{key}`")))?;
            Ok(line.split_whitespace().skip(1).collect())
        };
        let nums = |key: &str| -> Result<Vec<f64>> { field(key)?.iter().map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad number in `{key}`")))).collect() };
        let dims: Vec<usize> = field("dims")?.iter().map(|s| s.parse().map_err(|_| bad("bad dimension"))).collect::<Result<_>>()?;
        let spacing = nums("spacing")?;
        let origin = nums("origin")?;
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(bad("dims, spacing and origin disagree in length"));
        }
        let count: usize = dims.iter().product();
        let payload = &bytes[pos..];
        let doubles: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if !payload.len().is_multiple_of(8) {
            return Err(bad("payload is not a whole number of doubles"));
        }
        let data = match field("kind")?.first().copied() {
            Some("real") if doubles.len() == count => ArrayData::Real(doubles),
            Some("complex") if doubles.len() == 2 * count => ArrayData::Complex(doubles.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()),
            Some("real") | Some("complex") => return Err(bad("payload length does not match dims")),
            _ => return Err(bad("unknown kind")),
        };
        Ok(Self { dims, spacing, origin, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_real_and_complex() {
        let a = ArrayFile::real(vec![3, 2], vec![0.5, 0.25], vec![0.0, -1.0], vec![1.0, -2.5, 3.0, f64::MIN_POSITIVE, 1e300, 0.1]);
        assert_eq!(ArrayFile::from_bytes(&a.to_bytes()).unwrap(), a);
        let c = ArrayFile::complex(vec![2], vec![Complex64::new(1.0, -1.0), Complex64::new(0.3, 7.0)]);
        let back = ArrayFile::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.into_complex().unwrap().len(), 2);
    }

    #[test]
    fn header_layout_is_plain_text() {
        let a = ArrayFile::real(vec![2], vec![1.0], vec![0.0], vec![1.0, 2.0]);
        let bytes = a.to_bytes();
        let text = String::from_utf8_lossy(&bytes[..bytes.len() - 16]);
        assert_eq!(text, "penopt-array 1\nkind real\ndims 2\nspacing 1\norigin 0\nend\n");
        assert_eq!(&bytes[bytes.len() - 8..], &2.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_truncated_payload() {
        let a = ArrayFile::real(vec![2], vec![1.0], vec![0.0], vec![1.0, 2.0]);
        let mut bytes = a.to_bytes();
        bytes.truncate(bytes.len() - 8);
        assert!(ArrayFile::from_bytes(&bytes).is_err());
        assert!(ArrayFile::from_bytes(b"nonsense\nend\n").is_err());
    }
}
