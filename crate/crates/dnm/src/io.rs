//! Kernel and label files.
//!
//! Binary kernels (`.mkck`): the magic bytes `MKCK`, a little-endian `u32`
//! version (1), a little-endian `u32` size `n`, then `n·n` little-endian `f64`
//! values in row-major order. CSV kernels hold `n` lines of `n`
//! comma-separated decimals. Label files hold one 1-based cluster id per line.

use std::fs;
use std::path::Path;

use dnm_core::{KernelMatrix, LabelVector};
use nalgebra::DMatrix;

use crate::error::{DnmError, Result};

pub const MKCK_MAGIC: &[u8; 4] = b"MKCK";
pub const MKCK_VERSION: u32 = 1;
const HEADER_LEN: usize = 12;

/// Supported kernel file encodings, chosen by extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFormat {
    Mkck,
    Csv,
}

impl KernelFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mkck" => Some(KernelFormat::Mkck),
            "csv" => Some(KernelFormat::Csv),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            KernelFormat::Mkck => "mkck",
            KernelFormat::Csv => "csv",
        }
    }
}

pub fn encode_mkck(m: &DMatrix<f64>) -> Vec<u8> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "kernel matrices are square");
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    out.extend_from_slice(MKCK_MAGIC);
    out.extend_from_slice(&MKCK_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_mkck(bytes: &[u8]) -> std::result::Result<DMatrix<f64>, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("file has {} bytes, shorter than the header", bytes.len()));
    }
    if &bytes[..4] != MKCK_MAGIC {
        return Err("missing MKCK magic bytes".into());
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != MKCK_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let n = word(8) as usize;
    let expected = n
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| format!("header size {n} overflows"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(format!(
            "header declares n = {n} ({expected} payload bytes) but {} bytes follow",
            payload.len()
        ));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    Ok(DMatrix::from_row_iterator(n, n, values))
}

pub fn encode_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: cannot parse {:?}", line_no + 1, field.trim()))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err("no rows".into());
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(format!("row {} has {} entries, expected {n}", i + 1, r.len()));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

/// Reads a raw square matrix without kernel validation.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let format = KernelFormat::from_path(path)
        .ok_or_else(|| DnmError::format(path, "unknown kernel extension (expected .mkck or .csv)"))?;
    let bytes = fs::read(path).map_err(|e| DnmError::io(path, e))?;
    match format {
        KernelFormat::Mkck => decode_mkck(&bytes),
        KernelFormat::Csv => std::str::from_utf8(&bytes)
            .map_err(|_| "not valid UTF-8".to_string())
            .and_then(decode_csv),
    }
    .map_err(|msg| DnmError::format(path, msg))
}

/// Reads a kernel file and checks it is finite, symmetric and PSD.
pub fn load_kernel(path: &Path) -> Result<KernelMatrix> {
    let m = read_matrix(path)?;
    KernelMatrix::new(m).map_err(|e| DnmError::format(path, e.to_string()))
}

pub fn save_kernel(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let format = KernelFormat::from_path(path)
        .ok_or_else(|| DnmError::format(path, "unknown kernel extension (expected .mkck or .csv)"))?;
    if m.nrows() != m.ncols() {
        return Err(DnmError::format(path, "kernel matrix is not square"));
    }
    let bytes = match format {
        KernelFormat::Mkck => encode_mkck(m),
        KernelFormat::Csv => encode_csv(m).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| DnmError::io(path, e))
}

/// Parses 1-based ids. The cluster count is the largest id.
pub fn decode_labels(text: &str) -> std::result::Result<LabelVector, String> {
    let mut ids = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: usize = line
            .parse()
            .map_err(|_| format!("line {}: {line:?} is not a positive integer", line_no + 1))?;
        if id == 0 {
            return Err(format!("line {}: labels are 1-based", line_no + 1));
        }
        ids.push(id);
    }
    let k = ids.iter().copied().max().ok_or("no labels")?;
    LabelVector::from_one_based(&ids, k).map_err(|e| e.to_string())
}

pub fn encode_labels(labels: &LabelVector) -> String {
    labels
        .to_one_based()
        .iter()
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn load_labels(path: &Path) -> Result<LabelVector> {
    let text = fs::read_to_string(path).map_err(|e| DnmError::io(path, e))?;
    decode_labels(&text).map_err(|msg| DnmError::format(path, msg))
}

pub fn save_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    fs::write(path, encode_labels(labels)).map_err(|e| DnmError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, 0.25, -0.5, 0.25, 2.0, 0.1, -0.5, 0.1, 3.0])
    }

    #[test]
    fn mkck_layout() {
        let bytes = encode_mkck(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]));
        assert_eq!(&bytes[..4], b"MKCK");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(bytes.len(), 12 + 32);
        // Row-major: the second value is entry (0, 1).
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 5.0);
    }

    #[test]
    fn mkck_rejects_bad_headers() {
        let good = encode_mkck(&sample());
        assert!(decode_mkck(&good[..8]).unwrap_err().contains("header"));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_mkck(&bad).unwrap_err().contains("magic"));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode_mkck(&bad).unwrap_err().contains("version"));
        // n = 4 declared, payload for n = 3.
        let mut bad = good.clone();
        bad[8] = 4;
        assert!(decode_mkck(&bad).unwrap_err().contains("declares n = 4"));
        assert!(decode_mkck(&good[..good.len() - 1]).is_err());
    }

    #[test]
    fn csv_examples() {
        let m = decode_csv("1, 0.5\n0.5,2\n\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]));
        assert!(decode_csv("1,2\n3\n").unwrap_err().contains("row 2"));
        assert!(decode_csv("1,x\n2,3\n").unwrap_err().contains("line 1"));
        assert!(decode_csv("").is_err());
        assert!(decode_csv("1,2,3\n4,5,6\n").is_err());
    }

    #[test]
    fn labels_examples() {
        let l = decode_labels("1\n3\n2\n3\n").unwrap();
        assert_eq!(l.as_slice(), &[0, 2, 1, 2]);
        assert_eq!(l.k(), 3);
        assert_eq!(encode_labels(&l), "1\n3\n2\n3\n");
        assert!(decode_labels("1\n0\n").is_err());
        assert!(decode_labels("1\n-2\n").is_err());
        assert!(decode_labels("\n").is_err());
    }

    #[test]
    fn extension_dispatch() {
        assert_eq!(KernelFormat::from_path(Path::new("a/view_1.MKCK")), Some(KernelFormat::Mkck));
        assert_eq!(KernelFormat::from_path(Path::new("view.csv")), Some(KernelFormat::Csv));
        assert_eq!(KernelFormat::from_path(Path::new("view.txt")), None);
    }

    fn symmetric(n: usize, seed: Vec<f64>) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        &a + a.transpose()
    }

    proptest! {
        #[test]
        fn mkck_round_trip_is_bit_exact(n in 1usize..8, seed in prop::collection::vec(-1e6f64..1e6, 1..64)) {
            let m = symmetric(n, seed);
            let back = decode_mkck(&encode_mkck(&m)).unwrap();
            prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn csv_round_trip_is_bit_exact(n in 1usize..8, seed in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..64)) {
            let m = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
            let back = decode_csv(&encode_csv(&m)).unwrap();
            prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
