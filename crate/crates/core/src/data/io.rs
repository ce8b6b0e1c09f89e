//! On-disk formats.
//!
//! * CSV: one point per line, comma-separated reals, no header.
//! * Binary dense ("MEDB"): magic `MEDB`, a version byte, `n` and `d` as
//!   little-endian `u64`, then `n * d` little-endian values in row-major
//!   order. Version 1 stores `f32` values; version 2 stores `f64` values and
//!   is written only when some value is not exactly representable as `f32`.
//! * Sparse triplets: header line `n d nnz`, then `nnz` lines `row col value`
//!   with 0-based indices, in any order.
//! * IDX (MNIST): big-endian `u8` image tensors, optionally gzipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::{Dataset, SparseRow, Storage};
use crate::error::{Error, Result};

const BIN_MAGIC: &[u8; 4] = b"MEDB";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenseFormat {
    Csv,
    Bin,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_dense(path: impl AsRef<Path>, format: DenseFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let reader = open(path)?;
    match format {
        DenseFormat::Csv => read_csv(reader, &name),
        DenseFormat::Bin => read_bin(reader, &name),
    }
}

pub fn read_csv<R: BufRead>(reader: R, source_name: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut d = 0;
    let mut n = 0;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(source_name, lineno, format!("non-numeric token {tok:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("non-finite value {tok:?}"),
                ));
            }
            values.push(v);
        }
        let width = values.len() - before;
        if n == 0 {
            d = width;
        } else if width != d {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("row has {width} values, expected {d}"),
            ));
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::parse(source_name, 0, "empty file"));
    }
    Dataset::dense(n, d, values)
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for i in 0..ds.n() {
        let row = ds.point(i).to_dense();
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_bin<R: Read>(mut reader: R, source_name: &str) -> Result<Dataset> {
    let truncated =
        |what: &str| Error::parse(source_name, 0, format!("truncated file: missing {what}"));
    let mut header = [0u8; 21];
    reader
        .read_exact(&mut header)
        .map_err(|_| truncated("header"))?;
    if &header[..4] != BIN_MAGIC {
        return Err(Error::parse(source_name, 0, "bad magic, expected MEDB"));
    }
    let version = header[4];
    let n = u64::from_le_bytes(header[5..13].try_into().unwrap());
    let d = u64::from_le_bytes(header[13..21].try_into().unwrap());
    let width = match version {
        1 => 4,
        2 => 8,
        v => {
            return Err(Error::parse(
                source_name,
                0,
                format!("unsupported version {v}"),
            ))
        }
    };
    let count = n
        .checked_mul(d)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::parse(source_name, 0, "n*d overflows"))?;
    let mut payload = vec![0u8; count * width];
    reader
        .read_exact(&mut payload)
        .map_err(|_| truncated("values"))?;
    if reader
        .read(&mut [0u8; 1])
        .map_err(|e| Error::parse(source_name, 0, e.to_string()))?
        != 0
    {
        return Err(Error::parse(source_name, 0, "trailing bytes after values"));
    }
    let values = if version == 1 {
        payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect()
    } else {
        payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    Dataset::dense(n as usize, d as usize, values)
        .map_err(|e| Error::parse(source_name, 0, e.to_string()))
}

/// Writes the binary dense format; sparse datasets are densified.
pub fn write_bin(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_bin_to(ds, &mut w).map_err(|e| Error::io(path, e))
}

fn write_bin_to<W: Write>(ds: &Dataset, w: &mut W) -> std::io::Result<()> {
    let dense = ds.to_dense();
    let Storage::Dense(values) = dense.storage() else {
        unreachable!("to_dense returns dense storage")
    };
    let fits_f32 = values.iter().all(|&v| f64::from(v as f32) == v);
    w.write_all(BIN_MAGIC)?;
    w.write_all(&[if fits_f32 { 1 } else { 2 }])?;
    w.write_all(&(ds.n() as u64).to_le_bytes())?;
    w.write_all(&(ds.dim() as u64).to_le_bytes())?;
    for &v in values {
        if fits_f32 {
            w.write_all(&(v as f32).to_le_bytes())?;
        } else {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn load_sparse(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_sparse(open(path)?, &path.display().to_string())
}

pub fn read_sparse<R: BufRead>(reader: R, source_name: &str) -> Result<Dataset> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 0, "empty file"))?;
    let header = header.map_err(|e| Error::parse(source_name, hline, e.to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |tok: &str| {
        tok.parse::<usize>()
            .map_err(|_| Error::parse(source_name, hline, format!("bad header field {tok:?}")))
    };
    let [n, d, nnz] = match fields.as_slice() {
        [a, b, c] => [parse_count(a)?, parse_count(b)?, parse_count(c)?],
        _ => return Err(Error::parse(source_name, hline, "header must be `n d nnz`")),
    };
    if n == 0 || d == 0 {
        return Err(Error::parse(source_name, hline, "n and d must be positive"));
    }
    if u32::try_from(d).is_err() {
        return Err(Error::parse(source_name, hline, "d exceeds u32 range"));
    }

    let mut entries: Vec<Vec<(u32, f64, usize)>> = vec![Vec::new(); n];
    let mut seen = 0;
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        seen += 1;
        if seen > nnz {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("nnz mismatch: more than {nnz} entries"),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [r, c, v] = toks.as_slice() else {
            return Err(Error::parse(
                source_name,
                lineno,
                "expected `row col value`",
            ));
        };
        let bad = |t: &str| Error::parse(source_name, lineno, format!("non-numeric token {t:?}"));
        let r: usize = r.parse().map_err(|_| bad(r))?;
        let c: usize = c.parse().map_err(|_| bad(c))?;
        let v: f64 = v.parse().map_err(|_| bad(v))?;
        if r >= n || c >= d {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("index ({r},{c}) out of range for {n}x{d}"),
            ));
        }
        if !v.is_finite() {
            return Err(Error::parse(source_name, lineno, "non-finite value"));
        }
        entries[r].push((c as u32, v, lineno));
    }
    if seen != nnz {
        return Err(Error::parse(
            source_name,
            0,
            format!("nnz mismatch: header says {nnz}, found {seen}"),
        ));
    }

    let mut rows = Vec::with_capacity(n);
    for (r, mut row) in entries.into_iter().enumerate() {
        row.sort_unstable_by_key(|&(c, _, _)| c);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(
                source_name,
                w[1].2,
                format!("duplicate entry ({r},{})", w[1].0),
            ));
        }
        let (indices, values) = row.into_iter().map(|(c, v, _)| (c, v)).unzip();
        rows.push(SparseRow { indices, values });
    }
    Dataset::sparse(d, rows)
}

/// Writes the triplet format. Dense datasets contribute their nonzeros only.
pub fn write_sparse(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let sparse = ds.to_sparse();
    let Storage::Sparse(rows) = sparse.storage() else {
        unreachable!("to_sparse returns sparse storage")
    };
    let nnz: usize = rows.iter().map(SparseRow::nnz).sum();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {} {}", ds.n(), ds.dim(), nnz).map_err(io)?;
    for (r, row) in rows.iter().enumerate() {
        for (&c, &v) in row.indices.iter().zip(&row.values) {
            writeln!(w, "{r} {c} {v}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    open(path)?
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Loads an IDX3 `u8` image file (plain or gzipped) as an `n x (rows*cols)`
/// dense dataset.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_idx_images(&read_maybe_gz(path)?, &path.display().to_string())
}

pub fn read_idx_images(bytes: &[u8], source_name: &str) -> Result<Dataset> {
    if bytes.len() < 16 || bytes[..4] != [0, 0, 0x08, 3] {
        return Err(Error::parse(source_name, 0, "not an IDX3 u8 file"));
    }
    let be = |k: usize| u32::from_be_bytes(bytes[k..k + 4].try_into().unwrap()) as usize;
    let (n, rows, cols) = (be(4), be(8), be(12));
    let d = rows * cols;
    let body = &bytes[16..];
    if body.len() != n * d {
        return Err(Error::parse(
            source_name,
            0,
            format!("expected {} pixel bytes, found {}", n * d, body.len()),
        ));
    }
    Dataset::dense(n, d, body.iter().map(|&b| f64::from(b)).collect())
}

/// Loads an IDX1 `u8` label file (plain or gzipped).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read_maybe_gz(path)?;
    let name = path.display().to_string();
    if bytes.len() < 8 || bytes[..4] != [0, 0, 0x08, 1] {
        return Err(Error::parse(&name, 0, "not an IDX1 u8 file"));
    }
    let n = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + n {
        return Err(Error::parse(&name, 0, "label count does not match header"));
    }
    Ok(bytes[8..].to_vec())
}

// Used by the binary round-trip tests without touching the filesystem.
#[cfg(test)]
pub(crate) fn bin_bytes(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    write_bin_to(ds, &mut out).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv(s: &str) -> Result<Dataset> {
        read_csv(s.as_bytes(), "test.csv")
    }

    fn sparse(s: &str) -> Result<Dataset> {
        read_sparse(s.as_bytes(), "test.txt")
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn csv_single_column() {
        let ds = csv("0\n1\n2\n3\n10\n").unwrap();
        assert_eq!((ds.n(), ds.dim()), (5, 1));
        assert_eq!(
            ds.storage(),
            &Storage::Dense(vec![0.0, 1.0, 2.0, 3.0, 10.0])
        );
    }

    #[test]
    fn csv_errors_name_the_line() {
        assert_eq!(line_of(csv("1,2\n3,4\n5,6,7\n").unwrap_err()), 3);
        assert_eq!(line_of(csv("1,2\n3,x\n").unwrap_err()), 2);
        assert_eq!(line_of(csv("").unwrap_err()), 0);
        assert_eq!(line_of(csv("\n  \n").unwrap_err()), 0);
        assert_eq!(line_of(csv("1\nNaN\n").unwrap_err()), 2);
    }

    #[test]
    fn bin_header_and_values() {
        let mut bytes = b"MEDB\x01".to_vec();
        bytes.extend(2u64.to_le_bytes());
        bytes.extend(3u64.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.5, -6.0] {
            bytes.extend(v.to_le_bytes());
        }
        let ds = read_bin(bytes.as_slice(), "x.bin").unwrap();
        assert_eq!((ds.n(), ds.dim()), (2, 3));
        assert_eq!(ds.point(1).to_dense(), vec![4.0, 5.5, -6.0]);
        assert_eq!(bin_bytes(&ds), bytes);
    }

    #[test]
    fn bin_rejects_corruption() {
        let ds = Dataset::dense(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let good = bin_bytes(&ds);
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(read_bin(bad_magic.as_slice(), "b").is_err());
        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(read_bin(bad_version.as_slice(), "b").is_err());
        assert!(read_bin(&good[..good.len() - 1], "b").is_err());
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(read_bin(trailing.as_slice(), "b").is_err());
    }

    #[test]
    fn bin_uses_f64_payload_when_needed() {
        let ds = Dataset::dense(1, 2, vec![0.1, 0.5]).unwrap();
        let bytes = bin_bytes(&ds);
        assert_eq!(bytes[4], 2);
        assert_eq!(read_bin(bytes.as_slice(), "b").unwrap(), ds);
    }

    #[test]
    fn sparse_examples() {
        let ds = sparse("2 3 2\n0 1 5.0\n1 2 1.0").unwrap();
        let Storage::Sparse(rows) = ds.storage() else {
            panic!()
        };
        assert_eq!(rows[0], SparseRow::new(vec![1], vec![5.0]));
        assert_eq!(rows[1], SparseRow::new(vec![2], vec![1.0]));

        let zero = sparse("1 4 0").unwrap();
        assert_eq!((zero.n(), zero.dim()), (1, 4));
        assert_eq!(zero.point(0).to_dense(), vec![0.0; 4]);
    }

    #[test]
    fn sparse_sorts_columns() {
        let ds = sparse("1 5 3\n0 4 1\n0 0 2\n0 2 3\n").unwrap();
        let Storage::Sparse(rows) = ds.storage() else {
            panic!()
        };
        assert_eq!(rows[0].indices, vec![0, 2, 4]);
        assert_eq!(rows[0].values, vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn sparse_errors() {
        assert_eq!(line_of(sparse("2 3 2\n0 1 5.0\n0 1 6.0\n").unwrap_err()), 3);
        assert_eq!(line_of(sparse("2 3 1\n2 0 1.0\n").unwrap_err()), 2);
        assert_eq!(line_of(sparse("2 3 1\n0 3 1.0\n").unwrap_err()), 2);
        assert!(sparse("2 3 2\n0 1 5.0\n").is_err());
        assert!(sparse("2 3 1\n0 1 5.0\n1 1 1.0\n").is_err());
        assert!(sparse("2 3\n").is_err());
        assert!(sparse("").is_err());
    }

    #[test]
    fn idx_images() {
        let mut bytes = vec![0, 0, 8, 3];
        for v in [2u32, 2, 2] {
            bytes.extend(v.to_be_bytes());
        }
        bytes.extend([0, 1, 2, 3, 255, 0, 0, 7]);
        let ds = read_idx_images(&bytes, "idx").unwrap();
        assert_eq!((ds.n(), ds.dim()), (2, 4));
        assert_eq!(ds.point(1).to_dense(), vec![255.0, 0.0, 0.0, 7.0]);
        assert!(read_idx_images(&bytes[..bytes.len() - 1], "idx").is_err());
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::from_rows(&[vec![0.25, -1.0, 0.0], vec![1e-3, 0.0, 7.5]]).unwrap();

        let p = dir.path().join("a.csv");
        write_csv(&ds, &p).unwrap();
        assert_eq!(load_dense(&p, DenseFormat::Csv).unwrap(), ds);

        let p = dir.path().join("a.bin");
        write_bin(&ds, &p).unwrap();
        assert_eq!(load_dense(&p, DenseFormat::Bin).unwrap(), ds);

        let p = dir.path().join("a.txt");
        write_sparse(&ds, &p).unwrap();
        assert_eq!(load_sparse(&p).unwrap(), ds.to_sparse());

        let missing = load_dense(dir.path().join("nope.csv"), DenseFormat::Csv);
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn bin_round_trip_is_exact(
            (n, d, values) in (1usize..6, 1usize..6).prop_flat_map(|(n, d)| {
                (Just(n), Just(d), prop::collection::vec(-1e6f64..1e6, n * d))
            }),
            as_f32 in any::<bool>(),
        ) {
            let values = if as_f32 {
                values.iter().map(|&v| f64::from(v as f32)).collect()
            } else {
                values
            };
            let ds = Dataset::dense(n, d, values).unwrap();
            let back = read_bin(bin_bytes(&ds).as_slice(), "p").unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn csv_round_trip_is_exact(values in prop::collection::vec(-1e9f64..1e9, 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("x.csv");
            let ds = Dataset::dense(values.len(), 1, values).unwrap();
            write_csv(&ds, &p).unwrap();
            prop_assert_eq!(load_dense(&p, DenseFormat::Csv).unwrap(), ds);
        }
    }
}
