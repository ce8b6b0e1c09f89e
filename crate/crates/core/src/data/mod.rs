//! Point sets: dense or sparse row storage, loaders, generators and subsampling.

mod io;
mod synthetic;

pub use io::{
    load_dense, load_idx_images, load_idx_labels, load_sparse, read_bin, read_csv, read_idx_images,
    read_sparse, write_bin, write_csv, write_sparse, DenseFormat,
};
pub use synthetic::{gen_synthetic, SyntheticKind, SyntheticSpec};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, sample_without_replacement};

/// One sparse row: strictly increasing column indices with their values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Self {
        SparseRow { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    /// Row-major `n * d` values.
    Dense(Vec<f64>),
    Sparse(Vec<SparseRow>),
}

/// A borrowed view of one point.
#[derive(Clone, Copy, Debug)]
pub enum Point<'a> {
    Dense(&'a [f64]),
    Sparse {
        dim: usize,
        indices: &'a [u32],
        values: &'a [f64],
    },
}

impl Point<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Point::Dense(v) => v.len(),
            Point::Sparse { dim, .. } => *dim,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match *self {
            Point::Dense(v) => v.to_vec(),
            Point::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut out = vec![0.0; dim];
                for (&j, &v) in indices.iter().zip(values) {
                    out[j as usize] = v;
                }
                out
            }
        }
    }
}

/// An immutable set of `n >= 1` points of dimension `d >= 1`.
///
/// Values are held as `f64` in memory. Squared norms are computed once at
/// construction so cosine distances need only a dot product per pair.
#[derive(Clone, Debug)]
pub struct Dataset {
    n: usize,
    d: usize,
    storage: Storage,
    labels: Option<Vec<String>>,
    sq_norms: Vec<f64>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.storage == other.storage
            && self.labels == other.labels
    }
}

impl Dataset {
    pub fn dense(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self::from_storage(n, d, Storage::Dense(values)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} values, expected {d}",
                r.len()
            )));
        }
        Self::dense(rows.len(), d, rows.concat())
    }

    pub fn sparse(d: usize, rows: Vec<SparseRow>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.indices.len() != row.values.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: index/value length mismatch"
                )));
            }
            if row.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: column indices not strictly increasing"
                )));
            }
            if let Some(&last) = row.indices.last() {
                if last as usize >= d {
                    return Err(Error::InvalidDataset(format!(
                        "row {i}: column {last} out of range for d={d}"
                    )));
                }
            }
            if row.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i}: non-finite value")));
            }
        }
        Ok(Self::from_storage(n, d, Storage::Sparse(rows)))
    }

    fn from_storage(n: usize, d: usize, storage: Storage) -> Self {
        let mut ds = Dataset {
            n,
            d,
            storage,
            labels: None,
            sq_norms: Vec::new(),
        };
        ds.sq_norms = (0..n)
            .map(|i| crate::metrics::squared_norm(ds.point(i)))
            .collect();
        ds
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Squared Euclidean norm of point `i`, precomputed.
    pub fn sq_norm(&self, i: usize) -> f64 {
        self.sq_norms[i]
    }

    pub fn point(&self, i: usize) -> Point<'_> {
        match &self.storage {
            Storage::Dense(v) => Point::Dense(&v[i * self.d..(i + 1) * self.d]),
            Storage::Sparse(rows) => Point::Sparse {
                dim: self.d,
                indices: &rows[i].indices,
                values: &rows[i].values,
            },
        }
    }

    pub fn to_dense(&self) -> Dataset {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse(_) => {
                let values = (0..self.n).flat_map(|i| self.point(i).to_dense()).collect();
                let mut ds = Self::from_storage(self.n, self.d, Storage::Dense(values));
                ds.labels = self.labels.clone();
                ds
            }
        }
    }

    /// Sparse copy keeping exactly the nonzero entries.
    pub fn to_sparse(&self) -> Dataset {
        let rows = (0..self.n)
            .map(|i| match self.point(i) {
                Point::Dense(v) => {
                    let (indices, values) = v
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x != 0.0)
                        .map(|(j, &x)| (j as u32, x))
                        .unzip();
                    SparseRow { indices, values }
                }
                Point::Sparse {
                    indices, values, ..
                } => SparseRow::new(indices.to_vec(), values.to_vec()),
            })
            .collect();
        let mut ds = Self::from_storage(self.n, self.d, Storage::Sparse(rows));
        ds.labels = self.labels.clone();
        ds
    }

    /// Keeps the points at `indices` (in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("cannot select zero points".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n: self.n,
            });
        }
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(
                indices
                    .iter()
                    .flat_map(|&i| v[i * self.d..(i + 1) * self.d].iter().copied())
                    .collect(),
            ),
            Storage::Sparse(rows) => {
                Storage::Sparse(indices.iter().map(|&i| rows[i].clone()).collect())
            }
        };
        Ok(Dataset {
            n: indices.len(),
            d: self.d,
            storage,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            sq_norms: indices.iter().map(|&i| self.sq_norms[i]).collect(),
        })
    }
}

/// Keeps `m` points chosen uniformly without replacement, preserving their
/// original relative order.
pub fn subsample(ds: &Dataset, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 || m > ds.n() {
        return Err(Error::InvalidArgument(format!(
            "subsample size {m} must be in 1..={}",
            ds.n()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut keep = sample_without_replacement(&mut rng, ds.n(), m);
    keep.sort_unstable();
    ds.select(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Dataset {
        Dataset::dense(5, 1, vec![0.0, 1.0, 2.0, 3.0, 10.0]).unwrap()
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(Dataset::dense(0, 1, vec![]).is_err());
        assert!(Dataset::dense(1, 0, vec![]).is_err());
        assert!(Dataset::dense(2, 2, vec![1.0; 3]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Dataset::dense(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn sparse_invariants_are_checked() {
        let bad_order = SparseRow::new(vec![2, 1], vec![1.0, 1.0]);
        assert!(Dataset::sparse(3, vec![bad_order]).is_err());
        let dup = SparseRow::new(vec![1, 1], vec![1.0, 1.0]);
        assert!(Dataset::sparse(3, vec![dup]).is_err());
        let oob = SparseRow::new(vec![3], vec![1.0]);
        assert!(Dataset::sparse(3, vec![oob]).is_err());
        let explicit_zero = SparseRow::new(vec![0, 2], vec![0.0, 4.0]);
        assert!(Dataset::sparse(3, vec![explicit_zero]).is_ok());
    }

    #[test]
    fn dense_sparse_conversion() {
        let ds = Dataset::from_rows(&[vec![0.0, 1.5, 0.0], vec![2.0, 0.0, -1.0]]).unwrap();
        let sp = ds.to_sparse();
        assert!(sp.is_sparse());
        match sp.storage() {
            Storage::Sparse(rows) => {
                assert_eq!(rows[0], SparseRow::new(vec![1], vec![1.5]));
                assert_eq!(rows[1], SparseRow::new(vec![0, 2], vec![2.0, -1.0]));
            }
            Storage::Dense(_) => unreachable!(),
        }
        assert_eq!(sp.to_dense(), ds);
        assert_eq!(sp.sq_norm(1), 5.0);
    }

    #[test]
    fn subsample_identity_and_boundaries() {
        let ds = line();
        assert_eq!(subsample(&ds, 5, 9).unwrap(), ds);
        let one = subsample(&ds, 1, 9).unwrap();
        assert_eq!(one.n(), 1);
        assert!(subsample(&ds, 6, 9).is_err());
        assert!(subsample(&ds, 0, 9).is_err());
    }

    #[test]
    fn subsample_is_deterministic_and_order_preserving() {
        let values: Vec<f64> = (0..100).map(f64::from).collect();
        let ds = Dataset::dense(100, 1, values).unwrap();
        let a = subsample(&ds, 17, 1234).unwrap();
        let b = subsample(&ds, 17, 1234).unwrap();
        assert_eq!(a, b);
        let Storage::Dense(v) = a.storage() else {
            unreachable!()
        };
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let c = subsample(&ds, 17, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn labels_follow_selection() {
        let ds = line()
            .with_labels((0..5).map(|i| format!("p{i}")).collect())
            .unwrap();
        let s = ds.select(&[4, 1]).unwrap();
        assert_eq!(s.labels().unwrap(), ["p4", "p1"]);
        assert!(line().with_labels(vec!["x".into()]).is_err());
    }
}
