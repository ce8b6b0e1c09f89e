//! Distance functions and exact centrality.
//!
//! All kernels accumulate in `f64` across eight lanes: column `j` of the
//! first `d - d % 8` columns goes to lane `j % 8`, the remaining columns to a
//! tail sum, and the lanes are combined in a fixed tree. Sparse rows feed the
//! same lanes in ascending column order, so a sparse point and its dense copy
//! produce bit-identical distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::error::{Error, Result};

const LANES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2,
    /// `1 - x.y / (|x| |y|)`. A zero vector is at distance 1 from any nonzero
    /// vector and 0 from another zero vector.
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::L1, Metric::L2, Metric::Cosine];

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Cosine => "cosine",
        }
    }

    /// Whether the triangle inequality holds (and so the bounds in
    /// [`crate::analysis::rho_bounds_check`] apply).
    pub fn is_triangle(self) -> bool {
        !matches!(self, Metric::Cosine)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Clone, Copy)]
struct LaneSum {
    lanes: [f64; LANES],
    tail: f64,
    main: usize,
}

impl LaneSum {
    fn new(dim: usize) -> Self {
        LaneSum {
            lanes: [0.0; LANES],
            tail: 0.0,
            main: dim - dim % LANES,
        }
    }

    #[inline]
    fn add(&mut self, col: usize, v: f64) {
        if col < self.main {
            self.lanes[col % LANES] += v;
        } else {
            self.tail += v;
        }
    }

    fn finish(self) -> f64 {
        let l = self.lanes;
        (((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]))) + self.tail
    }
}

#[inline]
fn dense_lanes(x: &[f64], y: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = LaneSum::new(x.len());
    let xs = x.chunks_exact(LANES);
    let ys = y.chunks_exact(LANES);
    let (xt, yt) = (xs.remainder(), ys.remainder());
    for (a, b) in xs.zip(ys) {
        for k in 0..LANES {
            acc.lanes[k] += f(a[k], b[k]);
        }
    }
    for (&a, &b) in xt.iter().zip(yt) {
        acc.tail += f(a, b);
    }
    acc.finish()
}

/// Sums `f(x_j, y_j)` over the union of stored columns, missing entries
/// being zero. `f(0, 0)` must be zero.
fn merged_lanes(x: Point<'_>, y: Point<'_>, f: impl Fn(f64, f64) -> f64) -> f64 {
    let dim = x.dim();
    match (x, y) {
        (Point::Dense(a), Point::Dense(b)) => dense_lanes(a, b, f),
        (
            Point::Sparse {
                indices: ia,
                values: va,
                ..
            },
            Point::Sparse {
                indices: ib,
                values: vb,
                ..
            },
        ) => {
            let mut acc = LaneSum::new(dim);
            let (mut p, mut q) = (0, 0);
            while p < ia.len() || q < ib.len() {
                let ca = ia.get(p).copied().unwrap_or(u32::MAX);
                let cb = ib.get(q).copied().unwrap_or(u32::MAX);
                if ca == cb {
                    acc.add(ca as usize, f(va[p], vb[q]));
                    p += 1;
                    q += 1;
                } else if ca < cb {
                    acc.add(ca as usize, f(va[p], 0.0));
                    p += 1;
                } else {
                    acc.add(cb as usize, f(0.0, vb[q]));
                    q += 1;
                }
            }
            acc.finish()
        }
        (Point::Dense(a), s @ Point::Sparse { .. }) => dense_lanes(a, &s.to_dense(), f),
        (s @ Point::Sparse { .. }, Point::Dense(b)) => dense_lanes(&s.to_dense(), b, f),
    }
}

/// Sparse dot products only visit shared columns; all other products are zero.
fn dot(x: Point<'_>, y: Point<'_>) -> f64 {
    match (x, y) {
        (
            Point::Sparse {
                dim,
                indices: ia,
                values: va,
            },
            Point::Sparse {
                indices: ib,
                values: vb,
                ..
            },
        ) => {
            let mut acc = LaneSum::new(dim);
            let (mut p, mut q) = (0, 0);
            while p < ia.len() && q < ib.len() {
                match ia[p].cmp(&ib[q]) {
                    std::cmp::Ordering::Equal => {
                        acc.add(ia[p] as usize, va[p] * vb[q]);
                        p += 1;
                        q += 1;
                    }
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                }
            }
            acc.finish()
        }
        _ => merged_lanes(x, y, |a, b| a * b),
    }
}

pub(crate) fn squared_norm(x: Point<'_>) -> f64 {
    match x {
        Point::Dense(a) => dense_lanes(a, a, |u, v| u * v),
        Point::Sparse {
            dim,
            indices,
            values,
        } => {
            let mut acc = LaneSum::new(dim);
            for (&j, &v) in indices.iter().zip(values) {
                acc.add(j as usize, v * v);
            }
            acc.finish()
        }
    }
}

fn cosine_from_parts(dot: f64, sq_x: f64, sq_y: f64) -> f64 {
    match (sq_x == 0.0, sq_y == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        // sqrt(s * s) == s exactly, so a nonzero point is at distance 0 from itself.
        (false, false) => (1.0 - dot / (sq_x * sq_y).sqrt()).clamp(0.0, 2.0),
    }
}

#[inline]
fn dist_unchecked(metric: Metric, x: Point<'_>, y: Point<'_>) -> f64 {
    match metric {
        Metric::L1 => merged_lanes(x, y, |a, b| (a - b).abs()),
        Metric::L2 => merged_lanes(x, y, |a, b| (a - b) * (a - b)).sqrt(),
        Metric::Cosine => cosine_from_parts(dot(x, y), squared_norm(x), squared_norm(y)),
    }
}

pub fn dist(metric: Metric, x: Point<'_>, y: Point<'_>) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    Ok(dist_unchecked(metric, x, y))
}

/// Random access to the distances between the points of a finite set.
///
/// The algorithms in this crate only touch data through this trait, one call
/// per distance computation. `distance(i, j)` need not be symmetric.
pub trait Distances: Sync {
    fn len(&self) -> usize;

    fn distance(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dataset paired with a metric.
#[derive(Clone, Copy, Debug)]
pub struct MetricSpace<'a> {
    data: &'a Dataset,
    metric: Metric,
}

impl<'a> MetricSpace<'a> {
    pub fn new(data: &'a Dataset, metric: Metric) -> Self {
        MetricSpace { data, metric }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }
}

impl Distances for MetricSpace<'_> {
    fn len(&self) -> usize {
        self.data.n()
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        let (x, y) = (self.data.point(i), self.data.point(j));
        match self.metric {
            Metric::Cosine => {
                cosine_from_parts(dot(x, y), self.data.sq_norm(i), self.data.sq_norm(j))
            }
            m => dist_unchecked(m, x, y),
        }
    }
}

/// Sum of `distance(i, j)` over `j = 0..n` in ascending order, divided by `n`.
pub(crate) fn centrality<D: Distances + ?Sized>(space: &D, i: usize) -> f64 {
    let n = space.len();
    (0..n).fold(0.0, |acc, j| acc + space.distance(i, j)) / n as f64
}

/// Exact average distance from point `i` to all `n` points, itself included.
pub fn theta_exact(ds: &Dataset, metric: Metric, i: usize) -> Result<f64> {
    if i >= ds.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n: ds.n(),
        });
    }
    Ok(centrality(&MetricSpace::new(ds, metric), i))
}
