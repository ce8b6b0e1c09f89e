use std::f64::consts::TAU;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Cluster centres drawn from a standard normal per coordinate; point `i`
    /// belongs to cluster `i % clusters` and is its centre plus
    /// `spread * N(0, I)`.
    GaussianClusters { clusters: usize, spread: f64 },
    /// The given values as one-dimensional points.
    Line1d { values: Vec<f64> },
    /// Point 0 at the origin, points `1..n` evenly spaced on the unit circle
    /// starting at angle 0, counter-clockwise.
    UnitCirclePlusCenter,
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::GaussianClusters { .. } => "gaussian-clusters",
            SyntheticKind::Line1d { .. } => "line-1d",
            SyntheticKind::UnitCirclePlusCenter => "unit-circle-plus-center",
        }
    }
}

/// Parses a kind name with default parameters (one cluster of spread 1, an
/// empty value list).
impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-clusters" => Ok(SyntheticKind::GaussianClusters {
                clusters: 1,
                spread: 1.0,
            }),
            "line-1d" => Ok(SyntheticKind::Line1d { values: Vec::new() }),
            "unit-circle-plus-center" | "unit-circle" => Ok(SyntheticKind::UnitCirclePlusCenter),
            other => Err(Error::InvalidArgument(format!(
                "unsupported synthetic kind {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn gaussian_clusters(n: usize, d: usize, clusters: usize, spread: f64, seed: u64) -> Self {
        SyntheticSpec {
            kind: SyntheticKind::GaussianClusters { clusters, spread },
            n,
            d,
            seed,
        }
    }

    pub fn line_1d(values: &[f64]) -> Self {
        SyntheticSpec {
            kind: SyntheticKind::Line1d {
                values: values.to_vec(),
            },
            n: values.len(),
            d: 1,
            seed: 0,
        }
    }

    pub fn unit_circle(n: usize) -> Self {
        SyntheticSpec {
            kind: SyntheticKind::UnitCirclePlusCenter,
            n,
            d: 2,
            seed: 0,
        }
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let SyntheticSpec { n, d, seed, .. } = *spec;
    match &spec.kind {
        SyntheticKind::GaussianClusters { clusters, spread } => {
            if *clusters == 0 || !spread.is_finite() || *spread < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "gaussian-clusters needs clusters >= 1 and finite spread >= 0, got {clusters}, {spread}"
                )));
            }
            let mut rng = rng_from_seed(seed);
            let centers: Vec<f64> = (0..clusters * d)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let mut values = Vec::with_capacity(n * d);
            for i in 0..n {
                let c = &centers[(i % clusters) * d..(i % clusters + 1) * d];
                values.extend(
                    c.iter()
                        .map(|&x| x + spread * rng.sample::<f64, _>(StandardNormal)),
                );
            }
            Dataset::dense(n, d, values)
        }
        SyntheticKind::Line1d { values } => {
            if values.len() != n || d != 1 {
                return Err(Error::InvalidArgument(format!(
                    "line-1d needs d = 1 and n = number of values ({}), got n={n}, d={d}",
                    values.len()
                )));
            }
            Dataset::dense(n, 1, values.clone())
        }
        SyntheticKind::UnitCirclePlusCenter => {
            if n < 4 {
                return Err(Error::InvalidArgument(format!(
                    "unit-circle needs n >= 4, got {n}"
                )));
            }
            if d != 2 {
                return Err(Error::InvalidArgument(format!(
                    "unit-circle needs d = 2, got {d}"
                )));
            }
            let m = n - 1;
            let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
            let mut values = vec![0.0, 0.0];
            for k in 0..m {
                let (s, c) = (TAU * k as f64 / m as f64).sin_cos();
                values.push(snap(c));
                values.push(snap(s));
            }
            Dataset::dense(n, 2, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Storage;

    #[test]
    fn unit_circle_five_points() {
        let ds = gen_synthetic(&SyntheticSpec::unit_circle(5)).unwrap();
        assert_eq!(
            ds.storage(),
            &Storage::Dense(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0])
        );
    }

    #[test]
    fn unit_circle_norms() {
        for n in [4, 5, 13, 100, 1001] {
            let ds = gen_synthetic(&SyntheticSpec::unit_circle(n)).unwrap();
            for i in 1..n {
                let p = ds.point(i).to_dense();
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
        assert!(gen_synthetic(&SyntheticSpec::unit_circle(3)).is_err());
    }

    #[test]
    fn line_is_definitional() {
        let ds = gen_synthetic(&SyntheticSpec::line_1d(&[0.0, 1.0, 2.0, 3.0, 10.0])).unwrap();
        assert_eq!(
            ds.storage(),
            &Storage::Dense(vec![0.0, 1.0, 2.0, 3.0, 10.0])
        );
    }

    #[test]
    fn gaussian_is_deterministic() {
        let spec = SyntheticSpec::gaussian_clusters(50, 3, 4, 0.5, 77);
        let a = gen_synthetic(&spec).unwrap();
        let b = gen_synthetic(&spec).unwrap();
        assert_eq!(
            crate::data::io::bin_bytes(&a),
            crate::data::io::bin_bytes(&b)
        );
        let other = gen_synthetic(&SyntheticSpec { seed: 78, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn kind_names() {
        assert!("gaussian-clusters".parse::<SyntheticKind>().is_ok());
        assert!("spiral".parse::<SyntheticKind>().is_err());
        assert_eq!(
            SyntheticKind::UnitCirclePlusCenter.name(),
            "unit-circle-plus-center"
        );
    }
}
