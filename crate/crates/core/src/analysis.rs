//! Problem-hardness quantities: gaps, the pairwise distance spread `sigma`,
//! the per-arm correlation factors `rho`, and the hardness measures `H2`
//! (independent sampling) and `H2~` (correlated sampling).
//!
//! Sub-Gaussian constants are estimated as population standard deviations.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::exact_medoid;
use crate::error::{Error, Result};
use crate::metrics::{Distances, MetricSpace};
use crate::rng::rng_from_seed;

/// Largest `n` for which `estimate_sigma` enumerates all ordered pairs.
pub const EXHAUSTIVE_SIGMA_MAX_N: usize = 2000;

/// Pairs sampled by [`hardness`] when `n` is too large to enumerate.
pub const DEFAULT_SIGMA_PAIRS: usize = 4_000_000;

/// Relative gap below which two centralities count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Running (count, mean, M2) that merges in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn std(&self) -> f64 {
        if self.count == 0.0 {
            0.0
        } else {
            (self.m2 / self.count).max(0.0).sqrt()
        }
    }
}

fn population_std(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Standard deviation of `d(x_I, x_J)` over ordered pairs `I != J`.
///
/// All `n (n - 1)` pairs are enumerated when `n <= 2000`; otherwise `pairs`
/// uniform ordered pairs are drawn with the given seed.
pub fn estimate_sigma<D: Distances + ?Sized>(space: &D, pairs: usize, seed: u64) -> Result<f64> {
    let n = space.len();
    if pairs < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 pairs, got {pairs}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "sigma needs at least 2 points".into(),
        ));
    }
    if n <= EXHAUSTIVE_SIGMA_MAX_N {
        let rows: Vec<Moments> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = Moments::default();
                for j in (0..n).filter(|&j| j != i) {
                    m.push(space.distance(i, j));
                }
                m
            })
            .collect();
        return Ok(rows
            .into_iter()
            .fold(Moments::default(), Moments::merge)
            .std());
    }
    let mut rng = rng_from_seed(seed);
    let draws: Vec<(usize, usize)> = (0..pairs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let r = rng.random_range(0..n - 1);
            (i, if r >= i { r + 1 } else { r })
        })
        .collect();
    let chunks: Vec<Moments> = draws
        .par_chunks(4096)
        .map(|c| {
            let mut m = Moments::default();
            for &(i, j) in c {
                m.push(space.distance(i, j));
            }
            m
        })
        .collect();
    Ok(chunks
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .std())
}

/// Standard deviation over all `J` of `d(x_medoid, x_J) - d(x_i, x_J)`,
/// divided by `sigma`.
pub fn estimate_rho<D: Distances + ?Sized>(
    space: &D,
    medoid: usize,
    i: usize,
    sigma: f64,
) -> Result<f64> {
    let n = space.len();
    for idx in [medoid, i] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    if i == medoid {
        return Err(Error::InvalidArgument(
            "rho is undefined for the medoid itself".into(),
        ));
    }
    let diffs: Vec<f64> = (0..n)
        .map(|j| space.distance(medoid, j) - space.distance(i, j))
        .collect();
    let spread = population_std(&diffs);
    Ok(if sigma > 0.0 {
        spread / sigma
    } else if spread == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub medoid: usize,
    pub theta: Vec<f64>,
    /// `theta[i] - theta[medoid]`.
    pub delta: Vec<f64>,
    pub sigma: f64,
    /// Zero at the medoid.
    pub rho: Vec<f64>,
    pub h2: f64,
    pub h2_tilde: f64,
    pub ratio: f64,
    /// Medoid first, then the other arms by ascending `delta / rho`.
    pub order: Vec<usize>,
    /// Medoid first, then the other arms by ascending `delta`.
    pub gap_order: Vec<usize>,
}

/// `max_k k * weight(arm_k) / delta(arm_k)^2` with ranks starting at 2
/// (rank 1 is the medoid).
fn rank_max(arms: &[usize], delta: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
    arms.iter()
        .enumerate()
        .map(|(p, &i)| (p + 2) as f64 * weight(i) / (delta[i] * delta[i]))
        .fold(0.0, f64::max)
}

pub fn hardness(space: &MetricSpace<'_>) -> Result<HardnessReport> {
    hardness_with(space, DEFAULT_SIGMA_PAIRS, 0)
}

/// [`hardness`] with explicit settings for the sampled `sigma` estimate
/// (ignored when `n` is small enough to enumerate).
pub fn hardness_with(
    space: &MetricSpace<'_>,
    sigma_pairs: usize,
    seed: u64,
) -> Result<HardnessReport> {
    let n = space.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "hardness needs at least 2 points".into(),
        ));
    }
    let (medoid, theta) = exact_medoid(space);
    let best = theta[medoid];
    if let Some(tie) = (0..n).find(|&i| {
        i != medoid && (theta[i] - best).abs() <= TIE_TOLERANCE * theta[i].abs().max(best.abs())
    }) {
        return Err(Error::NonUniqueMedoid(medoid.min(tie), medoid.max(tie)));
    }
    let delta: Vec<f64> = theta.iter().map(|t| t - best).collect();
    let sigma = estimate_sigma(space, sigma_pairs, seed)?;
    let rho: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if i == medoid {
                Ok(0.0)
            } else {
                estimate_rho(space, medoid, i, sigma)
            }
        })
        .collect::<Result<_>>()?;

    let mut by_gap: Vec<usize> = (0..n).filter(|&i| i != medoid).collect();
    by_gap.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]).then(a.cmp(&b)));
    let ratio_of = |i: usize| {
        if rho[i] == 0.0 {
            f64::INFINITY
        } else {
            delta[i] / rho[i]
        }
    };
    let mut by_ratio = by_gap.clone();
    by_ratio.sort_by(|&a, &b| ratio_of(a).total_cmp(&ratio_of(b)).then(a.cmp(&b)));

    let h2 = rank_max(&by_gap, &delta, |_| 1.0);
    let h2_tilde = rank_max(&by_ratio, &delta, |i| rho[i] * rho[i]);
    let with_medoid = |rest: Vec<usize>| std::iter::once(medoid).chain(rest).collect::<Vec<_>>();
    Ok(HardnessReport {
        medoid,
        ratio: if h2_tilde > 0.0 {
            h2 / h2_tilde
        } else {
            f64::INFINITY
        },
        theta,
        delta,
        sigma,
        rho,
        h2,
        h2_tilde,
        order: with_medoid(by_ratio),
        gap_order: with_medoid(by_gap),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `rho_i sigma <= (2 d(x_i, x_medoid) + delta_i) / 2`.
    Triangle,
    /// `rho_i^2 sigma^2 <= d(x_medoid, x_i)^2 - delta_i^2`.
    Variance,
    /// `rho_i <= 2`.
    Orlicz,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub arm: usize,
    pub bound: BoundKind,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub violations: Vec<BoundViolation>,
    /// The triangle and variance bounds need the triangle inequality and are
    /// skipped for metrics without it.
    pub triangle_skipped: bool,
}

impl BoundsCheck {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute 1e-9 plus relative 1e-6 of the bound.
pub fn bound_tolerance(rhs: f64) -> f64 {
    1e-9 + 1e-6 * rhs.abs()
}

/// Checks every arm's `rho` estimate against the bounds implied by bounded
/// distances. An empty violation list is success.
pub fn rho_bounds_check(space: &MetricSpace<'_>, report: &HardnessReport) -> BoundsCheck {
    let triangle = space.metric().is_triangle();
    let m = report.medoid;
    let mut violations = Vec::new();
    let mut check = |arm, bound, lhs: f64, rhs: f64| {
        if lhs > rhs + bound_tolerance(rhs) {
            violations.push(BoundViolation {
                arm,
                bound,
                lhs,
                rhs,
            });
        }
    };
    for i in (0..space.len()).filter(|&i| i != m) {
        let scaled = report.rho[i] * report.sigma;
        let gap = report.delta[i];
        if triangle {
            let d_im = space.distance(i, m);
            let d_mi = space.distance(m, i);
            check(i, BoundKind::Triangle, scaled, (2.0 * d_im + gap) / 2.0);
            check(
                i,
                BoundKind::Variance,
                scaled * scaled,
                d_mi * d_mi - gap * gap,
            );
        }
        check(i, BoundKind::Orlicz, report.rho[i], 2.0);
    }
    BoundsCheck {
        violations,
        triangle_skipped: !triangle,
    }
}

/// Fraction of reference points `J` at which arms `i` and `k` both look
/// strictly closer than point 0: `d(x_i, x_J) < d(x_0, x_J)` and
/// `d(x_k, x_J) < d(x_0, x_J)`. Exact enumeration over all `J`.
pub fn joint_negativity<D: Distances + ?Sized>(space: &D, i: usize, k: usize) -> Result<f64> {
    let n = space.len();
    for idx in [i, k] {
        if idx == 0 {
            return Err(Error::InvalidArgument(
                "arms must differ from the centre point 0".into(),
            ));
        }
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    let both = (0..n)
        .filter(|&j| {
            let centre = space.distance(0, j);
            space.distance(i, j) - centre < 0.0 && space.distance(k, j) - centre < 0.0
        })
        .count();
    Ok(both as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, Dataset, SyntheticSpec};
    use crate::metrics::Metric;

    fn line() -> Dataset {
        Dataset::dense(5, 1, vec![0.0, 1.0, 2.0, 3.0, 10.0]).unwrap()
    }

    // Values below come from an independent brute-force computation over the
    // 20 ordered pairs and 5 reference points of the line dataset.
    const LINE_SIGMA: f64 = 3.4698703145794942;
    const LINE_RHO: [(usize, f64); 4] = [
        (0, 0.46111233416338804),
        (1, 0.28237248320100705),
        (3, 0.28237248320100705),
        (4, 1.800701229228081),
    ];

    #[test]
    fn sigma_and_rho_on_line() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        let sigma = estimate_sigma(&space, 20, 0).unwrap();
        assert!((sigma - LINE_SIGMA).abs() < 1e-12);
        for (i, want) in LINE_RHO {
            let rho = estimate_rho(&space, 2, i, sigma).unwrap();
            assert!((rho - want).abs() < 1e-12, "arm {i}: {rho} vs {want}");
        }
        assert!(estimate_rho(&space, 2, 2, sigma).is_err());
        assert!(estimate_sigma(&space, 1, 0).is_err());
    }

    #[test]
    fn equal_distances_have_zero_sigma() {
        // Unit coordinate vectors: every pair is sqrt(2) apart.
        let mut values = vec![0.0; 16];
        for i in 0..4 {
            values[i * 4 + i] = 1.0;
        }
        let ds = Dataset::dense(4, 4, values).unwrap();
        let sigma = estimate_sigma(&MetricSpace::new(&ds, Metric::L2), 100, 0).unwrap();
        assert!(sigma.abs() < 1e-15);
    }

    #[test]
    fn constant_difference_has_zero_rho() {
        // Two coincident points: their distance profiles differ by a constant (zero).
        let ds = Dataset::dense(3, 1, vec![0.0, 0.0, 5.0]).unwrap();
        let space = MetricSpace::new(&ds, Metric::L1);
        assert_eq!(estimate_rho(&space, 0, 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn sampled_sigma_is_close_to_exhaustive() {
        let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(2100, 3, 2, 1.0, 4)).unwrap();
        let space = MetricSpace::new(&ds, Metric::L2);
        let sampled = estimate_sigma(&space, 400_000, 1).unwrap();
        let again = estimate_sigma(&space, 400_000, 1).unwrap();
        assert_eq!(sampled, again);
        let sub = ds.select(&(0..2000).collect::<Vec<_>>()).unwrap();
        let exhaustive = estimate_sigma(&MetricSpace::new(&sub, Metric::L2), 2, 0).unwrap();
        assert!((sampled - exhaustive).abs() < 0.02 * exhaustive);
    }

    #[test]
    fn hardness_on_line() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        let r = hardness(&space).unwrap();
        assert_eq!(r.medoid, 2);
        assert!((r.h2 - 75.0).abs() < 1e-9);
        assert!((r.h2_tilde - 5.9800664451827155).abs() < 1e-9);
        assert_eq!(r.order, vec![2, 1, 3, 0, 4]);
        assert_eq!(r.gap_order, vec![2, 1, 3, 0, 4]);
        assert_eq!(r.delta[2], 0.0);
        assert!(r.delta.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn hardness_rejects_ties_and_tiny_sets() {
        let tie = Dataset::dense(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            hardness(&MetricSpace::new(&tie, Metric::L1)),
            Err(Error::NonUniqueMedoid(0, 1))
        ));
        let one = Dataset::dense(1, 1, vec![0.0]).unwrap();
        assert!(hardness(&MetricSpace::new(&one, Metric::L1)).is_err());
    }

    #[test]
    fn bounds_on_line_and_cosine() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        let check = rho_bounds_check(&space, &hardness(&space).unwrap());
        assert!(check.is_clean(), "{:?}", check.violations);
        assert!(!check.triangle_skipped);

        let cloud = gen_synthetic(&SyntheticSpec::gaussian_clusters(30, 4, 1, 1.0, 1)).unwrap();
        let cos = MetricSpace::new(&cloud, Metric::Cosine);
        let check = rho_bounds_check(&cos, &hardness(&cos).unwrap());
        assert!(check.triangle_skipped);
        assert!(check
            .violations
            .iter()
            .all(|v| v.bound == BoundKind::Orlicz));
    }

    #[test]
    fn joint_negativity_on_circle() {
        let ds = gen_synthetic(&SyntheticSpec::unit_circle(13)).unwrap();
        let space = MetricSpace::new(&ds, Metric::L2);
        // Point 1 sits at angle 0, point 7 at angle 180 degrees.
        assert_eq!(joint_negativity(&space, 1, 7).unwrap(), 0.0);
        assert!(joint_negativity(&space, 0, 7).is_err());
        assert!(joint_negativity(&space, 1, 13).is_err());
    }
}
