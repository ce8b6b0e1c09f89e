//! Comparison algorithms: exhaustive computation, RAND and a Med-dit style
//! UCB search.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::corrsh::{argmin_by_index, RunResult};
use crate::error::{Error, Result};
use crate::metrics::{centrality, Distances};
use crate::rng::{rng_from_seed, sample_without_replacement};

/// The exact medoid (lowest index on ties) and every point's centrality.
pub fn exact_medoid<D: Distances + ?Sized>(space: &D) -> (usize, Vec<f64>) {
    let n = space.len();
    let theta: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| centrality(space, i))
        .collect();
    let arms: Vec<usize> = (0..n).collect();
    (argmin_by_index(&arms, &theta), theta)
}

/// [`exact_medoid`] reported as a run: `n` pulls for every arm.
pub fn exact_medoid_run<D: Distances + ?Sized>(space: &D) -> RunResult {
    let start = Instant::now();
    let n = space.len();
    let (chosen, _) = exact_medoid(space);
    RunResult {
        chosen,
        fresh_pulls: (n * n) as u64,
        arm_pulls: vec![n as u64; n],
        trace: Vec::new(),
        wall_time: start.elapsed(),
        below_min_budget: false,
    }
}

/// RAND: every point is scored by its mean distance to one shared set of `k`
/// references drawn without replacement.
pub fn rand_medoid<D: Distances + ?Sized>(space: &D, k: usize, seed: u64) -> Result<RunResult> {
    let start = Instant::now();
    let n = space.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "RAND needs 1 <= k <= n = {n}, got k = {k}"
        )));
    }
    let mut refs = if k == n {
        (0..n).collect()
    } else {
        sample_without_replacement(&mut rng_from_seed(seed), n, k)
    };
    refs.sort_unstable();
    let estimates: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| refs.iter().fold(0.0, |acc, &j| acc + space.distance(i, j)) / k as f64)
        .collect();
    let arms: Vec<usize> = (0..n).collect();
    Ok(RunResult {
        chosen: argmin_by_index(&arms, &estimates),
        fresh_pulls: (n * k) as u64,
        arm_pulls: vec![k as u64; n],
        trace: Vec::new(),
        wall_time: start.elapsed(),
        below_min_budget: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MedditConfig {
    /// Target error probability.
    pub delta: f64,
    /// Hard cap on distance computations.
    pub max_budget: u64,
    pub seed: u64,
    /// Samples per arm before the adaptive phase.
    pub init_pulls: usize,
}

impl MedditConfig {
    pub const DEFAULT_INIT_PULLS: usize = 16;

    pub fn new(delta: f64, max_budget: u64, seed: u64) -> Self {
        MedditConfig {
            delta,
            max_budget,
            seed,
            init_pulls: Self::DEFAULT_INIT_PULLS,
        }
    }
}

/// Per-arm sampling state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArmStats {
    pub pulls: u64,
    pub sum: f64,
    /// Set once the arm has been evaluated against every point.
    pub exact: Option<f64>,
}

impl ArmStats {
    pub fn estimate(&self) -> f64 {
        match self.exact {
            Some(theta) => theta,
            None if self.pulls == 0 => f64::INFINITY,
            None => self.sum / self.pulls as f64,
        }
    }
}

/// Welford accumulator over every sampled distance.
#[derive(Clone, Copy, Debug, Default)]
struct Spread {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Spread {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

/// Maps an `f64` to an integer with the same total order.
fn order_key(x: f64) -> i64 {
    let bits = x.to_bits() as i64;
    bits ^ (((bits >> 63) as u64) >> 1) as i64
}

struct BoundSets {
    lower: Vec<f64>,
    upper: Vec<f64>,
    by_lower: BTreeSet<(i64, usize)>,
    by_upper: BTreeSet<(i64, usize)>,
    /// Lower bounds of arms that can still be sampled.
    active_lower: BTreeSet<(i64, usize)>,
}

impl BoundSets {
    fn new(n: usize) -> Self {
        BoundSets {
            lower: vec![f64::NAN; n],
            upper: vec![f64::NAN; n],
            by_lower: BTreeSet::new(),
            by_upper: BTreeSet::new(),
            active_lower: BTreeSet::new(),
        }
    }

    fn update(&mut self, arm: usize, stats: &ArmStats, scale: f64) {
        if !self.lower[arm].is_nan() {
            self.by_lower.remove(&(order_key(self.lower[arm]), arm));
            self.by_upper.remove(&(order_key(self.upper[arm]), arm));
            self.active_lower.remove(&(order_key(self.lower[arm]), arm));
        }
        let est = stats.estimate();
        let width = if stats.exact.is_some() {
            0.0
        } else {
            scale / (stats.pulls as f64).sqrt()
        };
        self.lower[arm] = est - width;
        self.upper[arm] = est + width;
        self.by_lower.insert((order_key(self.lower[arm]), arm));
        self.by_upper.insert((order_key(self.upper[arm]), arm));
        if stats.exact.is_none() {
            self.active_lower.insert((order_key(self.lower[arm]), arm));
        }
    }

    /// True when the arm with the smallest upper bound is strictly below
    /// every other arm's lower bound.
    fn separated(&self) -> bool {
        let Some(&(_, best)) = self.by_upper.first() else {
            return true;
        };
        let other = self.by_lower.iter().find(|&&(_, i)| i != best);
        other.is_none_or(|&(_, i)| self.upper[best] < self.lower[i])
    }
}

/// Med-dit style adaptive search.
///
/// After `init_pulls` samples per arm, repeatedly samples the open arm with
/// the smallest lower confidence bound `mean - sigma * sqrt(2 ln(2n/delta) / pulls)`.
/// References are drawn with replacement, independently per pull. `sigma` is
/// the standard deviation of all distances sampled so far; the value used in
/// the bounds is refreshed every `n` pulls. An arm about to reach `n` samples
/// is instead evaluated exactly (costing `n` pulls) and its interval collapses
/// to a point. Stops once one arm's upper bound is below every other lower
/// bound, when no open arm remains, or when the next step would exceed
/// `max_budget`.
pub fn meddit<D: Distances + ?Sized>(space: &D, cfg: &MedditConfig) -> Result<RunResult> {
    let start = Instant::now();
    let n = space.len();
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be in (0, 1), got {}",
            cfg.delta
        )));
    }
    if cfg.max_budget < n as u64 {
        return Err(Error::InvalidArgument(format!(
            "max_budget {} is below n = {n}",
            cfg.max_budget
        )));
    }
    if cfg.init_pulls == 0 {
        return Err(Error::InvalidArgument(
            "init_pulls must be at least 1".into(),
        ));
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut stats = vec![ArmStats::default(); n];
    let mut spread = Spread::default();

    let init = cfg.init_pulls.min((cfg.max_budget / n as u64) as usize);
    let mut total = if init >= n {
        let theta: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| centrality(space, i))
            .collect();
        for (s, t) in stats.iter_mut().zip(theta) {
            *s = ArmStats {
                pulls: n as u64,
                sum: t * n as f64,
                exact: Some(t),
            };
        }
        (n * n) as u64
    } else {
        let refs: Vec<usize> = (0..n * init).map(|_| rng.random_range(0..n)).collect();
        let samples: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                refs[i * init..(i + 1) * init]
                    .iter()
                    .map(|&j| space.distance(i, j))
                    .collect()
            })
            .collect();
        for (s, xs) in stats.iter_mut().zip(&samples) {
            for &x in xs {
                s.pulls += 1;
                s.sum += x;
                spread.push(x);
            }
        }
        (n * init) as u64
    };

    let kappa = (2.0 * (2.0 * n as f64 / cfg.delta).ln()).sqrt();
    let mut scale = spread.std() * kappa;
    let mut bounds = BoundSets::new(n);
    for (i, s) in stats.iter().enumerate() {
        bounds.update(i, s, scale);
    }
    let mut since_refresh = 0usize;

    loop {
        if since_refresh >= n {
            since_refresh = 0;
            scale = spread.std() * kappa;
            for (i, s) in stats.iter().enumerate() {
                bounds.update(i, s, scale);
            }
        }
        if bounds.separated() {
            break;
        }
        let Some(&(_, arm)) = bounds.active_lower.first() else {
            break;
        };
        // Only exactly tied frozen arms block separation.
        let best_upper = bounds
            .by_upper
            .first()
            .map(|&(_, b)| bounds.upper[b])
            .unwrap_or(f64::INFINITY);
        if bounds.lower[arm] > best_upper {
            break;
        }

        let s = &mut stats[arm];
        if s.pulls + 1 >= n as u64 {
            if total + n as u64 > cfg.max_budget {
                break;
            }
            let theta = centrality(space, arm);
            s.exact = Some(theta);
            s.pulls += n as u64;
            total += n as u64;
        } else {
            if total + 1 > cfg.max_budget {
                break;
            }
            let x = space.distance(arm, rng.random_range(0..n));
            s.pulls += 1;
            s.sum += x;
            spread.push(x);
            total += 1;
        }
        since_refresh += 1;
        bounds.update(arm, &stats[arm], scale);
    }

    let arms: Vec<usize> = (0..n).collect();
    let estimates: Vec<f64> = stats.iter().map(ArmStats::estimate).collect();
    Ok(RunResult {
        chosen: argmin_by_index(&arms, &estimates),
        fresh_pulls: total,
        arm_pulls: stats.iter().map(|s| s.pulls).collect(),
        trace: Vec::new(),
        wall_time: start.elapsed(),
        below_min_budget: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, Dataset, SyntheticSpec};
    use crate::metrics::{Metric, MetricSpace};

    fn line() -> Dataset {
        Dataset::dense(5, 1, vec![0.0, 1.0, 2.0, 3.0, 10.0]).unwrap()
    }

    #[test]
    fn order_key_is_monotone() {
        let xs = [
            f64::NEG_INFINITY,
            -3.5,
            -1e-300,
            -0.0,
            0.0,
            1e-300,
            2.0,
            f64::INFINITY,
        ];
        for w in xs.windows(2) {
            assert!(order_key(w[0]) <= order_key(w[1]), "{} {}", w[0], w[1]);
        }
        assert!(order_key(-1.0) < order_key(1.0));
    }

    #[test]
    fn exact_on_line() {
        let ds = line();
        let (idx, theta) = exact_medoid(&MetricSpace::new(&ds, Metric::L1));
        assert_eq!(idx, 2);
        for (t, want) in theta.iter().zip([3.2, 2.6, 2.4, 2.6, 6.8]) {
            assert!((t - want).abs() < 1e-12);
        }
        let run = exact_medoid_run(&MetricSpace::new(&ds, Metric::L1));
        assert_eq!((run.chosen, run.fresh_pulls), (2, 25));
    }

    #[test]
    fn exact_single_and_circle() {
        let one = Dataset::dense(1, 1, vec![4.0]).unwrap();
        assert_eq!(
            exact_medoid(&MetricSpace::new(&one, Metric::L2)),
            (0, vec![0.0])
        );
        let circle = gen_synthetic(&SyntheticSpec::unit_circle(5)).unwrap();
        assert_eq!(exact_medoid(&MetricSpace::new(&circle, Metric::L2)).0, 0);
    }

    #[test]
    fn exact_ties_go_to_lowest_index() {
        let ds = Dataset::dense(4, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(exact_medoid(&MetricSpace::new(&ds, Metric::L1)).0, 0);
    }

    #[test]
    fn rand_with_all_references_is_exact() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        for seed in 0..10 {
            let r = rand_medoid(&space, 5, seed).unwrap();
            assert_eq!((r.chosen, r.fresh_pulls), (2, 25));
        }
        assert!(rand_medoid(&space, 0, 0).is_err());
        assert!(rand_medoid(&space, 6, 0).is_err());
    }

    #[test]
    fn meddit_validation() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        assert!(meddit(&space, &MedditConfig::new(0.0, 100, 0)).is_err());
        assert!(meddit(&space, &MedditConfig::new(1.0, 100, 0)).is_err());
        assert!(meddit(&space, &MedditConfig::new(0.1, 4, 0)).is_err());
    }

    #[test]
    fn meddit_two_points_freezes() {
        let ds = Dataset::dense(2, 1, vec![0.0, 5.0]).unwrap();
        let space = MetricSpace::new(&ds, Metric::L1);
        for seed in 0..10 {
            let r = meddit(&space, &MedditConfig::new(0.1, 1000, seed)).unwrap();
            // Both points have centrality 2.5; the tie goes to index 0.
            assert_eq!(r.chosen, 0);
            assert!(r.fresh_pulls <= 1000);
        }
    }

    #[test]
    fn meddit_on_line() {
        let ds = line();
        let space = MetricSpace::new(&ds, Metric::L1);
        for seed in 0..50 {
            let r = meddit(&space, &MedditConfig::new(0.01, 50, seed)).unwrap();
            assert_eq!(r.chosen, 2, "seed {seed}");
            assert!(r.fresh_pulls <= 50);
        }
    }

    #[test]
    fn meddit_respects_budget() {
        let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(200, 4, 3, 1.0, 2)).unwrap();
        let space = MetricSpace::new(&ds, Metric::L2);
        for budget in [200, 333, 1000, 5000, 20_000] {
            let r = meddit(&space, &MedditConfig::new(0.005, budget, 1)).unwrap();
            assert!(r.fresh_pulls <= budget);
            assert_eq!(r.arm_pulls.iter().sum::<u64>(), r.fresh_pulls);
        }
    }
}
