//! Correlated Sequential Halving and its doubling-trick wrapper.
//!
//! Each round draws one reference set, shared by every surviving arm, and
//! keeps the better half of the arms by their mean distance to the references.
//! Because all survivors are measured against the same points, differences of
//! estimates concentrate much faster than independent estimates would.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Distances;
use crate::rng::{derive_seed, rng_from_seed, sample_without_replacement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CorrShConfig {
    /// Total number of distance computations allowed.
    pub budget: u64,
    pub seed: u64,
    /// Build each arm's estimate from the references of all rounds it survived
    /// (each distinct reference counted once) instead of only the current round.
    pub reuse_past: bool,
}

impl CorrShConfig {
    pub fn new(budget: u64, seed: u64) -> Self {
        CorrShConfig {
            budget,
            seed,
            reuse_past: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    /// Arms alive at the start of the round, ascending.
    pub survivors: Vec<usize>,
    /// Estimates of `survivors`, in the same order.
    pub estimates: Vec<f64>,
    /// References drawn this round, ascending.
    pub references: Vec<usize>,
    /// References not already evaluated in an earlier round. Equal to
    /// `references` when past samples are not reused.
    pub fresh_references: usize,
    pub exact_branch: bool,
}

impl RoundTrace {
    pub fn surviving(&self) -> usize {
        self.survivors.len()
    }

    pub fn t(&self) -> usize {
        self.references.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub chosen: usize,
    pub fresh_pulls: u64,
    #[serde(skip)]
    pub arm_pulls: Vec<u64>,
    pub trace: Vec<RoundTrace>,
    #[serde(serialize_with = "as_millis")]
    pub wall_time: Duration,
    /// Budget below `n * ceil(log2 n)`: the one-reference minimum per round may
    /// then push `fresh_pulls` past the budget.
    pub below_min_budget: bool,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl RunResult {
    pub fn pulls_per_arm(&self) -> f64 {
        self.fresh_pulls as f64 / self.arm_pulls.len().max(1) as f64
    }
}

/// `ceil(log2 n)`, with the single-point case defined as 1.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// References per arm for a round with `surviving` arms:
/// `min(n, max(1, floor(budget / (surviving * ceil(log2 n)))))`.
pub fn round_budget(budget: u64, n: usize, surviving: usize) -> usize {
    debug_assert!(surviving >= 1 && surviving <= n);
    let denom = surviving as u64 * u64::from(ceil_log2(n));
    let t = (budget / denom).max(1);
    t.min(n as u64) as usize
}

/// Index of the smallest estimate, lowest index on ties.
pub(crate) fn argmin_by_index(arms: &[usize], estimates: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..arms.len() {
        let better = estimates[k] < estimates[best]
            || (estimates[k] == estimates[best] && arms[k] < arms[best]);
        if better {
            best = k;
        }
    }
    arms[best]
}

pub fn corr_seq_halving<D: Distances + ?Sized>(space: &D, cfg: &CorrShConfig) -> Result<RunResult> {
    let start = Instant::now();
    let n = space.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let rounds = ceil_log2(n) as usize;
    let below_min_budget = cfg.budget < n as u64 * rounds as u64;
    if n == 1 {
        return Ok(RunResult {
            chosen: 0,
            fresh_pulls: 0,
            arm_pulls: vec![0],
            trace: Vec::new(),
            wall_time: start.elapsed(),
            below_min_budget,
        });
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut survivors: Vec<usize> = (0..n).collect();
    // Running sums over all distinct references seen so far (indexed by arm).
    let mut sums = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut seen_count = 0usize;
    let mut arm_pulls = vec![0u64; n];
    let mut fresh_pulls = 0u64;
    let mut trace = Vec::with_capacity(rounds);

    for round in 0..rounds {
        let t = round_budget(cfg.budget, n, survivors.len());
        let exact_branch = t == n;
        let mut references = if exact_branch {
            (0..n).collect()
        } else {
            sample_without_replacement(&mut rng, n, t)
        };
        references.sort_unstable();

        let fresh: Vec<usize> = if cfg.reuse_past {
            let fresh: Vec<usize> = references.iter().copied().filter(|&j| !seen[j]).collect();
            for &j in &fresh {
                seen[j] = true;
            }
            seen_count += fresh.len();
            fresh
        } else {
            references.clone()
        };
        let count = if cfg.reuse_past { seen_count } else { t };

        let partial: Vec<f64> = survivors
            .par_iter()
            .map(|&i| fresh.iter().fold(0.0, |acc, &j| acc + space.distance(i, j)))
            .collect();
        let estimates: Vec<f64> = survivors
            .iter()
            .zip(&partial)
            .map(|(&i, &p)| {
                if cfg.reuse_past {
                    sums[i] += p;
                } else {
                    sums[i] = p;
                }
                arm_pulls[i] += fresh.len() as u64;
                sums[i] / count as f64
            })
            .collect();
        fresh_pulls += (survivors.len() * fresh.len()) as u64;

        if exact_branch {
            let chosen = argmin_by_index(&survivors, &estimates);
            trace.push(RoundTrace {
                round,
                survivors,
                estimates,
                references,
                fresh_references: fresh.len(),
                exact_branch,
            });
            return Ok(RunResult {
                chosen,
                fresh_pulls,
                arm_pulls,
                trace,
                wall_time: start.elapsed(),
                below_min_budget,
            });
        }

        let keep = survivors.len().div_ceil(2);
        let mut ranked: Vec<(f64, usize)> = estimates
            .iter()
            .copied()
            .zip(survivors.iter().copied())
            .collect();
        ranked.select_nth_unstable_by(keep - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut next: Vec<usize> = ranked[..keep].iter().map(|&(_, i)| i).collect();
        next.sort_unstable();

        trace.push(RoundTrace {
            round,
            survivors,
            estimates,
            references,
            fresh_references: fresh.len(),
            exact_branch,
        });
        survivors = next;
    }

    debug_assert_eq!(survivors.len(), 1);
    Ok(RunResult {
        chosen: survivors[0],
        fresh_pulls,
        arm_pulls,
        trace,
        wall_time: start.elapsed(),
        below_min_budget,
    })
}

/// Runs corrSH at budgets `T0, 2*T0, 4*T0, ...` until two consecutive runs
/// return the same arm. At least two runs are made; after that, a run whose
/// budget reaches `n^2 * ceil(log2 n)` (where the first round is already
/// exact) ends the sequence regardless of agreement.
///
/// Run `k` uses seed `derive_seed(seed, k)`. Samples are not shared between
/// runs. The result's counters and trace cover all runs; `chosen` is the
/// answer of the last one.
pub fn doubling_corrsh<D: Distances + ?Sized>(
    space: &D,
    initial_budget: u64,
    seed: u64,
) -> Result<RunResult> {
    let start = Instant::now();
    let n = space.len();
    if initial_budget == 0 {
        return Err(Error::InvalidArgument(
            "initial budget must be at least 1".into(),
        ));
    }
    let exact_cap = (n as u64)
        .saturating_mul(n as u64)
        .saturating_mul(u64::from(ceil_log2(n)));

    let mut total = RunResult {
        chosen: 0,
        fresh_pulls: 0,
        arm_pulls: vec![0; n],
        trace: Vec::new(),
        wall_time: Duration::ZERO,
        below_min_budget: false,
    };
    let mut previous = None;
    let mut budget = initial_budget;
    for run in 0u64.. {
        let res = corr_seq_halving(space, &CorrShConfig::new(budget, derive_seed(seed, run)))?;
        total.fresh_pulls += res.fresh_pulls;
        for (acc, p) in total.arm_pulls.iter_mut().zip(&res.arm_pulls) {
            *acc += p;
        }
        total.trace.extend(res.trace);
        total.below_min_budget |= res.below_min_budget;
        total.chosen = res.chosen;
        if previous == Some(res.chosen) || (run > 0 && budget >= exact_cap) {
            break;
        }
        previous = Some(res.chosen);
        budget = budget.saturating_mul(2);
    }
    total.wall_time = start.elapsed();
    Ok(total)
}
