//! Seeded multi-trial experiments and their serialized results.
//!
//! A trial at budget index `b` with seed value `s` runs with seed
//! `derive_seed(seed_base, (b << 48) | s)`, which is injective over
//! `(b, s)` for `b < 2^16` and `s < 2^48`. Trials run on the current rayon
//! pool and are aggregated in (budget, seed) order, so results do not depend
//! on the number of worker threads.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{exact_medoid, exact_medoid_run, meddit, rand_medoid, MedditConfig};
use crate::corrsh::{corr_seq_halving, doubling_corrsh, CorrShConfig, RunResult};
use crate::data::{
    gen_synthetic, load_dense, load_idx_images, load_idx_labels, load_sparse, subsample, Dataset,
    DenseFormat, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricSpace};
use crate::rng::derive_seed;

/// Above this many points, `GroundTruth::Auto` votes instead of computing exactly.
pub const EXACT_GROUND_TRUTH_MAX_N: usize = 25_000;

pub const CSV_HEADER: &str = "budget_x,trials,failures,error_prob,mean_pulls_per_arm,mean_wall_ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
    },
    Bin {
        path: PathBuf,
    },
    Sparse {
        path: PathBuf,
    },
    /// IDX3 images, optionally filtered to one label using an IDX1 label file.
    Idx {
        images: PathBuf,
        labels: Option<PathBuf>,
        digit: Option<u8>,
    },
    Synthetic {
        spec: SyntheticSpec,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsample {
    pub m: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub source: DatasetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<Subsample>,
}

impl DataSpec {
    pub fn new(source: DatasetSource) -> Self {
        DataSpec {
            source,
            subsample: None,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let ds = match &self.source {
            DatasetSource::Csv { path } => load_dense(path, DenseFormat::Csv)?,
            DatasetSource::Bin { path } => load_dense(path, DenseFormat::Bin)?,
            DatasetSource::Sparse { path } => load_sparse(path)?,
            DatasetSource::Idx {
                images,
                labels,
                digit,
            } => {
                let ds = load_idx_images(images)?;
                match (labels, digit) {
                    (Some(labels), Some(digit)) => {
                        let labels = load_idx_labels(labels)?;
                        if labels.len() != ds.n() {
                            return Err(Error::InvalidDataset(format!(
                                "{} labels for {} images",
                                labels.len(),
                                ds.n()
                            )));
                        }
                        let keep: Vec<usize> =
                            (0..ds.n()).filter(|&i| labels[i] == *digit).collect();
                        ds.select(&keep)?
                    }
                    (None, Some(_)) => {
                        return Err(Error::InvalidArgument(
                            "a digit filter needs a label file".into(),
                        ))
                    }
                    _ => ds,
                }
            }
            DatasetSource::Synthetic { spec } => gen_synthetic(spec)?,
        };
        match self.subsample {
            Some(Subsample { m, seed }) => subsample(&ds, m, seed),
            None => Ok(ds),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Algorithm {
    Exact,
    /// `k = round(x)` shared references.
    Rand,
    /// At most `round(x * n)` pulls; `delta` defaults to `1 / n`.
    Meddit {
        delta: Option<f64>,
        init_pulls: usize,
    },
    /// Budget `T = round(x * n)`.
    Corrsh {
        reuse_past: bool,
    },
    /// Initial budget `round(x * n)`.
    CorrshDoubling,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "exact" => Ok(Algorithm::Exact),
            "rand" => Ok(Algorithm::Rand),
            "meddit" => Ok(Algorithm::Meddit {
                delta: None,
                init_pulls: MedditConfig::DEFAULT_INIT_PULLS,
            }),
            "corrsh" => Ok(Algorithm::Corrsh { reuse_past: true }),
            "corrsh-doubling" => Ok(Algorithm::CorrshDoubling),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }

    /// One run at `budget_x` pulls per arm.
    pub fn run(&self, space: &MetricSpace<'_>, budget_x: f64, seed: u64) -> Result<RunResult> {
        let n = space.data().n();
        let total = ((budget_x * n as f64).round() as u64).max(1);
        match *self {
            Algorithm::Exact => Ok(exact_medoid_run(space)),
            Algorithm::Rand => rand_medoid(space, (budget_x.round() as usize).clamp(1, n), seed),
            Algorithm::Meddit { delta, init_pulls } => {
                let delta = delta.unwrap_or(if n > 1 { 1.0 / n as f64 } else { 0.5 });
                let cfg = MedditConfig {
                    delta,
                    max_budget: total.max(n as u64),
                    seed,
                    init_pulls,
                };
                meddit(space, &cfg)
            }
            Algorithm::Corrsh { reuse_past } => corr_seq_halving(
                space,
                &CorrShConfig {
                    budget: total,
                    seed,
                    reuse_past,
                },
            ),
            Algorithm::CorrshDoubling => doubling_corrsh(space, total, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GroundTruth {
    /// Exact computation up to 25 000 points, majority vote beyond.
    Auto,
    ExactCompute,
    Provided {
        index: usize,
    },
    /// The point returned most often across all trials (lowest index on ties).
    MajorityVote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn range(&self) -> Range<u64> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::str::FromStr for SeedRange {
    type Err = Error;

    /// `A..B` (end exclusive) or a single seed `A`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad seed range {s:?}, expected A..B"));
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let a: u64 = s.trim().parse().map_err(|_| bad())?;
                (a, a + 1)
            }
        };
        Ok(SeedRange { start, end })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub data: DataSpec,
    pub metric: Metric,
    pub algorithm: Algorithm,
    /// Pulls-per-arm multipliers `x`, strictly increasing.
    pub budgets: Vec<f64>,
    pub seeds: SeedRange,
    #[serde(default)]
    pub seed_base: u64,
    pub ground_truth: GroundTruth,
    /// Record every trial in the output.
    #[serde(default)]
    pub per_trial: bool,
    /// Record wall-clock times. Off by default so that output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(
        data: DataSpec,
        metric: Metric,
        algorithm: Algorithm,
        budgets: Vec<f64>,
        seeds: Range<u64>,
    ) -> Self {
        ExperimentSpec {
            data,
            metric,
            algorithm,
            budgets,
            seeds: SeedRange {
                start: seeds.start,
                end: seeds.end,
            },
            seed_base: 0,
            ground_truth: GroundTruth::Auto,
            per_trial: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::InvalidArgument("budget grid is empty".into()));
        }
        if self.budgets.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidArgument(
                "budgets must be positive and finite".into(),
            ));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "budget grid must be strictly increasing".into(),
            ));
        }
        if self.budgets.len() > 1 << 16 {
            return Err(Error::InvalidArgument("at most 65536 budgets".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seed range is empty".into()));
        }
        if self.seeds.end > 1 << 48 {
            return Err(Error::InvalidArgument("seeds must be below 2^48".into()));
        }
        Ok(())
    }
}

/// Seed of the trial with budget index `budget_index` and seed value `seed`.
pub fn trial_seed(seed_base: u64, budget_index: usize, seed: u64) -> u64 {
    debug_assert!(budget_index < 1 << 16 && seed < 1 << 48);
    derive_seed(seed_base, ((budget_index as u64) << 48) | seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget_x: f64,
    pub trials: usize,
    pub failures: usize,
    pub error_prob: f64,
    pub mean_pulls_per_arm: f64,
    pub mean_wall_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub budget_x: f64,
    pub chosen: usize,
    pub correct: bool,
    pub fresh_pulls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub version: String,
    pub n: usize,
    pub ground_truth: usize,
    pub curves: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialRecord>>,
}

impl ExperimentResult {
    pub fn zero_error_budget(&self) -> Option<f64> {
        zero_error_budget(&self.curves)
    }
}

pub fn version_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let ds = spec.data.load()?;
    run_experiment_on(spec, &ds)
}

/// [`run_experiment`] with the dataset already loaded.
pub fn run_experiment_on(spec: &ExperimentSpec, ds: &Dataset) -> Result<ExperimentResult> {
    spec.validate()?;
    let space = MetricSpace::new(ds, spec.metric);
    let n = ds.n();
    let mode = match spec.ground_truth {
        GroundTruth::Auto if n <= EXACT_GROUND_TRUTH_MAX_N => GroundTruth::ExactCompute,
        GroundTruth::Auto => GroundTruth::MajorityVote,
        other => other,
    };
    let known_truth = match mode {
        GroundTruth::Provided { index } if index >= n => {
            return Err(Error::GroundTruth(format!(
                "provided index {index} out of range for {n} points"
            )))
        }
        GroundTruth::Provided { index } => Some(index),
        GroundTruth::ExactCompute => Some(exact_medoid(&space).0),
        _ => None,
    };

    let mut runs: Vec<Vec<(u64, RunResult)>> = Vec::with_capacity(spec.budgets.len());
    for (b, &x) in spec.budgets.iter().enumerate() {
        let seeds: Vec<u64> = spec.seeds.range().collect();
        let results: Vec<Result<(u64, RunResult)>> = seeds
            .par_iter()
            .map(|&s| {
                spec.algorithm
                    .run(&space, x, trial_seed(spec.seed_base, b, s))
                    .map(|r| (s, r))
            })
            .collect();
        runs.push(results.into_iter().collect::<Result<_>>()?);
    }

    let truth = match known_truth {
        Some(t) => t,
        None => majority(runs.iter().flatten().map(|(_, r)| r.chosen), n)
            .ok_or_else(|| Error::GroundTruth("no trials to vote with".into()))?,
    };

    let mut curves = Vec::with_capacity(runs.len());
    let mut per_trial = spec.per_trial.then(Vec::new);
    for (&x, trials) in spec.budgets.iter().zip(&runs) {
        let count = trials.len();
        let failures = trials.iter().filter(|(_, r)| r.chosen != truth).count();
        let pulls: f64 = trials.iter().map(|(_, r)| r.fresh_pulls as f64).sum();
        let wall: f64 = trials
            .iter()
            .map(|(_, r)| r.wall_time.as_secs_f64() * 1e3)
            .sum();
        curves.push(CurvePoint {
            budget_x: x,
            trials: count,
            failures,
            error_prob: failures as f64 / count as f64,
            mean_pulls_per_arm: pulls / (count as f64 * n as f64),
            mean_wall_ms: spec.timing.then(|| wall / count as f64),
        });
        if let Some(records) = per_trial.as_mut() {
            records.extend(trials.iter().map(|(s, r)| TrialRecord {
                seed: *s,
                budget_x: x,
                chosen: r.chosen,
                correct: r.chosen == truth,
                fresh_pulls: r.fresh_pulls,
            }));
        }
    }

    Ok(ExperimentResult {
        spec: spec.clone(),
        version: version_string(),
        n,
        ground_truth: truth,
        curves,
        per_trial,
    })
}

fn majority(chosen: impl Iterator<Item = usize>, n: usize) -> Option<usize> {
    let mut counts = vec![0usize; n];
    let mut any = false;
    for c in chosen {
        counts[c] += 1;
        any = true;
    }
    // max_by_key returns the last maximum; iterate in reverse so ties go to the lowest index.
    any.then(|| (0..n).rev().max_by_key(|&i| counts[i]).unwrap())
}

/// Smallest grid budget from which every budget onwards had zero failures.
pub fn zero_error_budget(curve: &[CurvePoint]) -> Option<f64> {
    let clean_tail = curve.iter().rev().take_while(|p| p.failures == 0).count();
    (clean_tail > 0).then(|| curve[curve.len() - clean_tail].budget_x)
}

/// Runs `spec` on the part of its grid up to `max_multiplier` and returns
/// [`zero_error_budget`] of the resulting curve.
pub fn find_zero_error_budget(spec: &ExperimentSpec, max_multiplier: f64) -> Result<Option<f64>> {
    let mut spec = spec.clone();
    spec.budgets.retain(|&x| x <= max_multiplier);
    Ok(run_experiment(&spec)?.zero_error_budget())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn to_json(result: &ExperimentResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(curves: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in curves {
        let wall = p.mean_wall_ms.map(|w| w.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.budget_x, p.trials, p.failures, p.error_prob, p.mean_pulls_per_arm, wall
        ));
    }
    out
}

/// Writes `result` to `path`, or to stdout when `path` is `-`.
pub fn emit(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Json => to_json(result)?,
        OutputFormat::Csv => to_csv(&result.curves),
    };
    if path.as_os_str() == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    } else {
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64, failures: usize) -> CurvePoint {
        CurvePoint {
            budget_x: x,
            trials: 10,
            failures,
            error_prob: failures as f64 / 10.0,
            mean_pulls_per_arm: x,
            mean_wall_ms: None,
        }
    }

    fn curve(failures: &[usize]) -> Vec<CurvePoint> {
        failures
            .iter()
            .enumerate()
            .map(|(k, &f)| point(f64::from(1u32 << k), f))
            .collect()
    }

    #[test]
    fn zero_error_budget_examples() {
        assert_eq!(zero_error_budget(&curve(&[3, 1, 0, 0, 0])), Some(4.0));
        assert_eq!(zero_error_budget(&curve(&[0, 1, 0])), Some(4.0));
        assert_eq!(zero_error_budget(&curve(&[0, 0, 0])), Some(1.0));
        assert_eq!(zero_error_budget(&curve(&[0, 0, 2])), None);
        assert_eq!(zero_error_budget(&[]), None);
    }

    #[test]
    fn seed_range_parsing() {
        assert_eq!("0..100".parse::<SeedRange>().unwrap().range(), 0..100);
        assert_eq!("7".parse::<SeedRange>().unwrap().range(), 7..8);
        assert!("a..b".parse::<SeedRange>().is_err());
        assert!("5..2".parse::<SeedRange>().unwrap().is_empty());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for b in 0..20 {
            for s in 0..1000 {
                assert!(seen.insert(trial_seed(0, b, s)));
            }
        }
    }

    #[test]
    fn majority_breaks_ties_low() {
        assert_eq!(majority([3, 1, 3, 1, 2].into_iter(), 5), Some(1));
        assert_eq!(majority([4, 4, 0].into_iter(), 5), Some(4));
        assert_eq!(majority(std::iter::empty(), 5), None);
    }

    #[test]
    fn spec_validation() {
        let data = DataSpec::new(DatasetSource::Synthetic {
            spec: SyntheticSpec::line_1d(&[0.0, 1.0, 2.0]),
        });
        let ok = ExperimentSpec::new(data, Metric::L1, Algorithm::Exact, vec![1.0, 2.0], 0..3);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.budgets = vec![2.0, 2.0];
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.seeds = SeedRange { start: 3, end: 3 };
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.ground_truth = GroundTruth::Provided { index: 9 };
        assert!(matches!(run_experiment(&bad), Err(Error::GroundTruth(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let text = to_csv(&[point(2.0, 1)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, [CSV_HEADER, "2,10,1,0.1,2,"]);
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }
}
