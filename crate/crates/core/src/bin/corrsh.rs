use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use corrsh::analysis::{hardness, rho_bounds_check};
use corrsh::data::{
    gen_synthetic, write_bin, write_csv, write_sparse, SyntheticKind, SyntheticSpec,
};
use corrsh::harness::{
    emit, run_experiment, Algorithm, DataSpec, DatasetSource, ExperimentSpec, GroundTruth,
    OutputFormat, SeedRange, Subsample,
};
use corrsh::metrics::{Metric, MetricSpace};
use corrsh::{Error, Result};

/// Points above which `analyze` asks for `--yes`.
const ANALYZE_CONFIRM_N: usize = 30_000;

#[derive(Parser)]
#[command(
    name = "corrsh",
    version,
    about = "Medoid identification with correlated sequential halving"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input dataset (output path for `gen`).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// IDX1 label file used with `--digit`.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Keep only images with this label.
    #[arg(long, global = true)]
    digit: Option<u8>,
    /// Uniformly subsample this many points before running.
    #[arg(long, global = true)]
    subsample: Option<usize>,
    #[arg(long, global = true, default_value = "l2")]
    metric: Metric,
    #[arg(long, global = true, value_enum, default_value_t = Algo::Corrsh)]
    algo: Algo,
    /// Pulls-per-arm multiplier; repeat for a grid.
    #[arg(long = "budget-x", global = true)]
    budget_x: Vec<f64>,
    /// Seed range `A..B` (end exclusive) or a single seed.
    #[arg(long, global = true, default_value = "0..1")]
    seeds: SeedRange,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path, `-` for stdout.
    #[arg(long, global = true, default_value = "-")]
    out: PathBuf,
    #[arg(long = "out-format", global = true, value_enum, default_value_t = OutFormat::Json)]
    out_format: OutFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Single run on one seed and one budget.
    Medoid,
    /// Error-probability curve over a budget grid and seed range.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Ground-truth medoid index; computed or voted when absent.
        #[arg(long)]
        truth: Option<usize>,
        #[arg(long)]
        majority: bool,
        #[arg(long)]
        per_trial: bool,
        #[arg(long)]
        timing: bool,
        /// Disable reuse of earlier rounds' references.
        #[arg(long)]
        no_reuse: bool,
    },
    /// Hardness report with bound checks.
    Analyze {
        /// Confirm the quadratic cost on large inputs.
        #[arg(long)]
        yes: bool,
    },
    /// Write a synthetic dataset to `--data` in `--format`.
    Gen {
        #[arg(long, default_value = "gaussian-clusters")]
        kind: SyntheticKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        clusters: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
    Sparse,
    Idx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exact,
    Rand,
    Meddit,
    Corrsh,
    CorrshDoubling,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl Cli {
    fn data_spec(&self) -> Result<DataSpec> {
        let path = self
            .data
            .clone()
            .ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
        let source = match self.format {
            Format::Csv => DatasetSource::Csv { path },
            Format::Bin => DatasetSource::Bin { path },
            Format::Sparse => DatasetSource::Sparse { path },
            Format::Idx => DatasetSource::Idx {
                images: path,
                labels: self.labels.clone(),
                digit: self.digit,
            },
        };
        Ok(DataSpec {
            source,
            subsample: self.subsample.map(|m| Subsample { m, seed: 0 }),
        })
    }

    fn algorithm(&self) -> Algorithm {
        let name = match self.algo {
            Algo::Exact => "exact",
            Algo::Rand => "rand",
            Algo::Meddit => "meddit",
            Algo::Corrsh => "corrsh",
            Algo::CorrshDoubling => "corrsh-doubling",
        };
        Algorithm::parse(name).expect("every value-enum name parses")
    }

    fn budgets(&self) -> Vec<f64> {
        if self.budget_x.is_empty() {
            vec![16.0]
        } else {
            self.budget_x.clone()
        }
    }

    fn write(&self, text: &str) -> Result<()> {
        if self.out.as_os_str() == "-" {
            print!("{text}");
            Ok(())
        } else {
            std::fs::write(&self.out, text).map_err(|e| Error::Io {
                path: self.out.clone(),
                source: e,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Medoid => {
            let ds = cli.data_spec()?.load()?;
            let space = MetricSpace::new(&ds, cli.metric);
            let budget = cli.budgets()[0];
            let result = cli.algorithm().run(&space, budget, cli.seeds.start)?;
            cli.write(&(serde_json::to_string_pretty(&result)? + "\n"))
        }
        Command::Bench {
            seed_base,
            truth,
            majority,
            per_trial,
            timing,
            no_reuse,
        } => {
            let mut algorithm = cli.algorithm();
            if let Algorithm::Corrsh { reuse_past } = &mut algorithm {
                *reuse_past = !no_reuse;
            }
            let mut spec = ExperimentSpec::new(
                cli.data_spec()?,
                cli.metric,
                algorithm,
                cli.budgets(),
                cli.seeds.range(),
            );
            spec.seed_base = *seed_base;
            spec.per_trial = *per_trial;
            spec.timing = *timing;
            spec.ground_truth = match (truth, majority) {
                (Some(index), _) => GroundTruth::Provided { index: *index },
                (None, true) => GroundTruth::MajorityVote,
                (None, false) => GroundTruth::Auto,
            };
            let result = run_experiment(&spec)?;
            let format = match cli.out_format {
                OutFormat::Json => OutputFormat::Json,
                OutFormat::Csv => OutputFormat::Csv,
            };
            emit(&result, &cli.out, format)
        }
        Command::Analyze { yes } => {
            let ds = cli.data_spec()?.load()?;
            if ds.n() > ANALYZE_CONFIRM_N && !yes {
                return Err(Error::InvalidArgument(format!(
                    "analyze on {} points costs about n^2 = {:.1e} distance evaluations; pass --yes to proceed",
                    ds.n(),
                    (ds.n() as f64).powi(2)
                )));
            }
            let space = MetricSpace::new(&ds, cli.metric);
            let report = hardness(&space)?;
            let bounds = rho_bounds_check(&space, &report);
            let value = serde_json::json!({ "report": report, "bounds": bounds });
            cli.write(&(serde_json::to_string_pretty(&value)? + "\n"))
        }
        Command::Gen {
            kind,
            n,
            d,
            clusters,
            spread,
            seed,
        } => {
            let kind = match kind {
                SyntheticKind::GaussianClusters { .. } => SyntheticKind::GaussianClusters {
                    clusters: *clusters,
                    spread: *spread,
                },
                other => other.clone(),
            };
            let ds = gen_synthetic(&SyntheticSpec {
                kind,
                n: *n,
                d: *d,
                seed: *seed,
            })?;
            let path = cli.data.as_ref().ok_or_else(|| {
                Error::InvalidArgument("gen needs --data as the output path".into())
            })?;
            match cli.format {
                Format::Csv => write_csv(&ds, path),
                Format::Bin => write_bin(&ds, path),
                Format::Sparse => write_sparse(&ds, path),
                Format::Idx => Err(Error::InvalidArgument("gen cannot write idx files".into())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
