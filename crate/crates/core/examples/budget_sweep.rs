//! Error probability of corrSH against budget on a synthetic dataset, printed as CSV.
//!
//! cargo run --release --example budget_sweep

use corrsh::data::SyntheticSpec;
use corrsh::harness::{run_experiment, to_csv, Algorithm, DataSpec, DatasetSource, ExperimentSpec};
use corrsh::metrics::Metric;

fn main() -> corrsh::Result<()> {
    let data = DataSpec::new(DatasetSource::Synthetic {
        spec: SyntheticSpec::gaussian_clusters(2000, 10, 4, 1.0, 1),
    });
    let grid = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let spec = ExperimentSpec::new(
        data,
        Metric::L1,
        Algorithm::Corrsh { reuse_past: true },
        grid,
        0..200,
    );
    let result = run_experiment(&spec)?;
    print!("{}", to_csv(&result.curves));
    match result.zero_error_budget() {
        Some(x) => eprintln!("zero-error budget: {x} pulls per arm"),
        None => eprintln!("no zero-error budget on this grid"),
    }
    Ok(())
}
