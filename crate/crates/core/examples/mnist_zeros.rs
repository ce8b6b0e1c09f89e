//! Error curve of corrSH on the MNIST zeros bundled in `data/`.
//!
//! cargo run --release --example mnist_zeros -- [seeds]

use corrsh::harness::{run_experiment, to_csv, Algorithm, DataSpec, DatasetSource, ExperimentSpec};
use corrsh::metrics::Metric;

fn main() -> corrsh::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map_or(20, |s| s.parse().expect("seed count"));
    let images = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/mnist-zeros-idx3-ubyte.gz"
    );
    let data = DataSpec::new(DatasetSource::Idx {
        images: images.into(),
        labels: None,
        digit: None,
    });
    let grid = vec![8.0, 16.0, 32.0, 64.0, 128.0];
    let mut spec = ExperimentSpec::new(
        data,
        Metric::L2,
        Algorithm::Corrsh { reuse_past: true },
        grid,
        0..seeds,
    );
    spec.timing = true;
    let result = run_experiment(&spec)?;
    eprintln!("n = {}, exact medoid = {}", result.n, result.ground_truth);
    print!("{}", to_csv(&result.curves));
    Ok(())
}
