//! Anytime use: start small and let the doubling wrapper grow the budget.
//!
//! cargo run --release --example doubling

use corrsh::baselines::exact_medoid;
use corrsh::corrsh::doubling_corrsh;
use corrsh::data::{gen_synthetic, SyntheticSpec};
use corrsh::metrics::{Metric, MetricSpace};

fn main() -> corrsh::Result<()> {
    let n = 3000;
    let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(n, 8, 2, 1.0, 3))?;
    let space = MetricSpace::new(&ds, Metric::L2);
    let (truth, _) = exact_medoid(&space);
    for seed in 0..5 {
        let res = doubling_corrsh(&space, n as u64, seed)?;
        println!(
            "seed {seed}: medoid {} ({}), {:.1} pulls per arm over {} rounds",
            res.chosen,
            if res.chosen == truth {
                "correct"
            } else {
                "wrong"
            },
            res.pulls_per_arm(),
            res.trace.len()
        );
    }
    Ok(())
}
