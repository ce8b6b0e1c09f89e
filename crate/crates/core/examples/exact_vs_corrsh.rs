//! Compare the exact medoid with one correlated sequential halving run.
//!
//! cargo run --release --example exact_vs_corrsh -- [n] [budget_per_arm]

use corrsh::baselines::exact_medoid_run;
use corrsh::corrsh::{corr_seq_halving, CorrShConfig};
use corrsh::data::{gen_synthetic, SyntheticSpec};
use corrsh::metrics::{Metric, MetricSpace};

fn main() -> corrsh::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(5000, |a| a.parse().expect("n"));
    let per_arm: u64 = args
        .next()
        .map_or(32, |a| a.parse().expect("budget per arm"));

    let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(n, 16, 3, 1.5, 7))?;
    let space = MetricSpace::new(&ds, Metric::L2);

    let exact = exact_medoid_run(&space);
    let fast = corr_seq_halving(&space, &CorrShConfig::new(per_arm * n as u64, 0))?;

    println!(
        "exact : medoid {:>6}  {:>12} distances  {:?}",
        exact.chosen, exact.fresh_pulls, exact.wall_time
    );
    println!(
        "corrSH: medoid {:>6}  {:>12} distances  {:?}",
        fast.chosen, fast.fresh_pulls, fast.wall_time
    );
    for r in &fast.trace {
        println!(
            "  round {}: {:>6} arms, {:>5} references ({} fresh){}",
            r.round,
            r.surviving(),
            r.t(),
            r.fresh_references,
            if r.exact_branch { ", exact" } else { "" }
        );
    }
    Ok(())
}
