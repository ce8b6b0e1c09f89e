//! RAND and the UCB baseline next to corrSH at comparable pull counts.
//!
//! cargo run --release --example baselines

use corrsh::baselines::{exact_medoid, meddit, rand_medoid, MedditConfig};
use corrsh::corrsh::{corr_seq_halving, CorrShConfig, RunResult};
use corrsh::data::{gen_synthetic, SyntheticSpec};
use corrsh::metrics::{Metric, MetricSpace};

fn main() -> corrsh::Result<()> {
    let n = 4000;
    let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(n, 20, 5, 2.0, 11))?;
    let space = MetricSpace::new(&ds, Metric::L1);
    let (truth, _) = exact_medoid(&space);

    let mut rows: Vec<(&str, Vec<RunResult>)> = vec![
        ("rand k=64", vec![]),
        ("meddit", vec![]),
        ("corrsh x=32", vec![]),
    ];
    for seed in 0..20 {
        rows[0].1.push(rand_medoid(&space, 64, seed)?);
        rows[1].1.push(meddit(
            &space,
            &MedditConfig::new(1.0 / n as f64, 1000 * n as u64, seed),
        )?);
        rows[2].1.push(corr_seq_halving(
            &space,
            &CorrShConfig::new(32 * n as u64, seed),
        )?);
    }
    println!("{:<12} {:>8} {:>14}", "algorithm", "errors", "pulls/arm");
    for (name, runs) in rows {
        let errors = runs.iter().filter(|r| r.chosen != truth).count();
        let pulls = runs.iter().map(|r| r.pulls_per_arm()).sum::<f64>() / runs.len() as f64;
        println!("{name:<12} {errors:>5}/20 {pulls:>14.1}");
    }
    Ok(())
}
