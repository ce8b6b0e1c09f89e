//! Sparse rows under cosine distance give the same answers as their dense form.
//!
//! cargo run --release --example sparse_cosine

use corrsh::corrsh::{corr_seq_halving, CorrShConfig};
use corrsh::data::{Dataset, SparseRow};
use corrsh::metrics::{Metric, MetricSpace};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn main() -> corrsh::Result<()> {
    let (n, d) = (3000, 5000);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let rows: Vec<SparseRow> = (0..n)
        .map(|_| {
            let mut cols: Vec<u32> = (0..40).map(|_| rng.random_range(0..d as u32)).collect();
            cols.sort_unstable();
            cols.dedup();
            let vals = cols
                .iter()
                .map(|_| rng.random_range(0.0..5.0f64).floor() + 1.0)
                .collect();
            SparseRow::new(cols, vals)
        })
        .collect();
    let sparse = Dataset::sparse(d, rows)?;
    let dense = sparse.to_dense();

    let cfg = CorrShConfig::new(16 * n as u64, 0);
    let a = corr_seq_halving(&MetricSpace::new(&sparse, Metric::Cosine), &cfg)?;
    let b = corr_seq_halving(&MetricSpace::new(&dense, Metric::Cosine), &cfg)?;
    println!("sparse: medoid {} in {:?}", a.chosen, a.wall_time);
    println!("dense : medoid {} in {:?}", b.chosen, b.wall_time);
    assert_eq!(a.trace, b.trace);
    Ok(())
}
