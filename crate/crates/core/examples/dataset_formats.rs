//! Write one dataset in every supported format and read it back.
//!
//! cargo run --example dataset_formats

use corrsh::data::{
    gen_synthetic, load_dense, load_sparse, subsample, write_bin, write_csv, write_sparse,
    DenseFormat, SyntheticSpec,
};
use corrsh::metrics::{dist, Metric};

fn main() -> corrsh::Result<()> {
    let dir = std::env::temp_dir().join("corrsh-formats");
    std::fs::create_dir_all(&dir).map_err(|e| corrsh::Error::InvalidArgument(e.to_string()))?;
    let ds = gen_synthetic(&SyntheticSpec::gaussian_clusters(100, 4, 2, 0.5, 9))?;

    let csv = dir.join("points.csv");
    let bin = dir.join("points.bin");
    let sparse = dir.join("points.sparse");
    write_csv(&ds, &csv)?;
    write_bin(&ds, &bin)?;
    write_sparse(&ds, &sparse)?;

    let from_csv = load_dense(&csv, DenseFormat::Csv)?;
    let from_bin = load_dense(&bin, DenseFormat::Bin)?;
    let from_sparse = load_sparse(&sparse)?;
    println!("csv round trip exact: {}", from_csv == ds);
    println!("bin round trip exact: {}", from_bin == ds);
    println!("sparse round trip exact: {}", from_sparse.to_dense() == ds);

    let d1 = dist(Metric::L2, ds.point(0), ds.point(1))?;
    println!("l2 between points 0 and 1: {d1}");

    let small = subsample(&ds, 10, 42)?;
    println!(
        "subsample of {} points, dimension {}",
        small.n(),
        small.dim()
    );
    println!("files in {}", dir.display());
    Ok(())
}
