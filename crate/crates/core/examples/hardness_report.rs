//! Hardness quantities of a dataset and the bound checks on the estimated rho values.
//!
//! cargo run --release --example hardness_report -- [csv path] [metric]

use corrsh::analysis::{hardness, rho_bounds_check};
use corrsh::data::{gen_synthetic, load_dense, DenseFormat, SyntheticSpec};
use corrsh::metrics::{Metric, MetricSpace};

fn main() -> corrsh::Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = match args.next() {
        Some(path) => load_dense(path, DenseFormat::Csv)?,
        None => gen_synthetic(&SyntheticSpec::gaussian_clusters(1000, 6, 3, 1.0, 2))?,
    };
    let metric: Metric = args.next().map_or(Ok(Metric::L1), |m| m.parse())?;
    let space = MetricSpace::new(&ds, metric);
    let report = hardness(&space)?;

    println!(
        "medoid {}  theta {:.4}  sigma {:.4}",
        report.medoid, report.theta[report.medoid], report.sigma
    );
    println!(
        "H2 {:.3}  H2~ {:.3}  ratio {:.2}",
        report.h2, report.h2_tilde, report.ratio
    );
    println!("closest arms by gap:");
    for &i in report.gap_order.iter().skip(1).take(5) {
        println!(
            "  {i:>6}  delta {:.5}  rho {:.3}",
            report.delta[i], report.rho[i]
        );
    }
    let check = rho_bounds_check(&space, &report);
    println!(
        "bound violations: {}{}",
        check.violations.len(),
        if check.triangle_skipped {
            " (triangle checks skipped)"
        } else {
            ""
        }
    );
    Ok(())
}
