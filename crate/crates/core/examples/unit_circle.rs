//! Points on a circle around a centre: antipodal arms never both beat the centre.
//!
//! cargo run --example unit_circle

use corrsh::analysis::joint_negativity;
use corrsh::data::{gen_synthetic, SyntheticSpec};
use corrsh::metrics::{Metric, MetricSpace};

fn main() -> corrsh::Result<()> {
    let ds = gen_synthetic(&SyntheticSpec::unit_circle(13))?;
    let space = MetricSpace::new(&ds, Metric::L2);
    for k in 2..=12 {
        let p = joint_negativity(&space, 1, k)?;
        println!("arms 1 and {k:>2}: P(both closer than centre) = {p:.4}");
    }
    Ok(())
}
