//! Prints a Table-1 style summary for the builtin designs.
//!
//! `cargo run --release -p spillover-core --example table1 -- [reps] [n]`

use std::time::Instant;

use spillover_core::dgp::{BuiltinDesign, Design};
use spillover_core::graph::GraphGenerator;
use spillover_core::montecarlo::{run_serial, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    for c in [0.0, -0.5] {
        for id in 1..=3 {
            let start = Instant::now();
            let cfg = SimConfig {
                n,
                reps,
                p: 0.5,
                design: Design::Builtin(BuiltinDesign::new(id, c)?),
                generator: GraphGenerator::calibrated(),
                base_seed: 42,
                regenerate_graph_each_rep: true,
            };
            let report = run_serial(&cfg)?;
            println!(
                "design {id} c={c:+.1}  isolated {:.3}  mean degree {:.3}  max degree {:.2}  ({:.1?})",
                report.graph_stats.mean_isolated_fraction,
                report.graph_stats.mean_degree,
                report.graph_stats.mean_max_degree,
                start.elapsed()
            );
            for row in &report.rows {
                println!(
                    "  {:<14} {:<9} est {:>8.5}  true {:>7.3}  proj {:>8.5}  bias {:>7.3}  ci ({:>6.3}, {:>6.3})  cov {:.4}  mcse {:.5}",
                    row.spec.as_str(),
                    row.coef.as_str(),
                    row.mean_estimate,
                    row.true_coef,
                    row.projection,
                    row.bias,
                    row.ci95.0,
                    row.ci95.1,
                    row.coverage,
                    row.mc_se.unwrap_or(f64::NAN)
                );
            }
        }
    }
    Ok(())
}
