//! Convergence of the blob method for the 1D Newtonian kernel against the
//! exact radial solution, with delta = h^0.9.

use blob_aggregation::harness::{preset, run_study};

fn main() -> blob_aggregation::Result<()> {
    let mut study = preset("fig1")?.study().expect("fig1 is a study");
    if std::env::args().any(|a| a == "--fine") {
        study.h_list.extend([0.005, 0.0025]);
    }
    let report = run_study(&study)?;
    println!("{:>8} {:>8} {:>14} {:>14}", "h", "delta", "trajectory", "density");
    for r in &report.rows {
        println!(
            "{:>8.4} {:>8.4} {:>14.4e} {:>14.4e}",
            r.h,
            r.delta.unwrap_or(f64::NAN),
            r.errors["trajectory_l1"],
            r.errors["density_l1"]
        );
    }
    for (w, pair) in report.rows.windows(2).enumerate() {
        let rate = |k: &str| (pair[0].errors[k] / pair[1].errors[k]).ln() / (pair[0].h / pair[1].h).ln();
        println!("rate {}-{}: trajectory {:.2}, density {:.2}", w, w + 1, rate("trajectory_l1"), rate("density_l1"));
    }
    println!("fitted: {:?}, predicted m*q = {:?}", report.slopes, report.predicted_rate);
    Ok(())
}
