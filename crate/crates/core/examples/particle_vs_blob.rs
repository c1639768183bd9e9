//! Trajectory errors of the particle method (grad K(0) := 0) and the blob
//! method on the same grids.

use blob_aggregation::harness::{preset, run_study};

fn main() -> blob_aggregation::Result<()> {
    let blob = run_study(&preset("fig1")?.study().expect("study"))?;
    let particle = run_study(&preset("fig1_particle")?.study().expect("study"))?;
    println!("{:>8} {:>14} {:>14}", "h", "blob", "particle");
    for (b, p) in blob.rows.iter().zip(&particle.rows) {
        println!("{:>8.4} {:>14.4e} {:>14.4e}", b.h, b.errors["trajectory_l1"], p.errors["trajectory_l1"]);
    }
    println!(
        "slopes: blob {:.2}, particle {:.2}",
        blob.slopes["trajectory_l1"], particle.slopes["trajectory_l1"]
    );
    Ok(())
}
