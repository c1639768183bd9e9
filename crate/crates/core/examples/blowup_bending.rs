//! Indicator initial data under the 1D Newtonian kernel: the exact density
//! 1/(1-t) blows up at t = 1, while blob trajectories bend and stay finite.

use blob_aggregation::harness::{preset, run_simulation};

fn main() -> blob_aggregation::Result<()> {
    let study = preset("fig3")?.study().expect("study");
    let mut cfg = study.simulation(0.01, 1.2);
    cfg.sample_times = Some(vec![0.0, 0.4, 0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2]);
    let run = run_simulation(&cfg)?;
    let center = (0..run.initial.len()).find(|&i| run.initial.index(i) == [0]).expect("origin");
    let edge = run.initial.len() - 1;
    println!("{:>6} {:>14} {:>14} {:>12}", "t", "rho(center)", "exact", "X(edge)");
    for s in &run.snapshots {
        let exact = if s.time < 1.0 { format!("{:.4}", 1.0 / (1.0 - s.time)) } else { "-".into() };
        println!("{:>6.2} {:>14.4} {:>14} {:>12.6}", s.time, s.densities[center], exact, s.position(edge)[0]);
    }
    Ok(())
}
