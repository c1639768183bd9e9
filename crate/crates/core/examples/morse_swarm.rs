//! Morse-type kernels: energy decay and the final swarm extent for regular
//! and star-shaped initial data.

use blob_aggregation::harness::{preset, run_simulation};

fn main() -> blob_aggregation::Result<()> {
    for name in ["fig7_morse1", "fig7_morse2", "fig7_morse2_star"] {
        let mut cfg = preset(name)?.simulation().expect("simulation");
        cfg.samples = Some(5);
        let run = run_simulation(&cfg)?;
        let energies = run.energies.as_ref().expect("energy tracked");
        println!("{name}: {} particles, delta = {:.3}", run.initial.len(), cfg.delta());
        for (s, e) in run.snapshots.iter().zip(energies) {
            let c = s.center_of_mass();
            let extent = (0..s.len())
                .map(|i| (s.position(i)[0] - c[0]).hypot(s.position(i)[1] - c[1]))
                .fold(0.0, f64::max);
            println!("  t = {:>4.1}: energy {e:.6}, max radius {extent:.4}", s.time);
        }
    }
    Ok(())
}
