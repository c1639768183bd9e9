//! Following points that are not grid particles through the velocity field
//! generated by a blob run.

use blob_aggregation::harness::{preset, run_simulation};
use blob_aggregation::solver::{trace_offgrid, uniform_times};

fn main() -> blob_aggregation::Result<()> {
    let mut cfg = preset("fig5_newtonian_smooth")?.simulation().expect("simulation");
    cfg.t_end = 2.0;
    cfg.samples = None;
    cfg.sample_times = Some(uniform_times(0.0, 2.0, 40));
    let run = run_simulation(&cfg)?;
    let method = cfg.method()?;
    for alpha in [[0.5, 0.0], [0.3, 0.3], [1.5, 0.0]] {
        let path = trace_offgrid(&run.snapshots, &method, &alpha, &cfg.integrator)?;
        let end = path.point(path.times.len() - 1);
        println!("start {alpha:?} -> ({:.5}, {:.5}) at t = 2", end[0], end[1]);
    }
    Ok(())
}
