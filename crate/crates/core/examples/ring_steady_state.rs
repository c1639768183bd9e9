//! Random particles under K = |x|^4/4 - |x|^1.5/1.5 settle on a ring whose
//! radius matches the N-particle equilibrium.

use blob_aggregation::harness::{preset, MethodKind};
use blob_aggregation::oracles::ring_radius;
use blob_aggregation::solver::{integrate, ParticleState};
use rand::{Rng, SeedableRng};

fn main() -> blob_aggregation::Result<()> {
    let n = 100;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut positions = Vec::new();
    while positions.len() < 2 * n {
        let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if x * x + y * y < 1.0 {
            positions.extend([x, y]);
        }
    }
    let s0 = ParticleState::from_particles(2, positions, vec![1.0 / n as f64; n], vec![1.0; n])?;
    let cfg = preset("fig6_power")?.simulation().expect("simulation");
    println!("N-particle ring radius: {:.5}", ring_radius(4.0, 1.5, n)?);
    for kind in [MethodKind::Blob, MethodKind::Particle] {
        let m = blob_aggregation::harness::build_method(&cfg.kernel, cfg.mollifier.as_ref(), cfg.delta(), &cfg.table, kind)?;
        let states = integrate(&s0, &m, &cfg.integrator, 8.0, &[1.0, 2.0, 4.0, 8.0])?;
        for s in &states {
            let c = s.center_of_mass();
            let r: Vec<f64> = (0..n).map(|i| (s.position(i)[0] - c[0]).hypot(s.position(i)[1] - c[1])).collect();
            let mean = r.iter().sum::<f64>() / n as f64;
            let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            println!("{kind:?} t = {:>3}: mean radius {mean:.5}, spread {:.2}%", s.time, 100.0 * sd / mean);
        }
    }
    Ok(())
}
