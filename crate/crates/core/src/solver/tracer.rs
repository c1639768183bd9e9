//! Trajectories starting off the grid, driven by the grid particles.

use serde::{Deserialize, Serialize};

use super::{velocity, IntegratorConfig, Method, ParticleState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerPath {
    pub times: Vec<f64>,
    /// One point per time, `dim` entries each.
    pub positions: Vec<f64>,
    pub dim: usize,
}

impl TracerPath {
    pub fn point(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }
}

/// Grid particle positions between snapshots, by cubic Hermite interpolation
/// of positions and velocities.
struct Interpolant<'a> {
    states: &'a [ParticleState],
    velocities: Vec<Vec<f64>>,
}

impl Interpolant<'_> {
    fn positions_at(&self, t: f64, out: &mut [f64]) {
        let s = self.states;
        let k = match s.iter().rposition(|st| st.time <= t) {
            Some(k) if k + 1 < s.len() => k,
            Some(k) => k.saturating_sub(1),
            None => 0,
        };
        if s.len() == 1 {
            out.copy_from_slice(&s[0].positions);
            return;
        }
        let (a, b) = (&s[k], &s[k + 1]);
        let dt = b.time - a.time;
        let u = (t - a.time) / dt;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let (va, vb) = (&self.velocities[k], &self.velocities[k + 1]);
        for (i, o) in out.iter_mut().enumerate() {
            *o = h00 * a.positions[i] + h10 * dt * va[i] + h01 * b.positions[i] + h11 * dt * vb[i];
        }
    }
}

/// Integrates `dX/dt = -sum_j grad K_delta(X - X_j(t)) m_j`, `X(t0) = alpha`,
/// through the time span covered by `states`, and reports `X` at every
/// snapshot time.
pub fn trace_offgrid(states: &[ParticleState], m: &Method, alpha: &[f64], cfg: &IntegratorConfig) -> Result<TracerPath> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidInput("tracing needs at least one snapshot".into()))?;
    let dim = first.dim;
    if alpha.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: alpha.len(),
        });
    }
    if states.windows(2).any(|w| !(w[1].time > w[0].time) || w[1].len() != w[0].len()) {
        return Err(Error::InvalidInput("snapshots must have increasing times and a fixed particle count".into()));
    }
    let velocities = states.iter().map(|s| velocity(s, m)).collect::<Result<Vec<_>>>()?;
    let field = Interpolant { states, velocities };
    let weights = &first.weights;
    let mut grid = vec![0.0; first.positions.len()];
    let times: Vec<f64> = states.iter().map(|s| s.time).collect();
    let t_last = *times.last().expect("nonempty");

    let (ys, _) = super::solve(
        |t, x, out| {
            if t > t_last * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::InvalidInput(format!("time {t} is past the last snapshot {t_last}")));
            }
            field.positions_at(t, &mut grid);
            out.iter_mut().for_each(|v| *v = 0.0);
            for (j, mj) in weights.iter().enumerate() {
                let xj = &grid[j * dim..(j + 1) * dim];
                let r = x.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if r == 0.0 {
                    continue;
                }
                let f = match m {
                    Method::Blob(rk) => rk.grad_profile(r)?,
                    Method::Particle(k) => k.radial_derivative(r)?,
                };
                for a in 0..dim {
                    out[a] -= f / r * (x[a] - xj[a]) * mj;
                }
            }
            Ok(())
        },
        first.time,
        alpha,
        &times,
        cfg,
    )?;
    Ok(TracerPath {
        times,
        positions: ys.concat(),
        dim,
    })
}
