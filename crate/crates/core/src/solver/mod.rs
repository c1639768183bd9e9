//! The blob particle system
//!
//! ```text
//! dX_i/dt   = v_i   = -sum_j grad K_delta(X_i - X_j) m_j
//! drho_i/dt = -(div v)_i rho_i,  (div v)_i = -sum_j lap K_delta(X_i - X_j) m_j
//! ```
//!
//! with weights `m_j = rho0(jh) h^d`, and its unregularized counterpart (the
//! particle method, `grad K(0) := 0`, densities frozen).

mod integrator;
mod tracer;

pub use integrator::{solve, IntegratorConfig, Scheme, Stats};
pub use tracer::{trace_offgrid, TracerPath};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::GridDiscretization;
use crate::kernels::Kernel;
use crate::regkernel::RegularizedKernel;

/// Snapshot of the particle system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub time: f64,
    pub dim: usize,
    pub h: f64,
    /// Grid multi-index each particle started from, `dim` entries per particle.
    pub indices: Vec<i64>,
    /// Positions, `dim` entries per particle.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub densities: Vec<f64>,
}

impl ParticleState {
    pub fn from_grid(grid: &GridDiscretization) -> Self {
        Self {
            time: 0.0,
            dim: grid.dim,
            h: grid.h,
            indices: grid.indices.clone(),
            positions: grid.positions.clone(),
            weights: grid.weights.clone(),
            densities: grid.densities.clone(),
        }
    }

    /// Particles at arbitrary positions; indices are consecutive integers.
    pub fn from_particles(dim: usize, positions: Vec<f64>, weights: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if positions.len() != n * dim || densities.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} weights need {} coordinates and {} densities",
                n,
                n * dim,
                n
            )));
        }
        Ok(Self {
            time: 0.0,
            dim,
            h: 0.0,
            indices: (0..n as i64).flat_map(|i| std::iter::repeat(i).take(dim)).collect(),
            positions,
            weights,
            densities,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index(&self, i: usize) -> &[i64] {
        &self.indices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum m_i X_i / sum m_i`.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for (i, m) in self.weights.iter().enumerate() {
            for (a, x) in self.position(i).iter().enumerate() {
                c[a] += m * x;
            }
        }
        let total = self.mass();
        c.iter_mut().for_each(|v| *v /= total);
        c
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut s = self.clone();
        for (k, x) in s.positions.iter_mut().enumerate() {
            *x += shift[k % self.dim];
        }
        s
    }

    /// Reorders particles so that new particle `k` is old particle `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.dim;
        let mut s = self.clone();
        for (k, &p) in perm.iter().enumerate() {
            s.positions[k * d..(k + 1) * d].copy_from_slice(self.position(p));
            s.indices[k * d..(k + 1) * d].copy_from_slice(self.index(p));
            s.weights[k] = self.weights[p];
            s.densities[k] = self.densities[p];
        }
        s
    }

    fn packed(&self) -> Vec<f64> {
        let mut y = self.positions.clone();
        y.extend_from_slice(&self.densities);
        y
    }

    fn unpack(&self, time: f64, y: &[f64]) -> Self {
        let split = self.positions.len();
        Self {
            time,
            dim: self.dim,
            h: self.h,
            indices: self.indices.clone(),
            positions: y[..split].to_vec(),
            weights: self.weights.clone(),
            densities: y[split..].to_vec(),
        }
    }
}

/// Blob method with a regularized kernel, or the particle method with the
/// raw kernel and `grad K(0) := 0`.
#[derive(Debug, Clone)]
pub enum Method {
    Blob(RegularizedKernel),
    Particle(Kernel),
}

impl Method {
    pub fn dim(&self) -> usize {
        match self {
            Method::Blob(rk) => rk.dim(),
            Method::Particle(k) => k.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Blob(_) => "blob",
            Method::Particle(_) => "particle",
        }
    }

    /// Whether densities are transported along trajectories.
    pub fn evolves_density(&self) -> bool {
        matches!(self, Method::Blob(_))
    }

    /// `(f(r), lap(r))` for the pair `(i, j)` at distance `r`.
    fn pair(&self, r: f64, i: usize, j: usize, want_lap: bool) -> Result<(f64, f64)> {
        match self {
            Method::Blob(rk) => rk.grad_lap(r),
            Method::Particle(k) => {
                let f = k.radial_derivative(r).map_err(|e| match e {
                    Error::SingularOrigin(_) => Error::CoincidentParticles(i, j),
                    e => e,
                })?;
                let lap = if want_lap {
                    k.radial_laplacian(r).map_err(|e| match e {
                        Error::SingularOrigin(_) => Error::CoincidentParticles(i, j),
                        e => e,
                    })?
                } else {
                    0.0
                };
                Ok((f, lap))
            }
        }
    }
}

/// Velocities (and, if requested, divergences) at every particle. Each
/// particle's sum runs over `j` in ascending order, so results do not depend
/// on the thread count.
fn interactions(method: &Method, dim: usize, positions: &[f64], weights: &[f64], want_div: bool, vel: &mut [f64], div: &mut [f64]) -> Result<()> {
    if method.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: method.dim(),
            got: dim,
        });
    }
    let n = weights.len();
    let particle = matches!(method, Method::Particle(_));
    vel.par_chunks_mut(dim)
        .zip(div.par_iter_mut())
        .enumerate()
        .try_for_each(|(i, (v, dv))| -> Result<()> {
            v.iter_mut().for_each(|x| *x = 0.0);
            *dv = 0.0;
            let xi = &positions[i * dim..(i + 1) * dim];
            let mut diff = [0.0; 3];
            for j in 0..n {
                if particle && j == i {
                    continue;
                }
                let xj = &positions[j * dim..(j + 1) * dim];
                let mut r2 = 0.0;
                for a in 0..dim {
                    diff[a] = xi[a] - xj[a];
                    r2 += diff[a] * diff[a];
                }
                let r = r2.sqrt();
                let (f, lap) = method.pair(r, i, j, want_div)?;
                let m = weights[j];
                if r > 0.0 {
                    let s = f / r * m;
                    for a in 0..dim {
                        v[a] -= s * diff[a];
                    }
                }
                *dv -= lap * m;
            }
            Ok(())
        })
}

fn check_state(s: &ParticleState, m: &Method) -> Result<()> {
    if s.dim != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: s.dim,
        });
    }
    if !(1..=3).contains(&s.dim) {
        return Err(Error::InvalidInput(format!("unsupported dimension {}", s.dim)));
    }
    if let Some(bad) = s.positions.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(*bad));
    }
    Ok(())
}

/// `v_i = -sum_j grad K_delta(X_i - X_j) m_j`, flattened.
pub fn velocity(s: &ParticleState, m: &Method) -> Result<Vec<f64>> {
    check_state(s, m)?;
    let mut vel = vec![0.0; s.positions.len()];
    let mut scratch = vec![0.0; s.len()];
    interactions(m, s.dim, &s.positions, &s.weights, false, &mut vel, &mut scratch)?;
    Ok(vel)
}

/// `(div v)_i = -sum_j lap K_delta(X_i - X_j) m_j`.
pub fn divergence(s: &ParticleState, m: &Method) -> Result<Vec<f64>> {
    check_state(s, m)?;
    if let Method::Particle(k) = m {
        if k.has_newtonian() {
            return Err(Error::VariantMismatch(
                "the Laplacian of the Newtonian potential is a point mass; use the blob method".into(),
            ));
        }
    }
    let mut vel = vec![0.0; s.positions.len()];
    let mut div = vec![0.0; s.len()];
    interactions(m, s.dim, &s.positions, &s.weights, true, &mut vel, &mut div)?;
    Ok(div)
}

/// Time derivative of positions followed by densities.
pub fn rhs(s: &ParticleState, m: &Method) -> Result<Vec<f64>> {
    check_state(s, m)?;
    let mut out = vec![0.0; s.positions.len() + s.len()];
    packed_rhs(m, s.dim, &s.weights, &s.packed(), &mut out)?;
    Ok(out)
}

fn packed_rhs(m: &Method, dim: usize, weights: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    let split = weights.len() * dim;
    let (positions, densities) = y.split_at(split);
    let (vel, ddens) = out.split_at_mut(split);
    let blob = m.evolves_density();
    interactions(m, dim, positions, weights, blob, vel, ddens)?;
    if blob {
        for (d, rho) in ddens.iter_mut().zip(densities) {
            *d = -*d * rho;
        }
    } else {
        ddens.iter_mut().for_each(|d| *d = 0.0);
    }
    Ok(())
}

/// Evolves `s0` and returns snapshots at `sample_times` (or only at `t_end`
/// when no samples are given).
pub fn integrate(s0: &ParticleState, m: &Method, cfg: &IntegratorConfig, t_end: f64, sample_times: &[f64]) -> Result<Vec<ParticleState>> {
    Ok(integrate_with_stats(s0, m, cfg, t_end, sample_times)?.0)
}

pub fn integrate_with_stats(
    s0: &ParticleState,
    m: &Method,
    cfg: &IntegratorConfig,
    t_end: f64,
    sample_times: &[f64],
) -> Result<(Vec<ParticleState>, Stats)> {
    check_state(s0, m)?;
    if !(t_end >= s0.time) {
        return Err(Error::InvalidInput(format!("t_end {t_end} precedes the start time {}", s0.time)));
    }
    let samples: Vec<f64> = if sample_times.is_empty() { vec![t_end] } else { sample_times.to_vec() };
    if samples.iter().any(|&t| t < s0.time || t > t_end) {
        return Err(Error::InvalidInput(format!(
            "sample times must lie in [{}, {t_end}]",
            s0.time
        )));
    }
    let (ys, stats) = solve(
        |_, y, out| packed_rhs(m, s0.dim, &s0.weights, y, out),
        s0.time,
        &s0.packed(),
        &samples,
        cfg,
    )?;
    Ok((samples.iter().zip(ys).map(|(&t, y)| s0.unpack(t, &y)).collect(), stats))
}

/// `n + 1` equally spaced times from `t0` to `t1`, both included.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{discretize, DensityProfile, Shape};
    use crate::kernels::KernelTerm;
    use crate::mollifiers::{Builtin, MollifierSpec};
    use crate::regkernel::{build, TableConfig};
    use proptest::prelude::*;

    fn blob(kernel: Kernel, b: Builtin, delta: f64) -> Method {
        let m = MollifierSpec::builtin(b).scaled(delta).unwrap();
        Method::Blob(build(&kernel, &m, &TableConfig::with_size(2.5, 2000)).unwrap())
    }

    fn pair_state(x0: f64) -> ParticleState {
        ParticleState::from_particles(1, vec![-x0, x0], vec![0.5, 0.5], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn velocity_examples() {
        let quad = blob(Kernel::quadratic(1).unwrap(), Builtin::Psi4_1d, 0.1);
        let v = velocity(&pair_state(1.0), &quad).unwrap();
        assert_eq!(v, vec![1.0, -1.0]);
        let single = ParticleState::from_particles(2, vec![0.3, -0.2], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(velocity(&single, &blob(Kernel::newtonian(2).unwrap(), Builtin::Psi4_2d, 0.1)).unwrap(), vec![0.0, 0.0]);
        let particle = Method::Particle(Kernel::newtonian(2).unwrap());
        assert_eq!(velocity(&single, &particle).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn divergence_examples() {
        let newton = blob(Kernel::newtonian(1).unwrap(), Builtin::Psi4_1d, 1.0);
        let one = ParticleState::from_particles(1, vec![0.0], vec![1.0], vec![1.0]).unwrap();
        let d = divergence(&one, &newton).unwrap()[0];
        assert!((d + 7.0 / (6.0 * std::f64::consts::PI.sqrt())).abs() < 1e-15);

        let quad = blob(Kernel::quadratic(2).unwrap(), Builtin::Psi4_2d, 0.2);
        let g = discretize(&DensityProfile::new(Shape::PolyBump { p: 2 }, 2).unwrap(), 0.25).unwrap();
        let s = ParticleState::from_grid(&g);
        for d in divergence(&s, &quad).unwrap() {
            assert!((d + 2.0 * s.mass()).abs() < 1e-12);
        }

        let narrow = blob(Kernel::newtonian(1).unwrap(), Builtin::Psi4_1d, 0.05);
        let far = ParticleState::from_particles(1, vec![0.0, 3.0], vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let d = divergence(&far, &narrow).unwrap();
        let self_term = -narrow_self(&narrow);
        assert!((d[1] - self_term).abs() < 1e-10);

        let particle = Method::Particle(Kernel::newtonian(1).unwrap());
        assert!(matches!(divergence(&far, &particle), Err(Error::VariantMismatch(_))));
    }

    fn narrow_self(m: &Method) -> f64 {
        match m {
            Method::Blob(rk) => rk.lap_profile(0.0).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn coincident_particles_are_reported() {
        let s = ParticleState::from_particles(1, vec![0.2, 0.2], vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let r = velocity(&s, &Method::Particle(Kernel::newtonian(1).unwrap()));
        assert!(matches!(r, Err(Error::CoincidentParticles(_, _))));
        // smooth kernels are fine
        assert_eq!(velocity(&s, &Method::Particle(Kernel::quadratic(1).unwrap())).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn quadratic_pair_contracts_exponentially() {
        let quad = blob(Kernel::quadratic(1).unwrap(), Builtin::Psi4_1d, 0.1);
        let s0 = pair_state(1.0);
        let d = rhs(&s0, &quad).unwrap();
        assert_eq!(&d[..2], &[1.0, -1.0]);
        let out = integrate(&s0, &quad, &IntegratorConfig::default(), 1.0, &[]).unwrap();
        assert!((out[0].positions[1] - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(out[0].weights, s0.weights);
        let same = integrate(&s0, &quad, &IntegratorConfig::default(), 0.0, &[]).unwrap();
        assert_eq!(same[0], s0);
    }

    #[test]
    fn zero_density_stays_zero() {
        let m = blob(Kernel::newtonian(1).unwrap(), Builtin::Psi4_1d, 0.2);
        let s0 = ParticleState::from_particles(1, vec![-0.3, 0.0, 0.4], vec![0.2, 0.3, 0.1], vec![1.0, 0.0, 2.0]).unwrap();
        let out = integrate(&s0, &m, &IntegratorConfig::default(), 0.5, &[0.25, 0.5]).unwrap();
        assert!(out.iter().all(|s| s.densities[1] == 0.0));
    }

    #[test]
    fn center_density_tracks_exact_growth() {
        let h = 0.01;
        let g = discretize(&DensityProfile::new(Shape::PolyBump { p: 20 }, 1).unwrap(), h).unwrap();
        let s0 = ParticleState::from_grid(&g);
        let m = blob(Kernel::newtonian(1).unwrap(), Builtin::Psi4_1d, h.powf(0.9));
        let c = (0..s0.len()).find(|&i| s0.index(i)[0] == 0).unwrap();
        let out = integrate(&s0, &m, &IntegratorConfig::default(), 0.1, &[]).unwrap();
        let exact = 1.0 / (1.0 - 0.1);
        assert!((out[0].densities[c] / exact - 1.0).abs() < 0.05);
    }

    #[test]
    fn particle_method_freezes_densities() {
        let g = discretize(&DensityProfile::new(Shape::PolyBump { p: 2 }, 1).unwrap(), 0.1).unwrap();
        let s0 = ParticleState::from_grid(&g);
        let out = integrate(&s0, &Method::Particle(Kernel::newtonian(1).unwrap()), &IntegratorConfig::default(), 0.3, &[]).unwrap();
        assert_eq!(out[0].densities, s0.densities);
        assert_ne!(out[0].positions, s0.positions);
    }

    fn random_state(dim: usize, n: usize, seed: u64) -> ParticleState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = (0..n).map(|_| rng.gen_range(0.01..0.1)).collect();
        let densities = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        ParticleState::from_particles(dim, positions, weights, densities).unwrap()
    }

    fn sample_methods() -> Vec<Method> {
        vec![
            blob(Kernel::newtonian(2).unwrap(), Builtin::Psi4_2d, 0.2),
            blob(Kernel::attractive_repulsive(4.0, 1.5, 2).unwrap(), Builtin::Psi4_2d, 0.2),
            blob(
                Kernel::new(vec![KernelTerm::morse(1.0, 1.0, 1.0), KernelTerm::morse(1.0, 2.0, -2.0)], 2).unwrap(),
                Builtin::Psi4_2d,
                0.3,
            ),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn center_of_mass_is_conserved(seed in any::<u64>(), which in 0usize..3) {
            let m = &sample_methods()[which];
            let s0 = random_state(2, 12, seed);
            let out = integrate(&s0, m, &IntegratorConfig::default(), 1.0, &[0.5, 1.0]).unwrap();
            let c0 = s0.center_of_mass();
            for s in &out {
                let c = s.center_of_mass();
                prop_assert!((c[0] - c0[0]).abs() < 1e-10 && (c[1] - c0[1]).abs() < 1e-10);
                prop_assert_eq!(&s.weights, &s0.weights);
            }
        }

        #[test]
        fn permutation_and_translation_equivariance(seed in any::<u64>(), shift in prop::array::uniform2(-2.0..2.0f64)) {
            let m = &sample_methods()[1];
            let s0 = random_state(2, 9, seed);
            let base = integrate(&s0, m, &IntegratorConfig::default(), 0.5, &[]).unwrap().remove(0);

            let perm: Vec<usize> = (0..9).rev().collect();
            let p = integrate(&s0.permuted(&perm), m, &IntegratorConfig::default(), 0.5, &[]).unwrap().remove(0);
            let back = base.permuted(&perm);
            for (a, b) in p.positions.iter().zip(&back.positions) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            for (a, b) in p.densities.iter().zip(&back.densities) {
                prop_assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
            }

            let t = integrate(&s0.translated(&shift), m, &IntegratorConfig::default(), 0.5, &[]).unwrap().remove(0);
            let expect = base.translated(&shift);
            for (a, b) in t.positions.iter().zip(&expect.positions) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reflection_symmetry_is_preserved() {
        let h = 0.05;
        let g = discretize(&DensityProfile::new(Shape::PolyBump { p: 4 }, 1).unwrap(), h).unwrap();
        let s0 = ParticleState::from_grid(&g);
        let m = blob(Kernel::new(vec![KernelTerm::power_law(3.0, 1.0), KernelTerm::newtonian(-1.0)], 1).unwrap(), Builtin::Psi4_1d, 0.1);
        let s = integrate(&s0, &m, &IntegratorConfig::default(), 1.0, &[]).unwrap().remove(0);
        let n = s.len();
        for i in 0..n {
            assert!((s.positions[i] + s.positions[n - 1 - i]).abs() < 1e-9);
            assert!((s.densities[i] - s.densities[n - 1 - i]).abs() < 1e-9);
        }
    }
}
