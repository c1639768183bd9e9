//! Reference solutions: the radial Newtonian solution in mass coordinates,
//! the exponential contraction under `|x|^2/2`, and the radius of a
//! particle ring in force balance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::initial_data::DensityProfile;
use crate::kernels::{Kernel, TermForm};
use crate::quadrature::{integrate, Tolerance};
use crate::solver::ParticleState;

/// Distance below the blowup time at which evaluation is refused.
const BLOWUP_GUARD: f64 = 1e-9;

/// Exact solution for the Newtonian kernel and radial initial data.
///
/// With `m(r) = int_0^r rho0(s) s^{d-1} ds`, trajectories obey
/// `r(t)^d = r(0)^d - d t m(r(0))` and the density along them is
/// `(1/rho0 - t)^{-1}`, up to the blowup time `1 / max rho0`.
#[derive(Debug, Clone)]
pub struct RadialExactSolution {
    profile: DensityProfile,
    t_star: f64,
}

pub fn newtonian_radial(profile: &DensityProfile) -> Result<RadialExactSolution> {
    if !profile.is_radial() {
        return Err(Error::NonRadialProfile(format!("{:?}", profile.shape())));
    }
    if !(1..=2).contains(&profile.dim()) {
        return Err(Error::InvalidInput(format!(
            "the radial Newtonian solution is implemented for d = 1, 2 (got {})",
            profile.dim()
        )));
    }
    Ok(RadialExactSolution {
        profile: *profile,
        t_star: 1.0 / profile.max_density(),
    })
}

impl RadialExactSolution {
    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn blowup_time(&self) -> f64 {
        self.t_star
    }

    pub fn profile(&self) -> &DensityProfile {
        &self.profile
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t >= self.t_star - BLOWUP_GUARD {
            return Err(Error::PastBlowup { t, t_star: self.t_star });
        }
        Ok(())
    }

    /// `m(r) = int_0^r rho0(s) s^{d-1} ds`.
    pub fn mass_coordinate(&self, r: f64) -> f64 {
        // constant outside the support
        let r = r.abs().min(self.profile.support_radius());
        if r == 0.0 {
            return 0.0;
        }
        let d = self.dim() as i32;
        integrate(
            |s| self.profile.radial_value(s).unwrap_or(0.0) * s.powi(d - 1),
            &[0.0, r],
            Tolerance::default(),
        )
        .value
    }

    fn radius_at(&self, r0: f64, t: f64) -> f64 {
        let d = self.dim() as i32;
        let rd = r0.powi(d) - d as f64 * t * self.mass_coordinate(r0);
        rd.max(0.0).powf(1.0 / d as f64)
    }

    /// `X(alpha, t)`.
    pub fn trajectory(&self, alpha: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let r0 = norm(alpha);
        if r0 == 0.0 {
            return Ok(vec![0.0; alpha.len()]);
        }
        let scale = self.radius_at(r0, t) / r0;
        Ok(alpha.iter().map(|a| a * scale).collect())
    }

    /// `rho(X(alpha, t), t)`.
    pub fn density(&self, alpha: &[f64], t: f64) -> Result<f64> {
        self.check_time(t)?;
        let rho0 = self.profile.eval_rho0(alpha);
        Ok(if rho0 > 0.0 { rho0 / (1.0 - t * rho0) } else { 0.0 })
    }

    /// `v(X(alpha, t), t) = -m(|alpha|) x / |x|^d`.
    pub fn velocity(&self, alpha: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let r0 = norm(alpha);
        if r0 == 0.0 {
            return Ok(vec![0.0; alpha.len()]);
        }
        let m = self.mass_coordinate(r0);
        let r = self.radius_at(r0, t);
        let speed = m / r.powi(self.dim() as i32 - 1);
        Ok(alpha.iter().map(|a| -speed * a / r0).collect())
    }

    /// Exact positions, densities and velocities for every particle of a
    /// grid state, flattened in particle order.
    pub fn evaluate(&self, initial: &ParticleState, t: f64) -> Result<ExactValues> {
        let mut out = ExactValues {
            positions: Vec::with_capacity(initial.positions.len()),
            densities: Vec::with_capacity(initial.len()),
            velocities: Vec::with_capacity(initial.positions.len()),
        };
        for i in 0..initial.len() {
            let alpha = initial.position(i);
            out.positions.extend(self.trajectory(alpha, t)?);
            out.densities.push(self.density(alpha, t)?);
            out.velocities.extend(self.velocity(alpha, t)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactValues {
    pub positions: Vec<f64>,
    pub densities: Vec<f64>,
    pub velocities: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Positions under `K = |x|^2/2`: `x_bar + e^{-M t} (X(0) - x_bar)`.
pub fn quadratic_contraction(initial: &ParticleState, t: f64) -> Vec<f64> {
    let total = initial.mass();
    let center = initial.center_of_mass();
    let decay = (-total * t).exp();
    initial
        .positions
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let c = center[k % initial.dim];
            c + decay * (x - c)
        })
        .collect()
}

/// Net radial force per unit mass on one of `n` equal masses equally spaced
/// on a circle of radius `r`, for `K = |x|^a/a - |x|^b/b` (positive means
/// pulled inward).
pub fn ring_force(a: f64, b: f64, n: usize, r: f64) -> f64 {
    (1..n)
        .map(|j| {
            let half = PI * j as f64 / n as f64;
            let s = half.sin();
            let d = 2.0 * r * s;
            (d.powf(a - 1.0) - d.powf(b - 1.0)) * s
        })
        .sum()
}

/// Radius at which `n` equal masses on a circle are in force balance under
/// `|x|^a/a - |x|^b/b`.
pub fn ring_radius(a: f64, b: f64, n: usize) -> Result<f64> {
    ring_radius_in(a, b, n, 1e-6, 1e6)
}

pub fn ring_radius_in(a: f64, b: f64, n: usize, lo: f64, hi: f64) -> Result<f64> {
    if !(a > b) || n < 2 {
        return Err(Error::InvalidInput(format!(
            "ring balance needs a > b and at least two particles (a = {a}, b = {b}, n = {n})"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, f_hi) = (ring_force(a, b, n, lo), ring_force(a, b, n, hi));
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRootInBracket { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = ring_force(a, b, n, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exponents `(a, b)` of a kernel `|x|^a/a - |x|^b/b`, if it has that form.
pub fn power_pair(kernel: &Kernel) -> Option<(f64, f64)> {
    match kernel.terms() {
        [p, q] => match (p.form, q.form) {
            (TermForm::PowerLaw { a }, TermForm::PowerLaw { a: b }) if p.coefficient == 1.0 && q.coefficient == -1.0 && a > b => {
                Some((a, b))
            }
            (TermForm::PowerLaw { a: b }, TermForm::PowerLaw { a }) if p.coefficient == -1.0 && q.coefficient == 1.0 && a > b => {
                Some((a, b))
            }
            _ => None,
        },
        _ => None,
    }
}
