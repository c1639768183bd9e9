//! Regularized kernels `K_delta = K * psi_delta` and their gradient and
//! Laplacian.
//!
//! Each kernel term is handled by one of three backends:
//!
//! * Newtonian terms use closed forms: `lap K_delta = psi_delta` and
//!   `grad K_delta(x) = x/|x|^d int_0^|x| s^{d-1} psi_delta(s) ds`, which for a
//!   Gaussian mixture reduces to error functions (1D) or exponentials (2D).
//! * Even integer power laws `|x|^a/a` with `a <= m` are left untouched, since
//!   an order-`m` mollifier reproduces polynomials of degree below `m`.
//! * Everything else is tabulated on a uniform radial grid by adaptive
//!   quadrature of the convolution written in radial form, and interpolated
//!   with quintic Hermite splines. The gradient is the exact derivative of the
//!   interpolated potential, so the particle system stays a gradient flow of
//!   the tabulated energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{norm, Kernel, KernelTerm, TermForm};
use crate::mollifiers::ScaledMollifier;
use crate::quadrature::{self, Tolerance};
use crate::special::{bessel_i0e, bessel_i1e, exp_integral_e1_plus_log};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    AnalyticNewtonian,
    Passthrough,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    /// Radius of the tabulated ball.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Number of radial grid points, including both ends.
    #[serde(rename = "n")]
    pub n_points: usize,
    /// Beyond the table use the unregularized kernel instead of failing.
    pub far_field_fallback: bool,
    /// Tabulate every term, including those with closed forms.
    pub force_tabulated: bool,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            radius: 2.5,
            n_points: 10_000,
            far_field_fallback: true,
            force_tabulated: false,
        }
    }
}

impl TableConfig {
    pub fn with_size(radius: f64, n_points: usize) -> Self {
        Self {
            radius,
            n_points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidInput(format!("table radius must be positive, got {}", self.radius)));
        }
        if !(100..=2_000_000).contains(&self.n_points) {
            return Err(Error::InvalidInput(format!(
                "table size must be within 100..=2000000, got {}",
                self.n_points
            )));
        }
        Ok(())
    }
}

/// Radial samples of a regularized kernel at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    /// `K_delta(r)`
    pub potential: f64,
    /// `f(r)`, with `grad K_delta(x) = f(|x|) x/|x|`
    pub gradient: f64,
    /// `lap K_delta(r)`
    pub laplacian: f64,
}

/// Tabulated radial profiles of the convolution of some kernel terms with a
/// mollifier.
#[derive(Debug, Clone)]
pub struct RadialTable {
    dim: usize,
    radius: f64,
    spacing: f64,
    potential: Vec<f64>,
    gradient: Vec<f64>,
    second: Vec<f64>,
    laplacian: Vec<f64>,
}

impl RadialTable {
    fn build(terms: &[KernelTerm], dim: usize, mollifier: &ScaledMollifier, radius: f64, n_points: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedTerm(format!(
                "radial tabulation is implemented for d = 1, 2 (got {dim})"
            )));
        }
        let spacing = radius / (n_points - 1) as f64;
        let samples: Vec<[f64; 3]> = (0..n_points)
            .into_par_iter()
            .map(|i| convolve_at(terms, dim, mollifier, i as f64 * spacing))
            .collect::<Result<_>>()?;

        let mut potential = Vec::with_capacity(n_points);
        let mut gradient = Vec::with_capacity(n_points);
        let mut second = Vec::with_capacity(n_points);
        let mut laplacian = Vec::with_capacity(n_points);
        for (i, [k, f, g]) in samples.into_iter().enumerate() {
            let r = i as f64 * spacing;
            let f = if i == 0 { 0.0 } else { f };
            // k'' = lap - (d-1) k'/r, with k''(0) = lap(0)/d
            let k2 = if i == 0 { g / dim as f64 } else { g - (dim as f64 - 1.0) * f / r };
            potential.push(k);
            gradient.push(f);
            second.push(k2);
            laplacian.push(g);
        }
        Ok(Self {
            dim,
            radius,
            spacing,
            potential,
            gradient,
            second,
            laplacian,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| i as f64 * self.spacing)
    }

    /// Node values of `K_delta`.
    pub fn potential_profile(&self) -> &[f64] {
        &self.potential
    }

    /// Node values of `f`.
    pub fn grad_profile(&self) -> &[f64] {
        &self.gradient
    }

    /// Node values of `lap K_delta`, straight from quadrature.
    pub fn lap_profile(&self) -> &[f64] {
        &self.laplacian
    }

    /// Interpolated profile at `0 <= r <= radius`.
    fn eval(&self, r: f64) -> RadialProfile {
        let n = self.len();
        let i = ((r / self.spacing) as usize).min(n - 2);
        let h = self.spacing;
        let t = (r - i as f64 * h) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);

        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 1.0 - h0;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 0.5 * (t3 - 2.0 * t4 + t5);

        let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let d5 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);

        let s0 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
        let s1 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
        let s2 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3);
        let s4 = -24.0 * t + 84.0 * t2 - 60.0 * t3;
        let s5 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3);

        let (y0, y1) = (self.potential[i], self.potential[i + 1]);
        let (g0, g1) = (self.gradient[i] * h, self.gradient[i + 1] * h);
        let (c0, c1) = (self.second[i] * h * h, self.second[i + 1] * h * h);

        let potential = y0 * h0 + g0 * h1 + c0 * h2 + y1 * h3 + g1 * h4 + c1 * h5;
        let gradient = ((y1 - y0) * (-d0) + g0 * d1 + c0 * d2 + g1 * d4 + c1 * d5) / h;
        let second = ((y1 - y0) * (-s0) + g0 * s1 + c0 * s2 + g1 * s4 + c1 * s5) / (h * h);
        let laplacian = if r == 0.0 {
            self.dim as f64 * second
        } else {
            second + (self.dim as f64 - 1.0) * gradient / r
        };
        RadialProfile {
            potential,
            gradient: if r == 0.0 { 0.0 } else { gradient },
            laplacian,
        }
    }
}

/// `[K_delta(r), f(r), lap K_delta(r)]` for the sum of `terms`, by adaptive
/// quadrature over the radial variable of the source point.
fn convolve_at(terms: &[KernelTerm], dim: usize, mollifier: &ScaledMollifier, r: f64) -> Result<[f64; 3]> {
    let delta = mollifier.delta();
    let comps: Vec<(f64, f64)> = mollifier
        .spec()
        .components()
        .iter()
        .map(|c| (c.amplitude / delta.powi(dim as i32), delta * c.width))
        .collect();
    let reach = 6.5 * mollifier.spec().max_width() * delta;
    let lo = (r - reach).max(0.0);
    let mut breaks = vec![lo];
    if r > lo {
        breaks.push(r);
    }
    breaks.push(r + reach);

    let k = |u: f64| -> f64 { terms.iter().map(|t| t.radial_value(u, dim).unwrap_or(0.0)).sum() };
    let dk = |u: f64| -> f64 { terms.iter().map(|t| t.radial_derivative(u, dim).unwrap_or(0.0)).sum() };

    let tol = Tolerance::default();
    let mut out = [0.0; 3];
    for (slot, which) in out.iter_mut().zip(0..3) {
        let est = match dim {
            1 => {
                let psi = |z: f64| comps.iter().map(|(a, s)| a * (-(z / s).powi(2)).exp()).sum::<f64>();
                let dpsi = |z: f64| {
                    comps
                        .iter()
                        .map(|(a, s)| -2.0 * a * z / (s * s) * (-(z / s).powi(2)).exp())
                        .sum::<f64>()
                };
                match which {
                    0 => quadrature::integrate(|u| k(u) * (psi(r - u) + psi(r + u)), &breaks, tol),
                    1 => quadrature::integrate(|u| dk(u) * (psi(r - u) - psi(r + u)), &breaks, tol),
                    _ => quadrature::integrate(|u| dk(u) * (dpsi(r - u) - dpsi(r + u)), &breaks, tol),
                }
            }
            _ => {
                // angular integral done exactly with scaled Bessel functions
                let angular = |rho: f64, which: usize| -> f64 {
                    comps
                        .iter()
                        .map(|(a, s)| {
                            let s2 = s * s;
                            let beta = 2.0 * r * rho / s2;
                            let e = (-(r - rho).powi(2) / s2).exp();
                            2.0 * PI
                                * a
                                * e
                                * match which {
                                    0 => bessel_i0e(beta),
                                    1 => bessel_i1e(beta),
                                    _ => -2.0 / s2 * (r * bessel_i1e(beta) - rho * bessel_i0e(beta)),
                                }
                        })
                        .sum()
                };
                match which {
                    0 => quadrature::integrate(|u| u * k(u) * angular(u, 0), &breaks, tol),
                    1 => quadrature::integrate(|u| u * dk(u) * angular(u, 1), &breaks, tol),
                    _ => quadrature::integrate(|u| u * dk(u) * angular(u, 2), &breaks, tol),
                }
            }
        };
        let accept = (1e-9 * est.value.abs()).max(1e-12 * est.abs_integral);
        if !est.converged && est.error > accept {
            return Err(Error::QuadratureFailure {
                radius: r,
                value: est.value,
                error: est.error,
            });
        }
        *slot = est.value;
    }
    Ok(out)
}

/// `grad K_delta`, `lap K_delta` and `K_delta` for a kernel and mollifier.
#[derive(Debug, Clone)]
pub struct RegularizedKernel {
    kernel: Kernel,
    mollifier: ScaledMollifier,
    config: TableConfig,
    backends: Vec<Backend>,
    newtonian_coefficient: f64,
    passthrough: Vec<KernelTerm>,
    tabulated: Vec<KernelTerm>,
    table: Option<Arc<RadialTable>>,
}

/// Builds the regularized kernel, choosing a backend for every term.
pub fn build(kernel: &Kernel, mollifier: &ScaledMollifier, cfg: &TableConfig) -> Result<RegularizedKernel> {
    RegularizedKernel::new(kernel, mollifier, cfg)
}

impl RegularizedKernel {
    pub fn new(kernel: &Kernel, mollifier: &ScaledMollifier, cfg: &TableConfig) -> Result<Self> {
        cfg.validate()?;
        if kernel.dim() != mollifier.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: mollifier.dim(),
            });
        }
        let order = mollifier.spec().order() as f64;
        let mut backends = Vec::with_capacity(kernel.terms().len());
        let mut newtonian_coefficient = 0.0;
        let mut passthrough = Vec::new();
        let mut tabulated = Vec::new();
        for term in kernel.terms() {
            let backend = if cfg.force_tabulated {
                Backend::Tabulated
            } else {
                match term.form {
                    TermForm::Newtonian => Backend::AnalyticNewtonian,
                    TermForm::PowerLaw { a } if a.fract() == 0.0 && a % 2.0 == 0.0 && a <= order => Backend::Passthrough,
                    _ => Backend::Tabulated,
                }
            };
            match backend {
                Backend::AnalyticNewtonian => newtonian_coefficient += term.coefficient,
                Backend::Passthrough => passthrough.push(*term),
                Backend::Tabulated => tabulated.push(*term),
            }
            backends.push(backend);
        }
        let table = if tabulated.is_empty() {
            None
        } else {
            // the far-field switch must sit where the mollifier has decayed
            let radius = cfg.radius.max(mollifier.effective_radius());
            let n_points = if radius > cfg.radius {
                ((cfg.n_points - 1) as f64 * radius / cfg.radius).ceil() as usize + 1
            } else {
                cfg.n_points
            };
            Some(Arc::new(RadialTable::build(&tabulated, kernel.dim(), mollifier, radius, n_points)?))
        };
        Ok(Self {
            kernel: kernel.clone(),
            mollifier: mollifier.clone(),
            config: cfg.clone(),
            backends,
            newtonian_coefficient,
            passthrough,
            tabulated,
            table,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn mollifier(&self) -> &ScaledMollifier {
        &self.mollifier
    }

    pub fn config(&self) -> &TableConfig {
        &self.config
    }

    pub fn delta(&self) -> f64 {
        self.mollifier.delta()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Backend chosen for each kernel term, in term order.
    pub fn backends(&self) -> &[Backend] {
        &self.backends
    }

    /// The backend shared by every term, if there is one.
    pub fn backend(&self) -> Option<Backend> {
        let first = *self.backends.first()?;
        self.backends.iter().all(|b| *b == first).then_some(first)
    }

    pub fn table(&self) -> Option<&RadialTable> {
        self.table.as_deref()
    }

    /// All three radial profiles at `r >= 0`.
    pub fn profile(&self, r: f64) -> Result<RadialProfile> {
        self.profile_impl(r, true)
    }

    /// `(f(r), lap K_delta(r))`, skipping the potential.
    pub fn grad_lap(&self, r: f64) -> Result<(f64, f64)> {
        let p = self.profile_impl(r, false)?;
        Ok((p.gradient, p.laplacian))
    }

    fn profile_impl(&self, r: f64, with_potential: bool) -> Result<RadialProfile> {
        let dim = self.dim();
        let mut out = RadialProfile {
            potential: 0.0,
            gradient: 0.0,
            laplacian: 0.0,
        };
        if self.newtonian_coefficient != 0.0 {
            let p = self.newtonian_profile(r, with_potential);
            out.potential += self.newtonian_coefficient * p.potential;
            out.gradient += self.newtonian_coefficient * p.gradient;
            out.laplacian += self.newtonian_coefficient * p.laplacian;
        }
        for t in &self.passthrough {
            if with_potential {
                out.potential += t.radial_value(r, dim)?;
            }
            out.gradient += t.radial_derivative(r, dim)?;
            out.laplacian += t.radial_laplacian(r, dim)?;
        }
        if let Some(table) = &self.table {
            if r <= table.radius() {
                let p = table.eval(r);
                out.potential += p.potential;
                out.gradient += p.gradient;
                out.laplacian += p.laplacian;
            } else if self.config.far_field_fallback {
                for t in &self.tabulated {
                    if with_potential {
                        out.potential += t.radial_value(r, dim)?;
                    }
                    out.gradient += t.radial_derivative(r, dim)?;
                    out.laplacian += t.radial_laplacian(r, dim)?;
                }
            } else {
                return Err(Error::OutOfRange {
                    radius: r,
                    table_radius: table.radius(),
                });
            }
        }
        Ok(out)
    }

    /// Closed forms for the mollified Newtonian potential with unit coefficient.
    fn newtonian_profile(&self, r: f64, with_potential: bool) -> RadialProfile {
        let dim = self.dim();
        let delta = self.delta();
        let mut potential = 0.0;
        let mut gradient = 0.0;
        for c in self.mollifier.spec().components() {
            let mass = c.mass(dim);
            let s = delta * c.width;
            let u = r / s;
            match dim {
                1 => {
                    let erf = libm::erf(u);
                    gradient += 0.5 * mass * erf;
                    if with_potential {
                        potential += 0.5 * mass * (s / PI.sqrt() * (-u * u).exp() + r * erf);
                    }
                }
                _ => {
                    if r > 0.0 {
                        gradient += mass * -libm::expm1(-u * u) / (2.0 * PI * r);
                    }
                    if with_potential {
                        potential += mass / (4.0 * PI) * ((s * s).ln() + exp_integral_e1_plus_log(u * u));
                    }
                }
            }
        }
        RadialProfile {
            potential,
            gradient,
            laplacian: self.mollifier.radial(r),
        }
    }

    pub fn grad_profile(&self, r: f64) -> Result<f64> {
        Ok(self.grad_lap(r)?.0)
    }

    pub fn lap_profile(&self, r: f64) -> Result<f64> {
        Ok(self.grad_lap(r)?.1)
    }

    pub fn potential_profile(&self, r: f64) -> Result<f64> {
        Ok(self.profile(r)?.potential)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `grad K_delta(x)`; exactly zero at the origin.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let r = norm(x);
        if r == 0.0 {
            return Ok(vec![0.0; x.len()]);
        }
        let f = self.grad_profile(r)?;
        Ok(x.iter().map(|v| f * v / r).collect())
    }

    pub fn eval_lap(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.lap_profile(norm(x))
    }

    pub fn eval_potential(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.potential_profile(norm(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifiers::{Builtin, MollifierSpec};
    use crate::quadrature::integrate_value;
    use proptest::prelude::*;

    fn scaled(b: Builtin, delta: f64) -> ScaledMollifier {
        MollifierSpec::builtin(b).scaled(delta).unwrap()
    }

    #[test]
    fn quadratic_passes_through() {
        let k = Kernel::quadratic(2).unwrap();
        let rk = build(&k, &scaled(Builtin::Psi4_2d, 0.3), &TableConfig::default()).unwrap();
        assert_eq!(rk.backend(), Some(Backend::Passthrough));
        assert_eq!(rk.eval_grad(&[3.0, 4.0]).unwrap(), k.eval_grad(&[3.0, 4.0]).unwrap());
        assert_eq!(rk.eval_lap(&[0.7, -0.1]).unwrap(), 2.0);
        let quartic = Kernel::power_law(4.0, 1).unwrap();
        let rq = build(&quartic, &scaled(Builtin::Psi4_1d, 0.1), &TableConfig::default()).unwrap();
        assert_eq!(rq.backend(), Some(Backend::Passthrough));
        for x in [-1.3, 0.2, 2.9] {
            assert_eq!(rq.eval_grad(&[x]).unwrap(), quartic.eval_grad(&[x]).unwrap());
        }
    }

    #[test]
    fn newtonian_closed_forms() {
        let m = scaled(Builtin::Psi4_1d, 1.0);
        let rk = build(&Kernel::newtonian(1).unwrap(), &m, &TableConfig::default()).unwrap();
        assert_eq!(rk.backend(), Some(Backend::AnalyticNewtonian));
        assert!((rk.eval_lap(&[0.0]).unwrap() - 7.0 / (6.0 * PI.sqrt())).abs() < 1e-15);
        assert_eq!(rk.eval_grad(&[0.0]).unwrap(), vec![0.0]);
        for x in [0.1, 0.5, 2.0] {
            assert_eq!(rk.eval_lap(&[x]).unwrap(), m.radial(x));
        }
        let narrow = build(&Kernel::newtonian(1).unwrap(), &scaled(Builtin::Psi4_1d, 0.1), &TableConfig::default()).unwrap();
        assert!((narrow.eval_grad(&[1.0]).unwrap()[0] - 0.5).abs() < 1e-8);
        assert!((narrow.eval_grad(&[-1.0]).unwrap()[0] + 0.5).abs() < 1e-8);
    }

    // f(r) = int_0^r psi_delta(s) s^{d-1} ds / r^{d-1}, by direct quadrature
    #[test]
    fn newtonian_gradient_matches_radial_integral() {
        for (b, delta) in [(Builtin::Psi4_1d, 0.2), (Builtin::Psi6_1d, 0.05), (Builtin::Psi4_2d, 0.3)] {
            let m = scaled(b, delta);
            let d = m.dim();
            let rk = build(&Kernel::newtonian(d).unwrap(), &m, &TableConfig::default()).unwrap();
            for r in [0.01, 0.1, 0.4, 1.5] {
                let oracle = integrate_value(|s| s.powi(d as i32 - 1) * m.radial(s), 0.0, r) / r.powi(d as i32 - 1);
                let got = rk.grad_profile(r).unwrap();
                assert!((got - oracle).abs() < 1e-13, "{} r={r}: {got} vs {oracle}", b.name());
            }
        }
    }

    // K_delta(r) = int K(y) psi_delta(x - y) dy, brute force in Cartesian form
    #[test]
    fn newtonian_potential_matches_brute_force_convolution() {
        let m1 = scaled(Builtin::Psi4_1d, 0.3);
        let rk1 = build(&Kernel::newtonian(1).unwrap(), &m1, &TableConfig::default()).unwrap();
        for x in [0.0, 0.2, 1.1] {
            let oracle = crate::quadrature::integrate(
                |y: f64| 0.5 * y.abs() * m1.radial(x - y),
                &[x - 8.0, 0.0, x + 8.0],
                Tolerance::default(),
            )
            .value;
            assert!((rk1.potential_profile(x).unwrap() - oracle).abs() < 1e-12);
        }
        let m2 = scaled(Builtin::Psi4_2d, 0.5);
        let rk2 = build(&Kernel::newtonian(2).unwrap(), &m2, &TableConfig::default()).unwrap();
        for r in [0.0, 0.3, 1.0] {
            // polar coordinates around the source point
            let oracle = integrate_value(
                |rho: f64| {
                    rho * m2.radial(rho)
                        * integrate_value(
                            |th: f64| {
                                let d = (r * r + rho * rho + 2.0 * r * rho * th.cos()).sqrt();
                                if d == 0.0 { 0.0 } else { d.ln() / (2.0 * PI) }
                            },
                            0.0,
                            2.0 * PI,
                        )
                },
                0.0,
                8.0,
            );
            let got = rk2.potential_profile(r).unwrap();
            assert!((got - oracle).abs() < 1e-9, "r={r}: {got} vs {oracle}");
        }
    }

    #[test]
    fn tabulated_matches_analytic_newtonian() {
        for (b, delta) in [(Builtin::Psi4_1d, 0.05), (Builtin::Psi4_2d, 0.1)] {
            let m = scaled(b, delta);
            let k = Kernel::newtonian(m.dim()).unwrap();
            let exact = build(&k, &m, &TableConfig::default()).unwrap();
            let cfg = TableConfig {
                force_tabulated: true,
                n_points: 4000,
                ..TableConfig::default()
            };
            let tab = build(&k, &m, &cfg).unwrap();
            assert_eq!(tab.backend(), Some(Backend::Tabulated));
            let mut r = 0.0;
            while r <= 2.5 {
                let (a, t) = (exact.profile(r).unwrap(), tab.profile(r).unwrap());
                assert!((a.gradient - t.gradient).abs() < 1e-7, "{} f({r})", b.name());
                assert!((a.laplacian - t.laplacian).abs() < 1e-4 * (1.0 + a.laplacian.abs()), "{} g({r})", b.name());
                assert!((a.potential - t.potential).abs() < 1e-8, "{} K({r})", b.name());
                r += 0.0123;
            }
        }
    }

    #[test]
    fn cubic_far_field_matches_unregularized() {
        let k = Kernel::power_law(3.0, 1).unwrap();
        let rk = build(&k, &scaled(Builtin::Psi4_1d, 0.1), &TableConfig::default()).unwrap();
        assert_eq!(rk.backend(), Some(Backend::Tabulated));
        let f = rk.table().unwrap().grad_profile();
        let idx = (1.0 / 2.5 * (f.len() - 1) as f64).round() as usize;
        assert!((f[idx] - 1.0).abs() < 1e-3);
        let narrow = build(&k, &scaled(Builtin::Psi4_1d, 0.05), &TableConfig::default()).unwrap();
        assert!((narrow.eval_lap(&[1.0]).unwrap() - 2.0).abs() < 1e-2);
        assert!((narrow.eval_lap(&[-1.0]).unwrap() - 2.0).abs() < 1e-2);
    }

    #[test]
    fn profiles_are_finite_at_origin() {
        let kernels = [
            (Kernel::attractive_repulsive(4.0, 1.5, 2).unwrap(), Builtin::Psi4_2d),
            (
                Kernel::new(vec![KernelTerm::morse(1.0, 1.0, 1.0), KernelTerm::morse(1.0, 2.0, -2.0)], 2).unwrap(),
                Builtin::Psi4_2d,
            ),
            (Kernel::newtonian(2).unwrap(), Builtin::Psi4_2d),
            (Kernel::power_law(3.0, 1).unwrap(), Builtin::Psi6_1d),
        ];
        for (k, b) in kernels {
            let rk = build(&k, &scaled(b, 0.2), &TableConfig::with_size(2.5, 500)).unwrap();
            let p = rk.profile(0.0).unwrap();
            assert!(p.potential.is_finite() && p.laplacian.is_finite());
            assert_eq!(p.gradient, 0.0);
        }
    }

    #[test]
    fn far_field_switch_and_out_of_range() {
        let k = Kernel::power_law(3.0, 1).unwrap();
        let m = scaled(Builtin::Psi4_1d, 0.05);
        let rk = build(&k, &m, &TableConfig::with_size(1.0, 200)).unwrap();
        assert_eq!(rk.eval_grad(&[3.0]).unwrap(), k.eval_grad(&[3.0]).unwrap());
        let strict = TableConfig {
            far_field_fallback: false,
            ..TableConfig::with_size(1.0, 200)
        };
        let rk = build(&k, &m, &strict).unwrap();
        assert!(matches!(rk.eval_grad(&[3.0]), Err(Error::OutOfRange { .. })));
        // a wide mollifier stretches the table past the configured radius
        let wide = build(&k, &scaled(Builtin::Psi4_1d, 0.32), &TableConfig::with_size(2.5, 200)).unwrap();
        assert!(wide.table().unwrap().radius() >= 12.0 * 0.32 - 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = scaled(Builtin::Psi4_2d, 0.1);
        assert!(matches!(
            build(&Kernel::newtonian(1).unwrap(), &m, &TableConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(build(&Kernel::newtonian(2).unwrap(), &m, &TableConfig::with_size(2.5, 10)).is_err());
    }

    // (grad K_delta - grad K) * rho at a fixed point decays like delta^m
    #[test]
    fn mollification_error_decays_at_mollifier_order() {
        let sigma: f64 = 0.3;
        let rho = |y: f64| (-(y * y) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
        let x0 = 0.2;
        // grad K * rho for the 1D Newtonian kernel: (1/2) erf(x / (sigma sqrt 2))
        let exact = 0.5 * libm::erf(x0 / (sigma * 2f64.sqrt()));
        let mut rows = Vec::new();
        for delta in [0.1, 0.05, 0.025, 0.0125] {
            let rk = build(&Kernel::newtonian(1).unwrap(), &scaled(Builtin::Psi4_1d, delta), &TableConfig::default()).unwrap();
            let conv = crate::quadrature::integrate(
                |y: f64| {
                    let d = x0 - y;
                    rk.grad_profile(d.abs()).unwrap() * d.signum() * rho(y)
                },
                &[x0 - 3.0, x0, x0 + 3.0],
                Tolerance::default(),
            )
            .value;
            rows.push((delta, (conv - exact).abs()));
        }
        let slope = (rows[3].1 / rows[0].1).ln() / (rows[3].0 / rows[0].0).ln();
        assert!((slope - 4.0).abs() < 0.5, "slope {slope}, rows {rows:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn odd_gradient_and_even_laplacian(x in -2.4..2.4f64, y in -2.4..2.4f64) {
            let k = Kernel::attractive_repulsive(4.0, 1.5, 2).unwrap();
            let rk = build(&k, &scaled(Builtin::Psi4_2d, 0.15), &TableConfig::with_size(2.5, 800)).unwrap();
            let g = rk.eval_grad(&[x, y]).unwrap();
            let gm = rk.eval_grad(&[-x, -y]).unwrap();
            prop_assert_eq!(g[0], -gm[0]);
            prop_assert_eq!(g[1], -gm[1]);
            prop_assert_eq!(rk.eval_lap(&[x, y]).unwrap(), rk.eval_lap(&[-x, -y]).unwrap());
        }
    }

    #[test]
    fn divergence_of_gradient_matches_laplacian() {
        let k = Kernel::new(vec![KernelTerm::power_law(3.0, 1.0), KernelTerm::power_law(1.5, -1.0)], 2).unwrap();
        let rk = build(&k, &scaled(Builtin::Psi4_2d, 0.2), &TableConfig::with_size(2.5, 2000)).unwrap();
        let step = 1e-5;
        for i in 1..=100 {
            let r = 2.4 * i as f64 / 100.0;
            let fd = (rk.grad_profile(r + step).unwrap() - rk.grad_profile(r - step).unwrap()) / (2.0 * step)
                + rk.grad_profile(r).unwrap() / r;
            let lap = rk.lap_profile(r).unwrap();
            assert!((fd - lap).abs() < 1e-5 * (1.0 + lap.abs()), "r={r}: {fd} vs {lap}");
        }
    }
}
