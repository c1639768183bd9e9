//! Radial blob functions represented as Gaussian mixtures
//! `psi(x) = sum_k a_k exp(-|x|^2 / w_k^2)`.
//!
//! The mixture form makes moments and the Newtonian convolution available in
//! closed form. Scaling follows `psi_delta(x) = delta^{-d} psi(x / delta)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance below which a moment counts as vanishing.
pub const MOMENT_TOLERANCE: f64 = 1e-8;
const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianComponent {
    pub const fn new(amplitude: f64, width: f64) -> Self {
        Self { amplitude, width }
    }

    /// Integral of the component over R^d.
    pub fn mass(&self, dim: usize) -> f64 {
        self.amplitude * (PI.sqrt() * self.width).powi(dim as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Psi4_1d,
    Psi6_1d,
    Psi4_2d,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Psi4_1d => "psi4_1d",
            Builtin::Psi6_1d => "psi6_1d",
            Builtin::Psi4_2d => "psi4_2d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "psi4_1d" => Ok(Builtin::Psi4_1d),
            "psi6_1d" => Ok(Builtin::Psi6_1d),
            "psi4_2d" => Ok(Builtin::Psi4_2d),
            other => Err(Error::InvalidMollifier(format!("unknown builtin mollifier `{other}`"))),
        }
    }
}

/// JSON form: either a builtin name or an explicit mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MollifierConfig {
    Builtin(String),
    Mixture { components: Vec<[f64; 2]>, m: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MollifierConfig", into = "MollifierConfig")]
pub struct MollifierSpec {
    dim: usize,
    order: usize,
    components: Vec<GaussianComponent>,
    builtin: Option<Builtin>,
}

impl TryFrom<MollifierConfig> for MollifierSpec {
    type Error = Error;
    fn try_from(cfg: MollifierConfig) -> Result<Self> {
        match cfg {
            MollifierConfig::Builtin(name) => Ok(MollifierSpec::builtin(Builtin::from_name(&name)?)),
            MollifierConfig::Mixture { components, m, dim } => MollifierSpec::new(
                dim,
                m,
                components.iter().map(|[a, w]| GaussianComponent::new(*a, *w)).collect(),
            ),
        }
    }
}

impl From<MollifierSpec> for MollifierConfig {
    fn from(spec: MollifierSpec) -> Self {
        match spec.builtin {
            Some(b) => MollifierConfig::Builtin(b.name().to_string()),
            None => MollifierConfig::Mixture {
                components: spec.components.iter().map(|c| [c.amplitude, c.width]).collect(),
                m: spec.order,
                dim: spec.dim,
            },
        }
    }
}

impl MollifierSpec {
    /// Builds a mixture and checks unit mass and vanishing moments up to order `m - 1`.
    pub fn new(dim: usize, order: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMollifier("dimension must be at least 1".into()));
        }
        if order < 4 {
            return Err(Error::InvalidMollifier(format!("order must be at least 4, got {order}")));
        }
        if components.is_empty() {
            return Err(Error::InvalidMollifier("mixture has no components".into()));
        }
        if let Some(c) = components.iter().find(|c| !(c.width > 0.0) || !c.amplitude.is_finite()) {
            return Err(Error::InvalidMollifier(format!("bad component {c:?}")));
        }
        let spec = Self {
            dim,
            order,
            components,
            builtin: None,
        };
        let mass = spec.moment(&vec![0; dim])?;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMollifier(format!("total integral is {mass}, not 1")));
        }
        let certified = spec.verify_order()?;
        if certified < order {
            return Err(Error::InvalidMollifier(format!(
                "declared order {order} but moment of order {certified} does not vanish"
            )));
        }
        Ok(spec)
    }

    pub fn builtin(which: Builtin) -> Self {
        let sqrt_pi = PI.sqrt();
        let (dim, order, components) = match which {
            Builtin::Psi4_1d => (
                1,
                4,
                vec![
                    GaussianComponent::new(4.0 / (3.0 * sqrt_pi), 1.0),
                    GaussianComponent::new(-1.0 / (6.0 * sqrt_pi), 2.0),
                ],
            ),
            // (16/15) psi4(x) - (1/30) psi4(x/2), expanded
            Builtin::Psi6_1d => (
                1,
                6,
                vec![
                    GaussianComponent::new(16.0 / 15.0 * 4.0 / (3.0 * sqrt_pi), 1.0),
                    GaussianComponent::new(-16.0 / 15.0 / (6.0 * sqrt_pi), 2.0),
                    GaussianComponent::new(-1.0 / 30.0 * 4.0 / (3.0 * sqrt_pi), 2.0),
                    GaussianComponent::new(1.0 / 30.0 / (6.0 * sqrt_pi), 4.0),
                ],
            ),
            Builtin::Psi4_2d => (
                2,
                4,
                vec![
                    GaussianComponent::new(2.0 / PI, 1.0),
                    GaussianComponent::new(-1.0 / (2.0 * PI), 2f64.sqrt()),
                ],
            ),
        };
        Self {
            dim,
            order,
            components,
            builtin: Some(which),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Accuracy order `m`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn name(&self) -> String {
        match self.builtin {
            Some(b) => b.name().to_string(),
            None => format!("mixture{}_m{}_{}d", self.components.len(), self.order, self.dim),
        }
    }

    pub fn max_width(&self) -> f64 {
        self.components.iter().map(|c| c.width).fold(0.0, f64::max)
    }

    /// `psi(r)` for the unscaled mollifier.
    pub fn radial(&self, r: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (-(r / c.width).powi(2)).exp())
            .sum()
    }

    /// Moment `int x^gamma psi(x) dx`, exact for the mixture.
    pub fn moment(&self, gamma: &[usize]) -> Result<f64> {
        if gamma.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: gamma.len() });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.amplitude * gamma.iter().map(|&g| gaussian_moment_1d(g, c.width)).product::<f64>())
            .sum())
    }

    /// Largest `m` such that every moment of order `1..m-1` vanishes, searched
    /// up to `order + 2`. Returns `order + 3` if all of them vanish.
    pub fn verify_order(&self) -> Result<usize> {
        for total in 1..=self.order + 2 {
            for gamma in multi_indices(self.dim, total) {
                if self.moment(&gamma)?.abs() > MOMENT_TOLERANCE {
                    return Ok(total);
                }
            }
        }
        Ok(self.order + 3)
    }

    /// Largest absolute moment among multi-indices of total order `total`.
    pub fn max_moment_of_order(&self, total: usize) -> f64 {
        multi_indices(self.dim, total)
            .iter()
            .map(|g| self.moment(g).map(f64::abs).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, delta: f64) -> Result<ScaledMollifier> {
        ScaledMollifier::new(self.clone(), delta)
    }
}

/// `int x^n exp(-x^2/w^2) dx` over the real line.
fn gaussian_moment_1d(n: usize, w: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    // Gamma((n+1)/2) for even n: sqrt(pi) * (n-1)!! / 2^{n/2}
    let mut gamma_half = PI.sqrt();
    let mut k = 1;
    while k < n {
        gamma_half *= k as f64 / 2.0;
        k += 2;
    }
    w.powi(n as i32 + 1) * gamma_half
}

/// All multi-indices of length `dim` with entries summing to `total`.
pub fn multi_indices(dim: usize, total: usize) -> Vec<Vec<usize>> {
    if dim == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(dim - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// A mollifier at regularization scale `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMollifier {
    spec: MollifierSpec,
    delta: f64,
}

impl ScaledMollifier {
    pub fn new(spec: MollifierSpec, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { spec, delta })
    }

    pub fn spec(&self) -> &MollifierSpec {
        &self.spec
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// `psi_delta(r) = delta^{-d} psi(r / delta)`.
    pub fn radial(&self, r: f64) -> f64 {
        self.spec.radial(r / self.delta) / self.delta.powi(self.spec.dim as i32)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.spec.dim {
            return Err(Error::DimensionMismatch { expected: self.spec.dim, got: x.len() });
        }
        Ok(self.radial(crate::kernels::norm(x)))
    }

    /// Distance beyond which every Gaussian component is below ~1e-16 of its peak.
    pub fn effective_radius(&self) -> f64 {
        6.0 * self.delta * self.spec.max_width()
    }
}

/// Convenience: evaluate a spec at scale `delta`.
pub fn eval(spec: &MollifierSpec, delta: f64, x: &[f64]) -> Result<f64> {
    ScaledMollifier::new(spec.clone(), delta)?.eval(x)
}
