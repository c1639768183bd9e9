//! Initial densities and their sampling onto the grid `h Z^d`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::integrate_value;

/// Relative slack for boundary membership of indicator profiles.
const BOUNDARY_SLACK: f64 = 1e-12;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `(1 - |x|^2)^p` on the unit ball.
    PolyBump { p: u32 },
    /// Characteristic function of the closed ball of the given radius.
    IndicatorBall {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Characteristic function of the closed cube `[-a, a]^d`.
    IndicatorBox {
        #[serde(default = "one")]
        half_width: f64,
    },
    /// `exp(1 / (|x|^2 - 1))` on the unit ball.
    SmoothBump,
    /// Characteristic function of `r <= (sin^2(5 theta / 2) + 1/2) / 4` (2D only).
    StarPatch,
}

/// A nonnegative, compactly supported initial density `C * shape(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityProfile {
    shape: Shape,
    scale: f64,
    dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

fn star_radius(theta: f64) -> f64 {
    ((2.5 * theta).sin().powi(2) + 0.5) / 4.0
}

impl DensityProfile {
    pub fn new(shape: Shape, dim: usize) -> Result<Self> {
        Self::with_scale(shape, 1.0, dim)
    }

    pub fn with_scale(shape: Shape, scale: f64, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("normalization must be positive, got {scale}")));
        }
        match shape {
            Shape::IndicatorBall { radius } if !(radius > 0.0) => {
                return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")))
            }
            Shape::IndicatorBox { half_width } if !(half_width > 0.0) => {
                return Err(Error::InvalidInput(format!("box half width must be positive, got {half_width}")))
            }
            Shape::StarPatch if dim != 2 => {
                return Err(Error::InvalidInput("the star patch is two dimensional".into()))
            }
            _ => {}
        }
        Ok(Self { shape, scale, dim })
    }

    pub fn from_config(cfg: &ProfileConfig, dim: usize, normalize: bool) -> Result<Self> {
        let p = Self::with_scale(cfg.shape, cfg.scale.unwrap_or(1.0), dim)?;
        if normalize {
            p.normalized()
        } else {
            Ok(p)
        }
    }

    pub fn config(&self) -> ProfileConfig {
        ProfileConfig {
            shape: self.shape,
            scale: (self.scale != 1.0).then_some(self.scale),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rescales so the profile has unit mass.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.mass();
        Self::with_scale(self.shape, self.scale / mass, self.dim)
    }

    /// `int rho0`, by closed form or adaptive quadrature.
    pub fn mass(&self) -> f64 {
        let d = self.dim as i32;
        let sphere = match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let unit = match self.shape {
            Shape::IndicatorBox { half_width } => (2.0 * half_width).powi(d),
            Shape::IndicatorBall { radius } => sphere * radius.powi(d) / d as f64,
            Shape::StarPatch => integrate_value(|t| 0.5 * star_radius(t).powi(2), 0.0, 2.0 * PI),
            Shape::PolyBump { .. } | Shape::SmoothBump => {
                integrate_value(|r| self.unscaled_radial(r) * r.powi(d - 1), 0.0, 1.0) * sphere
            }
        };
        self.scale * unit
    }

    fn unscaled_radial(&self, r: f64) -> f64 {
        let r2 = r * r;
        match self.shape {
            Shape::PolyBump { p } => {
                if r2 >= 1.0 - BOUNDARY_SLACK {
                    0.0
                } else {
                    (1.0 - r2).powi(p as i32)
                }
            }
            Shape::SmoothBump => {
                if r2 >= 1.0 - BOUNDARY_SLACK {
                    0.0
                } else {
                    (1.0 / (r2 - 1.0)).exp()
                }
            }
            Shape::IndicatorBall { radius } => {
                if r <= radius * (1.0 + BOUNDARY_SLACK) {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::IndicatorBox { .. } | Shape::StarPatch => f64::NAN,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::PolyBump { .. } | Shape::SmoothBump | Shape::IndicatorBall { .. })
            || (self.dim == 1 && matches!(self.shape, Shape::IndicatorBox { .. }))
    }

    /// `rho0` as a function of `|x|` for radial profiles.
    pub fn radial_value(&self, r: f64) -> Result<f64> {
        if !self.is_radial() {
            return Err(Error::NonRadialProfile(format!("{:?}", self.shape)));
        }
        let unit = match self.shape {
            Shape::IndicatorBox { half_width } => {
                if r <= half_width * (1.0 + BOUNDARY_SLACK) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.unscaled_radial(r.abs()),
        };
        Ok(self.scale * unit)
    }

    /// Pointwise `rho0(x)`; exactly zero outside the support.
    pub fn eval_rho0(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let unit = match self.shape {
            Shape::IndicatorBox { half_width } => {
                if x.iter().all(|v| v.abs() <= half_width * (1.0 + BOUNDARY_SLACK)) {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::StarPatch => {
                let r = x[0].hypot(x[1]);
                if r <= star_radius(x[1].atan2(x[0])) * (1.0 + BOUNDARY_SLACK) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.unscaled_radial(x.iter().map(|v| v * v).sum::<f64>().sqrt()),
        };
        self.scale * unit
    }

    pub fn max_density(&self) -> f64 {
        match self.shape {
            Shape::SmoothBump => self.scale * (-1.0f64).exp(),
            _ => self.scale,
        }
    }

    /// Radius of a ball centred at the origin containing the support.
    pub fn support_radius(&self) -> f64 {
        match self.shape {
            Shape::PolyBump { .. } | Shape::SmoothBump => 1.0,
            Shape::IndicatorBall { radius } => radius,
            Shape::IndicatorBox { half_width } => half_width * (self.dim as f64).sqrt(),
            Shape::StarPatch => 0.375,
        }
    }
}

/// Dirac masses of weight `rho0(ih) h^d` at the grid points `ih` where the
/// density is positive, in lexicographic order of `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDiscretization {
    pub h: f64,
    pub dim: usize,
    /// Multi-indices, `dim` entries per point.
    pub indices: Vec<i64>,
    /// Positions `ih`, `dim` entries per point.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub densities: Vec<f64>,
}

impl GridDiscretization {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn index(&self, k: usize) -> &[i64] {
        &self.indices[k * self.dim..(k + 1) * self.dim]
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Componentwise min and max of the retained indices.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for k in 0..self.len() {
            for (a, &i) in self.index(k).iter().enumerate() {
                lo[a] = lo[a].min(i);
                hi[a] = hi[a].max(i);
            }
        }
        (lo, hi)
    }
}

pub fn discretize(profile: &DensityProfile, h: f64) -> Result<GridDiscretization> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::InvalidInput(format!("grid spacing must lie in (0, 0.5], got {h}")));
    }
    let dim = profile.dim();
    let n = (profile.support_radius() / h * (1.0 + 1e-9)).ceil() as i64;
    sample_grid(dim, h, &vec![-n; dim], &vec![n; dim], |x| profile.eval_rho0(x))
}

/// Samples `rho` at `ih` for `lo <= i <= hi` componentwise, keeping positive values.
fn sample_grid(dim: usize, h: f64, lo: &[i64], hi: &[i64], rho: impl Fn(&[f64]) -> f64) -> Result<GridDiscretization> {
    let sides: Vec<usize> = lo.iter().zip(hi).map(|(l, u)| (u - l + 1) as usize).collect();
    let total: usize = sides.iter().product();
    let mut out = GridDiscretization {
        h,
        dim,
        indices: Vec::new(),
        positions: Vec::new(),
        weights: Vec::new(),
        densities: Vec::new(),
    };
    let cell = h.powi(dim as i32);
    let mut idx = vec![0i64; dim];
    let mut x = vec![0.0; dim];
    for flat in 0..total {
        // last axis varies fastest
        let mut rem = flat;
        for a in (0..dim).rev() {
            idx[a] = (rem % sides[a]) as i64 + lo[a];
            rem /= sides[a];
        }
        for a in 0..dim {
            x[a] = idx[a] as f64 * h;
        }
        let value = rho(&x);
        if value > 0.0 {
            out.indices.extend_from_slice(&idx);
            out.positions.extend_from_slice(&x);
            out.weights.push(value * cell);
            out.densities.push(value);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySupport(h));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub rho0: ProfileConfig,
    pub h: f64,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    1
}

impl DiscretizationConfig {
    pub fn profile(&self) -> Result<DensityProfile> {
        DensityProfile::from_config(&self.rho0, self.dim, self.normalize)
    }

    pub fn discretize(&self) -> Result<GridDiscretization> {
        discretize(&self.profile()?, self.h)
    }
}
