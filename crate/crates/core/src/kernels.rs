//! Interaction kernels `K = sum_n c_n K_n` built from power-law, Newtonian
//! and Morse terms.
//!
//! Every kernel is radial, so all evaluation goes through radial profiles:
//! `K(x) = k(|x|)`, `grad K(x) = k'(|x|) x/|x|` and
//! `lap K(x) = k''(|x|) + (d-1) k'(|x|)/|x|`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Shape of a single kernel term, before its coefficient is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum TermForm {
    /// `|x|^a / a`
    PowerLaw { a: f64 },
    /// Fundamental solution of the Laplacian: `|x|/2` in 1D, `log|x| / 2 pi` in 2D.
    Newtonian,
    /// `C e^{-|x|/l}`
    Morse {
        #[serde(rename = "C")]
        amplitude: f64,
        #[serde(rename = "l")]
        length: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    #[serde(flatten)]
    pub form: TermForm,
    #[serde(rename = "coeff")]
    pub coefficient: f64,
}

impl KernelTerm {
    pub fn power_law(a: f64, coefficient: f64) -> Self {
        Self { form: TermForm::PowerLaw { a }, coefficient }
    }

    pub fn newtonian(coefficient: f64) -> Self {
        Self { form: TermForm::Newtonian, coefficient }
    }

    pub fn morse(amplitude: f64, length: f64, coefficient: f64) -> Self {
        Self {
            form: TermForm::Morse { amplitude, length },
            coefficient,
        }
    }

    /// Growth exponent `S_n` bounding `|grad K_n(x)| <= C |x|^{S_n}`.
    pub fn growth_order(&self, dim: usize) -> f64 {
        match self.form {
            TermForm::PowerLaw { a } => a - 1.0,
            TermForm::Newtonian => 1.0 - dim as f64,
            TermForm::Morse { .. } => 0.0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !self.coefficient.is_finite() {
            return Err(Error::InvalidKernel("coefficient must be finite".into()));
        }
        match self.form {
            TermForm::PowerLaw { a } => {
                if !a.is_finite() || a == 0.0 {
                    return Err(Error::InvalidKernel(format!("power-law exponent {a} is not allowed")));
                }
                if a <= 2.0 - dim as f64 {
                    return Err(Error::InvalidKernel(format!(
                        "power-law exponent {a} must exceed 2 - d = {}",
                        2.0 - dim as f64
                    )));
                }
            }
            TermForm::Newtonian => {
                if !(1..=2).contains(&dim) {
                    return Err(Error::InvalidKernel(format!(
                        "Newtonian term is only available in dimension 1 or 2, not {dim}"
                    )));
                }
            }
            TermForm::Morse { amplitude, length } => {
                if !(length > 0.0) || !length.is_finite() || !amplitude.is_finite() {
                    return Err(Error::InvalidKernel(format!(
                        "Morse length must be positive and finite (C = {amplitude}, l = {length})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `k(r)` including the coefficient.
    pub fn radial_value(&self, r: f64, dim: usize) -> Result<f64> {
        let v = match self.form {
            TermForm::PowerLaw { a } => {
                if r == 0.0 && a < 0.0 {
                    return Err(Error::SingularOrigin(format!("|x|^{a}/{a}")));
                }
                r.powf(a) / a
            }
            TermForm::Newtonian => match dim {
                1 => 0.5 * r,
                _ => {
                    if r == 0.0 {
                        return Err(Error::SingularOrigin("2D Newtonian potential".into()));
                    }
                    r.ln() / (2.0 * PI)
                }
            },
            TermForm::Morse { amplitude, length } => amplitude * (-r / length).exp(),
        };
        Ok(self.coefficient * v)
    }

    /// `k'(r)` including the coefficient. At r = 0 this is the value of the
    /// gradient magnitude only when the gradient is continuous there.
    pub fn radial_derivative(&self, r: f64, dim: usize) -> Result<f64> {
        let v = match self.form {
            TermForm::PowerLaw { a } => {
                if r == 0.0 {
                    if a > 1.0 {
                        0.0
                    } else {
                        return Err(Error::SingularOrigin(format!("gradient of |x|^{a}/{a}")));
                    }
                } else {
                    r.powf(a - 1.0)
                }
            }
            TermForm::Newtonian => {
                if r == 0.0 {
                    return Err(Error::SingularOrigin("gradient of the Newtonian potential".into()));
                }
                match dim {
                    1 => 0.5,
                    _ => 1.0 / (2.0 * PI * r),
                }
            }
            TermForm::Morse { amplitude, length } => {
                if r == 0.0 {
                    return Err(Error::SingularOrigin("gradient of the Morse potential".into()));
                }
                -(amplitude / length) * (-r / length).exp()
            }
        };
        Ok(self.coefficient * v)
    }

    /// Pointwise Laplacian `k'' + (d-1) k'/r` including the coefficient.
    pub fn radial_laplacian(&self, r: f64, dim: usize) -> Result<f64> {
        let d = dim as f64;
        let v = match self.form {
            TermForm::PowerLaw { a } => {
                if r == 0.0 {
                    if a > 2.0 {
                        0.0
                    } else if a == 2.0 {
                        d
                    } else {
                        return Err(Error::SingularOrigin(format!("Laplacian of |x|^{a}/{a}")));
                    }
                } else {
                    (a + d - 2.0) * r.powf(a - 2.0)
                }
            }
            TermForm::Newtonian => {
                return Err(Error::UnsupportedTerm(
                    "the Laplacian of the Newtonian potential is a Dirac mass; use a regularized kernel".into(),
                ))
            }
            TermForm::Morse { amplitude, length } => {
                if r == 0.0 {
                    return Err(Error::SingularOrigin("Laplacian of the Morse potential".into()));
                }
                let e = amplitude * (-r / length).exp();
                e / (length * length) - (d - 1.0) * e / (length * r)
            }
        };
        Ok(self.coefficient * v)
    }
}

/// Wire form of a kernel: `{"terms": [...], "dim": 2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct KernelConfig {
    terms: Vec<KernelTerm>,
    dim: usize,
}

/// An immutable radial interaction kernel in dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig", into = "KernelConfig")]
pub struct Kernel {
    terms: Vec<KernelTerm>,
    dim: usize,
}

impl TryFrom<KernelConfig> for Kernel {
    type Error = Error;
    fn try_from(cfg: KernelConfig) -> Result<Self> {
        Kernel::new(cfg.terms, cfg.dim)
    }
}

impl From<Kernel> for KernelConfig {
    fn from(k: Kernel) -> Self {
        KernelConfig { terms: k.terms, dim: k.dim }
    }
}

impl Kernel {
    pub fn new(terms: Vec<KernelTerm>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be at least 1".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidKernel("a kernel needs at least one term".into()));
        }
        for t in &terms {
            t.validate(dim)?;
        }
        Ok(Self { terms, dim })
    }

    /// `|x|^a / a`
    pub fn power_law(a: f64, dim: usize) -> Result<Self> {
        Self::new(vec![KernelTerm::power_law(a, 1.0)], dim)
    }

    pub fn newtonian(dim: usize) -> Result<Self> {
        Self::new(vec![KernelTerm::newtonian(1.0)], dim)
    }

    /// `|x|^2 / 2`
    pub fn quadratic(dim: usize) -> Result<Self> {
        Self::power_law(2.0, dim)
    }

    /// Repulsive-attractive power law `|x|^a/a - |x|^b/b`.
    pub fn attractive_repulsive(a: f64, b: f64, dim: usize) -> Result<Self> {
        if a <= b {
            return Err(Error::InvalidKernel(format!("need a > b, got a = {a}, b = {b}")));
        }
        Self::new(vec![KernelTerm::power_law(a, 1.0), KernelTerm::power_law(b, -1.0)], dim)
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Singularity order `s = min_n S_n`.
    pub fn singularity_order(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.growth_order(self.dim))
            .fold(f64::INFINITY, f64::min)
    }

    /// Growth order `S = max_n S_n`.
    pub fn growth_order(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.growth_order(self.dim))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn has_newtonian(&self) -> bool {
        self.terms.iter().any(|t| t.form == TermForm::Newtonian)
    }

    /// True when the kernel is exactly `|x|^2/2`.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.terms.as_slice(), [KernelTerm { form: TermForm::PowerLaw { a }, coefficient }] if *a == 2.0 && *coefficient == 1.0)
    }

    /// True when the kernel is exactly the Newtonian potential.
    pub fn is_pure_newtonian(&self) -> bool {
        matches!(self.terms.as_slice(), [KernelTerm { form: TermForm::Newtonian, coefficient }] if *coefficient == 1.0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn radial_value(&self, r: f64) -> Result<f64> {
        self.terms.iter().map(|t| t.radial_value(r, self.dim)).sum()
    }

    pub fn radial_derivative(&self, r: f64) -> Result<f64> {
        self.terms.iter().map(|t| t.radial_derivative(r, self.dim)).sum()
    }

    pub fn radial_laplacian(&self, r: f64) -> Result<f64> {
        self.terms.iter().map(|t| t.radial_laplacian(r, self.dim)).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.radial_value(norm(x))
    }

    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `grad K(x)` into `out`. At the origin this succeeds only for
    /// kernels whose gradient vanishes there.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let r = norm(x);
        let f = self.radial_derivative(r)?;
        if r == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            let s = f / r;
            out.iter_mut().zip(x).for_each(|(o, xi)| *o = s * xi);
        }
        Ok(())
    }

    pub fn eval_lap(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if self.has_newtonian() {
            return Err(Error::UnsupportedTerm(
                "the Laplacian of the Newtonian potential is a Dirac mass; use a regularized kernel".into(),
            ));
        }
        self.radial_laplacian(norm(x))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    match x {
        [a] => a.abs(),
        [a, b] => a.hypot(*b),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn morse_pair() -> Kernel {
        Kernel::new(vec![KernelTerm::morse(1.0, 1.0, 1.0), KernelTerm::morse(1.0, 2.0, -2.0)], 2).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Kernel::newtonian(2).unwrap().eval(&[1.0, 0.0]).unwrap(), 0.0);
        let cubic = Kernel::power_law(3.0, 1).unwrap();
        assert!((cubic.eval(&[2.0]).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!((morse_pair().eval(&[0.0, 0.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(Kernel::newtonian(2).unwrap().eval(&[0.0, 0.0]), Err(Error::SingularOrigin(_))));
    }

    #[test]
    fn gradient_examples() {
        let g = Kernel::newtonian(1).unwrap().eval_grad(&[0.5]).unwrap();
        assert_eq!(g, vec![0.5]);
        let g = Kernel::quadratic(2).unwrap().eval_grad(&[3.0, 4.0]).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-14 && (g[1] - 4.0).abs() < 1e-14);
        let g = Kernel::newtonian(2).unwrap().eval_grad(&[1.0, 0.0]).unwrap();
        assert!((g[0] - 1.0 / (2.0 * PI)).abs() < 1e-16 && g[1] == 0.0);
        assert!(matches!(Kernel::newtonian(1).unwrap().eval_grad(&[0.0]), Err(Error::SingularOrigin(_))));
        assert_eq!(Kernel::power_law(3.0, 2).unwrap().eval_grad(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn laplacian_examples() {
        assert!((Kernel::power_law(3.0, 2).unwrap().eval_lap(&[1.0, 0.0]).unwrap() - 3.0).abs() < 1e-14);
        assert!((Kernel::quadratic(2).unwrap().eval_lap(&[0.3, -7.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((Kernel::power_law(3.0, 1).unwrap().eval_lap(&[-2.0]).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(Kernel::newtonian(1).unwrap().eval_lap(&[1.0]), Err(Error::UnsupportedTerm(_))));
    }

    #[test]
    fn orders_and_validation() {
        let k = Kernel::new(vec![KernelTerm::power_law(4.0, 0.25), KernelTerm::newtonian(-1.0)], 2).unwrap();
        assert_eq!(k.singularity_order(), -1.0);
        assert_eq!(k.growth_order(), 3.0);
        assert!(Kernel::power_law(1.0, 1).is_err());
        assert!(Kernel::power_law(0.5, 2).is_ok());
        assert!(Kernel::newtonian(3).is_err());
        assert!(Kernel::new(vec![KernelTerm::morse(1.0, 0.0, 1.0)], 2).is_err());
        assert!(Kernel::new(vec![], 1).is_err());
    }

    #[test]
    fn json_round_trip_uses_wire_names() {
        let json = r#"{"terms":[{"form":"power_law","a":4,"coeff":0.25},{"form":"morse","C":1.5,"l":2,"coeff":-1},{"form":"newtonian","coeff":1}],"dim":2}"#;
        let k: Kernel = serde_json::from_str(json).unwrap();
        assert_eq!(k.terms().len(), 3);
        assert_eq!(k.terms()[1], KernelTerm::morse(1.5, 2.0, -1.0));
        let back: Kernel = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
        let bad = r#"{"terms":[{"form":"newtonian","coeff":1}],"dim":3}"#;
        assert!(serde_json::from_str::<Kernel>(bad).is_err());
    }

    fn catalog() -> Vec<Kernel> {
        vec![
            Kernel::newtonian(1).unwrap(),
            Kernel::newtonian(2).unwrap(),
            Kernel::power_law(3.0, 1).unwrap(),
            Kernel::power_law(1.5, 2).unwrap(),
            Kernel::attractive_repulsive(4.0, 1.5, 2).unwrap(),
            Kernel::attractive_repulsive(7.0, 1.5, 2).unwrap(),
            morse_pair(),
            Kernel::new(vec![KernelTerm::power_law(4.0, 1.0), KernelTerm::newtonian(-1.0)], 2).unwrap(),
        ]
    }

    fn point(k: &Kernel, raw: [f64; 2]) -> Vec<f64> {
        raw[..k.dim()].to_vec()
    }

    proptest! {
        #[test]
        fn gradient_is_odd(i in 0usize..8, x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let k = &catalog()[i];
            let p = point(k, [x, y]);
            prop_assume!(norm(&p) > 1e-6);
            let m: Vec<f64> = p.iter().map(|v| -v).collect();
            let g = k.eval_grad(&p).unwrap();
            let gm = k.eval_grad(&m).unwrap();
            for (a, b) in g.iter().zip(&gm) {
                prop_assert_eq!(*a, -*b);
            }
        }

        #[test]
        fn finite_differences_match_gradient_and_laplacian(i in 0usize..8, x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let k = &catalog()[i];
            let p = point(k, [x, y]);
            prop_assume!(norm(&p) > 0.1);
            let step = 1e-4;
            let g = k.eval_grad(&p).unwrap();
            let mut div = 0.0;
            for j in 0..k.dim() {
                let mut a = p.clone();
                let mut b = p.clone();
                a[j] += step;
                b[j] -= step;
                let fd = (k.eval(&a).unwrap() - k.eval(&b).unwrap()) / (2.0 * step);
                prop_assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()), "d/dx{} {} vs {}", j, fd, g[j]);
                div += (k.eval_grad(&a).unwrap()[j] - k.eval_grad(&b).unwrap()[j]) / (2.0 * step);
            }
            if !k.has_newtonian() {
                let lap = k.eval_lap(&p).unwrap();
                prop_assert!((div - lap).abs() < 1e-5 * (1.0 + lap.abs()), "div {} vs lap {}", div, lap);
            }
        }
    }

    #[test]
    fn orders_always_consistent() {
        for k in catalog() {
            let (s, big_s) = (k.singularity_order(), k.growth_order());
            assert!(s <= big_s);
            assert!(s >= 1.0 - k.dim() as f64);
        }
    }
}
