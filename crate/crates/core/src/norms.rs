//! Discrete norms of grid functions, the regularized interaction energy, and
//! error functionals comparing particle states with reference values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::regkernel::RegularizedKernel;
use crate::solver::ParticleState;

/// Finitely supported function on `h Z^d`; missing entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    h: f64,
    dim: usize,
    values: BTreeMap<Vec<i64>, f64>,
}

impl GridFunction {
    pub fn new(h: f64, dim: usize) -> Result<Self> {
        if !(h > 0.0) || dim == 0 {
            return Err(Error::InvalidInput(format!("grid functions need h > 0 and d >= 1 (h = {h}, d = {dim})")));
        }
        Ok(Self {
            h,
            dim,
            values: BTreeMap::new(),
        })
    }

    /// From flattened multi-indices (`dim` per entry) and values.
    pub fn from_entries(h: f64, dim: usize, indices: &[i64], values: &[f64]) -> Result<Self> {
        let mut u = Self::new(h, dim)?;
        if indices.len() != values.len() * dim {
            return Err(Error::IndexMismatch(format!(
                "{} index entries for {} values in dimension {dim}",
                indices.len(),
                values.len()
            )));
        }
        for (idx, &v) in indices.chunks(dim).zip(values) {
            u.set(idx.to_vec(), v);
        }
        Ok(u)
    }

    pub fn set(&mut self, index: Vec<i64>, value: f64) {
        debug_assert_eq!(index.len(), self.dim);
        self.values.insert(index, value);
    }

    pub fn get(&self, index: &[i64]) -> f64 {
        self.values.get(index).copied().unwrap_or(0.0)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    /// Entries with `|ih| <= radius`.
    pub fn restricted(&self, radius: f64) -> Self {
        let values = self
            .values
            .iter()
            .filter(|(k, _)| k.iter().map(|&i| (i as f64 * self.h).powi(2)).sum::<f64>().sqrt() <= radius * (1.0 + 1e-12))
            .map(|(k, &v)| (k.clone(), v))
            .collect();
        Self {
            h: self.h,
            dim: self.dim,
            values,
        }
    }

    fn cell(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// `(D_j^+ u)_i = (u_{i+e_j} - u_i)/h` over the indices where either term is nonzero.
    fn forward_difference(&self, axis: usize) -> Vec<f64> {
        let mut sites: std::collections::BTreeSet<Vec<i64>> = self.values.keys().cloned().collect();
        for k in self.values.keys() {
            let mut prev = k.clone();
            prev[axis] -= 1;
            sites.insert(prev);
        }
        sites
            .into_iter()
            .map(|i| {
                let mut next = i.clone();
                next[axis] += 1;
                (self.get(&next) - self.get(&i)) / self.h
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NormKind {
    Lp(f64),
    Linf,
    Dual2,
}

impl NormKind {
    pub const L1: NormKind = NormKind::Lp(1.0);
    pub const L2: NormKind = NormKind::Lp(2.0);
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(NormKind::Linf),
            "dual2" => Ok(NormKind::Dual2),
            _ => s
                .strip_prefix('l')
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| *p >= 1.0)
                .map(NormKind::Lp)
                .ok_or_else(|| Error::InvalidInput(format!("unknown norm '{s}' (expected l1, l2, lp, linf or dual2)"))),
        }
    }
}

impl TryFrom<String> for NormKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormKind> for String {
    fn from(n: NormKind) -> String {
        n.to_string()
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Lp(p) => write!(f, "l{p}"),
            NormKind::Linf => write!(f, "linf"),
            NormKind::Dual2 => write!(f, "dual2"),
        }
    }
}

fn lp_of(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.map(f64::abs).sum::<f64>() * cell
    } else {
        (values.map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `(sum_i |u_i|^p h^d)^{1/p}`, or the sup for `p = inf`, optionally over
/// the grid points in the ball of radius `ball`.
pub fn lp_norm(u: &GridFunction, p: f64, ball: Option<f64>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be at least 1, got {p}")));
    }
    let restricted;
    let u = match ball {
        Some(r) => {
            restricted = u.restricted(r);
            &restricted
        }
        None => u,
    };
    Ok(lp_of(u.values.values().copied(), p, u.cell()))
}

/// `(|u|_p^p + sum_j |D_j^+ u|_p^p)^{1/p}`.
pub fn w1p_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be at least 1, got {p}")));
    }
    let cell = u.cell();
    let diffs: Vec<Vec<f64>> = (0..u.dim).map(|j| u.forward_difference(j)).collect();
    if p.is_infinite() {
        let mut m = lp_of(u.values.values().copied(), p, cell);
        for d in &diffs {
            m = m.max(lp_of(d.iter().copied(), p, cell));
        }
        return Ok(m);
    }
    let mut total = lp_of(u.values.values().copied(), p, cell).powf(p);
    for d in &diffs {
        total += lp_of(d.iter().copied(), p, cell).powf(p);
    }
    Ok(total.powf(1.0 / p))
}

pub const DEFAULT_MARGIN: usize = 4;

/// Dense box of grid cells, last axis fastest.
struct GridBox {
    lo: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl GridBox {
    fn around(u: &GridFunction, margin: usize) -> Self {
        let d = u.dim;
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for k in u.values.keys() {
            for a in 0..d {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        let m = margin as i64;
        lo.iter_mut().for_each(|v| *v -= m);
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h + m - l + 1) as usize).collect();
        let mut strides = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Self { lo, shape, strides }
    }

    fn size(&self) -> usize {
        self.shape.iter().product()
    }

    fn flat(&self, idx: &[i64]) -> usize {
        idx.iter()
            .zip(&self.lo)
            .zip(&self.strides)
            .map(|((i, l), s)| (i - l) as usize * s)
            .sum()
    }

    /// `(I + h^{-2} (-Laplacian, zero outside the box)) x`
    fn apply(&self, x: &[f64], inv_h2: f64, out: &mut [f64]) {
        let d = self.shape.len();
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let mut acc = (1.0 + 2.0 * d as f64 * inv_h2) * x[k];
            let mut rem = k;
            for a in 0..d {
                let coord = rem / self.strides[a];
                rem %= self.strides[a];
                if coord > 0 {
                    acc -= inv_h2 * x[k - self.strides[a]];
                }
                if coord + 1 < self.shape[a] {
                    acc -= inv_h2 * x[k + self.strides[a]];
                }
            }
            *o = acc;
        });
    }
}

/// `||u||_{W^{-1,2}_h} = sqrt(h^d u^T A^{-1} u)` with `A = I + sum_j (D_j^+)^T D_j^+`
/// on the bounding box of the support enlarged by `margin` cells, zero
/// outside. Conjugate gradients to a relative residual of 1e-12.
pub fn dual_norm_2(u: &GridFunction, margin: usize) -> Result<f64> {
    if u.values.values().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let grid = GridBox::around(u, margin);
    let n = grid.size();
    let mut b = vec![0.0; n];
    for (k, &v) in &u.values {
        b[grid.flat(k)] = v;
    }
    let inv_h2 = 1.0 / (u.h * u.h);
    let x = conjugate_gradient(|x, out| grid.apply(x, inv_h2, out), &b, 1e-12, 10 * n + 1000)?;
    let quad: f64 = b.iter().zip(&x).map(|(a, c)| a * c).sum();
    Ok((u.cell() * quad.max(0.0)).sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient<A: Fn(&[f64], &mut [f64])>(apply: A, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let target = rel_tol * dot(b, b).sqrt();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if rr.sqrt() <= target {
        return Ok(x);
    }
    Err(Error::SolverNonConvergence {
        iterations: max_iter,
        residual: rr.sqrt(),
    })
}

/// `E_delta = 1/2 sum_{i,j} K_delta(X_i - X_j) m_i m_j`, self terms included.
pub fn energy_delta(s: &ParticleState, rk: &RegularizedKernel) -> Result<f64> {
    if s.dim != rk.dim() {
        return Err(Error::DimensionMismatch {
            expected: rk.dim(),
            got: s.dim,
        });
    }
    let d = s.dim;
    let rows: Vec<f64> = (0..s.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let xi = s.position(i);
            let mut row = 0.0;
            for j in 0..s.len() {
                let xj = s.position(j);
                let r = (0..d).map(|a| (xi[a] - xj[a]).powi(2)).sum::<f64>().sqrt();
                row += rk.potential_profile(r)? * s.weights[j];
            }
            Ok(row * s.weights[i])
        })
        .collect::<Result<_>>()?;
    Ok(0.5 * rows.iter().sum::<f64>())
}

/// Reorders reference values given per grid index into the particle order of
/// `state`; `width` values per index.
pub fn align(reference_indices: &[i64], reference: &[f64], width: usize, state: &ParticleState) -> Result<Vec<f64>> {
    let d = state.dim;
    if reference_indices.len() % d != 0 || reference.len() != reference_indices.len() / d * width {
        return Err(Error::IndexMismatch("reference indices and values have inconsistent lengths".into()));
    }
    let lookup: std::collections::HashMap<&[i64], usize> =
        reference_indices.chunks(d).enumerate().map(|(k, idx)| (idx, k)).collect();
    let mut out = Vec::with_capacity(state.len() * width);
    for i in 0..state.len() {
        let k = lookup
            .get(state.index(i))
            .ok_or_else(|| Error::IndexMismatch(format!("no reference value for grid index {:?}", state.index(i))))?;
        out.extend_from_slice(&reference[k * width..(k + 1) * width]);
    }
    Ok(out)
}

fn measure(u: &GridFunction, norm: NormKind, ball: Option<f64>) -> Result<f64> {
    match norm {
        NormKind::Lp(p) => lp_norm(u, p, ball),
        NormKind::Linf => lp_norm(u, f64::INFINITY, ball),
        NormKind::Dual2 => match ball {
            Some(r) => dual_norm_2(&u.restricted(r), DEFAULT_MARGIN),
            None => dual_norm_2(u, DEFAULT_MARGIN),
        },
    }
}

fn error_function(state: &ParticleState, values: impl Iterator<Item = f64>) -> Result<GridFunction> {
    let mut u = GridFunction::new(state.h, state.dim)?;
    for (i, v) in values.enumerate() {
        u.set(state.index(i).to_vec(), v);
    }
    Ok(u)
}

/// Norm of `|X_i - X~_i|` over the grid labels of `approx`. `exact` holds
/// positions in the particle order of `approx`.
pub fn trajectory_error(exact: &[f64], approx: &ParticleState, norm: NormKind, ball: Option<f64>) -> Result<f64> {
    if exact.len() != approx.positions.len() {
        return Err(Error::IndexMismatch(format!(
            "{} reference coordinates for {} particle coordinates",
            exact.len(),
            approx.positions.len()
        )));
    }
    let d = approx.dim;
    let e = error_function(
        approx,
        exact
            .chunks(d)
            .zip(approx.positions.chunks(d))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()),
    )?;
    measure(&e, norm, ball)
}

/// Norm of `rho_i - rho~_i`; `exact` follows the particle order of `approx`.
pub fn density_error(exact: &[f64], approx: &ParticleState, norm: NormKind, ball: Option<f64>) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(Error::IndexMismatch(format!(
            "{} reference densities for {} particles",
            exact.len(),
            approx.len()
        )));
    }
    let e = error_function(approx, exact.iter().zip(&approx.densities).map(|(a, b)| a - b))?;
    measure(&e, norm, ball)
}

/// Same as [`density_error`] for arbitrary per-particle scalars (e.g. a
/// velocity component).
pub fn scalar_error(exact: &[f64], approx: &[f64], state: &ParticleState, norm: NormKind, ball: Option<f64>) -> Result<f64> {
    if exact.len() != approx.len() || approx.len() % state.len().max(1) != 0 {
        return Err(Error::IndexMismatch("value arrays do not match the particle count".into()));
    }
    let width = approx.len() / state.len().max(1);
    let e = error_function(
        state,
        exact
            .chunks(width)
            .zip(approx.chunks(width))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()),
    )?;
    measure(&e, norm, ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::mollifiers::{Builtin, MollifierSpec};
    use crate::regkernel::{build, TableConfig};
    use proptest::prelude::*;

    fn line(h: f64, values: &[(i64, f64)]) -> GridFunction {
        let mut u = GridFunction::new(h, 1).unwrap();
        for &(i, v) in values {
            u.set(vec![i], v);
        }
        u
    }

    #[test]
    fn lp_examples() {
        let u = line(0.5, &[(-2, 1.0), (-1, 1.0), (0, 1.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(lp_norm(&u, 1.0, None).unwrap(), 2.5);
        assert_eq!(lp_norm(&u, f64::INFINITY, None).unwrap(), 1.0);
        assert_eq!(lp_norm(&u, 1.0, Some(0.5)).unwrap(), 1.5);
        let spike = line(0.1, &[(4, 3.0)]);
        assert!((lp_norm(&spike, 2.0, None).unwrap() - 3.0 * 0.1f64.sqrt()).abs() < 1e-15);
        assert!(lp_norm(&spike, 0.5, None).is_err());
    }

    #[test]
    fn w1p_examples() {
        let spike = line(1.0, &[(0, 1.0)]);
        assert!((w1p_norm(&spike, 2.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(w1p_norm(&line(0.3, &[]), 2.0).unwrap(), 0.0);
        let ramp: Vec<(i64, f64)> = (0..20).map(|i| (i, i as f64 * 0.1)).collect();
        let r = line(0.1, &ramp);
        assert!(w1p_norm(&r, 1.0).unwrap() >= lp_norm(&r, 1.0, None).unwrap());
        // 2D spike: value plus four unit differences
        let mut s2 = GridFunction::new(1.0, 2).unwrap();
        s2.set(vec![0, 0], 1.0);
        assert!((w1p_norm(&s2, 2.0).unwrap() - 5f64.sqrt()).abs() < 1e-15);
    }

    /// Dense oracle for the dual norm on a 1D box.
    fn dense_dual(u: &GridFunction, margin: usize) -> f64 {
        let keys: Vec<i64> = u.iter().map(|(k, _)| k[0]).collect();
        let lo = keys.iter().min().unwrap() - margin as i64;
        let hi = keys.iter().max().unwrap() + margin as i64;
        let n = (hi - lo + 1) as usize;
        let c = 1.0 / (u.h() * u.h());
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0 + 2.0 * c
            } else if i.abs_diff(j) == 1 {
                -c
            } else {
                0.0
            }
        });
        let b = nalgebra::DVector::from_fn(n, |i, _| u.get(&[lo + i as i64]));
        let x = a.lu().solve(&b).unwrap();
        (u.h() * b.dot(&x)).sqrt()
    }

    #[test]
    fn dual_norm_matches_dense_solve() {
        let spike = line(1.0, &[(0, 1.0)]);
        let got = dual_norm_2(&spike, 2).unwrap();
        assert!((got / dense_dual(&spike, 2) - 1.0).abs() < 1e-10);
        let u = line(0.25, &[(-1, 0.3), (0, -1.2), (1, 2.0)]);
        assert!((dual_norm_2(&u, 2).unwrap() / dense_dual(&u, 2) - 1.0).abs() < 1e-10);
        assert_eq!(dual_norm_2(&line(1.0, &[]), 4).unwrap(), 0.0);
    }

    #[test]
    fn dual_norm_grows_with_margin_and_settles() {
        let spike = line(1.0, &[(0, 1.0)]);
        let values: Vec<f64> = [0, 1, 2, 4, 8, 16, 32].iter().map(|&m| dual_norm_2(&spike, m).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
        // boundary influence decays geometrically with the margin
        assert!((values[6] - values[5]).abs() < 1e-8);
        assert!((values[6] - values[5]) < (values[5] - values[4]));
        let mut s2 = GridFunction::new(0.5, 2).unwrap();
        s2.set(vec![1, -2], 1.0);
        let (a, b) = (dual_norm_2(&s2, 16).unwrap(), dual_norm_2(&s2, 32).unwrap());
        assert!(b >= a && b - a < 1e-8);
    }

    #[test]
    fn energy_examples() {
        let m = MollifierSpec::builtin(Builtin::Psi4_1d).scaled(0.1).unwrap();
        let rk = build(&Kernel::quadratic(1).unwrap(), &m, &TableConfig::default()).unwrap();
        let pair = ParticleState::from_particles(1, vec![-1.0, 1.0], vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert!((energy_delta(&pair, &rk).unwrap() - 0.5).abs() < 1e-15);
        let one = ParticleState::from_particles(1, vec![0.7], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(energy_delta(&one, &rk).unwrap(), 0.0);
    }

    fn sample_state(seed: u64, n: usize) -> ParticleState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = (0..n).map(|_| rng.gen_range(0.01..0.2)).collect();
        ParticleState::from_particles(2, positions, weights, vec![1.0; n]).unwrap()
    }

    #[test]
    fn error_functionals() {
        let mut s = ParticleState::from_particles(1, vec![0.0, 0.1, 0.2], vec![0.1; 3], vec![1.0; 3]).unwrap();
        s.h = 0.1;
        let exact = s.positions.clone();
        assert_eq!(trajectory_error(&exact, &s, NormKind::L1, None).unwrap(), 0.0);
        let shifted: Vec<f64> = exact.iter().map(|x| x + 0.25).collect();
        assert!((trajectory_error(&shifted, &s, NormKind::L1, None).unwrap() - 0.25 * 3.0 * 0.1).abs() < 1e-15);
        assert!(trajectory_error(&shifted[..2], &s, NormKind::L1, None).is_err());
        let dens = vec![1.0, 1.5, 1.0];
        assert!((density_error(&dens, &s, NormKind::Linf, None).unwrap() - 0.5).abs() < 1e-15);
        let aligned = align(&[2, 0, 1], &[30.0, 10.0, 20.0], 1, &s).unwrap();
        assert_eq!(aligned, vec![10.0, 20.0, 30.0]);
        assert!(matches!(align(&[0, 1], &[1.0, 2.0], 1, &s), Err(Error::IndexMismatch(_))));
    }

    #[test]
    fn norm_names() {
        for (s, n) in [("l1", NormKind::L1), ("l2", NormKind::L2), ("linf", NormKind::Linf), ("dual2", NormKind::Dual2)] {
            assert_eq!(s.parse::<NormKind>().unwrap(), n);
            assert_eq!(n.to_string(), s);
        }
        assert!("l0.5".parse::<NormKind>().is_err());
        assert!("w12".parse::<NormKind>().is_err());
    }

    fn random_function() -> impl Strategy<Value = GridFunction> {
        (1usize..=2, 0.05..1.0f64, prop::collection::vec((-6i64..6, -6i64..6, -5.0..5.0f64), 1..30)).prop_map(|(d, h, entries)| {
            let mut u = GridFunction::new(h, d).unwrap();
            for (a, b, v) in entries {
                u.set(if d == 1 { vec![a] } else { vec![a, b] }, v);
            }
            u
        })
    }

    proptest! {
        #[test]
        fn dual_norm_is_bounded_by_l2(u in random_function()) {
            prop_assert!(dual_norm_2(&u, DEFAULT_MARGIN).unwrap() <= lp_norm(&u, 2.0, None).unwrap() * (1.0 + 1e-12));
        }

        // |u|_q <= (#pts h^d)^{1/q - 1/p} |u|_p for q <= p, and
        // |u|_q <= h^{d (1/q - 1/p)} |u|_p for q >= p
        #[test]
        fn holder_bounds_on_a_ball(u in random_function(), p in 1.0..6.0f64, q in 1.0..6.0f64) {
            let radius = 3.0 * u.h();
            let b = u.restricted(radius);
            let cell = b.h().powi(b.dim() as i32);
            let lq = lp_norm(&b, q, None).unwrap();
            let lp = lp_norm(&b, p, None).unwrap();
            let c = if q <= p {
                (b.len().max(1) as f64 * cell).powf(1.0 / q - 1.0 / p)
            } else {
                cell.powf(1.0 / q - 1.0 / p)
            };
            prop_assert!(lq <= c * lp * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn energy_is_permutation_and_translation_invariant(seed in any::<u64>(), dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
            let m = MollifierSpec::builtin(Builtin::Psi4_2d).scaled(0.2).unwrap();
            let rk = build(&Kernel::newtonian(2).unwrap(), &m, &TableConfig::default()).unwrap();
            let s = sample_state(seed, 10);
            let e = energy_delta(&s, &rk).unwrap();
            let perm: Vec<usize> = (0..10).map(|k| (k * 3) % 10).collect();
            let ep = energy_delta(&s.permuted(&perm), &rk).unwrap();
            let et = energy_delta(&s.translated(&[dx, dy]), &rk).unwrap();
            prop_assert!((e - ep).abs() < 1e-12 * e.abs().max(1.0));
            prop_assert!((e - et).abs() < 1e-12 * e.abs().max(1.0));
        }
    }
}
