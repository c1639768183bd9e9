//! Simulation runs and convergence studies driven by JSON configs, plus the
//! CSV/JSON writers used by the command line tool.

pub mod cli;
mod output;
pub mod presets;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::initial_data::{discretize, DensityProfile, ProfileConfig};
use crate::kernels::Kernel;
use crate::mollifiers::{Builtin, MollifierSpec};
use crate::norms::{align, density_error, energy_delta, scalar_error, trajectory_error, NormKind};
use crate::oracles::{newtonian_radial, quadratic_contraction, RadialExactSolution};
use crate::regkernel::{build, TableConfig};
use crate::solver::{integrate_with_stats, uniform_times, velocity, IntegratorConfig, Method, ParticleState, Stats};

pub use output::{write_convergence, write_energy_csv, write_simulation, write_snapshots_csv, Manifest};
pub use presets::{preset, Preset, PRESET_NAMES};

fn default_q() -> f64 {
    0.9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Blob,
    Particle,
}

/// One run of the particle system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub kernel: Kernel,
    /// Defaults to the fourth order builtin for the kernel's dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierSpec>,
    pub rho0: ProfileConfig,
    /// Rescale `rho0` to unit mass.
    #[serde(default)]
    pub normalize: bool,
    pub h: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Overrides `delta = h^q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub method: MethodKind,
    pub t_end: f64,
    /// Number of equal intervals between snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub table: TableConfig,
    /// Record the regularized energy at every snapshot (blob method only).
    #[serde(default)]
    pub energy: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SimulationConfig {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.h.powf(self.q))
    }

    pub fn profile(&self) -> Result<DensityProfile> {
        DensityProfile::from_config(&self.rho0, self.dim(), self.normalize)
    }

    pub fn times(&self) -> Vec<f64> {
        match (&self.sample_times, self.samples) {
            (Some(t), _) => t.clone(),
            (None, Some(n)) => uniform_times(0.0, self.t_end, n.max(1)),
            (None, None) => vec![self.t_end],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 0.5) {
            return Err(Error::Config(format!("h must lie in (0, 0.5], got {}", self.h)));
        }
        if self.delta.is_none() && !(self.q > 0.5 && self.q < 1.0) {
            return Err(Error::Config(format!("q must lie in (0.5, 1), got {}", self.q)));
        }
        if !(self.delta() > 0.0) || !self.delta().is_finite() {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta())));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        let times = self.times();
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::Config("sample times must be ascending and lie in [0, t_end]".into()));
        }
        if self.energy && self.method == MethodKind::Particle {
            return Err(Error::Config("energy tracking needs the blob method".into()));
        }
        self.integrator.validate()?;
        self.table.validate()
    }

    pub fn method(&self) -> Result<Method> {
        build_method(&self.kernel, self.mollifier.as_ref(), self.delta(), &self.table, self.method)
    }

    pub fn initial_state(&self) -> Result<ParticleState> {
        Ok(ParticleState::from_grid(&discretize(&self.profile()?, self.h)?))
    }
}

/// The blob method with `delta`, or the particle method.
pub fn build_method(
    kernel: &Kernel,
    mollifier: Option<&MollifierSpec>,
    delta: f64,
    table: &TableConfig,
    kind: MethodKind,
) -> Result<Method> {
    match kind {
        MethodKind::Particle => Ok(Method::Particle(kernel.clone())),
        MethodKind::Blob => {
            let spec = match mollifier {
                Some(m) => m.clone(),
                None => default_mollifier(kernel.dim())?,
            };
            Ok(Method::Blob(build(kernel, &spec.scaled(delta)?, table)?))
        }
    }
}

pub fn default_mollifier(dim: usize) -> Result<MollifierSpec> {
    match dim {
        1 => Ok(MollifierSpec::builtin(Builtin::Psi4_1d)),
        2 => Ok(MollifierSpec::builtin(Builtin::Psi4_2d)),
        d => Err(Error::Config(format!("no default mollifier in dimension {d}; give one explicitly"))),
    }
}

/// SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub initial: ParticleState,
    pub snapshots: Vec<ParticleState>,
    pub energies: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub stats: Stats,
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationRun> {
    cfg.validate()?;
    let method = cfg.method()?;
    let initial = cfg.initial_state()?;
    let (snapshots, stats) = integrate_with_stats(&initial, &method, &cfg.integrator, cfg.t_end, &cfg.times())?;
    let energies = match (&method, cfg.energy) {
        (Method::Blob(rk), true) => Some(snapshots.iter().map(|s| energy_delta(s, rk)).collect::<Result<_>>()?),
        _ => None,
    };
    Ok(SimulationRun {
        initial,
        snapshots,
        energies,
        delta: matches!(method, Method::Blob(_)).then(|| cfg.delta()),
        stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Trajectory,
    Velocity,
    Density,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Trajectory => "trajectory",
            Observable::Velocity => "velocity",
            Observable::Density => "density",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceKind {
    /// Closed-form solution (Newtonian kernel with radial data, or `|x|^2/2`).
    Exact,
    /// A run of the same method at the finer spacing `h_ref`.
    FineGrid { h_ref: f64 },
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::L1]
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Trajectory, Observable::Density]
}

/// A sweep over grid spacings with `delta = h^q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kernel: Kernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierSpec>,
    pub rho0: ProfileConfig,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_q")]
    pub q: f64,
    pub h_list: Vec<f64>,
    pub t_eval: f64,
    #[serde(default)]
    pub method: MethodKind,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    /// Restrict errors to labels in this ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<f64>,
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub table: TableConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn default_reference() -> ReferenceKind {
    ReferenceKind::Exact
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_list.is_empty() {
            return Err(Error::Config("h_list is empty".into()));
        }
        if self.h_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("h_list must be strictly decreasing".into()));
        }
        if self.h_list.iter().any(|&h| !(h > 0.0 && h <= 0.5)) {
            return Err(Error::Config("every h must lie in (0, 0.5]".into()));
        }
        if !(self.q > 0.5 && self.q < 1.0) {
            return Err(Error::Config(format!("q must lie in (0.5, 1), got {}", self.q)));
        }
        if let Some(h) = self.h_list.iter().find(|&&h| h.powf(self.q) > 0.5) {
            return Err(Error::Config(format!("delta = h^q exceeds 0.5 at h = {h}")));
        }
        if !(self.t_eval >= 0.0) || !self.t_eval.is_finite() {
            return Err(Error::Config(format!("t_eval must be nonnegative, got {}", self.t_eval)));
        }
        if self.norms.is_empty() || self.observables.is_empty() {
            return Err(Error::Config("at least one norm and one observable are required".into()));
        }
        if let ReferenceKind::FineGrid { h_ref } = self.reference {
            let finest = *self.h_list.last().expect("nonempty");
            if !(h_ref > 0.0 && h_ref < finest) {
                return Err(Error::Config(format!("h_ref = {h_ref} must be below the finest h = {finest}")));
            }
            for &h in &self.h_list {
                grid_ratio(h, h_ref)?;
            }
        }
        self.integrator.validate()?;
        self.table.validate()
    }

    pub fn profile(&self) -> Result<DensityProfile> {
        DensityProfile::from_config(&self.rho0, self.kernel.dim(), self.normalize)
    }

    /// A single run of this study at spacing `h`.
    pub fn simulation(&self, h: f64, t_end: f64) -> SimulationConfig {
        SimulationConfig {
            kernel: self.kernel.clone(),
            mollifier: self.mollifier.clone(),
            rho0: self.rho0.clone(),
            normalize: self.normalize,
            h,
            q: self.q,
            delta: None,
            method: self.method,
            t_end,
            samples: None,
            sample_times: None,
            integrator: self.integrator,
            table: self.table.clone(),
            energy: false,
            notes: Vec::new(),
        }
    }

    /// Accuracy order of the mollifier, when the blob method is used.
    pub fn mollifier_order(&self) -> Result<Option<usize>> {
        match self.method {
            MethodKind::Particle => Ok(None),
            MethodKind::Blob => Ok(Some(match &self.mollifier {
                Some(m) => m.order(),
                None => default_mollifier(self.kernel.dim())?.order(),
            })),
        }
    }

    /// The reference solution named by `reference`.
    pub fn reference_solution(&self) -> Result<Box<dyn ReferenceSolution>> {
        match self.reference {
            ReferenceKind::Exact => {
                if self.kernel.is_quadratic() {
                    Ok(Box::new(QuadraticReference))
                } else if self.kernel.is_pure_newtonian() {
                    Ok(Box::new(newtonian_radial(&self.profile()?)?))
                } else {
                    Err(Error::Config(
                        "no exact solution for this kernel; use a fine_grid reference".into(),
                    ))
                }
            }
            ReferenceKind::FineGrid { h_ref } => {
                let sim = self.simulation(h_ref, self.t_eval);
                let method = sim.method()?;
                let initial = sim.initial_state()?;
                let (mut states, _) = integrate_with_stats(&initial, &method, &self.integrator, self.t_eval, &[])?;
                let state = states.pop().expect("one snapshot");
                let velocities = velocity(&state, &method)?;
                Ok(Box::new(FineGridReference {
                    state,
                    velocities,
                    densities: method.evolves_density(),
                }))
            }
        }
    }
}

/// `h / h_ref`, which must be an integer.
fn grid_ratio(h: f64, h_ref: f64) -> Result<i64> {
    let ratio = h / h_ref;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
        return Err(Error::Config(format!("h = {h} is not an integer multiple of h_ref = {h_ref}")));
    }
    Ok(k as i64)
}

/// Reference values at time `t` for each particle of a grid state, in its
/// particle order. Missing fields mean the observable is unavailable.
#[derive(Debug, Clone, Default)]
pub struct ReferenceValues {
    pub positions: Vec<f64>,
    pub velocities: Option<Vec<f64>>,
    pub densities: Option<Vec<f64>>,
}

pub trait ReferenceSolution: Sync + Send {
    fn values(&self, initial: &ParticleState, t: f64) -> Result<ReferenceValues>;
}

impl ReferenceSolution for RadialExactSolution {
    fn values(&self, initial: &ParticleState, t: f64) -> Result<ReferenceValues> {
        let e = self.evaluate(initial, t)?;
        Ok(ReferenceValues {
            positions: e.positions,
            velocities: Some(e.velocities),
            densities: Some(e.densities),
        })
    }
}

/// `K = |x|^2/2`: contraction towards the center of mass at rate `M`, and
/// `rho = rho0 e^{d M t}` along trajectories.
struct QuadraticReference;

impl ReferenceSolution for QuadraticReference {
    fn values(&self, initial: &ParticleState, t: f64) -> Result<ReferenceValues> {
        let total = initial.mass();
        let center = initial.center_of_mass();
        let positions = quadratic_contraction(initial, t);
        let velocities = positions
            .iter()
            .enumerate()
            .map(|(k, x)| -total * (x - center[k % initial.dim]))
            .collect();
        let growth = (initial.dim as f64 * total * t).exp();
        Ok(ReferenceValues {
            positions,
            velocities: Some(velocities),
            densities: Some(initial.densities.iter().map(|r| r * growth).collect()),
        })
    }
}

/// A fine run, compared at the labels it shares with the coarse grid.
struct FineGridReference {
    state: ParticleState,
    velocities: Vec<f64>,
    densities: bool,
}

impl ReferenceSolution for FineGridReference {
    fn values(&self, initial: &ParticleState, _t: f64) -> Result<ReferenceValues> {
        let ratio = grid_ratio(initial.h, self.state.h)?;
        let d = self.state.dim;
        let mut indices = Vec::new();
        let mut keep = Vec::new();
        for i in 0..self.state.len() {
            let idx = self.state.index(i);
            if idx.iter().all(|k| k % ratio == 0) {
                indices.extend(idx.iter().map(|k| k / ratio));
                keep.push(i);
            }
        }
        let pick = |values: &[f64], width: usize| -> Vec<f64> {
            keep.iter().flat_map(|&i| values[i * width..(i + 1) * width].iter().copied()).collect()
        };
        Ok(ReferenceValues {
            positions: align(&indices, &pick(&self.state.positions, d), d, initial)?,
            velocities: Some(align(&indices, &pick(&self.velocities, d), d, initial)?),
            densities: if self.densities {
                Some(align(&indices, &pick(&self.state.densities, 1), 1, initial)?)
            } else {
                None
            },
        })
    }
}

/// `(m q, G_L(delta))`: the headline rate and the growth factor multiplying
/// the `h^L` discretization error.
pub fn predicted_rate(m: usize, q: f64, l: f64, s: f64, d: usize, delta: f64) -> (f64, f64) {
    debug_assert!(delta > 0.0 && delta <= 0.5);
    let excess = l - s - d as f64;
    let g = if excess < 0.0 {
        1.0
    } else if excess == 0.0 {
        delta.ln().abs()
    } else {
        delta.powf(-excess)
    };
    (m as f64 * q, g)
}

/// Least-squares slope of `log error` against `log h`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientRows { needed: 2, got: points.len() });
    }
    if let Some(k) = points.iter().position(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::NonPositiveError(k));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all spacings are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub particles: usize,
    /// Keyed by `"{observable}_{norm}"`.
    pub errors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_hash: String,
    pub method: MethodKind,
    pub q: f64,
    pub t_eval: f64,
    /// `m q` for the blob method.
    pub predicted_rate: Option<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<StudyRow>,
    /// Present only with at least three rows.
    pub slopes: BTreeMap<String, f64>,
}

/// Rows needed before a slope is reported.
pub const MIN_SLOPE_ROWS: usize = 3;

impl ConvergenceReport {
    pub fn series(&self, column: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.errors.get(column).map(|&e| (r.h, e)))
            .collect()
    }

    pub fn slope(&self, column: &str) -> Result<f64> {
        let pts = self.series(column);
        if pts.len() < MIN_SLOPE_ROWS {
            return Err(Error::InsufficientRows {
                needed: MIN_SLOPE_ROWS,
                got: pts.len(),
            });
        }
        fit_rate(&pts)
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let reference = cfg.reference_solution()?;
    run_study_with(cfg, reference.as_ref())
}

/// Runs every `h` of the study (in parallel) against `reference`.
pub fn run_study_with(cfg: &StudyConfig, reference: &dyn ReferenceSolution) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let mut columns = Vec::new();
    for obs in &cfg.observables {
        if *obs == Observable::Density && cfg.method == MethodKind::Particle {
            continue;
        }
        for n in &cfg.norms {
            columns.push(format!("{}_{}", obs.name(), n));
        }
    }
    let rows = cfg
        .h_list
        .par_iter()
        .map(|&h| study_row(cfg, h, reference))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ConvergenceReport {
        config_hash: config_hash(cfg)?,
        method: cfg.method,
        q: cfg.q,
        t_eval: cfg.t_eval,
        predicted_rate: cfg.mollifier_order()?.map(|m| predicted_rate(m, cfg.q, f64::INFINITY, 0.0, 1, 0.5).0),
        columns,
        rows,
        slopes: BTreeMap::new(),
    };
    for c in &report.columns {
        if let Ok(s) = report.slope(c) {
            report.slopes.insert(c.clone(), s);
        }
    }
    Ok(report)
}

fn study_row(cfg: &StudyConfig, h: f64, reference: &dyn ReferenceSolution) -> Result<StudyRow> {
    let sim = cfg.simulation(h, cfg.t_eval);
    let method = sim.method()?;
    let initial = sim.initial_state()?;
    let (mut states, _) = integrate_with_stats(&initial, &method, &cfg.integrator, cfg.t_eval, &[])?;
    let state = states.pop().expect("one snapshot");
    let exact = reference.values(&initial, cfg.t_eval)?;
    let mut errors = BTreeMap::new();
    for obs in &cfg.observables {
        for norm in &cfg.norms {
            let key = format!("{}_{}", obs.name(), norm);
            let e = match obs {
                Observable::Trajectory => trajectory_error(&exact.positions, &state, *norm, cfg.ball)?,
                Observable::Velocity => {
                    let v = velocity(&state, &method)?;
                    let reference = exact
                        .velocities
                        .as_ref()
                        .ok_or_else(|| Error::Config("the reference has no velocities".into()))?;
                    scalar_error(reference, &v, &state, *norm, cfg.ball)?
                }
                Observable::Density => {
                    if !method.evolves_density() {
                        continue;
                    }
                    let reference = exact
                        .densities
                        .as_ref()
                        .ok_or_else(|| Error::Config("the reference has no densities".into()))?;
                    density_error(reference, &state, *norm, cfg.ball)?
                }
            };
            errors.insert(key, e);
        }
    }
    Ok(StudyRow {
        h,
        delta: matches!(method, Method::Blob(_)).then(|| sim.delta()),
        particles: initial.len(),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::Shape;

    fn newtonian_study(method: MethodKind) -> StudyConfig {
        StudyConfig {
            kernel: Kernel::newtonian(1).unwrap(),
            mollifier: None,
            rho0: ProfileConfig {
                shape: Shape::PolyBump { p: 4 },
                scale: None,
            },
            normalize: false,
            q: 0.9,
            h_list: vec![0.2, 0.1, 0.05],
            t_eval: 0.3,
            method,
            norms: vec![NormKind::L1],
            ball: None,
            reference: ReferenceKind::Exact,
            observables: vec![Observable::Trajectory, Observable::Velocity, Observable::Density],
            integrator: IntegratorConfig::default(),
            table: TableConfig::default(),
            notes: Vec::new(),
        }
    }

    #[test]
    fn fit_rate_examples() {
        assert!((fit_rate(&[(0.1, 1e-3), (0.05, 1.25e-4)]).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(0.1, 2.0), (0.05, 2.0), (0.01, 2.0)]).unwrap(), 0.0);
        assert!((fit_rate(&[(0.1, 1.0), (0.05, 0.5), (0.025, 0.25)]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_rejects_bad_rows() {
        assert!(matches!(fit_rate(&[(0.1, 1.0)]), Err(Error::InsufficientRows { .. })));
        assert!(matches!(fit_rate(&[(0.1, 1.0), (0.05, 0.0)]), Err(Error::NonPositiveError(1))));
        assert!(matches!(fit_rate(&[(0.1, -1.0), (0.05, 1.0)]), Err(Error::NonPositiveError(0))));
    }

    #[test]
    fn predicted_rates() {
        assert!((predicted_rate(4, 0.9, f64::INFINITY, 0.0, 1, 0.1).0 - 3.6).abs() < 1e-12);
        assert!((predicted_rate(6, 0.9, f64::INFINITY, 0.0, 1, 0.1).0 - 5.4).abs() < 1e-12);
        let e = (-1.0f64).exp();
        assert!((predicted_rate(4, 0.9, 2.0, 1.0, 1, e).1 - 1.0).abs() < 1e-15);
        assert_eq!(predicted_rate(4, 0.9, 1.0, 1.0, 1, 0.2).1, 1.0);
        assert!((predicted_rate(4, 0.9, 4.0, 1.0, 1, 0.25).1 - 16.0).abs() < 1e-12);
    }

    /// Only the particle at the origin is off, by exactly `C h^2`, so the
    /// L1 error is `C h^3`.
    struct Cubed;

    impl ReferenceSolution for Cubed {
        fn values(&self, initial: &ParticleState, _t: f64) -> Result<ReferenceValues> {
            let mut positions = initial.positions.clone();
            let origin = (0..initial.len()).find(|&i| initial.index(i) == [0]).unwrap();
            positions[origin] += 0.7 * initial.h * initial.h;
            Ok(ReferenceValues {
                positions,
                ..Default::default()
            })
        }
    }

    #[test]
    fn stub_reference_with_cubic_errors_gives_slope_three() {
        let mut cfg = newtonian_study(MethodKind::Blob);
        cfg.t_eval = 0.0;
        cfg.h_list = vec![0.2, 0.1, 0.05, 0.025];
        cfg.observables = vec![Observable::Trajectory];
        let report = run_study_with(&cfg, &Cubed).unwrap();
        assert!((report.slopes["trajectory_l1"] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_study_reports_rows_and_slopes() {
        let report = run_study(&newtonian_study(MethodKind::Blob)).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.columns, ["trajectory_l1", "velocity_l1", "density_l1"]);
        assert_eq!(report.predicted_rate, Some(4.0 * 0.9));
        for r in &report.rows {
            assert!(r.errors.values().all(|&e| e >= 0.0 && e.is_finite()));
            assert!((r.delta.unwrap() - r.h.powf(0.9)).abs() < 1e-15);
        }
        assert!(report.slopes["trajectory_l1"] > 1.0);
    }

    #[test]
    fn slopes_need_three_rows() {
        let mut cfg = newtonian_study(MethodKind::Blob);
        cfg.h_list = vec![0.2, 0.1];
        let report = run_study(&cfg).unwrap();
        assert!(report.slopes.is_empty());
        assert!(matches!(report.slope("trajectory_l1"), Err(Error::InsufficientRows { needed: 3, got: 2 })));
    }

    #[test]
    fn particle_study_skips_density() {
        let report = run_study(&newtonian_study(MethodKind::Particle)).unwrap();
        assert_eq!(report.columns, ["trajectory_l1", "velocity_l1"]);
        assert_eq!(report.predicted_rate, None);
        assert!(report.rows.iter().all(|r| r.delta.is_none()));
    }

    #[test]
    fn quadratic_exact_reference_matches_to_solver_tolerance() {
        let mut cfg = newtonian_study(MethodKind::Blob);
        cfg.kernel = Kernel::quadratic(1).unwrap();
        cfg.t_eval = 1.0;
        let report = run_study(&cfg).unwrap();
        for r in &report.rows {
            assert!(r.errors.values().all(|&e| e < 1e-8), "{:?}", r.errors);
        }
    }

    #[test]
    fn fine_grid_and_exact_references_give_close_errors() {
        let mut cfg = newtonian_study(MethodKind::Blob);
        cfg.observables = vec![Observable::Trajectory];
        let exact = run_study(&cfg).unwrap();
        cfg.reference = ReferenceKind::FineGrid { h_ref: 0.0125 };
        let fine = run_study(&cfg).unwrap();
        for (a, b) in exact.rows.iter().zip(&fine.rows) {
            let (ea, eb) = (a.errors["trajectory_l1"], b.errors["trajectory_l1"]);
            assert!((ea - eb).abs() < 0.1 * ea, "{ea} vs {eb}");
        }
    }

    #[test]
    fn validation() {
        let base = newtonian_study(MethodKind::Blob);
        let mut c = base.clone();
        c.h_list = vec![0.1, 0.2];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.h_list = vec![0.6, 0.1];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.h_list = vec![0.5];
        assert!(c.validate().is_err(), "0.5^0.9 > 0.5");
        let mut c = base.clone();
        c.q = 1.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.reference = ReferenceKind::FineGrid { h_ref: 0.03 };
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.kernel = Kernel::power_law(3.0, 1).unwrap();
        assert!(matches!(run_study(&c), Err(Error::Config(_))));
    }

    #[test]
    fn simulation_outputs_sampled_snapshots_and_energy() {
        let mut sim = newtonian_study(MethodKind::Blob).simulation(0.1, 0.4);
        sim.samples = Some(4);
        sim.energy = true;
        let run = run_simulation(&sim).unwrap();
        assert_eq!(run.snapshots.len(), 5);
        assert_eq!(run.snapshots[0], run.initial);
        let e = run.energies.unwrap();
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        sim.method = MethodKind::Particle;
        assert!(matches!(run_simulation(&sim), Err(Error::Config(_))));
    }

    #[test]
    fn configs_round_trip_through_json() {
        let cfg = newtonian_study(MethodKind::Blob);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config_hash(&back).unwrap(), config_hash(&cfg).unwrap());
        let minimal = r#"{"kernel":{"terms":[{"form":"newtonian","coeff":1.0}],"dim":1},
            "rho0":{"form":"poly_bump","p":20},"h_list":[0.08,0.04],"t_eval":0.5}"#;
        let s: StudyConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(s.q, 0.9);
        assert_eq!(s.norms, vec![NormKind::L1]);
        assert_eq!(s.reference, ReferenceKind::Exact);
        let bad = minimal.replace("\"t_eval\"", "\"t_evl\"");
        assert!(serde_json::from_str::<StudyConfig>(&bad).is_err());
    }
}
