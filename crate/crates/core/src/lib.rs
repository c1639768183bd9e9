//! Blob and particle methods for the aggregation equation
//! `rho_t + div(rho v) = 0`, `v = -grad K * rho`.

pub mod error;
pub mod harness;
pub mod initial_data;
pub mod kernels;
pub mod mollifiers;
pub mod norms;
pub mod oracles;
mod quadrature;
pub mod regkernel;
pub mod solver;
mod special;

pub use error::{Error, Result};
pub use kernels::{Kernel, KernelTerm, TermForm};
pub use mollifiers::{Builtin, MollifierSpec, ScaledMollifier};
pub use regkernel::{Backend, RegularizedKernel, TableConfig};
pub use initial_data::{discretize, DensityProfile, GridDiscretization, Shape};
pub use solver::{integrate, IntegratorConfig, Method, ParticleState};
pub use harness::{fit_rate, predicted_rate, run_simulation, run_study, ConvergenceReport, SimulationConfig, StudyConfig};
