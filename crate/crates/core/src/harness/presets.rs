//! Named configurations for the standard numerical experiments: 1D
//! convergence studies and 2D runs with Newtonian, power-law and Morse
//! kernels.

use serde::{Deserialize, Serialize};

use super::{MethodKind, Observable, ReferenceKind, SimulationConfig, StudyConfig};
use crate::error::{Error, Result};
use crate::initial_data::{ProfileConfig, Shape};
use crate::kernels::{Kernel, KernelTerm};
use crate::mollifiers::{Builtin, MollifierSpec};
use crate::norms::NormKind;
use crate::regkernel::TableConfig;
use crate::solver::IntegratorConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Preset {
    Study(StudyConfig),
    Simulation(SimulationConfig),
}

impl Preset {
    pub fn study(self) -> Option<StudyConfig> {
        match self {
            Preset::Study(s) => Some(s),
            Preset::Simulation(_) => None,
        }
    }

    pub fn simulation(self) -> Option<SimulationConfig> {
        match self {
            Preset::Simulation(s) => Some(s),
            Preset::Study(_) => None,
        }
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "fig1",
    "fig1_particle",
    "fig3",
    "fig4",
    "fig4_newtonian_m4",
    "fig4_newtonian_m6",
    "fig4_newtonian_particle",
    "fig4_cubic_m4",
    "fig4_cubic_m6",
    "fig4_cubic_particle",
    "fig5",
    "fig5_newtonian_smooth",
    "fig5_quadratic_smooth",
    "fig5_cubic_smooth",
    "fig5_newtonian_star",
    "fig5_quadratic_star",
    "fig5_cubic_star",
    "fig6",
    "fig6_newtonian",
    "fig6_power",
    "fig6_power7",
    "fig6_power_particle",
    "fig6_large_delta",
    "fig7",
    "fig7_morse1",
    "fig7_morse2",
    "fig7_morse2_star",
];

const SWEEP: [f64; 4] = [0.08, 0.04, 0.02, 0.01];
const SQUARE_NOTE: &str = "the unit square is centered at the origin";

fn poly(p: u32) -> ProfileConfig {
    ProfileConfig {
        shape: Shape::PolyBump { p },
        scale: None,
    }
}

fn profile(shape: Shape) -> ProfileConfig {
    ProfileConfig { shape, scale: None }
}

fn kernel(terms: Vec<KernelTerm>, dim: usize) -> Kernel {
    Kernel::new(terms, dim).expect("preset kernels are valid")
}

fn study_1d(k: Kernel, mollifier: Builtin, rho0: ProfileConfig, method: MethodKind) -> StudyConfig {
    let observables = match method {
        MethodKind::Blob => vec![Observable::Trajectory, Observable::Density],
        MethodKind::Particle => vec![Observable::Trajectory],
    };
    StudyConfig {
        kernel: k,
        mollifier: Some(MollifierSpec::builtin(mollifier)),
        rho0,
        normalize: false,
        q: 0.9,
        h_list: SWEEP.to_vec(),
        t_eval: 0.5,
        method,
        norms: vec![NormKind::L1],
        ball: None,
        reference: ReferenceKind::Exact,
        observables,
        integrator: IntegratorConfig::default(),
        table: TableConfig::default(),
        notes: Vec::new(),
    }
}

fn cubic_study(mollifier: Builtin, method: MethodKind) -> StudyConfig {
    StudyConfig {
        reference: ReferenceKind::FineGrid { h_ref: 0.0025 },
        table: TableConfig::with_size(2.5, 20_000),
        ..study_1d(kernel(vec![KernelTerm::power_law(3.0, 1.0)], 1), mollifier, poly(10), method)
    }
}

fn sim_2d(k: Kernel, rho0: ProfileConfig, h: f64, t_end: f64, samples: usize) -> SimulationConfig {
    SimulationConfig {
        kernel: k,
        mollifier: Some(MollifierSpec::builtin(Builtin::Psi4_2d)),
        rho0,
        normalize: false,
        h,
        q: 0.9,
        delta: None,
        method: MethodKind::Blob,
        t_end,
        samples: Some(samples),
        sample_times: None,
        integrator: IntegratorConfig::default(),
        table: TableConfig::with_size(2.5, 2000),
        energy: false,
        notes: vec![SQUARE_NOTE.to_string()],
    }
}

fn fig5(k: Kernel, star: bool) -> SimulationConfig {
    if star {
        sim_2d(k, profile(Shape::StarPatch), 0.07, 0.8, 8)
    } else {
        sim_2d(k, profile(Shape::SmoothBump), 0.13, 3.2, 32)
    }
}

fn ring_kernel(a: f64, attractive: KernelTerm) -> Kernel {
    kernel(vec![KernelTerm::power_law(a, 1.0), attractive], 2)
}

fn fig6(k: Kernel) -> SimulationConfig {
    SimulationConfig {
        normalize: true,
        table: TableConfig::with_size(2.5, 100),
        energy: true,
        ..sim_2d(k, poly(2), 0.11, 8.0, 80)
    }
}

fn morse(c_near: f64) -> Kernel {
    kernel(vec![KernelTerm::morse(c_near, 1.0, 1.0), KernelTerm::morse(2.0, 2.0, -1.0)], 2)
}

fn fig7(k: Kernel, rho0: ProfileConfig, normalize: bool) -> SimulationConfig {
    SimulationConfig {
        normalize,
        table: TableConfig::with_size(5.0, 200),
        energy: true,
        ..sim_2d(k, rho0, 0.11, 10.0, 50)
    }
}

/// Looks up a named configuration; see [`PRESET_NAMES`].
pub fn preset(name: &str) -> Result<Preset> {
    use Builtin::*;
    use MethodKind::*;
    let newton1 = || Kernel::newtonian(1).expect("valid");
    let newton2 = || Kernel::newtonian(2).expect("valid");
    let quad2 = || Kernel::quadratic(2).expect("valid");
    let cubic2 = || kernel(vec![KernelTerm::power_law(3.0, 1.0)], 2);
    let p = match name {
        "fig1" => Preset::Study(study_1d(newton1(), Psi4_1d, poly(20), Blob)),
        "fig1_particle" => Preset::Study(study_1d(newton1(), Psi4_1d, poly(20), Particle)),
        "fig3" => Preset::Study(study_1d(newton1(), Psi4_1d, profile(Shape::IndicatorBall { radius: 1.0 }), Blob)),
        "fig4" | "fig4_newtonian_m4" => Preset::Study(study_1d(newton1(), Psi4_1d, poly(10), Blob)),
        "fig4_newtonian_m6" => Preset::Study(study_1d(newton1(), Psi6_1d, poly(10), Blob)),
        "fig4_newtonian_particle" => Preset::Study(study_1d(newton1(), Psi4_1d, poly(10), Particle)),
        "fig4_cubic_m4" => Preset::Study(cubic_study(Psi4_1d, Blob)),
        "fig4_cubic_m6" => Preset::Study(cubic_study(Psi6_1d, Blob)),
        "fig4_cubic_particle" => Preset::Study(cubic_study(Psi4_1d, Particle)),
        "fig5" | "fig5_newtonian_smooth" => Preset::Simulation(fig5(newton2(), false)),
        "fig5_quadratic_smooth" => Preset::Simulation(fig5(quad2(), false)),
        "fig5_cubic_smooth" => Preset::Simulation(fig5(cubic2(), false)),
        "fig5_newtonian_star" => Preset::Simulation(fig5(newton2(), true)),
        "fig5_quadratic_star" => Preset::Simulation(fig5(quad2(), true)),
        "fig5_cubic_star" => Preset::Simulation(fig5(cubic2(), true)),
        "fig6_newtonian" => Preset::Simulation(fig6(ring_kernel(4.0, KernelTerm::newtonian(-1.0)))),
        "fig6" | "fig6_power" => Preset::Simulation(fig6(ring_kernel(4.0, KernelTerm::power_law(1.5, -1.0)))),
        "fig6_power7" => Preset::Simulation(fig6(ring_kernel(7.0, KernelTerm::power_law(1.5, -1.0)))),
        "fig6_power_particle" => Preset::Simulation(SimulationConfig {
            method: Particle,
            energy: false,
            ..fig6(ring_kernel(4.0, KernelTerm::power_law(1.5, -1.0)))
        }),
        "fig6_large_delta" => Preset::Simulation(SimulationConfig {
            delta: Some(0.32),
            ..fig6(ring_kernel(4.0, KernelTerm::power_law(1.5, -1.0)))
        }),
        "fig7" | "fig7_morse1" => Preset::Simulation(fig7(morse(1.0), poly(2), true)),
        "fig7_morse2" => Preset::Simulation(fig7(morse(2.0), poly(2), true)),
        "fig7_morse2_star" => Preset::Simulation(fig7(morse(2.0), profile(Shape::StarPatch), false)),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves_and_validates() {
        for name in PRESET_NAMES {
            match preset(name).unwrap() {
                Preset::Study(s) => s.validate().unwrap(),
                Preset::Simulation(s) => s.validate().unwrap(),
            }
        }
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn documented_values() {
        let fig1 = preset("fig1").unwrap().study().unwrap();
        assert!(fig1.h_list.contains(&0.04));
        assert_eq!(fig1.q, 0.9);
        let large = preset("fig6_large_delta").unwrap().simulation().unwrap();
        assert!((large.delta() - 0.32).abs() < 1e-12);
        let fig7 = preset("fig7").unwrap().simulation().unwrap();
        assert_eq!((fig7.table.radius, fig7.table.n_points), (5.0, 200));
        let fig6 = preset("fig6_power7").unwrap().simulation().unwrap();
        assert_eq!((fig6.table.radius, fig6.table.n_points, fig6.h), (2.5, 100, 0.11));
    }

    #[test]
    fn presets_round_trip_through_json() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            let text = serde_json::to_string(&p).unwrap();
            let back: Preset = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), text, "{name}");
        }
    }
}
