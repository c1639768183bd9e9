//! File formats: snapshots and tables as CSV, run metadata as JSON, and a
//! whitespace-separated log-log table for gnuplot.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{config_hash, ConvergenceReport, SimulationConfig, SimulationRun};
use crate::error::{Error, Result};
use crate::solver::ParticleState;

const AXES: [&str; 3] = ["x", "y", "z"];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

/// One row per particle per snapshot: `t, id, x.., rho, weight`. Floats use
/// the shortest round-trip representation, so output is reproducible.
pub fn write_snapshots_csv<W: Write>(out: W, states: &[ParticleState]) -> Result<()> {
    let dim = states.first().map_or(1, |s| s.dim);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t", "id"];
    header.extend(&AXES[..dim.min(3)]);
    header.extend(["rho", "weight"]);
    w.write_record(&header).map_err(csv_error)?;
    for s in states {
        for i in 0..s.len() {
            let mut rec = vec![s.time.to_string(), i.to_string()];
            rec.extend(s.position(i).iter().map(f64::to_string));
            rec.push(s.densities[i].to_string());
            rec.push(s.weights[i].to_string());
            w.write_record(&rec).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_energy_csv<W: Write>(out: W, times: &[f64], energies: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "energy"]).map_err(csv_error)?;
    for (t, e) in times.iter().zip(energies) {
        w.write_record([t.to_string(), e.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub version: &'static str,
    pub config_hash: String,
    pub config: &'a C,
    pub dim: usize,
    pub particles: usize,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
}

/// Writes `manifest.json`, `snapshots.csv` and, with energy tracking,
/// `energy.csv` into `dir`.
pub fn write_simulation(dir: &Path, cfg: &SimulationConfig, run: &SimulationRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(cfg)?,
        config: cfg,
        dim: run.initial.dim,
        particles: run.initial.len(),
        h: run.initial.h,
        delta: run.delta,
        times: run.snapshots.iter().map(|s| s.time).collect(),
        energies: run.energies.clone(),
        steps_accepted: run.stats.accepted,
        steps_rejected: run.stats.rejected,
        rhs_evaluations: run.stats.evaluations,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let mut buf = Vec::new();
    write_snapshots_csv(&mut buf, &run.snapshots)?;
    fs::write(dir.join("snapshots.csv"), buf)?;
    if let Some(e) = &run.energies {
        let times: Vec<f64> = run.snapshots.iter().map(|s| s.time).collect();
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &times, e)?;
        fs::write(dir.join("energy.csv"), buf)?;
    }
    Ok(())
}

/// Writes `report.json`, `convergence.csv` and `loglog.dat` into `dir`.
pub fn write_convergence(dir: &Path, report: &ConvergenceReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["h".to_string(), "delta".to_string(), "particles".to_string()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    for r in &report.rows {
        let mut rec = vec![
            r.h.to_string(),
            r.delta.map_or(String::new(), |d| d.to_string()),
            r.particles.to_string(),
        ];
        rec.extend(report.columns.iter().map(|c| r.errors.get(c).map_or(String::new(), f64::to_string)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(dir.join("convergence.csv"), bytes)?;

    let mut dat = format!("# log10(h) {}\n", report.columns.iter().map(|c| format!("log10({c})")).collect::<Vec<_>>().join(" "));
    for r in &report.rows {
        dat.push_str(&format!("{:.10}", r.h.log10()));
        for c in &report.columns {
            match r.errors.get(c) {
                Some(e) if *e > 0.0 => dat.push_str(&format!(" {:.10}", e.log10())),
                _ => dat.push_str(" NaN"),
            }
        }
        dat.push('\n');
    }
    fs::write(dir.join("loglog.dat"), dat)?;
    Ok(())
}
