//! The `blob-agg` command line tool.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    build_method, preset, run_simulation, run_study, write_convergence, write_simulation, ConvergenceReport, MethodKind,
    Preset, SimulationConfig, StudyConfig, PRESET_NAMES,
};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::mollifiers::{multi_indices, Builtin, MollifierSpec};
use crate::norms::NormKind;
use crate::regkernel::TableConfig;
use crate::solver::Method;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "BLOBAGG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "blob-agg", version, about = "Blob and particle methods for the aggregation equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write snapshots.csv and manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a convergence study and write report.json, convergence.csv and loglog.dat.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the configured norms (l1, l2, lp, linf, dual2); repeatable.
        #[arg(long = "norm")]
        norms: Vec<NormKind>,
        /// Measure errors only over labels in this ball.
        #[arg(long)]
        ball: Option<f64>,
    },
    /// Print the moments of a builtin mollifier and its certified order.
    Moments {
        #[arg(long)]
        mollifier: String,
    },
    /// Print the regularized kernel profiles as CSV.
    KernelTable {
        #[arg(long)]
        config: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show, emit or run a named configuration.
    Preset {
        #[arg(long, required_unless_present = "list")]
        name: Option<String>,
        /// Print the configuration as JSON.
        #[arg(long)]
        emit_config: bool,
        /// Run the preset and write its outputs here.
        #[arg(long, conflicts_with = "emit_config")]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
}

/// Input of `kernel-table`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTableConfig {
    pub kernel: Kernel,
    #[serde(default)]
    pub mollifier: Option<MollifierSpec>,
    pub delta: f64,
    #[serde(default)]
    pub table: TableConfig,
    /// Number of output intervals on `[0, r_max]`.
    #[serde(default = "default_rows")]
    pub rows: usize,
    /// Defaults to the table radius.
    #[serde(default)]
    pub r_max: Option<f64>,
}

fn default_rows() -> usize {
    100
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        // A global pool may already exist when embedded; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn print_report(out: &mut impl Write, report: &ConvergenceReport) -> Result<()> {
    write!(out, "{:>10} {:>10}", "h", "delta")?;
    for c in &report.columns {
        write!(out, " {c:>16}")?;
    }
    writeln!(out)?;
    for r in &report.rows {
        write!(out, "{:>10.5} {:>10}", r.h, r.delta.map_or("-".into(), |d| format!("{d:.5}")))?;
        for c in &report.columns {
            write!(out, " {:>16.6e}", r.errors.get(c).copied().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    for (c, s) in &report.slopes {
        writeln!(out, "slope {c}: {s:.3}")?;
    }
    if let Some(p) = report.predicted_rate {
        writeln!(out, "predicted rate m*q: {p:.3}")?;
    }
    Ok(())
}

fn simulate(cfg: &SimulationConfig, dir: &Path, out: &mut impl Write) -> Result<()> {
    let run = run_simulation(cfg)?;
    write_simulation(dir, cfg, &run)?;
    writeln!(
        out,
        "{} particles, {} snapshots to t = {}, {} steps ({} rejected) -> {}",
        run.initial.len(),
        run.snapshots.len(),
        cfg.t_end,
        run.stats.accepted,
        run.stats.rejected,
        dir.display()
    )?;
    Ok(())
}

fn converge(cfg: &StudyConfig, dir: &Path, out: &mut impl Write) -> Result<()> {
    let report = run_study(cfg)?;
    write_convergence(dir, &report)?;
    print_report(out, &report)
}

fn moments(name: &str, out: &mut impl Write) -> Result<()> {
    let spec = MollifierSpec::builtin(Builtin::from_name(name)?);
    writeln!(out, "{} (dimension {})", spec.name(), spec.dim())?;
    for total in 0..=spec.order() {
        for gamma in multi_indices(spec.dim(), total) {
            writeln!(out, "  moment {gamma:?}: {:.3e}", spec.moment(&gamma)?)?;
        }
    }
    writeln!(out, "order m = {}", spec.verify_order()?)?;
    Ok(())
}

fn kernel_table(cfg: &KernelTableConfig, out: &mut impl Write) -> Result<()> {
    let method = build_method(&cfg.kernel, cfg.mollifier.as_ref(), cfg.delta, &cfg.table, MethodKind::Blob)?;
    let Method::Blob(rk) = method else { unreachable!("blob method requested") };
    let r_max = cfg.r_max.unwrap_or(cfg.table.radius);
    if !(r_max > 0.0) || cfg.rows == 0 {
        return Err(Error::Config("r_max and rows must be positive".into()));
    }
    writeln!(out, "r,potential,gradient,laplacian")?;
    for k in 0..=cfg.rows {
        let r = r_max * k as f64 / cfg.rows as f64;
        let p = rk.profile(r)?;
        writeln!(out, "{r},{},{},{}", p.potential, p.gradient, p.laplacian)?;
    }
    Ok(())
}

fn run_preset(name: &str, emit: bool, dir: Option<&Path>, out: &mut impl Write) -> Result<()> {
    let p = preset(name)?;
    match (emit, dir, p) {
        (false, Some(dir), Preset::Study(s)) => converge(&s, dir, out),
        (false, Some(dir), Preset::Simulation(s)) => simulate(&s, dir, out),
        (_, _, p) => {
            writeln!(out, "{}", serde_json::to_string_pretty(&p)?)?;
            Ok(())
        }
    }
}

fn dispatch(cli: Cli, out: &mut impl Write) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out: dir } => simulate(&read_json(&config)?, &dir, out),
        Command::Converge { config, out: dir, norms, ball } => {
            let mut cfg: StudyConfig = read_json(&config)?;
            if !norms.is_empty() {
                cfg.norms = norms;
            }
            if ball.is_some() {
                cfg.ball = ball;
            }
            converge(&cfg, &dir, out)
        }
        Command::Moments { mollifier } => moments(&mollifier, out),
        Command::KernelTable { config, out: None } => kernel_table(&read_json(&config)?, out),
        Command::KernelTable { config, out: Some(path) } => {
            let mut buf = Vec::new();
            kernel_table(&read_json(&config)?, &mut buf)?;
            fs::write(path, buf)?;
            Ok(())
        }
        Command::Preset { list: true, .. } => {
            for n in PRESET_NAMES {
                writeln!(out, "{n}")?;
            }
            Ok(())
        }
        Command::Preset { name, emit_config, out: dir, .. } => {
            run_preset(&name.expect("required by clap"), emit_config, dir.as_deref(), out)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code: 0 on success, 2 for invalid input, 3 for
/// numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match dispatch(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
