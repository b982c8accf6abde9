//! Subcommand implementations. Every command prints a short human-readable
//! summary on the given writer and puts bulk data into files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rydberg_spt::harness::{
    run_point, run_sweep, write_result_row, write_results_header, Device, PointResult,
};
use rydberg_spt::scattering::{
    cavity_im_resonant, fs_im_resonant, omega_grid, write_spectrum_csv, Variant,
};
use serde_json::json;

use crate::config::{preset, RunConfig, PRESETS};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "spt",
    version,
    about = "Rydberg single-photon transistor simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state control scattering and the impedance-matching point.
    Analytic(RunArgs),
    /// Trajectory ensemble at the single operating point in `[device]`.
    Simulate(RunArgs),
    /// Trajectory ensembles over the `[sweep]` grid, resumable.
    Sweep(RunArgs),
    /// Sample and calibrate the atom cloud and write its positions.
    Geometry(RunArgs),
    /// Print the resolved configuration as TOML.
    ShowConfig(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration, see `spt presets`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Use the atom number of the figure captions instead of the desk scale.
    #[arg(long)]
    pub full_scale: bool,
    /// Output file for the command's main table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectories per operating point.
    #[arg(long)]
    pub traj: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, env = "SPT_WORKERS")]
    pub workers: Option<usize>,
    /// JSON-lines file receiving every jump of every trajectory.
    #[arg(long)]
    pub log_trajectories: Option<PathBuf>,
    /// Overwrite a results file written by a different configuration.
    #[arg(long)]
    pub force: bool,
}

impl RunArgs {
    /// Loads the configuration and applies the command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), None) => RunConfig::load(p)?,
            (None, Some(name)) => preset(name, self.full_scale)?,
            _ => return Err(CliError::NoSource),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.traj {
            cfg.n_traj = n;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(p) = &self.log_trajectories {
            cfg.output.trajectories = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run<W: Write>(cli: &Cli, w: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Analytic(a) => analytic(&a.resolve()?, a.out.as_deref(), w),
        Command::Simulate(a) => simulate(&a.resolve()?, a.out.as_deref(), w).map(|_| ()),
        Command::Sweep(a) => sweep(&a.resolve()?, a.out.as_deref(), a.force, w),
        Command::Geometry(a) => geometry(&a.resolve()?, a.out.as_deref(), w),
        Command::ShowConfig(a) => Ok(write!(w, "{}", a.resolve()?.to_toml()?)?),
        Command::Presets => {
            for p in PRESETS {
                writeln!(w, "{p}")?;
            }
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn analytic<W: Write>(cfg: &RunConfig, out: Option<&Path>, w: &mut W) -> Result<(), CliError> {
    let d = &cfg.device;
    let im = d.im_conditions();
    let ctl = d.control(im.delta_small_star, im.gamma_r_star);
    writeln!(w, "variant = {}", d.variant)?;
    writeln!(w, "coupling = {}", d.coupling)?;
    writeln!(w, "gamma_r_star = {:.6e}", im.gamma_r_star)?;
    writeln!(w, "delta_small_star = {:.6e}", im.delta_small_star)?;
    match d.variant {
        Variant::Cavity => {
            let r = cavity_im_resonant(d.coupling);
            writeln!(w, "resonant_gamma_rc = {:.6}", r.gamma_rc)?;
            writeln!(w, "resonant_reflectance = {:.6e}", r.outgoing)?;
        }
        Variant::FreeSpace => {
            let r = fs_im_resonant(d.coupling, 1.0, d.delta_big);
            writeln!(w, "resonant_gamma_rc = {:.6}", r.gamma_rc)?;
            writeln!(w, "resonant_gamma_rc_prefactor = {:.6}", r.prefactor)?;
            writeln!(w, "resonant_transmittance = {:.6e}", r.transmittance)?;
        }
    }
    if im.warning {
        writeln!(
            w,
            "warning: detuning too small for the large-detuning conditions"
        )?;
    }
    if let Some(path) = out.or(cfg.output.spectrum.as_deref()) {
        let a = &cfg.analytic;
        let grid = omega_grid(a.omega_min, a.omega_max, a.points);
        let mut f = create(path)?;
        write_spectrum_csv(&mut f, &grid, &ctl)?;
        f.flush()?;
        writeln!(w, "spectrum written to {}", path.display())?;
    }
    Ok(())
}

fn header(cfg: &RunConfig) -> Result<String, CliError> {
    Ok(format!("config_sha256={}", cfg.results_hash()?))
}

/// `cfg` reduced to the single point in `[device]`.
fn single_point(cfg: &RunConfig) -> RunConfig {
    let mut c = cfg.clone();
    c.sweep = None;
    c
}

pub fn simulate<W: Write>(
    cfg: &RunConfig,
    out: Option<&Path>,
    w: &mut W,
) -> Result<PointResult, CliError> {
    let point = single_point(cfg);
    let spec = point.sweep_spec();
    let seed = spec.point_seed(0);
    let p = run_point(
        &spec.base,
        &spec.pulse,
        &spec.opts,
        spec.n_traj,
        seed,
        spec.workers,
        None,
    )?;
    let s = &p.run.stats;
    writeln!(w, "n_traj = {}", s.n_traj)?;
    writeln!(w, "alpha_in_sq = {:.6}", p.alpha_in_sq)?;
    writeln!(w, "delta_small = {:.6}", p.delta_small)?;
    writeln!(w, "blockade_radius = {:.6}", p.device.blockade_radius)?;
    writeln!(w, "p_im = {:.6} +- {:.6}", s.p_im.value, s.p_im.stderr)?;
    writeln!(
        w,
        "p_im_first_jump = {:.6} +- {:.6}",
        s.p_im_first_jump.value, s.p_im_first_jump.stderr
    )?;
    writeln!(w, "eta = {:.6} +- {:.6}", s.eta.value, s.eta.stderr)?;
    writeln!(
        w,
        "fail_spont = {:.4}  fail_leak = {:.4}  timeout = {:.4}",
        p.breakdown.spont_frac, p.breakdown.leak_frac, p.breakdown.timeout_frac
    )?;
    if let Some(path) = out.or(cfg.output.results.as_deref()) {
        let mut f = create(path)?;
        write_results_header(&mut f, &header(&point)?)?;
        write_result_row(&mut f, &p.row)?;
        f.flush()?;
    }
    if let Some(path) = &cfg.output.trajectories {
        let mut f = create(path)?;
        for (i, r) in p.run.records.iter().enumerate() {
            for e in &r.events {
                let line = json!({
                    "traj": i,
                    "seed": r.seed,
                    "t": e.t,
                    "channel": e.channel,
                    "atom": e.atom,
                    "norm_before": e.norm_before,
                });
                writeln!(f, "{line}")?;
            }
            writeln!(
                f,
                "{}",
                json!({ "traj": i, "seed": r.seed, "outcome": r.outcome })
            )?;
        }
        f.flush()?;
    }
    Ok(p)
}

pub fn sweep<W: Write>(
    cfg: &RunConfig,
    out: Option<&Path>,
    force: bool,
    w: &mut W,
) -> Result<(), CliError> {
    let spec = cfg.sweep_spec();
    let points = spec.points();
    let head = header(cfg)?;
    let path = out.or(cfg.output.results.as_deref());
    let report = run_sweep(&spec, path, &head, force, |i, res| {
        let p = &points[i];
        // Progress lines are best effort.
        let _ = match res {
            Ok(r) => writeln!(
                w,
                "[{}/{}] coupling={} blockade={} alpha={:.4} p_im={:.4} eta={:.3}",
                i + 1,
                points.len(),
                p.coupling,
                p.blockade_target,
                r.alpha_in_sq,
                r.row.p_im,
                r.row.eta
            ),
            Err(e) => writeln!(
                w,
                "[{}/{}] coupling={} blockade={} failed: {e}",
                i + 1,
                points.len(),
                p.coupling,
                p.blockade_target
            ),
        };
    })?;
    if report.skipped > 0 {
        writeln!(
            w,
            "{} points resumed from {}",
            report.skipped,
            path.map(|p| p.display().to_string()).unwrap_or_default()
        )?;
    }
    if path.is_none() {
        write_results_header(&mut *w, &head)?;
        for r in &report.rows {
            write_result_row(&mut *w, r)?;
        }
    }
    if !report.failures.is_empty() {
        return Err(CliError::PointsFailed {
            failed: report.failures.len(),
            total: points.len(),
        });
    }
    Ok(())
}

pub fn geometry<W: Write>(cfg: &RunConfig, out: Option<&Path>, w: &mut W) -> Result<(), CliError> {
    let dev = Device::build(&cfg.device)?;
    writeln!(w, "n_atoms = {}", dev.geometry.n())?;
    writeln!(w, "c6 = {:.6e}", dev.geometry.c6)?;
    writeln!(w, "blockade_radius = {:.6}", dev.blockade_radius)?;
    match out.or(cfg.output.geometry.as_deref()) {
        Some(path) => {
            let mut f = create(path)?;
            dev.geometry.write_table(&mut f)?;
            f.flush()?;
        }
        None => dev.geometry.write_table(&mut *w)?,
    }
    Ok(())
}
