//! Grid sweeps over coupling and blockade with a checkpointed results CSV.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::device::{Device, DeviceSpec};
use super::ensemble::{run_ensemble, EnsembleConfig, EnsembleRun};
use super::optimize::{optimize_probe_strength, ProbeOptimum};
use super::seeds::derive_seed;
use super::stats::{dissipation_breakdown, DissipationBreakdown, EnsembleStats};
use crate::engine::{PulseSpec, TrajectoryOptions};
use crate::error::HarnessError;
use crate::scattering::Variant;

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub variant: Variant,
    pub coupling: f64,
    pub blockade_target_re: f64,
    pub alpha_in_sq: f64,
    pub n_traj: usize,
    pub p_im: f64,
    pub p_im_err: f64,
    pub eta: f64,
    pub eta_err: f64,
    pub fail_spont_frac: f64,
    pub fail_leak_frac: f64,
    pub timeout_frac: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn new(spec: &DeviceSpec, alpha_in_sq: f64, stats: &EnsembleStats, dis: &DissipationBreakdown, seed: u64) -> Self {
        ResultRow {
            variant: spec.variant,
            coupling: spec.coupling,
            blockade_target_re: spec.blockade_target,
            alpha_in_sq,
            n_traj: stats.n_traj,
            p_im: stats.p_im.value,
            p_im_err: stats.p_im.stderr,
            eta: stats.eta.value,
            eta_err: stats.eta.stderr,
            fail_spont_frac: dis.spont_frac,
            fail_leak_frac: dis.leak_frac,
            timeout_frac: dis.timeout_frac,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Fixed parameters; `coupling` and `blockade_target` are overridden by
    /// the grids.
    pub base: DeviceSpec,
    pub couplings: Vec<f64>,
    pub blockade_targets: Vec<f64>,
    /// Probe strengths swept as a third axis instead of being optimized.
    pub alpha_values: Option<Vec<f64>>,
    /// Probe-strength grid for the optimization; default log-spaced.
    pub alpha_grid: Option<Vec<f64>>,
    pub pulse: PulseSpec,
    pub opts: TrajectoryOptions,
    pub n_traj: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.couplings.is_empty()
            || self.blockade_targets.is_empty()
            || self.alpha_values.as_ref().is_some_and(|a| a.is_empty())
        {
            return Err(HarnessError::InvalidArgument("sweep grids must be non-empty".into()));
        }
        if self.n_traj == 0 {
            return Err(HarnessError::InvalidArgument("n_traj must be >= 1".into()));
        }
        Ok(())
    }

    /// Grid points in output order: coupling, then blockade, then probe
    /// strength.
    pub fn points(&self) -> Vec<DeviceSpec> {
        let alphas: Vec<Option<f64>> = match &self.alpha_values {
            Some(v) => v.iter().map(|&a| Some(a)).collect(),
            None => vec![self.base.alpha_in_sq],
        };
        let mut out = Vec::new();
        for &c in &self.couplings {
            for &b in &self.blockade_targets {
                for &a in &alphas {
                    let mut s = self.base.clone();
                    s.coupling = c;
                    s.blockade_target = b;
                    s.alpha_in_sq = a;
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn point_seed(&self, index: usize) -> u64 {
        derive_seed(self.base_seed, index as u64)
    }
}

/// Everything computed for one operating point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub device: Device,
    pub optimum: Option<ProbeOptimum>,
    pub alpha_in_sq: f64,
    pub delta_small: f64,
    pub run: EnsembleRun,
    pub breakdown: DissipationBreakdown,
    pub row: ResultRow,
}

/// Builds the device, fixes or optimizes `|α|²` and `δ`, and runs the
/// ensemble.
pub fn run_point(
    spec: &DeviceSpec,
    pulse: &PulseSpec,
    opts: &TrajectoryOptions,
    n_traj: usize,
    seed: u64,
    workers: usize,
    alpha_grid: Option<&[f64]>,
) -> Result<PointResult, HarnessError> {
    let device = Device::build(spec)?;
    let (optimum, alpha, delta) = match spec.alpha_in_sq {
        Some(a) => {
            let d = match spec.delta_small {
                Some(d) => d,
                None => super::optimize::optimize_delta(&device, a, pulse.sigma).0,
            };
            (None, a, d)
        }
        None => {
            let o = optimize_probe_strength(&device, pulse.sigma, alpha_grid)?;
            let (a, d) = (o.alpha_in_sq, o.delta_small);
            (Some(o), a, d)
        }
    };
    let model = device.model(alpha, delta);
    let cfg = EnsembleConfig { n_traj, base_seed: seed, opts: *opts, workers };
    let run = run_ensemble(&model, pulse, &cfg)?;
    let breakdown = dissipation_breakdown(&run.records, &model);
    let row = ResultRow::new(spec, alpha, &run.stats, &breakdown, seed);
    Ok(PointResult { device, optimum, alpha_in_sq: alpha, delta_small: delta, run, breakdown, row })
}

#[derive(Debug, Clone)]
pub struct PointFailure {
    pub index: usize,
    pub coupling: f64,
    pub blockade_target: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    /// Rows in grid order, including those resumed from the checkpoint.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<PointFailure>,
    pub skipped: usize,
}

/// Writes the header comment and column names.
pub fn write_results_header<W: Write>(mut w: W, header: &str) -> Result<(), HarnessError> {
    writeln!(w, "# {header}")?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record([
        "variant",
        "coupling",
        "blockade_target_re",
        "alpha_in_sq",
        "n_traj",
        "p_im",
        "p_im_err",
        "eta",
        "eta_err",
        "fail_spont_frac",
        "fail_leak_frac",
        "timeout_frac",
        "seed",
    ])?;
    cw.flush()?;
    Ok(())
}

pub fn write_result_row<W: Write>(w: W, row: &ResultRow) -> Result<(), HarnessError> {
    let mut cw = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    cw.serialize(row)?;
    cw.flush()?;
    Ok(())
}

/// Reads a results file; returns `None` if its header comment differs.
pub fn read_results(path: &Path, header: &str) -> Result<Option<Vec<ResultRow>>, HarnessError> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    if first.trim_end() != format!("# {header}") {
        return Ok(None);
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = rd.deserialize().collect::<Result<Vec<ResultRow>, _>>()?;
    Ok(Some(rows))
}

/// Runs every grid point in order, appending each row to `out` as soon as it
/// is done. Points already present in a file with the same `header` are
/// skipped unless `force` is set; a file from another configuration is an
/// error unless `force` is set. Failed points are reported and skipped.
pub fn run_sweep(
    spec: &SweepSpec,
    out: Option<&Path>,
    header: &str,
    force: bool,
    mut on_point: impl FnMut(usize, &Result<PointResult, HarnessError>),
) -> Result<SweepReport, HarnessError> {
    spec.validate()?;
    let mut done: Vec<ResultRow> = Vec::new();
    if let Some(path) = out {
        let existing = if path.exists() && !force { Some(read_results(path, header)?) } else { None };
        match existing {
            Some(Some(rows)) => done = rows,
            Some(None) => {
                return Err(HarnessError::InvalidArgument(format!(
                    "{} was written by a different configuration; use force to overwrite",
                    path.display()
                )))
            }
            None => write_results_header(File::create(path)?, header)?,
        }
    }
    let mut report = SweepReport::default();
    for (index, point) in spec.points().into_iter().enumerate() {
        let same = |r: &ResultRow| {
            r.coupling == point.coupling
                && r.blockade_target_re == point.blockade_target
                && point.alpha_in_sq.is_none_or(|a| a == r.alpha_in_sq)
        };
        if let Some(row) = done.iter().find(|r| same(r)) {
            report.rows.push(row.clone());
            report.skipped += 1;
            continue;
        }
        let res = run_point(
            &point,
            &spec.pulse,
            &spec.opts,
            spec.n_traj,
            spec.point_seed(index),
            spec.workers,
            spec.alpha_grid.as_deref(),
        );
        on_point(index, &res);
        match res {
            Ok(p) => {
                if let Some(path) = out {
                    write_result_row(OpenOptions::new().append(true).open(path)?, &p.row)?;
                }
                report.rows.push(p.row);
            }
            Err(e) => report.failures.push(PointFailure {
                index,
                coupling: point.coupling,
                blockade_target: point.blockade_target,
                error: e.to_string(),
            }),
        }
    }
    Ok(report)
}
