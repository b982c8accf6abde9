//! Parallel trajectory ensembles with a shared first segment.

use rayon::prelude::*;

use super::seeds::derive_seed;
use super::stats::EnsembleStats;
use crate::engine::{run_trajectory_shared, NonHermitianModel, PulseSpec, SharedEvolution, TrajectoryOptions, TrajectoryRecord};
use crate::error::{EngineError, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    pub opts: TrajectoryOptions,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub stats: EnsembleStats,
    pub records: Vec<TrajectoryRecord>,
}

pub fn trajectory_seeds(base_seed: u64, n_traj: usize) -> Vec<u64> {
    (0..n_traj as u64).map(|i| derive_seed(base_seed, i)).collect()
}

/// Runs `n_traj` trajectories. Records come back in index order and all
/// aggregation is sequential, so results do not depend on `workers`.
pub fn run_ensemble(
    model: &NonHermitianModel,
    pulse: &PulseSpec,
    cfg: &EnsembleConfig,
) -> Result<EnsembleRun, HarnessError> {
    if cfg.n_traj == 0 {
        return Err(HarnessError::InvalidArgument("n_traj must be >= 1".into()));
    }
    let seeds = trajectory_seeds(cfg.base_seed, cfg.n_traj);
    let shared = SharedEvolution::prepare(model, pulse, &cfg.opts, &seeds)?;
    let job = || -> Result<Vec<TrajectoryRecord>, EngineError> {
        seeds.par_iter().map(|&s| run_trajectory_shared(model, pulse, s, &cfg.opts, &shared)).collect()
    };
    let records = if cfg.workers == 0 {
        job()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| HarnessError::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(job)?
    };
    let stats = EnsembleStats::from_records(&records, cfg.opts.success_threshold)?;
    Ok(EnsembleRun { stats, records })
}
