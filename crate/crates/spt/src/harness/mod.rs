//! Ensemble runs, estimators, probe-strength optimization and sweeps.

pub mod device;
pub mod ensemble;
pub mod optimize;
pub mod seeds;
pub mod stats;
pub mod sweep;

pub use device::{Device, DeviceSpec, GeometrySpec};
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleRun};
pub use optimize::{optimize_probe_strength, ProbeOptimum};
pub use seeds::derive_seed;
pub use stats::{dissipation_breakdown, efficiency, impedance_matching_probability, EnsembleStats, Estimate};
pub use sweep::{
    read_results, run_point, run_sweep, write_result_row, write_results_header, PointFailure, PointResult, ResultRow,
    SweepReport, SweepSpec,
};
