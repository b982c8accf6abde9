//! Monte-Carlo wave-function engine for one input photon and one stored
//! control excitation.

pub mod evolve;
pub mod jumps;
pub mod model;
pub mod pulse;
pub mod spectral;
pub mod trajectory;

pub use evolve::{evolve_segment, FirstSegment, FreePropagator, SegmentConfig, SegmentEnd, SegmentResult, Stepper};
pub use jumps::{jump_probabilities, select_and_apply_jump, JumpEvent, JumpWeights};
pub use model::{build_cavity_model, build_freespace_model, JumpKind, NonHermitianModel};
pub use pulse::PulseSpec;
pub use spectral::{spectral_first_segment, spectral_weights, steady_response};
pub use trajectory::{
    run_trajectory, run_trajectory_observed, run_trajectory_shared, Outcome, SharedEvolution, TrajectoryOptions,
    TrajectoryRecord,
};
