//! Single quantum trajectories of the one-photon sector.

use std::io::Write;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve_segment, FirstSegment, FreePropagator, SegmentConfig, SegmentEnd, SegmentResult, Stepper};
use super::jumps::{select_and_apply_jump, JumpEvent, JumpWeights};
use super::model::{JumpKind, NonHermitianModel};
use super::pulse::PulseSpec;
use crate::error::EngineError;

/// Extra time after the input window before an undecided trajectory is
/// declared timed out.
pub const DEFAULT_TIMEOUT_TAIL: f64 = 3000.0;
pub const DEFAULT_SUCCESS_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub dt: f64,
    pub timeout_tail: f64,
    /// Signal-dephasing jumps needed for a detected control photon.
    pub success_threshold: u32,
    /// End after the first jump, whatever its channel.
    pub stop_after_first_jump: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            dt: 1e-3,
            timeout_tail: DEFAULT_TIMEOUT_TAIL,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            stop_after_first_jump: false,
        }
    }
}

impl TrajectoryOptions {
    pub fn t_timeout(&self, pulse: &PulseSpec) -> f64 {
        pulse.t_end() + self.timeout_tail
    }

    pub fn first_segment_config(&self, pulse: &PulseSpec) -> SegmentConfig {
        SegmentConfig { dt: self.dt, t_timeout: self.t_timeout(pulse), input_on: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    LostSpontaneous,
    LostCavityOrTransmit,
    TimedOut,
    /// Ended by `stop_after_first_jump` on a dephasing jump.
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub events: Vec<JumpEvent>,
    pub outcome: Outcome,
    pub n_signal_jumps: u32,
    /// `∫ p_i dt` over the evolution before the first jump.
    pub first_segment: JumpWeights,
}

impl TrajectoryRecord {
    pub fn first_jump(&self) -> Option<JumpKind> {
        self.events.first().map(|e| e.channel)
    }

    /// One JSON object per jump.
    pub fn write_event_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Trajectory RNG; the first draw is the first-segment threshold.
pub fn trajectory_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw_threshold<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// The first-segment threshold a trajectory with this seed will draw.
pub fn first_threshold(seed: u64) -> f64 {
    draw_threshold(&mut trajectory_rng(seed))
}

pub fn run_trajectory(
    model: &NonHermitianModel,
    pulse: &PulseSpec,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord, EngineError> {
    run_inner(model, pulse, seed, opts, &SharedEvolution::default(), None)
}

/// Precomputed pieces reused by every trajectory of one model.
#[derive(Debug, Clone, Default)]
pub struct SharedEvolution {
    /// The common evolution before the first jump.
    pub first: Option<FirstSegment>,
    /// Fast undriven propagation after the first jump.
    pub free: Option<FreePropagator>,
}

/// Steps between stored states of the shared first segment.
pub const CHECKPOINT_EVERY: usize = 2000;

impl SharedEvolution {
    /// Builds the first segment down to the smallest threshold any of
    /// `seeds` will draw, and the block propagator when the model is small
    /// enough.
    pub fn prepare(
        model: &NonHermitianModel,
        pulse: &PulseSpec,
        opts: &TrajectoryOptions,
        seeds: &[u64],
    ) -> Result<Self, EngineError> {
        let min_r = seeds.iter().map(|&s| first_threshold(s)).fold(f64::INFINITY, f64::min);
        let first = if seeds.is_empty() {
            None
        } else {
            Some(FirstSegment::build(model, pulse, pulse.t_0, opts.first_segment_config(pulse), min_r, CHECKPOINT_EVERY)?)
        };
        let free = if model.dim <= FreePropagator::MAX_DIM {
            Some(FreePropagator::build(model, opts.dt, FreePropagator::DEFAULT_LEVELS)?)
        } else {
            None
        };
        Ok(SharedEvolution { first, free })
    }
}

/// As [`run_trajectory`], using precomputed evolution. The first segment
/// gives identical results; the block propagator agrees up to rounding.
pub fn run_trajectory_shared(
    model: &NonHermitianModel,
    pulse: &PulseSpec,
    seed: u64,
    opts: &TrajectoryOptions,
    shared: &SharedEvolution,
) -> Result<TrajectoryRecord, EngineError> {
    run_inner(model, pulse, seed, opts, shared, None)
}

/// Post-jump observer: the event and the state right after it.
pub type JumpObserver<'a> = &'a mut dyn FnMut(&JumpEvent, &[Complex64]);

/// As [`run_trajectory_shared`], calling `observer` after every jump.
pub fn run_trajectory_observed(
    model: &NonHermitianModel,
    pulse: &PulseSpec,
    seed: u64,
    opts: &TrajectoryOptions,
    shared: &SharedEvolution,
    observer: JumpObserver<'_>,
) -> Result<TrajectoryRecord, EngineError> {
    run_inner(model, pulse, seed, opts, shared, Some(observer))
}

fn run_inner(
    model: &NonHermitianModel,
    pulse: &PulseSpec,
    seed: u64,
    opts: &TrajectoryOptions,
    shared: &SharedEvolution,
    mut observer: Option<JumpObserver<'_>>,
) -> Result<TrajectoryRecord, EngineError> {
    if !(opts.dt > 0.0) || !(opts.timeout_tail >= 0.0) {
        return Err(EngineError::InvalidArgument("dt must be positive and the timeout tail non-negative".into()));
    }
    let mut rng = trajectory_rng(seed);
    let mut stepper = Stepper::new(model.dim);
    let mut psi = vec![Complex64::new(0.0, 0.0); model.dim];
    let cfg = opts.first_segment_config(pulse);

    let r = draw_threshold(&mut rng);
    let first: SegmentResult = match &shared.first {
        Some(c) => c.query(model, pulse, r, &mut psi, &mut stepper)?,
        None => evolve_segment(model, &mut psi, pulse, pulse.t_0, r, &cfg, &mut stepper)?,
    };
    let mut rec = TrajectoryRecord {
        seed,
        events: Vec::new(),
        outcome: Outcome::TimedOut,
        n_signal_jumps: 0,
        first_segment: first.integrals,
    };

    let mut seg = first;
    let mut seg_cfg = cfg;
    let mut r_current = r;
    loop {
        let (t, c_in) = match seg.end {
            SegmentEnd::Timeout { .. } => {
                rec.outcome = Outcome::TimedOut;
                return Ok(rec);
            }
            SegmentEnd::Jump { t, c_in } => (t, c_in),
        };
        let ev = select_and_apply_jump(model, &mut psi, t, c_in, r_current, &mut rng)?;
        rec.events.push(ev);
        if let Some(obs) = observer.as_mut() {
            obs(&ev, &psi);
        }
        match ev.channel {
            JumpKind::DecayCavityOrTransmit => {
                rec.outcome = Outcome::LostCavityOrTransmit;
                return Ok(rec);
            }
            JumpKind::DecaySpontaneousControl => {
                rec.outcome = Outcome::LostSpontaneous;
                return Ok(rec);
            }
            JumpKind::DephaseSignal => rec.n_signal_jumps += 1,
            JumpKind::DephaseLocalize => {}
        }
        if rec.n_signal_jumps >= opts.success_threshold {
            rec.outcome = Outcome::Success;
            return Ok(rec);
        }
        if opts.stop_after_first_jump {
            rec.outcome = Outcome::Stopped;
            return Ok(rec);
        }
        // the photon is now stored: no drive, unit norm
        seg_cfg.input_on = false;
        r_current = draw_threshold(&mut rng);
        seg = match &shared.free {
            Some(f) if f.dt() == opts.dt => f.evolve(&mut psi, t, r_current, seg_cfg.t_timeout)?,
            _ => evolve_segment(model, &mut psi, pulse, t, r_current, &seg_cfg, &mut stepper)?,
        };
    }
}
