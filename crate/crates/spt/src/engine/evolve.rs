//! Fixed-step RK4 propagation of the unnormalized state with norm-threshold
//! jump detection.

use ndarray::Array2;
use num_complex::Complex64;

use super::jumps::{jump_probabilities, JumpWeights};
use super::model::NonHermitianModel;
use super::pulse::PulseSpec;
use crate::error::EngineError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Settings shared by every segment of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub dt: f64,
    /// Absolute time at which a segment that never crosses its threshold is
    /// declared timed out.
    pub t_timeout: f64,
    /// Whether the input pulse still drives the system.
    pub input_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentEnd {
    /// The total norm crossed the threshold; `t` is linearly interpolated
    /// within the bracketing step and `c_in` is the drive at the step end,
    /// where the returned state lives.
    Jump { t: f64, c_in: Complex64 },
    Timeout { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentResult {
    pub end: SegmentEnd,
    /// Trapezoidal `∫ p_i dt` from the segment start to the end time.
    pub integrals: JumpWeights,
    pub steps: usize,
}

/// Reusable RK4 workspace.
#[derive(Debug, Clone)]
pub struct Stepper {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    pub fn new(dim: usize) -> Self {
        Stepper {
            k1: vec![ZERO; dim],
            k2: vec![ZERO; dim],
            k3: vec![ZERO; dim],
            k4: vec![ZERO; dim],
            tmp: vec![ZERO; dim],
        }
    }

    /// One classic RK4 step of `dψ/dt = −iHψ + source·c_in(t)`.
    pub fn step(&mut self, model: &NonHermitianModel, psi: &mut [Complex64], t: f64, dt: f64, drive: Option<&PulseSpec>) {
        let cin = |s: f64| drive.map_or(ZERO, |p| p.pulse_amplitude(s));
        let h = 0.5 * dt;
        model.derivative(psi, cin(t), &mut self.k1);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k1) {
            *x = p + k * h;
        }
        model.derivative(&self.tmp, cin(t + h), &mut self.k2);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k2) {
            *x = p + k * h;
        }
        model.derivative(&self.tmp, cin(t + h), &mut self.k3);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k3) {
            *x = p + k * dt;
        }
        model.derivative(&self.tmp, cin(t + dt), &mut self.k4);
        let w = dt / 6.0;
        for i in 0..psi.len() {
            psi[i] += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * w;
        }
    }
}

pub fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

/// `⟨ψ|ψ⟩` plus the photon number still to arrive while the input is on.
pub fn total_norm(psi: &[Complex64], pulse: &PulseSpec, t: f64, input_on: bool) -> f64 {
    let tail = if input_on { pulse.remaining(t) } else { 0.0 };
    norm_sqr(psi) + tail
}

/// Bookkeeping shared by the direct integrator and the cached first segment,
/// so both produce bit-identical results.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepRecord {
    pub total: f64,
    pub cum: [f64; 4],
    pub weights: [f64; 4],
}

pub(crate) fn record_after_step(
    model: &NonHermitianModel,
    psi: &[Complex64],
    pulse: &PulseSpec,
    t: f64,
    input_on: bool,
    dt: f64,
    prev: &StepRecord,
) -> StepRecord {
    let c_in = if input_on { pulse.pulse_amplitude(t) } else { ZERO };
    let w = jump_probabilities(model, psi, c_in).0;
    let mut cum = prev.cum;
    for i in 0..4 {
        cum[i] += 0.5 * dt * (prev.weights[i] + w[i]);
    }
    StepRecord { total: total_norm(psi, pulse, t, input_on), cum, weights: w }
}

pub(crate) fn initial_record(model: &NonHermitianModel, psi: &[Complex64], pulse: &PulseSpec, t: f64, input_on: bool) -> StepRecord {
    let c_in = if input_on { pulse.pulse_amplitude(t) } else { ZERO };
    StepRecord {
        total: total_norm(psi, pulse, t, input_on),
        cum: [0.0; 4],
        weights: jump_probabilities(model, psi, c_in).0,
    }
}

pub(crate) fn check_growth(prev: f64, next: f64, dt: f64, t: f64) -> Result<(), EngineError> {
    let growth = next - prev;
    if growth > dt * dt {
        return Err(EngineError::Instability { t, growth });
    }
    Ok(())
}

pub(crate) fn crossing(
    t_prev: f64,
    dt: f64,
    prev: &StepRecord,
    next: &StepRecord,
    r: f64,
    input_on: bool,
    pulse: &PulseSpec,
) -> SegmentResult {
    let span = prev.total - next.total;
    let f = if span > 0.0 { ((prev.total - r) / span).clamp(0.0, 1.0) } else { 1.0 };
    let mut integrals = [0.0; 4];
    for i in 0..4 {
        integrals[i] = prev.cum[i] + f * (next.cum[i] - prev.cum[i]);
    }
    let t_state = t_prev + dt;
    let c_in = if input_on { pulse.pulse_amplitude(t_state) } else { ZERO };
    SegmentResult {
        end: SegmentEnd::Jump { t: t_prev + f * dt, c_in },
        integrals: JumpWeights(integrals),
        steps: 0,
    }
}

/// Integrates from `t_start` until the total norm drops below `threshold_r`
/// or the timeout is reached. `psi` is left at the end of the last step.
pub fn evolve_segment(
    model: &NonHermitianModel,
    psi: &mut [Complex64],
    pulse: &PulseSpec,
    t_start: f64,
    threshold_r: f64,
    cfg: &SegmentConfig,
    stepper: &mut Stepper,
) -> Result<SegmentResult, EngineError> {
    if psi.len() != model.dim {
        return Err(EngineError::DimensionMismatch { expected: model.dim, got: psi.len() });
    }
    if !(cfg.dt > 0.0) {
        return Err(EngineError::InvalidArgument(format!("dt must be > 0, got {}", cfg.dt)));
    }
    let drive = if cfg.input_on { Some(pulse) } else { None };
    let mut prev = initial_record(model, psi, pulse, t_start, cfg.input_on);
    if !(threshold_r > 0.0 && threshold_r <= 1.0) {
        return Err(EngineError::InvalidArgument(format!("threshold {threshold_r} must lie in (0, 1]")));
    }
    let mut n: usize = 0;
    loop {
        let t = t_start + n as f64 * cfg.dt;
        stepper.step(model, psi, t, cfg.dt, drive);
        n += 1;
        let t_next = t_start + n as f64 * cfg.dt;
        let next = record_after_step(model, psi, pulse, t_next, cfg.input_on, cfg.dt, &prev);
        check_growth(prev.total, next.total, cfg.dt, t_next)?;
        if next.total < threshold_r {
            let mut res = crossing(t, cfg.dt, &prev, &next, threshold_r, cfg.input_on, pulse);
            res.steps = n;
            return Ok(res);
        }
        if t_next >= cfg.t_timeout {
            return Ok(SegmentResult {
                end: SegmentEnd::Timeout { t: t_next },
                integrals: JumpWeights(next.cum),
                steps: n,
            });
        }
        prev = next;
    }
}

/// The deterministic pre-jump evolution from the initial empty state,
/// stored once and shared by every trajectory of an ensemble.
///
/// Totals and channel integrals are kept for every step; states are kept
/// every `every` steps and the few steps up to a crossing are re-integrated.
#[derive(Debug, Clone)]
pub struct FirstSegment {
    t_start: f64,
    cfg: SegmentConfig,
    every: usize,
    records: Vec<StepRecord>,
    prefix_min: Vec<f64>,
    checkpoints: Vec<Vec<Complex64>>,
    last_state: Vec<Complex64>,
    timed_out: bool,
}

impl FirstSegment {
    /// Integrates until the total norm falls below `min_r` or the timeout.
    pub fn build(
        model: &NonHermitianModel,
        pulse: &PulseSpec,
        t_start: f64,
        cfg: SegmentConfig,
        min_r: f64,
        every: usize,
    ) -> Result<Self, EngineError> {
        if !(cfg.dt > 0.0) || every == 0 {
            return Err(EngineError::InvalidArgument("dt and checkpoint interval must be positive".into()));
        }
        let drive = if cfg.input_on { Some(pulse) } else { None };
        let mut psi = vec![ZERO; model.dim];
        let mut stepper = Stepper::new(model.dim);
        let first = initial_record(model, &psi, pulse, t_start, cfg.input_on);
        let mut records = vec![first];
        let mut prefix_min = vec![first.total];
        let mut checkpoints = vec![psi.clone()];
        let mut n = 0usize;
        let mut timed_out = false;
        loop {
            let t = t_start + n as f64 * cfg.dt;
            stepper.step(model, &mut psi, t, cfg.dt, drive);
            n += 1;
            let t_next = t_start + n as f64 * cfg.dt;
            let prev = records[n - 1];
            let next = record_after_step(model, &psi, pulse, t_next, cfg.input_on, cfg.dt, &prev);
            check_growth(prev.total, next.total, cfg.dt, t_next)?;
            records.push(next);
            let m = prefix_min[n - 1].min(next.total);
            prefix_min.push(m);
            if n % every == 0 {
                checkpoints.push(psi.clone());
            }
            if m < min_r {
                break;
            }
            if t_next >= cfg.t_timeout {
                timed_out = true;
                break;
            }
        }
        Ok(FirstSegment { t_start, cfg, every, records, prefix_min, checkpoints, last_state: psi, timed_out })
    }

    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn config(&self) -> &SegmentConfig {
        &self.cfg
    }

    /// Same result as [`evolve_segment`] from the empty state with this
    /// threshold; `psi` receives the end state.
    pub fn query(
        &self,
        model: &NonHermitianModel,
        pulse: &PulseSpec,
        r: f64,
        psi: &mut [Complex64],
        stepper: &mut Stepper,
    ) -> Result<SegmentResult, EngineError> {
        let last = self.steps();
        // first n >= 1 with total[n] < r, via the monotone running minimum
        let n = self.prefix_min[1..].partition_point(|&m| m >= r) + 1;
        if n > last {
            if self.timed_out {
                psi.copy_from_slice(&self.last_state);
                return Ok(SegmentResult {
                    end: SegmentEnd::Timeout { t: self.t_start + last as f64 * self.cfg.dt },
                    integrals: JumpWeights(self.records[last].cum),
                    steps: last,
                });
            }
            return Err(EngineError::InvalidArgument(format!("threshold {r} below the cached minimum")));
        }
        let base = ((n - 1) / self.every) * self.every;
        psi.copy_from_slice(&self.checkpoints[base / self.every]);
        let drive = if self.cfg.input_on { Some(pulse) } else { None };
        for m in base..n {
            let t = self.t_start + m as f64 * self.cfg.dt;
            stepper.step(model, psi, t, self.cfg.dt, drive);
        }
        let t_prev = self.t_start + (n - 1) as f64 * self.cfg.dt;
        let mut res = crossing(t_prev, self.cfg.dt, &self.records[n - 1], &self.records[n], r, self.cfg.input_on, pulse);
        res.steps = n;
        Ok(res)
    }

    /// Channel integrals over the whole cached evolution.
    pub fn total_integrals(&self) -> JumpWeights {
        JumpWeights(self.records[self.steps()].cum)
    }

    /// Total norm after each step, starting with the initial value.
    pub fn totals(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.total)
    }
}

/// Powers `M^(2^j)` of the one-step RK4 map for the undriven evolution, used
/// to skip ahead in large blocks and bisect down to the crossing step.
///
/// Mathematically this is the same map as repeated [`Stepper::step`] calls
/// with no drive; only the floating-point rounding differs.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    dt: f64,
    levels: Vec<Array2<Complex64>>,
}

impl FreePropagator {
    /// Largest state dimension for which the dense powers are built.
    pub const MAX_DIM: usize = 801;
    pub const DEFAULT_LEVELS: usize = 13;

    pub fn build(model: &NonHermitianModel, dt: f64, levels: usize) -> Result<Self, EngineError> {
        if !(dt > 0.0) || levels == 0 {
            return Err(EngineError::InvalidArgument("dt and level count must be positive".into()));
        }
        let dim = model.dim;
        let mut m = Array2::<Complex64>::zeros((dim, dim));
        let mut stepper = Stepper::new(dim);
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            col.iter_mut().for_each(|c| *c = ZERO);
            col[j] = Complex64::new(1.0, 0.0);
            stepper.step(model, &mut col, 0.0, dt, None);
            for i in 0..dim {
                m[[i, j]] = col[i];
            }
        }
        let mut out = vec![m];
        for _ in 1..levels {
            let last = out.last().unwrap();
            out.push(last.dot(last));
        }
        Ok(FreePropagator { dt, levels: out })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply(&self, level: usize, psi: &[Complex64], out: &mut [Complex64]) {
        let m = &self.levels[level];
        for (i, o) in out.iter_mut().enumerate() {
            let row = m.row(i);
            let row = row.as_slice().expect("standard layout");
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(psi) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    /// Undriven segment with the semantics of [`evolve_segment`]: the jump
    /// happens at the first step whose norm is below `r`, and a timeout when
    /// `t_start + n·dt` reaches `t_timeout`. Channel integrals are not
    /// accumulated.
    pub fn evolve(
        &self,
        psi: &mut [Complex64],
        t_start: f64,
        r: f64,
        t_timeout: f64,
    ) -> Result<SegmentResult, EngineError> {
        let dt = self.dt;
        let mut n_max = ((t_timeout - t_start) / dt).ceil().max(1.0) as usize;
        while n_max > 1 && t_start + (n_max - 1) as f64 * dt >= t_timeout {
            n_max -= 1;
        }
        while t_start + (n_max as f64) * dt < t_timeout {
            n_max += 1;
        }
        let top = self.levels.len() - 1;
        let mut cand = vec![ZERO; psi.len()];
        let mut total = norm_sqr(psi);
        let mut n = 0usize;
        let advance = |level: usize, psi: &[Complex64], cand: &mut [Complex64], total: f64| {
            self.apply(level, psi, cand);
            let next = norm_sqr(cand);
            check_growth(total, next, dt, t_start).map(|_| next)
        };
        while n < n_max {
            let room = n_max - n;
            let j = top.min((usize::BITS - 1 - room.leading_zeros()) as usize);
            let next = advance(j, psi, &mut cand, total)?;
            if next >= r {
                psi.copy_from_slice(&cand);
                total = next;
                n += 1 << j;
                continue;
            }
            for i in (0..j).rev() {
                let next = advance(i, psi, &mut cand, total)?;
                if next >= r {
                    psi.copy_from_slice(&cand);
                    total = next;
                    n += 1 << i;
                }
            }
            let next = advance(0, psi, &mut cand, total)?;
            psi.copy_from_slice(&cand);
            let span = total - next;
            let f = if span > 0.0 { ((total - r) / span).clamp(0.0, 1.0) } else { 1.0 };
            return Ok(SegmentResult {
                end: SegmentEnd::Jump { t: t_start + (n as f64 + f) * dt, c_in: ZERO },
                integrals: JumpWeights::default(),
                steps: n + 1,
            });
        }
        Ok(SegmentResult {
            end: SegmentEnd::Timeout { t: t_start + n as f64 * dt },
            integrals: JumpWeights::default(),
            steps: n,
        })
    }
}
