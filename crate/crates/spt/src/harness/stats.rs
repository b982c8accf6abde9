//! Estimators over trajectory records.

use serde::{Deserialize, Serialize};

use crate::engine::{JumpKind, JumpWeights, NonHermitianModel, Outcome, TrajectoryRecord};
use crate::error::HarnessError;

/// A probability estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Fraction `k/n` with the binomial error `sqrt(p(1 − p)/n)`.
    pub fn binomial(k: usize, n: usize) -> Self {
        if n == 0 {
            return Estimate { value: f64::NAN, stderr: f64::NAN };
        }
        let p = k as f64 / n as f64;
        Estimate { value: p, stderr: (p * (1.0 - p) / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub success: usize,
    pub lost_spontaneous: usize,
    pub lost_cavity_or_transmit: usize,
    pub timed_out: usize,
    pub stopped: usize,
}

impl OutcomeCounts {
    pub fn from_records(records: &[TrajectoryRecord]) -> Self {
        let mut c = OutcomeCounts::default();
        for r in records {
            match r.outcome {
                Outcome::Success => c.success += 1,
                Outcome::LostSpontaneous => c.lost_spontaneous += 1,
                Outcome::LostCavityOrTransmit => c.lost_cavity_or_transmit += 1,
                Outcome::TimedOut => c.timed_out += 1,
                Outcome::Stopped => c.stopped += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.success + self.lost_spontaneous + self.lost_cavity_or_transmit + self.timed_out + self.stopped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_traj: usize,
    /// Integral form: summed first-segment dephasing weight over summed total.
    pub p_im: Estimate,
    /// Fraction of trajectories whose first jump is a dephasing jump.
    pub p_im_first_jump: Estimate,
    pub eta: Estimate,
    pub outcome_counts: OutcomeCounts,
    /// First-segment channel integrals summed over trajectories.
    pub jump_rate_integrals: JumpWeights,
}

impl EnsembleStats {
    pub fn from_records(records: &[TrajectoryRecord], threshold: u32) -> Result<Self, HarnessError> {
        if records.is_empty() {
            return Err(HarnessError::Undefined("no trajectories"));
        }
        let mut sums = [0.0; 4];
        for r in records {
            for (s, w) in sums.iter_mut().zip(r.first_segment.0) {
                *s += w;
            }
        }
        Ok(EnsembleStats {
            n_traj: records.len(),
            p_im: impedance_matching_probability(records)?,
            p_im_first_jump: first_jump_fraction(records),
            eta: efficiency(records, threshold),
            outcome_counts: OutcomeCounts::from_records(records),
            jump_rate_integrals: JumpWeights(sums),
        })
    }
}

/// `Σ_j D_j / Σ_j T_j` over the first-segment integrals of each trajectory,
/// with `D` the dephasing part and `T` all four channels. The error is the
/// delta-method error of a ratio of means.
pub fn impedance_matching_probability(records: &[TrajectoryRecord]) -> Result<Estimate, HarnessError> {
    let n = records.len();
    let d: Vec<f64> = records.iter().map(|r| r.first_segment.dephasing()).collect();
    let t: Vec<f64> = records.iter().map(|r| r.first_segment.total()).collect();
    let sum_t: f64 = t.iter().sum();
    if !(sum_t > 0.0) {
        return Err(HarnessError::Undefined("zero total jump weight"));
    }
    let p = d.iter().sum::<f64>() / sum_t;
    let stderr = if n > 1 {
        let mean_t = sum_t / n as f64;
        let var: f64 = d.iter().zip(&t).map(|(di, ti)| (di - p * ti).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt() / mean_t
    } else {
        0.0
    };
    Ok(Estimate { value: p, stderr })
}

pub fn first_jump_fraction(records: &[TrajectoryRecord]) -> Estimate {
    let k = records
        .iter()
        .filter(|r| matches!(r.first_jump(), Some(JumpKind::DephaseSignal | JumpKind::DephaseLocalize)))
        .count();
    Estimate::binomial(k, records.len())
}

/// Fraction of records with at least `threshold` signal jumps.
pub fn efficiency(records: &[TrajectoryRecord], threshold: u32) -> Estimate {
    let k = records.iter().filter(|r| r.n_signal_jumps >= threshold).count();
    Estimate::binomial(k, records.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationBreakdown {
    /// Trajectories lost by control spontaneous emission, over all trajectories.
    pub spont_frac: f64,
    /// Trajectories lost through the cavity or transmitted, over all trajectories.
    pub leak_frac: f64,
    pub timeout_frac: f64,
    /// The same two losses as fractions of the failed trajectories.
    pub spont_of_failures: f64,
    pub leak_of_failures: f64,
    /// Ensemble ratio of the signal to the localizing dephasing rate.
    pub dephasing_ratio: f64,
}

pub fn dissipation_breakdown(records: &[TrajectoryRecord], model: &NonHermitianModel) -> DissipationBreakdown {
    let c = OutcomeCounts::from_records(records);
    let n = records.len().max(1) as f64;
    let failures = (c.lost_spontaneous + c.lost_cavity_or_transmit + c.timed_out) as f64;
    let of_fail = |k: usize| if failures > 0.0 { k as f64 / failures } else { 0.0 };
    let sig: f64 = model.signal_sq.iter().sum();
    let loc: f64 = model.loc_row_sq.iter().sum();
    DissipationBreakdown {
        spont_frac: c.lost_spontaneous as f64 / n,
        leak_frac: c.lost_cavity_or_transmit as f64 / n,
        timeout_frac: c.timed_out as f64 / n,
        spont_of_failures: of_fail(c.lost_spontaneous),
        leak_of_failures: of_fail(c.lost_cavity_or_transmit),
        dephasing_ratio: if loc > 0.0 { sig / loc } else { f64::INFINITY },
    }
}
