use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{JumpKind, NonHermitianModel};
use crate::error::EngineError;
use crate::scattering::Variant;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Channel weights `⟨ψ|L†L|ψ⟩`, indexed by [`JumpKind::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JumpWeights(pub [f64; 4]);

impl JumpWeights {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn get(&self, k: JumpKind) -> f64 {
        self.0[k.index()]
    }

    pub fn dephasing(&self) -> f64 {
        self.get(JumpKind::DephaseSignal) + self.get(JumpKind::DephaseLocalize)
    }
}

pub fn jump_probabilities(model: &NonHermitianModel, psi: &[Complex64], c_in: Complex64) -> JumpWeights {
    let n = model.n;
    let e0 = model.e_offset();
    let r0 = model.r_offset();
    let ce = &psi[e0..e0 + n];
    let cr = &psi[r0..r0 + n];
    let pop_e: f64 = ce.iter().map(|c| c.norm_sqr()).sum();
    let out = match model.variant {
        Variant::Cavity => (2.0 * model.ctl.kappa_c).sqrt() * psi[0] - c_in,
        Variant::FreeSpace => {
            let s: Complex64 = ce.iter().sum();
            model.source[0] * s + c_in
        }
    };
    let mut sig = 0.0;
    let mut loc = 0.0;
    for k in 0..n {
        let p = cr[k].norm_sqr();
        sig += model.signal_sq[k] * p;
        loc += model.loc_row_sq[k] * p;
    }
    JumpWeights([out.norm_sqr(), 2.0 * model.ctl.gamma_ec * pop_e, sig, loc])
}

/// Per-atom weights `p^l = Σ_k |A^{k,l}|² |c_r^k|²` of the localizing family.
pub fn localize_weights(model: &NonHermitianModel, psi: &[Complex64]) -> Vec<f64> {
    let n = model.n;
    let cr = &psi[model.r_offset()..model.r_offset() + n];
    let mut w = vec![0.0; n];
    for (k, c) in cr.iter().enumerate() {
        let p = c.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (l, a) in model.loc.row(k).iter().enumerate() {
            w[l] += a.norm_sqr() * p;
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub channel: JumpKind,
    pub atom: Option<usize>,
    pub norm_before: f64,
}

/// Categorical draw: index `i` with probability `w[i] / Σw`.
pub fn categorical<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &x) in w.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Draws a channel and applies it. Decay channels leave `psi` untouched; the
/// caller ends the trajectory. Dephasing channels replace `psi` by the
/// normalized post-jump state, which has no `e`/`g` component.
pub fn select_and_apply_jump<R: Rng + ?Sized>(
    model: &NonHermitianModel,
    psi: &mut [Complex64],
    t: f64,
    c_in: Complex64,
    norm_before: f64,
    rng: &mut R,
) -> Result<JumpEvent, EngineError> {
    let w = jump_probabilities(model, psi, c_in);
    let idx = categorical(&w.0, rng).ok_or(EngineError::ZeroWeights(t))?;
    let kind = JumpKind::ALL[idx];
    let mut atom = None;
    match kind {
        JumpKind::DecayCavityOrTransmit | JumpKind::DecaySpontaneousControl => {}
        JumpKind::DephaseSignal => {
            let amps = model.signal.clone();
            project_rydberg(model, psi, |k| amps[k]);
        }
        JumpKind::DephaseLocalize => {
            let lw = localize_weights(model, psi);
            let l = categorical(&lw, rng).ok_or(EngineError::ZeroWeights(t))?;
            atom = Some(l);
            project_rydberg(model, psi, |k| model.loc[[k, l]]);
        }
    }
    Ok(JumpEvent { t, channel: kind, atom, norm_before })
}

fn project_rydberg(model: &NonHermitianModel, psi: &mut [Complex64], amp: impl Fn(usize) -> Complex64) {
    let r0 = model.r_offset();
    for c in psi[..r0].iter_mut() {
        *c = ZERO;
    }
    let mut norm = 0.0;
    for k in 0..model.n {
        let v = amp(k) * psi[r0 + k];
        psi[r0 + k] = v;
        norm += v.norm_sqr();
    }
    let s = 1.0 / norm.sqrt();
    for c in psi[r0..].iter_mut() {
        *c *= s;
    }
}
