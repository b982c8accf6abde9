//! Frequency-domain response of the no-jump evolution.
//!
//! Before the first jump the amplitudes respond linearly to the input, so the
//! first-segment channel integrals of a long pulse are spectral averages of
//! the monochromatic steady-state weights. Each steady state is solved in
//! O(N) using the block structure of `H`.

use num_complex::Complex64;

use super::jumps::{jump_probabilities, JumpWeights};
use super::model::NonHermitianModel;
use crate::scattering::Variant;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `ψ_ω = −i (H − ω)⁻¹ s` for a unit-flux input at detuning `omega`.
pub fn steady_response(model: &NonHermitianModel, omega: f64) -> Vec<Complex64> {
    let n = model.n;
    let c = &model.ctl;
    let om2 = c.omega_c.norm_sqr();
    let w = Complex64::new(omega, 0.0);
    let hr = |l: usize| Complex64::new(c.delta_small, -model.gamma_r[l]) - w;
    let mut psi = vec![Complex64::new(0.0, 0.0); model.dim];
    match model.variant {
        Variant::Cavity => {
            let g = c.coupling;
            let he = Complex64::new(c.delta_big, -c.gamma_ec) - w;
            let inv_d: Vec<Complex64> = (0..n).map(|l| 1.0 / (he - om2 / hr(l))).collect();
            let sum: Complex64 = inv_d.iter().sum();
            let cg = -I * model.source[0] / (Complex64::new(-omega, -c.kappa_c) - g * g * sum);
            psi[0] = cg;
            for l in 0..n {
                let ce = -g * cg * inv_d[l];
                psi[1 + l] = ce;
                psi[1 + n + l] = -c.omega_c.conj() * ce / hr(l);
            }
        }
        Variant::FreeSpace => {
            let k = c.coupling;
            let he = Complex64::new(c.delta_big, -c.gamma_ec - 0.5 * k) - w;
            let mut prefix = Complex64::new(0.0, 0.0);
            for l in 0..n {
                let d = he - om2 / hr(l);
                // −i·source plus the cascaded field of the earlier atoms
                let ce = (-I * model.source[l] + I * k * prefix) / d;
                psi[l] = ce;
                psi[n + l] = -c.omega_c.conj() * ce / hr(l);
                prefix += ce;
            }
        }
    }
    psi
}

/// Channel weights in the monochromatic steady state; they sum to one.
pub fn spectral_weights(model: &NonHermitianModel, omega: f64) -> JumpWeights {
    let psi = steady_response(model, omega);
    jump_probabilities(model, &psi, Complex64::new(1.0, 0.0))
}

/// Channel probabilities for a Gaussian pulse of temporal width `sigma`
/// (`|c_in(t)|²` has standard deviation `sigma`), before any jump.
pub fn spectral_first_segment(model: &NonHermitianModel, sigma: f64) -> JumpWeights {
    spectral_first_segment_with(model, sigma, 8.0, 1600)
}

/// Simpson quadrature over `±width` spectral standard deviations with
/// `intervals` (rounded up to even) sub-intervals.
pub fn spectral_first_segment_with(model: &NonHermitianModel, sigma: f64, width: f64, intervals: usize) -> JumpWeights {
    let m = intervals.max(2) + intervals % 2;
    let std = 1.0 / (2.0 * sigma);
    let lim = width * std;
    let h = 2.0 * lim / m as f64;
    let mut acc = [0.0; 4];
    let mut norm = 0.0;
    for j in 0..=m {
        let om = -lim + j as f64 * h;
        let coef = if j == 0 || j == m {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let density = coef * (-0.5 * (om / std).powi(2)).exp();
        norm += density;
        let wts = spectral_weights(model, om);
        for i in 0..4 {
            acc[i] += density * wts.0[i];
        }
    }
    for a in &mut acc {
        *a /= norm;
    }
    JumpWeights(acc)
}
