//! Probe branch of the cavity device: blockaded cooperativities, reflection,
//! and the two Rydberg-mediated dephasing channels of a stored control
//! excitation.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::BlockadeError;
use crate::geometry::{interaction_matrix, BlockadeBranch, EnsembleGeometry};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityProbeParams {
    pub g_p: f64,
    pub kappa_p: f64,
    pub gamma_ep: f64,
    pub omega_p: f64,
    pub alpha_in_sq: f64,
    pub n_atoms: usize,
}

impl CavityProbeParams {
    /// Builds the parameters from the probe cooperativity `C_p = g_p² N / (κ_p γ_ep)`.
    pub fn from_cooperativity(
        c_p: f64,
        kappa_p: f64,
        gamma_ep: f64,
        omega_p: f64,
        alpha_in_sq: f64,
        n_atoms: usize,
    ) -> Self {
        let g_p = (c_p * kappa_p * gamma_ep / n_atoms as f64).sqrt();
        CavityProbeParams { g_p, kappa_p, gamma_ep, omega_p, alpha_in_sq, n_atoms }
    }

    pub fn cooperativity(&self) -> f64 {
        self.g_p * self.g_p * self.n_atoms as f64 / (self.kappa_p * self.gamma_ep)
    }

    pub fn with_alpha_in_sq(mut self, alpha_in_sq: f64) -> Self {
        self.alpha_in_sq = alpha_in_sq;
        self
    }

    pub fn validate(&self) -> Result<(), BlockadeError> {
        let rates = [self.g_p, self.kappa_p, self.gamma_ep, self.omega_p];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(BlockadeError::InvalidArgument("cavity probe rates must be > 0".into()));
        }
        if !(self.alpha_in_sq >= 0.0) {
            return Err(BlockadeError::InvalidArgument("alpha_in_sq must be >= 0".into()));
        }
        Ok(())
    }

    /// Distance at which `V = |Ω_p|²/γ_ep` for a given `c6`.
    pub fn blockade_radius(&self, c6: f64) -> f64 {
        (c6 * self.gamma_ep / (self.omega_p * self.omega_p)).powf(1.0 / 6.0)
    }
}

impl BlockadeBranch for CavityProbeParams {
    fn pair_blockade_re(&self, v: f64) -> f64 {
        single_blockaded_cooperativity(v, self).re
    }
}

/// `(g_p²/κ_p) / (γ_ep − i|Ω_p|²/V)`, evaluated as `(g_p²/κ_p) V / (γ_ep V − i|Ω_p|²)`
/// so that `V = 0` and `V = ∞` are exact.
pub fn single_blockaded_cooperativity(v_kl: f64, p: &CavityProbeParams) -> Complex64 {
    let gk = p.g_p * p.g_p / p.kappa_p;
    if v_kl == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if v_kl.is_infinite() {
        return Complex64::new(gk / p.gamma_ep, 0.0);
    }
    gk * v_kl / Complex64::new(p.gamma_ep * v_kl, -p.omega_p * p.omega_p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityBlockadeProfile {
    pub c_b1: Array2<Complex64>,
    pub c_b: Vec<Complex64>,
    /// `L_κp = Σ_k amp_kappa[k] σ_rr^k`.
    pub amp_kappa: Vec<Complex64>,
    /// `L_gep^l = Σ_{k≠l} amp_ge[[k, l]] σ_rr^k`; row = stored atom, column = decaying atom.
    pub amp_ge: Array2<Complex64>,
    pub gamma_r_per_atom: Vec<f64>,
}

impl CavityBlockadeProfile {
    pub fn n(&self) -> usize {
        self.c_b.len()
    }

    /// Diagnostic table with columns `k, re_c_b, im_c_b, gamma_r_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_profile_csv(w, &self.c_b, &self.gamma_r_per_atom)
    }
}

pub(crate) fn write_profile_csv<W: Write>(
    mut w: W,
    b: &[Complex64],
    gamma_r: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "k,re_b,im_b,gamma_r_k")?;
    for (k, (c, g)) in b.iter().zip(gamma_r).enumerate() {
        writeln!(w, "{k},{},{},{}", c.re, c.im, g)?;
    }
    Ok(())
}

pub fn blockade_profile(
    geom: &EnsembleGeometry,
    p: &CavityProbeParams,
) -> Result<CavityBlockadeProfile, BlockadeError> {
    let v = interaction_matrix(geom)?;
    blockade_profile_from_matrix(&v, p)
}

pub fn blockade_profile_from_matrix(
    v: &Array2<f64>,
    p: &CavityProbeParams,
) -> Result<CavityBlockadeProfile, BlockadeError> {
    p.validate()?;
    let n = v.nrows();
    if p.n_atoms != n {
        return Err(BlockadeError::InvalidArgument(format!(
            "params are for {} atoms, geometry has {n}",
            p.n_atoms
        )));
    }
    let sqrt_alpha = p.alpha_in_sq.sqrt();
    let om2 = p.omega_p * p.omega_p;
    let ge_pref = 2.0 * I * p.g_p * (p.gamma_ep / p.kappa_p).sqrt() * sqrt_alpha;

    let mut c_b1 = Array2::<Complex64>::zeros((n, n));
    let mut amp_ge = Array2::<Complex64>::zeros((n, n));
    let mut c_b = vec![Complex64::new(0.0, 0.0); n];
    let mut amp_kappa = vec![Complex64::new(0.0, 0.0); n];
    let mut gamma_r_per_atom = vec![0.0; n];

    for k in 0..n {
        let mut sum = Complex64::new(0.0, 0.0);
        for l in 0..n {
            if l == k {
                continue;
            }
            let c = single_blockaded_cooperativity(v[[k, l]], p);
            c_b1[[k, l]] = c;
            sum += c;
        }
        c_b[k] = sum;
        let denom = 1.0 + sum;
        if denom.norm() == 0.0 {
            return Err(BlockadeError::ResonantPole(k));
        }
        amp_kappa[k] = -sqrt_alpha * sum / denom;
        let mut ge_sq = 0.0;
        for l in 0..n {
            let vkl = v[[k, l]];
            if l == k || vkl == 0.0 {
                continue;
            }
            // γ + |Ω|²/(iV) = (γV − i|Ω|²)/V
            let a = ge_pref * vkl / Complex64::new(p.gamma_ep * vkl, -om2) / denom;
            amp_ge[[k, l]] = a;
            ge_sq += a.norm_sqr();
        }
        gamma_r_per_atom[k] = 0.5 * (amp_kappa[k].norm_sqr() + ge_sq);
    }
    Ok(CavityBlockadeProfile { c_b1, c_b, amp_kappa, amp_ge, gamma_r_per_atom })
}

/// Empty-cavity probe reflection with the EIT window at `ω = 0`.
///
/// `R_p = 2κ/(κ − iω + g²Nω/(ω(γ − iω) + i|Ω|²)) − 1`.
pub fn probe_reflection_empty(omega: f64, p: &CavityProbeParams) -> Complex64 {
    let g2n = p.g_p * p.g_p * p.n_atoms as f64;
    let om2 = p.omega_p * p.omega_p;
    let atoms = if omega == 0.0 {
        if om2 == 0.0 {
            Complex64::new(g2n / p.gamma_ep, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        g2n * omega / (omega * Complex64::new(p.gamma_ep, -omega) + I * om2)
    };
    2.0 * p.kappa_p / (Complex64::new(p.kappa_p, -omega) + atoms) - 1.0
}

/// `(1 − C_b)/(1 + C_b)` for a control excitation stored at one atom.
pub fn probe_reflection_blockaded(c_b_k: Complex64) -> Result<Complex64, BlockadeError> {
    if c_b_k.is_infinite() {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let d = 1.0 + c_b_k;
    if d.norm() == 0.0 {
        return Err(BlockadeError::ResonantPole(0));
    }
    Ok((1.0 - c_b_k) / d)
}

/// Classical probe amplitudes `(a_p, σ_ge, σ_gr)` per unit input amplitude,
/// without a stored control excitation.
pub fn probe_reference_steady_state(
    omega: f64,
    p: &CavityProbeParams,
) -> (Complex64, Complex64, Complex64) {
    let g2n = p.g_p * p.g_p * p.n_atoms as f64;
    let om2 = p.omega_p * p.omega_p;
    let s2k = (2.0 * p.kappa_p).sqrt();
    let eit = omega * Complex64::new(p.gamma_ep, -omega) + I * om2;
    let cav = Complex64::new(p.kappa_p, -omega);
    let a = if eit.norm() == 0.0 {
        // Ω_p = 0 and ω = 0: bare two-level response
        Complex64::new(s2k / (p.kappa_p + g2n / p.gamma_ep), 0.0)
    } else {
        s2k / (cav + omega * g2n / eit)
    };
    let denom = cav * eit + omega * g2n;
    let ge = p.g_p * omega * s2k / denom;
    let gr = -I * p.omega_p * p.g_p * s2k / denom;
    (a, ge, gr)
}

/// Mean of the per-atom dephasing rates.
pub fn collective_dephasing_rate(profile: &CavityBlockadeProfile) -> f64 {
    profile.gamma_r_per_atom.iter().sum::<f64>() / profile.n() as f64
}
