//! Probe branch of the free-space device: blockaded optical depths,
//! propagation-ordered attenuation and the dephasing channels.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::cavity::write_profile_csv;
use crate::error::BlockadeError;
use crate::geometry::{interaction_matrix, BlockadeBranch, EnsembleGeometry};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceProbeParams {
    pub d_p1: f64,
    pub gamma_ep: f64,
    pub omega_p: f64,
    pub alpha_in_sq: f64,
    pub n_atoms: usize,
}

impl FreeSpaceProbeParams {
    /// Builds the parameters from the total probe depth `d_p = d_p1 N`.
    pub fn from_depth(d_p: f64, gamma_ep: f64, omega_p: f64, alpha_in_sq: f64, n_atoms: usize) -> Self {
        FreeSpaceProbeParams { d_p1: d_p / n_atoms as f64, gamma_ep, omega_p, alpha_in_sq, n_atoms }
    }

    pub fn depth(&self) -> f64 {
        self.d_p1 * self.n_atoms as f64
    }

    pub fn with_alpha_in_sq(mut self, alpha_in_sq: f64) -> Self {
        self.alpha_in_sq = alpha_in_sq;
        self
    }

    pub fn validate(&self) -> Result<(), BlockadeError> {
        let rates = [self.d_p1, self.gamma_ep, self.omega_p];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(BlockadeError::InvalidArgument("free-space probe rates must be > 0".into()));
        }
        if !(self.alpha_in_sq >= 0.0) {
            return Err(BlockadeError::InvalidArgument("alpha_in_sq must be >= 0".into()));
        }
        Ok(())
    }

    pub fn blockade_radius(&self, c6: f64) -> f64 {
        (c6 * self.gamma_ep / (self.omega_p * self.omega_p)).powf(1.0 / 6.0)
    }
}

impl BlockadeBranch for FreeSpaceProbeParams {
    fn pair_blockade_re(&self, v: f64) -> f64 {
        single_blockaded_depth(v, self).re
    }
}

/// `d_p1 γ_ep / (γ_ep + |Ω_p|²/(iV))`.
pub fn single_blockaded_depth(v_kl: f64, p: &FreeSpaceProbeParams) -> Complex64 {
    if v_kl == 0.0 {
        return ZERO;
    }
    if v_kl.is_infinite() {
        return Complex64::new(p.d_p1, 0.0);
    }
    p.d_p1 * p.gamma_ep * v_kl / Complex64::new(p.gamma_ep * v_kl, -p.omega_p * p.omega_p)
}

/// Attenuation `D^{k,l} = Σ_{l'≤l} d^{k,l'} exp(−Σ_{l''=l'}^{l} d^{k,l''}) − 1`
/// for one row of single-pair depths, using the recurrence
/// `Q_l = e^{−d_l}(Q_{l−1} + d_l)` for the double sum.
pub fn attenuation_row(d_row: &[Complex64], out: &mut [Complex64]) {
    let mut q = ZERO;
    for (d, o) in d_row.iter().zip(out.iter_mut()) {
        q = (-*d).exp() * (q + *d);
        *o = q - 1.0;
    }
}

pub fn attenuation_factors(d_b1: &Array2<Complex64>) -> Array2<Complex64> {
    let n = d_b1.nrows();
    let mut att = Array2::<Complex64>::zeros((n, n));
    let mut out = vec![ZERO; n];
    for k in 0..n {
        let row: Vec<Complex64> = d_b1.row(k).to_vec();
        attenuation_row(&row, &mut out);
        for l in 0..n {
            att[[k, l]] = out[l];
        }
    }
    att
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeSpaceBlockadeProfile {
    pub d_b1: Array2<Complex64>,
    pub d_b: Vec<Complex64>,
    pub att: Array2<Complex64>,
    /// `L_dp = Σ_k amp_dp[k] σ_rr^k`.
    pub amp_dp: Vec<Complex64>,
    /// `L_gep^l = Σ_{k≠l} amp_ge[[k, l]] σ_rr^k`; row = stored atom, column = decaying atom.
    pub amp_ge: Array2<Complex64>,
    pub gamma_r_per_atom: Vec<f64>,
}

impl FreeSpaceBlockadeProfile {
    pub fn n(&self) -> usize {
        self.d_b.len()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_profile_csv(w, &self.d_b, &self.gamma_r_per_atom)
    }
}

pub fn fs_blockade_profile(
    geom: &EnsembleGeometry,
    p: &FreeSpaceProbeParams,
) -> Result<FreeSpaceBlockadeProfile, BlockadeError> {
    if !geom.is_propagation_ordered() {
        return Err(BlockadeError::Unordered);
    }
    let v = interaction_matrix(geom)?;
    fs_blockade_profile_from_matrix(&v, p)
}

/// Same as [`fs_blockade_profile`] for an interaction matrix whose index
/// order is the propagation order.
pub fn fs_blockade_profile_from_matrix(
    v: &Array2<f64>,
    p: &FreeSpaceProbeParams,
) -> Result<FreeSpaceBlockadeProfile, BlockadeError> {
    p.validate()?;
    let n = v.nrows();
    if p.n_atoms != n {
        return Err(BlockadeError::InvalidArgument(format!(
            "params are for {} atoms, geometry has {n}",
            p.n_atoms
        )));
    }
    let d_b1 = v.mapv(|x| single_blockaded_depth(x, p));
    let att = attenuation_factors(&d_b1);
    let d_b: Vec<Complex64> = (0..n).map(|k| d_b1.row(k).sum()).collect();

    let ge_pref = -I * (2.0 * p.gamma_ep / p.d_p1).sqrt() * p.alpha_in_sq.sqrt();
    let dp_pref = (p.d_p1 / p.gamma_ep).sqrt();
    let mut amp_ge = Array2::<Complex64>::zeros((n, n));
    let mut amp_dp = vec![ZERO; n];
    let mut gamma_r_per_atom = vec![0.0; n];
    for k in 0..n {
        let mut sum = ZERO;
        let mut ge_sq = 0.0;
        for l in 0..n {
            if l == k {
                continue;
            }
            let a = ge_pref * d_b1[[k, l]] * att[[k, l]];
            amp_ge[[k, l]] = a;
            sum += a;
            ge_sq += a.norm_sqr();
        }
        amp_dp[k] = dp_pref * sum;
        gamma_r_per_atom[k] = 0.5 * (amp_dp[k].norm_sqr() + ge_sq);
    }
    Ok(FreeSpaceBlockadeProfile { d_b1, d_b, att, amp_dp, amp_ge, gamma_r_per_atom })
}

/// Empty-medium probe transmission `exp(iω γ d_p / ((γ − iω)(−iω) + |Ω_p|²))`.
pub fn probe_transmission_empty(omega: f64, p: &FreeSpaceProbeParams) -> Complex64 {
    let d_p = p.depth();
    let om2 = p.omega_p * p.omega_p;
    let den = Complex64::new(p.gamma_ep, -omega) * Complex64::new(0.0, -omega) + om2;
    if omega == 0.0 {
        if om2 == 0.0 {
            return Complex64::new((-d_p).exp(), 0.0);
        }
        return Complex64::new(1.0, 0.0);
    }
    (I * omega * p.gamma_ep * d_p / den).exp()
}

pub fn probe_transmission_blockaded(d_b_k: Complex64) -> Complex64 {
    (-d_b_k).exp()
}

/// Classical `(E, σ_ge, σ_gr)` per unit input at the position of atom
/// `z_index` (the field has passed the `z_index` atoms before it).
pub fn fs_probe_reference_steady_state(
    z_index: usize,
    omega: f64,
    p: &FreeSpaceProbeParams,
) -> (Complex64, Complex64, Complex64) {
    let om2 = p.omega_p * p.omega_p;
    let mi_w = Complex64::new(0.0, -omega);
    let den = Complex64::new(p.gamma_ep, -omega) * mi_w + om2;
    let field = if omega == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        (-(z_index as f64) * p.gamma_ep * p.d_p1 * mi_w / den).exp()
    };
    let sd = p.d_p1.sqrt();
    let ge = I * sd * p.gamma_ep * mi_w * field / den;
    let gr = -sd * p.gamma_ep * p.omega_p * field / den;
    (field, ge, gr)
}

pub fn collective_dephasing_rate(profile: &FreeSpaceBlockadeProfile) -> f64 {
    profile.gamma_r_per_atom.iter().sum::<f64>() / profile.n() as f64
}
