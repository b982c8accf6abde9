//! Single-excitation non-Hermitian generator for the two device variants.
//!
//! Cavity basis: `|g,1⟩, |e_c^1..N⟩, |r_c^1..N⟩` (dimension 2N+1).
//! Free-space basis: `|e_c^1..N⟩, |r_c^1..N⟩` (dimension 2N), atoms in
//! propagation order.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityBlockadeProfile;
use crate::error::EngineError;
use crate::freespace::FreeSpaceBlockadeProfile;
use crate::geometry::EnsembleGeometry;
use crate::scattering::{ControlParams, Variant};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance of the build-time check on the anti-Hermitian part.
pub const ANTI_HERMITIAN_TOL: f64 = 1e-12;
/// Largest dimension for which the build-time check assembles dense matrices.
pub const DENSE_CHECK_MAX_DIM: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpKind {
    #[serde(rename = "decay_output")]
    DecayCavityOrTransmit,
    #[serde(rename = "decay_spontaneous")]
    DecaySpontaneousControl,
    #[serde(rename = "dephase_signal")]
    DephaseSignal,
    #[serde(rename = "dephase_localize")]
    DephaseLocalize,
}

impl JumpKind {
    pub const ALL: [JumpKind; 4] = [
        JumpKind::DecayCavityOrTransmit,
        JumpKind::DecaySpontaneousControl,
        JumpKind::DephaseSignal,
        JumpKind::DephaseLocalize,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_decay(self) -> bool {
        matches!(self, JumpKind::DecayCavityOrTransmit | JumpKind::DecaySpontaneousControl)
    }

    pub fn name(self) -> &'static str {
        match self {
            JumpKind::DecayCavityOrTransmit => "decay_output",
            JumpKind::DecaySpontaneousControl => "decay_spontaneous",
            JumpKind::DephaseSignal => "dephase_signal",
            JumpKind::DephaseLocalize => "dephase_localize",
        }
    }
}

/// Operator content of a jump channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelAmplitudes {
    /// `L ψ = Σ_i coeffs[i] ψ[slots.start + i] + input_coeff · c_in(t)`.
    Output { slots: std::ops::Range<usize>, coeffs: Vec<Complex64>, input_coeff: Complex64 },
    /// One operator `amplitude |0⟩⟨i|` per slot in the range.
    PerSlot { slots: std::ops::Range<usize>, amplitude: f64 },
    /// `Σ_k a[k] σ_rr^k`.
    RydbergVector(Vec<Complex64>),
    /// Family over decaying atoms `l`: `Σ_k a[[k, l]] σ_rr^k`.
    RydbergMatrix(Array2<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub kind: JumpKind,
    pub amplitudes: ChannelAmplitudes,
    /// Signal jumps count towards a successful switching event.
    pub success_flag: bool,
}

/// Control-branch quantities the generator needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelControl {
    pub gamma_ec: f64,
    pub kappa_c: f64,
    pub omega_c: Complex64,
    pub delta_big: f64,
    pub delta_small: f64,
    /// `g_c` for the cavity, `d_c1 γ_ec` for free space.
    pub coupling: f64,
}

#[derive(Debug, Clone)]
pub struct NonHermitianModel {
    pub variant: Variant,
    pub n: usize,
    pub dim: usize,
    pub ctl: ModelControl,
    pub source: Vec<Complex64>,
    pub channels: Vec<JumpChannel>,
    /// `½(|signal_k|² + Σ_l |loc_kl|²)`.
    pub gamma_r: Vec<f64>,
    pub(crate) signal: Vec<Complex64>,
    pub(crate) signal_sq: Vec<f64>,
    pub(crate) loc_row_sq: Vec<f64>,
    pub(crate) loc: Array2<Complex64>,
}

impl NonHermitianModel {
    pub fn e_offset(&self) -> usize {
        match self.variant {
            Variant::Cavity => 1,
            Variant::FreeSpace => 0,
        }
    }

    pub fn r_offset(&self) -> usize {
        self.e_offset() + self.n
    }

    pub fn signal_amplitudes(&self) -> &[Complex64] {
        &self.signal
    }

    pub fn localize_amplitudes(&self) -> &Array2<Complex64> {
        &self.loc
    }

    /// Returns a copy with every dephasing amplitude multiplied by `s`
    /// (rates by `s²`), which is how the probe strength enters.
    pub fn with_dephasing_scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.rescale_dephasing(s);
        m
    }

    pub fn rescale_dephasing(&mut self, s: f64) {
        let s2 = s * s;
        for a in &mut self.signal {
            *a *= s;
        }
        self.loc.mapv_inplace(|a| a * s);
        for v in self.signal_sq.iter_mut().chain(self.loc_row_sq.iter_mut()).chain(self.gamma_r.iter_mut()) {
            *v *= s2;
        }
        for ch in &mut self.channels {
            match &mut ch.amplitudes {
                ChannelAmplitudes::RydbergVector(v) => v.iter_mut().for_each(|a| *a *= s),
                ChannelAmplitudes::RydbergMatrix(m) => m.mapv_inplace(|a| a * s),
                _ => {}
            }
        }
    }

    pub fn set_delta_small(&mut self, delta: f64) {
        self.ctl.delta_small = delta;
    }

    /// `out = H ψ`.
    pub fn apply_h(&self, psi: &[Complex64], out: &mut [Complex64]) {
        self.apply_generator(psi, ZERO, out, Complex64::new(1.0, 0.0), false);
    }

    /// `out = −i H ψ + source · c_in`.
    #[inline]
    pub fn derivative(&self, psi: &[Complex64], c_in: Complex64, out: &mut [Complex64]) {
        self.apply_generator(psi, c_in, out, -I, true);
    }

    #[inline]
    fn apply_generator(&self, psi: &[Complex64], c_in: Complex64, out: &mut [Complex64], pre: Complex64, with_source: bool) {
        let n = self.n;
        let c = &self.ctl;
        let om = c.omega_c;
        let omc = om.conj();
        let he_re = c.delta_big;
        match self.variant {
            Variant::Cavity => {
                let g = c.coupling;
                let (cg, rest) = psi.split_at(1);
                let (ce, cr) = rest.split_at(n);
                let cg = cg[0];
                let (og, orest) = out.split_at_mut(1);
                let (oe, or) = orest.split_at_mut(n);
                let mut sum_e = ZERO;
                let he = Complex64::new(he_re, -c.gamma_ec);
                for l in 0..n {
                    sum_e += ce[l];
                    oe[l] = pre * (g * cg + he * ce[l] + om * cr[l]);
                    let hr = Complex64::new(c.delta_small, -self.gamma_r[l]);
                    or[l] = pre * (omc * ce[l] + hr * cr[l]);
                }
                og[0] = pre * (Complex64::new(0.0, -c.kappa_c) * cg + g * sum_e);
                if with_source {
                    og[0] += self.source[0] * c_in;
                }
            }
            Variant::FreeSpace => {
                let k = c.coupling;
                let (ce, cr) = psi.split_at(n);
                let (oe, or) = out.split_at_mut(n);
                let he = Complex64::new(he_re, -c.gamma_ec - 0.5 * k);
                let casc = Complex64::new(0.0, -k);
                let mut prefix = ZERO;
                for l in 0..n {
                    let mut v = pre * (he * ce[l] + casc * prefix + om * cr[l]);
                    if with_source {
                        v += self.source[l] * c_in;
                    }
                    oe[l] = v;
                    prefix += ce[l];
                    let hr = Complex64::new(c.delta_small, -self.gamma_r[l]);
                    or[l] = pre * (omc * ce[l] + hr * cr[l]);
                }
            }
        }
    }

    /// Dense `H_NH`, for diagnostics and small-N checks.
    pub fn generator_dense(&self) -> Array2<Complex64> {
        let mut h = Array2::<Complex64>::zeros((self.dim, self.dim));
        let mut e = vec![ZERO; self.dim];
        let mut col = vec![ZERO; self.dim];
        for j in 0..self.dim {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply_h(&e, &mut col);
            for i in 0..self.dim {
                h[[i, j]] = col[i];
            }
            e[j] = ZERO;
        }
        h
    }

    /// Nonzero entries `(row, col, value)` of `H_NH`.
    pub fn generator_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let h = self.generator_dense();
        h.indexed_iter().filter(|(_, v)| v.norm() != 0.0).map(|((i, j), v)| (i, j, *v)).collect()
    }

    /// Dense `Σ_c L_c† L_c` over all channels.
    pub fn channel_gram_dense(&self) -> Array2<Complex64> {
        let mut m = Array2::<Complex64>::zeros((self.dim, self.dim));
        let r0 = self.r_offset();
        for ch in &self.channels {
            match &ch.amplitudes {
                ChannelAmplitudes::Output { slots, coeffs, .. } => {
                    for (a, ca) in slots.clone().zip(coeffs) {
                        for (b, cb) in slots.clone().zip(coeffs) {
                            m[[a, b]] += ca.conj() * cb;
                        }
                    }
                }
                ChannelAmplitudes::PerSlot { slots, amplitude } => {
                    for s in slots.clone() {
                        m[[s, s]] += amplitude * amplitude;
                    }
                }
                ChannelAmplitudes::RydbergVector(v) => {
                    for (k, a) in v.iter().enumerate() {
                        m[[r0 + k, r0 + k]] += a.norm_sqr();
                    }
                }
                ChannelAmplitudes::RydbergMatrix(a) => {
                    for ((k, _), x) in a.indexed_iter() {
                        m[[r0 + k, r0 + k]] += x.norm_sqr();
                    }
                }
            }
        }
        m
    }

    /// Largest entry of `(H − H†)/2 + (i/2) Σ L†L`.
    pub fn anti_hermitian_deviation(&self) -> f64 {
        let h = self.generator_dense();
        let gram = self.channel_gram_dense();
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = 0.5 * (h[[i, j]] - h[[j, i]].conj());
                let d = a + 0.5 * I * gram[[i, j]];
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    fn check(self) -> Result<Self, EngineError> {
        if self.dim <= DENSE_CHECK_MAX_DIM {
            let dev = self.anti_hermitian_deviation();
            if dev > ANTI_HERMITIAN_TOL * (1.0 + self.max_rate()) {
                return Err(EngineError::AntiHermitian(dev));
            }
        }
        Ok(self)
    }

    fn max_rate(&self) -> f64 {
        let g = self.gamma_r.iter().cloned().fold(0.0, f64::max);
        g.max(self.ctl.gamma_ec).max(self.ctl.kappa_c).max(self.ctl.coupling * self.n as f64)
    }
}

fn check_control(ctl: &ControlParams, variant: Variant, n: usize) -> Result<(), EngineError> {
    if ctl.variant != variant {
        return Err(EngineError::InvalidArgument(format!("control params are for {}", ctl.variant)));
    }
    if ctl.n_atoms != n {
        return Err(EngineError::DimensionMismatch { expected: n, got: ctl.n_atoms });
    }
    if !(ctl.gamma_ec > 0.0) || !(ctl.coupling >= 0.0) {
        return Err(EngineError::InvalidArgument("control rates must be positive".into()));
    }
    Ok(())
}

fn dephasing_parts(signal: &[Complex64], loc: &Array2<Complex64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let signal_sq: Vec<f64> = signal.iter().map(|a| a.norm_sqr()).collect();
    let loc_row_sq: Vec<f64> = loc.rows().into_iter().map(|r| r.iter().map(|a| a.norm_sqr()).sum()).collect();
    let gamma_r = signal_sq.iter().zip(&loc_row_sq).map(|(s, l)| 0.5 * (s + l)).collect();
    (signal_sq, loc_row_sq, gamma_r)
}

pub fn build_cavity_model(
    geom: &EnsembleGeometry,
    profile: &CavityBlockadeProfile,
    ctl: &ControlParams,
) -> Result<NonHermitianModel, EngineError> {
    let n = geom.n();
    if profile.n() != n {
        return Err(EngineError::DimensionMismatch { expected: n, got: profile.n() });
    }
    check_control(ctl, Variant::Cavity, n)?;
    if !(ctl.kappa_c > 0.0) {
        return Err(EngineError::InvalidArgument("kappa_c must be positive".into()));
    }
    let dim = 2 * n + 1;
    let s2k = (2.0 * ctl.kappa_c).sqrt();
    let mut source = vec![ZERO; dim];
    source[0] = Complex64::new(s2k, 0.0);
    let signal = profile.amp_kappa.clone();
    let loc = profile.amp_ge.clone();
    let (signal_sq, loc_row_sq, gamma_r) = dephasing_parts(&signal, &loc);
    let channels = vec![
        JumpChannel {
            kind: JumpKind::DecayCavityOrTransmit,
            amplitudes: ChannelAmplitudes::Output {
                slots: 0..1,
                coeffs: vec![Complex64::new(s2k, 0.0)],
                input_coeff: Complex64::new(-1.0, 0.0),
            },
            success_flag: false,
        },
        JumpChannel {
            kind: JumpKind::DecaySpontaneousControl,
            amplitudes: ChannelAmplitudes::PerSlot { slots: 1..n + 1, amplitude: (2.0 * ctl.gamma_ec).sqrt() },
            success_flag: false,
        },
        JumpChannel {
            kind: JumpKind::DephaseSignal,
            amplitudes: ChannelAmplitudes::RydbergVector(signal.clone()),
            success_flag: true,
        },
        JumpChannel {
            kind: JumpKind::DephaseLocalize,
            amplitudes: ChannelAmplitudes::RydbergMatrix(loc.clone()),
            success_flag: false,
        },
    ];
    NonHermitianModel {
        variant: Variant::Cavity,
        n,
        dim,
        ctl: ModelControl {
            gamma_ec: ctl.gamma_ec,
            kappa_c: ctl.kappa_c,
            omega_c: ctl.omega_c,
            delta_big: ctl.delta_big,
            delta_small: ctl.delta_small,
            coupling: ctl.g_c(),
        },
        source,
        channels,
        gamma_r,
        signal,
        signal_sq,
        loc_row_sq,
        loc,
    }
    .check()
}

pub fn build_freespace_model(
    geom: &EnsembleGeometry,
    profile: &FreeSpaceBlockadeProfile,
    ctl: &ControlParams,
) -> Result<NonHermitianModel, EngineError> {
    let n = geom.n();
    if !geom.is_propagation_ordered() {
        return Err(EngineError::InvalidArgument("atoms must be sorted along the propagation axis".into()));
    }
    if profile.n() != n {
        return Err(EngineError::DimensionMismatch { expected: n, got: profile.n() });
    }
    check_control(ctl, Variant::FreeSpace, n)?;
    let dim = 2 * n;
    let k = ctl.d_c1() * ctl.gamma_ec;
    let out = I * k.sqrt();
    let mut source = vec![ZERO; dim];
    for s in source.iter_mut().take(n) {
        *s = out;
    }
    let signal = profile.amp_dp.clone();
    let loc = profile.amp_ge.clone();
    let (signal_sq, loc_row_sq, gamma_r) = dephasing_parts(&signal, &loc);
    let channels = vec![
        JumpChannel {
            kind: JumpKind::DecayCavityOrTransmit,
            amplitudes: ChannelAmplitudes::Output {
                slots: 0..n,
                coeffs: vec![out; n],
                input_coeff: Complex64::new(1.0, 0.0),
            },
            success_flag: false,
        },
        JumpChannel {
            kind: JumpKind::DecaySpontaneousControl,
            amplitudes: ChannelAmplitudes::PerSlot { slots: 0..n, amplitude: (2.0 * ctl.gamma_ec).sqrt() },
            success_flag: false,
        },
        JumpChannel {
            kind: JumpKind::DephaseSignal,
            amplitudes: ChannelAmplitudes::RydbergVector(signal.clone()),
            success_flag: true,
        },
        JumpChannel {
            kind: JumpKind::DephaseLocalize,
            amplitudes: ChannelAmplitudes::RydbergMatrix(loc.clone()),
            success_flag: false,
        },
    ];
    NonHermitianModel {
        variant: Variant::FreeSpace,
        n,
        dim,
        ctl: ModelControl {
            gamma_ec: ctl.gamma_ec,
            kappa_c: ctl.kappa_c,
            omega_c: ctl.omega_c,
            delta_big: ctl.delta_big,
            delta_small: ctl.delta_small,
            coupling: k,
        },
        source,
        channels,
        gamma_r,
        signal,
        signal_sq,
        loc_row_sq,
        loc,
    }
    .check()
}
