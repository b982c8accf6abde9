//! Brute-force reference constructions shared by the integration tests.
//!
//! Everything here is assembled from dense operators and direct sums, without
//! touching the library's matrix-free generator or its blockade recurrences.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C;
use rydberg_spt::engine::JumpKind;
use rydberg_spt::geometry::{EnsembleGeometry, GeometryKind};

pub const I: C = C::new(0.0, 1.0);
pub const ZERO: C = C::new(0.0, 0.0);

pub fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// A jump operator. Decays map into the empty sector and are a bra plus the
/// input coefficient; dephasings are diagonal on the Rydberg states.
pub enum OracleOp {
    Decay { kind: JumpKind, bra: Vec<C>, input: C },
    Dephase { kind: JumpKind, atom: Option<usize>, diag: Vec<C> },
}

pub struct Oracle {
    pub h: Array2<C>,
    pub ops: Vec<OracleOp>,
    pub source: Vec<C>,
    pub r0: usize,
}

impl Oracle {
    /// `H_control − (i/2) Σ L†L`.
    fn assemble(h_control: Array2<C>, ops: Vec<OracleOp>, source: Vec<C>, r0: usize) -> Self {
        let mut h = h_control;
        let dim = h.nrows();
        for op in &ops {
            match op {
                OracleOp::Decay { bra, .. } => {
                    for a in 0..dim {
                        for b in 0..dim {
                            h[[a, b]] -= 0.5 * I * bra[a].conj() * bra[b];
                        }
                    }
                }
                OracleOp::Dephase { diag, .. } => {
                    for a in 0..dim {
                        h[[a, a]] -= 0.5 * I * diag[a].norm_sqr();
                    }
                }
            }
        }
        Oracle { h, ops, source, r0 }
    }

    /// Summed weights `‖L ψ + b c_in‖²` per jump kind.
    pub fn weights(&self, psi: &[C], c_in: C) -> [f64; 4] {
        let mut w = [0.0; 4];
        for op in &self.ops {
            match op {
                OracleOp::Decay { kind, bra, input } => {
                    let amp: C = bra.iter().zip(psi).map(|(a, p)| a * p).sum::<C>() + input * c_in;
                    w[kind.index()] += amp.norm_sqr();
                }
                OracleOp::Dephase { kind, diag, .. } => {
                    w[kind.index()] += diag.iter().zip(psi).map(|(a, p)| (a * p).norm_sqr()).sum::<f64>();
                }
            }
        }
        w
    }

    /// Normalized `L ψ` for a dephasing operator.
    pub fn post_jump(&self, kind: JumpKind, atom: Option<usize>, psi: &[C]) -> Vec<C> {
        for op in &self.ops {
            if let OracleOp::Dephase { kind: k, atom: a, diag } = op {
                if *k == kind && *a == atom {
                    let v: Vec<C> = diag.iter().zip(psi).map(|(d, p)| d * p).collect();
                    let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    return v.into_iter().map(|x| x / n).collect();
                }
            }
        }
        panic!("no operator {kind:?} {atom:?}");
    }
}

pub fn pair_v(geom: &EnsembleGeometry, k: usize, l: usize) -> f64 {
    let (a, b) = (geom.positions[k], geom.positions[l]);
    let r2: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
    geom.c6 / r2.powi(3)
}

pub fn line_geometry(xs: &[f64], c6: f64) -> EnsembleGeometry {
    EnsembleGeometry {
        positions: xs.iter().map(|&x| [x, 0.0, 0.0]).collect(),
        c6,
        kind: GeometryKind::Gaussian1D,
        seed: 0,
    }
}

pub struct CavityInputs {
    pub c_c: f64,
    pub omega_c: f64,
    pub delta_big: f64,
    pub delta_small: f64,
    pub c_p: f64,
    pub omega_p: f64,
    pub alpha_in_sq: f64,
}

/// Cavity model with `κ = γ = 1` for both branches.
pub fn cavity_oracle(geom: &EnsembleGeometry, p: &CavityInputs) -> Oracle {
    let n = geom.n();
    let dim = 2 * n + 1;
    let (e, r) = (|l: usize| 1 + l, |l: usize| 1 + n + l);
    let g_c = (p.c_c / n as f64).sqrt();
    let g_p = (p.c_p / n as f64).sqrt();
    let sa = p.alpha_in_sq.sqrt();
    let om2 = p.omega_p * p.omega_p;

    let mut h = Array2::<C>::zeros((dim, dim));
    for l in 0..n {
        h[[0, e(l)]] = re(g_c);
        h[[e(l), 0]] = re(g_c);
        h[[e(l), e(l)]] = re(p.delta_big);
        h[[e(l), r(l)]] = re(p.omega_c);
        h[[r(l), e(l)]] = re(p.omega_c);
        h[[r(l), r(l)]] = re(p.delta_small);
    }

    let mut out = vec![ZERO; dim];
    out[0] = re(2f64.sqrt());
    let mut ops = vec![OracleOp::Decay { kind: JumpKind::DecayCavityOrTransmit, bra: out, input: re(-1.0) }];
    for l in 0..n {
        let mut bra = vec![ZERO; dim];
        bra[e(l)] = re(2f64.sqrt());
        ops.push(OracleOp::Decay { kind: JumpKind::DecaySpontaneousControl, bra, input: ZERO });
    }

    // Blockaded cooperativities and the two probe-loss families.
    let cb1 = |k: usize, l: usize| g_p * g_p / (1.0 + om2 / (I * pair_v(geom, k, l)));
    let cb: Vec<C> = (0..n).map(|k| (0..n).filter(|&l| l != k).map(|l| cb1(k, l)).sum()).collect();
    let mut sig = vec![ZERO; dim];
    for k in 0..n {
        sig[r(k)] = -sa * cb[k] / (1.0 + cb[k]);
    }
    ops.push(OracleOp::Dephase { kind: JumpKind::DephaseSignal, atom: None, diag: sig });
    for l in 0..n {
        let mut diag = vec![ZERO; dim];
        for k in 0..n {
            if k != l {
                diag[r(k)] = 2.0 * I * g_p * sa / ((1.0 + om2 / (I * pair_v(geom, k, l))) * (1.0 + cb[k]));
            }
        }
        ops.push(OracleOp::Dephase { kind: JumpKind::DephaseLocalize, atom: Some(l), diag });
    }
    let mut source = vec![ZERO; dim];
    source[0] = re(2f64.sqrt());
    Oracle::assemble(h, ops, source, 1 + n)
}

pub struct FreeSpaceInputs {
    pub d_c: f64,
    pub omega_c: f64,
    pub delta_big: f64,
    pub delta_small: f64,
    pub d_p: f64,
    pub omega_p: f64,
    pub alpha_in_sq: f64,
}

/// Free-space cascaded model with `γ = 1`; atoms in the given order.
pub fn freespace_oracle(geom: &EnsembleGeometry, p: &FreeSpaceInputs) -> Oracle {
    let n = geom.n();
    let dim = 2 * n;
    let (e, r) = (|l: usize| l, |l: usize| n + l);
    let k1 = p.d_c / n as f64;
    let d1p = p.d_p / n as f64;
    let sa = p.alpha_in_sq.sqrt();
    let om2 = p.omega_p * p.omega_p;

    let mut h = Array2::<C>::zeros((dim, dim));
    for l in 0..n {
        h[[e(l), e(l)]] = re(p.delta_big);
        h[[e(l), r(l)]] = re(p.omega_c);
        h[[r(l), e(l)]] = re(p.omega_c);
        h[[r(l), r(l)]] = re(p.delta_small);
        // Chiral exchange through the forward mode.
        for m in 0..l {
            h[[e(l), e(m)]] += -0.5 * I * k1;
            h[[e(m), e(l)]] += 0.5 * I * k1;
        }
    }

    let mut out = vec![ZERO; dim];
    for l in 0..n {
        out[e(l)] = I * k1.sqrt();
    }
    let mut ops = vec![OracleOp::Decay { kind: JumpKind::DecayCavityOrTransmit, bra: out.clone(), input: re(1.0) }];
    for l in 0..n {
        let mut bra = vec![ZERO; dim];
        bra[e(l)] = re(2f64.sqrt());
        ops.push(OracleOp::Decay { kind: JumpKind::DecaySpontaneousControl, bra, input: ZERO });
    }

    let d = |k: usize, l: usize| if k == l { ZERO } else { d1p / (1.0 + om2 / (I * pair_v(geom, k, l))) };
    // D^{kl} by the direct double sum.
    let att = |k: usize, l: usize| -> C {
        let mut s = ZERO;
        for lp in 0..=l {
            let expo: C = (lp..=l).map(|m| d(k, m)).sum();
            s += d(k, lp) * (-expo).exp();
        }
        s - 1.0
    };
    let a = |k: usize, l: usize| -I * (2.0 / d1p).sqrt() * sa * d(k, l) * att(k, l);
    let mut sig = vec![ZERO; dim];
    for k in 0..n {
        sig[r(k)] = d1p.sqrt() * (0..n).filter(|&l| l != k).map(|l| a(k, l)).sum::<C>();
    }
    ops.push(OracleOp::Dephase { kind: JumpKind::DephaseSignal, atom: None, diag: sig });
    for l in 0..n {
        let mut diag = vec![ZERO; dim];
        for k in 0..n {
            if k != l {
                diag[r(k)] = a(k, l);
            }
        }
        ops.push(OracleOp::Dephase { kind: JumpKind::DephaseLocalize, atom: Some(l), diag });
    }
    Oracle::assemble(h, ops, out, n)
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_spt::cavity::{blockade_profile, CavityProbeParams};
use rydberg_spt::engine::{build_cavity_model, build_freespace_model, jump_probabilities, select_and_apply_jump, NonHermitianModel};
use rydberg_spt::freespace::{fs_blockade_profile, FreeSpaceProbeParams};
use rydberg_spt::scattering::{ControlParams, Variant};

/// Largest deviations between library and oracle for one random instance.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleDiff {
    pub generator: f64,
    pub weights: f64,
    pub post_jump: f64,
    pub jumps_checked: usize,
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C> {
    let v: Vec<C> = (0..dim).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// A random `n`-atom instance built by the library and by the oracle.
pub fn random_instance(variant: Variant, n: usize, rng: &mut ChaCha8Rng) -> (NonHermitianModel, Oracle) {
    let mut xs: Vec<f64> = (0..n).map(|i| i as f64 + rng.random_range(-0.3..0.3)).collect();
    xs.sort_by(f64::total_cmp);
    let geom = line_geometry(&xs, rng.random_range(5.0..200.0));
    let alpha = rng.random_range(0.05..1.0);
    let (omega_c, delta_big, delta_small, omega_p) =
        (rng.random_range(1.0..6.0), rng.random_range(20.0..200.0), rng.random_range(0.0..0.3), rng.random_range(2.0..10.0));
    let coupling = rng.random_range(1.0..100.0);
    let probe = rng.random_range(1.0..100.0);
    match variant {
        Variant::Cavity => {
            let pp = CavityProbeParams::from_cooperativity(probe, 1.0, 1.0, omega_p, alpha, n);
            let prof = blockade_profile(&geom, &pp).unwrap();
            let ctl = ControlParams::cavity(coupling, omega_c, delta_big, delta_small, 0.0, n);
            let inputs = CavityInputs { c_c: coupling, omega_c, delta_big, delta_small, c_p: probe, omega_p, alpha_in_sq: alpha };
            (build_cavity_model(&geom, &prof, &ctl).unwrap(), cavity_oracle(&geom, &inputs))
        }
        Variant::FreeSpace => {
            let pp = FreeSpaceProbeParams::from_depth(probe, 1.0, omega_p, alpha, n);
            let prof = fs_blockade_profile(&geom, &pp).unwrap();
            let ctl = ControlParams::free_space(coupling, omega_c, delta_big, delta_small, 0.0, n);
            let inputs =
                FreeSpaceInputs { d_c: coupling, omega_c, delta_big, delta_small, d_p: probe, omega_p, alpha_in_sq: alpha };
            (build_freespace_model(&geom, &prof, &ctl).unwrap(), freespace_oracle(&geom, &inputs))
        }
    }
}

/// Random model only.
pub fn random_model(variant: Variant, n: usize, seed: u64) -> NonHermitianModel {
    random_instance(variant, n, &mut ChaCha8Rng::seed_from_u64(seed)).0
}

/// Builds a random `n`-atom instance of `variant` both ways and compares.
pub fn compare_with_oracle(variant: Variant, n: usize, seed: u64) -> OracleDiff {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (model, oracle) = random_instance(variant, n, &mut rng);
    let mut diff = OracleDiff::default();
    let h = model.generator_dense();
    diff.generator = h.iter().zip(oracle.h.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    diff.generator = diff.generator.max(max_diff(&model.source, &oracle.source));
    for trial in 0..40 {
        let psi = random_state(&mut rng, model.dim);
        let c_in = C::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let w = jump_probabilities(&model, &psi, c_in);
        let wo = oracle.weights(&psi, c_in);
        for i in 0..4 {
            diff.weights = diff.weights.max((w.0[i] - wo[i]).abs());
        }
        let mut jrng = ChaCha8Rng::seed_from_u64(seed ^ trial);
        let mut after = psi.clone();
        let ev = select_and_apply_jump(&model, &mut after, 1.0, c_in, 0.5, &mut jrng).unwrap();
        if !ev.channel.is_decay() {
            let atom = if ev.channel == JumpKind::DephaseSignal { None } else { ev.atom };
            let want = oracle.post_jump(ev.channel, atom, &psi);
            diff.post_jump = diff.post_jump.max(max_diff(&after, &want));
            diff.jumps_checked += 1;
        }
    }
    diff
}
