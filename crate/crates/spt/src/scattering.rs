//! Closed-form control-branch scattering: reflection/transmission,
//! susceptibilities, capture probabilities and impedance-matching points.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::BlockadeError;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Cavity,
    FreeSpace,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Cavity => "cavity",
            Variant::FreeSpace => "freespace",
        })
    }
}

/// Control-branch parameters. `coupling` is the cooperativity `C_c` for the
/// cavity and the total optical depth `d_c` in free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub variant: Variant,
    pub coupling: f64,
    pub gamma_ec: f64,
    pub kappa_c: f64,
    pub omega_c: Complex64,
    pub delta_big: f64,
    pub delta_small: f64,
    pub gamma_r: f64,
    pub n_atoms: usize,
}

impl ControlParams {
    pub fn cavity(c_c: f64, omega_c: f64, delta_big: f64, delta_small: f64, gamma_r: f64, n_atoms: usize) -> Self {
        ControlParams {
            variant: Variant::Cavity,
            coupling: c_c,
            gamma_ec: 1.0,
            kappa_c: 1.0,
            omega_c: Complex64::new(omega_c, 0.0),
            delta_big,
            delta_small,
            gamma_r,
            n_atoms,
        }
    }

    pub fn free_space(d_c: f64, omega_c: f64, delta_big: f64, delta_small: f64, gamma_r: f64, n_atoms: usize) -> Self {
        ControlParams {
            variant: Variant::FreeSpace,
            coupling: d_c,
            gamma_ec: 1.0,
            kappa_c: 1.0,
            omega_c: Complex64::new(omega_c, 0.0),
            delta_big,
            delta_small,
            gamma_r,
            n_atoms,
        }
    }

    /// Single-atom control coupling `g_c = sqrt(C_c κ_c γ_ec / N)`.
    pub fn g_c(&self) -> f64 {
        (self.coupling * self.kappa_c * self.gamma_ec / self.n_atoms as f64).sqrt()
    }

    /// Single-atom control depth `d_c1 = d_c / N`.
    pub fn d_c1(&self) -> f64 {
        self.coupling / self.n_atoms as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureProbabilities {
    /// `|R_c|²` (cavity) or `|T_c|²` (free space).
    pub outgoing: f64,
    pub gamma_ec: f64,
    pub gamma_rc: f64,
}

impl CaptureProbabilities {
    pub fn total(&self) -> f64 {
        self.outgoing + self.gamma_ec + self.gamma_rc
    }
}

const SUM_RULE_TOL: f64 = 1e-10;

fn check_sum(c: CaptureProbabilities) -> Result<CaptureProbabilities, BlockadeError> {
    let err = (c.total() - 1.0).abs();
    if err > SUM_RULE_TOL {
        return Err(BlockadeError::SumRule(err));
    }
    Ok(c)
}

/// `(R_c, χ_ec, χ_rc)` of the cavity control branch.
pub fn cavity_control_coefficients(omega: f64, p: &ControlParams) -> (Complex64, Complex64, Complex64) {
    let g = p.g_c();
    let g2n = p.coupling * p.kappa_c * p.gamma_ec;
    let om2 = p.omega_c.norm_sqr();
    let e = Complex64::new(p.gamma_ec, p.delta_big - omega);
    let r = Complex64::new(p.gamma_r, p.delta_small - omega);
    let a = e + om2 / r;
    let den = Complex64::new(p.kappa_c, -omega) + g2n / a;
    let refl = (Complex64::new(p.kappa_c, omega) - g2n / a) / den;
    let s2k = (2.0 * p.kappa_c).sqrt();
    let chi_e = I * g * s2k / a / den;
    let chi_r = -p.omega_c.conj() * g * s2k / (e * r + om2) / den;
    (refl, chi_e, chi_r)
}

/// `(|R_c|², Γ_ec, Γ_rc)` with `Γ_ec = 2Nγ_ec|χ_ec|²` and `Γ_rc = 2γ_r N|χ_rc|²`.
pub fn cavity_capture_probabilities(omega: f64, p: &ControlParams) -> Result<CaptureProbabilities, BlockadeError> {
    let (r, chi_e, chi_r) = cavity_control_coefficients(omega, p);
    let n = p.n_atoms as f64;
    check_sum(CaptureProbabilities {
        outgoing: r.norm_sqr(),
        gamma_ec: 2.0 * n * p.gamma_ec * chi_e.norm_sqr(),
        gamma_rc: 2.0 * p.gamma_r * n * chi_r.norm_sqr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImConditions {
    pub gamma_r_star: f64,
    pub delta_small_star: f64,
    /// Set when the large-detuning assumption behind the conditions fails.
    pub warning: bool,
}

/// Factor by which `Δ` must exceed `(C_c + 1)γ_ec` before the cavity
/// conditions are considered well inside their regime of validity.
pub const CAVITY_DETUNING_MARGIN: f64 = 10.0;

pub fn cavity_impedance_conditions(c_c: f64, gamma_ec: f64, omega_c: f64, delta_big: f64) -> ImConditions {
    ImConditions {
        gamma_r_star: c_c * gamma_ec * omega_c * omega_c / (delta_big * delta_big),
        delta_small_star: omega_c * omega_c / delta_big,
        warning: delta_big.abs() < CAVITY_DETUNING_MARGIN * (c_c + 1.0) * gamma_ec,
    }
}

/// Resonant capture probabilities at the cavity impedance-matching point in
/// the large-detuning limit: `|R|² = 1/(2C+1)²`, `Γ_ec = 4C/(2C+1)²`,
/// `Γ_rc = 1/(1 + 1/C + 1/(2C)²)`.
pub fn cavity_im_resonant(c_c: f64) -> CaptureProbabilities {
    let d = (2.0 * c_c + 1.0).powi(2);
    CaptureProbabilities {
        outgoing: 1.0 / d,
        gamma_ec: 4.0 * c_c / d,
        gamma_rc: 1.0 / (1.0 + 1.0 / c_c + 1.0 / (2.0 * c_c).powi(2)),
    }
}

/// `(T_c, χ_ec, χ_rc)` of the free-space control branch.
pub fn fs_control_coefficients(omega: f64, p: &ControlParams) -> (Complex64, Complex64, Complex64) {
    let (t, den, r) = fs_parts(omega, p);
    let sd = p.d_c1().sqrt();
    let chi_e = I * sd * r / den * t;
    let chi_r = -sd * p.omega_c.conj() / den * t;
    (t, chi_e, chi_r)
}

fn fs_parts(omega: f64, p: &ControlParams) -> (Complex64, Complex64, Complex64) {
    let om2 = p.omega_c.norm_sqr();
    let e = Complex64::new(p.gamma_ec, p.delta_big - omega);
    let r = Complex64::new(p.gamma_r, p.delta_small - omega);
    let den = e * r + om2;
    let t = (-(p.gamma_ec * p.coupling * r / den)).exp();
    (t, den, r)
}

/// `(|T_c|², Γ_ec, Γ_rc)`, with the absorbed fraction `1 − |T_c|²` split
/// between excited-state decay and Rydberg dephasing in proportion to their
/// local loss rates `γ_ec|γ_r + i(δ−ω)|²` and `γ_r|Ω_c|²`, which is the
/// medium-integrated form of `2γ|χ|²`.
pub fn fs_capture_probabilities(omega: f64, p: &ControlParams) -> Result<CaptureProbabilities, BlockadeError> {
    let (t, _, r) = fs_parts(omega, p);
    let t2 = t.norm_sqr();
    let x_e = p.gamma_ec * r.norm_sqr();
    let x_r = p.gamma_r * p.omega_c.norm_sqr();
    let absorbed = 1.0 - t2;
    let (ge, gr) = if x_e + x_r == 0.0 {
        (0.0, 0.0)
    } else {
        (absorbed * x_e / (x_e + x_r), absorbed * x_r / (x_e + x_r))
    };
    check_sum(CaptureProbabilities { outgoing: t2, gamma_ec: ge, gamma_rc: gr })
}

pub fn fs_impedance_conditions(d_c: f64, gamma_ec: f64, omega_c: f64, delta_big: f64) -> ImConditions {
    ImConditions {
        gamma_r_star: d_c * gamma_ec * omega_c * omega_c / (2.0 * delta_big * delta_big),
        delta_small_star: omega_c * omega_c / delta_big,
        warning: delta_big.abs() <= d_c.sqrt() * gamma_ec,
    }
}

/// Resonant large-depth estimates at the free-space impedance-matching point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsImEstimate {
    pub transmittance: f64,
    pub gamma_ec: f64,
    pub gamma_rc: f64,
    /// `(d/2)/(1 + d/2)`, the large-depth limit of `Γ_rc`.
    pub prefactor: f64,
}

pub fn fs_im_resonant(d_c: f64, gamma_ec: f64, delta_big: f64) -> FsImEstimate {
    let h = 1.0 + d_c / 2.0;
    let expo = gamma_ec * gamma_ec * d_c.powi(3) / (4.0 * delta_big * delta_big) + d_c * d_c / 2.0 + d_c;
    let t2 = (-2.0 * expo / (h * h)).exp();
    FsImEstimate {
        transmittance: t2,
        gamma_ec: (1.0 - t2) / h,
        gamma_rc: (d_c / 2.0) / h * (1.0 - t2),
        prefactor: (d_c / 2.0) / h,
    }
}

pub fn capture_probabilities(omega: f64, p: &ControlParams) -> Result<CaptureProbabilities, BlockadeError> {
    match p.variant {
        Variant::Cavity => cavity_capture_probabilities(omega, p),
        Variant::FreeSpace => fs_capture_probabilities(omega, p),
    }
}

pub fn impedance_conditions(p: &ControlParams) -> ImConditions {
    let om = p.omega_c.norm();
    match p.variant {
        Variant::Cavity => cavity_impedance_conditions(p.coupling, p.gamma_ec, om, p.delta_big),
        Variant::FreeSpace => fs_impedance_conditions(p.coupling, p.gamma_ec, om, p.delta_big),
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn omega_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Writes `omega, reflectance_or_transmittance, gamma_ec_prob, gamma_rc_prob`.
pub fn write_spectrum_csv<W: Write>(mut w: W, omegas: &[f64], p: &ControlParams) -> Result<(), BlockadeError> {
    let io = |e: std::io::Error| BlockadeError::InvalidArgument(e.to_string());
    writeln!(w, "omega,reflectance_or_transmittance,gamma_ec_prob,gamma_rc_prob").map_err(io)?;
    for &om in omegas {
        let c = capture_probabilities(om, p)?;
        writeln!(w, "{om},{},{},{}", c.outgoing, c.gamma_ec, c.gamma_rc).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cavity_limits() {
        let p = ControlParams::cavity(10.0, 0.0, 30.0, 0.2, 0.3, 50);
        let (_, _, chi_r) = cavity_control_coefficients(0.7, &p);
        assert_eq!(chi_r, Complex64::new(0.0, 0.0));
        let empty = ControlParams { coupling: 0.0, ..ControlParams::cavity(10.0, 5.0, 30.0, 0.2, 0.3, 50) };
        for om in [-3.0, 0.0, 0.4, 9.0] {
            let (r, _, _) = cavity_control_coefficients(om, &empty);
            let expect = Complex64::new(1.0, om) / Complex64::new(1.0, -om);
            assert_relative_eq!(r.re, expect.re, epsilon = 1e-14);
            assert_relative_eq!(r.im, expect.im, epsilon = 1e-14);
            assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn no_dephasing_no_capture() {
        let p = ControlParams::cavity(20.0, 5.0, 180.0, 0.1, 0.0, 100);
        let c = cavity_capture_probabilities(0.3, &p).unwrap();
        assert_eq!(c.gamma_rc, 0.0);
        assert_relative_eq!(c.outgoing + c.gamma_ec, 1.0, epsilon = 1e-12);
        let p = ControlParams::free_space(20.0, 2.0, 40.0, 0.1, 0.0, 100);
        assert_eq!(fs_capture_probabilities(0.3, &p).unwrap().gamma_rc, 0.0);
    }

    #[test]
    fn im_conditions() {
        let c = cavity_impedance_conditions(100.0, 1.0, 5.0, 180.0);
        assert_relative_eq!(c.gamma_r_star, 2500.0 / 32400.0, epsilon = 1e-15);
        assert_relative_eq!(c.delta_small_star, 25.0 / 180.0, epsilon = 1e-15);
        assert!(c.warning);
        let d = cavity_impedance_conditions(100.0, 1.0, 5.0, 360.0);
        assert_relative_eq!(d.gamma_r_star, c.gamma_r_star / 4.0, epsilon = 1e-15);
        assert_relative_eq!(d.delta_small_star, c.delta_small_star / 2.0, epsilon = 1e-15);
        assert_eq!(cavity_impedance_conditions(100.0, 1.0, 0.0, 180.0).gamma_r_star, 0.0);

        let f = fs_impedance_conditions(100.0, 1.0, 2.0, 40.0);
        assert_relative_eq!(f.gamma_r_star, 0.125, epsilon = 1e-15);
        assert_relative_eq!(f.delta_small_star, 0.1, epsilon = 1e-15);
        assert!(!f.warning);
        assert_relative_eq!(f.gamma_r_star, 0.5 * cavity_impedance_conditions(100.0, 1.0, 2.0, 40.0).gamma_r_star);
    }

    #[test]
    fn fs_estimates() {
        let e = fs_im_resonant(100.0, 1.0, 40.0);
        assert_relative_eq!(e.transmittance, 1.76e-2, max_relative = 1e-2);
        assert_relative_eq!(e.gamma_rc, 0.963, epsilon = 1e-3);
        assert_relative_eq!(e.prefactor, 50.0 / 51.0, epsilon = 1e-15);
        // the exponent saturates at 4 for large depth
        assert_relative_eq!(fs_im_resonant(1e7, 1.0, 1e7).gamma_rc, 1.0 - (-4.0f64).exp(), max_relative = 1e-5);
        let p = ControlParams::free_space(0.0, 2.0, 40.0, 0.1, 0.125, 100);
        assert_eq!(fs_control_coefficients(0.0, &p).0, Complex64::new(1.0, 0.0));
        let p = ControlParams::free_space(100.0, 0.0, 40.0, 0.1, 0.125, 100);
        assert_eq!(fs_control_coefficients(0.0, &p).2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn spectrum_csv_rows() {
        let p = ControlParams::cavity(100.0, 5.0, 180.0, 0.1389, 0.0772, 1000);
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &omega_grid(-1.0, 1.0, 5), &p).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 6);
        assert!(s.starts_with("omega,reflectance_or_transmittance"));
    }
}
