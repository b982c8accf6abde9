//! Impedance matching by tuning the probe strength (and, unless fixed, the
//! two-photon detuning).
//!
//! The objective is the noiseless first-jump capture probability obtained
//! from the spectral steady-state response, which is the expectation of the
//! Monte-Carlo estimator for an untruncated pulse.

use serde::{Deserialize, Serialize};

use super::device::Device;
use crate::engine::spectral::spectral_first_segment_with;
use crate::engine::NonHermitianModel;
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha_in_sq: f64,
    pub delta_small: f64,
    pub p_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptimum {
    pub alpha_in_sq: f64,
    pub delta_small: f64,
    pub p_im: f64,
    /// `|α|²` at which the mean dephasing rate equals the analytic `γ_r*`.
    pub predicted_alpha: f64,
    pub curve: Vec<CurvePoint>,
    /// `(lo, hi)` probe strengths of a broad top region, if any.
    pub plateau: Option<(f64, f64)>,
}

/// Log-spaced grid of `points` values spanning `center/span ..= center·span`.
pub fn log_grid(center: f64, span: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![center];
    }
    let (lo, hi) = ((center / span).ln(), (center * span).ln());
    (0..points).map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()).collect()
}

pub const DEFAULT_GRID_POINTS: usize = 13;
pub const DEFAULT_GRID_SPAN: f64 = 4.0;

pub fn p_im_spectral(model: &NonHermitianModel, sigma: f64) -> f64 {
    // the pulse spectrum is far narrower than the capture resonance
    let w = spectral_first_segment_with(model, sigma, 8.0, 256);
    w.dephasing() / w.total()
}

/// Maximizes a unimodal-ish function on `[a, b]`: coarse scan, then golden
/// section inside the best bracket.
fn maximize(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const SCAN: usize = 9;
    let xs: Vec<f64> = (0..SCAN).map(|i| a + (b - a) * i as f64 / (SCAN - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let k = argmax(&ys);
    let (mut lo, mut hi) = (xs[k.saturating_sub(1)], xs[(k + 1).min(SCAN - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..30 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let (xm, fm) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if fm >= ys[k] {
        (xm, fm)
    } else {
        (xs[k], ys[k])
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[k] {
            k = i;
        }
    }
    k
}

/// Grid indices within 10% of the curve's range from its maximum, if they
/// number more than three.
pub fn detect_plateau(p: &[f64]) -> Option<(usize, usize)> {
    if p.is_empty() {
        return None;
    }
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = max - 0.1 * (max - min);
    let top: Vec<usize> = (0..p.len()).filter(|&i| p[i] >= cut).collect();
    if top.len() > 3 {
        Some((top[0], *top.last().unwrap()))
    } else {
        None
    }
}

/// Best detuning for one probe strength, searched on `[δ*/4, 2δ*]`.
pub fn optimize_delta(device: &Device, alpha_in_sq: f64, sigma: f64) -> (f64, f64) {
    if let Some(d) = device.spec.delta_small {
        return (d, p_im_spectral(&device.light_model(alpha_in_sq, d), sigma));
    }
    let d0 = device.im.delta_small_star;
    maximize(|d| p_im_spectral(&device.light_model(alpha_in_sq, d), sigma), 0.25 * d0, 2.0 * d0)
}

/// Evaluates the capture probability over `grid` (default: log-spaced around
/// the analytic prediction) and refines the maximum between its neighbours.
pub fn optimize_probe_strength(device: &Device, sigma: f64, grid: Option<&[f64]>) -> Result<ProbeOptimum, HarnessError> {
    let predicted_alpha = device.predicted_alpha();
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => log_grid(predicted_alpha, DEFAULT_GRID_SPAN, DEFAULT_GRID_POINTS),
    };
    if grid.len() < 3 || grid.iter().any(|a| !(*a > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::InvalidArgument("probe grid needs >= 3 increasing positive values".into()));
    }
    let curve: Vec<CurvePoint> = grid
        .iter()
        .map(|&a| {
            let (d, p) = optimize_delta(device, a, sigma);
            CurvePoint { alpha_in_sq: a, delta_small: d, p_im: p }
        })
        .collect();
    let ps: Vec<f64> = curve.iter().map(|c| c.p_im).collect();
    let k = argmax(&ps);
    let lo = curve[k.saturating_sub(1)].alpha_in_sq.ln();
    let hi = curve[(k + 1).min(curve.len() - 1)].alpha_in_sq.ln();
    let (la, p) = maximize(|la| optimize_delta(device, la.exp(), sigma).1, lo, hi);
    let (alpha, delta, p) = if p >= ps[k] {
        let a = la.exp();
        (a, optimize_delta(device, a, sigma).0, p)
    } else {
        (curve[k].alpha_in_sq, curve[k].delta_small, ps[k])
    };
    let plateau = detect_plateau(&ps).map(|(i, j)| (curve[i].alpha_in_sq, curve[j].alpha_in_sq));
    Ok(ProbeOptimum { alpha_in_sq: alpha, delta_small: delta, p_im: p, predicted_alpha, curve, plateau })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_quadratic() {
        let (x, y) = maximize(|x| 1.0 - (x - 0.3).powi(2), 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_rules() {
        assert_eq!(detect_plateau(&[0.1, 0.5, 0.9, 0.5, 0.1]), None);
        assert_eq!(detect_plateau(&[0.1, 0.95, 0.97, 0.98, 0.97, 0.2]), Some((1, 4)));
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(1.0, 4.0, 5);
        assert!((g[0] - 0.25).abs() < 1e-12 && (g[2] - 1.0).abs() < 1e-12 && (g[4] - 4.0).abs() < 1e-12);
    }
}
