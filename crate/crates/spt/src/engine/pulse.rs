use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use libm::erf;

/// Gaussian single-photon input `c_in(t) = A exp(−(t − t_0 − t_m)²/(4σ²))`
/// on the window `[t_0, t_0 + t_tot]`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub sigma: f64,
    pub t_m: f64,
    pub t_0: f64,
    pub t_tot: f64,
    /// Normalization constant; [`PulseSpec::new`] sets it so that the window
    /// carries exactly one photon.
    pub amplitude: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec::new(160.0, 500.0, 0.0, 1000.0)
    }
}

impl PulseSpec {
    pub fn new(sigma: f64, t_m: f64, t_0: f64, t_tot: f64) -> Self {
        let mut p = PulseSpec { sigma, t_m, t_0, t_tot, amplitude: 1.0 };
        p.amplitude = 1.0 / p.window_weight(t_0).sqrt();
        p
    }

    /// `(2πσ²)^{-1/4}`, the amplitude normalizing an untruncated pulse.
    pub fn untruncated_amplitude(&self) -> f64 {
        (2.0 * PI * self.sigma * self.sigma).powf(-0.25)
    }

    pub fn t_end(&self) -> f64 {
        self.t_0 + self.t_tot
    }

    fn centre(&self) -> f64 {
        self.t_0 + self.t_m
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        if t < self.t_0 || t > self.t_end() {
            return 0.0;
        }
        let x = t - self.centre();
        self.amplitude * (-x * x / (4.0 * self.sigma * self.sigma)).exp()
    }

    pub fn pulse_amplitude(&self, t: f64) -> Complex64 {
        Complex64::new(self.amplitude_at(t), 0.0)
    }

    /// `∫_t^{t_end} exp(−(t' − t_c)²/(2σ²)) dt'` for unit amplitude.
    fn window_weight(&self, t: f64) -> f64 {
        let t = t.clamp(self.t_0, self.t_end());
        let s = std::f64::consts::SQRT_2 * self.sigma;
        let c = self.centre();
        self.sigma * (PI / 2.0).sqrt() * (erf((self.t_end() - c) / s) - erf((t - c) / s))
    }

    /// Photon number still to enter the system after time `t`.
    pub fn remaining(&self, t: f64) -> f64 {
        if t >= self.t_end() {
            return 0.0;
        }
        self.amplitude * self.amplitude * self.window_weight(t)
    }
}
