//! Assembly of a complete device (geometry, calibrated blockade, control
//! branch) from a compact description.

use serde::{Deserialize, Serialize};

use crate::cavity::{blockade_profile, CavityProbeParams};
use crate::engine::{build_cavity_model, build_freespace_model, NonHermitianModel};
use crate::error::HarnessError;
use crate::freespace::{fs_blockade_profile, FreeSpaceProbeParams};
use crate::geometry::{calibrate_c6, gaussian_positions, ring_positions, EnsembleGeometry, GeometryKind};
use crate::scattering::{impedance_conditions, ControlParams, ImConditions, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub n_atoms: usize,
    /// Ring nearest-neighbour distance.
    #[serde(default = "unit")]
    pub spacing: f64,
    /// Gaussian standard deviations, one value or one per axis.
    #[serde(default = "unit_widths")]
    pub widths: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn unit() -> f64 {
    1.0
}

fn unit_widths() -> Vec<f64> {
    vec![1.0]
}

impl GeometrySpec {
    pub fn ring(n_atoms: usize) -> Self {
        GeometrySpec { kind: GeometryKind::Ring, n_atoms, spacing: 1.0, widths: unit_widths(), seed: 0 }
    }

    pub fn gaussian(kind: GeometryKind, n_atoms: usize, seed: u64) -> Self {
        GeometrySpec { kind, n_atoms, spacing: 1.0, widths: unit_widths(), seed }
    }

    /// Positions with `c6 = 1`.
    pub fn positions(&self) -> Result<EnsembleGeometry, HarnessError> {
        Ok(match self.kind {
            GeometryKind::Ring => ring_positions(self.n_atoms, self.spacing)?,
            k => gaussian_positions(self.n_atoms, &self.widths, k.dim(), self.seed)?,
        })
    }
}

/// All physical inputs of one operating point, in units of `γ_ec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub variant: Variant,
    pub geometry: GeometrySpec,
    /// `C_c` in the cavity, `d_c` in free space.
    pub coupling: f64,
    /// `C_p` or `d_p`; defaults to `coupling`.
    #[serde(default)]
    pub probe_coupling: Option<f64>,
    /// Target for the ensemble mean of `Re C_b,p` or `Re d_b,p`.
    pub blockade_target: f64,
    pub delta_big: f64,
    pub omega_c: f64,
    pub omega_p: f64,
    /// Fixed two-photon detuning; optimized when absent.
    #[serde(default)]
    pub delta_small: Option<f64>,
    /// Fixed probe strength `|α_in,p|²`; optimized when absent.
    #[serde(default)]
    pub alpha_in_sq: Option<f64>,
}

impl DeviceSpec {
    pub fn cavity_default(n_atoms: usize, c_c: f64, blockade_target: f64) -> Self {
        DeviceSpec {
            variant: Variant::Cavity,
            geometry: GeometrySpec::ring(n_atoms),
            coupling: c_c,
            probe_coupling: None,
            blockade_target,
            delta_big: 180.0,
            omega_c: 5.0,
            omega_p: 10.0,
            delta_small: None,
            alpha_in_sq: None,
        }
    }

    pub fn free_space_default(n_atoms: usize, d_c: f64, blockade_target: f64, seed: u64) -> Self {
        DeviceSpec {
            variant: Variant::FreeSpace,
            geometry: GeometrySpec::gaussian(GeometryKind::Gaussian1D, n_atoms, seed),
            coupling: d_c,
            probe_coupling: None,
            blockade_target,
            delta_big: 40.0,
            omega_c: 2.0,
            omega_p: 10.0,
            delta_small: None,
            alpha_in_sq: None,
        }
    }

    pub fn probe_coupling(&self) -> f64 {
        self.probe_coupling.unwrap_or(self.coupling)
    }

    pub fn control(&self, delta_small: f64, gamma_r: f64) -> ControlParams {
        let n = self.geometry.n_atoms;
        match self.variant {
            Variant::Cavity => ControlParams::cavity(self.coupling, self.omega_c, self.delta_big, delta_small, gamma_r, n),
            Variant::FreeSpace => {
                ControlParams::free_space(self.coupling, self.omega_c, self.delta_big, delta_small, gamma_r, n)
            }
        }
    }

    pub fn im_conditions(&self) -> ImConditions {
        impedance_conditions(&self.control(0.0, 0.0))
    }
}

/// A built device. The stored model has `|α_in,p|² = 1`; other probe
/// strengths rescale its dephasing amplitudes by `sqrt(α)`.
#[derive(Debug, Clone)]
pub struct Device {
    pub spec: DeviceSpec,
    pub geometry: EnsembleGeometry,
    pub blockade_radius: f64,
    pub im: ImConditions,
    /// Ensemble mean `γ_r^k` per unit `|α_in,p|²`.
    pub gamma_r_per_alpha: f64,
    unit_model: NonHermitianModel,
    /// Same, without the jump-operator matrices; enough for spectral weights.
    light_model: NonHermitianModel,
}

impl Device {
    pub fn build(spec: &DeviceSpec) -> Result<Self, HarnessError> {
        if !(spec.coupling > 0.0) || !(spec.blockade_target > 0.0) {
            return Err(HarnessError::InvalidArgument("coupling and blockade target must be > 0".into()));
        }
        let raw = spec.geometry.positions()?;
        let n = raw.n();
        let im = spec.im_conditions();
        let delta0 = spec.delta_small.unwrap_or(im.delta_small_star);
        let ctl = spec.control(delta0, im.gamma_r_star);
        let (geometry, blockade_radius, unit_model) = match spec.variant {
            Variant::Cavity => {
                let probe = CavityProbeParams::from_cooperativity(spec.probe_coupling(), 1.0, 1.0, spec.omega_p, 1.0, n);
                let c6 = calibrate_c6(&raw, spec.blockade_target, &probe)?;
                let geom = raw.with_c6(c6);
                let prof = blockade_profile(&geom, &probe)?;
                let model = build_cavity_model(&geom, &prof, &ctl)?;
                (geom, probe.blockade_radius(c6), model)
            }
            Variant::FreeSpace => {
                let probe = FreeSpaceProbeParams::from_depth(spec.probe_coupling(), 1.0, spec.omega_p, 1.0, n);
                let c6 = calibrate_c6(&raw, spec.blockade_target, &probe)?;
                let geom = raw.with_c6(c6);
                let prof = fs_blockade_profile(&geom, &probe)?;
                let model = build_freespace_model(&geom, &prof, &ctl)?;
                (geom, probe.blockade_radius(c6), model)
            }
        };
        let gamma_r_per_alpha = unit_model.gamma_r.iter().sum::<f64>() / n as f64;
        let mut light_model = unit_model.clone();
        light_model.channels.clear();
        light_model.loc = ndarray::Array2::zeros((0, 0));
        Ok(Device { spec: spec.clone(), geometry, blockade_radius, im, gamma_r_per_alpha, unit_model, light_model })
    }

    /// Probe strength whose mean dephasing rate equals the analytic `γ_r*`.
    pub fn predicted_alpha(&self) -> f64 {
        self.im.gamma_r_star / self.gamma_r_per_alpha
    }

    pub fn model(&self, alpha_in_sq: f64, delta_small: f64) -> NonHermitianModel {
        let mut m = self.unit_model.with_dephasing_scale(alpha_in_sq.sqrt());
        m.set_delta_small(delta_small);
        m
    }

    /// A cheap model valid for deterministic evolution and channel weights
    /// but not for applying localizing jumps.
    pub fn light_model(&self, alpha_in_sq: f64, delta_small: f64) -> NonHermitianModel {
        let mut m = self.light_model.with_dephasing_scale(alpha_in_sq.sqrt());
        m.set_delta_small(delta_small);
        m
    }
}
