//! TOML run configuration and the named presets.

use std::path::{Path, PathBuf};

use rydberg_spt::engine::{PulseSpec, TrajectoryOptions};
use rydberg_spt::geometry::GeometryKind;
use rydberg_spt::harness::{DeviceSpec, GeometrySpec, SweepSpec};
use rydberg_spt::scattering::Variant;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Atom number of the desk-scale presets.
pub const DESK_ATOMS: usize = 200;
/// Atom number of the full-scale presets.
pub const FULL_ATOMS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub sigma: f64,
    pub t_m: f64,
    pub t_0: f64,
    pub t_tot: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            sigma: 160.0,
            t_m: 500.0,
            t_0: 0.0,
            t_tot: 1000.0,
        }
    }
}

impl PulseConfig {
    pub fn spec(&self) -> PulseSpec {
        PulseSpec::new(self.sigma, self.t_m, self.t_0, self.t_tot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub couplings: Vec<f64>,
    pub blockade_targets: Vec<f64>,
    /// Probe strengths swept as an axis; optimized per point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_values: Option<Vec<f64>>,
    /// Grid searched by the probe-strength optimization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            omega_min: -2.0,
            omega_max: 2.0,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<PathBuf>,
}

fn default_n_traj() -> usize {
    300
}
fn default_dt() -> f64 {
    1e-3
}
fn default_threshold() -> u32 {
    3
}
fn default_tail() -> f64 {
    3000.0
}

/// Complete run description. Rates are in units of `γ_ec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// 0 lets the thread pool decide.
    #[serde(default)]
    pub workers: usize,
    /// Signal jumps needed for a detected control photon.
    #[serde(default = "default_threshold")]
    pub threshold: u32,
    #[serde(default = "default_tail")]
    pub timeout_tail: f64,
    pub device: DeviceSpec,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub analytic: AnalyticConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let d = &self.device;
        if self.n_traj == 0 {
            return bad("n_traj must be >= 1");
        }
        if !(self.dt > 0.0 && self.dt < 0.1) {
            return bad("dt must lie in (0, 0.1)");
        }
        if !(self.timeout_tail >= 0.0) {
            return bad("timeout_tail must be >= 0");
        }
        if d.geometry.n_atoms < 2 {
            return bad("device.geometry.n_atoms must be >= 2");
        }
        if !(d.coupling >= 0.0) || !(d.blockade_target > 0.0) {
            return bad("device.coupling must be >= 0 and device.blockade_target > 0");
        }
        if !(d.omega_c >= 0.0 && d.omega_p > 0.0 && d.delta_big.is_finite()) {
            return bad("device drive parameters out of range");
        }
        if d.alpha_in_sq.is_some_and(|a| !(a > 0.0)) {
            return bad("device.alpha_in_sq must be > 0");
        }
        if d.variant == Variant::FreeSpace && d.geometry.kind != GeometryKind::Gaussian1D {
            return bad(
                "free-space devices need a gaussian1d geometry ordered along the propagation axis",
            );
        }
        let p = &self.pulse;
        if !(p.sigma > 0.0 && p.t_tot > 0.0 && p.t_m >= 0.0 && p.t_m <= p.t_tot) {
            return bad("pulse needs sigma > 0, t_tot > 0 and 0 <= t_m <= t_tot");
        }
        if let Some(s) = &self.sweep {
            if s.couplings.is_empty() || s.blockade_targets.is_empty() {
                return bad("sweep grids must be non-empty");
            }
            if s.alpha_values.as_ref().is_some_and(|a| a.is_empty()) {
                return bad("sweep.alpha_values must be non-empty when given");
            }
        }
        if self.analytic.points == 0 || !(self.analytic.omega_max >= self.analytic.omega_min) {
            return bad("analytic grid needs points >= 1 and omega_max >= omega_min");
        }
        Ok(())
    }

    pub fn trajectory_options(&self) -> TrajectoryOptions {
        TrajectoryOptions {
            dt: self.dt,
            timeout_tail: self.timeout_tail,
            success_threshold: self.threshold,
            stop_after_first_jump: false,
        }
    }

    /// The sweep this configuration describes; without a `[sweep]` table it
    /// is the single point given by `[device]`.
    pub fn sweep_spec(&self) -> SweepSpec {
        let (couplings, targets, alpha_values, alpha_grid) = match &self.sweep {
            Some(s) => (
                s.couplings.clone(),
                s.blockade_targets.clone(),
                s.alpha_values.clone(),
                s.alpha_grid.clone(),
            ),
            None => (
                vec![self.device.coupling],
                vec![self.device.blockade_target],
                None,
                None,
            ),
        };
        SweepSpec {
            base: self.device.clone(),
            couplings,
            blockade_targets: targets,
            alpha_values,
            alpha_grid,
            pulse: self.pulse.spec(),
            opts: self.trajectory_options(),
            n_traj: self.n_traj,
            base_seed: self.seed,
            workers: self.workers,
        }
    }

    /// SHA-256 of everything that determines the numbers in a results file.
    /// Worker count and output paths are excluded, and a single point is
    /// hashed the same way as the equivalent one-point sweep.
    pub fn results_hash(&self) -> Result<String, CliError> {
        let mut c = self.clone();
        c.workers = 0;
        c.output = OutputConfig::default();
        c.analytic = AnalyticConfig::default();
        let s = c.sweep.take().unwrap_or(SweepConfig {
            couplings: vec![c.device.coupling],
            blockade_targets: vec![c.device.blockade_target],
            alpha_values: None,
            alpha_grid: None,
        });
        c.device.coupling = 0.0;
        c.device.blockade_target = 0.0;
        c.sweep = Some(s);
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

pub const PRESETS: &[&str] = &[
    "fig2",
    "fig3a",
    "fig3b",
    "fig3c",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig5",
    "fig7",
    "fig8a",
    "fig9",
    "empty-cavity",
    "empty-freespace",
];

fn cavity(kind: GeometryKind, n: usize, c_c: f64, c_b: f64) -> DeviceSpec {
    let mut d = DeviceSpec::cavity_default(n, c_c, c_b);
    if kind != GeometryKind::Ring {
        d.geometry = GeometrySpec::gaussian(kind, n, 1);
    }
    d
}

fn free_space(n: usize, d_c: f64, d_b: f64) -> DeviceSpec {
    DeviceSpec::free_space_default(n, d_c, d_b, 1)
}

fn base(device: DeviceSpec) -> RunConfig {
    RunConfig {
        n_traj: default_n_traj(),
        seed: 1,
        dt: default_dt(),
        workers: 0,
        threshold: default_threshold(),
        timeout_tail: default_tail(),
        device,
        pulse: PulseConfig::default(),
        sweep: None,
        analytic: AnalyticConfig::default(),
        output: OutputConfig::default(),
    }
}

fn grid(couplings: &[f64], targets: &[f64]) -> Option<SweepConfig> {
    Some(SweepConfig {
        couplings: couplings.to_vec(),
        blockade_targets: targets.to_vec(),
        alpha_values: None,
        alpha_grid: None,
    })
}

const CAVITY_COUPLINGS: [f64; 4] = [10.0, 20.0, 50.0, 100.0];
const CAVITY_BLOCKADES: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 1.5, 2.0];
const FS_DEPTHS: [f64; 3] = [20.0, 40.0, 100.0];
const FS_BLOCKADES: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
/// Two-photon detuning of the free-space figures.
const FS_DELTA: f64 = 0.113;

/// Figure presets. Parameters follow the figure captions; `full_scale`
/// selects the captions' atom number instead of the desk-scale default.
pub fn preset(name: &str, full_scale: bool) -> Result<RunConfig, CliError> {
    let n = if full_scale { FULL_ATOMS } else { DESK_ATOMS };
    let probe_axis = || Some((1..=12).map(|i| 0.05 * i as f64).collect::<Vec<_>>());
    let cfg = match name {
        "fig2" => {
            let mut d = cavity(GeometryKind::Gaussian3D, n, 100.0, 0.5);
            d.delta_small = Some(0.109);
            d.alpha_in_sq = Some(0.33);
            let mut c = base(d);
            c.n_traj = 20;
            c
        }
        "fig3a" | "fig3b" | "fig3c" => {
            let kind = match name {
                "fig3a" => GeometryKind::Ring,
                "fig3b" => GeometryKind::Gaussian1D,
                _ => GeometryKind::Gaussian3D,
            };
            let mut c = base(cavity(kind, n, 100.0, 0.5));
            c.sweep = grid(&CAVITY_COUPLINGS, &[0.5]);
            if let Some(s) = c.sweep.as_mut() {
                s.alpha_values = probe_axis();
            }
            c
        }
        "fig4a" | "fig4b" | "fig4c" => {
            let kind = match name {
                "fig4a" => GeometryKind::Ring,
                "fig4b" => GeometryKind::Gaussian1D,
                _ => GeometryKind::Gaussian3D,
            };
            let mut c = base(cavity(kind, n, 100.0, 0.5));
            c.sweep = grid(&CAVITY_COUPLINGS, &CAVITY_BLOCKADES);
            c
        }
        "fig5" => {
            let mut c = base(cavity(GeometryKind::Gaussian3D, n, 100.0, 0.5));
            c.sweep = grid(&[100.0], &CAVITY_BLOCKADES);
            c
        }
        "fig7" => {
            let mut d = free_space(n, 100.0, 2.0);
            d.delta_small = Some(FS_DELTA);
            d.alpha_in_sq = Some(0.32);
            let mut c = base(d);
            c.n_traj = 20;
            c
        }
        "fig8a" => {
            let mut d = free_space(n, 100.0, 2.0);
            d.delta_small = Some(FS_DELTA);
            let mut c = base(d);
            c.sweep = grid(&FS_DEPTHS, &[2.0]);
            if let Some(s) = c.sweep.as_mut() {
                s.alpha_values = probe_axis();
            }
            c
        }
        "fig9" => {
            let mut d = free_space(n, 100.0, 2.0);
            d.delta_small = Some(FS_DELTA);
            let mut c = base(d);
            c.sweep = grid(&FS_DEPTHS, &FS_BLOCKADES);
            c
        }
        "empty-cavity" => base(cavity(GeometryKind::Ring, n, 0.0, 0.5)),
        "empty-freespace" => base(free_space(n, 0.0, 2.0)),
        _ => return Err(CliError::UnknownPreset(name.to_string())),
    };
    Ok(cfg)
}
