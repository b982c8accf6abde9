use std::path::Path;
use std::process::Command;

use spt_cli::{preset, RunConfig, PRESETS};

const TINY: &str = r#"
n_traj = 6
seed = 3

[device]
variant = "cavity"
coupling = 10.0
blockade_target = 0.5
delta_big = 180.0
omega_c = 5.0
omega_p = 10.0

[device.geometry]
kind = "ring"
n_atoms = 10

[sweep]
couplings = [5.0, 10.0]
blockade_targets = [0.5]
"#;

fn spt(args: &[&str], cwd: &Path) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into(),
        String::from_utf8_lossy(&out.stderr).into(),
    )
}

#[test]
fn presets_round_trip_through_toml() {
    for name in PRESETS {
        for full in [false, true] {
            let cfg = preset(name, full).unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{name}");
        }
    }
}

#[test]
fn unknown_keys_and_presets_are_rejected() {
    assert!(RunConfig::from_toml(&format!("bogus = 1\n{TINY}")).is_err());
    assert!(
        RunConfig::from_toml(&TINY.replace("omega_p = 10.0", "omega_p = 10.0\nomgea_c = 1.0"))
            .is_err()
    );
    assert!(RunConfig::from_toml(&TINY.replace("n_traj = 6", "n_traj = 0")).is_err());
    assert!(preset("fig6", false).is_err());
}

#[test]
fn presets_follow_captions() {
    let f2 = preset("fig2", false).unwrap();
    let d = &f2.device;
    assert_eq!(d.geometry.n_atoms, 200);
    assert_eq!(preset("fig2", true).unwrap().device.geometry.n_atoms, 1000);
    assert_eq!(
        (
            d.coupling,
            d.blockade_target,
            d.delta_big,
            d.omega_c,
            d.omega_p
        ),
        (100.0, 0.5, 180.0, 5.0, 10.0)
    );
    assert_eq!((d.delta_small, d.alpha_in_sq), (Some(0.109), Some(0.33)));
    assert_eq!(
        d.geometry.kind,
        rydberg_spt::geometry::GeometryKind::Gaussian3D
    );
    assert_eq!(
        (f2.pulse.sigma, f2.pulse.t_m, f2.pulse.t_0, f2.pulse.t_tot),
        (160.0, 500.0, 0.0, 1000.0)
    );

    let f7 = preset("fig7", false).unwrap().device;
    assert_eq!(
        (
            f7.coupling,
            f7.blockade_target,
            f7.delta_big,
            f7.omega_c / f7.delta_big
        ),
        (100.0, 2.0, 40.0, 0.05)
    );
    assert_eq!(
        (f7.delta_small, f7.alpha_in_sq, f7.probe_coupling()),
        (Some(0.113), Some(0.32), 100.0)
    );

    let f4 = preset("fig4b", false).unwrap().sweep.unwrap();
    assert_eq!(f4.couplings, vec![10.0, 20.0, 50.0, 100.0]);
    assert_eq!(f4.blockade_targets, vec![0.1, 0.25, 0.5, 1.0, 1.5, 2.0]);
    let f9 = preset("fig9", false).unwrap().sweep.unwrap();
    assert_eq!(f9.couplings, vec![20.0, 40.0, 100.0]);
}

#[test]
fn results_hash_ignores_workers_and_outputs() {
    let a = RunConfig::from_toml(TINY).unwrap();
    let mut b = a.clone();
    b.workers = 8;
    b.output.results = Some("elsewhere.csv".into());
    assert_eq!(a.results_hash().unwrap(), b.results_hash().unwrap());
    b.seed = 4;
    assert_ne!(a.results_hash().unwrap(), b.results_hash().unwrap());

    // a single point hashes like the equivalent one-point sweep
    let mut single = a.clone();
    single.sweep = None;
    let mut one = a.clone();
    one.sweep.as_mut().unwrap().couplings = vec![10.0];
    assert_eq!(single.results_hash().unwrap(), one.results_hash().unwrap());
}

#[test]
fn analytic_and_geometry_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, out, _) = spt(&["analytic", "--preset", "fig2"], dir.path());
    assert!(ok);
    assert!(out.contains("resonant_gamma_rc = 0.990075"), "{out}");
    let (ok, out, _) = spt(
        &["analytic", "--preset", "fig7", "--out", "spec.csv"],
        dir.path(),
    );
    assert!(ok);
    assert!(
        out.contains("resonant_gamma_rc_prefactor = 0.980392"),
        "{out}"
    );
    let spectrum = std::fs::read_to_string(dir.path().join("spec.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 402);

    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    let (ok, out, _) = spt(
        &["geometry", "--config", "tiny.toml", "--out", "geom.txt"],
        dir.path(),
    );
    assert!(ok);
    assert!(out.contains("blockade_radius"));
    let table = std::fs::read_to_string(dir.path().join("geom.txt")).unwrap();
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn simulate_and_sweep_share_seeds_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("tiny.toml"), TINY).unwrap();
    let one_point = TINY.replace("couplings = [5.0, 10.0]", "couplings = [10.0]");
    std::fs::write(p.join("one.toml"), &one_point).unwrap();

    let (ok, out, err) = spt(
        &[
            "simulate",
            "--config",
            "tiny.toml",
            "--out",
            "sim.csv",
            "--log-trajectories",
            "log.jsonl",
        ],
        p,
    );
    assert!(ok, "{err}");
    assert!(out.contains("p_im = "));
    let log = std::fs::read_to_string(p.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("\"outcome\"")).count(), 6);

    let (ok, _, err) = spt(
        &[
            "sweep",
            "--config",
            "one.toml",
            "--out",
            "sweep1.csv",
            "--workers",
            "2",
        ],
        p,
    );
    assert!(ok, "{err}");
    assert_eq!(
        std::fs::read(p.join("sim.csv")).unwrap(),
        std::fs::read(p.join("sweep1.csv")).unwrap()
    );

    let (ok, out, err) = spt(&["sweep", "--config", "tiny.toml", "--out", "sweep.csv"], p);
    assert!(ok, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with('[')).count(), 2);
    let (ok, out, _) = spt(&["sweep", "--config", "tiny.toml", "--out", "sweep.csv"], p);
    assert!(ok);
    assert!(out.contains("2 points resumed"), "{out}");

    let (ok, _, err) = spt(
        &[
            "sweep",
            "--config",
            "tiny.toml",
            "--out",
            "sweep.csv",
            "--seed",
            "9",
        ],
        p,
    );
    assert!(!ok);
    assert!(err.contains("different configuration"), "{err}");
    let (ok, _, _) = spt(
        &[
            "sweep",
            "--config",
            "tiny.toml",
            "--out",
            "sweep.csv",
            "--seed",
            "9",
            "--force",
        ],
        p,
    );
    assert!(ok);
}

#[test]
fn missing_source_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, _, err) = spt(&["analytic"], dir.path());
    assert!(!ok);
    assert!(err.contains("--config or --preset"), "{err}");
    let (ok, _, _) = spt(&["analytic", "--preset", "nope"], dir.path());
    assert!(!ok);
}
