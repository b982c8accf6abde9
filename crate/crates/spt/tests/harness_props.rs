use proptest::prelude::*;
use rydberg_spt::engine::{JumpKind, Outcome, PulseSpec, TrajectoryOptions};
use rydberg_spt::harness::{
    derive_seed, read_results, run_ensemble, run_point, run_sweep, Device, DeviceSpec, EnsembleConfig, Estimate,
    SweepSpec,
};

fn small_device() -> (Device, f64, f64) {
    let dev = Device::build(&DeviceSpec::cavity_default(12, 10.0, 0.5)).unwrap();
    let (a, d) = (dev.predicted_alpha(), dev.im.delta_small_star);
    (dev, a, d)
}

fn small_sweep(seed: u64) -> SweepSpec {
    SweepSpec {
        base: DeviceSpec::cavity_default(10, 10.0, 0.5),
        couplings: vec![5.0, 10.0],
        blockade_targets: vec![0.5, 1.0],
        alpha_values: None,
        alpha_grid: None,
        pulse: PulseSpec::default(),
        opts: TrajectoryOptions::default(),
        n_traj: 12,
        base_seed: seed,
        workers: 1,
    }
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let (dev, a, d) = small_device();
    let m = dev.model(a, d);
    let pulse = PulseSpec::default();
    let run = |workers| {
        let cfg = EnsembleConfig { n_traj: 40, base_seed: 5, opts: TrajectoryOptions::default(), workers };
        run_ensemble(&m, &pulse, &cfg).unwrap()
    };
    let one = run(1);
    for w in [2, 4] {
        let other = run(w);
        assert_eq!(one.records, other.records, "workers={w}");
        assert_eq!(one.stats, other.stats);
    }
}

#[test]
fn estimators_are_consistent() {
    let (dev, a, d) = small_device();
    let m = dev.model(a, d);
    let cfg = EnsembleConfig { n_traj: 400, base_seed: 17, opts: TrajectoryOptions::default(), workers: 0 };
    let run = run_ensemble(&m, &PulseSpec::default(), &cfg).unwrap();
    let s = &run.stats;
    assert_eq!(s.outcome_counts.total(), 400);
    // success needs a dephasing first jump
    for r in &run.records {
        if r.outcome == Outcome::Success {
            assert!(matches!(r.first_jump(), Some(JumpKind::DephaseSignal | JumpKind::DephaseLocalize)));
            assert!(r.n_signal_jumps >= 3);
        }
        let decays = r.events.iter().filter(|e| e.channel.is_decay()).count();
        assert!(decays <= 1);
        assert!(r.events.windows(2).all(|w| w[0].t <= w[1].t));
    }
    assert!(s.eta.value <= s.p_im_first_jump.value);
    let gap = (s.p_im.value - s.p_im_first_jump.value).abs();
    assert!(gap < 4.0 * s.p_im_first_jump.stderr, "integral {:?} vs first jump {:?}", s.p_im, s.p_im_first_jump);
}

#[test]
fn stopping_after_first_jump_keeps_first_jump_statistics() {
    let (dev, a, d) = small_device();
    let m = dev.model(a, d);
    let pulse = PulseSpec::default();
    let full = EnsembleConfig { n_traj: 60, base_seed: 3, opts: TrajectoryOptions::default(), workers: 0 };
    let stop = EnsembleConfig { opts: TrajectoryOptions { stop_after_first_jump: true, ..full.opts }, ..full };
    let (x, y) = (run_ensemble(&m, &pulse, &full).unwrap(), run_ensemble(&m, &pulse, &stop).unwrap());
    assert_eq!(x.stats.p_im_first_jump, y.stats.p_im_first_jump);
    assert_eq!(x.stats.p_im, y.stats.p_im);
    assert!(y.records.iter().all(|r| r.events.len() <= 1));
}

#[test]
fn sweep_checkpoint_resumes_and_guards_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let spec = small_sweep(21);
    let first = run_sweep(&spec, Some(&path), "cfg-a", false, |_, _| {}).unwrap();
    assert!(first.failures.is_empty());
    assert_eq!(first.rows.len(), 4);
    assert_eq!(read_results(&path, "cfg-a").unwrap().unwrap(), first.rows);

    let mut calls = 0;
    let again = run_sweep(&spec, Some(&path), "cfg-a", false, |_, _| calls += 1).unwrap();
    assert_eq!(calls, 0);
    assert_eq!(again.skipped, 4);
    assert_eq!(again.rows, first.rows);

    assert!(run_sweep(&spec, Some(&path), "cfg-b", false, |_, _| {}).is_err());
    assert!(read_results(&path, "cfg-b").unwrap().is_none());
    let forced = run_sweep(&spec, Some(&path), "cfg-b", true, |_, _| {}).unwrap();
    assert_eq!(forced.skipped, 0);
    assert_eq!(forced.rows, first.rows);
}

#[test]
fn sweep_resumes_after_interruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let spec = small_sweep(4);
    let full = run_sweep(&spec, None, "h", false, |_, _| {}).unwrap();
    // keep only the first two rows, as if the run had been killed
    let mut partial = spec.clone();
    partial.couplings.truncate(1);
    run_sweep(&partial, Some(&path), "h", false, |_, _| {}).unwrap();
    let resumed = run_sweep(&spec, Some(&path), "h", false, |_, _| {}).unwrap();
    assert_eq!(resumed.skipped, 2);
    assert_eq!(resumed.rows, full.rows);
    assert_eq!(read_results(&path, "h").unwrap().unwrap(), full.rows);
}

#[test]
fn alpha_axis_is_swept_in_order() {
    let mut spec = small_sweep(8);
    spec.couplings = vec![10.0];
    spec.blockade_targets = vec![0.5];
    spec.alpha_values = Some(vec![0.01, 0.02, 0.04]);
    let rep = run_sweep(&spec, None, "h", false, |_, _| {}).unwrap();
    let alphas: Vec<f64> = rep.rows.iter().map(|r| r.alpha_in_sq).collect();
    assert_eq!(alphas, vec![0.01, 0.02, 0.04]);
}

#[test]
fn optimized_point_beats_fixed_mismatched_probe() {
    let spec = DeviceSpec::cavity_default(12, 10.0, 0.5);
    let pulse = PulseSpec::default();
    let opts = TrajectoryOptions { stop_after_first_jump: true, ..TrajectoryOptions::default() };
    let best = run_point(&spec, &pulse, &opts, 50, 1, 0, None).unwrap();
    let opt = best.optimum.as_ref().unwrap();
    assert!(opt.curve.iter().all(|c| c.p_im <= opt.p_im + 1e-9));
    let off = DeviceSpec { alpha_in_sq: Some(best.alpha_in_sq * 30.0), ..spec };
    let worse = run_point(&off, &pulse, &opts, 50, 1, 0, None).unwrap();
    assert!(worse.row.p_im < best.row.p_im);
}

proptest! {
    #[test]
    fn derived_seeds_are_distinct(base in any::<u64>(), i in 0u64..10_000, j in 0u64..10_000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(base, i), derive_seed(base, j));
        prop_assert_eq!(derive_seed(base, i), derive_seed(base, i));
    }

    #[test]
    fn binomial_estimate_is_a_probability(n in 1usize..10_000, f in 0.0..=1.0f64) {
        let k = ((n as f64) * f).floor() as usize;
        let e = Estimate::binomial(k, n);
        prop_assert!((0.0..=1.0).contains(&e.value));
        prop_assert!(e.stderr >= 0.0 && e.stderr <= 0.5 / (n as f64).sqrt() + 1e-15);
    }
}
