use herdsim_core::confinement::{sweep, tracking_error, verify, SweepAxis};
use herdsim_core::dynamics::{FollowerState, SwarmState, SystemParams, Trajectory};
use herdsim_core::integrate::{integrate, IntegrationConfig};
use herdsim_core::scenarios::{builtin, case1, load_scenario, save_scenario, BUILTIN_NAMES};
use std::f64::consts::PI;

fn damping_error(substeps: usize) -> f64 {
    let params = SystemParams {
        amplitude: 0.0,
        damping: 1.0,
        alpha: 2.0,
        omega: 20.0,
        horizon: 200.0,
        radius: 1.0,
        followers: 1,
        phase: 0.0,
    };
    let traj = Trajectory::stationary();
    let start = vec![FollowerState::new(1000.0, 0.5, 0.0, 0.0)];
    let initial = SwarmState::with_leader(0.0, start, &params, &traj).unwrap();
    let cfg = IntegrationConfig { substeps_per_oscillation: substeps, ..Default::default() };
    let res = integrate(&params, &traj, &initial, None, &cfg).unwrap();
    let last = res.samples.last().unwrap();
    let exact = 0.5 * (-params.damping * last.t).exp();
    (last.followers[0].vx - exact).abs() / exact
}

#[test]
fn rk4_is_fourth_order() {
    let coarse = damping_error(32);
    let fine = damping_error(64);
    let ratio = coarse / fine;
    assert!((12.0..=20.0).contains(&ratio), "error ratio {ratio} (coarse {coarse:e}, fine {fine:e})");
}

fn case1_single(substeps: usize) -> SwarmState {
    let mut s = case1();
    s.params.followers = 1;
    s.params.phase = PI;
    s.ic_radius = 0.05;
    s.seed = 3;
    let init = s.initial_state().unwrap();
    let cfg = IntegrationConfig { substeps_per_oscillation: substeps, ..Default::default() };
    let res = integrate(&s.params, &s.traj, &init, None, &cfg).unwrap();
    assert!(!res.terminated_early);
    res.samples.last().unwrap().clone()
}

#[test]
fn step_halving_converges_on_case1() {
    let a = case1_single(32);
    let b = case1_single(64);
    assert_eq!(a.t, b.t);
    let diff = a.followers[0]
        .as_array()
        .iter()
        .zip(b.followers[0].as_array())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-4, "max-norm difference {diff:e}");
}

#[test]
fn runs_are_deterministic_and_events_ordered() {
    let mut s = case1();
    s.ic_radius = 0.6;
    s.seed = 7;
    let init = s.initial_state().unwrap();
    let cfg = IntegrationConfig::default();
    let a = integrate(&s.params, &s.traj, &init, None, &cfg).unwrap();
    let b = integrate(&s.params, &s.traj, &init, None, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(!a.events.is_empty());
    assert!(a.events.windows(2).all(|w| w[0].time <= w[1].time));
    assert!(a.events.iter().all(|e| (0.0..=s.params.horizon).contains(&e.time)));
}

#[test]
fn report_invariants_hold_on_experiment() {
    let s = builtin("experiment_circle").unwrap();
    let init = s.initial_state().unwrap();
    let res = integrate(&s.params, &s.traj, &init, None, &IntegrationConfig::default()).unwrap();
    let report = verify(&res, &s.traj, &s.params).unwrap();
    assert_eq!(report, verify(&res, &s.traj, &s.params).unwrap());
    assert!(report.confined, "{report:?}");
    assert!(report.per_follower.iter().all(|m| m.max_dist < s.params.radius));
    assert!(report.leader_min_distance >= s.params.radius - 1e-9);
    for m in tracking_error(&res, &s.traj).unwrap() {
        assert!(m.max_dist >= m.final_dist && m.max_dist >= m.mean_dist);
    }
}

#[test]
fn sweep_is_independent_of_batching() {
    let mut base = case1();
    base.params.horizon = 4.0 * PI;
    base.params.followers = 1;
    let cfg = IntegrationConfig::default();
    let batched = sweep(&base, &[SweepAxis::Omega(vec![10.0, 20.0])], 3, &cfg).unwrap();
    for cell in &batched.cells {
        let mut single_base = base.clone();
        single_base.seed = cell.seed;
        let single = sweep(&single_base, &[SweepAxis::Omega(vec![cell.coords[0]])], 1, &cfg).unwrap();
        let one = &single.cells[0];
        assert_eq!((one.confined, one.digest.as_str()), (cell.confined, cell.digest.as_str()));
        assert_eq!(one.max_dist.to_bits(), cell.max_dist.to_bits());
    }
}

#[test]
fn builtins_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }
}
