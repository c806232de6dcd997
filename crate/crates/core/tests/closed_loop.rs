//! End-to-end closed-loop behavior through the public API.

use liftctl_core::controller::{CommandSignal, Rho2Policy};
use liftctl_core::lifting::{by_name, catalog, StateBounds};
use liftctl_core::plant::double_integrator;
use liftctl_core::sim::{
    monte_carlo, run, sample_initial_conditions, trajectory_csv, IcFilter, RunConfig,
};
use liftctl_core::verify::{
    check_contraction_identities, check_deadbeat, check_forward_invariance,
};

fn config_with_pair(pair_name: &str, initial: (f64, f64), horizon: usize) -> RunConfig {
    let pair = by_name(pair_name).unwrap();
    RunConfig {
        plant: double_integrator(2.0, 1.0).unwrap(),
        pair1: pair,
        pair2: pair,
        rho1: 0.0,
        rho2_policy: Rho2Policy::Switching,
        command: CommandSignal::Constant(0.1),
        initial_state: initial,
        horizon,
        seed: 7,
        freeze_command: false,
    }
}

#[test]
fn every_catalog_pair_closes_the_loop() {
    for pair in catalog() {
        let cfg = config_with_pair(pair.name(), (0.5, 0.3), 50);
        let traj = run(&cfg).unwrap();
        assert!(traj.success(), "{}: {:?}", pair.name(), traj.failure);
        let terminal = traj.terminal.unwrap();
        assert!(
            terminal.e1.abs() < 1e-10,
            "{}: terminal e1 = {}",
            pair.name(),
            terminal.e1
        );
        assert!(traj.steps.iter().all(|r| r.in_safe));

        let identities = check_contraction_identities(&traj, &cfg).unwrap();
        assert!(
            identities.pass(),
            "{}:\n{}",
            pair.name(),
            identities.to_text()
        );
        let invariance = check_forward_invariance(&traj, &cfg).unwrap();
        assert!(
            invariance.pass(),
            "{}:\n{}",
            pair.name(),
            invariance.to_text()
        );
        let deadbeat = check_deadbeat(&traj, &cfg).unwrap();
        assert!(deadbeat.pass(), "{}: k_s = {}", pair.name(), deadbeat.k_s);
    }
}

#[test]
fn mixed_pairs_per_channel() {
    let cfg = RunConfig {
        pair1: by_name("tan").unwrap(),
        pair2: by_name("erf").unwrap(),
        ..config_with_pair("atanh", (0.5, 0.3), 50)
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success());
    assert!(traj.terminal.unwrap().e1.abs() < 1e-10);
    let identities = check_contraction_identities(&traj, &cfg).unwrap();
    assert!(identities.pass(), "{}", identities.to_text());
}

#[test]
fn transient_switching_run_stays_safe_and_contracts() {
    // |dx0| well above the velocity bound: several steps of 0 < rho2 < 1
    let cfg = RunConfig {
        command: CommandSignal::Constant(-1.5),
        ..config_with_pair("atanh", (1.0, 0.9), 80)
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success(), "{:?}", traj.failure);
    let ks = traj.switch_step.expect("must switch");
    assert!(ks > 0);
    // during the transient the second error contracts geometrically and the
    // composite target sits on 1/2 in magnitude
    for r in traj.steps.iter().take(ks) {
        assert!(r.rho2 > 0.0 && r.rho2 < 1.0);
        assert!((r.thm2_lhs - 0.5).abs() < 1e-12);
        assert!(!r.deadbeat_ok);
    }
    assert!(traj.steps.iter().all(|r| r.in_safe && r.in_a1));
    assert!(traj.switching_violation.is_none());
}

#[test]
fn nonzero_rho1_contracts_more_slowly_but_tracks() {
    let cfg = RunConfig {
        rho1: 0.5,
        ..config_with_pair("atanh", (0.5, 0.3), 120)
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success(), "{:?}", traj.failure);
    assert!(traj.terminal.unwrap().e1.abs() < 1e-10);
    let identities = check_contraction_identities(&traj, &cfg).unwrap();
    assert!(identities.pass(), "{}", identities.to_text());
}

#[test]
fn sinusoid_exact_lookahead_tracks_exactly() {
    let cfg = RunConfig {
        command: CommandSignal::Sinusoid {
            amplitude: 0.5,
            omega: 0.5,
        },
        ..config_with_pair("atanh", (0.5, 0.3), 150)
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success());
    let tail_max = traj
        .steps
        .iter()
        .skip(100)
        .map(|r| r.e1.abs())
        .fold(0.0, f64::max);
    assert!(tail_max < 1e-10, "tail max |e1| = {tail_max}");
}

#[test]
fn sinusoid_frozen_command_lags_but_stays_safe() {
    let cfg = RunConfig {
        command: CommandSignal::Sinusoid {
            amplitude: 0.5,
            omega: 0.5,
        },
        freeze_command: true,
        ..config_with_pair("atanh", (0.5, 0.3), 150)
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success());
    let tail_max = traj
        .steps
        .iter()
        .skip(100)
        .map(|r| r.e1.abs())
        .fold(0.0, f64::max);
    assert!(tail_max > 1e-4, "freezing must cost tracking accuracy");
    assert!(tail_max < 0.25, "but the lag stays bounded, got {tail_max}");
    assert!(traj.steps.iter().all(|r| r.in_safe));
}

#[test]
fn monte_carlo_csv_is_byte_stable() {
    let template = config_with_pair("atanh", (0.0, 0.0), 50);
    let a = monte_carlo(&template, 20, 5, IcFilter::Admissible).unwrap();
    let b = monte_carlo(&template, 20, 5, IcFilter::Admissible).unwrap();
    assert_eq!(
        liftctl_core::sim::monte_carlo_csv(&a),
        liftctl_core::sim::monte_carlo_csv(&b)
    );
}

#[test]
fn trajectory_csv_matches_contract() {
    let cfg = config_with_pair("atanh", (0.5, 0.3), 3);
    let csv = trajectory_csv(&run(&cfg).unwrap());
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,x1,x2,u,z1,z2,x1d,e1,e2,rho2,V1,V2,dV,F1,F2,in_A1,in_A2,in_safe,thm2_lhs,deadbeat_ok"
    );
    assert_eq!(csv.matches('\n').count(), 1 + 3 + 1);
}

#[test]
fn sampled_runs_from_both_regimes_never_violate() {
    for (x1_bar, x2_bar) in [(2.0, 1.0), (1.0, 2.0)] {
        let bounds = StateBounds::new(x1_bar, x2_bar).unwrap();
        let cmd = CommandSignal::Constant(0.1);
        for ic in sample_initial_conditions(bounds, &cmd, 50, 13).unwrap() {
            let cfg = RunConfig {
                plant: double_integrator(x1_bar, x2_bar).unwrap(),
                initial_state: ic,
                ..config_with_pair("atanh", (0.0, 0.0), 100)
            };
            let traj = run(&cfg).unwrap();
            assert!(traj.success(), "({x1_bar},{x2_bar}) from {ic:?}");
            assert!(traj.steps.iter().all(|r| r.in_safe && r.in_a1 && r.in_a2));
        }
    }
}
