//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Every tolerance is pinned here; run with `--nocapture` to see the lines.

use std::process::Command;

use liftctl_core::controller::CommandSignal;
use liftctl_core::lifting::{catalog, StateBounds};
use liftctl_core::rng::SplitMix64;
use liftctl_core::sim::{monte_carlo, run, sample_initial_conditions_with, IcFilter, RunConfig};
use liftctl_core::verify::builtin::{contraction_scenario, reference_config};
use liftctl_core::verify::{
    check_contraction_identities, check_deadbeat, check_vanishing_contraction,
    VanishingContractionProbe,
};

fn pass(n: usize, what: &str) {
    println!("criterion {n} ({what}): PASS");
}

#[test]
fn criterion_1_lifting_round_trip() {
    let mut rng = SplitMix64::new(0xacce5);
    for pair in catalog() {
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let chi = rng.next_range(-1.0 + 1e-6, 1.0 - 1e-6);
            worst = worst.max((pair.psi(pair.phi(chi)) - chi).abs());
        }
        assert!(
            worst < 1e-12,
            "pair {}: worst round-trip error {worst}",
            pair.name()
        );
    }
    pass(1, "six-pair round trip below 1e-12");
}

#[test]
fn criteria_2_and_3_contraction_identities_and_e2_recursion() {
    let cfg = contraction_scenario().unwrap();
    assert_eq!(cfg.horizon, 100);
    let traj = run(&cfg).unwrap();
    assert!(traj.success(), "{:?}", traj.failure);
    let report = check_contraction_identities(&traj, &cfg).unwrap();
    for line in &report.lines {
        assert!(
            line.pass,
            "{} violated at step {:?}: expected {} actual {}",
            line.check, line.step, line.expected, line.actual
        );
    }
    assert!(report.lines.iter().any(|l| l.check == "dV1_identity"));
    assert!(report.lines.iter().any(|l| l.check == "dV2_identity"));
    pass(2, "dV1, dV2 identities within 1e-9 relative over 100 steps");
    assert!(report.lines.iter().any(|l| l.check == "e2_recursion"));
    pass(3, "e2 recursion within 1e-10 over the same run");
}

#[test]
fn criterion_4_invariance_monte_carlo() {
    for (x1_bar, x2_bar) in [(2.0, 1.0), (1.0, 2.0)] {
        let template = reference_config(
            x1_bar,
            x2_bar,
            CommandSignal::Constant(0.1),
            (0.0, 0.0),
            200,
            0,
        );
        let summary = monte_carlo(&template, 1000, 1000, IcFilter::Admissible).unwrap();
        assert_eq!(summary.successes(), 1000, "bounds ({x1_bar},{x2_bar})");
        for t in &summary.trials {
            assert!(
                t.max_abs_f1 < 1.0,
                "trial {}: |F1| reached {}",
                t.trial,
                t.max_abs_f1
            );
            assert!(
                t.max_abs_f2 < 1.0,
                "trial {}: |F2| reached {}",
                t.trial,
                t.max_abs_f2
            );
            assert!(
                t.max_x1_ratio < 1.0,
                "trial {}: |x1|/bound reached {}",
                t.trial,
                t.max_x1_ratio
            );
            assert!(
                t.max_x2_ratio < 1.0,
                "trial {}: |x2|/bound reached {}",
                t.trial,
                t.max_x2_ratio
            );
        }
    }
    pass(4, "2x1000 trials, 200 steps, zero invariance violations");
}

#[test]
fn criterion_5_deadbeat_property() {
    // the reference tracking run plus sampled starts that include
    // switching transients
    let mut configs = vec![contraction_scenario().unwrap()];
    let bounds = StateBounds::new(2.0, 1.0).unwrap();
    let command = CommandSignal::Constant(0.1);
    for ic in
        sample_initial_conditions_with(bounds, &command, 100, 0xbeef, IcFilter::A1Only).unwrap()
    {
        configs.push(reference_config(2.0, 1.0, command, ic, 200, 0));
    }
    let mut transients = 0;
    for cfg in &configs {
        let traj = run(cfg).unwrap();
        assert!(
            traj.success(),
            "from {:?}: {:?}",
            cfg.initial_state,
            traj.failure
        );
        let r = check_deadbeat(&traj, cfg).unwrap();
        assert!(
            r.e2_zero_after,
            "from {:?}: e2 not zero after k_s = {}",
            cfg.initial_state, r.k_s
        );
        assert!(
            r.e1_zero_within_two,
            "from {:?}: e1 not zero from k_s + 2",
            cfg.initial_state
        );
        if r.k_s > 0 {
            transients += 1;
        }
    }
    assert!(
        transients > 0,
        "sampled starts never exercised the transient"
    );
    pass(
        5,
        "k_s reached; e2 <= 1e-12 after k_s, e1 <= 1e-10 from k_s + 2",
    );
}

#[test]
fn criterion_6_bound_geometry() {
    // wide velocity bound: deadbeat from the start in at least 95% of trials
    let template = reference_config(1.0, 2.0, CommandSignal::Constant(0.1), (0.0, 0.0), 200, 0);
    let summary = monte_carlo(&template, 1000, 77, IcFilter::A1Only).unwrap();
    assert_eq!(summary.successes(), 1000);
    let frac = summary.fraction_deadbeat_from_start();
    assert!(frac >= 0.95, "deadbeat-from-start fraction {frac}");

    // narrow velocity bound: some trials must pass through a transient with
    // gains strictly inside (0, 1)
    let bounds = StateBounds::new(2.0, 1.0).unwrap();
    let command = CommandSignal::Constant(0.1);
    let ics = sample_initial_conditions_with(bounds, &command, 1000, 78, IcFilter::A1Only).unwrap();
    let mut late = 0usize;
    let mut transient_gain = false;
    for ic in ics {
        let cfg = reference_config(2.0, 1.0, command, ic, 200, 0);
        let traj = run(&cfg).unwrap();
        assert!(traj.success(), "from {ic:?}: {:?}", traj.failure);
        if traj.switch_step.is_some_and(|ks| ks > 0) {
            late += 1;
            transient_gain |= traj.steps.iter().any(|r| r.rho2 > 0.0 && r.rho2 < 1.0);
        }
    }
    assert!(late > 0, "no trial switched late");
    assert!(transient_gain, "no transient gain strictly inside (0, 1)");
    pass(
        6,
        "wide bound >= 95% immediate deadbeat; narrow bound shows transients",
    );
}

#[test]
fn criterion_7_vanishing_contraction_oracle() {
    let probe = VanishingContractionProbe {
        rho: |k: usize| 0.9 * 0.99f64.powi(k as i32),
        v0: 1.0,
        horizon: 500,
        threshold: 1e-12,
    };
    let r = check_vanishing_contraction(&probe);
    assert!(r.monotone, "V must be nonincreasing");
    assert!(r.rho_admissible);
    assert!(r.v_final < 1e-12, "V_500 = {}", r.v_final);
    assert!(
        r.matches_closed_form,
        "iterated {} vs closed form {}",
        r.v_final, r.closed_form_v_final
    );
    pass(7, "V nonincreasing, V_500 < 1e-12, matches closed form");
}

#[test]
fn criterion_8_sinusoidal_command() {
    let command = CommandSignal::Sinusoid {
        amplitude: 0.5,
        omega: 0.5,
    };
    // exact lookahead: terminal 50-step window tracks to numerical zero
    let cfg = reference_config(2.0, 1.0, command, (0.5, 0.3), 200, 7);
    let traj = run(&cfg).unwrap();
    assert!(traj.success());
    let window = &traj.steps[traj.steps.len() - 50..];
    let max_e1 = window.iter().map(|r| r.e1.abs()).fold(0.0, f64::max);
    assert!(max_e1 < 1e-8, "lookahead terminal max |e1| = {max_e1}");

    // frozen lookahead: lag bounded by two command increments, zero
    // constraint violations
    let cfg = RunConfig {
        freeze_command: true,
        ..cfg
    };
    let traj = run(&cfg).unwrap();
    assert!(traj.success());
    let sup_step = (0..cfg.horizon)
        .map(|k| (cfg.command.eval(k + 1) - cfg.command.eval(k)).abs())
        .fold(0.0, f64::max);
    let bound = 2.0 * sup_step / 2.0 + 1e-9;
    let max_e1 = traj.steps[traj.steps.len() - 50..]
        .iter()
        .map(|r| r.e1.abs())
        .fold(0.0, f64::max);
    assert!(
        max_e1 <= bound,
        "frozen max |e1| = {max_e1} > bound {bound}"
    );
    assert!(traj.steps.iter().all(|r| r.in_safe));
    assert!(traj.terminal.unwrap().in_safe);
    pass(
        8,
        "lookahead tracks below 1e-8; frozen command bounded and safe",
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_liftctl");
    let dir = std::env::temp_dir();
    let out_a = dir.join("liftctl_acceptance_a.csv");
    let out_b = dir.join("liftctl_acceptance_b.csv");
    let args = |out: &std::path::Path| {
        vec![
            "run".to_string(),
            "--plant".into(),
            "double-integrator".into(),
            "--x1bar".into(),
            "2".into(),
            "--x2bar".into(),
            "1".into(),
            "--sigmoid".into(),
            "atanh".into(),
            "--rho1".into(),
            "0".into(),
            "--rho2".into(),
            "switching".into(),
            "--command".into(),
            "const:0.1".into(),
            "--x10".into(),
            "0.5".into(),
            "--x20".into(),
            "0.3".into(),
            "--steps".into(),
            "50".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    for out in [&out_a, &out_b] {
        let status = Command::new(bin).args(args(out)).status().unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated CLI invocations must be byte-identical");

    // the Monte Carlo path as well
    let mc = |out: &std::path::Path| {
        Command::new(bin)
            .args([
                "montecarlo",
                "--trials",
                "20",
                "--steps",
                "50",
                "--seed",
                "3",
                "--out",
                &out.to_string_lossy(),
            ])
            .status()
            .unwrap()
    };
    assert!(mc(&out_a).success());
    assert!(mc(&out_b).success());
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
    let _ = std::fs::remove_file(&out_a);
    let _ = std::fs::remove_file(&out_b);
    pass(9, "byte-identical CSVs across repeated invocations");
}
