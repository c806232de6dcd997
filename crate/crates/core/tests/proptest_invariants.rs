//! Property-based invariants of the lifting pipeline and the lifted maps.

use proptest::prelude::*;

use liftctl_core::controller::{control, CommandSignal, GainSchedule, Rho2Policy};
use liftctl_core::lifted_dynamics::{f1_map, f2_inverse, f2_map, LiftedSystem};
use liftctl_core::lifting::{by_name, catalog, lift, unlift};
use liftctl_core::plant::{double_integrator, step, PlantState};

fn pair_strategy() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("tan"),
        Just("atanh"),
        Just("rational"),
        Just("algebraic"),
        Just("erf"),
        Just("gudermannian"),
    ]
}

proptest! {
    #[test]
    fn lift_then_unlift_returns_x(
        name in pair_strategy(),
        x_bar in 1e-3f64..1e3,
        frac in -0.999f64..0.999,
    ) {
        let pair = by_name(name).unwrap();
        let x = x_bar * frac;
        let lifted = lift(x, x_bar, &pair).unwrap();
        let back = unlift(lifted.z, x_bar, &pair).unwrap();
        prop_assert!((back.x - x).abs() <= 1e-12 * x_bar);
        prop_assert!(back.x.abs() < x_bar);
    }

    #[test]
    fn unlift_then_lift_returns_z(
        name in pair_strategy(),
        x_bar in 1e-3f64..1e3,
        zeta in -5.0f64..5.0,
    ) {
        let pair = by_name(name).unwrap();
        let z = x_bar * zeta;
        let point = unlift(z, x_bar, &pair).unwrap();
        // the z-direction round trip is conditioned by phi', which blows up
        // toward the interval ends; assert it where one ulp of chi maps to
        // well under the tolerance
        if point.chi.abs() <= 0.99 {
            let relifted = lift(point.x, x_bar, &pair).unwrap();
            prop_assert!((relifted.z - z).abs() <= 1e-10 * x_bar.max(z.abs()));
        }
    }

    #[test]
    fn psi_stays_inside_unit_interval(name in pair_strategy(), z in -1e6f64..1e6) {
        let pair = by_name(name).unwrap();
        prop_assert!(pair.psi(z).abs() < 1.0);
    }

    #[test]
    fn f2_inverse_identity(
        x1 in -1.9f64..1.9,
        x2 in -0.9f64..0.9,
        y in -0.99f64..0.99,
    ) {
        let p = by_name("atanh").unwrap();
        let sys = LiftedSystem::new(double_integrator(2.0, 1.0).unwrap(), p, p);
        let z1 = sys.lift1(x1).unwrap().z;
        let z2 = sys.lift2(x2).unwrap().z;
        let u = f2_inverse(&sys, z1, z2, y).unwrap();
        prop_assert!((f2_map(&sys, z1, z2, u).unwrap() - y).abs() < 1e-10);
    }

    #[test]
    fn f1_equals_normalized_plant_step(
        x1 in -1.9f64..1.9,
        x2 in -0.9f64..0.9,
    ) {
        let p = by_name("atanh").unwrap();
        let plant = double_integrator(2.0, 1.0).unwrap();
        let sys = LiftedSystem::new(plant.clone(), p, p);
        let z1 = sys.lift1(x1).unwrap().z;
        let z2 = sys.lift2(x2).unwrap().z;
        let f1 = f1_map(&sys, z1, z2).unwrap();
        let next = step(&plant, &PlantState::new(x1, x2), 0.0).unwrap();
        prop_assert!((f1 * 2.0 - next.x1).abs() < 1e-12);
    }

    #[test]
    fn control_prediction_is_exact_one_step_ahead(
        x1 in -0.9f64..0.9,
        x2 in -0.8f64..0.8,
        cmd in -0.5f64..0.5,
    ) {
        let p = by_name("atanh").unwrap();
        let plant = double_integrator(2.0, 1.0).unwrap();
        let sys = LiftedSystem::new(plant.clone(), p, p);
        let command = CommandSignal::Constant(cmd);
        let mut gains = GainSchedule::new(0.0, Rho2Policy::Switching).unwrap();
        let s = PlantState::new(x1, x2);
        let d = control(&sys, &s, &command, &mut gains, false).unwrap();
        let next = step(&plant, &s, d.u).unwrap();
        // predicted_f1 is the normalized next x1, the target the normalized next x2
        prop_assert!((d.predicted_f1 * 2.0 - next.x1).abs() < 1e-12);
        prop_assert!((d.predicted_psi2_target - next.x2).abs() < 1e-10);
    }
}

#[test]
fn catalog_pairs_are_send_sync() {
    fn assert_send_sync<T: Send + Sync>(_: &T) {}
    for pair in catalog() {
        assert_send_sync(&pair);
    }
}
