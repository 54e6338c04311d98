use ddpc_core::plants::{
    make_lti, pendulum_deriv, sample_step, Pendulum, PendulumParams, Plant, PlantState, Scenario, TimeDomain,
};
use ddpc_core::testing::euler_richardson;
use nalgebra::DMatrix;

#[test]
fn rk4_matches_extrapolated_euler_over_one_second() {
    let params = PendulumParams::default();
    let plant = Pendulum::new(params).unwrap();
    for (x0, tau) in [([0.0, 0.0], 2.0), ([0.4, -1.0], 0.0), ([0.35, 0.0], 3.355)] {
        let mut s = PlantState::new(x0.to_vec());
        for _ in 0..10 {
            s = plant.advance(&s, &[tau], 0.1, 10).unwrap();
        }
        let oracle = euler_richardson(|x| pendulum_deriv(&params, x, tau).to_vec(), &x0, 1.0, 200_000);
        let err = s.x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "x0 {x0:?}: error {err:e}");
    }
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let params = PendulumParams::default();
    let plant = Pendulum::new(params).unwrap();
    let x0 = [1.2, 3.0];
    let oracle = euler_richardson(|x| pendulum_deriv(&params, x, -3.5).to_vec(), &x0, 1.0, 200_000);
    let err = |substeps: usize| {
        let mut s = PlantState::new(x0.to_vec());
        for _ in 0..10 {
            s = plant.advance(&s, &[-3.5], 0.1, substeps).unwrap();
        }
        s.x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = err(10) / err(20);
    assert!((12.0..20.0).contains(&ratio), "halving h reduced the error by {ratio}");
}

fn energy_drift(substeps: usize) -> f64 {
    let params = PendulumParams { k: 0.0, ..PendulumParams::default() };
    let plant = Pendulum::new(params).unwrap();
    let mut s = PlantState::new(vec![0.5, 0.0]);
    let e0 = params.energy(&s.x);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        s = plant.advance(&s, &[0.0], 0.1, substeps).unwrap();
        worst = worst.max((params.energy(&s.x) - e0).abs() / e0);
    }
    worst
}

#[test]
fn frictionless_energy_drift_follows_the_rk4_bound() {
    // RK4 loses (ωh)⁶/72 of the energy per step on a harmonic oscillator
    let omega = (9.81f64 / 0.2).sqrt();
    let bound = |substeps: usize| {
        let steps = 100 * substeps;
        let h = 10.0 / steps as f64;
        steps as f64 * (omega * h).powi(6) / 72.0
    };
    for substeps in [10, 20, 40] {
        let drift = energy_drift(substeps);
        assert!(drift <= bound(substeps), "substeps {substeps}: drift {drift:e}");
    }
    assert!(energy_drift(20) < 1e-6);
}

#[test]
fn friction_dissipates_energy() {
    let params = PendulumParams::default();
    let plant = Pendulum::new(params).unwrap();
    let mut s = PlantState::new(vec![0.5, 0.0]);
    let mut e = params.energy(&s.x);
    for _ in 0..50 {
        s = plant.advance(&s, &[0.0], 0.1, 10).unwrap();
        let next = params.energy(&s.x);
        assert!(next <= e + 1e-12);
        e = next;
    }
}

#[test]
fn direction_flip_negates_the_applied_input() {
    let plant = make_lti(
        DMatrix::from_element(1, 1, 0.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        TimeDomain::Discrete,
    )
    .unwrap();
    let scenario = Scenario {
        direction_flip_time_s: Some(0.5),
        ..Scenario::default()
    };
    let mut s = PlantState::new(vec![0.0]);
    let mut ys = Vec::new();
    for _ in 0..10 {
        let (next, y) = sample_step(&plant, &s, &[1.0], 0.1, 1, &scenario, None).unwrap();
        s = next;
        ys.push(y[0]);
    }
    assert_eq!(&ys[..5], &[1.0; 5]);
    assert_eq!(&ys[5..], &[-1.0; 5]);
}

#[test]
fn zoh_discretization_of_a_scalar_lag() {
    // ẋ = −x + u held for dt gives x⁺ = e^{−dt} x + (1 − e^{−dt}) u
    let c = make_lti(
        DMatrix::from_element(1, 1, -1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        TimeDomain::Continuous,
    )
    .unwrap();
    let d = c.discretize(0.1);
    let e = (-0.1f64).exp();
    assert!((d.a[(0, 0)] - e).abs() < 1e-14);
    assert!((d.b[(0, 0)] - (1.0 - e)).abs() < 1e-14);
}
