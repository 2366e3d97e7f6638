use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use swingnet_core::equilibrium::reduced_min_eigenvalue;
use swingnet_core::{
    coi_relative, control_effort, electrical_power, jacobian, order_parameter, rhs, solve_equilibrium, ControlLaw,
    EquilibriumOptions, NetworkSpec, PowerSchedule, SimState,
};

fn table1_spec() -> NetworkSpec {
    NetworkSpec::all_to_all(vec![2.0, 3.0, 2.5], vec![3.0; 3], 8.0).unwrap()
}

/// Random symmetric, zero-diagonal network of 2..=6 nodes.
fn network() -> impl Strategy<Value = NetworkSpec> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.5f64..5.0, n),
            prop::collection::vec(0.5f64..5.0, n),
            prop::collection::vec(0.0f64..10.0, n * n),
        )
            .prop_map(move |(m, d, k)| {
                let coupling = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { 0.0 } else { k[i.min(j) * n + i.max(j)] }).collect())
                    .collect();
                NetworkSpec::new(m, d, coupling).unwrap()
            })
    })
}

fn network_and_angles() -> impl Strategy<Value = (NetworkSpec, Vec<f64>)> {
    network().prop_flat_map(|spec| {
        let n = spec.n();
        (Just(spec), prop::collection::vec(-3.5f64..3.5, n))
    })
}

proptest! {
    #[test]
    fn flow_is_conserved((spec, theta) in network_and_angles()) {
        let pe = electrical_power(&theta, &spec).unwrap();
        prop_assert!(pe.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn uniform_shift_changes_nothing((spec, theta) in network_and_angles(), c in -10.0f64..10.0) {
        let a = electrical_power(&theta, &spec).unwrap();
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let b = electrical_power(&shifted, &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-11);
        }
    }

    #[test]
    fn jacobian_is_symmetric_laplacian((spec, theta) in network_and_angles()) {
        let j = jacobian(&theta, &spec).unwrap();
        let n = spec.n();
        for r in 0..n {
            prop_assert!(j[r].iter().sum::<f64>().abs() <= 1e-12);
            for c in 0..n {
                prop_assert_eq!(j[r][c], j[c][r]);
            }
        }
    }

    #[test]
    fn coi_projection_is_idempotent((spec, theta) in network_and_angles()) {
        let once = coi_relative(&theta, spec.inertia());
        let twice = coi_relative(&once, spec.inertia());
        let weighted: f64 = once.iter().zip(spec.inertia()).map(|(t, m)| t * m).sum();
        prop_assert!(weighted.abs() <= 1e-12);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn order_parameter_shift_invariant(theta in prop::collection::vec(-3.0f64..3.0, 1..8), c in -5.0f64..5.0) {
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let r = order_parameter(&theta);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&r));
        prop_assert!((r - order_parameter(&shifted)).abs() <= 1e-12);
    }

    #[test]
    fn solver_residual_and_gauge(spec in network(), seed in prop::collection::vec(-1.0f64..1.0, 6)) {
        // Powers derived from small angles are always feasible.
        let n = spec.n();
        let theta: Vec<f64> = seed[..n].iter().map(|s| 0.3 * s).collect();
        let p = electrical_power(&theta, &spec).unwrap();
        let r = solve_equilibrium(&p, &spec, &EquilibriumOptions::default());
        prop_assert!(r.is_ok(), "{:?}", r);
        let r = r.unwrap();
        prop_assert!(r.converged);
        let pe = electrical_power(&r.theta, &spec).unwrap();
        let worst = p.iter().zip(&pe).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        prop_assert!(worst <= 1e-10);
        let coi: f64 = r.theta.iter().zip(spec.inertia()).map(|(t, m)| t * m).sum::<f64>()
            / spec.inertia().iter().sum::<f64>();
        prop_assert!(coi.abs() <= 1e-12);
    }

    #[test]
    fn washout_rest_means_zero_effort(z in prop::collection::vec(-1.0f64..1.0, 3), tau in 0.1f64..5.0) {
        // With omega = 0 the washout gives z' = -z / tau, so z' = 0 forces z = 0 and u = 0.
        let law = ControlLaw::PiWashout { kp: vec![8.0, 4.0, 3.0], ki: vec![4.0, 2.0, 1.0], tau };
        let spec = table1_spec();
        let sched = PowerSchedule::new(vec![0.0; 3], vec![0.0; 3], 0.0).unwrap();
        let state = SimState::from_parts(&[0.0; 3], &[0.0; 3], &z).unwrap();
        let d = rhs(0.0, &state, &spec, &law, &sched).unwrap();
        let u = control_effort(&state, &law);
        for i in 0..3 {
            prop_assert!((d.z()[i] + z[i] / tau).abs() <= 1e-15);
            if d.z()[i] == 0.0 {
                prop_assert_eq!(u[i], 0.0);
            } else {
                prop_assert!(u[i] != 0.0);
            }
        }
        let rest = SimState::zeros(3);
        prop_assert!(rhs(0.0, &rest, &spec, &law, &sched).unwrap().z().iter().all(|v| *v == 0.0));
        prop_assert!(control_effort(&rest, &law).iter().all(|v| *v == 0.0));
    }
}

/// Central differences of the electrical power, column by column.
fn finite_difference_jacobian(theta: &[f64], spec: &NetworkSpec, h: f64) -> Vec<Vec<f64>> {
    let n = theta.len();
    let mut jac = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[c] += h;
        minus[c] -= h;
        let fp = electrical_power(&plus, spec).unwrap();
        let fm = electrical_power(&minus, spec).unwrap();
        for r in 0..n {
            jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = StdRng::seed_from_u64(7);
    let spec = table1_spec();
    let quarter = std::f64::consts::FRAC_PI_4;
    for _ in 0..100 {
        let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-quarter..=quarter)).collect();
        let analytic = jacobian(&theta, &spec).unwrap();
        let numeric = finite_difference_jacobian(&theta, &spec, 1e-6);
        for r in 0..3 {
            for c in 0..3 {
                assert!((analytic[r][c] - numeric[r][c]).abs() <= 1e-6, "{r},{c} at {theta:?}");
            }
        }
    }
}

#[test]
fn stable_branch_from_flat_start() {
    let spec = table1_spec();
    for p in [[0.6, -0.3, -0.3], [1.9333333333333333, -0.9666666666666667, -0.9666666666666667], [5.0, -1.0, -4.0]] {
        let r = solve_equilibrium(&p, &spec, &EquilibriumOptions::default()).unwrap();
        assert!(reduced_min_eigenvalue(&r.theta, &spec, 2).unwrap() >= -1e-9);
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.theta[i] - r.theta[j]).abs() < std::f64::consts::FRAC_PI_2);
            }
        }
    }
}
