use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use svpkit::field::{field, jump_field};
use svpkit::montecarlo::decaying_rotation_radius;
use svpkit::rng::path_seed;
use svpkit::sde::{
    closed_form_for_path, closed_form_oracle, ito_to_stratonovich_drift, simulate, BuiltinModel,
    CoefficientSet, DerivativeMode, JumpMeasure, LipschitzQuotients, SdeProblem, DEFAULT_FD_STEP,
};
use svpkit::stats::Summary;
use svpkit::{ImplicitManifold, Vector};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

#[test]
fn compensated_jumps_are_martingale() {
    // γ constant, b = σ = 0: E[X_T] = x0
    let coeffs =
        CoefficientSet::zero(2, 0).with_jump(jump_field(|_, _, e| v(&[e[0], -0.5 * e[0]])));
    let jumps = JumpMeasure::single(v(&[1.5]), 2.0).unwrap();
    let x0 = v(&[0.3, -0.2]);
    let problem = SdeProblem::new(coeffs, jumps, 0.0, x0.clone(), 1.0).unwrap();
    let finals: Vec<Vector> = (0..4000)
        .map(|i| {
            simulate(&problem, 16, path_seed(77, i))
                .unwrap()
                .terminal()
                .clone()
        })
        .collect();
    for c in 0..2 {
        let comp: Vec<f64> = finals.iter().map(|x| x[c]).collect();
        let s = Summary::of(&comp).unwrap();
        assert!(
            (s.mean - x0[c]).abs() <= 3.0 * s.std_err,
            "component {c}: {} ± {}",
            s.mean,
            s.std_err
        );
    }
}

#[test]
fn rotation_single_path_terminal_error() {
    let problem = BuiltinModel::Rotation
        .problem(FRAC_PI_2, 0.0, 0.0, 1.0)
        .unwrap();
    let path = simulate(&problem, 1 << 12, 4).unwrap();
    let exact = closed_form_for_path(BuiltinModel::Rotation, FRAC_PI_2, 0.0, &path).unwrap();
    assert!((path.terminal() - exact.last().unwrap()).norm() <= 0.1);
}

#[test]
fn closed_forms() {
    let times = [0.0, 0.5, 1.0];
    let w = [0.0, 0.3, -1.2];
    let n = [0, 1, 3];
    for beta in [0.2, 1.0, 2.5] {
        for x in closed_form_oracle(BuiltinModel::Rotation, beta, 0.0, 0.0, &times, &w, &n).unwrap()
        {
            assert!((x.norm() - 1.0).abs() < 1e-15);
        }
        for x in closed_form_oracle(
            BuiltinModel::ReflectedRotation,
            beta,
            1.0,
            0.0,
            &times,
            &w,
            &n,
        )
        .unwrap()
        {
            assert!((x.norm() - 1.0).abs() < 1e-15);
        }
    }
    let x = closed_form_oracle(
        BuiltinModel::DampedRotation,
        FRAC_PI_2,
        0.0,
        0.0,
        &[1.0],
        &[0.4],
        &[0],
    )
    .unwrap();
    let sphere = ImplicitManifold::unit_sphere();
    assert!((x[0].norm() - (-1.0_f64).exp()).abs() < 1e-15);
    assert!((sphere.distance(&x[0]).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-12);
}

#[test]
fn damped_radius_tracks_formula() {
    let beta = FRAC_PI_2;
    let n = 1000;
    let problem = BuiltinModel::DampedRotation
        .problem(beta, 0.0, 0.0, 1.0)
        .unwrap();
    let envelope = 5.0 * (1.0 / n as f64).sqrt();
    for i in 0..20 {
        let path = simulate(&problem, n, path_seed(5, i)).unwrap();
        for (t, x) in path.times.iter().zip(&path.states) {
            assert!((x.norm() - decaying_rotation_radius(beta, *t)).abs() <= envelope);
        }
    }
}

#[test]
fn rotation_error_decreases_under_refinement() {
    let problem = BuiltinModel::Rotation.problem(0.7, 0.0, 0.0, 1.0).unwrap();
    let mean_error = |n: usize| {
        let errs: Vec<f64> = (0..200)
            .map(|i| {
                let path = simulate(&problem, n, path_seed(3, i)).unwrap();
                let exact = closed_form_for_path(BuiltinModel::Rotation, 0.7, 0.0, &path).unwrap();
                path.states
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        Summary::of(&errs).unwrap()
    };
    let levels: Vec<Summary> = [64, 128, 256, 512].iter().map(|&n| mean_error(n)).collect();
    for w in levels.windows(2) {
        assert!(
            w[1].mean <= w[0].mean + 2.0 * w[0].std_err,
            "{} -> {}",
            w[0].mean,
            w[1].mean
        );
    }
}

#[test]
fn jump_log_matches_coefficients() {
    let lambda = 3.0;
    let model = BuiltinModel::ReflectedRotation;
    let coeffs = model.coefficients(lambda);
    let problem = model.problem(0.8, lambda, 0.0, 2.0).unwrap();
    let path = simulate(&problem, 200, 12).unwrap();
    assert!(!path.jump_log.is_empty());
    for j in &path.jump_log {
        assert!(j.time > 0.0 && j.time <= 2.0);
        let mark = &problem.jumps.marks()[j.mark_index].value;
        assert_eq!(j.displacement, coeffs.jump(j.time, &j.pre_state, mark));
        let post = j.post_state();
        assert_eq!(post, v(&[j.pre_state[0], -j.pre_state[1], -j.pre_state[2]]));
    }
}

#[test]
fn stratonovich_drifts_of_examples() {
    let x = v(&[0.3, -0.8, 0.52]);
    let c33 = BuiltinModel::Rotation.coefficients(0.0);
    let c34 = BuiltinModel::DampedRotation.coefficients(0.0);
    for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference] {
        let s33 = ito_to_stratonovich_drift(&c33, 0.0, &x, mode, DEFAULT_FD_STEP).unwrap();
        assert!(s33.norm() < 1e-9);
        let s34 = ito_to_stratonovich_drift(&c34, 0.0, &x, mode, DEFAULT_FD_STEP).unwrap();
        assert!((s34 - v(&[0.0, 0.8, -0.52])).norm() < 1e-9);
    }
}

#[test]
fn builtin_constants_bound_sampled_quotients() {
    let sphere = ImplicitManifold::unit_sphere();
    let samples: Vec<Vector> = sphere
        .sample_tube(400, 0.2, 8)
        .unwrap()
        .into_iter()
        .map(|p| p.point * 3.0)
        .collect();
    for model in BuiltinModel::ALL {
        let lambda = 1.5;
        let lip = model.lipschitz(lambda);
        let q = LipschitzQuotients::sample(
            &model.coefficients(lambda),
            &model.jump_measure(lambda),
            &samples,
            0.0,
        )
        .unwrap();
        assert!(
            q.within(lip.mu(), &model.jump_measure(lambda), 1e-12),
            "{model}: {q:?}"
        );
        assert!(lip.c() >= 1.0 + 2.0 * lip.mu() + lip.mu() * lip.mu() + lip.rho_sq_integral());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), beta in 0.0..3.0f64, lambda in 0.0..3.0f64) {
        let problem = BuiltinModel::ReflectedRotation.problem(beta, lambda, 0.0, 1.0).unwrap();
        let a = simulate(&problem, 50, seed).unwrap();
        let b = simulate(&problem, 50, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.states[0], &problem.x0);
        prop_assert!(a.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*a.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_coefficients_keep_state(x in prop::collection::vec(-5.0..5.0f64, 1..5), n in 1usize..40) {
        let m = x.len();
        let problem = SdeProblem::new(CoefficientSet::zero(m, 2), JumpMeasure::empty(), 0.0, Vector::from_vec(x), 1.0).unwrap();
        let path = simulate(&problem, n, 1).unwrap();
        prop_assert!(path.states.iter().all(|s| *s == problem.x0));
    }

    #[test]
    fn coefficient_fields_are_finite(x in prop::collection::vec(-1e3..1e3f64, 3), lambda in 0.0..10.0f64) {
        let x = Vector::from_vec(x);
        for model in BuiltinModel::ALL {
            let c = model.coefficients(lambda);
            prop_assert!(c.drift(0.0, &x).iter().all(|v| v.is_finite()));
            for a in 0..c.dim_noise() {
                prop_assert!(c.diffusion_column(a, 0.0, &x).iter().all(|v| v.is_finite()));
            }
            prop_assert!(c.jump(0.0, &x, &v(&[1.0])).iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn non_finite_drift_reports_step() {
    let coeffs = CoefficientSet::new(1, field(|_, x| v(&[1.0 / (x[0] - 0.5)])), vec![]);
    let problem = SdeProblem::new(coeffs, JumpMeasure::empty(), 0.0, v(&[0.5]), 1.0).unwrap();
    assert!(simulate(&problem, 4, 0).is_err());
}
