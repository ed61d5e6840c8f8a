use confluent_prony::check::jacobian_fd_error;
use confluent_prony::experiment::match_parameters;
use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::model::ModelSampler;
use confluent_prony::solvers::{esprit_solve, lsq_refine, prony_solve, SolverOptions};
use confluent_prony::stability::{
    inverse_jacobian, jacobian, local_accuracy, worst_case_perturbation,
};
use confluent_prony::structmat::confluent_vandermonde_det;
use confluent_prony::ConfluentModel;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model_from(seed: u64) -> ConfluentModel {
    ModelSampler::default().sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn simple_model_from(seed: u64) -> ConfluentModel {
    let sampler = ModelSampler {
        max_multiplicity: 1,
        ..ModelSampler::default()
    };
    sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn worst(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inverse_jacobian_inverts(seed in any::<u64>()) {
        let model = model_from(seed);
        let j = jacobian(&model);
        let j_inv = inverse_jacobian(&model).unwrap();
        let r = model.num_params();
        let err = (&j_inv * &j - DMatrix::<Complex64>::identity(r, r))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let scale = j_inv.iter().map(|z| z.norm()).fold(0.0, f64::max)
            * j.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale.max(1.0), "err {err:e} scale {scale:e}");
    }

    #[test]
    fn analytic_jacobian_matches_differences(seed in any::<u64>()) {
        prop_assert!(jacobian_fd_error(&model_from(seed)) <= 1e-6);
    }

    #[test]
    fn worst_case_perturbation_attains_row_norm(seed in any::<u64>()) {
        let model = model_from(seed);
        let j_inv = inverse_jacobian(&model).unwrap();
        let epsilon = 1e-10;
        for p in 0..model.num_params() {
            let row: Vec<Complex64> = j_inv.row(p).iter().copied().collect();
            let delta = worst_case_perturbation(&row, epsilon);
            prop_assert!(delta.iter().all(|d| (d.norm() - epsilon).abs() <= 1e-25));
            let attained: Complex64 = row.iter().zip(&delta).map(|(a, d)| a * d).sum();
            let l1: f64 = row.iter().map(|z| z.norm()).sum();
            prop_assert!((attained - Complex64::new(epsilon * l1, 0.0)).norm() <= 1e-12 * epsilon * l1);
        }
    }

    #[test]
    fn local_accuracy_is_linear_in_epsilon(seed in any::<u64>()) {
        let model = model_from(seed);
        let a = local_accuracy(&model, 1e-10).unwrap();
        let b = local_accuracy(&model, 1e-7).unwrap();
        for (x, y) in a.per_parameter.values.iter().zip(&b.per_parameter.values) {
            prop_assert!((y / x - 1e3).abs() <= 1e-9);
        }
    }

    #[test]
    fn noise_free_simple_nodes_round_trip(seed in any::<u64>()) {
        let truth = simple_model_from(seed);
        let m = prony_map(&truth, 2 * truth.num_magnitudes());
        let opts = SolverOptions::default();
        for report in [
            prony_solve(&m, truth.multiplicities(), &opts).unwrap(),
            esprit_solve(&m, truth.multiplicities(), &opts).unwrap(),
        ] {
            let err = match_parameters(&truth, &report.recovered).unwrap();
            prop_assert!(worst(&err.values) <= 1e-9, "{err:?}");
        }
    }

    #[test]
    fn solvers_are_permutation_covariant(seed in any::<u64>()) {
        // same moments, node order of the multiplicity signature reversed
        let truth = model_from(seed);
        let mut mults = truth.multiplicities().to_vec();
        mults.reverse();
        let m = perturb(&prony_map(&truth, 2 * truth.num_magnitudes() + 4), &NoiseSpec::new(1e-11, seed)).unwrap();
        let opts = SolverOptions::default();
        for solve in [prony_solve, esprit_solve] {
            let a = solve(&m, truth.multiplicities(), &opts).unwrap();
            let b = solve(&m, &mults, &opts).unwrap();
            let diff = match_parameters(&a.recovered, &b.recovered).unwrap();
            let scale = worst(&match_parameters(&truth, &a.recovered).unwrap().values);
            prop_assert!(worst(&diff.values) <= 1e-3 * scale + 1e-12, "{diff:?}");
        }
    }

    #[test]
    fn lsq_residual_never_increases(seed in any::<u64>()) {
        let truth = model_from(seed);
        let m = perturb(&prony_map(&truth, truth.num_params() + 2), &NoiseSpec::new(1e-8, seed)).unwrap();
        let report = lsq_refine(&m, &truth, &SolverOptions::default()).unwrap();
        prop_assert!(report.residual_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn determinant_vanishes_monotonically_as_nodes_merge() {
    let mults = [2usize, 2];
    let dets: Vec<f64> = [0.5, 0.2, 0.1, 0.05, 0.01, 0.0]
        .iter()
        .map(|&gap| {
            let nodes = [Complex64::new(0.3, 0.0), Complex64::new(0.3 + gap, 0.0)];
            confluent_vandermonde_det(&nodes, &mults).norm()
        })
        .collect();
    assert!(dets.windows(2).all(|w| w[1] < w[0]), "{dets:?}");
    assert_eq!(dets[dets.len() - 1], 0.0);
}

#[test]
fn accuracy_grows_as_highest_coefficient_shrinks() {
    let mut model = ConfluentModel::from_real(&[0.2, 0.7], &[&[0.5, 1.0], &[0.9, 0.4]]).unwrap();
    let mut previous = 0.0;
    for lead in [10.0, 1.0, 0.1, 0.01] {
        model.set_magnitude(0, 1, Complex64::new(lead, 0.0));
        let acc = local_accuracy(&model, 1e-10).unwrap().per_parameter.values[2];
        assert!(acc > previous);
        previous = acc;
    }
}
