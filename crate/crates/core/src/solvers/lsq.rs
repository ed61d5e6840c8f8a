use super::{Method, SolveReport, SolverOptions};
use crate::error::{PronyError, Result};
use crate::forward::prony_map;
use crate::linalg::{least_squares, ComplexVector};
use crate::model::{decode_params, encode_params, ConfluentModel, MeasurementVector, ParameterVector};
use crate::stability::{default_tolerances, jacobian_rows};

const MAX_HALVINGS: u32 = 30;

/// Damped Gauss–Newton on `‖P_S(x) - m‖₂²` starting from `initial`.
///
/// The forward map is holomorphic in every parameter, so the least-squares
/// step computed over ℂ coincides with the step for the stacked real and
/// imaginary parts. Steps are halved until the residual decreases; a step
/// that cannot be made to decrease the residual ends the iteration.
pub fn lsq_refine(
    m: &MeasurementVector,
    initial: &ConfluentModel,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let (node_tol, mag_tol) = default_tolerances(initial);
    let regularity = crate::model::validate_with(initial, node_tol, mag_tol);
    if !regularity.is_regular() {
        return Err(PronyError::Degenerate(format!(
            "initial guess is a critical point: {}",
            regularity.failures[0]
        )));
    }
    let r = initial.num_params();
    if m.len() < r {
        return Err(PronyError::ShortInput {
            needed: r,
            available: m.len(),
        });
    }
    let mults = initial.multiplicities().to_vec();
    let s = m.len();
    let data = ComplexVector::from_column_slice(m.values());
    let residual_of = |model: &ConfluentModel| -> ComplexVector {
        ComplexVector::from_column_slice(prony_map(model, s).values()) - &data
    };

    let mut model = initial.clone();
    let mut x = ComplexVector::from_vec(encode_params(&model).into_entries());
    let mut res = residual_of(&model);
    let mut norm = res.norm();
    let initial_norm = norm;
    let mut trace = vec![norm];
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;

    while iterations < opts.max_lsq_iterations {
        if norm == 0.0 {
            converged = true;
            break;
        }
        let jac = jacobian_rows(&model, s);
        let step = least_squares(&jac, &(-&res))?.solution;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &x + step.scale(t);
            let cand_model = decode_params(
                &ParameterVector::new(candidate.iter().copied().collect()),
                &mults,
            )?;
            let cand_res = residual_of(&cand_model);
            let cand_norm = cand_res.norm();
            if cand_norm < norm {
                accepted = Some((candidate, cand_model, cand_res, cand_norm));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((candidate, cand_model, cand_res, cand_norm)) = accepted else {
            stalled = true;
            break;
        };
        let step_size = (&candidate - &x).camax();
        x = candidate;
        model = cand_model;
        res = cand_res;
        norm = cand_norm;
        trace.push(norm);
        if step_size < opts.lsq_step_tolerance * (1.0 + x.camax()) {
            converged = true;
            break;
        }
    }

    let mut report = SolveReport::new(model, Method::Lsq);
    report.record("iterations", iterations as f64);
    report.record("initial_residual", initial_norm);
    report.record("residual", norm);
    report.record("converged", f64::from(u8::from(converged || stalled)));
    report.record("stalled", f64::from(u8::from(stalled)));
    report.residual_trace = trace;

    // a stall far from a small residual means the damping could not find descent
    if stalled && norm > 1e-6 * (1.0 + m.max_abs()) {
        return Err(PronyError::NonConvergence {
            iterations,
            best: Box::new(report),
        });
    }
    report.record_conditioning();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::match_parameters;
    use crate::forward::{perturb, NoiseSpec};
    use crate::model::ModelSampler;
    use crate::stability::local_accuracy;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nudge(model: &ConfluentModel, delta: f64) -> ConfluentModel {
        let v: Vec<Complex64> = encode_params(model)
            .into_entries()
            .into_iter()
            .enumerate()
            .map(|(p, z)| z + Complex64::new(delta, -delta * (p % 3) as f64 / 2.0))
            .collect();
        decode_params(&ParameterVector::new(v), model.multiplicities()).unwrap()
    }

    #[test]
    fn exact_start_is_fixed_point() {
        let truth = ConfluentModel::from_real(&[0.2, 0.7], &[&[0.5, -0.3], &[0.9, 0.4]]).unwrap();
        let m = prony_map(&truth, truth.num_params());
        let report = lsq_refine(&m, &truth, &SolverOptions::default()).unwrap();
        let err = match_parameters(&truth, &report.recovered).unwrap();
        assert!(err.values.iter().all(|&e| e <= 1e-14), "{err:?}");
    }

    #[test]
    fn noisy_error_within_local_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..10 {
            let truth = ModelSampler::default().sample(&mut rng);
            let m = perturb(&prony_map(&truth, truth.num_params()), &NoiseSpec::new(1e-10, trial))
                .unwrap();
            let report = lsq_refine(&m, &truth, &SolverOptions::default()).unwrap();
            let err = match_parameters(&truth, &report.recovered).unwrap();
            let acc = local_accuracy(&truth, 1e-10).unwrap();
            for (e, bound) in err.values.iter().zip(&acc.per_parameter.values) {
                assert!(*e <= 3.0 * bound, "error {e} vs bound {bound}");
            }
        }
    }

    #[test]
    fn basin_of_attraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for trial in 0..10 {
            let truth = ModelSampler::default().sample(&mut rng);
            let m = perturb(&prony_map(&truth, truth.num_params()), &NoiseSpec::new(1e-10, trial))
                .unwrap();
            let opts = SolverOptions::default();
            let from_truth = lsq_refine(&m, &truth, &opts).unwrap();
            let from_nearby = lsq_refine(&m, &nudge(&truth, 1e-4), &opts).unwrap();
            let diff = match_parameters(&from_truth.recovered, &from_nearby.recovered).unwrap();
            assert!(diff.values.iter().all(|&d| d <= 1e-9), "{diff:?}");
        }
    }

    #[test]
    fn residual_trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let truth = ModelSampler::default().sample(&mut rng);
            let m = prony_map(&truth, truth.num_params() + 2);
            let report = lsq_refine(&m, &nudge(&truth, 1e-3), &SolverOptions::default()).unwrap();
            assert!(report.residual_trace.windows(2).all(|w| w[1] < w[0]));
            assert!(report.residual_trace.len() >= 2);
        }
    }

    #[test]
    fn critical_start_rejected() {
        let bad = ConfluentModel::from_real(&[0.3, 0.3], &[&[1.0], &[1.0]]).unwrap();
        let m = MeasurementVector::new(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            lsq_refine(&m, &bad, &SolverOptions::default()),
            Err(PronyError::Degenerate(_))
        ));
    }

    #[test]
    fn unreachable_data_reports_non_convergence() {
        // data that no single real-node model fits, started far away
        let start = ConfluentModel::from_real(&[0.5], &[&[1.0]]).unwrap();
        let m = MeasurementVector::new(
            [1.0, -5.0, 0.0, 7.0, -3.0].map(|x| Complex64::new(x, 0.0)).to_vec(),
        )
        .unwrap();
        let opts = SolverOptions {
            max_lsq_iterations: 200,
            ..SolverOptions::default()
        };
        match lsq_refine(&m, &start, &opts) {
            Err(PronyError::NonConvergence { best, .. }) => {
                assert!(best.diagnostics["residual"] <= best.diagnostics["initial_residual"]);
            }
            Ok(report) => assert!(report.diagnostics["stalled"] == 0.0),
            Err(other) => panic!("unexpected {other:?}"),
        }
    }
}
