//! Self-checks run by `prony check`: algebraic identities that must hold on
//! random regular models.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::experiment::match_parameters;
use crate::forward::prony_map;
use crate::linalg::{determinant, ComplexMatrix};
use crate::model::{decode_params, encode_params, ConfluentModel, ModelSampler, ParameterVector};
use crate::solvers::{esprit_solve, prony_solve, SolverOptions};
use crate::stability::jacobian;
use crate::structmat::{
    confluent_vandermonde, confluent_vandermonde_det, factorization_residual,
    gautschi_inverse_bound,
};

/// Central finite-difference Jacobian of the forward map with `R` rows.
///
/// Every parameter is complex and the map is holomorphic in each, so the
/// derivative is the real-direction difference quotient with step
/// `1e-6 (1 + |x_p|)`; the imaginary direction gives the same value times `i`.
pub fn finite_difference_jacobian(model: &ConfluentModel) -> ComplexMatrix {
    let r = model.num_params();
    let x = encode_params(model).into_entries();
    let eval = |v: Vec<Complex64>| {
        let m = decode_params(&ParameterVector::new(v), model.multiplicities())
            .expect("same layout");
        prony_map(&m, r).values().to_vec()
    };
    let mut j = ComplexMatrix::zeros(r, r);
    for p in 0..r {
        let h = 1e-6 * (1.0 + x[p].norm());
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[p] += h;
        minus[p] -= h;
        for (k, (a, b)) in eval(plus).into_iter().zip(eval(minus)).enumerate() {
            j[(k, p)] = (a - b) / (2.0 * h);
        }
    }
    j
}

/// Largest entrywise error of the analytic Jacobian against finite
/// differences, relative to the largest entry.
pub fn jacobian_fd_error(model: &ConfluentModel) -> f64 {
    let analytic = jacobian(model);
    let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (analytic - finite_difference_jacobian(model))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn run_check(
    name: &'static str,
    cases: usize,
    tolerance: f64,
    seed: u64,
    sampler: &ModelSampler,
    keep: impl Fn(&ConfluentModel) -> bool,
    measure: impl Fn(&ConfluentModel) -> f64,
) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..cases)
        .map(|_| loop {
            let model = sampler.sample(&mut rng);
            if keep(&model) {
                break measure(&model);
            }
        })
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    CheckOutcome {
        name,
        cases,
        worst,
        tolerance,
        passed: worst <= tolerance,
    }
}

fn small_models() -> ModelSampler {
    ModelSampler {
        min_node_modulus: 0.1,
        max_node_modulus: 2.0,
        min_gap: 0.2,
        ..ModelSampler::default()
    }
}

/// `M_C = U B Uᵀ` residual, relative to `‖M_C‖`.
pub fn check_factorization(cases: usize, seed: u64) -> CheckOutcome {
    run_check("factorization", cases, 1e-12, seed, &ModelSampler::default(), |_| true, |m| {
        factorization_residual(m)
    })
}

/// Closed-form confluent Vandermonde determinant against LU, relative, for `C ≤ 8`.
pub fn check_determinant(cases: usize, seed: u64) -> CheckOutcome {
    let keep = |m: &ConfluentModel| m.num_magnitudes() <= 8;
    run_check("determinant", cases, 1e-8, seed, &small_models(), keep, |m| {
        let c = m.num_magnitudes();
        let closed = confluent_vandermonde_det(m.nodes(), m.multiplicities());
        let lu = determinant(&confluent_vandermonde(m.nodes(), m.multiplicities(), c));
        (closed - lu).norm() / lu.norm()
    })
}

pub fn check_jacobian(cases: usize, seed: u64) -> CheckOutcome {
    run_check("jacobian-fd", cases, 1e-6, seed, &ModelSampler::default(), |_| true, jacobian_fd_error)
}

/// Inverse-Vandermonde bound minus `‖U⁻¹‖∞` must stay non-negative; the
/// reported quantity is the relative shortfall `max(0, 1 - bound/‖U⁻¹‖∞)`.
pub fn check_gautschi(cases: usize, seed: u64) -> CheckOutcome {
    let sampler = ModelSampler {
        max_nodes: 6,
        max_multiplicity: 1,
        min_gap: 0.05,
        ..ModelSampler::default()
    };
    run_check("gautschi", cases, 1e-12, seed, &sampler, |_| true, |m| {
        let n = m.num_nodes();
        let u = confluent_vandermonde(m.nodes(), &vec![1; n], n);
        let actual = crate::linalg::inf_norm(&crate::linalg::inverse(&u).expect("distinct nodes"));
        let bound = gautschi_inverse_bound(m.nodes()).expect("distinct nodes");
        (1.0 - bound / actual).max(0.0)
    })
}

/// Moments beyond the minimal `2C` used by the noise-free round trip. At
/// exactly `2C` moments, rounding in the data alone is amplified past
/// `1e-6` for several triple nodes; with `C = 8` this keeps `S ≤ 32`.
pub const ROUND_TRIP_EXTRA_MEASUREMENTS: usize = 16;

/// Largest error of noise-free Prony and ESPRIT recovery with nodes at least
/// 0.3 apart, divided by the target (`1e-9` when every node is simple,
/// `1e-6` otherwise); passes at `≤ 1`.
pub fn check_round_trip(cases: usize, seed: u64) -> CheckOutcome {
    let sampler = ModelSampler {
        min_gap: 0.3,
        ..ModelSampler::default()
    };
    run_check("round-trip", cases, 1.0, seed, &sampler, |_| true, |truth| {
        let target = if truth.max_multiplicity() == 1 { 1e-9 } else { 1e-6 };
        let m = prony_map(truth, 2 * truth.num_magnitudes() + ROUND_TRIP_EXTRA_MEASUREMENTS);
        let opts = SolverOptions::default();
        [
            prony_solve(&m, truth.multiplicities(), &opts),
            esprit_solve(&m, truth.multiplicities(), &opts),
        ]
        .into_iter()
        .map(|report| {
            report
                .and_then(|r| match_parameters(truth, &r.recovered))
                .map(|e| e.values.into_iter().fold(0.0, f64::max))
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
            / target
    })
}

/// All suites with their default case counts.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_factorization(100, seed),
        check_determinant(100, seed),
        check_jacobian(50, seed),
        check_gautschi(100, seed),
        check_round_trip(100, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_single_node() {
        let m = ConfluentModel::from_real(&[0.5], &[&[2.0]]).unwrap();
        let fd = finite_difference_jacobian(&m);
        assert!((fd[(1, 1)] - Complex64::new(2.0, 0.0)).norm() < 1e-9);
        assert!(jacobian_fd_error(&m) < 1e-9);
    }

    #[test]
    fn all_suites_pass() {
        for outcome in run_all(1) {
            assert!(outcome.passed, "{outcome:?}");
        }
    }
}
