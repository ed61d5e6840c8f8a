//! Local stability of the confluent Prony map.
//!
//! The Jacobian of the forward map factors as
//! `J = U(ξ_1, l_1+1, …, ξ_n, l_n+1) · diag(D_1 … D_n)`, where each `D_i` is
//! the identity with last column `(0, a_{i,0}, …, a_{i,l_i-1})ᵀ`. Its inverse
//! is therefore `diag(D_i⁻¹) · U⁻¹` with `D_i⁻¹` in closed form. The best
//! possible local accuracy for parameter `p` under moment errors bounded by
//! `ε` is `ε · ‖row_p(J⁻¹)‖₁`: the sup of `|Σ_k row_p[k] Δm_k|` over
//! `|Δm_k| ≤ ε` is attained when every `Δm_k` has modulus `ε` and cancels the
//! phase of `row_p[k]`.
//!
//! The global accuracy (half the largest preimage diameter of all exact
//! measurement vectors within `ε` of the data) is what this linearizes; it
//! is not computed.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::forward::prony_map;
use crate::linalg::{inf_norm, inverse, ComplexMatrix};
use crate::model::{
    encode_params, validate_with, ConfluentModel, Degeneracy, MeasurementVector, PerParameterValues,
};
use crate::solvers::{lsq_refine, SolverOptions};
use crate::structmat::{condition_number, confluent_vandermonde, magnitude_block_matrix, MatrixNorm};

/// Default criticality tolerances `(node, magnitude)`:
/// `1e-12 (1 + max|ξ|)` and `1e-12 max|a|`.
pub fn default_tolerances(model: &ConfluentModel) -> (f64, f64) {
    let xi_max = model.nodes().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let a_max = model
        .magnitudes()
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    (1e-12 * (1.0 + xi_max), 1e-12 * a_max)
}

fn extended_multiplicities(model: &ConfluentModel) -> Vec<usize> {
    model.multiplicities().iter().map(|l| l + 1).collect()
}

/// `diag(D_1 … D_n)`.
fn magnitude_coupling(model: &ConfluentModel) -> ComplexMatrix {
    let r = model.num_params();
    let mut d = ComplexMatrix::identity(r, r);
    let mut offset = 0;
    for mags in model.magnitudes() {
        let l = mags.len();
        for (j, a) in mags.iter().enumerate() {
            d[(offset + j + 1, offset + l)] = *a;
        }
        offset += l + 1;
    }
    d
}

/// `diag(D_1⁻¹ … D_n⁻¹)`: identity with last block column
/// `(0, -a_{i,0}/a_{i,l-1}, …, -a_{i,l-2}/a_{i,l-1}, 1/a_{i,l-1})ᵀ`.
fn magnitude_coupling_inverse(model: &ConfluentModel) -> ComplexMatrix {
    let r = model.num_params();
    let mut d = ComplexMatrix::identity(r, r);
    let mut offset = 0;
    for mags in model.magnitudes() {
        let l = mags.len();
        let lead = mags[l - 1];
        for j in 1..l {
            d[(offset + j, offset + l)] = -mags[j - 1] / lead;
        }
        d[(offset + l, offset + l)] = lead.inv();
        offset += l + 1;
    }
    d
}

/// First `rows` rows of the Jacobian of the forward map, columns in parameter-vector order.
pub fn jacobian_rows(model: &ConfluentModel, rows: usize) -> ComplexMatrix {
    let u = confluent_vandermonde(model.nodes(), &extended_multiplicities(model), rows);
    u * magnitude_coupling(model)
}

/// Square `R × R` Jacobian.
pub fn jacobian(model: &ConfluentModel) -> ComplexMatrix {
    jacobian_rows(model, model.num_params())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    pub critical: bool,
    pub reasons: Vec<Degeneracy>,
}

/// Coincident nodes or a vanishing leading magnitude, within `tol`.
pub fn is_critical(model: &ConfluentModel, tol: f64) -> Criticality {
    let report = validate_with(model, tol, tol);
    Criticality {
        critical: !report.is_regular(),
        reasons: report.failures,
    }
}

fn ensure_regular(model: &ConfluentModel) -> Result<()> {
    let (node_tol, mag_tol) = default_tolerances(model);
    let report = validate_with(model, node_tol, mag_tol);
    match report.failures.first() {
        Some(reason) => Err(PronyError::Singular(format!(
            "Jacobian is singular at a critical point: {reason}"
        ))),
        None => Ok(()),
    }
}

/// `U⁻¹(ξ_1, l_1+1, …)`; its max row sum is the constant `C₁`.
fn extended_vandermonde_inverse(model: &ConfluentModel) -> Result<ComplexMatrix> {
    let u = confluent_vandermonde(
        model.nodes(),
        &extended_multiplicities(model),
        model.num_params(),
    );
    inverse(&u)
}

/// Jacobian of the inverse map, `diag(D_i⁻¹) · U⁻¹`.
pub fn inverse_jacobian(model: &ConfluentModel) -> Result<ComplexMatrix> {
    ensure_regular(model)?;
    Ok(magnitude_coupling_inverse(model) * extended_vandermonde_inverse(model)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBounds {
    /// `ACC_LOC` per parameter.
    pub per_parameter: PerParameterValues,
    pub epsilon: f64,
    /// `‖U⁻¹(ξ, l+1)‖∞`.
    pub c1: f64,
    /// ℓ¹ norms of the rows of the inverse Jacobian.
    pub row_l1_norms: PerParameterValues,
}

impl AccuracyBounds {
    /// CSV with columns `param,acc_loc,row_l1,c1,epsilon`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["param", "acc_loc", "row_l1", "c1", "epsilon"])?;
        for ((id, acc), row) in self.per_parameter.iter().zip(&self.row_l1_norms.values) {
            w.write_record([
                id.to_string(),
                acc.to_string(),
                row.to_string(),
                self.c1.to_string(),
                self.epsilon.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn local_accuracy(model: &ConfluentModel, epsilon: f64) -> Result<AccuracyBounds> {
    if !(epsilon >= 0.0) {
        return Err(PronyError::InvalidInput(format!(
            "noise bound must be non-negative, got {epsilon}"
        )));
    }
    ensure_regular(model)?;
    let u_inv = extended_vandermonde_inverse(model)?;
    let j_inv = magnitude_coupling_inverse(model) * &u_inv;
    let rows: Vec<f64> = j_inv
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum())
        .collect();
    let labels = model.labels();
    Ok(AccuracyBounds {
        per_parameter: PerParameterValues {
            labels: labels.clone(),
            values: rows.iter().map(|r| epsilon * r).collect(),
        },
        epsilon,
        c1: inf_norm(&u_inv),
        row_l1_norms: PerParameterValues {
            labels,
            values: rows,
        },
    })
}

/// Moment perturbation of modulus `epsilon` per entry that maximizes
/// `|Σ_k row[k] Δm_k|`.
pub fn worst_case_perturbation(row: &[Complex64], epsilon: f64) -> Vec<Complex64> {
    row.iter()
        .map(|z| {
            if *z == Complex64::new(0.0, 0.0) {
                Complex64::new(epsilon, 0.0)
            } else {
                z.conj() / z.norm() * epsilon
            }
        })
        .collect()
}

/// For every parameter, refines from the truth on the worst-case perturbed
/// moments and reports `achieved error / ACC_LOC`. Empty for `epsilon = 0`.
pub fn accuracy_tightness_probe(
    model: &ConfluentModel,
    epsilon: f64,
) -> Result<PerParameterValues> {
    let labels = model.labels();
    if epsilon == 0.0 {
        return Ok(PerParameterValues {
            labels: Vec::new(),
            values: Vec::new(),
        });
    }
    let bounds = local_accuracy(model, epsilon)?;
    let j_inv = inverse_jacobian(model)?;
    let r = model.num_params();
    let exact = prony_map(model, r);
    let truth = encode_params(model);
    let opts = SolverOptions::default();
    let mut ratios = Vec::with_capacity(r);
    for p in 0..r {
        let row: Vec<Complex64> = j_inv.row(p).iter().copied().collect();
        let delta = worst_case_perturbation(&row, epsilon);
        let noisy = MeasurementVector::new(
            exact
                .values()
                .iter()
                .zip(&delta)
                .map(|(m, d)| m + d)
                .collect(),
        )?;
        let report = lsq_refine(&noisy, model, &opts)?;
        let got = encode_params(&report.recovered);
        let achieved = (got.entries()[p] - truth.entries()[p]).norm();
        ratios.push(achieved / bounds.per_parameter.values[p]);
    }
    Ok(PerParameterValues {
        labels,
        values: ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyStabilityEstimate {
    /// `κ∞(U)` of the `C × C` confluent Vandermonde matrix.
    pub u: f64,
    /// `κ∞(B)`.
    pub b: f64,
    /// `max |ξ_i|`.
    pub xi_bound: f64,
    /// `(u² b ε)^{1/l_j}` per node.
    pub predicted_node_error: Vec<f64>,
    /// `u (u² b ε)^{1/max l}`, with the node-bound dependent constant taken as 1;
    /// meaningful for its scaling, not its absolute level.
    pub predicted_magnitude_error: f64,
}

pub fn prony_stability_estimate(
    model: &ConfluentModel,
    epsilon: f64,
) -> Result<PronyStabilityEstimate> {
    let c = model.num_magnitudes();
    let degenerate = |what: &str, e: PronyError| PronyError::Degenerate(format!("{what}: {e}"));
    let u = condition_number(
        &confluent_vandermonde(model.nodes(), model.multiplicities(), c),
        MatrixNorm::Infinity,
    )
    .map_err(|e| degenerate("confluent Vandermonde matrix", e))?;
    let b = condition_number(&magnitude_block_matrix(model), MatrixNorm::Infinity)
        .map_err(|e| degenerate("magnitude block matrix", e))?;
    let base = u * u * b * epsilon;
    let max_l = model.max_multiplicity() as f64;
    Ok(PronyStabilityEstimate {
        u,
        b,
        xi_bound: model.nodes().iter().map(|z| z.norm()).fold(0.0, f64::max),
        predicted_node_error: model
            .multiplicities()
            .iter()
            .map(|&l| base.powf(1.0 / l as f64))
            .collect(),
        predicted_magnitude_error: u * base.powf(1.0 / max_l),
    })
}
