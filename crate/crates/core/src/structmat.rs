//! Structured matrices of the confluent Prony problem.
//!
//! The square Hankel data matrix `M_C` factors as `U B Uᵀ` where `U` is the
//! confluent Vandermonde matrix of the nodes and `B` is block diagonal in
//! the magnitudes. Condition numbers of these factors drive the stability
//! estimates of the Prony method.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::forward::{falling_factorial, prony_map};
use crate::linalg::{inf_norm, inverse, ComplexMatrix, ComplexVector};
use crate::model::{ConfluentModel, MeasurementVector};

/// Rows `k = 0 … num_rows-1` of `[ξ_i^k, k ξ_i^{k-1}, …, (k)_{l_i-1} ξ_i^{k-l_i+1}]` per node.
pub fn confluent_vandermonde(
    nodes: &[Complex64],
    multiplicities: &[usize],
    num_rows: usize,
) -> ComplexMatrix {
    assert_eq!(nodes.len(), multiplicities.len(), "one multiplicity per node");
    let cols: usize = multiplicities.iter().sum();
    let mut u = ComplexMatrix::zeros(num_rows, cols);
    let mut col = 0;
    for (xi, &l) in nodes.iter().zip(multiplicities) {
        let mut powers = Vec::with_capacity(num_rows);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..num_rows {
            powers.push(p);
            p *= xi;
        }
        for j in 0..l {
            for k in j..num_rows {
                u[(k, col + j)] = powers[k - j] * falling_factorial(k, j);
            }
        }
        col += l;
    }
    u
}

/// Closed-form determinant of the square confluent Vandermonde matrix.
pub fn confluent_vandermonde_det(nodes: &[Complex64], multiplicities: &[usize]) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for j in 0..nodes.len() {
        for i in 0..j {
            det *= (nodes[j] - nodes[i]).powu((multiplicities[i] * multiplicities[j]) as u32);
        }
    }
    for &l in multiplicities {
        for nu in 1..l {
            det *= falling_factorial(nu, nu);
        }
    }
    det
}

/// `B = diag(B_1 … B_n)` with `B_i[r][s] = binom(r+s, r) a_{i,r+s}` above the anti-diagonal.
pub fn magnitude_block_matrix(model: &ConfluentModel) -> ComplexMatrix {
    let c = model.num_magnitudes();
    let mut b = ComplexMatrix::zeros(c, c);
    let mut offset = 0;
    for mags in model.magnitudes() {
        let l = mags.len();
        for r in 0..l {
            for s in 0..l - r {
                b[(offset + r, offset + s)] = mags[r + s] * binomial(r + s, r);
            }
        }
        offset += l;
    }
    b
}

fn binomial(n: usize, k: usize) -> f64 {
    falling_factorial(n, k) / falling_factorial(k, k)
}

/// `M x = rhs` with `M[i][j] = m_{i+j}` and `rhs[i] = -m_{C+i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelSystem {
    pub matrix: ComplexMatrix,
    pub rhs: ComplexVector,
}

pub fn hankel_system(m: &MeasurementVector, c: usize, num_rows: usize) -> Result<HankelSystem> {
    if c == 0 || num_rows < c {
        return Err(PronyError::InvalidInput(format!(
            "Hankel system needs 1 <= C <= rows, got C={c}, rows={num_rows}"
        )));
    }
    let needed = num_rows + c;
    if m.len() < needed {
        return Err(PronyError::ShortInput {
            needed,
            available: m.len(),
        });
    }
    Ok(HankelSystem {
        matrix: hankel(m.values(), num_rows, c),
        rhs: ComplexVector::from_iterator(num_rows, (0..num_rows).map(|i| -m[c + i])),
    })
}

/// Dense `rows × cols` Hankel matrix over `values`.
pub fn hankel(values: &[Complex64], rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows + cols - 1 <= values.len(), "not enough values for Hankel matrix");
    ComplexMatrix::from_fn(rows, cols, |i, j| values[i + j])
}

/// `‖M_C - U B Uᵀ‖∞ / max(1, ‖M_C‖∞)`.
pub fn factorization_residual(model: &ConfluentModel) -> f64 {
    let c = model.num_magnitudes();
    let m = prony_map(model, 2 * c - 1);
    let mc = hankel(m.values(), c, c);
    let u = confluent_vandermonde(model.nodes(), model.multiplicities(), c);
    let b = magnitude_block_matrix(model);
    let diff = &mc - &u * b * u.transpose();
    inf_norm(&diff) / inf_norm(&mc).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixNorm {
    #[default]
    Infinity,
    Spectral,
}

/// `κ(A) = ‖A‖ ‖A⁻¹‖`.
pub fn condition_number(a: &ComplexMatrix, norm: MatrixNorm) -> Result<f64> {
    if !a.is_square() {
        return Err(PronyError::InvalidInput(format!(
            "condition number of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let kappa = match norm {
        MatrixNorm::Infinity => inf_norm(a) * inf_norm(&inverse(a)?),
        MatrixNorm::Spectral => {
            let sv = crate::linalg::singular_values(a)?;
            let (smax, smin) = (sv[0], sv[sv.len() - 1]);
            if smin == 0.0 {
                return Err(PronyError::Singular("zero singular value".into()));
            }
            smax / smin
        }
    };
    if !kappa.is_finite() || kappa * f64::EPSILON >= 1.0 {
        return Err(PronyError::Singular(format!(
            "condition number {kappa:e} beyond working precision"
        )));
    }
    Ok(kappa)
}

/// Upper bound on `‖U⁻¹‖∞` for the plain (all `l_i = 1`) Vandermonde matrix of `nodes`.
pub fn gautschi_inverse_bound(nodes: &[Complex64]) -> Result<f64> {
    let mut bound: f64 = 0.0;
    for (i, xi) in nodes.iter().enumerate() {
        let mut product = 1.0;
        let mut reciprocal_gaps = 0.0;
        for (j, xj) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let gap = (xi - xj).norm();
            if gap == 0.0 {
                return Err(PronyError::Degenerate(format!(
                    "nodes {} and {} coincide",
                    i.min(j) + 1,
                    i.max(j) + 1
                )));
            }
            product *= ((1.0 + xj.norm()) / gap).powi(2);
            reciprocal_gaps += 1.0 / gap;
        }
        let b = (1.0 + xi.norm()).max(1.0 + 2.0 * (1.0 + xi.norm()) * reciprocal_gaps);
        bound = bound.max(b * product);
    }
    Ok(bound)
}
