//! Small dense helpers. Matrices are nalgebra types; singular value and
//! eigenvalue decompositions are delegated to faer, whose complex SVD and
//! Schur iterations stay accurate for clustered singular values and for
//! matrices with exactly repeated eigenvalues.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PronyError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Maximum absolute row sum.
pub fn inf_norm(a: &ComplexMatrix) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.nrows(), a.ncols(), |i, j| *a.get(i, j))
}

/// Thin singular value decomposition `A = U diag(σ) Vᴴ`, `σ` non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if a.is_empty() {
        return Err(PronyError::InvalidInput("empty matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PronyError::InvalidInput("non-finite matrix entry".into()));
    }
    let f = to_faer(a)
        .thin_svd()
        .map_err(|e| PronyError::Degenerate(format!("SVD did not converge: {e:?}")))?;
    Ok(Svd {
        u: from_faer(f.U()),
        singular_values: f.S().column_vector().iter().map(|z| z.re).collect(),
        v: from_faer(f.V()),
    })
}

pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    svd(a).map(|s| s.singular_values)
}

pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).map_or(f64::NAN, |s| s[0])
}

/// Dense inverse by partially pivoted LU.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(PronyError::InvalidInput(format!(
            "cannot invert a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| PronyError::Singular("zero pivot in LU".into()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PronyError::Singular("non-finite inverse".into()));
    }
    Ok(inv)
}

pub fn determinant(a: &ComplexMatrix) -> Complex64 {
    a.clone().lu().determinant()
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
pub struct LeastSquares {
    pub solution: ComplexVector,
    /// `‖A x - b‖₂`.
    pub residual: f64,
    /// Ratio of the smallest to the largest singular value of `A`.
    pub reciprocal_condition: f64,
}

pub fn least_squares(a: &ComplexMatrix, b: &ComplexVector) -> Result<LeastSquares> {
    if a.nrows() != b.len() {
        return Err(PronyError::InvalidInput(format!(
            "{} rows but right-hand side of length {}",
            a.nrows(),
            b.len()
        )));
    }
    let Svd {
        u,
        singular_values: sv,
        v,
    } = svd(a)?;
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    if smax == 0.0 {
        return Err(PronyError::Singular("zero matrix".into()));
    }
    // x = V diag(1/σ) Uᴴ b, dropping exactly zero singular values
    let mut coords = u.adjoint() * b;
    for (c, s) in coords.iter_mut().zip(&sv) {
        *c = if *s > 0.0 { *c / *s } else { Complex64::new(0.0, 0.0) };
    }
    let solution = v * coords;
    let residual = (a * &solution - b).norm();
    Ok(LeastSquares {
        solution,
        residual,
        reciprocal_condition: smin / smax,
    })
}

/// Eigenvalues of a square complex matrix.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(PronyError::InvalidInput("eigenvalues need a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PronyError::InvalidInput("non-finite matrix entry".into()));
    }
    to_faer(a)
        .eigenvalues()
        .map_err(|e| PronyError::Degenerate(format!("eigenvalue iteration did not converge: {e:?}")))
}

/// Writes `i,j,re,im` rows, one per entry.
pub fn write_matrix_csv<W: std::io::Write>(a: &ComplexMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "re", "im"])?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            w.write_record([i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    #[test]
    fn norms() {
        let a = real(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(inf_norm(&a), 7.0);
        assert!((spectral_norm(&real(2, 2, &[3.0, 0.0, 0.0, -5.0])) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn singular_inverse_is_error() {
        let a = real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(inverse(&a), Err(PronyError::Singular(_))));
    }

    #[test]
    fn least_squares_line_fit() {
        // fit y = 1 + 2x through exact points plus one outlier-free extra row
        let a = real(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = ComplexVector::from_iterator(3, [1.0, 3.0, 5.0].map(|x| Complex64::new(x, 0.0)));
        let ls = least_squares(&a, &b).unwrap();
        assert!((ls.solution[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((ls.solution[1] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(ls.residual < 1e-14);
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotation() {
        let a = real(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((ev[0] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(3.0, 0.0)).norm() < 1e-14);

        let rot = real(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = eigenvalues(&rot).unwrap();
        ev.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }
}
