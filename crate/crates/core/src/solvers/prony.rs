use num_complex::Complex64;

use super::{cluster_roots, poly_roots, recover_magnitudes, Method, SolveReport, SolverOptions};
use crate::error::{PronyError, Result};
use crate::linalg::{least_squares, ComplexMatrix};
use crate::model::{ConfluentModel, MeasurementVector};
use crate::structmat::{condition_number, hankel_system, MatrixNorm};

/// Classical Prony: solve the Hankel system for the monic polynomial
/// `q(x) = x^C + Σ q_j x^j`, root it, average root clusters, then fit the
/// magnitudes on every available moment.
pub fn prony_solve(
    m: &MeasurementVector,
    multiplicities: &[usize],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let c: usize = multiplicities.iter().sum();
    if c == 0 {
        return Err(PronyError::InvalidInput("empty multiplicity signature".into()));
    }
    if m.len() < 2 * c {
        return Err(PronyError::ShortInput {
            needed: 2 * c,
            available: m.len(),
        });
    }
    let rows = opts.hankel_rows.unwrap_or(m.len() - c);
    if rows < c || rows + c > m.len() {
        return Err(PronyError::InvalidInput(format!(
            "Hankel rows must lie in [{c}, {}], got {rows}",
            m.len() - c
        )));
    }
    let system = hankel_system(m, c, rows)?;
    let square: ComplexMatrix = system.matrix.rows(0, c).into_owned();
    let non_unique = |e: PronyError| {
        PronyError::Singular(format!(
            "Hankel system has no unique solution (coincident nodes or vanishing leading magnitude): {e}"
        ))
    };
    let hankel_condition = condition_number(&square, MatrixNorm::Infinity).map_err(non_unique)?;

    let q = if rows == c {
        square
            .clone()
            .lu()
            .solve(&system.rhs)
            .ok_or_else(|| non_unique(PronyError::Singular("zero pivot".into())))?
    } else {
        let ls = least_squares(&system.matrix, &system.rhs)?;
        if ls.reciprocal_condition <= f64::EPSILON {
            return Err(non_unique(PronyError::Singular("rank deficient".into())));
        }
        ls.solution
    };
    let q_residual = (&system.matrix * &q - &system.rhs).norm();

    let mut coeffs: Vec<Complex64> = q.iter().copied().collect();
    coeffs.push(Complex64::new(1.0, 0.0));
    let roots = poly_roots(&coeffs)?;
    let clusters = cluster_roots(&roots, multiplicities, opts.cluster_tolerance)?;
    let fit = recover_magnitudes(&clusters.nodes, multiplicities, m)?;
    let recovered = ConfluentModel::new(clusters.nodes, multiplicities.to_vec(), fit.magnitudes)?;

    let mut report = SolveReport::new(recovered, Method::Prony);
    report.record("hankel_condition", hankel_condition);
    report.record("hankel_rows", rows as f64);
    report.record("q_residual", q_residual);
    report.record("root_spread", clusters.max_spread);
    report.record("magnitude_residual", fit.residual);
    report.record_conditioning();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::match_parameters;
    use crate::forward::prony_map;

    #[test]
    fn recovers_two_simple_nodes() {
        let truth = ConfluentModel::from_real(&[1.0, -1.0], &[&[2.0], &[1.0]]).unwrap();
        let m = prony_map(&truth, 4);
        let report = prony_solve(&m, &[1, 1], &SolverOptions::default()).unwrap();
        let err = match_parameters(&truth, &report.recovered).unwrap();
        assert!(err.values.iter().all(|&e| e <= 1e-10), "{err:?}");
        assert_eq!(report.method, Method::Prony);
        assert!(report.diagnostics["q_residual"] < 1e-12);
    }

    #[test]
    fn recovers_double_node() {
        let truth = ConfluentModel::from_real(&[0.3], &[&[1.0, 0.5]]).unwrap();
        let m = prony_map(&truth, 4);
        let report = prony_solve(&m, &[2], &SolverOptions::default()).unwrap();
        let err = match_parameters(&truth, &report.recovered).unwrap();
        assert!(err.values.iter().all(|&e| e <= 1e-7), "{err:?}");
    }

    #[test]
    fn zero_leading_magnitude_is_not_unique() {
        let truth = ConfluentModel::from_real(&[0.3], &[&[1.0, 0.0]]).unwrap();
        let m = prony_map(&truth, 4);
        assert!(matches!(
            prony_solve(&m, &[2], &SolverOptions::default()),
            Err(PronyError::Singular(_))
        ));
    }

    #[test]
    fn overdetermined_system_uses_extra_rows() {
        let truth = ConfluentModel::from_real(&[0.9, -0.4], &[&[1.0, -0.5], &[0.7]]).unwrap();
        let m = prony_map(&truth, 10);
        let report = prony_solve(&m, &[2, 1], &SolverOptions::default()).unwrap();
        assert_eq!(report.diagnostics["hankel_rows"], 7.0);
        let err = match_parameters(&truth, &report.recovered).unwrap();
        assert!(err.values.iter().all(|&e| e <= 1e-7), "{err:?}");
    }

    #[test]
    fn short_input_rejected() {
        let m = MeasurementVector::new(vec![Complex64::new(1.0, 0.0); 3]).unwrap();
        assert!(matches!(
            prony_solve(&m, &[2], &SolverOptions::default()),
            Err(PronyError::ShortInput { needed: 4, .. })
        ));
    }
}
