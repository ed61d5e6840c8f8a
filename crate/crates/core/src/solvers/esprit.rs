use num_complex::Complex64;

use super::{cluster_roots, recover_magnitudes, EspritShape, Method, SolveReport, SolverOptions};
use crate::error::{PronyError, Result};
use crate::linalg::{eigenvalues, least_squares, svd, ComplexMatrix, ComplexVector};
use crate::model::{ConfluentModel, MeasurementVector};
use crate::structmat::hankel;

/// Singular values below this fraction of the largest count as zero.
const RANK_THRESHOLD: f64 = 1e3 * f64::EPSILON;

/// Hankel dimensions `(rows, cols)` used for `num_measurements` moments and
/// total multiplicity `c`. Needs `rows ≥ c + 1`, `cols ≥ c` and
/// `rows + cols - 1 ≤ num_measurements`.
pub fn esprit_hankel_shape(
    shape: EspritShape,
    num_measurements: usize,
    c: usize,
) -> Result<(usize, usize)> {
    if num_measurements < 2 * c {
        return Err(PronyError::ShortInput {
            needed: 2 * c,
            available: num_measurements,
        });
    }
    let lo = c + 1;
    let hi = num_measurements + 1 - c;
    let pick = |target: f64| {
        let rows = (target.round() as usize).clamp(lo, hi);
        (rows, num_measurements + 1 - rows)
    };
    let total = (num_measurements + 1) as f64;
    match shape {
        EspritShape::Auto => Ok(pick(num_measurements.saturating_sub(c).min(2 * c) as f64)),
        EspritShape::RowsTwiceCols => Ok(pick(2.0 * total / 3.0)),
        EspritShape::ColsTwiceRows => Ok(pick(total / 3.0)),
        EspritShape::Custom { rows, cols } => {
            if rows < lo || cols < c || rows + cols - 1 > num_measurements {
                return Err(PronyError::InvalidInput(format!(
                    "Hankel shape {rows}x{cols} unusable for {num_measurements} moments and C={c}"
                )));
            }
            Ok((rows, cols))
        }
    }
}

/// Eigenvalues of `Φ = W↓⁺ W↑` for a basis `W` of the signal subspace.
pub fn esprit_nodes_from_basis(w: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let rows = w.nrows();
    if rows < w.ncols() + 1 {
        return Err(PronyError::InvalidInput(
            "signal basis needs more rows than columns".into(),
        ));
    }
    let down = w.rows(0, rows - 1).into_owned();
    let up = w.rows(1, rows - 1).into_owned();
    let c = w.ncols();
    let mut phi = ComplexMatrix::zeros(c, c);
    for j in 0..c {
        let col = least_squares(&down, &ComplexVector::from_iterator(rows - 1, up.column(j).iter().copied()))?;
        phi.set_column(j, &col.solution);
    }
    eigenvalues(&phi)
}

/// ESPRIT: signal subspace of a rectangular Hankel matrix, rotational
/// invariance for the nodes, shared clustering and magnitude fit.
pub fn esprit_solve(
    m: &MeasurementVector,
    multiplicities: &[usize],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let c: usize = multiplicities.iter().sum();
    if c == 0 {
        return Err(PronyError::InvalidInput("empty multiplicity signature".into()));
    }
    let (rows, cols) = esprit_hankel_shape(opts.esprit_shape, m.len(), c)?;
    let h = hankel(m.values(), rows, cols);
    let dec = svd(&h)?;
    let sv = &dec.singular_values;
    if sv[0] == 0.0 || sv[c - 1] <= RANK_THRESHOLD * sv[0] {
        return Err(PronyError::RankDeficient { expected: c });
    }
    let gap = if sv.len() > c { sv[c] / sv[c - 1] } else { 0.0 };
    let w = dec.u.columns(0, c).into_owned();
    let eig = esprit_nodes_from_basis(&w)?;
    let clusters = cluster_roots(&eig, multiplicities, opts.cluster_tolerance)?;
    let fit = recover_magnitudes(&clusters.nodes, multiplicities, m)?;
    let recovered = ConfluentModel::new(clusters.nodes, multiplicities.to_vec(), fit.magnitudes)?;

    let mut report = SolveReport::new(recovered, Method::Esprit);
    report.record("hankel_rows", rows as f64);
    report.record("hankel_cols", cols as f64);
    report.record("singular_gap", gap);
    report.record("smallest_signal_singular_value", sv[c - 1] / sv[0]);
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
    use crate::model::ModelSampler;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes() {
        assert_eq!(esprit_hankel_shape(EspritShape::Auto, 24, 8).unwrap(), (16, 9));
        assert_eq!(esprit_hankel_shape(EspritShape::Auto, 16, 8).unwrap(), (9, 8));
        assert_eq!(esprit_hankel_shape(EspritShape::Auto, 40, 3).unwrap(), (6, 35));
        assert_eq!(esprit_hankel_shape(EspritShape::RowsTwiceCols, 4, 1).unwrap(), (3, 2));
        assert_eq!(esprit_hankel_shape(EspritShape::ColsTwiceRows, 8, 1).unwrap(), (3, 6));
        // minimal data forces rows = C + 1
        assert_eq!(esprit_hankel_shape(EspritShape::RowsTwiceCols, 8, 4).unwrap(), (5, 4));
        assert_eq!(esprit_hankel_shape(EspritShape::ColsTwiceRows, 8, 4).unwrap(), (5, 4));
        assert_eq!(esprit_hankel_shape(EspritShape::RowsTwiceCols, 20, 2).unwrap(), (14, 7));
        assert!(esprit_hankel_shape(EspritShape::Custom { rows: 3, cols: 3 }, 6, 3).is_err());
        assert!(esprit_hankel_shape(EspritShape::RowsTwiceCols, 5, 3).is_err());
    }

    #[test]
    fn single_node() {
        let truth = ConfluentModel::from_real(&[0.7], &[&[1.0]]).unwrap();
        let report = esprit_solve(&prony_map(&truth, 4), &[1], &SolverOptions::default()).unwrap();
        assert!((report.recovered.nodes()[0] - Complex64::new(0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_nodes() {
        let truth = ConfluentModel::from_real(&[0.2, -0.6], &[&[1.0], &[-0.5]]).unwrap();
        let report = esprit_solve(&prony_map(&truth, 4), &[1, 1], &SolverOptions::default()).unwrap();
        let err = match_parameters(&truth, &report.recovered).unwrap();
        assert!(err.values.iter().all(|&e| e <= 1e-10), "{err:?}");
    }

    #[test]
    fn rank_deficiency_detected() {
        // one node of multiplicity 1 cannot fill a rank-2 subspace
        let truth = ConfluentModel::from_real(&[0.5], &[&[1.0]]).unwrap();
        assert!(matches!(
            esprit_solve(&prony_map(&truth, 6), &[1, 1], &SolverOptions::default()),
            Err(PronyError::RankDeficient { expected: 2 })
        ));
    }

    #[test]
    fn eigenvalues_invariant_under_basis_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let truth = ModelSampler::default().sample(&mut rng);
            let c = truth.num_magnitudes();
            let m = prony_map(&truth, 2 * c + 2);
            let (rows, cols) = esprit_hankel_shape(EspritShape::RowsTwiceCols, m.len(), c).unwrap();
            let w = svd(&hankel(m.values(), rows, cols)).unwrap().u.columns(0, c).into_owned();
            let g = ComplexMatrix::from_fn(c, c, |i, j| {
                let diag = if i == j { 2.0 } else { 0.0 };
                Complex64::new(diag + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
            });
            let base = esprit_nodes_from_basis(&w).unwrap();
            let moved = esprit_nodes_from_basis(&(&w * g)).unwrap();
            let opts = SolverOptions::default();
            let a = cluster_roots(&base, truth.multiplicities(), opts.cluster_tolerance).unwrap();
            let b = cluster_roots(&moved, truth.multiplicities(), opts.cluster_tolerance).unwrap();
            for x in &a.nodes {
                let nearest = b.nodes.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
                assert!(nearest <= 1e-10, "{nearest}");
            }
        }
    }
}
