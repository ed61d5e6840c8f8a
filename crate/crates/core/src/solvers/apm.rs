use num_complex::Complex64;

use super::{poly_roots, recover_magnitudes, Method, SolveReport, SolverOptions};
use crate::error::{PronyError, Result};
use crate::linalg::svd;
use crate::model::{ConfluentModel, MeasurementVector};
use crate::structmat::hankel;

/// Node candidates of the approximate Prony method for an upper bound `L`
/// on the number of nodes.
///
/// Builds the `(S-L) × (L+1)` Hankel matrix of the moments and returns the
/// `L` roots of `p(z) = Σ v_i z^i`, where `v` is the right singular vector
/// of the smallest singular value. With `2N+1` equispaced samples
/// `h(0) … h(2N)` the moments are simply `m_k = h(k)`, so `S = 2N+1`.
/// When `L` exceeds the true node count the extra roots are spurious; the
/// caller decides which to keep.
pub fn apm_nodes(m: &MeasurementVector, upper_bound: usize) -> Result<Vec<Complex64>> {
    if upper_bound == 0 {
        return Err(PronyError::InvalidInput("node bound must be positive".into()));
    }
    let needed = 2 * upper_bound + 1;
    if m.len() < needed {
        return Err(PronyError::ShortInput {
            needed,
            available: m.len(),
        });
    }
    let h = hankel(m.values(), m.len() - upper_bound, upper_bound + 1);
    let dec = svd(&h)?;
    if dec.singular_values[0] == 0.0 {
        return Err(PronyError::Degenerate("zero Hankel matrix".into()));
    }
    let last = dec.singular_values.len() - 1;
    let v: Vec<Complex64> = dec.v.column(last).iter().copied().collect();
    let roots = poly_roots(&v)
        .map_err(|e| PronyError::Degenerate(format!("null vector polynomial: {e}")))?;
    Ok(roots)
}

/// Approximate Prony for plain (all `l_i = 1`) systems with `L = n`.
pub fn apm_solve(
    m: &MeasurementVector,
    multiplicities: &[usize],
    _opts: &SolverOptions,
) -> Result<SolveReport> {
    if multiplicities.iter().any(|&l| l != 1) {
        return Err(PronyError::Unsupported(
            "approximate Prony handles simple nodes only".into(),
        ));
    }
    let n = multiplicities.len();
    let nodes = apm_nodes(m, n)?;
    if nodes.len() != n {
        return Err(PronyError::Degenerate(format!(
            "expected {n} roots, found {}",
            nodes.len()
        )));
    }
    let fit = recover_magnitudes(&nodes, multiplicities, m)?;
    let recovered = ConfluentModel::new(nodes, multiplicities.to_vec(), fit.magnitudes)?;
    let mut report = SolveReport::new(recovered, Method::Apm);
    report.record("magnitude_residual", fit.residual);
    // factor √(NM)·max|h_k| multiplying the frequency error in the
    // amplitude error estimate
    let half = (m.len() - 1) / 2;
    report.record(
        "amplitude_sensitivity",
        ((half * n) as f64).sqrt() * m.max_abs(),
    );
    report.record_conditioning();
    Ok(report)
}
