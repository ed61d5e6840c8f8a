//! Global solvers (Prony, ESPRIT, approximate Prony) and the local
//! least-squares refiner.
//!
//! All solvers take the multiplicity signature `l_1 … l_n` as known and
//! return a [`SolveReport`] whose node order is arbitrary; use
//! [`crate::experiment::match_parameters`] to compare against a reference.

mod apm;
mod esprit;
mod lsq;
mod prony;
mod roots;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::linalg::{least_squares, ComplexVector};
use crate::model::{ConfluentModel, MeasurementVector};
use crate::structmat::{condition_number, confluent_vandermonde, magnitude_block_matrix, MatrixNorm};

pub use apm::{apm_nodes, apm_solve};
pub use esprit::{esprit_hankel_shape, esprit_nodes_from_basis, esprit_solve};
pub use lsq::lsq_refine;
pub use prony::prony_solve;
pub use roots::{cluster_roots, poly_roots, Clustering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EspritShape {
    /// `min(S - C, 2C)` rows, kept within `[C + 1, S + 1 - C]`.
    #[default]
    Auto,
    /// About twice as many rows as columns.
    RowsTwiceCols,
    /// About twice as many columns as rows.
    ColsTwiceRows,
    Custom { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Rows of the Prony Hankel system; `None` uses every available moment.
    pub hankel_rows: Option<usize>,
    pub esprit_shape: EspritShape,
    /// Largest distance of a root from its cluster mean before clustering is rejected.
    pub cluster_tolerance: f64,
    pub max_lsq_iterations: usize,
    /// Gauss–Newton stops once `‖step‖∞ < tol · (1 + ‖x‖∞)`.
    pub lsq_step_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            hankel_rows: None,
            esprit_shape: EspritShape::default(),
            cluster_tolerance: 0.25,
            max_lsq_iterations: 2000,
            lsq_step_tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Prony,
    Esprit,
    Apm,
    Lsq,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Prony => "prony",
            Method::Esprit => "esprit",
            Method::Apm => "apm",
            Method::Lsq => "lsq",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PronyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prony" => Ok(Method::Prony),
            "esprit" => Ok(Method::Esprit),
            "apm" => Ok(Method::Apm),
            "lsq" => Ok(Method::Lsq),
            _ => Err(PronyError::InvalidInput(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub recovered: ConfluentModel,
    pub method: Method,
    /// Condition numbers (`u`, `b`), residuals, cluster spreads, iteration counts.
    pub diagnostics: BTreeMap<String, f64>,
    /// Residual norm of each accepted least-squares iterate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_trace: Vec<f64>,
}

impl SolveReport {
    fn new(recovered: ConfluentModel, method: Method) -> Self {
        Self {
            recovered,
            method,
            diagnostics: BTreeMap::new(),
            residual_trace: Vec::new(),
        }
    }

    fn record(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_owned(), value);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// Records `u = κ∞(U)` and `b = κ∞(B)` of the recovered model (∞ when singular).
    fn record_conditioning(&mut self) {
        let model = &self.recovered;
        let c = model.num_magnitudes();
        let u = confluent_vandermonde(model.nodes(), model.multiplicities(), c);
        let u = condition_number(&u, MatrixNorm::Infinity).unwrap_or(f64::INFINITY);
        let b = condition_number(&magnitude_block_matrix(model), MatrixNorm::Infinity)
            .unwrap_or(f64::INFINITY);
        self.record("u", u);
        self.record("b", b);
    }
}

/// Least-squares magnitudes for known nodes using all `S` moments.
pub struct MagnitudeFit {
    pub magnitudes: Vec<Vec<Complex64>>,
    pub residual: f64,
}

pub fn recover_magnitudes(
    nodes: &[Complex64],
    multiplicities: &[usize],
    m: &MeasurementVector,
) -> Result<MagnitudeFit> {
    if nodes.len() != multiplicities.len() {
        return Err(PronyError::InvalidInput(
            "one multiplicity per node required".into(),
        ));
    }
    let c: usize = multiplicities.iter().sum();
    if m.len() < c {
        return Err(PronyError::ShortInput {
            needed: c,
            available: m.len(),
        });
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(PronyError::Degenerate(format!(
                    "nodes {} and {} coincide",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let u = confluent_vandermonde(nodes, multiplicities, m.len());
    let rhs = ComplexVector::from_column_slice(m.values());
    let ls = least_squares(&u, &rhs)?;
    if ls.reciprocal_condition <= f64::EPSILON {
        return Err(PronyError::Degenerate(
            "confluent Vandermonde system is rank deficient".into(),
        ));
    }
    let mut flat = ls.solution.iter().copied();
    let magnitudes = multiplicities
        .iter()
        .map(|&l| flat.by_ref().take(l).collect())
        .collect();
    Ok(MagnitudeFit {
        magnitudes,
        residual: ls.residual,
    })
}

/// Number of moments each method needs for exact inversion: `R` for
/// least squares, `2C` for the Hankel-based methods.
pub fn minimal_measurements(method: Method, multiplicities: &[usize]) -> usize {
    let c: usize = multiplicities.iter().sum();
    match method {
        Method::Lsq => c + multiplicities.len(),
        Method::Prony | Method::Esprit => 2 * c,
        Method::Apm => 2 * multiplicities.len() + 1,
    }
}

/// Runs `method`. Least squares needs a starting model; the others ignore it.
pub fn solve(
    method: Method,
    m: &MeasurementVector,
    multiplicities: &[usize],
    initial: Option<&ConfluentModel>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    match method {
        Method::Prony => prony_solve(m, multiplicities, opts),
        Method::Esprit => esprit_solve(m, multiplicities, opts),
        Method::Apm => apm_solve(m, multiplicities, opts),
        Method::Lsq => {
            let initial = initial.ok_or_else(|| {
                PronyError::InvalidInput("least squares needs an initial model".into())
            })?;
            if initial.multiplicities() != multiplicities {
                return Err(PronyError::Mismatch(format!(
                    "initial model has multiplicities {:?}, expected {multiplicities:?}",
                    initial.multiplicities()
                )));
            }
            lsq_refine(m, initial, opts)
        }
    }
}
