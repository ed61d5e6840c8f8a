//! Confluent Prony systems: forward map, global solvers, local least
//! squares and best-possible local accuracy.
//!
//! The system is
//!
//! ```text
//! m_k = Σ_i Σ_{j<l_i} a_{i,j} (k)_j ξ_i^{k-j},   k = 0 … S-1
//! ```
//!
//! with falling factorials `(k)_j`. [`forward`] evaluates it, [`solvers`]
//! inverts it, [`stability`] computes the Jacobian factorization and local
//! accuracy bounds, and [`experiment`] runs reproducible parameter sweeps
//! comparing solvers against those bounds.

pub mod check;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod linalg;
pub mod model;
pub mod solvers;
pub mod stability;
pub mod structmat;

pub use error::{PronyError, Result};
pub use model::{ConfluentModel, MeasurementVector, ParamId, ParameterVector, PerParameterValues};
