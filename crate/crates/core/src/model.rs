//! Confluent Prony models and their flat parameter-vector encoding.
//!
//! A model carries `n` nodes `ξ_i`, each with a multiplicity `l_i` and `l_i`
//! magnitudes `a_{i,0} … a_{i,l_i-1}`. Two counts show up everywhere:
//! `C = Σ l_i` (number of magnitudes) and `R = C + n` (number of unknowns).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ConfluentModel {
    nodes: Vec<Complex64>,
    multiplicities: Vec<usize>,
    magnitudes: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    nodes: Vec<Complex64>,
    multiplicities: Vec<usize>,
    magnitudes: Vec<Vec<Complex64>>,
}

impl TryFrom<RawModel> for ConfluentModel {
    type Error = PronyError;

    fn try_from(raw: RawModel) -> Result<Self> {
        ConfluentModel::new(raw.nodes, raw.multiplicities, raw.magnitudes)
    }
}

impl From<ConfluentModel> for RawModel {
    fn from(m: ConfluentModel) -> Self {
        RawModel {
            nodes: m.nodes,
            multiplicities: m.multiplicities,
            magnitudes: m.magnitudes,
        }
    }
}

impl ConfluentModel {
    pub fn new(
        nodes: Vec<Complex64>,
        multiplicities: Vec<usize>,
        magnitudes: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(PronyError::MalformedModel("model has no nodes".into()));
        }
        if nodes.len() != multiplicities.len() || nodes.len() != magnitudes.len() {
            return Err(PronyError::MalformedModel(format!(
                "{} nodes, {} multiplicities, {} magnitude lists",
                nodes.len(),
                multiplicities.len(),
                magnitudes.len()
            )));
        }
        for (i, (&l, mags)) in multiplicities.iter().zip(&magnitudes).enumerate() {
            if l == 0 {
                return Err(PronyError::MalformedModel(format!(
                    "node {} has zero multiplicity",
                    i + 1
                )));
            }
            if mags.len() != l {
                return Err(PronyError::MalformedModel(format!(
                    "node {} has multiplicity {} but {} magnitudes",
                    i + 1,
                    l,
                    mags.len()
                )));
            }
        }
        let all_finite = nodes
            .iter()
            .chain(magnitudes.iter().flatten())
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !all_finite {
            return Err(PronyError::MalformedModel("non-finite entry".into()));
        }
        Ok(Self {
            nodes,
            multiplicities,
            magnitudes,
        })
    }

    /// Builds a model from real nodes and real magnitudes.
    pub fn from_real(nodes: &[f64], magnitudes: &[&[f64]]) -> Result<Self> {
        let nodes = nodes.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mults = magnitudes.iter().map(|m| m.len()).collect();
        let mags = magnitudes
            .iter()
            .map(|m| m.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::new(nodes, mults, mags)
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn magnitudes(&self) -> &[Vec<Complex64>] {
        &self.magnitudes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `C`, the total number of magnitudes.
    pub fn num_magnitudes(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// `R`, the total number of unknowns.
    pub fn num_params(&self) -> usize {
        self.num_magnitudes() + self.num_nodes()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities.iter().copied().max().unwrap_or(0)
    }

    /// Highest-order magnitude `a_{i,l_i-1}` of node `i` (0-based).
    pub fn leading_magnitude(&self, i: usize) -> Complex64 {
        *self.magnitudes[i].last().expect("multiplicity is positive")
    }

    pub fn set_node(&mut self, i: usize, value: Complex64) {
        self.nodes[i] = value;
    }

    pub fn set_magnitude(&mut self, i: usize, j: usize, value: Complex64) {
        self.magnitudes[i][j] = value;
    }

    /// Magnitudes flattened in node order, as in the linear system `U a = m`.
    pub fn flat_magnitudes(&self) -> Vec<Complex64> {
        self.magnitudes.iter().flatten().copied().collect()
    }

    pub fn labels(&self) -> Vec<ParamId> {
        param_labels(&self.multiplicities)
    }

    /// Applies a node permutation: node `k` of the result is node `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.num_nodes()];
        if order.len() != self.num_nodes() || order.iter().any(|&i| i >= seen.len()) {
            return Err(PronyError::InvalidInput("not a permutation".into()));
        }
        for &i in order {
            if std::mem::replace(&mut seen[i], true) {
                return Err(PronyError::InvalidInput("not a permutation".into()));
            }
        }
        Self::new(
            order.iter().map(|&i| self.nodes[i]).collect(),
            order.iter().map(|&i| self.multiplicities[i]).collect(),
            order.iter().map(|&i| self.magnitudes[i].clone()).collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization is infallible")
    }
}

/// Ordered moments `m_0 … m_{S-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    values: Vec<Complex64>,
}

impl MeasurementVector {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PronyError::InvalidInput("empty measurement vector".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `count` moments.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count > self.len() {
            return Err(PronyError::ShortInput {
                needed: count,
                available: self.len(),
            });
        }
        Self::new(self.values[..count].to_vec())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for MeasurementVector {
    type Output = Complex64;

    fn index(&self, k: usize) -> &Complex64 {
        &self.values[k]
    }
}

/// Identifies one scalar unknown of a model. Indices are 0-based; the
/// `Display` form uses 1-based node numbers (`a[1][0]`, `xi[1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamId {
    Magnitude { node: usize, order: usize },
    Node { node: usize },
}

impl ParamId {
    pub fn node(&self) -> usize {
        match *self {
            ParamId::Magnitude { node, .. } | ParamId::Node { node } => node,
        }
    }

    pub fn is_node(&self) -> bool {
        matches!(self, ParamId::Node { .. })
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            ParamId::Magnitude { node, order } => format!("a[{}][{}]", node + 1, order),
            ParamId::Node { node } => format!("xi[{}]", node + 1),
        };
        f.pad(&label)
    }
}

impl FromStr for ParamId {
    type Err = PronyError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PronyError::InvalidInput(format!("bad parameter label {s:?}"));
        let index = |t: &str| -> Result<usize> { t.parse::<usize>().map_err(|_| bad()) };
        if let Some(rest) = s.strip_prefix("xi[").and_then(|r| r.strip_suffix(']')) {
            let node = index(rest)?.checked_sub(1).ok_or_else(bad)?;
            return Ok(ParamId::Node { node });
        }
        if let Some(rest) = s.strip_prefix("a[").and_then(|r| r.strip_suffix(']')) {
            let (i, j) = rest.split_once("][").ok_or_else(bad)?;
            let node = index(i)?.checked_sub(1).ok_or_else(bad)?;
            return Ok(ParamId::Magnitude {
                node,
                order: index(j)?,
            });
        }
        Err(bad())
    }
}

/// Parameter ids in parameter-vector order: per node `a_{i,0} … a_{i,l_i-1}, ξ_i`.
pub fn param_labels(multiplicities: &[usize]) -> Vec<ParamId> {
    multiplicities
        .iter()
        .enumerate()
        .flat_map(|(node, &l)| {
            (0..l)
                .map(move |order| ParamId::Magnitude { node, order })
                .chain(std::iter::once(ParamId::Node { node }))
        })
        .collect()
}

/// Flat parameter vector `x ∈ ℂ^R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    entries: Vec<Complex64>,
}

impl ParameterVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Values indexed like a [`ParameterVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerParameterValues<T = f64> {
    pub labels: Vec<ParamId>,
    pub values: Vec<T>,
}

impl<T: Copy> PerParameterValues<T> {
    pub fn get(&self, id: ParamId) -> Option<T> {
        self.labels
            .iter()
            .position(|&l| l == id)
            .map(|p| self.values[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, T)> + '_ {
        self.labels.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn encode_params(model: &ConfluentModel) -> ParameterVector {
    let mut entries = Vec::with_capacity(model.num_params());
    for (node, mags) in model.nodes().iter().zip(model.magnitudes()) {
        entries.extend_from_slice(mags);
        entries.push(*node);
    }
    ParameterVector::new(entries)
}

pub fn decode_params(v: &ParameterVector, multiplicities: &[usize]) -> Result<ConfluentModel> {
    let expected: usize = multiplicities.iter().map(|l| l + 1).sum();
    if v.len() != expected {
        return Err(PronyError::MalformedParameters {
            expected,
            actual: v.len(),
        });
    }
    let mut nodes = Vec::with_capacity(multiplicities.len());
    let mut mags = Vec::with_capacity(multiplicities.len());
    let mut rest = v.entries();
    for &l in multiplicities {
        let (block, tail) = rest.split_at(l + 1);
        mags.push(block[..l].to_vec());
        nodes.push(block[l]);
        rest = tail;
    }
    ConfluentModel::new(nodes, multiplicities.to_vec(), mags)
}

/// A reason why a model is a critical point of the forward map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Degeneracy {
    /// Nodes `first` and `second` (0-based) are within the tolerance.
    CoincidentNodes {
        first: usize,
        second: usize,
        distance: f64,
    },
    /// The leading magnitude of `node` is within the tolerance of zero.
    ZeroLeadingMagnitude { node: usize, modulus: f64 },
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degeneracy::CoincidentNodes {
                first,
                second,
                distance,
            } => write!(
                f,
                "nodes {} and {} coincide (distance {distance:e})",
                first + 1,
                second + 1
            ),
            Degeneracy::ZeroLeadingMagnitude { node, modulus } => write!(
                f,
                "leading magnitude of node {} vanishes (modulus {modulus:e})",
                node + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub failures: Vec<Degeneracy>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate(model: &ConfluentModel, tol: f64) -> RegularityReport {
    validate_with(model, tol, tol)
}

/// Like [`validate`] with separate tolerances for node gaps and leading magnitudes.
pub fn validate_with(model: &ConfluentModel, node_tol: f64, magnitude_tol: f64) -> RegularityReport {
    let mut failures = Vec::new();
    let nodes = model.nodes();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let distance = (nodes[i] - nodes[j]).norm();
            if distance <= node_tol {
                failures.push(Degeneracy::CoincidentNodes {
                    first: i,
                    second: j,
                    distance,
                });
            }
        }
    }
    for i in 0..nodes.len() {
        let modulus = model.leading_magnitude(i).norm();
        if modulus <= magnitude_tol {
            failures.push(Degeneracy::ZeroLeadingMagnitude { node: i, modulus });
        }
    }
    RegularityReport { failures }
}

/// Draws random regular models for property checks and experiments.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    pub max_nodes: usize,
    pub max_multiplicity: usize,
    /// Node moduli are drawn from `[min_node_modulus, max_node_modulus]`.
    pub min_node_modulus: f64,
    pub max_node_modulus: f64,
    pub min_gap: f64,
    pub max_magnitude: f64,
    pub min_leading: f64,
    /// Restrict nodes and magnitudes to the real line.
    pub real: bool,
}

impl Default for ModelSampler {
    fn default() -> Self {
        Self {
            max_nodes: 3,
            max_multiplicity: 3,
            min_node_modulus: 0.0,
            max_node_modulus: 1.0,
            min_gap: 0.3,
            max_magnitude: 1.0,
            min_leading: 0.2,
            real: false,
        }
    }
}

impl ModelSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ConfluentModel {
        let n = rng.gen_range(1..=self.max_nodes);
        let mults: Vec<usize> = (0..n)
            .map(|_| rng.gen_range(1..=self.max_multiplicity))
            .collect();
        self.sample_with(rng, &mults)
    }

    /// Samples a model with a prescribed multiplicity signature.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, mults: &[usize]) -> ConfluentModel {
        let nodes = loop {
            let nodes: Vec<Complex64> = mults.iter().map(|_| self.sample_node(rng)).collect();
            let separated = nodes.iter().enumerate().all(|(i, a)| {
                nodes[i + 1..]
                    .iter()
                    .all(|b| (a - b).norm() >= self.min_gap)
            });
            if separated {
                break nodes;
            }
        };
        let mags = mults
            .iter()
            .map(|&l| {
                (0..l)
                    .map(|j| {
                        let floor = if j + 1 == l { self.min_leading } else { 0.0 };
                        self.sample_scalar(rng, floor, self.max_magnitude)
                    })
                    .collect()
            })
            .collect();
        ConfluentModel::new(nodes, mults.to_vec(), mags).expect("sampled model is well formed")
    }

    fn sample_node<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.sample_scalar(rng, self.min_node_modulus, self.max_node_modulus)
    }

    fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> Complex64 {
        let r = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        if self.real {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Complex64::new(sign * r, 0.0)
        } else {
            Complex64::from_polar(r, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn encode_single_node() {
        let m = ConfluentModel::from_real(&[0.5], &[&[2.0]]).unwrap();
        assert_eq!(encode_params(&m).entries(), &[c(2.0), c(0.5)]);
    }

    #[test]
    fn encode_two_nodes() {
        let m = ConfluentModel::from_real(&[1.0, -1.0], &[&[3.0, 4.0], &[5.0]]).unwrap();
        assert_eq!(
            encode_params(&m).entries(),
            &[c(3.0), c(4.0), c(1.0), c(5.0), c(-1.0)]
        );
        let labels: Vec<String> = m.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["a[1][0]", "a[1][1]", "xi[1]", "a[2][0]", "xi[2]"]);
    }

    #[test]
    fn decode_examples() {
        let v = ParameterVector::new(vec![c(2.0), c(0.5)]);
        let m = decode_params(&v, &[1]).unwrap();
        assert_eq!(m.nodes(), &[c(0.5)]);
        assert_eq!(m.magnitudes(), &[vec![c(2.0)]]);

        let v = ParameterVector::new(vec![c(3.0), c(4.0), c(1.0), c(5.0), c(-1.0)]);
        let m = decode_params(&v, &[2, 1]).unwrap();
        let expected = ConfluentModel::from_real(&[1.0, -1.0], &[&[3.0, 4.0], &[5.0]]).unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let v = ParameterVector::new(vec![c(1.0); 4]);
        assert!(matches!(
            decode_params(&v, &[2, 1]),
            Err(PronyError::MalformedParameters {
                expected: 5,
                actual: 4
            })
        ));
    }

    #[test]
    fn validate_examples() {
        let regular = ConfluentModel::from_real(&[0.0, 1.0], &[&[1.0], &[1.0]]).unwrap();
        assert!(validate(&regular, 1e-9).is_regular());

        let coincident = ConfluentModel::from_real(&[0.0, 0.0], &[&[1.0], &[1.0]]).unwrap();
        let report = validate(&coincident, 1e-9);
        assert!(matches!(
            report.failures.as_slice(),
            [Degeneracy::CoincidentNodes {
                first: 0,
                second: 1,
                ..
            }]
        ));

        let zero_lead = ConfluentModel::from_real(&[0.0], &[&[1.0, 0.0]]).unwrap();
        let report = validate(&zero_lead, 1e-9);
        assert!(matches!(
            report.failures.as_slice(),
            [Degeneracy::ZeroLeadingMagnitude { node: 0, .. }]
        ));
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let m = ConfluentModel::from_real(&[1.0, -1.0], &[&[3.0, 4.0], &[5.0]]).unwrap();
        let text = m.to_json();
        assert_eq!(
            text,
            r#"{"nodes":[[1.0,0.0],[-1.0,0.0]],"multiplicities":[2,1],"magnitudes":[[[3.0,0.0],[4.0,0.0]],[[5.0,0.0]]]}"#
        );
        assert_eq!(ConfluentModel::from_json(&text).unwrap(), m);

        let bad = r#"{"nodes":[[1,0]],"multiplicities":[2],"magnitudes":[[[1,0]]]}"#;
        assert!(ConfluentModel::from_json(bad).is_err());
        let bad = r#"{"nodes":[[1,0],[2,0]],"multiplicities":[1],"magnitudes":[[[1,0]]]}"#;
        assert!(ConfluentModel::from_json(bad).is_err());
    }

    #[test]
    fn labels_parse_back() {
        for id in param_labels(&[3, 1, 2]) {
            assert_eq!(id.to_string().parse::<ParamId>().unwrap(), id);
        }
        assert!("xi[0]".parse::<ParamId>().is_err());
        assert!("b[1][0]".parse::<ParamId>().is_err());
    }

    #[test]
    fn sampler_respects_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sampler = ModelSampler::default();
        for _ in 0..50 {
            let m = sampler.sample(&mut rng);
            assert!(validate_with(&m, sampler.min_gap * 0.999, 0.199).is_regular());
            assert!(m.nodes().iter().all(|z| z.norm() <= 1.0 + 1e-12));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn signature() -> impl Strategy<Value = Vec<usize>> {
            prop::collection::vec(1usize..=4, 1..=5)
        }

        proptest! {
            #[test]
            fn decode_inverts_encode(mults in signature(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sampler = ModelSampler { min_gap: 0.0, ..ModelSampler::default() };
                let m = sampler.sample_with(&mut rng, &mults);
                prop_assert_eq!(decode_params(&encode_params(&m), &mults).unwrap(), m);
            }

            #[test]
            fn encode_inverts_decode(
                mults in signature(),
                raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 25),
            ) {
                let r: usize = mults.iter().map(|l| l + 1).sum();
                let v = ParameterVector::new(
                    raw[..r].iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
                );
                prop_assert_eq!(encode_params(&decode_params(&v, &mults).unwrap()), v);
            }
        }
    }
}
