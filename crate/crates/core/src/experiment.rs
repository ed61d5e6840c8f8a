//! Reproducible parameter sweeps comparing solvers against the local
//! accuracy bound.
//!
//! Each sweep mutates one aspect of a base model over a grid, generates the
//! exact moments, perturbs them once per trial and hands every method the
//! number of moments it needs for exact inversion (`R` for least squares,
//! `2C` for Prony and ESPRIT). Errors are matched against the truth per
//! parameter and stored next to `ACC_LOC` in an [`ExperimentTable`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::forward::{perturb, prony_map, NoiseSpec};
use crate::model::{validate_with, ConfluentModel, ParamId, PerParameterValues};
use crate::solvers::{minimal_measurements, solve, Method, SolverOptions};
use crate::stability::{default_tolerances, local_accuracy};

/// Absolute per-parameter errors of `recovered` against `truth`, in
/// `truth`'s indexing.
///
/// Nodes are paired by the assignment minimizing `Σ|Δξ|` among those that
/// respect multiplicities; magnitudes are then compared positionally.
pub fn match_parameters(
    truth: &ConfluentModel,
    recovered: &ConfluentModel,
) -> Result<PerParameterValues> {
    let n = truth.num_nodes();
    let mut want = truth.multiplicities().to_vec();
    let mut have = recovered.multiplicities().to_vec();
    want.sort_unstable();
    have.sort_unstable();
    if want != have {
        return Err(PronyError::Mismatch(format!(
            "multiplicities {:?} and {:?} differ",
            truth.multiplicities(),
            recovered.multiplicities()
        )));
    }
    let best = (0..n)
        .permutations(n)
        .filter(|p| {
            p.iter()
                .enumerate()
                .all(|(i, &k)| truth.multiplicities()[i] == recovered.multiplicities()[k])
        })
        .map(|p| {
            let cost: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &k)| (truth.nodes()[i] - recovered.nodes()[k]).norm())
                .sum();
            (cost, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .expect("equal multiset admits a permutation");

    let mut values = Vec::with_capacity(truth.num_params());
    for (i, &k) in best.iter().enumerate() {
        for (a, b) in truth.magnitudes()[i].iter().zip(&recovered.magnitudes()[k]) {
            values.push((a - b).norm());
        }
        values.push((truth.nodes()[i] - recovered.nodes()[k]).norm());
    }
    Ok(PerParameterValues {
        labels: truth.labels(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// `|a_{1,l_1-1}|`, phase kept.
    HighestCoeff,
    /// `|a_{1,0}|`, phase kept; needs `l_1 ≥ 2`.
    PrevCoeff,
    /// Noise level.
    Epsilon,
    /// Uniform multiplicity, magnitudes regenerated from the seed.
    Order,
    /// `ξ_2 - ξ_1`.
    Separation,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] = [
        SweepKind::HighestCoeff,
        SweepKind::PrevCoeff,
        SweepKind::Epsilon,
        SweepKind::Order,
        SweepKind::Separation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::HighestCoeff => "highest-coeff",
            SweepKind::PrevCoeff => "prev-coeff",
            SweepKind::Epsilon => "epsilon",
            SweepKind::Order => "order",
            SweepKind::Separation => "separation",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = PronyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PronyError::InvalidInput(format!("unknown sweep kind {s:?}")))
    }
}

/// `points` values from `lo` to `hi`, equispaced in log scale.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > 0.0) || points == 0 || (points == 1 && lo != hi) {
        return Err(PronyError::InvalidInput(format!(
            "bad log grid {lo}:{hi}:{points}"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points)
        .map(|i| match i {
            0 => lo,
            i if i == points - 1 => hi,
            i => 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64),
        })
        .collect())
}

const MIN_LEADING: f64 = 0.1;

/// Real magnitudes uniform in `[-1, 1]` drawn from `seed`; leading
/// magnitudes are redrawn until `|a| ≥ 0.1` so the base model is regular.
pub fn sweep_magnitudes(seed: u64, multiplicities: &[usize]) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    multiplicities
        .iter()
        .map(|&l| {
            (0..l)
                .map(|j| loop {
                    let a: f64 = rng.gen_range(-1.0..=1.0);
                    if j + 1 < l || a.abs() >= MIN_LEADING {
                        break Complex64::new(a, 0.0);
                    }
                })
                .collect()
        })
        .collect()
}

/// Two real nodes at 0.2 and 0.7 with multiplicity `degree` each.
pub fn default_base_model(seed: u64, degree: usize) -> ConfluentModel {
    let mults = vec![degree.max(1); 2];
    let mags = sweep_magnitudes(seed, &mults);
    ConfluentModel::new(
        vec![Complex64::new(0.2, 0.0), Complex64::new(0.7, 0.0)],
        mults,
        mags,
    )
    .expect("default base model is well formed")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub base_model: ConfluentModel,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Moment counts replacing the per-method minimum.
    #[serde(default)]
    pub measurements: BTreeMap<Method, usize>,
}

impl SweepSpec {
    /// Defaults: degree-2 base model from `seed`, `ε = 1e-10`, 20 trials,
    /// Prony, ESPRIT and least squares.
    pub fn new(kind: SweepKind, grid: Vec<f64>, seed: u64) -> Self {
        Self {
            kind,
            grid,
            base_model: default_base_model(seed, 2),
            epsilon: 1e-10,
            trials: 20,
            seed,
            methods: vec![Method::Prony, Method::Esprit, Method::Lsq],
            measurements: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(PronyError::InvalidInput("empty sweep grid".into()));
        }
        let increasing = self.grid.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) || self.grid.iter().any(|v| !v.is_finite()) {
            return Err(PronyError::InvalidInput(
                "sweep grid must be finite and strictly monotone".into(),
            ));
        }
        if self.trials == 0 {
            return Err(PronyError::InvalidInput("at least one trial is needed".into()));
        }
        if self.methods.is_empty() {
            return Err(PronyError::InvalidInput("no methods selected".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(PronyError::InvalidInput("noise bound must be non-negative".into()));
        }
        Ok(())
    }

    /// Model and noise level at one grid value.
    pub fn model_at(&self, value: f64) -> Result<(ConfluentModel, f64)> {
        let mut model = self.base_model.clone();
        let mut epsilon = self.epsilon;
        let with_modulus = |z: Complex64, r: f64| {
            if z == Complex64::new(0.0, 0.0) {
                Complex64::new(r, 0.0)
            } else {
                z / z.norm() * r
            }
        };
        let positive = |what: &str| {
            if value > 0.0 {
                Ok(())
            } else {
                Err(PronyError::InvalidInput(format!("{what} must be positive, got {value}")))
            }
        };
        match self.kind {
            SweepKind::HighestCoeff => {
                positive("leading magnitude")?;
                let l = model.multiplicities()[0];
                let a = model.magnitudes()[0][l - 1];
                model.set_magnitude(0, l - 1, with_modulus(a, value));
            }
            SweepKind::PrevCoeff => {
                positive("magnitude")?;
                if model.multiplicities()[0] < 2 {
                    return Err(PronyError::InvalidInput(
                        "previous-coefficient sweep needs l_1 >= 2".into(),
                    ));
                }
                let a = model.magnitudes()[0][0];
                model.set_magnitude(0, 0, with_modulus(a, value));
            }
            SweepKind::Epsilon => {
                if !(value >= 0.0) {
                    return Err(PronyError::InvalidInput(format!("bad noise level {value}")));
                }
                epsilon = value;
            }
            SweepKind::Order => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(PronyError::InvalidInput(format!(
                        "order must be a positive integer, got {value}"
                    )));
                }
                let mults = vec![value as usize; model.num_nodes()];
                let mags = sweep_magnitudes(self.seed, &mults);
                model = ConfluentModel::new(model.nodes().to_vec(), mults, mags)?;
            }
            SweepKind::Separation => {
                if model.num_nodes() < 2 {
                    return Err(PronyError::InvalidInput(
                        "separation sweep needs two nodes".into(),
                    ));
                }
                let xi = model.nodes()[0];
                model.set_node(1, xi + value);
            }
        }
        Ok((model, epsilon))
    }

    fn measurements_for(&self, method: Method, mults: &[usize]) -> usize {
        self.measurements
            .get(&method)
            .copied()
            .unwrap_or_else(|| minimal_measurements(method, mults))
    }
}

/// Noise seed for one `(grid index, trial)` pair.
pub fn trial_seed(seed: u64, grid_index: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid_index as u64) << 32) | trial as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub sweep_value: f64,
    pub trial: usize,
    pub method: Method,
    pub param: ParamId,
    /// `+∞` when the solver failed.
    pub abs_error: f64,
    pub predicted_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub spec: SweepSpec,
    pub version: String,
    /// Grid values at critical points, left out of the table.
    pub skipped: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub metadata: Option<TableMetadata>,
}

const CSV_HEADER: [&str; 6] = [
    "sweep_value",
    "trial",
    "method",
    "param",
    "abs_error",
    "predicted_bound",
];
const META_PREFIX: &str = "# meta ";

impl ExperimentTable {
    /// Rows under the fixed header, then the metadata as one `# meta` JSON line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record([
                format!("{:e}", row.sweep_value),
                row.trial.to_string(),
                row.method.to_string(),
                row.param.to_string(),
                format!("{:e}", row.abs_error),
                format!("{:e}", row.predicted_bound),
            ])?;
        }
        w.flush()?;
        let mut out = w
            .into_inner()
            .map_err(|e| PronyError::Io(e.into_error()))?;
        if let Some(meta) = &self.metadata {
            writeln!(out, "{META_PREFIX}{}", serde_json::to_string(meta)?)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("CSV output is UTF-8")
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut metadata = None;
        let mut body = String::new();
        for line in text.lines() {
            if let Some(json) = line.strip_prefix(META_PREFIX) {
                metadata = Some(serde_json::from_str(json)?);
            } else if !line.starts_with('#') {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(PronyError::InvalidInput(format!(
                "unexpected table header {header:?}"
            )));
        }
        let bad = |what: &str, v: &str| PronyError::InvalidInput(format!("bad {what} {v:?}"));
        let mut rows = Vec::new();
        for record in reader.records() {
            let r = record?;
            let float = |i: usize| r[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i], &r[i]));
            rows.push(ExperimentRow {
                sweep_value: float(0)?,
                trial: r[1].parse().map_err(|_| bad("trial", &r[1]))?,
                method: r[2].parse()?,
                param: r[3].parse()?,
                abs_error: float(4)?,
                predicted_bound: float(5)?,
            });
        }
        Ok(Self { rows, metadata })
    }

    /// Distinct sweep values in table order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.sweep_value) {
                seen.push(row.sweep_value);
            }
        }
        seen
    }

    /// Number of failed solves (trials with `+∞` errors) per method.
    pub fn failures(&self) -> BTreeMap<Method, usize> {
        let mut failed: BTreeMap<Method, BTreeSet<(u64, usize)>> = BTreeMap::new();
        for row in &self.rows {
            let entry = failed.entry(row.method).or_default();
            if row.abs_error.is_infinite() {
                entry.insert((row.sweep_value.to_bits(), row.trial));
            }
        }
        failed.into_iter().map(|(m, s)| (m, s.len())).collect()
    }

    /// Median over trials and parameters of `log10(abs_error)` at one
    /// sweep value, failures and exact zeros excluded.
    pub fn median_log10_error(&self, method: Method, sweep_value: f64) -> Option<f64> {
        median(
            self.rows
                .iter()
                .filter(|r| r.method == method && r.sweep_value == sweep_value)
                .map(|r| r.abs_error.log10())
                .filter(|v| v.is_finite())
                .collect(),
        )
    }

    pub fn summary(&self) -> SweepSummary {
        let mut slopes: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let pairs: BTreeSet<(Method, ParamId)> =
            self.rows.iter().map(|r| (r.method, r.param)).collect();
        for (method, param) in pairs {
            if let Ok(s) = slope_estimate(self, method, param) {
                slopes
                    .entry(method.to_string())
                    .or_default()
                    .insert(param.to_string(), s);
            }
        }
        let spec = self.metadata.as_ref().map(|m| &m.spec);
        SweepSummary {
            kind: spec.map(|s| s.kind),
            slopes,
            failures: self
                .failures()
                .into_iter()
                .map(|(m, c)| (m.to_string(), c))
                .collect(),
            seed: spec.map(|s| s.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: Option<SweepKind>,
    pub slopes: BTreeMap<String, BTreeMap<String, f64>>,
    pub failures: BTreeMap<String, usize>,
    pub seed: Option<u64>,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    })
}

/// Least-squares slope of `log10(median over trials of abs_error)` against
/// `log10(sweep_value)`. Infinite and zero errors are left out; needs three
/// sweep values with data.
pub fn slope_estimate(table: &ExperimentTable, method: Method, param: ParamId) -> Result<f64> {
    let mut points = Vec::new();
    for value in table.sweep_values() {
        let errors: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.method == method && r.param == param && r.sweep_value == value)
            .map(|r| r.abs_error)
            .filter(|e| e.is_finite())
            .collect();
        if let Some(med) = median(errors) {
            let (x, y) = (value.log10(), med.log10());
            if x.is_finite() && y.is_finite() {
                points.push((x, y));
            }
        }
    }
    if points.len() < 3 {
        return Err(PronyError::NoData(format!(
            "{method} {param}: {} usable sweep values, need 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

struct GridPoint {
    value: f64,
    model: ConfluentModel,
    epsilon: f64,
    bounds: Vec<f64>,
}

fn run_trial(spec: &SweepSpec, index: usize, point: &GridPoint, trial: usize) -> Vec<ExperimentRow> {
    let model = &point.model;
    let mults = model.multiplicities();
    let counts: Vec<usize> = spec
        .methods
        .iter()
        .map(|&m| spec.measurements_for(m, mults))
        .collect();
    let longest = counts.iter().copied().max().unwrap_or(0);
    let noise = NoiseSpec::new(point.epsilon, trial_seed(spec.seed, index, trial));
    let noisy = perturb(&prony_map(model, longest), &noise);
    let opts = SolverOptions::default();
    let labels = model.labels();
    let mut rows = Vec::new();
    for (&method, &count) in spec.methods.iter().zip(&counts) {
        let errors = noisy
            .as_ref()
            .map_err(|e| PronyError::InvalidInput(e.to_string()))
            .and_then(|m| m.truncated(count))
            .and_then(|m| solve(method, &m, mults, Some(model), &opts))
            .and_then(|report| match_parameters(model, &report.recovered))
            .map(|e| e.values)
            .unwrap_or_else(|_| vec![f64::INFINITY; labels.len()]);
        for ((param, abs_error), bound) in labels.iter().zip(errors).zip(&point.bounds) {
            rows.push(ExperimentRow {
                sweep_value: point.value,
                trial,
                method,
                param: *param,
                abs_error,
                predicted_bound: *bound,
            });
        }
    }
    rows
}

/// Runs every `(grid value, trial, method)` combination. Trials run in
/// parallel; rows come out in grid, trial, method, parameter order. Grid
/// values where the model is critical are listed in the metadata and
/// produce no rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (index, &value) in spec.grid.iter().enumerate() {
        let (model, epsilon) = spec.model_at(value)?;
        let (node_tol, mag_tol) = default_tolerances(&model);
        let bounds = if validate_with(&model, node_tol, mag_tol).is_regular() {
            local_accuracy(&model, epsilon).ok()
        } else {
            None
        };
        match bounds {
            Some(b) => points.push((
                index,
                GridPoint {
                    value,
                    model,
                    epsilon,
                    bounds: b.per_parameter.values,
                },
            )),
            None => skipped.push(value),
        }
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let rows: Vec<ExperimentRow> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, points[p].0, &points[p].1, t))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(ExperimentTable {
        rows,
        metadata: Some(TableMetadata {
            spec: spec.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            skipped,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSampler;
    use crate::solvers::prony_solve;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn matching_undoes_permutation() {
        let truth = ConfluentModel::from_real(&[1.0, -1.0], &[&[2.0], &[1.0]]).unwrap();
        let recovered = ConfluentModel::new(
            vec![c(-1.0 + 1e-9), c(1.0 + 1e-9)],
            vec![1, 1],
            vec![vec![c(1.0)], vec![c(2.0)]],
        )
        .unwrap();
        let err = match_parameters(&truth, &recovered).unwrap();
        let xi = err.get(ParamId::Node { node: 0 }).unwrap();
        assert!((xi - 1e-9).abs() < 1e-15);
        assert!((err.get(ParamId::Node { node: 1 }).unwrap() - 1e-9).abs() < 1e-15);
        assert_eq!(err.get(ParamId::Magnitude { node: 0, order: 0 }), Some(0.0));

        let same = match_parameters(&truth, &truth).unwrap();
        assert!(same.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matching_respects_multiplicities() {
        let truth = ConfluentModel::from_real(&[0.0, 1.0], &[&[1.0, 1.0], &[1.0]]).unwrap();
        // node 1.0 sits closest to the truth's double node but is simple
        let recovered = ConfluentModel::from_real(&[1.0, 0.05], &[&[1.0], &[1.0, 1.0]]).unwrap();
        let err = match_parameters(&truth, &recovered).unwrap();
        assert!((err.get(ParamId::Node { node: 0 }).unwrap() - 0.05).abs() < 1e-15);

        let other = ConfluentModel::from_real(&[0.0, 1.0], &[&[1.0], &[1.0]]).unwrap();
        assert!(matches!(
            match_parameters(&truth, &other),
            Err(PronyError::Mismatch(_))
        ));
    }

    #[test]
    fn matching_noise_free_prony() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sampler = ModelSampler {
            min_gap: 0.3,
            ..ModelSampler::default()
        };
        for _ in 0..20 {
            let truth = sampler.sample(&mut rng);
            let m = prony_map(&truth, 2 * truth.num_magnitudes() + 8);
            let report = prony_solve(&m, truth.multiplicities(), &SolverOptions::default()).unwrap();
            let err = match_parameters(&truth, &report.recovered).unwrap();
            assert!(err.values.iter().all(|&e| e <= 1e-6), "{err:?}");
        }
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> ExperimentTable {
        let mut rows = Vec::new();
        for v in [0.1, 1.0, 10.0, 100.0] {
            for trial in 0..3 {
                rows.push(ExperimentRow {
                    sweep_value: v,
                    trial,
                    method: Method::Lsq,
                    param: ParamId::Node { node: 0 },
                    abs_error: f(v),
                    predicted_bound: 1.0,
                });
            }
        }
        ExperimentTable {
            rows,
            metadata: None,
        }
    }

    #[test]
    fn slope_examples() {
        let xi = ParamId::Node { node: 0 };
        let s = slope_estimate(&synthetic(|v| 3.0 * v * v), Method::Lsq, xi).unwrap();
        assert!((s - 2.0).abs() < 1e-9);
        let s = slope_estimate(&synthetic(|_| 0.5), Method::Lsq, xi).unwrap();
        assert!(s.abs() < 1e-12);
        assert!(matches!(
            slope_estimate(&synthetic(|_| f64::INFINITY), Method::Lsq, xi),
            Err(PronyError::NoData(_))
        ));
        assert!(slope_estimate(&synthetic(|v| v), Method::Prony, xi).is_err());
    }

    #[test]
    fn slope_ignores_failed_trials() {
        let mut table = synthetic(|v| v);
        table.rows[0].abs_error = f64::INFINITY;
        let s = slope_estimate(&table, Method::Lsq, ParamId::Node { node: 0 }).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(table.failures()[&Method::Lsq], 1);
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-12, 1e-6, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-12);
        assert_eq!(g[6], 1e-6);
        assert!((g[3] / 1e-9 - 1.0).abs() < 1e-12);
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert_eq!(log_grid(2.0, 2.0, 1).unwrap(), vec![2.0]);
    }

    #[test]
    fn model_mutations() {
        let spec = SweepSpec::new(SweepKind::HighestCoeff, vec![1.0], 3);
        let (m, eps) = spec.model_at(5.0).unwrap();
        assert_eq!(m.leading_magnitude(0).norm(), 5.0);
        assert_eq!(
            m.leading_magnitude(0).re.signum(),
            spec.base_model.leading_magnitude(0).re.signum()
        );
        assert_eq!(eps, 1e-10);

        let spec = SweepSpec { kind: SweepKind::Separation, ..spec };
        let (m, _) = spec.model_at(0.05).unwrap();
        assert!((m.nodes()[1] - c(0.25)).norm() < 1e-15);

        let spec = SweepSpec { kind: SweepKind::Order, ..spec };
        let (m, _) = spec.model_at(3.0).unwrap();
        assert_eq!(m.multiplicities(), &[3, 3]);
        assert!(spec.model_at(1.5).is_err());

        let base = default_base_model(3, 1);
        let spec = SweepSpec { kind: SweepKind::PrevCoeff, base_model: base, ..spec };
        assert!(spec.model_at(1.0).is_err());
    }

    fn small_epsilon_sweep(seed: u64) -> SweepSpec {
        SweepSpec {
            trials: 3,
            ..SweepSpec::new(SweepKind::Epsilon, log_grid(1e-12, 1e-8, 3).unwrap(), seed)
        }
    }

    #[test]
    fn sweep_is_deterministic_and_round_trips() {
        let spec = small_epsilon_sweep(11);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.rows.len(), 3 * 3 * 3 * 6);
        let text = a.to_csv_string();
        assert!(text.starts_with("sweep_value,trial,method,param,abs_error,predicted_bound\n"));
        let parsed = ExperimentTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed, a);
    }

    #[test]
    fn epsilon_sweep_lsq_is_linear_and_bounded() {
        let table = run_sweep(&small_epsilon_sweep(5)).unwrap();
        for param in table.rows.iter().map(|r| r.param).collect::<BTreeSet<_>>() {
            let s = slope_estimate(&table, Method::Lsq, param).unwrap();
            assert!((0.9..=1.1).contains(&s), "{param}: {s}");
        }
        for row in table.rows.iter().filter(|r| r.method == Method::Lsq) {
            assert!(row.abs_error <= 3.0 * row.predicted_bound, "{row:?}");
        }
    }

    #[test]
    fn critical_grid_values_are_skipped() {
        let spec = SweepSpec {
            trials: 1,
            ..SweepSpec::new(SweepKind::Separation, vec![0.0, 0.3], 1)
        };
        let table = run_sweep(&spec).unwrap();
        assert_eq!(table.metadata.as_ref().unwrap().skipped, vec![0.0]);
        assert!(table.rows.iter().all(|r| r.sweep_value == 0.3));
    }

    #[test]
    fn summary_layout() {
        let table = run_sweep(&small_epsilon_sweep(2)).unwrap();
        let json = serde_json::to_value(table.summary()).unwrap();
        assert_eq!(json["kind"], "epsilon");
        assert_eq!(json["seed"], 2);
        assert!(json["slopes"]["lsq"]["xi[1]"].is_number());
        assert_eq!(json["failures"]["lsq"], 0);
    }
}
