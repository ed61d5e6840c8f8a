//! The forward (Prony) map from parameters to power moments, plus bounded noise.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::model::{ConfluentModel, MeasurementVector};

/// `k (k-1) … (k-j+1)`; 1 for `j = 0` and 0 for `j > k`.
pub fn falling_factorial(k: usize, j: usize) -> f64 {
    if j > k {
        return 0.0;
    }
    (k + 1 - j..=k).fold(1.0, |acc, t| acc * t as f64)
}

/// Moments `m_k = Σ_i Σ_j a_{ij} (k)_j ξ_i^{k-j}` for `k = 0 … S-1`.
///
/// Terms with `j > k` vanish, and `0^0 = 1`.
pub fn prony_map(model: &ConfluentModel, num_measurements: usize) -> MeasurementVector {
    let mut moments = vec![Complex64::new(0.0, 0.0); num_measurements];
    for (node, mags) in model.nodes().iter().zip(model.magnitudes()) {
        // powers[t] = ξ^t, accumulated once per node
        let mut powers = Vec::with_capacity(num_measurements);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..num_measurements {
            powers.push(p);
            p *= node;
        }
        for (k, m) in moments.iter_mut().enumerate() {
            for (j, a) in mags.iter().enumerate().take(k + 1) {
                *m += a * falling_factorial(k, j) * powers[k - j];
            }
        }
    }
    MeasurementVector::new(moments).expect("at least one measurement requested")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDistribution {
    /// Real and imaginary parts independent and uniform on `[-ε/√2, ε/√2]`.
    UniformBox,
    /// Modulus exactly `ε`, phase uniform.
    UniformPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
    pub distribution: NoiseDistribution,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            seed,
            distribution: NoiseDistribution::UniformBox,
        }
    }

    /// The noise sample added to moment `k`. Depends only on `(seed, k)`.
    pub fn sample(&self, k: usize) -> Complex64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        match self.distribution {
            NoiseDistribution::UniformBox => {
                let h = self.epsilon / std::f64::consts::SQRT_2;
                if h == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(rng.gen_range(-h..=h), rng.gen_range(-h..=h))
            }
            NoiseDistribution::UniformPhase => {
                let phase = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                Complex64::from_polar(self.epsilon, phase)
            }
        }
    }
}

pub fn perturb(m: &MeasurementVector, noise: &NoiseSpec) -> Result<MeasurementVector> {
    if !(noise.epsilon >= 0.0) {
        return Err(PronyError::InvalidInput(format!(
            "noise bound must be non-negative, got {}",
            noise.epsilon
        )));
    }
    if noise.epsilon == 0.0 {
        return Ok(m.clone());
    }
    let values = m
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v + noise.sample(k))
        .collect();
    MeasurementVector::new(values)
}

/// Writes `k,re,im` rows with a header line.
pub fn write_measurements<W: Write>(m: &MeasurementVector, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "re", "im"])?;
    for (k, z) in m.values().iter().enumerate() {
        w.write_record([k.to_string(), z.re.to_string(), z.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `k,re,im` rows; the header line is optional and rows must be in order.
pub fn read_measurements<R: Read>(input: R) -> Result<MeasurementVector> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(PronyError::InvalidInput(format!(
                "expected 3 columns, got {}",
                record.len()
            )));
        }
        if values.is_empty() && record[0].eq_ignore_ascii_case("k") {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| PronyError::InvalidInput(format!("not a number: {s:?}")))
        };
        let k: usize = record[0]
            .parse()
            .map_err(|_| PronyError::InvalidInput(format!("bad index {:?}", &record[0])))?;
        if k != values.len() {
            return Err(PronyError::InvalidInput(format!(
                "expected row k={}, found k={k}",
                values.len()
            )));
        }
        values.push(Complex64::new(parse(&record[1])?, parse(&record[2])?));
    }
    MeasurementVector::new(values)
}
