//! Monte Carlo comparison of modulus-domain and intensity-domain noise.
//!
//! With `√yᵢ ≈ |aᵢᴴx| + nᵢ / (2|aᵢᴴx|)`, the modulus noise has variance
//! `Var[nᵢ] / (4|aᵢᴴx|²)` to first order, and mean `−Var[nᵢ] / (8|aᵢᴴx|³)`
//! at second order (the first-order mean vanishes for zero-mean noise).

use ndarray::ArrayView1;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MeasurementEnsemble;
use crate::linalg::{hash64, rng_from_seed};
use crate::{Complex64, Error, Result};

/// Measurements with a smaller modulus are rejected as degenerate.
pub const MIN_MODULUS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusNoiseStat {
    /// `|aᵢᴴx|`
    pub modulus: f64,
    pub mean_modulus_noise: f64,
    pub var_modulus_noise: f64,
    pub var_intensity_noise: f64,
    /// First-order prediction `Var[n] / (4|aᵢᴴx|²)`.
    pub predicted_var: f64,
    /// Measured modulus variance over the first-order prediction.
    pub var_ratio: Option<f64>,
    /// Measured modulus mean over the second-order prediction.
    pub mean_ratio: Option<f64>,
    /// `|aᵢᴴx| ≤ 1/2`: the modulus domain is not guaranteed to be quieter.
    pub below_half: bool,
    /// Samples with `y < 0` that were dropped.
    pub discarded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusNoiseReport {
    pub noise_var: f64,
    pub trials: usize,
    /// Average of per-measurement `mean_ratio`; `None` for zero noise.
    pub mean_ratio: Option<f64>,
    /// Average of per-measurement `var_ratio`; `None` for zero noise.
    pub var_ratio: Option<f64>,
    pub per_measurement: Vec<ModulusNoiseStat>,
}

/// Draws `trials` noise realizations `nᵢ ~ N(0, noise_var)` per measurement
/// and compares the empirical statistics of `√(|aᵢᴴx|² + nᵢ) − |aᵢᴴx|`
/// against the Taylor predictions.
pub fn verify_modulus_noise_advantage(
    ensemble: &MeasurementEnsemble,
    x_true: ArrayView1<Complex64>,
    noise_var: f64,
    trials: usize,
    seed: u64,
) -> Result<ModulusNoiseReport> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let ax = ensemble.forward(x_true)?;
    if let Some((index, c)) = ax.iter().enumerate().find(|(_, c)| c.norm() < MIN_MODULUS) {
        return Err(Error::DegenerateMeasurement {
            index,
            modulus: c.norm(),
        });
    }

    let sigma = noise_var.sqrt();
    let mut per_measurement = Vec::with_capacity(ax.len());
    for (i, c) in ax.iter().enumerate() {
        let modulus = c.norm();
        let clean = modulus * modulus;
        let predicted_var = noise_var / (4.0 * clean);
        let mut stat = ModulusNoiseStat {
            modulus,
            mean_modulus_noise: 0.0,
            var_modulus_noise: 0.0,
            var_intensity_noise: 0.0,
            predicted_var,
            var_ratio: None,
            mean_ratio: None,
            below_half: modulus <= 0.5,
            discarded: 0,
        };
        if noise_var > 0.0 {
            let mut rng = rng_from_seed(hash64(seed, i as u64));
            let (mut mod_acc, mut int_acc) = (Welford::default(), Welford::default());
            for _ in 0..trials {
                let n: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
                int_acc.push(n);
                let y = clean + n;
                if y < 0.0 {
                    stat.discarded += 1;
                    continue;
                }
                mod_acc.push(y.sqrt() - modulus);
            }
            stat.mean_modulus_noise = mod_acc.mean;
            stat.var_modulus_noise = mod_acc.variance();
            stat.var_intensity_noise = int_acc.variance();
            stat.var_ratio = Some(stat.var_modulus_noise / predicted_var);
            let predicted_mean = -noise_var / (8.0 * clean * modulus);
            stat.mean_ratio = Some(stat.mean_modulus_noise / predicted_mean);
        }
        per_measurement.push(stat);
    }

    let avg = |f: fn(&ModulusNoiseStat) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = per_measurement.iter().map(f).collect();
        vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(ModulusNoiseReport {
        noise_var,
        trials,
        mean_ratio: avg(|s| s.mean_ratio),
        var_ratio: avg(|s| s.var_ratio),
        per_measurement,
    })
}

#[derive(Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}
