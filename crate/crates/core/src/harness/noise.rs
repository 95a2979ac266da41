use serde::{Deserialize, Serialize};

use super::spec::{NoiseStudySpec, StudySignal};
use crate::linalg::{complex_normal_vector, hash64, rng_from_seed};
use crate::measurements::{verify_modulus_noise_advantage, EnsembleKind, MeasurementEnsemble, ModulusNoiseReport};
use crate::{CVector, Complex64, Error, Result};

const ENSEMBLE_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
/// The first-order expansion is trusted while `σ ≤ REGIME_FRACTION·min|aᵢᴴx|²`.
pub const REGIME_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub snr_db: f64,
    pub noise_var: f64,
    pub var_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    /// Measurements with `|aᵢᴴx| ≤ 1/2`, where the modulus noise is not
    /// guaranteed to be smaller than the intensity noise.
    pub below_half: usize,
    pub outside_regime: bool,
    pub discarded: usize,
    pub report: ModulusNoiseReport,
}

#[derive(Clone, Debug)]
pub struct NoiseReport {
    pub samples: usize,
    pub min_modulus: f64,
    pub rows: Vec<NoiseRow>,
}

fn study_signal(spec: &NoiseStudySpec, ens: &MeasurementEnsemble, seed: u64) -> Result<CVector> {
    match spec.signal {
        StudySignal::Delta => {
            let mut x = CVector::zeros(spec.n);
            x[0] = Complex64::new(1.0, 0.0);
            // rescale to unit mean modulus
            let ax = ens.forward(x.view())?;
            let scale = ax.iter().map(|c| c.norm()).sum::<f64>() / ax.len() as f64;
            Ok(if scale > 0.0 { x.mapv(|v| v / scale) } else { x })
        }
        StudySignal::Gaussian => Ok(complex_normal_vector(&mut rng_from_seed(seed), spec.n, 1.0)),
    }
}

/// Modulus-versus-intensity noise statistics across an SNR grid.
///
/// The noise variance for SNR `s` is `mean|aᵢᴴx|⁴ / 10^{s/10}`; `samples`
/// draws are taken per measurement.
pub fn run_noise_study(master_seed: u64, samples: usize, spec: &NoiseStudySpec) -> Result<NoiseReport> {
    let ens_seed = hash64(master_seed, ENSEMBLE_STREAM);
    let ens = match spec.ensemble {
        EnsembleKind::PartialDft => MeasurementEnsemble::partial_dft(spec.n, spec.m, ens_seed)?,
        EnsembleKind::ComplexGaussian => MeasurementEnsemble::complex_gaussian(spec.n, spec.m, ens_seed)?,
        EnsembleKind::Dense => {
            return Err(Error::Config(
                "noise study needs a partial_dft or complex_gaussian ensemble".into(),
            ))
        }
    };
    let x = study_signal(spec, &ens, hash64(master_seed, SIGNAL_STREAM))?;
    let moduli: Vec<f64> = ens.forward(x.view())?.iter().map(|c| c.norm()).collect();
    let power = moduli.iter().map(|a| a.powi(4)).sum::<f64>() / moduli.len() as f64;
    let min_modulus = moduli.iter().copied().fold(f64::INFINITY, f64::min);

    let rows = spec
        .snr_db_list
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let noise_var = power / 10f64.powf(snr_db / 10.0);
            let report = verify_modulus_noise_advantage(
                &ens,
                x.view(),
                noise_var,
                samples,
                hash64(hash64(master_seed, NOISE_STREAM), i as u64),
            )?;
            Ok(NoiseRow {
                snr_db,
                noise_var,
                var_ratio: report.var_ratio,
                mean_ratio: report.mean_ratio,
                below_half: report.per_measurement.iter().filter(|s| s.below_half).count(),
                outside_regime: noise_var.sqrt() > REGIME_FRACTION * min_modulus * min_modulus,
                discarded: report.per_measurement.iter().map(|s| s.discarded).sum(),
                report,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NoiseReport {
        samples,
        min_modulus,
        rows,
    })
}
