//! Measurement operators, ground-truth signals and noisy intensity data.
//!
//! The model is `yᵢ = |aᵢᴴx|² + nᵢ`. An ensemble stores the stacked rows
//! `A = [a₁ … a_M]ᴴ` (densely, or as a list of unitary DFT rows) together
//! with an upper bound on `λmax(AᴴA)` that the solvers use as their
//! majorization constant.

mod container;
mod noise;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, complex_normal, complex_normal_matrix, rng_from_seed};
use crate::{CMatrix, CVector, Complex64, Error, Result};

pub use container::{EnsembleRecord, GroundTruthRecord};
pub use noise::{verify_modulus_noise_advantage, ModulusNoiseReport, ModulusNoiseStat};

/// Power-iteration steps used to bound `λmax(AᴴA)` for non-unitary ensembles.
pub const SPECTRAL_POWER_ITERS: usize = 30;
/// Multiplicative safety margin on the power-iteration estimate.
pub const SPECTRAL_INFLATION: f64 = 1.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    PartialDft,
    ComplexGaussian,
    Dense,
}

#[derive(Clone)]
enum Operator {
    PartialDft {
        rows: Vec<usize>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Matrix(CMatrix),
}

/// A measurement operator `A ∈ ℂ^{M×N}`.
#[derive(Clone)]
pub struct MeasurementEnsemble {
    kind: EnsembleKind,
    rows: usize,
    cols: usize,
    seed: Option<u64>,
    spectral_bound: f64,
    op: Operator,
}

impl fmt::Debug for MeasurementEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementEnsemble")
            .field("kind", &self.kind)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("seed", &self.seed)
            .field("spectral_bound", &self.spectral_bound)
            .finish()
    }
}

impl MeasurementEnsemble {
    /// `m` distinct rows of the unitary `n`-point DFT matrix, chosen
    /// uniformly at random. Rows are kept in ascending order.
    pub fn partial_dft(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "partial DFT needs n, m >= 1 (n={n}, m={m})"
            )));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!(
                "cannot select {m} rows from an {n}-point DFT"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut rows = sample(&mut rng, n, m).into_vec();
        rows.sort_unstable();
        let mut ens = Self::partial_dft_from_rows(n, rows)?;
        ens.seed = Some(seed);
        Ok(ens)
    }

    /// Partial DFT ensemble from an explicit row list.
    pub fn partial_dft_from_rows(n: usize, rows: Vec<usize>) -> Result<Self> {
        if n == 0 || rows.is_empty() {
            return Err(Error::InvalidArgument("empty partial DFT".into()));
        }
        let mut seen = vec![false; n];
        for &r in &rows {
            if r >= n {
                return Err(Error::InvalidArgument(format!("DFT row {r} out of range for n={n}")));
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidArgument(format!("DFT row {r} selected twice")));
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            kind: EnsembleKind::PartialDft,
            rows: rows.len(),
            cols: n,
            seed: None,
            // AᴴA is an orthogonal projector.
            spectral_bound: 1.0,
            op: Operator::PartialDft { rows, forward, inverse },
        })
    }

    /// I.i.d. circularly-symmetric complex normal entries with unit variance.
    pub fn complex_gaussian(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "gaussian ensemble needs n, m >= 1 (n={n}, m={m})"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let a = complex_normal_matrix(&mut rng, m, n, 1.0);
        let mut ens = Self::dense(a, None)?;
        ens.kind = EnsembleKind::ComplexGaussian;
        ens.seed = Some(seed);
        Ok(ens)
    }

    /// Arbitrary dense operator. Without an explicit bound, the spectral
    /// bound is a power-iteration estimate inflated by 1%.
    pub fn dense(a: CMatrix, spectral_bound: Option<f64>) -> Result<Self> {
        let (m, n) = a.dim();
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("empty measurement matrix".into()));
        }
        let bound = match spectral_bound {
            Some(b) if b.is_finite() && b >= 0.0 => b,
            Some(b) => return Err(Error::InvalidArgument(format!("bad spectral bound {b}"))),
            None => SPECTRAL_INFLATION * linalg::gram_lambda_max(a.view(), SPECTRAL_POWER_ITERS, 0x5EC7),
        };
        Ok(Self {
            kind: EnsembleKind::Dense,
            rows: m,
            cols: n,
            seed: None,
            spectral_bound: bound,
            op: Operator::Matrix(a),
        })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Number of measurements `M`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Signal length `N`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Upper bound on `λmax(AᴴA)`.
    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    /// `‖A‖_F²`.
    pub fn frobenius_sqr(&self) -> f64 {
        match &self.op {
            // every row of the unitary DFT has unit norm
            Operator::PartialDft { rows, .. } => rows.len() as f64,
            Operator::Matrix(a) => crate::linalg::frobenius_sqr(a.view()),
        }
    }

    /// Selected DFT rows, for partial DFT ensembles.
    pub fn row_indices(&self) -> Option<&[usize]> {
        match &self.op {
            Operator::PartialDft { rows, .. } => Some(rows),
            Operator::Matrix(_) => None,
        }
    }

    /// Explicit `M×N` matrix.
    pub fn to_dense(&self) -> CMatrix {
        match &self.op {
            Operator::Matrix(a) => a.clone(),
            Operator::PartialDft { rows, .. } => {
                let n = self.cols;
                let scale = 1.0 / (n as f64).sqrt();
                CMatrix::from_shape_fn((rows.len(), n), |(i, j)| {
                    let k = (rows[i] * j) % n;
                    let theta = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    Complex64::from_polar(scale, theta)
                })
            }
        }
    }

    /// `Ax`.
    pub fn forward(&self, x: ArrayView1<Complex64>) -> Result<CVector> {
        if x.len() != self.cols {
            return Err(Error::dims("forward", self.cols, x.len()));
        }
        Ok(self.apply(x))
    }

    /// `Aᴴu`.
    pub fn adjoint(&self, u: ArrayView1<Complex64>) -> Result<CVector> {
        if u.len() != self.rows {
            return Err(Error::dims("adjoint", self.rows, u.len()));
        }
        Ok(self.apply_adjoint(u))
    }

    /// `AX` for a batch of column signals.
    pub fn forward_matrix(&self, x: ArrayView2<Complex64>) -> Result<CMatrix> {
        if x.nrows() != self.cols {
            return Err(Error::dims("forward_matrix", self.cols, x.nrows()));
        }
        Ok(match &self.op {
            Operator::Matrix(a) => a.dot(&x),
            Operator::PartialDft { .. } => self.columnwise(x, self.rows, |c| self.apply(c)),
        })
    }

    /// `AᴴU` for a batch of columns.
    pub fn adjoint_matrix(&self, u: ArrayView2<Complex64>) -> Result<CMatrix> {
        if u.nrows() != self.rows {
            return Err(Error::dims("adjoint_matrix", self.rows, u.nrows()));
        }
        Ok(match &self.op {
            Operator::Matrix(a) => linalg::adjoint_dot(a.view(), u),
            Operator::PartialDft { .. } => self.columnwise(u, self.cols, |c| self.apply_adjoint(c)),
        })
    }

    fn columnwise<F>(&self, x: ArrayView2<Complex64>, out_rows: usize, f: F) -> CMatrix
    where
        F: Fn(ArrayView1<Complex64>) -> CVector,
    {
        let mut out = CMatrix::zeros((out_rows, x.ncols()));
        for (src, mut dst) in x.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
            dst.assign(&f(src));
        }
        out
    }

    pub(crate) fn apply(&self, x: ArrayView1<Complex64>) -> CVector {
        match &self.op {
            Operator::Matrix(a) => a.dot(&x),
            Operator::PartialDft { rows, forward, .. } => {
                let n = self.cols;
                let mut buf: Vec<Complex64> = x.iter().copied().collect();
                forward.process(&mut buf);
                let scale = 1.0 / (n as f64).sqrt();
                rows.iter().map(|&r| buf[r] * scale).collect()
            }
        }
    }

    pub(crate) fn apply_adjoint(&self, u: ArrayView1<Complex64>) -> CVector {
        match &self.op {
            Operator::Matrix(a) => a.t().dot(&u.mapv(|c| c.conj())).mapv(|c| c.conj()),
            Operator::PartialDft { rows, inverse, .. } => {
                let n = self.cols;
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (&r, &v) in rows.iter().zip(u.iter()) {
                    buf[r] = v;
                }
                inverse.process(&mut buf);
                let scale = 1.0 / (n as f64).sqrt();
                buf.into_iter().map(|c| c * scale).collect()
            }
        }
    }
}

/// Convenience wrapper matching the operation name used by the harness.
pub fn build_partial_dft(n: usize, m: usize, rng_seed: u64) -> Result<MeasurementEnsemble> {
    MeasurementEnsemble::partial_dft(n, m, rng_seed)
}

pub fn build_complex_gaussian(n: usize, m: usize, rng_seed: u64) -> Result<MeasurementEnsemble> {
    MeasurementEnsemble::complex_gaussian(n, m, rng_seed)
}

/// Distribution of the nonzero entries of a sparse ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonzeroDistribution {
    /// Unit-variance circular complex normal.
    #[default]
    ComplexGaussian,
    /// Unit modulus, uniform phase.
    UnitModulus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub x_true: CVector,
    pub sparsity: Option<usize>,
    pub support: Option<Vec<usize>>,
}

impl GroundTruth {
    /// `k`-sparse signal of length `n` on a uniformly random support.
    pub fn sparse(n: usize, k: usize, seed: u64, dist: NonzeroDistribution) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("signal length must be >= 1".into()));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "sparsity must satisfy 1 <= k <= n (k={k}, n={n})"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut support = sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        let mut x = CVector::zeros(n);
        for &i in &support {
            let mut v = Complex64::new(0.0, 0.0);
            // a zero draw would break the exact-K invariant
            while v.norm_sqr() == 0.0 {
                v = match dist {
                    NonzeroDistribution::ComplexGaussian => complex_normal(&mut rng, 1.0),
                    NonzeroDistribution::UnitModulus => {
                        let phase: f64 = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU);
                        Complex64::from_polar(1.0, phase)
                    }
                };
            }
            x[i] = v;
        }
        Ok(Self {
            x_true: x,
            sparsity: Some(k),
            support: Some(support),
        })
    }

    pub fn dense(x_true: CVector) -> Self {
        Self {
            x_true,
            sparsity: None,
            support: None,
        }
    }

    pub fn len(&self) -> usize {
        self.x_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_true.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Awgn {
        snr_db: f64,
    },
}

/// Nonnegative intensities and their square roots.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensitySamples {
    pub y: Array1<f64>,
    pub sqrt_y: Array1<f64>,
    pub noise_model: NoiseModel,
    /// Entries that came out negative after noise and were zeroed.
    pub discarded_count: usize,
}

impl IntensitySamples {
    /// Wraps externally supplied intensities, zeroing negative entries.
    pub fn from_intensities(raw: Array1<f64>, noise_model: NoiseModel) -> Self {
        let mut discarded = 0;
        let y = raw.mapv(|v| {
            if v < 0.0 {
                discarded += 1;
                0.0
            } else {
                v
            }
        });
        let sqrt_y = y.mapv(f64::sqrt);
        Self {
            y,
            sqrt_y,
            noise_model,
            discarded_count: discarded,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `yᵢ = |aᵢᴴx|² + nᵢ`.
///
/// For AWGN the noise variance is `σ² = ‖|Ax|²‖² / (M · 10^{snr/10})`, so the
/// ratio of clean-intensity power to noise power equals the requested SNR.
/// Negative results are zeroed and counted. Deterministic in `noise_seed`.
pub fn synthesize(
    ensemble: &MeasurementEnsemble,
    x_true: ArrayView1<Complex64>,
    noise_model: NoiseModel,
    noise_seed: u64,
) -> Result<IntensitySamples> {
    let ax = ensemble.forward(x_true)?;
    let clean = ax.mapv(|c| c.norm_sqr());
    let raw = match noise_model {
        NoiseModel::None => clean,
        NoiseModel::Awgn { snr_db } => {
            if !snr_db.is_finite() {
                return Err(Error::InvalidArgument(format!("snr_db must be finite, got {snr_db}")));
            }
            let sigma = awgn_sigma(clean.view(), snr_db);
            let mut rng = rng_from_seed(noise_seed);
            clean.mapv(|c| {
                let n: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                c + sigma * n
            })
        }
    };
    Ok(IntensitySamples::from_intensities(raw, noise_model))
}

/// Noise standard deviation achieving `snr_db` for the given clean intensities.
pub fn awgn_sigma(clean: ArrayView1<f64>, snr_db: f64) -> f64 {
    if clean.is_empty() {
        return 0.0;
    }
    let power = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}
