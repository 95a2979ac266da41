//! JSON experiment specifications.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::measurements::{EnsembleKind, NonzeroDistribution};
use crate::scprime::{AtomSchedule, CodeBoundRule, SignalInit};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema: u32,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    SparseSweep(SparseSweepSpec),
    ImageRecovery(ImageRecoverySpec),
    NoiseStudy(NoiseStudySpec),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SparseSweep(_) => "sparse_sweep",
            ExperimentKind::ImageRecovery(_) => "image_recovery",
            ExperimentKind::NoiseStudy(_) => "noise_study",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSweepSpec {
    pub n: usize,
    pub m_list: Vec<usize>,
    pub k_list: Vec<usize>,
    /// Reuse one row subset per `M` for every trial instead of drawing a
    /// fresh one per trial.
    #[serde(default)]
    pub fix_ensemble: bool,
    #[serde(default)]
    pub nonzeros: NonzeroDistribution,
    #[serde(default)]
    pub solver: SweepSolver,
}

/// Warm-started continuation over decreasing `ρ` with random restarts.
///
/// Each restart runs every stage in order; the restart with the lowest
/// final-stage objective is kept. The reported NSE is the best over that
/// restart's stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSolver {
    /// Stage weights as multiples of `‖Aᴴ√y‖∞`.
    pub rho_factors: Vec<f64>,
    pub iters_per_stage: usize,
    pub restarts: usize,
    pub tol: f64,
}

impl Default for SweepSolver {
    fn default() -> Self {
        Self {
            rho_factors: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            iters_per_stage: 300,
            restarts: 4,
            tol: 0.0,
        }
    }
}

/// How the image is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageLayout {
    /// One shared ensemble applied to every image column; patches are a
    /// permutation of the image.
    #[default]
    Tiled,
    /// One shared ensemble applied to every vectorized patch.
    Patches,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecoverySpec {
    /// Relative paths resolve against the spec file's directory.
    pub image: PathBuf,
    #[serde(default = "defaults::sampling_rate")]
    pub sampling_rate: f64,
    /// `None` measures without noise.
    #[serde(default = "defaults::snr_db")]
    pub snr_db: Option<f64>,
    #[serde(default = "defaults::patch")]
    pub patch: usize,
    /// Defaults to `patch` (no overlap).
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub layout: ImageLayout,
    #[serde(default = "defaults::atoms")]
    pub atoms: usize,
    #[serde(default = "defaults::mu")]
    pub mu: f64,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "defaults::cycles")]
    pub cycles: usize,
    #[serde(default = "defaults::init")]
    pub init: SignalInit,
    #[serde(default)]
    pub code_bound: CodeBoundRule,
    #[serde(default)]
    pub atom_schedule: AtomSchedule,
    #[serde(default)]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudySignal {
    /// `e₀`; with a partial DFT every `|aᵢᴴx|` equals `1/√N`, rescaled to 1.
    Delta,
    /// Unit-variance complex Gaussian drawn from the master seed.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudySpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "defaults::ensemble")]
    pub ensemble: EnsembleKind,
    #[serde(default = "defaults::signal")]
    pub signal: StudySignal,
    pub snr_db_list: Vec<f64>,
}

mod defaults {
    use super::*;

    pub fn sampling_rate() -> f64 {
        0.5
    }
    pub fn snr_db() -> Option<f64> {
        Some(15.0)
    }
    pub fn patch() -> usize {
        8
    }
    pub fn atoms() -> usize {
        16
    }
    pub fn mu() -> f64 {
        10.0
    }
    pub fn cycles() -> usize {
        1000
    }
    pub fn init() -> SignalInit {
        SignalInit::UniformReal
    }
    pub fn ensemble() -> EnsembleKind {
        EnsembleKind::PartialDft
    }
    pub fn signal() -> StudySignal {
        StudySignal::Delta
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads and validates a spec; a relative image path is resolved
    /// against the spec's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_json(&text)?;
        if let ExperimentKind::ImageRecovery(img) = &mut spec.kind {
            if img.image.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                img.image = base.join(&img.image);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        match &self.kind {
            ExperimentKind::SparseSweep(s) => {
                if s.n == 0 || s.m_list.is_empty() || s.k_list.is_empty() {
                    return bad("sweep needs n >= 1 and non-empty m_list, k_list".into());
                }
                if let Some(&m) = s.m_list.iter().find(|&&m| m == 0 || m > s.n) {
                    return bad(format!("M = {m} outside 1..={}", s.n));
                }
                if let Some(&k) = s.k_list.iter().find(|&&k| k == 0 || k > s.n) {
                    return bad(format!("K = {k} outside 1..={} (a zero signal has no NSE)", s.n));
                }
                let sv = &s.solver;
                if sv.rho_factors.is_empty() || sv.rho_factors.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
                    return bad("rho_factors must be non-empty and >= 0".into());
                }
                if sv.iters_per_stage == 0 || sv.restarts == 0 {
                    return bad("iters_per_stage and restarts must be >= 1".into());
                }
                if !(sv.tol.is_finite() && sv.tol >= 0.0) {
                    return bad("tol must be >= 0".into());
                }
            }
            ExperimentKind::ImageRecovery(s) => {
                if !(s.sampling_rate.is_finite() && s.sampling_rate > 0.0) {
                    return bad("sampling_rate must be > 0".into());
                }
                if s.snr_db.is_some_and(|v| !v.is_finite()) {
                    return bad("snr_db must be finite".into());
                }
                if s.patch == 0 || s.stride == Some(0) {
                    return bad("patch and stride must be >= 1".into());
                }
                if s.layout == ImageLayout::Tiled && s.stride.is_some_and(|st| st != s.patch) {
                    return bad("the tiled layout needs stride == patch".into());
                }
                if s.atoms == 0 || !(s.mu.is_finite() && s.mu > 0.0) {
                    return bad("atoms must be >= 1 and mu > 0".into());
                }
                if s.rho.is_some_and(|r| !(r.is_finite() && r >= 0.0)) {
                    return bad("rho must be >= 0".into());
                }
            }
            ExperimentKind::NoiseStudy(s) => {
                if s.n == 0 || s.m == 0 || s.snr_db_list.is_empty() {
                    return bad("noise study needs n, m >= 1 and a non-empty snr_db_list".into());
                }
                if s.ensemble == EnsembleKind::PartialDft && s.m > s.n {
                    return bad(format!("partial DFT needs m <= n (m={}, n={})", s.m, s.n));
                }
                if self.trials < 2 {
                    return bad("noise study needs trials >= 2".into());
                }
                if s.snr_db_list.iter().any(|v| !v.is_finite()) {
                    return bad("snr values must be finite".into());
                }
            }
        }
        Ok(())
    }
}
