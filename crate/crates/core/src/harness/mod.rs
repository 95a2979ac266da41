//! Seeded experiments.
//!
//! Every trial draws its randomness from `hash64(master_seed, trial)`, and
//! trial results are collected in index order, so outputs do not depend on
//! the number of worker threads. Wall-clock times are kept out of the result
//! files and written to `timing.json` instead.

pub mod cli;
mod image;
mod noise;
mod output;
pub mod selftest;
pub mod spec;
mod sweep;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::linalg::hash64;
use crate::{Error, Result};

pub use image::{run_image_recovery, run_image_recovery_on, ImageReport, ImageTrial};
pub use noise::{run_noise_study, NoiseReport, NoiseRow};
pub use output::write_outputs;
pub use spec::{ExperimentKind, ExperimentSpec, ImageLayout, ImageRecoverySpec, NoiseStudySpec, SparseSweepSpec};
pub use sweep::{run_sparse_sweep, CellSummary, SparseTrial, SweepReport};

pub const JOBS_ENV: &str = "PRIMEPHASE_JOBS";

/// Seed for trial `trial` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    hash64(master_seed, trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub nse: Option<f64>,
    pub success: Option<bool>,
    pub psnr_x: Option<f64>,
    pub ssim_x: Option<f64>,
    pub psnr_dz: Option<f64>,
    pub ssim_dz: Option<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl TrialResult {
    pub fn new(trial: usize, seed: u64) -> Self {
        Self {
            trial,
            seed,
            nse: None,
            success: None,
            psnr_x: None,
            ssim_x: None,
            psnr_dz: None,
            ssim_dz: None,
            iterations: 0,
            wall_ms: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Report {
    Sweep(SweepReport),
    Image(ImageReport),
    Noise(NoiseReport),
}

/// Runs `spec` on a pool of `jobs` threads.
pub fn run(spec: &ExperimentSpec, jobs: usize) -> Result<Report> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match &spec.kind {
        ExperimentKind::SparseSweep(s) => run_sparse_sweep(spec.master_seed, spec.trials, s).map(Report::Sweep),
        ExperimentKind::ImageRecovery(s) => run_image_recovery(spec.master_seed, spec.trials, s).map(Report::Image),
        ExperimentKind::NoiseStudy(s) => run_noise_study(spec.master_seed, spec.trials, s).map(Report::Noise),
    })
}

/// Runs `spec` and writes every output file into `out_dir`.
pub fn run_to_dir(spec: &ExperimentSpec, jobs: usize, out_dir: &Path) -> Result<Report> {
    let report = run(spec, jobs)?;
    write_outputs(spec, &report, out_dir)?;
    Ok(report)
}

/// `--jobs` default: `PRIMEPHASE_JOBS`, else the available parallelism.
pub fn default_jobs() -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&j: &usize| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}
