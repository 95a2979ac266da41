use std::time::Instant;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spec::{ImageLayout, ImageRecoverySpec};
use super::{elapsed_ms, trial_seed, TrialResult};
use crate::imaging::{
    align_columns_like, assemble_patches, capped_psnr, extract_patches, psnr, ssim, GrayImage, PatchGrid, TileLayout,
};
use crate::linalg::{hash64, rng_from_seed};
use crate::measurements::{awgn_sigma, MeasurementEnsemble};
use crate::prox::MajorizerParams;
use crate::scprime::{solve_scprime_with, BlockObjectives, PatchOperator, ScprimeConfig, ScprimeState};
use crate::{CMatrix, Error, Result};

const NOISE_STREAM: u64 = 1;
const INIT_STREAM: u64 = 3;
/// Master-level stream for the measurement matrix shared by all trials.
const ENSEMBLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageTrial {
    #[serde(flatten)]
    pub result: TrialResult,
    pub rho: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub jacobi_fallbacks: usize,
    pub discarded_intensities: usize,
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
    #[serde(skip)]
    pub block_trace: Vec<BlockObjectives>,
    #[serde(skip)]
    pub recon_x: Option<GrayImage>,
    #[serde(skip)]
    pub recon_dz: Option<GrayImage>,
}

#[derive(Clone, Debug)]
pub struct ImageReport {
    pub width: usize,
    pub height: usize,
    /// Length of one measured vector (an image column or a patch).
    pub signal_len: usize,
    pub measurements: usize,
    pub patches: usize,
    pub trials: Vec<ImageTrial>,
}

/// Noisy intensities `|AX|² + n` with the noise level set from all entries.
fn noisy_intensities(clean: &Array2<f64>, snr_db: Option<f64>, seed: u64) -> Array2<f64> {
    let Some(snr) = snr_db else { return clean.clone() };
    let flat = ndarray::ArrayView1::from_shape(clean.len(), clean.as_slice().expect("standard layout"))
        .expect("length matches");
    let sigma = awgn_sigma(flat, snr);
    let mut rng = rng_from_seed(seed);
    clean.mapv(|c| {
        let n: f64 = StandardNormal.sample(&mut rng);
        c + sigma * n
    })
}

struct Setup<'a> {
    image: &'a GrayImage,
    grid: PatchGrid,
    op: PatchOperator<'a>,
    tiles: Option<TileLayout>,
}

impl Setup<'_> {
    /// Undoes the per-column global phase using the signal estimate, then
    /// assembles the real part.
    fn render(&self, state: &ScprimeState, m: &CMatrix) -> Result<GrayImage> {
        let aligned = match self.tiles {
            Some(t) => {
                let cols = align_columns_like(&t.to_image(state.x.view())?, &t.to_image(m.view())?)?;
                t.to_patches(cols.view())?
            }
            None => align_columns_like(&state.x, m)?,
        };
        assemble_patches(
            &self.grid.with_matrix(aligned)?,
            self.image.width(),
            self.image.height(),
        )
    }
}

fn quality(recon: &GrayImage, reference: &GrayImage) -> Result<(f64, f64)> {
    Ok((capped_psnr(psnr(recon, reference)?), ssim(recon, reference)?))
}

fn run_trial(
    setup: &Setup,
    spec: &ImageRecoverySpec,
    clean: &Array2<f64>,
    trial: usize,
    seed: u64,
    keep_images: bool,
) -> Result<ImageTrial> {
    let start = Instant::now();
    let y = noisy_intensities(clean, spec.snr_db, hash64(seed, NOISE_STREAM));
    let discarded = y.iter().filter(|&&v| v < 0.0).count();
    let cfg = ScprimeConfig {
        mu: spec.mu,
        rho: spec.rho,
        atoms: spec.atoms,
        max_iters: spec.cycles,
        f_bound: MajorizerParams::for_ensemble(setup.op.ensemble),
        e_bound_rule: spec.code_bound,
        atom_schedule: spec.atom_schedule,
        init: spec.init,
        tol: spec.tol,
        rng_seed: hash64(seed, INIT_STREAM),
    };
    let state = solve_scprime_with(setup.op, y.view(), &cfg)?;
    let recon_x = setup.render(&state, &state.x)?;
    let recon_dz = setup.render(&state, &state.approximation())?;
    let (psnr_x, ssim_x) = quality(&recon_x, setup.image)?;
    let (psnr_dz, ssim_dz) = quality(&recon_dz, setup.image)?;

    let mut result = TrialResult::new(trial, seed);
    result.psnr_x = Some(psnr_x);
    result.ssim_x = Some(ssim_x);
    result.psnr_dz = Some(psnr_dz);
    result.ssim_dz = Some(ssim_dz);
    result.iterations = state.objective_trace.len().saturating_sub(1);
    result.wall_ms = elapsed_ms(start);
    Ok(ImageTrial {
        result,
        rho: state.rho,
        initial_objective: state.objective_trace.first().copied().unwrap_or(0.0),
        final_objective: state.final_objective().unwrap_or(0.0),
        jacobi_fallbacks: state.jacobi_fallbacks,
        discarded_intensities: discarded,
        objective_trace: state.objective_trace.clone(),
        block_trace: state.block_trace.clone(),
        recon_x: keep_images.then_some(recon_x),
        recon_dz: keep_images.then_some(recon_dz),
    })
}

/// Measures the image, recovers it with SC-PRIME and scores both the signal
/// estimate and its dictionary approximation.
///
/// The measurement matrix is fixed by the master seed; noise and
/// initialization vary per trial. Trials run one after another because each
/// solve already parallelizes over patches and atoms.
pub fn run_image_recovery(master_seed: u64, trials: usize, spec: &ImageRecoverySpec) -> Result<ImageReport> {
    let image = GrayImage::load(&spec.image)?;
    run_image_recovery_on(master_seed, trials, spec, &image)
}

/// [`run_image_recovery`] on an already loaded image.
pub fn run_image_recovery_on(
    master_seed: u64,
    trials: usize,
    spec: &ImageRecoverySpec,
    image: &GrayImage,
) -> Result<ImageReport> {
    let stride = spec.stride.unwrap_or(spec.patch);
    let grid = extract_patches(image, spec.patch, spec.patch, stride)?;
    let tiles = match spec.layout {
        ImageLayout::Tiled => Some(TileLayout::new(image.width(), image.height(), spec.patch, spec.patch)?),
        ImageLayout::Patches => None,
    };
    let n = tiles.map_or(grid.patch_len(), |t| t.height);
    let m = (spec.sampling_rate * n as f64).round() as usize;
    if m < 1 {
        return Err(Error::Config(format!(
            "sampling rate {} gives no measurements for signals of length {n}",
            spec.sampling_rate
        )));
    }
    if spec.atoms >= grid.patch_count() {
        return Err(Error::Config(format!(
            "atoms ({}) must be fewer than patches ({})",
            spec.atoms,
            grid.patch_count()
        )));
    }
    let ens = MeasurementEnsemble::complex_gaussian(n, m, hash64(master_seed, ENSEMBLE_STREAM))?;
    let op = match tiles {
        Some(t) => PatchOperator::tiled(&ens, t)?,
        None => PatchOperator::direct(&ens),
    };
    let clean = op.forward(&grid.patch_matrix)?.mapv(|c| c.norm_sqr());
    let setup = Setup { image, grid, op, tiles };
    let results = (0..trials)
        .map(|t| run_trial(&setup, spec, &clean, t, trial_seed(master_seed, t), t == 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageReport {
        width: image.width(),
        height: image.height(),
        signal_len: n,
        measurements: m,
        patches: setup.grid.patch_count(),
        trials: results,
    })
}
