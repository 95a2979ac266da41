//! Result files.
//!
//! | file | contents |
//! |------|----------|
//! | `results.csv` | one row per `(M, K)` cell, per image trial, or per SNR |
//! | `trials.csv` | sweep only: one row per trial |
//! | `results.json` | spec, summary rows and per-trial records |
//! | `timing.json` | wall-clock times; the only file that varies between runs |
//! | `trace_*.csv` | objective traces (sweep: trial 0 of each cell; image: trial 0) |
//! | `recon_x.pgm`, `recon_dz.pgm` | image trial 0 reconstructions |

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::{ExperimentSpec, ImageTrial, NoiseRow, Report, SparseTrial};
use crate::{Error, Result};

#[derive(Serialize)]
struct SparseTrialRow {
    m: usize,
    k: usize,
    trial: usize,
    seed: u64,
    nse: Option<f64>,
    success: Option<bool>,
    final_stage_nse: f64,
    iterations: usize,
    chosen_restart: usize,
    final_objective: f64,
    max_backtracks: usize,
    worst_loop_exit_gap: f64,
    monotone: bool,
}

impl From<&SparseTrial> for SparseTrialRow {
    fn from(t: &SparseTrial) -> Self {
        Self {
            m: t.m,
            k: t.k,
            trial: t.result.trial,
            seed: t.result.seed,
            nse: t.result.nse,
            success: t.result.success,
            final_stage_nse: t.final_stage_nse,
            iterations: t.result.iterations,
            chosen_restart: t.chosen_restart,
            final_objective: t.final_objective,
            max_backtracks: t.max_backtracks,
            worst_loop_exit_gap: t.worst_loop_exit_gap,
            monotone: t.monotone,
        }
    }
}

#[derive(Serialize)]
struct ImageRow {
    trial: usize,
    seed: u64,
    psnr_x: Option<f64>,
    ssim_x: Option<f64>,
    psnr_dz: Option<f64>,
    ssim_dz: Option<f64>,
    cycles: usize,
    rho: f64,
    initial_objective: f64,
    final_objective: f64,
    jacobi_fallbacks: usize,
}

impl From<&ImageTrial> for ImageRow {
    fn from(t: &ImageTrial) -> Self {
        let r = &t.result;
        Self {
            trial: r.trial,
            seed: r.seed,
            psnr_x: r.psnr_x,
            ssim_x: r.ssim_x,
            psnr_dz: r.psnr_dz,
            ssim_dz: r.ssim_dz,
            cycles: r.iterations,
            rho: t.rho,
            initial_objective: t.initial_objective,
            final_objective: t.final_objective,
            jacobi_fallbacks: t.jacobi_fallbacks,
        }
    }
}

#[derive(Serialize)]
struct NoiseCsvRow {
    snr_db: f64,
    noise_var: f64,
    var_ratio: Option<f64>,
    mean_ratio: Option<f64>,
    below_half: usize,
    outside_regime: bool,
    discarded: usize,
}

impl From<&NoiseRow> for NoiseCsvRow {
    fn from(r: &NoiseRow) -> Self {
        Self {
            snr_db: r.snr_db,
            noise_var: r.noise_var,
            var_ratio: r.var_ratio,
            mean_ratio: r.mean_ratio,
            below_half: r.below_half,
            outside_regime: r.outside_regime,
            discarded: r.discarded,
        }
    }
}

#[derive(Serialize)]
struct CycleRow {
    cycle: usize,
    objective: f64,
    after_codes: Option<f64>,
    after_signals: Option<f64>,
    after_dictionary: Option<f64>,
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn to_json(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn results_csv(report: &Report) -> Result<Vec<u8>> {
    match report {
        Report::Sweep(r) => csv_bytes(&r.cells),
        Report::Image(r) => csv_bytes(r.trials.iter().map(ImageRow::from)),
        Report::Noise(r) => csv_bytes(r.rows.iter().map(NoiseCsvRow::from)),
    }
}

pub fn results_json(spec: &ExperimentSpec, report: &Report) -> serde_json::Value {
    match report {
        Report::Sweep(r) => json!({
            "spec": spec,
            "n": r.n,
            "cells": r.cells,
            "trials": r.trials,
        }),
        Report::Image(r) => json!({
            "spec": spec,
            "width": r.width,
            "height": r.height,
            "signal_len": r.signal_len,
            "measurements": r.measurements,
            "patches": r.patches,
            "trials": r.trials,
        }),
        Report::Noise(r) => json!({
            "spec": spec,
            "samples": r.samples,
            "min_modulus": r.min_modulus,
            "rows": r.rows,
        }),
    }
}

fn timing_json(report: &Report) -> serde_json::Value {
    match report {
        Report::Sweep(r) => json!({
            "cells": r.cells.iter().map(|c| json!({"m": c.m, "k": c.k, "mean_time_ms": c.mean_time_ms})).collect::<Vec<_>>(),
            "trials_ms": r.trials.iter().map(|t| t.result.wall_ms).collect::<Vec<_>>(),
        }),
        Report::Image(r) => json!({
            "trials_ms": r.trials.iter().map(|t| t.result.wall_ms).collect::<Vec<_>>(),
        }),
        Report::Noise(_) => json!({}),
    }
}

/// Writes every output file for `report` into `dir`, creating it if needed.
pub fn write_outputs(spec: &ExperimentSpec, report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "results.csv", &results_csv(report)?)?;
    write(dir, "results.json", &to_json(&results_json(spec, report))?)?;
    write(dir, "timing.json", &to_json(&timing_json(report))?)?;
    match report {
        Report::Sweep(r) => {
            write(
                dir,
                "trials.csv",
                &csv_bytes(r.trials.iter().map(SparseTrialRow::from))?,
            )?;
            for t in r.trials.iter().filter(|t| t.result.trial == 0) {
                write(dir, &format!("trace_m{}_k{}.csv", t.m, t.k), &csv_bytes(&t.trace)?)?;
            }
        }
        Report::Image(r) => {
            if let Some(t) = r.trials.first() {
                let rows = t.objective_trace.iter().enumerate().map(|(i, &objective)| {
                    let blocks = i.checked_sub(1).and_then(|j| t.block_trace.get(j));
                    CycleRow {
                        cycle: i,
                        objective,
                        after_codes: blocks.map(|b| b.after_codes),
                        after_signals: blocks.map(|b| b.after_signals),
                        after_dictionary: blocks.map(|b| b.after_dictionary),
                    }
                });
                write(dir, "trace.csv", &csv_bytes(rows)?)?;
                if let Some(img) = &t.recon_x {
                    img.write_pgm(&dir.join("recon_x.pgm"))?;
                }
                if let Some(img) = &t.recon_dz {
                    img.write_pgm(&dir.join("recon_dz.pgm"))?;
                }
            }
        }
        Report::Noise(_) => {}
    }
    Ok(())
}
