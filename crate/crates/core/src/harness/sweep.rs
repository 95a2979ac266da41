use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::SparseSweepSpec;
use super::{elapsed_ms, mean, trial_seed, TrialResult};
use crate::ambiguity::{is_success, nse, AmbiguityClass};
use crate::cprime::{default_rho, solve_cprime_from, CprimeConfig, MONOTONE_SLACK};
use crate::linalg::{complex_normal_vector, hash64, rng_from_seed};
use crate::measurements::{synthesize, GroundTruth, MeasurementEnsemble, NoiseModel};
use crate::prox::MajorizerParams;
use crate::Result;

const ENSEMBLE_STREAM: u64 = 1;
const TRUTH_STREAM: u64 = 2;
const RESTART_STREAM: u64 = 16;
/// Master-level stream for the shared row subsets of `fix_ensemble`.
const FIXED_ENSEMBLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTrial {
    pub m: usize,
    pub k: usize,
    #[serde(flatten)]
    pub result: TrialResult,
    /// NSE of the kept restart at the last stage.
    pub final_stage_nse: f64,
    pub stage_nse: Vec<f64>,
    pub chosen_restart: usize,
    pub final_objective: f64,
    /// Largest backtrack count over every step of every restart.
    pub max_backtracks: usize,
    /// Largest `f(x₃) − f(x₂)` at a backtracking exit; never positive.
    pub worst_loop_exit_gap: f64,
    /// Every stage trace of every restart is non-increasing.
    pub monotone: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub stage: usize,
    pub rho: f64,
    pub iteration: usize,
    pub objective: f64,
    pub backtracks: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub recovery_prob: f64,
    /// Mean NSE.
    pub nmse: f64,
    pub max_backtracks: usize,
    pub worst_loop_exit_gap: f64,
    pub all_monotone: bool,
    #[serde(skip)]
    pub mean_time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub n: usize,
    pub cells: Vec<CellSummary>,
    /// Cell-major, trial-minor.
    pub trials: Vec<SparseTrial>,
}

impl SweepReport {
    pub fn cell(&self, m: usize, k: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.m == m && c.k == k)
    }

    pub fn cell_trials(&self, m: usize, k: usize) -> impl Iterator<Item = &SparseTrial> {
        self.trials.iter().filter(move |t| t.m == m && t.k == k)
    }
}

/// One noiseless trial; `ensemble_seed` selects the row subset.
pub fn run_sparse_trial(
    spec: &SparseSweepSpec,
    m: usize,
    k: usize,
    trial: usize,
    seed: u64,
    ensemble_seed: u64,
) -> Result<SparseTrial> {
    let start = Instant::now();
    let ens = MeasurementEnsemble::partial_dft(spec.n, m, ensemble_seed)?;
    let truth = GroundTruth::sparse(spec.n, k, hash64(seed, TRUTH_STREAM), spec.nonzeros)?;
    let samples = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0)?;
    let sqrt_y = samples.sqrt_y.view();
    let base = default_rho(&ens, sqrt_y, 1.0)?;
    let sv = &spec.solver;

    let mut best: Option<(usize, f64, Vec<f64>, Vec<TraceRow>)> = None;
    let (mut max_bt, mut worst_gap, mut monotone, mut iterations) = (0, f64::NEG_INFINITY, true, 0);
    for r in 0..sv.restarts {
        let mut rng = rng_from_seed(hash64(seed, RESTART_STREAM + r as u64));
        let mut x = complex_normal_vector(&mut rng, spec.n, 1.0);
        let mut stage_nse = Vec::with_capacity(sv.rho_factors.len());
        let mut trace = Vec::new();
        let mut final_obj = f64::INFINITY;
        for (stage, &factor) in sv.rho_factors.iter().enumerate() {
            let cfg = CprimeConfig {
                rho: factor * base,
                max_iters: sv.iters_per_stage,
                c_bound: MajorizerParams::for_ensemble(&ens),
                tol: sv.tol,
                rng_seed: seed,
            };
            let st = solve_cprime_from(&ens, sqrt_y, x, &cfg)?;
            iterations += st.iterations();
            max_bt = max_bt.max(st.backtrack_counts.iter().copied().max().unwrap_or(0));
            worst_gap = worst_gap.max(st.worst_loop_exit_gap);
            monotone &= st.is_monotone(MONOTONE_SLACK);
            final_obj = st.final_objective();
            stage_nse.push(nse(st.x.view(), truth.x_true.view(), AmbiguityClass::FOURIER)?);
            if trial == 0 {
                trace.extend(st.objective_trace.iter().enumerate().map(|(i, &objective)| TraceRow {
                    stage,
                    rho: cfg.rho,
                    iteration: i,
                    objective,
                    backtracks: i.checked_sub(1).map(|j| st.backtrack_counts[j]),
                }));
            }
            x = st.x;
        }
        // ties keep the earlier restart
        if best.as_ref().is_none_or(|b| final_obj < b.1) {
            best = Some((r, final_obj, stage_nse, trace));
        }
    }
    let (chosen_restart, final_objective, stage_nse, trace) = best.expect("at least one restart");
    let best_nse = stage_nse.iter().copied().fold(f64::INFINITY, f64::min);

    let mut result = TrialResult::new(trial, seed);
    result.nse = Some(best_nse);
    result.success = Some(is_success(best_nse));
    result.iterations = iterations;
    result.wall_ms = elapsed_ms(start);
    Ok(SparseTrial {
        m,
        k,
        result,
        final_stage_nse: *stage_nse.last().expect("at least one stage"),
        stage_nse,
        chosen_restart,
        final_objective,
        max_backtracks: max_bt,
        worst_loop_exit_gap: if worst_gap.is_finite() { worst_gap } else { 0.0 },
        monotone,
        trace,
    })
}

/// Recovery probability and NMSE for every `(M, K)` cell.
///
/// Trial `t` uses the same seed in every cell, so cells compare common
/// random draws.
pub fn run_sparse_sweep(master_seed: u64, trials: usize, spec: &SparseSweepSpec) -> Result<SweepReport> {
    let mut jobs = Vec::new();
    for &m in &spec.m_list {
        for &k in &spec.k_list {
            for t in 0..trials {
                jobs.push((m, k, t));
            }
        }
    }
    let results: Vec<SparseTrial> = jobs
        .par_iter()
        .map(|&(m, k, t)| {
            let seed = trial_seed(master_seed, t);
            let ensemble_seed = if spec.fix_ensemble {
                hash64(hash64(master_seed, FIXED_ENSEMBLE_STREAM), m as u64)
            } else {
                hash64(seed, ENSEMBLE_STREAM)
            };
            run_sparse_trial(spec, m, k, t, seed, ensemble_seed)
        })
        .collect::<Result<_>>()?;

    let cells = results
        .chunks(trials)
        .map(|chunk| {
            let successes = chunk.iter().filter(|t| t.result.success == Some(true)).count();
            CellSummary {
                m: chunk[0].m,
                k: chunk[0].k,
                trials,
                successes,
                recovery_prob: successes as f64 / trials as f64,
                nmse: mean(chunk.iter().filter_map(|t| t.result.nse)).unwrap_or(f64::NAN),
                max_backtracks: chunk.iter().map(|t| t.max_backtracks).max().unwrap_or(0),
                worst_loop_exit_gap: chunk
                    .iter()
                    .map(|t| t.worst_loop_exit_gap)
                    .fold(f64::NEG_INFINITY, f64::max),
                all_monotone: chunk.iter().all(|t| t.monotone),
                mean_time_ms: mean(chunk.iter().map(|t| t.result.wall_ms)).unwrap_or(0.0),
            }
        })
        .collect();
    Ok(SweepReport {
        n: spec.n,
        cells,
        trials: results,
    })
}
