//! C-PRIME: sparse phase retrieval by SQUAREM-accelerated MM.
//!
//! Minimizes `f(x) = ‖√y − |Ax|‖² + ρ‖x‖₁`. Each MM step replaces `f` by a
//! separable quadratic surrogate built from `C ≥ λmax(AᴴA)` and the current
//! measurement phases, whose minimizer is a single soft-threshold:
//!
//! ```text
//! c      = x − (1/C)·Aᴴ(Ax − √y ⊙ e^{j arg(Ax)})
//! x⁺     = soft_threshold(c, ρ / 2C)
//! ```
//!
//! SQUAREM extrapolates from two MM steps and backtracks the step length
//! towards `α = −1` until the extrapolated point is no worse than the
//! second MM iterate, so the objective never increases.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::linalg::{complex_normal_vector, l1_norm, max_abs, norm2, rng_from_seed};
use crate::measurements::{IntensitySamples, MeasurementEnsemble};
use crate::prox::{soft_threshold_inplace, MajorizerParams};
use crate::{CVector, Complex64, Error, Result};

/// Default `ρ = DEFAULT_RHO_FACTOR · ‖Aᴴ√y‖_∞`.
pub const DEFAULT_RHO_FACTOR: f64 = 0.1;
/// Relative slack allowed on the descent inequality.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Step-length halvings allowed before the extrapolation is abandoned.
pub const MAX_BACKTRACKS: usize = 60;
/// Below this `‖v‖` the extrapolation direction is treated as zero.
pub const V_NORM_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CprimeConfig {
    /// ℓ1 weight `ρ`.
    pub rho: f64,
    /// Outer iterations `t₀`.
    pub max_iters: usize,
    /// The constant `C`.
    pub c_bound: MajorizerParams,
    /// Stop once the relative objective decrease falls below `tol`; 0 runs
    /// all `max_iters` iterations.
    pub tol: f64,
    /// Seed for the random starting point.
    pub rng_seed: u64,
}

impl CprimeConfig {
    /// Heuristic `ρ`, the ensemble's spectral bound, 1000 iterations, no
    /// early stop.
    pub fn with_defaults(ensemble: &MeasurementEnsemble, sqrt_y: ArrayView1<f64>, rng_seed: u64) -> Result<Self> {
        Ok(Self {
            rho: default_rho(ensemble, sqrt_y, DEFAULT_RHO_FACTOR)?,
            max_iters: 1000,
            c_bound: MajorizerParams::for_ensemble(ensemble),
            tol: 0.0,
            rng_seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must be finite and >= 0, got {}", self.rho)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.c_bound.bound > 0.0) {
            return Err(Error::Config("majorizer bound must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// `factor · ‖Aᴴ√y‖_∞`.
pub fn default_rho(ensemble: &MeasurementEnsemble, sqrt_y: ArrayView1<f64>, factor: f64) -> Result<f64> {
    let u: CVector = sqrt_y.mapv(|v| Complex64::new(v, 0.0));
    Ok(factor * max_abs(ensemble.adjoint(u.view())?.iter()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CprimeState {
    pub x: CVector,
    /// `f(x⁽ᵏ⁾)` for `k = 0..=iterations`; entry 0 is the starting point.
    pub objective_trace: Vec<f64>,
    /// Backtracking halvings per outer iteration.
    pub backtrack_counts: Vec<usize>,
    /// Largest `f(x₃) − f(x₂)` seen when a backtracking loop exited.
    /// Never positive.
    pub worst_loop_exit_gap: f64,
}

impl CprimeState {
    pub fn iterations(&self) -> usize {
        self.backtrack_counts.len()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting point")
    }

    /// Every trace step satisfies `f(k+1) ≤ f(k) + slack·(1 + f(k))`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * (1.0 + w[0]))
    }
}

fn check_dims(ensemble: &MeasurementEnsemble, sqrt_y: ArrayView1<f64>, x: ArrayView1<Complex64>) -> Result<()> {
    if sqrt_y.len() != ensemble.rows() {
        return Err(Error::dims("measurements", ensemble.rows(), sqrt_y.len()));
    }
    if x.len() != ensemble.cols() {
        return Err(Error::dims("signal", ensemble.cols(), x.len()));
    }
    Ok(())
}

fn data_fit(ax: &CVector, sqrt_y: ArrayView1<f64>) -> f64 {
    ax.iter().zip(sqrt_y.iter()).map(|(a, s)| (s - a.norm()).powi(2)).sum()
}

/// `‖√y − |Ax|‖² + ρ‖x‖₁`.
pub fn objective(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x: ArrayView1<Complex64>,
    rho: f64,
) -> Result<f64> {
    check_dims(ensemble, sqrt_y, x)?;
    Ok(objective_unchecked(ensemble, sqrt_y, x, rho))
}

fn objective_unchecked(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x: ArrayView1<Complex64>,
    rho: f64,
) -> f64 {
    let ax = ensemble.apply(x);
    data_fit(&ax, sqrt_y) + rho * l1_norm(x.iter())
}

/// `√y ⊙ e^{j arg(Ax)}` with `arg(0) = 0`.
pub(crate) fn phase_target(ax: &CVector, sqrt_y: ArrayView1<f64>) -> CVector {
    let mut out = CVector::zeros(ax.len());
    Zip::from(&mut out).and(ax).and(sqrt_y).for_each(|o, &a, &s| {
        let mag = a.norm();
        *o = if mag > 0.0 {
            a * (s / mag)
        } else {
            Complex64::new(s, 0.0)
        };
    });
    out
}

/// Value of the MM surrogate `g(x | x_k)` for `f`:
///
/// `‖Ax‖² + (x−x_k)ᴴ(C·I − AᴴA)(x−x_k) − 2√yᵀRe[Ax ⊙ e^{−j arg(Ax_k)}] + ‖√y‖² + ρ‖x‖₁`.
///
/// `g(x_k | x_k) = f(x_k)` and `g ≥ f` everywhere when `C ≥ λmax(AᴴA)`.
pub fn surrogate(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x: ArrayView1<Complex64>,
    x_k: ArrayView1<Complex64>,
    rho: f64,
    c_bound: f64,
) -> Result<f64> {
    check_dims(ensemble, sqrt_y, x)?;
    check_dims(ensemble, sqrt_y, x_k)?;
    let ax = ensemble.apply(x);
    let target = phase_target(&ensemble.apply(x_k), sqrt_y);
    let diff = &x - &x_k;
    let adiff = ensemble.apply(diff.view());
    let quad = ax.iter().map(|c| c.norm_sqr()).sum::<f64>() + c_bound * diff.iter().map(|c| c.norm_sqr()).sum::<f64>()
        - adiff.iter().map(|c| c.norm_sqr()).sum::<f64>();
    // √yᵢ e^{-j arg(Ax_k)ᵢ} (Ax)ᵢ = conj(targetᵢ)·(Ax)ᵢ
    let cross: f64 = target.iter().zip(ax.iter()).map(|(t, a)| (t.conj() * a).re).sum();
    let energy: f64 = sqrt_y.iter().map(|s| s * s).sum();
    Ok(quad - 2.0 * cross + energy + rho * l1_norm(x.iter()))
}

/// One MM update from `x_in`.
pub fn mm_step(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x_in: ArrayView1<Complex64>,
    rho: f64,
    c_bound: &MajorizerParams,
) -> Result<CVector> {
    check_dims(ensemble, sqrt_y, x_in)?;
    Ok(mm_step_unchecked(ensemble, sqrt_y, x_in, rho, c_bound.bound))
}

fn mm_step_unchecked(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x_in: ArrayView1<Complex64>,
    rho: f64,
    c: f64,
) -> CVector {
    let ax = ensemble.apply(x_in);
    let target = phase_target(&ax, sqrt_y);
    let residual = &ax - &target;
    let grad = ensemble.apply_adjoint(residual.view());
    let inv_c = 1.0 / c;
    let mut out = CVector::zeros(x_in.len());
    Zip::from(&mut out)
        .and(x_in)
        .and(&grad)
        .for_each(|o, &x, &g| *o = x - g * inv_c);
    soft_threshold_inplace(out.view_mut(), rho / (2.0 * c));
    out
}

/// Result of one accelerated outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaremStep {
    pub x_next: CVector,
    pub backtracks: usize,
    /// Step length used for `x₃`; `None` when acceleration was skipped.
    pub alpha: Option<f64>,
    pub objective_x2: f64,
    pub objective_x3: f64,
    pub objective_next: f64,
}

/// One SQUAREM iteration:
///
/// ```text
/// x₁ = MM(x_k), x₂ = MM(x₁), r = x₁ − x_k, v = x₂ − x₁ − r
/// α  = −‖r‖/‖v‖,  x₃ = x_k − 2αr + α²v
/// while f(x₃) > f(x₂): α ← (α − 1)/2, recompute x₃
/// x_{k+1} = MM(x₃)
/// ```
///
/// At `α = −1` the extrapolation collapses to `x₃ = x₂`; the loop snaps
/// to that point exactly once `α` is within 1e-12 of −1 or after
/// [`MAX_BACKTRACKS`] halvings. With `‖v‖ < 1e-15` acceleration is skipped
/// and `x_{k+1} = MM(x₂)`.
pub fn squarem_step(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x_k: ArrayView1<Complex64>,
    config: &CprimeConfig,
) -> Result<SquaremStep> {
    check_dims(ensemble, sqrt_y, x_k)?;
    config.validate()?;
    Ok(squarem_step_unchecked(ensemble, sqrt_y, x_k, config))
}

fn squarem_step_unchecked(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x_k: ArrayView1<Complex64>,
    config: &CprimeConfig,
) -> SquaremStep {
    let (rho, c) = (config.rho, config.c_bound.bound);
    let f = |x: ArrayView1<Complex64>| objective_unchecked(ensemble, sqrt_y, x, rho);
    let mm = |x: ArrayView1<Complex64>| mm_step_unchecked(ensemble, sqrt_y, x, rho, c);

    let x1 = mm(x_k);
    let x2 = mm(x1.view());
    let r = &x1 - &x_k;
    let v = &x2 - &x1 - &r;
    let v_norm = norm2(v.view());
    let f2 = f(x2.view());

    if v_norm < V_NORM_FLOOR {
        let x_next = mm(x2.view());
        let f_next = f(x_next.view());
        return SquaremStep {
            x_next,
            backtracks: 0,
            alpha: None,
            objective_x2: f2,
            objective_x3: f2,
            objective_next: f_next,
        };
    }

    let extrapolate = |alpha: f64| -> CVector {
        if alpha == -1.0 {
            return x2.clone();
        }
        let mut x3 = CVector::zeros(x_k.len());
        Zip::from(&mut x3)
            .and(x_k)
            .and(&r)
            .and(&v)
            .for_each(|o, &xk, &ri, &vi| *o = xk - ri * (2.0 * alpha) + vi * (alpha * alpha));
        x3
    };

    let search = backtrack(-norm2(r.view()) / v_norm, f2, |alpha| f(extrapolate(alpha).view()));
    let (alpha, backtracks, f3) = (search.alpha, search.backtracks, search.objective);
    let x3 = extrapolate(alpha);

    let x_next = mm(x3.view());
    let f_next = f(x_next.view());
    SquaremStep {
        x_next,
        backtracks,
        alpha: Some(alpha),
        objective_x2: f2,
        objective_x3: f3,
        objective_next: f_next,
    }
}

/// Outcome of the step-length search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Backtrack {
    pub alpha: f64,
    pub backtracks: usize,
    /// `f(x₃)` at the accepted `alpha`; equals `f2` when `alpha` snapped to −1.
    pub objective: f64,
}

/// Halves `alpha` towards −1 until `f3(alpha) ≤ f2`, snapping to exactly −1
/// (where `x₃ = x₂` and `f3 = f2` without evaluation) when within 1e-12 of it
/// or after [`MAX_BACKTRACKS`] halvings.
pub fn backtrack(alpha0: f64, f2: f64, mut f3: impl FnMut(f64) -> f64) -> Backtrack {
    let mut alpha = alpha0;
    let mut backtracks = 0;
    let mut value = if alpha == -1.0 { f2 } else { f3(alpha) };
    // `!(value <= f2)` also rejects a NaN objective
    while !(value <= f2) {
        backtracks += 1;
        alpha = (alpha - 1.0) / 2.0;
        if backtracks >= MAX_BACKTRACKS || (alpha + 1.0).abs() < 1e-12 {
            alpha = -1.0;
        }
        value = if alpha == -1.0 { f2 } else { f3(alpha) };
    }
    Backtrack {
        alpha,
        backtracks,
        objective: value,
    }
}

/// Runs C-PRIME from a seeded complex Gaussian start.
pub fn solve_cprime(
    ensemble: &MeasurementEnsemble,
    samples: &IntensitySamples,
    config: &CprimeConfig,
) -> Result<CprimeState> {
    let mut rng = rng_from_seed(config.rng_seed);
    let x0 = complex_normal_vector(&mut rng, ensemble.cols(), 1.0);
    solve_cprime_from(ensemble, samples.sqrt_y.view(), x0, config)
}

/// Runs C-PRIME from an explicit starting point.
pub fn solve_cprime_from(
    ensemble: &MeasurementEnsemble,
    sqrt_y: ArrayView1<f64>,
    x0: CVector,
    config: &CprimeConfig,
) -> Result<CprimeState> {
    check_dims(ensemble, sqrt_y, x0.view())?;
    config.validate()?;

    let mut x = x0;
    let mut f_prev = objective_unchecked(ensemble, sqrt_y, x.view(), config.rho);
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    trace.push(f_prev);
    let mut backtracks = Vec::with_capacity(config.max_iters);
    let mut worst_gap = f64::NEG_INFINITY;

    for _ in 0..config.max_iters {
        let step = squarem_step_unchecked(ensemble, sqrt_y, x.view(), config);
        worst_gap = worst_gap.max(step.objective_x3 - step.objective_x2);
        backtracks.push(step.backtracks);
        x = step.x_next;
        let f_new = step.objective_next;
        trace.push(f_new);
        let decrease = f_prev - f_new;
        f_prev = f_new;
        if f_new == 0.0 || (config.tol > 0.0 && decrease <= config.tol * f_new.abs().max(f64::MIN_POSITIVE)) {
            break;
        }
    }

    Ok(CprimeState {
        x,
        objective_trace: trace,
        backtrack_counts: backtracks,
        worst_loop_exit_gap: if worst_gap.is_finite() { worst_gap } else { 0.0 },
    })
}

/// `|Ax|` for diagnostics.
pub fn measured_modulus(ensemble: &MeasurementEnsemble, x: ArrayView1<Complex64>) -> Result<Array1<f64>> {
    Ok(ensemble.forward(x)?.mapv(|c| c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal_vector, rng_from_seed};
    use crate::measurements::{synthesize, GroundTruth, NoiseModel, NonzeroDistribution};

    fn instance(n: usize, m: usize, k: usize, seed: u64) -> (MeasurementEnsemble, IntensitySamples, GroundTruth) {
        let ens = MeasurementEnsemble::partial_dft(n, m, seed).unwrap();
        let truth = GroundTruth::sparse(n, k, seed + 1, NonzeroDistribution::ComplexGaussian).unwrap();
        let s = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0).unwrap();
        (ens, s, truth)
    }

    #[test]
    fn unregularized_full_dft_step_is_magnitude_projection() {
        let (ens, s, _) = instance(16, 16, 3, 1);
        let mut rng = rng_from_seed(4);
        let x = complex_normal_vector(&mut rng, 16, 1.0);
        let bound = MajorizerParams::for_ensemble(&ens);
        let out = mm_step(&ens, s.sqrt_y.view(), x.view(), 0.0, &bound).unwrap();
        // with AᴴA = I the update is Aᴴ(√y ⊙ e^{j arg Ax})
        let ax = ens.forward(x.view()).unwrap();
        let direct = ens.adjoint(phase_target(&ax, s.sqrt_y.view()).view()).unwrap();
        assert!((&out - &direct).iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn consistent_point_is_fixed() {
        let (ens, s, truth) = instance(16, 8, 2, 2);
        let bound = MajorizerParams::for_ensemble(&ens);
        let out = mm_step(&ens, s.sqrt_y.view(), truth.x_true.view(), 0.0, &bound).unwrap();
        assert!((&out - &truth.x_true).iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn mm_steps_descend_to_a_plateau() {
        let ens = MeasurementEnsemble::complex_gaussian(16, 8, 3).unwrap();
        let truth = GroundTruth::sparse(16, 2, 5, NonzeroDistribution::ComplexGaussian).unwrap();
        let s = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0).unwrap();
        let rho = default_rho(&ens, s.sqrt_y.view(), DEFAULT_RHO_FACTOR).unwrap();
        let bound = MajorizerParams::for_ensemble(&ens);
        let mut x = complex_normal_vector(&mut rng_from_seed(1), 16, 1.0);
        let mut prev = objective(&ens, s.sqrt_y.view(), x.view(), rho).unwrap();
        let first = prev;
        for _ in 0..50 {
            x = mm_step(&ens, s.sqrt_y.view(), x.view(), rho, &bound).unwrap();
            let cur = objective(&ens, s.sqrt_y.view(), x.view(), rho).unwrap();
            assert!(cur <= prev + MONOTONE_SLACK * (1.0 + prev));
            prev = cur;
        }
        assert!(prev < first);
    }

    #[test]
    fn surrogate_touches_and_majorizes() {
        let ens = MeasurementEnsemble::complex_gaussian(12, 6, 9).unwrap();
        let mut rng = rng_from_seed(2);
        let truth = complex_normal_vector(&mut rng, 12, 1.0);
        let s = synthesize(&ens, truth.view(), NoiseModel::None, 0).unwrap();
        let c = ens.spectral_bound();
        for _ in 0..20 {
            let xk = complex_normal_vector(&mut rng, 12, 1.0);
            let fk = objective(&ens, s.sqrt_y.view(), xk.view(), 0.3).unwrap();
            let gk = surrogate(&ens, s.sqrt_y.view(), xk.view(), xk.view(), 0.3, c).unwrap();
            assert!((fk - gk).abs() <= 1e-8 * fk.abs().max(1.0));
            let x = complex_normal_vector(&mut rng, 12, 1.0);
            let f = objective(&ens, s.sqrt_y.view(), x.view(), 0.3).unwrap();
            let g = surrogate(&ens, s.sqrt_y.view(), x.view(), xk.view(), 0.3, c).unwrap();
            assert!(g >= f - 1e-9 * f.abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_direction_skips_acceleration() {
        // at a fixed point r = v = 0
        let (ens, s, truth) = instance(16, 16, 2, 3);
        let cfg = CprimeConfig {
            rho: 0.0,
            ..CprimeConfig::with_defaults(&ens, s.sqrt_y.view(), 0).unwrap()
        };
        let step = squarem_step(&ens, s.sqrt_y.view(), truth.x_true.view(), &cfg).unwrap();
        assert_eq!(step.backtracks, 0);
        assert!(step.alpha.is_none());
        let x2 = mm_step(&ens, s.sqrt_y.view(), truth.x_true.view(), 0.0, &cfg.c_bound).unwrap();
        let x2 = mm_step(&ens, s.sqrt_y.view(), x2.view(), 0.0, &cfg.c_bound).unwrap();
        let expect = mm_step(&ens, s.sqrt_y.view(), x2.view(), 0.0, &cfg.c_bound).unwrap();
        assert_eq!(step.x_next, expect);
    }

    #[test]
    fn squarem_never_increases_objective() {
        let ens = MeasurementEnsemble::partial_dft(32, 16, 11).unwrap();
        let truth = GroundTruth::sparse(32, 3, 12, NonzeroDistribution::ComplexGaussian).unwrap();
        let s = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0).unwrap();
        let cfg = CprimeConfig::with_defaults(&ens, s.sqrt_y.view(), 13).unwrap();
        let mut x = complex_normal_vector(&mut rng_from_seed(13), 32, 1.0);
        let mut fx = objective(&ens, s.sqrt_y.view(), x.view(), cfg.rho).unwrap();
        for _ in 0..200 {
            let step = squarem_step(&ens, s.sqrt_y.view(), x.view(), &cfg).unwrap();
            assert!(step.objective_x3 <= step.objective_x2);
            assert!(step.backtracks <= MAX_BACKTRACKS);
            assert!(step.objective_next <= fx + MONOTONE_SLACK * (1.0 + fx));
            x = step.x_next;
            fx = step.objective_next;
        }
    }

    #[test]
    fn zero_data_drives_signal_to_zero() {
        let ens = MeasurementEnsemble::partial_dft(32, 16, 0).unwrap();
        let samples = IntensitySamples::from_intensities(Array1::zeros(16), NoiseModel::None);
        let cfg = CprimeConfig {
            rho: 10.0,
            max_iters: 5,
            c_bound: MajorizerParams::for_ensemble(&ens),
            tol: 0.0,
            rng_seed: 4,
        };
        let st = solve_cprime(&ens, &samples, &cfg).unwrap();
        assert!(st.x.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        assert!(st.iterations() <= 5);
    }

    #[test]
    fn hostile_objective_forces_snap_to_x2() {
        let mut calls = 0;
        let out = backtrack(-50.0, 1.0, |_| {
            calls += 1;
            f64::NAN
        });
        assert_eq!(out.alpha, -1.0);
        assert_eq!(out.objective, 1.0);
        assert!(out.backtracks <= MAX_BACKTRACKS);
        assert_eq!(calls, out.backtracks);
        let huge = backtrack(-1e30, 1.0, |_| f64::INFINITY);
        assert_eq!((huge.alpha, huge.backtracks), (-1.0, MAX_BACKTRACKS));
        assert_eq!(backtrack(-3.0, 1.0, |_| 0.5).backtracks, 0);
    }

    #[test]
    fn solve_is_deterministic_and_monotone() {
        let (ens, s, _) = instance(64, 32, 4, 21);
        let cfg = CprimeConfig {
            max_iters: 300,
            ..CprimeConfig::with_defaults(&ens, s.sqrt_y.view(), 5).unwrap()
        };
        let a = solve_cprime(&ens, &s, &cfg).unwrap();
        let b = solve_cprime(&ens, &s, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_monotone(MONOTONE_SLACK));
        assert!(a.objective_trace.iter().all(|&v| v >= 0.0));
        assert!(a.worst_loop_exit_gap <= 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (ens, _, _) = instance(16, 8, 2, 0);
        let bad = IntensitySamples::from_intensities(Array1::zeros(7), NoiseModel::None);
        let cfg = CprimeConfig::with_defaults(&ens, Array1::zeros(8).view(), 0).unwrap();
        assert!(matches!(
            solve_cprime(&ens, &bad, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
