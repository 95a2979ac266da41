//! SC-PRIME: joint signal, dictionary and sparse-code recovery.
//!
//! Minimizes over `X ∈ ℂ^{N×P}`, `D ∈ 𝒟 ⊂ ℂ^{N×L}` and `Z ∈ ℂ^{L×P}`
//!
//! ```text
//! Σ_p ‖√y_p − |A x_p|‖² + μ‖x_p − D z_p‖² + ρ‖z_p‖₁,   𝒟 = {‖d_l‖ ≤ 1}
//! ```
//!
//! by cycling three block updates, each the exact minimizer of a
//! majorizer of the objective in that block:
//!
//! 1. codes: `Z ← soft_threshold(Z − Dᴴ(DZ − X)/E, ρ/(2Eμ))`, `E ≥ λmax(DᴴD)`;
//! 2. signals: `X ← [F·X − Aᴴ(AX − √Y ⊙ e^{j arg AX}) + μ·D Z] / (F + μ)`,
//!    `F ≥ λmax(AᴴA)`;
//! 3. atoms: `d_l ← proj_ball(d_l + R z_{l,T}ᴴ / ‖z_{l,T}‖²)` with the residual
//!    `R = X − DZ` computed once for all atoms.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::TileLayout;
use crate::linalg::{self, adjoint_dot, complex_normal_matrix, frobenius_sqr, l1_norm, max_abs, rng_from_seed};
use crate::measurements::MeasurementEnsemble;
use crate::prox::{self, BoundOrigin, MajorizerParams};
use crate::{CMatrix, Complex64, Error, Result};

/// Default `ρ = DEFAULT_RHO_FACTOR · μ · max_p ‖Dᴴx_p‖_∞` at initialization.
pub const DEFAULT_RHO_FACTOR: f64 = 0.1;
pub const DEFAULT_MU: f64 = 0.5;
/// Code rows with `‖z_{l,T}‖² ≤ DEAD_ATOM_EPS` leave their atom untouched.
pub const DEAD_ATOM_EPS: f64 = 1e-12;
/// `DᴴD` closer than this to `I` (max-abs) takes the closed-form code update.
pub const SEMI_UNITARY_TOL: f64 = 1e-10;
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Atom norms may exceed 1 by this much from rounding.
pub const BALL_SLACK: f64 = 1e-12;

const POWER_ITERS: usize = 30;
const POWER_INFLATION: f64 = 1.01;

/// How the code-step constant `E` is chosen each cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeBoundRule {
    /// `E = L`, valid for any dictionary in 𝒟.
    #[default]
    AtomCount,
    /// Inflated power-iteration estimate of `λmax(DᴴD)`, capped at `L`.
    PowerIteration,
}

/// Atom update schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomSchedule {
    /// All atoms from the same snapshot of `D`. If the simultaneous update
    /// would raise `‖X − DZ‖²`, that cycle falls back to a sequential sweep.
    #[default]
    Jacobi,
    /// Atoms one after another in index order, residual refreshed after each.
    GaussSeidel,
}

/// Distribution of the random starting signals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalInit {
    /// I.i.d. circular complex normal entries.
    #[default]
    ComplexGaussian,
    /// I.i.d. real entries uniform on `[0, 1]`, for nonnegative data such
    /// as images.
    UniformReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScprimeConfig {
    /// Dictionary-fit weight `μ`.
    pub mu: f64,
    /// ℓ1 weight on codes; `None` picks the initialization heuristic.
    pub rho: Option<f64>,
    /// Number of atoms `L`; must be below the number of signals `P`.
    pub atoms: usize,
    /// BSUM cycles `t₀`.
    pub max_iters: usize,
    /// `F ≥ λmax(AᴴA)`.
    pub f_bound: MajorizerParams,
    pub e_bound_rule: CodeBoundRule,
    pub atom_schedule: AtomSchedule,
    pub init: SignalInit,
    /// Relative per-cycle decrease that stops the run; 0 disables.
    pub tol: f64,
    pub rng_seed: u64,
}

impl ScprimeConfig {
    pub fn with_defaults(ensemble: &MeasurementEnsemble, atoms: usize, rng_seed: u64) -> Self {
        Self {
            mu: DEFAULT_MU,
            rho: None,
            atoms,
            max_iters: 100,
            f_bound: MajorizerParams::for_ensemble(ensemble),
            e_bound_rule: CodeBoundRule::AtomCount,
            atom_schedule: AtomSchedule::Jacobi,
            init: SignalInit::ComplexGaussian,
            tol: 0.0,
            rng_seed,
        }
    }

    fn validate(&self, signals: usize) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if let Some(rho) = self.rho {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(Error::Config(format!("rho must be >= 0, got {rho}")));
            }
        }
        if self.atoms == 0 {
            return Err(Error::Config("dictionary needs at least one atom".into()));
        }
        if self.atoms >= signals {
            return Err(Error::InvalidArgument(format!(
                "need fewer atoms than signals (L={}, P={signals})",
                self.atoms
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.f_bound.bound > 0.0) {
            return Err(Error::Config("F must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// Objective value after each block of one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockObjectives {
    pub after_codes: f64,
    pub after_signals: f64,
    pub after_dictionary: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScprimeState {
    /// Signals, one per column (`N×P`).
    pub x: CMatrix,
    /// Dictionary (`N×L`), every atom in the unit ball.
    pub d: CMatrix,
    /// Sparse codes (`L×P`).
    pub z: CMatrix,
    /// ℓ1 weight in effect.
    pub rho: f64,
    /// Objective at initialization followed by one entry per cycle.
    pub objective_trace: Vec<f64>,
    pub block_trace: Vec<BlockObjectives>,
    /// Cycles where the Jacobi atom update was replaced by a sequential sweep.
    pub jacobi_fallbacks: usize,
}

impl ScprimeState {
    /// Checks shapes, `L < P` and atom feasibility.
    pub fn new(x: CMatrix, d: CMatrix, z: CMatrix, rho: f64) -> Result<Self> {
        let (n, p) = x.dim();
        let (dn, l) = d.dim();
        if dn != n {
            return Err(Error::dims("dictionary rows", n, dn));
        }
        if z.dim() != (l, p) {
            return Err(Error::dims("code rows", l, z.nrows()));
        }
        if l >= p {
            return Err(Error::InvalidArgument(format!(
                "need fewer atoms than signals (L={l}, P={p})"
            )));
        }
        if let Some((i, norm)) = linalg::column_norms(d.view())
            .into_iter()
            .enumerate()
            .find(|(_, nrm)| *nrm > 1.0 + BALL_SLACK)
        {
            return Err(Error::InvalidArgument(format!("atom {i} has norm {norm} > 1")));
        }
        Ok(Self {
            x,
            d,
            z,
            rho,
            objective_trace: Vec::new(),
            block_trace: Vec::new(),
            jacobi_fallbacks: 0,
        })
    }

    pub fn signals(&self) -> usize {
        self.x.ncols()
    }

    pub fn atoms(&self) -> usize {
        self.d.ncols()
    }

    /// `D Z`, the dictionary approximation of the signals.
    pub fn approximation(&self) -> CMatrix {
        self.d.dot(&self.z)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    /// Every block and every cycle non-increasing within `slack`.
    pub fn is_block_monotone(&self, slack: f64) -> bool {
        let ok = |prev: f64, next: f64| next <= prev + slack * (1.0 + prev);
        let cycles_ok = self.objective_trace.windows(2).all(|w| ok(w[0], w[1]));
        let mut prev = match self.objective_trace.first() {
            Some(&v) => v,
            None => return true,
        };
        let blocks_ok = self.block_trace.iter().all(|b| {
            let r = ok(prev, b.after_codes)
                && ok(b.after_codes, b.after_signals)
                && ok(b.after_signals, b.after_dictionary);
            prev = b.after_dictionary;
            r
        });
        cycles_ok && blocks_ok
    }
}

/// Element-wise `√max(y, 0)`; also returns how many entries were negative.
pub fn sqrt_intensities(y: ArrayView2<f64>) -> (Array2<f64>, usize) {
    let mut discarded = 0;
    let out = y.mapv(|v| {
        if v < 0.0 {
            discarded += 1;
            0.0
        } else {
            v.sqrt()
        }
    });
    (out, discarded)
}

fn data_fit(ax: &CMatrix, sqrt_y: ArrayView2<f64>) -> f64 {
    ax.iter().zip(sqrt_y.iter()).map(|(a, s)| (s - a.norm()).powi(2)).sum()
}

fn assemble_objective(
    ax: &CMatrix,
    sqrt_y: ArrayView2<f64>,
    x: &CMatrix,
    dz: &CMatrix,
    z: &CMatrix,
    mu: f64,
    rho: f64,
) -> f64 {
    let fit = data_fit(ax, sqrt_y);
    let approx: f64 = x.iter().zip(dz.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    fit + mu * approx + rho * l1_norm(z.iter())
}

/// How the columns of `Y` relate to the signal columns of `X`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SignalLayout {
    /// Column `p` of `Y` measures column `p` of `X`.
    #[default]
    Direct,
    /// `X` holds the patches of an exactly tiled image and `Y` measures the
    /// columns of that image. The reordering is a permutation, so the
    /// objective keeps its form.
    Tiled(TileLayout),
}

/// The measurement map as seen from the patch matrix `X`.
#[derive(Clone, Copy, Debug)]
pub struct PatchOperator<'a> {
    pub ensemble: &'a MeasurementEnsemble,
    pub layout: SignalLayout,
}

impl<'a> PatchOperator<'a> {
    pub fn direct(ensemble: &'a MeasurementEnsemble) -> Self {
        Self {
            ensemble,
            layout: SignalLayout::Direct,
        }
    }

    pub fn tiled(ensemble: &'a MeasurementEnsemble, layout: TileLayout) -> Result<Self> {
        if ensemble.cols() != layout.height {
            return Err(Error::dims(
                "measured image column length",
                layout.height,
                ensemble.cols(),
            ));
        }
        Ok(Self {
            ensemble,
            layout: SignalLayout::Tiled(layout),
        })
    }

    /// Signal length `N` of a column of `X`.
    pub fn signal_len(&self) -> usize {
        match self.layout {
            SignalLayout::Direct => self.ensemble.cols(),
            SignalLayout::Tiled(t) => t.patch_len(),
        }
    }

    /// Number of signals `P` implied by `measured` columns of `Y`.
    pub fn signal_count(&self, measured: usize) -> usize {
        match self.layout {
            SignalLayout::Direct => measured,
            SignalLayout::Tiled(t) => t.patch_count(),
        }
    }

    fn check(&self, sqrt_y: ArrayView2<f64>, x: &CMatrix) -> Result<()> {
        let ens = self.ensemble;
        if sqrt_y.nrows() != ens.rows() {
            return Err(Error::dims("measurement rows", ens.rows(), sqrt_y.nrows()));
        }
        if x.nrows() != self.signal_len() {
            return Err(Error::dims("signal length", self.signal_len(), x.nrows()));
        }
        match self.layout {
            SignalLayout::Direct => {
                if sqrt_y.ncols() != x.ncols() {
                    return Err(Error::dims("measurement columns", x.ncols(), sqrt_y.ncols()));
                }
            }
            SignalLayout::Tiled(t) => {
                if sqrt_y.ncols() != t.width {
                    return Err(Error::dims("measurement columns", t.width, sqrt_y.ncols()));
                }
                if x.ncols() != t.patch_count() {
                    return Err(Error::dims("patch count", t.patch_count(), x.ncols()));
                }
            }
        }
        Ok(())
    }

    /// `A X` in the layout of `Y`.
    pub fn forward(&self, x: &CMatrix) -> Result<CMatrix> {
        match self.layout {
            SignalLayout::Direct => self.ensemble.forward_matrix(x.view()),
            SignalLayout::Tiled(t) => self.ensemble.forward_matrix(t.to_image(x.view())?.view()),
        }
    }

    /// `Aᴴ R` in the layout of `X`.
    pub fn adjoint(&self, r: &CMatrix) -> Result<CMatrix> {
        let back = self.ensemble.adjoint_matrix(r.view())?;
        match self.layout {
            SignalLayout::Direct => Ok(back),
            SignalLayout::Tiled(t) => t.to_patches(back.view()),
        }
    }
}

impl<'a> From<&'a MeasurementEnsemble> for PatchOperator<'a> {
    fn from(ensemble: &'a MeasurementEnsemble) -> Self {
        Self::direct(ensemble)
    }
}

/// `Σ_p ‖√y_p − |Ax_p|‖² + μ‖x_p − Dz_p‖² + ρ‖z_p‖₁`.
pub fn objective<'a>(
    op: impl Into<PatchOperator<'a>>,
    sqrt_y: ArrayView2<f64>,
    state: &ScprimeState,
    mu: f64,
) -> Result<f64> {
    let op = op.into();
    op.check(sqrt_y, &state.x)?;
    let ax = op.forward(&state.x)?;
    let dz = state.approximation();
    Ok(assemble_objective(&ax, sqrt_y, &state.x, &dz, &state.z, mu, state.rho))
}

fn is_semi_unitary(d: &CMatrix) -> bool {
    let g = adjoint_dot(d.view(), d.view());
    g.indexed_iter().all(|((i, j), v)| {
        let target = if i == j { 1.0 } else { 0.0 };
        (v - Complex64::new(target, 0.0)).norm() < SEMI_UNITARY_TOL
    })
}

/// The constant `E` for the code step under `rule`.
pub fn code_bound(d: &CMatrix, rule: CodeBoundRule, seed: u64) -> MajorizerParams {
    let atoms = prox::dictionary_bound(d.ncols().max(1)).expect("at least one atom");
    match rule {
        CodeBoundRule::AtomCount => atoms,
        CodeBoundRule::PowerIteration => {
            let dh = linalg::adjoint(d.view());
            prox::power_iteration_bound(
                |v| dh.dot(&d.dot(v)),
                d.ncols(),
                POWER_ITERS,
                POWER_INFLATION,
                Some(atoms),
                seed,
            )
        }
    }
}

/// Code block given `dz = D Z`.
#[allow(clippy::too_many_arguments)]
fn codes_step(
    x: &CMatrix,
    d: &CMatrix,
    z: &CMatrix,
    dz: &CMatrix,
    mu: f64,
    rho: f64,
    rule: CodeBoundRule,
    seed: u64,
) -> CMatrix {
    if is_semi_unitary(d) {
        let mut out = adjoint_dot(d.view(), x.view());
        prox::soft_threshold_all(&mut out, rho / (2.0 * mu));
        return out;
    }
    let e = code_bound(d, rule, seed).bound;
    let diff = dz - x;
    let grad = adjoint_dot(d.view(), diff.view());
    let inv_e = 1.0 / e;
    let mut out = z.clone();
    Zip::from(&mut out).and(&grad).for_each(|o, &g| *o -= g * inv_e);
    prox::soft_threshold_all(&mut out, rho / (2.0 * e * mu));
    out
}

/// Sparse-code block update with `X`, `D` held fixed.
pub fn update_codes(state: &ScprimeState, config: &ScprimeConfig) -> Result<CMatrix> {
    let dz = state.approximation();
    Ok(codes_step(
        &state.x,
        &state.d,
        &state.z,
        &dz,
        config.mu,
        state.rho,
        config.e_bound_rule,
        config.rng_seed,
    ))
}

/// Signal block given `ax = A X` and `dz_new = D Z⁺`.
fn signals_step(
    op: &PatchOperator,
    sqrt_y: ArrayView2<f64>,
    x: &CMatrix,
    ax: &CMatrix,
    dz_new: &CMatrix,
    f: f64,
    mu: f64,
) -> CMatrix {
    let mut residual = ax.clone();
    Zip::from(&mut residual).and(sqrt_y).for_each(|r, &s| {
        let mag = r.norm();
        let target = if mag > 0.0 {
            *r * (s / mag)
        } else {
            Complex64::new(s, 0.0)
        };
        *r -= target;
    });
    let grad = op.adjoint(&residual).expect("residual has the measurement shape");
    let scale = 1.0 / (f + mu);
    let mut out = CMatrix::zeros(x.dim());
    Zip::from(&mut out)
        .and(x)
        .and(&grad)
        .and(dz_new)
        .for_each(|o, &xv, &g, &dzv| *o = (xv * f - g + dzv * mu) * scale);
    out
}

/// Signal block update with the codes already refreshed this cycle.
pub fn update_signals<'a>(
    state: &ScprimeState,
    op: impl Into<PatchOperator<'a>>,
    sqrt_y: ArrayView2<f64>,
    config: &ScprimeConfig,
) -> Result<CMatrix> {
    let op = op.into();
    op.check(sqrt_y, &state.x)?;
    let ax = op.forward(&state.x)?;
    let dz = state.approximation();
    Ok(signals_step(
        &op,
        sqrt_y,
        &state.x,
        &ax,
        &dz,
        config.f_bound.bound,
        config.mu,
    ))
}

fn project_to_ball(g: &mut ndarray::ArrayViewMut1<Complex64>) {
    let nrm = linalg::norm2(g.view());
    if nrm > 1.0 {
        g.mapv_inplace(|v| v / nrm);
    }
}

/// Simultaneous atom update from residual `r = X − D Z`.
fn jacobi_atoms(d: &CMatrix, z: &CMatrix, r: &CMatrix) -> CMatrix {
    // R z_{l,T}ᴴ for every l at once
    let rzh = r.dot(&linalg::adjoint(z.view()));
    let weights: Vec<f64> = z.axis_iter(Axis(0)).map(|row| linalg::norm_sqr(row)).collect();
    let mut out = d.clone();
    out.axis_iter_mut(Axis(1))
        .into_par_iter()
        .zip(rzh.axis_iter(Axis(1)).into_par_iter())
        .zip(weights.par_iter())
        .for_each(|((mut col, push), &w)| {
            if w > DEAD_ATOM_EPS {
                let inv_w = 1.0 / w;
                Zip::from(&mut col).and(push).for_each(|c, &p| *c += p * inv_w);
                project_to_ball(&mut col);
            }
        });
    out
}

/// Sequential atom sweep in index order; `r` is updated to `X − D⁺Z`.
fn gauss_seidel_atoms(d: &CMatrix, z: &CMatrix, r: &mut CMatrix) -> CMatrix {
    let mut out = d.clone();
    for l in 0..d.ncols() {
        let zl = z.row(l);
        let w = linalg::norm_sqr(zl);
        if w <= DEAD_ATOM_EPS {
            continue;
        }
        let zl_conj = zl.mapv(|c| c.conj());
        let push = r.dot(&zl_conj);
        let old = out.column(l).to_owned();
        let mut col = out.column_mut(l);
        Zip::from(&mut col).and(&push).for_each(|c, &p| *c += p / w);
        project_to_ball(&mut col);
        let delta = &col.to_owned() - &old;
        // R ← R − (d⁺ − d) z_{l,T}
        Zip::from(r.rows_mut()).and(&delta).for_each(|mut rrow, &dv| {
            Zip::from(&mut rrow).and(&zl).for_each(|rv, &zv| *rv -= dv * zv);
        });
    }
    out
}

/// Dictionary block update; returns the new dictionary and whether the
/// Jacobi step had to be replaced by a sequential sweep.
fn dictionary_step(x: &CMatrix, d: &CMatrix, z: &CMatrix, dz: &CMatrix, schedule: AtomSchedule) -> (CMatrix, bool) {
    let r = x - dz;
    match schedule {
        AtomSchedule::GaussSeidel => {
            let mut r = r;
            (gauss_seidel_atoms(d, z, &mut r), false)
        }
        AtomSchedule::Jacobi => {
            let candidate = jacobi_atoms(d, z, &r);
            let before = frobenius_sqr(r.view());
            let after_r = x - &candidate.dot(z);
            let after = frobenius_sqr(after_r.view());
            if after <= before + MONOTONE_SLACK * 1e-3 * (1.0 + before) {
                (candidate, false)
            } else {
                let mut r = r;
                (gauss_seidel_atoms(d, z, &mut r), true)
            }
        }
    }
}

/// Dictionary block update with `X` and `Z` refreshed this cycle.
pub fn update_dictionary(state: &ScprimeState, schedule: AtomSchedule) -> CMatrix {
    let dz = state.approximation();
    dictionary_step(&state.x, &state.d, &state.z, &dz, schedule).0
}

/// Random start per the BSUM initialization: random `X`, random unit-norm
/// atoms, and `Z = (DᴴD)† Dᴴ X`.
///
/// `X` is scaled so `‖X‖_F² = ‖√Y‖_F² · n / ‖A‖_F²` (`n` the length of a
/// measured column), the energy a random direction needs to reproduce the
/// measured energy on average.
pub fn initialize<'a>(
    op: impl Into<PatchOperator<'a>>,
    sqrt_y: ArrayView2<f64>,
    config: &ScprimeConfig,
) -> Result<ScprimeState> {
    let op = op.into();
    let (n, p) = (op.signal_len(), op.signal_count(sqrt_y.ncols()));
    let mut rng = rng_from_seed(config.rng_seed);
    let mut x = match config.init {
        SignalInit::ComplexGaussian => complex_normal_matrix(&mut rng, n, p, 1.0),
        SignalInit::UniformReal => CMatrix::from_shape_simple_fn((n, p), || Complex64::new(rng.random::<f64>(), 0.0)),
    };
    let measured: f64 = sqrt_y.iter().map(|v| v * v).sum();
    let target = measured * op.ensemble.cols() as f64 / op.ensemble.frobenius_sqr().max(f64::MIN_POSITIVE);
    let cur = frobenius_sqr(x.view());
    let scale = if cur > 0.0 { (target / cur).sqrt() } else { 0.0 };
    x.mapv_inplace(|v| v * scale);

    let mut d = complex_normal_matrix(&mut rng, n, config.atoms, 1.0);
    for mut col in d.axis_iter_mut(Axis(1)) {
        let nrm = linalg::norm2(col.view());
        col.mapv_inplace(|v| v / nrm);
    }
    let gram = adjoint_dot(d.view(), d.view());
    let dhx = adjoint_dot(d.view(), x.view());
    let z = linalg::pseudo_inverse(gram.view()).dot(&dhx);

    let rho = match config.rho {
        Some(r) => r,
        None => DEFAULT_RHO_FACTOR * config.mu * max_abs(dhx.iter()),
    };
    ScprimeState::new(x, d, z, rho)
}

/// Runs SC-PRIME on intensities `y` (`M×P`, one column per signal).
pub fn solve_scprime(
    ensemble: &MeasurementEnsemble,
    y: ArrayView2<f64>,
    config: &ScprimeConfig,
) -> Result<ScprimeState> {
    solve_scprime_with(PatchOperator::direct(ensemble), y, config)
}

/// Runs SC-PRIME with an explicit signal layout.
pub fn solve_scprime_with(op: PatchOperator, y: ArrayView2<f64>, config: &ScprimeConfig) -> Result<ScprimeState> {
    config.validate(op.signal_count(y.ncols()))?;
    if y.nrows() != op.ensemble.rows() {
        return Err(Error::dims("measurement rows", op.ensemble.rows(), y.nrows()));
    }
    let (sqrt_y, _) = sqrt_intensities(y);
    let mut state = initialize(op, sqrt_y.view(), config)?;
    op.check(sqrt_y.view(), &state.x)?;
    if sqrt_y.iter().all(|&v| v == 0.0) {
        // X = 0, Z = 0 attains the lower bound 0 of the objective
        state.x.fill(Complex64::new(0.0, 0.0));
        state.z.fill(Complex64::new(0.0, 0.0));
        state.objective_trace.push(0.0);
        return Ok(state);
    }
    run_cycles(op, sqrt_y.view(), config, state)
}

/// Continues BSUM cycles from an existing state.
pub fn run_cycles<'a>(
    op: impl Into<PatchOperator<'a>>,
    sqrt_y: ArrayView2<f64>,
    config: &ScprimeConfig,
    mut state: ScprimeState,
) -> Result<ScprimeState> {
    let op = op.into();
    config.validate(state.signals())?;
    op.check(sqrt_y, &state.x)?;
    let (f, mu, rho) = (config.f_bound.bound, config.mu, state.rho);

    let mut ax = op.forward(&state.x)?;
    let mut dz = state.approximation();
    let mut f_prev = assemble_objective(&ax, sqrt_y, &state.x, &dz, &state.z, mu, rho);
    if state.objective_trace.is_empty() {
        state.objective_trace.push(f_prev);
    }

    for cycle in 0..config.max_iters {
        let seed = linalg::hash64(config.rng_seed, cycle as u64);
        let z_new = codes_step(&state.x, &state.d, &state.z, &dz, mu, rho, config.e_bound_rule, seed);
        let dz_new = state.d.dot(&z_new);
        let after_codes = assemble_objective(&ax, sqrt_y, &state.x, &dz_new, &z_new, mu, rho);

        let x_new = signals_step(&op, sqrt_y, &state.x, &ax, &dz_new, f, mu);
        let ax_new = op.forward(&x_new)?;
        let after_signals = assemble_objective(&ax_new, sqrt_y, &x_new, &dz_new, &z_new, mu, rho);

        let (d_new, fell_back) = dictionary_step(&x_new, &state.d, &z_new, &dz_new, config.atom_schedule);
        let dz_next = d_new.dot(&z_new);
        let after_dictionary = assemble_objective(&ax_new, sqrt_y, &x_new, &dz_next, &z_new, mu, rho);

        state.x = x_new;
        state.z = z_new;
        state.d = d_new;
        state.jacobi_fallbacks += usize::from(fell_back);
        ax = ax_new;
        dz = dz_next;
        state.block_trace.push(BlockObjectives {
            after_codes,
            after_signals,
            after_dictionary,
        });
        state.objective_trace.push(after_dictionary);

        let decrease = f_prev - after_dictionary;
        f_prev = after_dictionary;
        if after_dictionary == 0.0
            || (config.tol > 0.0 && decrease <= config.tol * after_dictionary.abs().max(f64::MIN_POSITIVE))
        {
            break;
        }
    }
    Ok(state)
}

/// Origin tag for reports.
pub fn bound_origin(rule: CodeBoundRule) -> BoundOrigin {
    match rule {
        CodeBoundRule::AtomCount => BoundOrigin::AtomCountBound,
        CodeBoundRule::PowerIteration => BoundOrigin::PowerIteration,
    }
}
