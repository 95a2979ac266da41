//! Trivial ambiguities of Fourier-magnitude data and the normalized
//! squared error taken over them.
//!
//! Global phase, circular shift and conjugate inversion all preserve
//! `|DFT(x)|`, so a recovered signal is compared against the reference
//! after the best combination of the three.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::linalg::{inner, norm_sqr};
use crate::{CVector, Complex64, Error, Result};

/// Recovery counts as successful when the NSE is strictly below this.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityClass {
    pub allow_phase: bool,
    pub allow_circular_shift: bool,
    pub allow_conjugate_inversion: bool,
}

impl AmbiguityClass {
    /// Everything that preserves DFT magnitudes.
    pub const FOURIER: Self = Self {
        allow_phase: true,
        allow_circular_shift: true,
        allow_conjugate_inversion: true,
    };

    /// Global phase only, for generic (e.g. Gaussian) ensembles.
    pub const PHASE_ONLY: Self = Self {
        allow_phase: true,
        allow_circular_shift: false,
        allow_conjugate_inversion: false,
    };
}

/// The minimizing member of the ambiguity set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub nse: f64,
    pub shift: usize,
    pub inverted: bool,
    pub phase: f64,
}

/// `[x]_i → conj([x]_{(N−i) mod N})`.
pub fn conjugate_inversion(x: ArrayView1<Complex64>) -> CVector {
    let n = x.len();
    CVector::from_shape_fn(n, |i| x[(n - i) % n].conj())
}

/// `[x]_i → [x]_{(i+shift) mod N}`.
pub fn circular_shift(x: ArrayView1<Complex64>, shift: usize) -> CVector {
    let n = x.len();
    CVector::from_shape_fn(n, |i| x[(i + shift) % n])
}

/// Applies a recorded alignment to `x`.
pub fn apply_alignment(x: ArrayView1<Complex64>, a: &Alignment) -> CVector {
    let base = if a.inverted {
        conjugate_inversion(x)
    } else {
        x.to_owned()
    };
    let rot = Complex64::from_polar(1.0, a.phase);
    circular_shift(base.view(), a.shift).mapv(|c| c * rot)
}

/// Best alignment of `x_star` to `x_true` within `cls`.
///
/// Enumerates every shift and inversion allowed (up to `2N` candidates);
/// the optimal phase of each candidate `c` is `arg(cᴴ x_true)` in closed
/// form.
pub fn best_alignment(
    x_star: ArrayView1<Complex64>,
    x_true: ArrayView1<Complex64>,
    cls: AmbiguityClass,
) -> Result<Alignment> {
    if x_star.len() != x_true.len() {
        return Err(Error::dims("nse", x_true.len(), x_star.len()));
    }
    if !cls.allow_phase {
        return Err(Error::InvalidArgument(
            "phase retrieval comparisons must allow a global phase".into(),
        ));
    }
    let ref_energy = norm_sqr(x_true);
    if !(ref_energy > 0.0) {
        return Err(Error::UndefinedReference);
    }
    let n = x_true.len();
    let shifts = if cls.allow_circular_shift { n } else { 1 };
    let inversions: &[bool] = if cls.allow_conjugate_inversion {
        &[false, true]
    } else {
        &[false]
    };

    let mut best: Option<Alignment> = None;
    for &inverted in inversions {
        let base = if inverted {
            conjugate_inversion(x_star)
        } else {
            x_star.to_owned()
        };
        for shift in 0..shifts {
            let cand = circular_shift(base.view(), shift);
            let phase = inner(cand.view(), x_true).arg();
            let rot = Complex64::from_polar(1.0, phase);
            let err: f64 = cand
                .iter()
                .zip(x_true.iter())
                .map(|(c, t)| (c * rot - t).norm_sqr())
                .sum();
            let nse = err / ref_energy;
            // strict comparison keeps the first minimizer, so ties are
            // resolved by enumeration order
            if best.is_none_or(|b| nse < b.nse) {
                best = Some(Alignment {
                    nse,
                    shift,
                    inverted,
                    phase,
                });
            }
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// `min over S(x★) of ‖x − x_true‖² / ‖x_true‖²`.
pub fn nse(x_star: ArrayView1<Complex64>, x_true: ArrayView1<Complex64>, cls: AmbiguityClass) -> Result<f64> {
    best_alignment(x_star, x_true, cls).map(|a| a.nse)
}

pub fn is_success(nse_value: f64) -> bool {
    nse_value < SUCCESS_THRESHOLD
}
