//! Shared MM building blocks: the complex soft-threshold and the constants
//! that make the quadratic majorizer `C‖x‖²` dominate `xᴴLx`.

use ndarray::{ArrayView1, ArrayViewMut1, Zip};
use serde::{Deserialize, Serialize};

use crate::linalg::{complex_normal_vector, inner, norm_sqr, power_iteration, rng_from_seed};
use crate::measurements::{EnsembleKind, MeasurementEnsemble};
use crate::{CVector, Complex64, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundOrigin {
    PowerIteration,
    UnitarityExact,
    AtomCountBound,
}

/// A constant `bound ≥ λmax(L)` for the Gram matrix `L` being majorized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizerParams {
    pub bound: f64,
    pub origin: BoundOrigin,
}

impl MajorizerParams {
    pub fn new(bound: f64, origin: BoundOrigin) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "majorizer bound must be positive, got {bound}"
            )));
        }
        Ok(Self { bound, origin })
    }

    /// The spectral bound carried by a measurement ensemble.
    pub fn for_ensemble(ensemble: &MeasurementEnsemble) -> Self {
        let origin = match ensemble.kind() {
            EnsembleKind::PartialDft => BoundOrigin::UnitarityExact,
            _ => BoundOrigin::PowerIteration,
        };
        // an all-zero operator still needs a positive constant
        Self {
            bound: ensemble.spectral_bound().max(f64::MIN_POSITIVE),
            origin,
        }
    }
}

#[inline]
pub(crate) fn shrink_one(c: Complex64, shrink: f64) -> Complex64 {
    let mag = c.norm();
    if mag <= shrink {
        Complex64::new(0.0, 0.0)
    } else {
        // e^{j arg c}(|c| − τ); mag > 0 here so arg(0) never matters
        c * ((mag - shrink) / mag)
    }
}

/// `outᵢ = e^{j arg cᵢ} · max(|cᵢ| − shrink, 0)`, the minimizer of
/// `‖x − c‖² + 2·shrink·‖x‖₁`.
pub fn soft_threshold(c: ArrayView1<Complex64>, shrink: f64) -> CVector {
    debug_assert!(shrink >= 0.0);
    c.mapv(|v| shrink_one(v, shrink))
}

pub fn soft_threshold_inplace(c: ArrayViewMut1<Complex64>, shrink: f64) {
    debug_assert!(shrink >= 0.0);
    Zip::from(c).for_each(|v| *v = shrink_one(*v, shrink));
}

/// Element-wise soft-threshold of any array shape.
pub fn soft_threshold_all<D: ndarray::Dimension>(c: &mut ndarray::Array<Complex64, D>, shrink: f64) {
    debug_assert!(shrink >= 0.0);
    c.mapv_inplace(|v| shrink_one(v, shrink));
}

/// Checks `bound·‖x‖² ≥ xᴴLx` on `probes` seeded random vectors, where
/// `gram_apply(x)` returns `Lx`.
pub fn quadratic_majorizer_check<F>(gram_apply: F, dim: usize, bound: f64, probes: usize, seed: u64) -> bool
where
    F: Fn(&CVector) -> CVector,
{
    let mut rng = rng_from_seed(seed);
    (0..probes).all(|_| {
        let x = complex_normal_vector(&mut rng, dim, 1.0);
        let quad = inner(x.view(), gram_apply(&x).view()).re;
        let lhs = bound * norm_sqr(x.view());
        lhs >= quad - 1e-12 * lhs.abs().max(1.0)
    })
}

/// `E = L`: with every atom in the unit ball, `λmax(DᴴD) ≤ Σ‖d_l‖² ≤ L`.
pub fn dictionary_bound(dict_cols: usize) -> Result<MajorizerParams> {
    if dict_cols == 0 {
        return Err(Error::InvalidArgument("dictionary needs at least one atom".into()));
    }
    MajorizerParams::new(dict_cols as f64, BoundOrigin::AtomCountBound)
}

/// Power-iteration estimate inflated by `inflation`. When a guaranteed
/// bound `cap` is known and smaller, the cap is returned instead.
pub fn power_iteration_bound<F>(
    gram_apply: F,
    dim: usize,
    iters: usize,
    inflation: f64,
    cap: Option<MajorizerParams>,
    seed: u64,
) -> MajorizerParams
where
    F: Fn(&CVector) -> CVector,
{
    let est = inflation * power_iteration(gram_apply, dim, iters, seed);
    match cap {
        Some(c) if c.bound <= est => c,
        _ => MajorizerParams {
            bound: est.max(f64::MIN_POSITIVE),
            origin: BoundOrigin::PowerIteration,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint, complex_normal_matrix};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_input_stays_zero() {
        let out = soft_threshold(CVector::zeros(5).view(), 0.3);
        assert!(out.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn three_four_five() {
        let out = soft_threshold(CVector::from(vec![c(3.0, 4.0)]).view(), 1.0);
        assert!((out[0] - c(2.4, 3.2)).norm() < 1e-15);
    }

    #[test]
    fn below_threshold_is_zeroed() {
        let out = soft_threshold(CVector::from(vec![c(0.3, 0.4)]).view(), 1.0);
        assert_eq!(out[0], c(0.0, 0.0));
    }

    #[test]
    fn identity_gram_with_unit_bound() {
        assert!(quadratic_majorizer_check(|x| x.clone(), 6, 1.0, 20, 1));
        assert!(!quadratic_majorizer_check(|x| x.mapv(|v| v * 2.0), 6, 1.0, 20, 1));
    }

    #[test]
    fn partial_dft_gram_is_dominated_by_identity() {
        let ens = MeasurementEnsemble::partial_dft(32, 12, 4).unwrap();
        let ok = quadratic_majorizer_check(|x| ens.apply_adjoint(ens.apply(x.view()).view()), 32, 1.0, 50, 2);
        assert!(ok);
    }

    #[test]
    fn unit_atom_gram_is_dominated_by_atom_count() {
        let mut rng = rng_from_seed(5);
        let mut d = complex_normal_matrix(&mut rng, 8, 12, 1.0);
        for mut col in d.columns_mut() {
            let n = norm_sqr(col.view()).sqrt();
            col.mapv_inplace(|v| v / n);
        }
        let dh = adjoint(d.view());
        let bound = dictionary_bound(12).unwrap();
        assert!(quadratic_majorizer_check(|z| dh.dot(&d.dot(z)), 12, bound.bound, 50, 3));
    }

    #[test]
    fn single_atom_bound() {
        let b = dictionary_bound(1).unwrap();
        assert_eq!(b.bound, 1.0);
        assert_eq!(b.origin, BoundOrigin::AtomCountBound);
        assert!(dictionary_bound(0).is_err());
    }

    #[test]
    fn power_bound_respects_cap() {
        let b = power_iteration_bound(|x| x.mapv(|v| v * 5.0), 4, 30, 1.01, dictionary_bound(3).ok(), 0);
        assert_eq!(b.bound, 3.0);
        let b = power_iteration_bound(|x| x.mapv(|v| v * 2.0), 4, 30, 1.01, dictionary_bound(3).ok(), 0);
        assert!((b.bound - 2.02).abs() < 1e-12);
        assert_eq!(b.origin, BoundOrigin::PowerIteration);
    }

    proptest! {
        #[test]
        fn soft_threshold_is_nonexpansive(
            a in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 8),
            b in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 8),
            tau in 0.0..3.0f64,
        ) {
            let a = CVector::from_iter(a.into_iter().map(|(x, y)| c(x, y)));
            let b = CVector::from_iter(b.into_iter().map(|(x, y)| c(x, y)));
            let sa = soft_threshold(a.view(), tau);
            let sb = soft_threshold(b.view(), tau);
            let lhs = norm_sqr((&sa - &sb).view()).sqrt();
            let rhs = norm_sqr((&a - &b).view()).sqrt();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
