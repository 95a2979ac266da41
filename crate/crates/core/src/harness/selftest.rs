//! Fast invariant checks behind the `selftest` subcommand.

use crate::ambiguity::{circular_shift, conjugate_inversion, nse, AmbiguityClass};
use crate::cprime::{solve_cprime, CprimeConfig, MONOTONE_SLACK};
use crate::linalg::{complex_normal_matrix, complex_normal_vector, gram_lambda_max, hash64, rng_from_seed};
use crate::measurements::{synthesize, GroundTruth, MeasurementEnsemble, NoiseModel, NonzeroDistribution};
use crate::prox::soft_threshold;
use crate::scprime::{solve_scprime, ScprimeConfig};
use crate::{Complex64, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Shrinkage against a brute-force scan over magnitudes at the input phase.
fn prox_matches_scan() -> Result<(bool, String)> {
    let mut rng = rng_from_seed(hash64(1, 0));
    let c = complex_normal_vector(&mut rng, 8, 1.0);
    let shrink = 0.4;
    let z = soft_threshold(c.view(), shrink);
    let mut worst: f64 = 0.0;
    for (ci, zi) in c.iter().zip(z.iter()) {
        let phase = Complex64::from_polar(1.0, ci.arg());
        let best = (0..=4000)
            .map(|s| s as f64 * 1e-3)
            .map(|r| (0.5 * (ci - phase * r).norm_sqr() + shrink * r, r))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        worst = worst.max((zi - phase * best.1).norm());
    }
    Ok((worst <= 2e-3, format!("max deviation {worst:.2e}")))
}

fn cprime_descends() -> Result<(bool, String)> {
    let mut ok = true;
    for s in 0..3 {
        let ens = MeasurementEnsemble::partial_dft(32, 16, hash64(2, s))?;
        let truth = GroundTruth::sparse(32, 3, hash64(3, s), NonzeroDistribution::ComplexGaussian)?;
        let samples = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0)?;
        let mut cfg = CprimeConfig::with_defaults(&ens, samples.sqrt_y.view(), hash64(4, s))?;
        cfg.max_iters = 200;
        let st = solve_cprime(&ens, &samples, &cfg)?;
        ok &= st.is_monotone(MONOTONE_SLACK) && st.worst_loop_exit_gap <= 0.0;
    }
    Ok((ok, "3 instances, 200 iterations".into()))
}

fn scprime_descends() -> Result<(bool, String)> {
    let mut ok = true;
    for s in 0..2 {
        let ens = MeasurementEnsemble::complex_gaussian(16, 8, hash64(5, s))?;
        let x = complex_normal_matrix(&mut rng_from_seed(hash64(6, s)), 16, 12, 1.0);
        let y = ens.forward_matrix(x.view())?.mapv(|c| c.norm_sqr());
        let mut cfg = ScprimeConfig::with_defaults(&ens, 4, hash64(7, s));
        cfg.max_iters = 20;
        let st = solve_scprime(&ens, y.view(), &cfg)?;
        ok &= st.is_block_monotone(MONOTONE_SLACK);
    }
    Ok((ok, "2 instances, 20 cycles".into()))
}

fn dictionary_bound_holds() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for l in [4usize, 16] {
        let mut d = complex_normal_matrix(&mut rng_from_seed(hash64(8, l as u64)), 16, l, 1.0);
        for mut col in d.columns_mut() {
            let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            col.mapv_inplace(|v| v / norm);
        }
        worst = worst.max(gram_lambda_max(d.view(), 100, 1) - l as f64);
    }
    Ok((worst <= 1e-9, format!("max λ − L = {worst:.3e}")))
}

fn trivial_ambiguities_vanish() -> Result<(bool, String)> {
    let x = complex_normal_vector(&mut rng_from_seed(hash64(9, 0)), 32, 1.0);
    let moved = circular_shift(conjugate_inversion(x.view()).view(), 5).mapv(|v| v * Complex64::from_polar(1.0, 1.3));
    let e = nse(moved.view(), x.view(), AmbiguityClass::FOURIER)?;
    Ok((e <= 1e-12, format!("nse {e:.1e}")))
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        check("soft threshold matches scan", prox_matches_scan()),
        check("c-prime objective non-increasing", cprime_descends()),
        check("sc-prime block objectives non-increasing", scprime_descends()),
        check("unit-ball dictionary spectral bound", dictionary_bound_holds()),
        check("trivial ambiguities give zero nse", trivial_ambiguities_vanish()),
    ]
}
