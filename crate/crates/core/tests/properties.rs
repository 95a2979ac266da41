use ndarray::Array2;
use proptest::prelude::*;

use primephase::ambiguity::{circular_shift, conjugate_inversion, nse, AmbiguityClass};
use primephase::cprime::{objective, squarem_step, CprimeConfig};
use primephase::harness::trial_seed;
use primephase::imaging::{psnr, ssim, GrayImage, TileLayout};
use primephase::linalg::{complex_normal_matrix, complex_normal_vector, hash64, rng_from_seed};
use primephase::measurements::{synthesize, GroundTruth, MeasurementEnsemble, NoiseModel, NonzeroDistribution};
use primephase::scprime::{initialize, sqrt_intensities, AtomSchedule, PatchOperator};
use primephase::scprime::{objective as sc_objective, update_codes, update_dictionary, update_signals, ScprimeConfig};
use primephase::Complex64;

fn image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = rng_from_seed(seed);
    GrayImage::new(Array2::from_shape_fn((h, w), |_| rand::Rng::random::<f64>(&mut rng))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nse_ignores_trivial_ambiguities(seed in any::<u64>(), n in 2usize..40, shift in 0usize..40, phase in 0.0..std::f64::consts::TAU, inv in any::<bool>()) {
        let x = complex_normal_vector(&mut rng_from_seed(seed), n, 1.0);
        let base = if inv { conjugate_inversion(x.view()) } else { x.clone() };
        let moved = circular_shift(base.view(), shift % n).mapv(|v| v * Complex64::from_polar(1.0, phase));
        prop_assert!(nse(moved.view(), x.view(), AmbiguityClass::FOURIER).unwrap() <= 1e-12);
    }

    #[test]
    fn nse_of_zero_guess_is_one_and_others_are_bounded(seed in any::<u64>(), n in 1usize..30) {
        let x = complex_normal_vector(&mut rng_from_seed(seed), n, 1.0);
        let y = complex_normal_vector(&mut rng_from_seed(seed ^ 1), n, 1.0);
        let zero = x.mapv(|_| Complex64::new(0.0, 0.0));
        prop_assert!((nse(zero.view(), x.view(), AmbiguityClass::FOURIER).unwrap() - 1.0).abs() < 1e-12);
        // the zero-phase candidate alone already achieves at most 1 + ‖y‖²/‖x‖²
        let e = nse(y.view(), x.view(), AmbiguityClass::FOURIER).unwrap();
        let ratio = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        prop_assert!(e >= 0.0 && e <= 1.0 + ratio + 1e-12);
    }

    #[test]
    fn squarem_step_never_increases(seed in any::<u64>(), m in 4usize..=16, k in 1usize..4, rho_f in 0.0..0.3f64) {
        let ens = MeasurementEnsemble::partial_dft(16, m, seed).unwrap();
        let truth = GroundTruth::sparse(16, k, hash64(seed, 1), NonzeroDistribution::ComplexGaussian).unwrap();
        let samples = synthesize(&ens, truth.x_true.view(), NoiseModel::None, 0).unwrap();
        let mut cfg = CprimeConfig::with_defaults(&ens, samples.sqrt_y.view(), seed).unwrap();
        cfg.rho *= rho_f / 0.1;
        let x = complex_normal_vector(&mut rng_from_seed(hash64(seed, 2)), 16, 1.0);
        let f0 = objective(&ens, samples.sqrt_y.view(), x.view(), cfg.rho).unwrap();
        let step = squarem_step(&ens, samples.sqrt_y.view(), x.view(), &cfg).unwrap();
        prop_assert!(step.objective_next <= f0 + 1e-9 * (1.0 + f0));
        prop_assert!(step.objective_x3 <= step.objective_x2);
    }

    #[test]
    fn each_block_update_descends(seed in any::<u64>(), atoms in 1usize..6, mu in 0.1..20.0f64) {
        let ens = MeasurementEnsemble::complex_gaussian(8, 4, seed).unwrap();
        let x = complex_normal_matrix(&mut rng_from_seed(hash64(seed, 1)), 8, 8, 1.0);
        let y = ens.forward_matrix(x.view()).unwrap().mapv(|c| c.norm_sqr());
        let (sqrt_y, _) = sqrt_intensities(y.view());
        let mut cfg = ScprimeConfig::with_defaults(&ens, atoms, hash64(seed, 2));
        cfg.mu = mu;
        let mut st = initialize(PatchOperator::direct(&ens), sqrt_y.view(), &cfg).unwrap();
        let f = |s: &_| sc_objective(&ens, sqrt_y.view(), s, mu).unwrap();
        let tol = |v: f64| 1e-9 * (1.0 + v);
        let f0 = f(&st);
        st.z = update_codes(&st, &cfg).unwrap();
        let f1 = f(&st);
        prop_assert!(f1 <= f0 + tol(f0));
        st.x = update_signals(&st, &ens, sqrt_y.view(), &cfg).unwrap();
        let f2 = f(&st);
        prop_assert!(f2 <= f1 + tol(f1));
        st.d = update_dictionary(&st, AtomSchedule::Jacobi);
        let f3 = f(&st);
        prop_assert!(f3 <= f2 + tol(f2));
        for col in st.d.columns() {
            prop_assert!(col.iter().map(|v| v.norm_sqr()).sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tile_layout_round_trips(pw in 1usize..5, ph in 1usize..5, across in 1usize..5, down in 1usize..5, seed in any::<u64>()) {
        let layout = TileLayout::new(pw * across, ph * down, pw, ph).unwrap();
        let img = complex_normal_matrix(&mut rng_from_seed(seed), ph * down, pw * across, 1.0);
        let patches = layout.to_patches(img.view()).unwrap();
        prop_assert_eq!(patches.dim(), (pw * ph, across * down));
        prop_assert_eq!(layout.to_image(patches.view()).unwrap(), img);
    }

    #[test]
    fn quality_metrics_are_symmetric_and_bounded(w in 8usize..24, h in 8usize..24, seed in any::<u64>()) {
        let a = image(w, h, seed);
        let b = image(w, h, seed ^ 7);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let s = ssim(&a, &b).unwrap();
        prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trial_seeds_are_distinct(master in any::<u64>(), a in 0usize..10_000, b in 0usize..10_000) {
        prop_assume!(a != b);
        prop_assert_ne!(trial_seed(master, a), trial_seed(master, b));
    }
}
