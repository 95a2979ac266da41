//! Small complex linear-algebra and seeding helpers shared by the solvers.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, CVector, Complex64};

/// Deterministic generator used for every seeded draw in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed and a stream index into an independent child seed.
///
/// `hash64(a, b) = splitmix64(splitmix64(a) ^ splitmix64(b ^ 0xA5A5_A5A5_A5A5_A5A5))`.
/// The map is a bijection in each argument for the other fixed, so distinct
/// trial indices never collide under one master seed.
pub fn hash64(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(index ^ 0xA5A5_A5A5_A5A5_A5A5))
}

/// Circularly-symmetric complex normal sample with `E|z|² = variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> CVector {
    CVector::from_shape_simple_fn(n, || complex_normal(rng, variance))
}

/// Row-major fill, so the draw order is fixed by the shape alone.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMatrix {
    let mut out = CMatrix::zeros((rows, cols));
    for v in out.iter_mut() {
        *v = complex_normal(rng, variance);
    }
    out
}

pub fn norm_sqr(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn norm2(v: ArrayView1<Complex64>) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn l1_norm<'a, I: IntoIterator<Item = &'a Complex64>>(v: I) -> f64 {
    v.into_iter().map(|c| c.norm()).sum()
}

pub fn max_abs<'a, I: IntoIterator<Item = &'a Complex64>>(v: I) -> f64 {
    v.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn frobenius_sqr(m: ArrayView2<Complex64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum()
}

/// `xᴴ y`.
pub fn inner(x: ArrayView1<Complex64>, y: ArrayView1<Complex64>) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Conjugate transpose.
pub fn adjoint(m: ArrayView2<Complex64>) -> CMatrix {
    m.t().mapv(|c| c.conj())
}

/// `aᴴ b` without materializing `aᴴ` twice.
pub fn adjoint_dot(a: ArrayView2<Complex64>, b: ArrayView2<Complex64>) -> CMatrix {
    adjoint(a).dot(&b)
}

/// Rayleigh-quotient estimate of the largest eigenvalue of a Hermitian
/// positive semidefinite operator, by power iteration from a seeded start.
///
/// The estimate approaches λmax from below; callers that need an upper
/// bound inflate it.
pub fn power_iteration<F>(apply: F, dim: usize, iters: usize, seed: u64) -> f64
where
    F: Fn(&CVector) -> CVector,
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = rng_from_seed(seed);
    let mut v = complex_normal_vector(&mut rng, dim, 1.0);
    let n0 = norm2(v.view());
    v.mapv_inplace(|c| c / n0);
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let w = apply(&v);
        lambda = inner(v.view(), w.view()).re;
        let nw = norm2(w.view());
        if nw == 0.0 {
            return 0.0;
        }
        v = w.mapv(|c| c / nw);
    }
    // One last quotient at the converged direction.
    let w = apply(&v);
    lambda.max(inner(v.view(), w.view()).re)
}

/// Largest eigenvalue of `mᴴm` by power iteration on the smaller Gram side.
pub fn gram_lambda_max(m: ArrayView2<Complex64>, iters: usize, seed: u64) -> f64 {
    let (rows, cols) = m.dim();
    if rows < cols {
        // λmax(mᴴm) = λmax(mmᴴ)
        let mh = adjoint(m);
        power_iteration(|v| m.dot(&mh.dot(v)), rows, iters, seed)
    } else {
        let mh = adjoint(m);
        power_iteration(|v| mh.dot(&m.dot(v)), cols, iters, seed)
    }
}

pub fn to_nalgebra(m: ArrayView2<Complex64>) -> DMatrix<Complex64> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<Complex64>) -> CMatrix {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Moore-Penrose pseudoinverse via SVD, singular values below
/// `max(r, c) · σmax · ε` treated as zero.
pub fn pseudo_inverse(m: ArrayView2<Complex64>) -> CMatrix {
    let (r, c) = m.dim();
    if r == 0 || c == 0 {
        return CMatrix::zeros((c, r));
    }
    let svd = to_nalgebra(m).svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (r.max(c) as f64) * smax * f64::EPSILON;
    let pinv = svd
        .pseudo_inverse(eps.max(f64::MIN_POSITIVE))
        .expect("svd computed with both factors");
    from_nalgebra(&pinv)
}

/// Euclidean norms of every column.
pub fn column_norms(m: ArrayView2<Complex64>) -> Vec<f64> {
    m.axis_iter(Axis(1)).map(|c| norm2(c)).collect()
}
