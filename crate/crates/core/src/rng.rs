//! Seeded randomness. Every phase of a run draws from its own ChaCha stream,
//! selected by hashing the phase name, so adding draws to one phase never
//! shifts the numbers another phase sees.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn phase_rng(seed: u64, phase: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(phase.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Complex Gaussian with unit variance (each part has variance 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn unit_modulus<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(1.0, angle)
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn complex_symmetric_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let m = complex_normal_matrix(rng, n, n);
    (&m + m.transpose()).scale(0.5)
}
