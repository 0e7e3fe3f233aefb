//! Deterministic sampling.
//!
//! Every sampler takes an explicit `u64` seed and owns its generator, so two
//! calls with the same arguments produce bitwise-identical results no matter
//! what else ran in between. Independent sub-tasks (optimizer restarts,
//! sweep cells) draw from distinct ChaCha streams of the same seed rather
//! than sharing a sequential generator, which keeps results independent of
//! scheduling and thread count.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mat::{Complex64, ComplexMatrix};

/// A seeded generator on stream `stream` of seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian: independent N(0, 1/2) real and imaginary
/// parts, so `E|z|^2 = 1`.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with iid standard complex Gaussian entries (a Ginibre sample).
pub fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(complex_gaussian(rng));
    }
    ComplexMatrix::from_vec(rows, cols, data).expect("gaussian entries are finite")
}

/// Random PSD matrix `G G*` with `G` of shape `n x rank`, normalized to unit
/// trace when `unit_trace` is set.
pub fn random_psd(n: usize, rank: usize, unit_trace: bool, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ginibre(n, rank, rng);
    let mut p = &g * &g.adjoint();
    if unit_trace {
        let tr = p.trace().re;
        p = p.scale(Complex64::new(1.0 / tr, 0.0));
    }
    // Symmetrize away the last few ulps so downstream Hermitian dispatch
    // never wobbles.
    p.hermitize()
}

/// Haar-distributed unitary via QR of a Ginibre sample, with the standard
/// phase fix that makes the diagonal of R positive.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    let qr = g.to_na().qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)]);
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] *= phase.conj();
        }
    }
    u
}

/// Normalized Gaussian vector: a Haar-random pure state, returned as an
/// `n x 1` matrix.
pub fn random_pure_state(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = stream_rng(seed, 0x9e37);
    random_pure_state_with(n, &mut rng)
}

pub fn random_pure_state_with(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    loop {
        let v = ginibre(n, 1, rng);
        let norm = v.frobenius_norm();
        if norm > 1e-6 {
            return v.scale(Complex64::new(1.0 / norm, 0.0));
        }
    }
}

/// Random density matrix of the given rank (Hilbert-Schmidt-style `G G*`
/// normalized to unit trace).
pub fn random_state(n: usize, rank: usize, seed: u64) -> ComplexMatrix {
    let mut rng = stream_rng(seed, 0x51a7e);
    random_psd(n, rank.max(1), true, &mut rng)
}
