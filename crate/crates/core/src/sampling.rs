//! Seeded random generators for quaternionic objects. Every suite in
//! this crate draws from a `ChaCha8Rng` so runs are reproducible from a
//! single u64 seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hha::{moore_det, HyperhermitianMatrix, QMatrix};
use crate::quaternion::Quaternion;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

pub fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = random_quaternion(rng);
        let n = q.norm();
        if n > 1e-3 {
            return q.scale(1.0 / n);
        }
    }
}

pub fn random_qmatrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> QMatrix {
    QMatrix::from_fn(rows, cols, |_, _| random_quaternion(rng))
}

/// Random hyperhermitian matrix with entries of order one; indefinite
/// in general.
pub fn random_hyperhermitian(n: usize, rng: &mut ChaCha8Rng) -> HyperhermitianMatrix {
    let mut entries = vec![Quaternion::ZERO; n * n];
    for j in 0..n {
        entries[j * n + j] = Quaternion::from_real(rng.gen_range(-1.0..1.0));
        for k in (j + 1)..n {
            let q = random_quaternion(rng);
            entries[j * n + k] = q;
            entries[k * n + j] = q.conj();
        }
    }
    HyperhermitianMatrix::new(n, entries).expect("constructed hyperhermitian")
}

/// Gram matrix B* B: hyperhermitian and positive semidefinite.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> HyperhermitianMatrix {
    let b = random_qmatrix(n, n, rng);
    HyperhermitianMatrix::from_qmatrix(&b.adjoint().mul(&b)).expect("Gram matrix")
}

/// B* B + c Id with c in [0.2, 1.2]: uniformly positive definite.
pub fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> HyperhermitianMatrix {
    let shift = rng.gen_range(0.2..1.2);
    let base = random_psd(n, rng);
    base.add(&HyperhermitianMatrix::diagonal(&vec![shift; n]))
}

/// Positive definite with Moore determinant exactly one (up to
/// rounding): a PD draw rescaled by det^{-1/n}.
pub fn random_det_one(n: usize, rng: &mut ChaCha8Rng) -> HyperhermitianMatrix {
    let x = random_pd(n, rng);
    let d = moore_det(&x).expect("determinant of PD draw");
    x.scale(d.powf(-1.0 / n as f64))
}

/// Uniform point of the axis-aligned box given by per-coordinate
/// bounds.
pub fn random_point_in_box(lo: &[f64], hi: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..b) })
        .collect()
}
