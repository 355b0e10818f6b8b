#![allow(dead_code)]

use atris_core::linalg::CMatrix;
use atris_core::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn int(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.0.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0))
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.complex())
    }

    pub fn phase(&mut self) -> Complex64 {
        Complex64::cis(self.range(-std::f64::consts::PI, std::f64::consts::PI))
    }
}

/// `a^H b` computed entry by entry.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Plain triple loop, independent of `CMatrix::mul`.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.cols(), b.rows());
    CMatrix::from_fn(a.rows(), b.cols(), |r, c| {
        (0..a.cols()).map(|i| a[(r, i)] * b[(i, c)]).sum()
    })
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn unitarity_error(m: &CMatrix) -> f64 {
    let n = m.cols();
    let gram = matmul(&m.adjoint(), m);
    max_abs_diff(&gram, &CMatrix::identity(n))
}
