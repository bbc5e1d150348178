//! Dense solves with the regularized overlap matrix.
//!
//! `Omega + eps I` is Hermitian positive definite for `eps > 0`, so the
//! Cholesky factor is tried first. If a pivot is not positive (for instance
//! with `eps = 0` on a rank-deficient basis) the system is handed to a
//! partially pivoted LU factorization instead.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Outcome of a failed factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    /// Ratio of largest to smallest pivot magnitude.
    pub condition: f64,
}

/// `sum_i a_i conj(b_i)` with split real and imaginary accumulators.
#[inline]
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            re[i] += x[i].re * y[i].re + x[i].im * y[i].im;
            im[i] += x[i].im * y[i].re - x[i].re * y[i].im;
        }
    }
    let mut tail = Complex64::new(0.0, 0.0);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y.conj();
    }
    Complex64::new(re[0] + re[1] + re[2] + re[3], im[0] + im[1] + im[2] + im[3]) + tail
}

/// Row-major square matrix buffer that is factored in place.
#[derive(Debug, Clone)]
pub(crate) struct HermitianSystem {
    m: usize,
    data: Vec<Complex64>,
}

impl HermitianSystem {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            data: alloc::vec![ZERO; m * m],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn resize(&mut self, m: usize) {
        self.m = m;
        self.data.clear();
        self.data.resize(m * m, ZERO);
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.m + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.m..(r + 1) * self.m]
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for k in 0..self.m {
            self.data[k * self.m + k] += shift;
        }
    }

    /// Solves `A x = b`, overwriting `b` with `x`. The matrix is destroyed.
    pub fn solve_in_place(&mut self, b: &mut [Complex64]) -> Result<(), Singular> {
        let snapshot = self.data.clone();
        if self.cholesky().is_ok() {
            self.cholesky_solve(b);
            if b.iter().all(|v| v.is_finite()) {
                return Ok(());
            }
        }
        self.data = snapshot;
        self.lu_solve(b)
    }

    /// In-place lower Cholesky factor `A = L L^H`, reading only the lower
    /// triangle of `A`.
    fn cholesky(&mut self) -> Result<(), Singular> {
        let m = self.m;
        for j in 0..m {
            let row_j = &mut self.data[j * m..(j + 1) * m];
            let diag = row_j[j].re - dot_conj(&row_j[..j], &row_j[..j]).re;
            if diag.is_nan() || diag <= 0.0 || diag.is_infinite() {
                return Err(Singular {
                    condition: f64::INFINITY,
                });
            }
            let ljj = diag.sqrt();
            row_j[j] = Complex64::new(ljj, 0.0);

            let inv = 1.0 / ljj;
            for i in (j + 1)..m {
                let (upper, lower) = self.data.split_at_mut(i * m);
                let row_j = &upper[j * m..j * m + j];
                let row_i = &mut lower[..m];
                row_i[j] = (row_i[j] - dot_conj(&row_i[..j], row_j)) * inv;
            }
        }
        Ok(())
    }

    fn cholesky_solve(&self, b: &mut [Complex64]) {
        let m = self.m;
        // L y = b
        for i in 0..m {
            let row = &self.data[i * m..i * m + i];
            let mut acc = b[i];
            for (l, y) in row.iter().zip(&b[..i]) {
                acc -= l * y;
            }
            b[i] = acc / self.data[i * m + i].re;
        }
        // L^H x = y
        for i in (0..m).rev() {
            let mut acc = b[i];
            for (k, y) in b.iter().enumerate().skip(i + 1) {
                acc -= self.data[k * m + i].conj() * y;
            }
            b[i] = acc / self.data[i * m + i].re;
        }
    }

    fn lu_solve(&mut self, b: &mut [Complex64]) -> Result<(), Singular> {
        let m = self.m;
        let a = DMatrix::from_row_slice(m, m, &self.data);
        let lu = a.lu();
        let mut rhs = DVector::from_column_slice(b);
        if lu.solve_mut(&mut rhs) && rhs.iter().all(|v| v.is_finite()) {
            b.copy_from_slice(rhs.as_slice());
            return Ok(());
        }
        let (lo, hi) = lu
            .u()
            .diagonal()
            .iter()
            .map(|p| p.norm())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
        Err(Singular {
            condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        })
    }
}
