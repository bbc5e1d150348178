//! Coherent-state algebra: phase-space labels, the overlap kernel, Gram
//! matrices, CCS matrix elements and the position representation.

use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::model::ClassicalHamiltonian;

/// Complex center of a unit-width coherent state, `z = (q + i p) / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CsLabel(pub Complex64);

impl CsLabel {
    /// Label of the phase-space point `(q, p)`.
    pub fn from_qp(q: f64, p: f64) -> Self {
        Self(Complex64::new(q * FRAC_1_SQRT_2, p * FRAC_1_SQRT_2))
    }

    /// Phase-space point `(q, p)` of this label.
    pub fn qp(self) -> (f64, f64) {
        (SQRT_2 * self.0.re, SQRT_2 * self.0.im)
    }

    /// The complex center.
    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }
}

impl From<Complex64> for CsLabel {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

impl core::ops::Neg for CsLabel {
    type Output = Self;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `<z_k | z_l> = exp(-(|z_k|^2 + |z_l|^2)/2 + conj(z_k) z_l)`.
#[inline]
pub fn overlap(zk: CsLabel, zl: CsLabel) -> Complex64 {
    let (a, b) = (zk.0, zl.0);
    (-(a.norm_sqr() + b.norm_sqr()) * 0.5 + a.conj() * b).exp()
}

/// Hermitian, unit-diagonal matrix of pairwise overlaps.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<Complex64>);

impl GramMatrix {
    /// Borrow the dense matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    /// Take the dense matrix.
    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Basis size.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `Omega_kl`.
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.0[(k, l)]
    }
}

/// Gram matrix of a set of labels.
pub fn gram(labels: &[CsLabel]) -> GramMatrix {
    let m = labels.len();
    let mut omega = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    fill_gram(labels, &mut omega);
    GramMatrix(omega)
}

/// Writes the overlaps of `labels` into an `M x M` buffer. Only the upper
/// triangle is evaluated; the lower one is its conjugate.
pub(crate) fn fill_gram(labels: &[CsLabel], omega: &mut DMatrix<Complex64>) {
    for (l, &zl) in labels.iter().enumerate() {
        omega[(l, l)] = Complex64::new(1.0, 0.0);
        for (k, &zk) in labels.iter().enumerate().take(l) {
            let o = overlap(zk, zl);
            omega[(k, l)] = o;
            omega[(l, k)] = o.conj();
        }
    }
}

/// Per-trajectory derivative data entering the CCS matrix elements.
///
/// `d_zc` and `d_z` are `dH/dzc` and `dH/dz` on trajectory `l`, i.e. at
/// `(conj(z_l), z_l)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TrajectoryTerms {
    pub d_zc: Complex64,
    /// `1/2 (z_l dH/dz - dH/dzc conj(z_l))`.
    pub half_commutator: Complex64,
}

impl TrajectoryTerms {
    pub fn new(z: Complex64, d_zc: Complex64, d_z: Complex64) -> Self {
        Self {
            d_zc,
            half_commutator: (z * d_z - d_zc * z.conj()) * 0.5,
        }
    }

    pub fn from_hamiltonian<H: ClassicalHamiltonian>(z: Complex64, h: &H) -> Self {
        let (d_zc, d_z) = h.gradient(z.conj(), z);
        Self::new(z, d_zc, d_z)
    }

    /// The bracket of `H~_kl / Omega_kl`.
    #[inline]
    pub fn bracket<H: ClassicalHamiltonian>(
        &self,
        h: &H,
        zk: Complex64,
        zl: Complex64,
    ) -> Complex64 {
        let zkc = zk.conj();
        h.value(zkc, zl) - self.half_commutator - zkc * self.d_zc
    }
}

/// CCS matrix element
/// `H~_kl = <z_k|z_l> [ H(z_k*, z_l) - 1/2 (z_l dH/dz_l - dH/dz_l* z_l*) - z_k* dH/dz_l* ]`,
/// with both derivatives evaluated on trajectory `l`.
pub fn htilde<H: ClassicalHamiltonian>(zk: CsLabel, zl: CsLabel, h: &H) -> Complex64 {
    let terms = TrajectoryTerms::from_hamiltonian(zl.0, h);
    overlap(zk, zl) * terms.bracket(h, zk.0, zl.0)
}

/// Position representation
/// `<x|z> = pi^(-1/4) exp(-(x - q)^2/2 + i p (x - q/2))`.
pub fn position_amplitude(x: f64, z: CsLabel) -> Complex64 {
    let (q, p) = z.qp();
    let dx = x - q;
    Complex64::new(-0.5 * dx * dx, p * (x - 0.5 * q)).exp() * PI.powf(-0.25)
}

/// Wavefunction `sum_l a_l <x|z_l>` on a set of positions.
pub fn superposition(xs: &[f64], labels: &[CsLabel], coefficients: &[Complex64]) -> Vec<Complex64> {
    xs.iter()
        .map(|&x| {
            labels
                .iter()
                .zip(coefficients)
                .map(|(&z, &a)| a * position_amplitude(x, z))
                .sum()
        })
        .collect()
}
