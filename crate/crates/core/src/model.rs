//! Quartic double-well model: plain and normal-ordered potentials, their
//! landmarks, and the holomorphic classical Hamiltonian that drives the
//! coherent-state centers.

use alloc::vec::Vec;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// A classical Hamiltonian written as a holomorphic function of two
/// independent complex arguments, `zc` (playing the role of `z*`) and `z`.
///
/// On the physical slice `zc = conj(z)` the value must be real.
pub trait ClassicalHamiltonian {
    /// Value `H(zc, z)`.
    fn value(&self, zc: Complex64, z: Complex64) -> Complex64;

    /// Partial derivatives `(dH/dzc, dH/dz)`.
    fn gradient(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64);

    /// Energy of the phase-space point labelled by `z`.
    fn energy(&self, z: Complex64) -> f64 {
        self.value(z.conj(), z).re
    }
}

impl<H: ClassicalHamiltonian + ?Sized> ClassicalHamiltonian for &H {
    fn value(&self, zc: Complex64, z: Complex64) -> Complex64 {
        (**self).value(zc, z)
    }

    fn gradient(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64) {
        (**self).gradient(zc, z)
    }
}

/// Parameters of the quartic double well.
///
/// The quadratic coefficient is fixed to `a = 1/2` (unit curvature at the
/// minima) and the quartic coefficient to `b = 1/(16 D)`, so the barrier
/// height equals `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellParams {
    d: f64,
    a: f64,
    b: f64,
}

impl WellParams {
    /// Builds the well for barrier height `d`.
    pub fn new(d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidBarrier(d));
        }
        Ok(Self {
            d,
            a: 0.5,
            b: 1.0 / (16.0 * d),
        })
    }

    /// Barrier height `D`.
    pub fn barrier(&self) -> f64 {
        self.d
    }

    /// Quadratic coefficient `a`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Quartic coefficient `b`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `V(q) = -(a/2) q^2 + (b/4) q^4 + D`.
    pub fn potential_plain(&self, q: f64) -> f64 {
        let q2 = q * q;
        -0.5 * self.a * q2 + 0.25 * self.b * q2 * q2 + self.d
    }

    /// Normal-ordered potential
    /// `V_ord(q) = D - (q^2 - 1/2)/4 + (q^4 + 3 q^2 + 3/4)/(64 D)`.
    pub fn potential_ordered(&self, q: f64) -> f64 {
        let q2 = q * q;
        self.d - 0.25 * (q2 - 0.5) + (q2 * q2 + 3.0 * q2 + 0.75) / (64.0 * self.d)
    }

    /// `dV_ord/dq`.
    pub fn potential_ordered_derivative(&self, q: f64) -> f64 {
        -0.5 * q + (4.0 * q * q * q + 6.0 * q) / (64.0 * self.d)
    }

    /// Normal-ordered classical Hamiltonian. The constant `E_B = D` is not
    /// included, so on the physical slice this equals `p^2/2 + V_ord(q) - D`.
    pub fn h_ord(&self, zc: Complex64, z: Complex64) -> Complex64 {
        let s = zc + z;
        let d = zc - z;
        let s2 = s * s;
        -(d * d - 1.0) * 0.25 - (s2 + 1.0) * 0.125 + (s2 * s2 + s2 * 6.0 + 3.0) / (256.0 * self.d)
    }

    /// `(dH_ord/dzc, dH_ord/dz)`.
    pub fn grad_h_ord(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64) {
        let s = zc + z;
        let d = zc - z;
        let quartic = (s * s * s * 4.0 + s * 12.0) / (256.0 * self.d);
        let common = quartic - s * 0.25;
        (common - d * 0.5, common + d * 0.5)
    }

    /// Plain classical Hamiltonian `p^2/2 + V(q)`.
    pub fn h_plain(&self, q: f64, p: f64) -> f64 {
        0.5 * p * p + self.potential_plain(q)
    }

    /// Closed-form landmarks of both potentials.
    pub fn landmarks(&self) -> Landmarks {
        let d = self.d;
        Landmarks {
            q_min_plain: (8.0 * d).sqrt(),
            q_min_ordered: (8.0 * d - 1.5).max(0.0).sqrt(),
            barrier_plain: d,
            v_ord_at_zero: d + 0.125 + 3.0 / (256.0 * d),
            v_ord_at_min: 0.5 - 6.0 / (256.0 * d),
            barrier_ordered: d - 0.375 + 9.0 / (256.0 * d),
            separatrix_energy_ordered: self
                .h_ord(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
                .re,
        }
    }

    /// Points `(q, p)` on the separatrix, sampled on `n` uniformly spaced
    /// positions between the outer turning points.
    ///
    /// Each position contributes the upper branch `p >= 0`; the lower branch is
    /// appended in reverse order so the output traces a closed curve. Turning
    /// points (`p = 0`) appear once.
    pub fn separatrix_points(&self, ordered: bool, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        let (q_max, energy) = if ordered {
            // H_ord(q, 0) = E_sep  <=>  q^2 (q^2 - 16D + 3) = 0
            (
                (16.0 * self.d - 3.0).max(0.0).sqrt(),
                self.landmarks().separatrix_energy_ordered,
            )
        } else {
            // V(q) = D  <=>  q^2 (q^2 - 16D) = 0
            ((16.0 * self.d).sqrt(), self.d)
        };
        let kinetic = |q: f64| {
            if ordered {
                energy - (self.potential_ordered(q) - self.d)
            } else {
                energy - self.potential_plain(q)
            }
        };

        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let q = -q_max + 2.0 * q_max * (i as f64) / ((n - 1) as f64);
            let t = kinetic(q);
            if t < -1e-12 * (1.0 + energy.abs()) {
                continue;
            }
            upper.push((q, (2.0 * t.max(0.0)).sqrt()));
        }
        let mut points = upper.clone();
        points.extend(
            upper
                .iter()
                .rev()
                .filter(|(_, p)| *p > 0.0)
                .map(|&(q, p)| (q, -p)),
        );
        points
    }
}

impl ClassicalHamiltonian for WellParams {
    fn value(&self, zc: Complex64, z: Complex64) -> Complex64 {
        self.h_ord(zc, z)
    }

    fn gradient(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64) {
        self.grad_h_ord(zc, z)
    }
}

/// Analytic landmarks of the plain and ordered double wells.
///
/// Minimum positions are the positive roots; the wells are mirror symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmarks {
    /// `sqrt(8 D)`.
    pub q_min_plain: f64,
    /// `sqrt(8 D - 3/2)`; zero when the ordered well has a single minimum.
    pub q_min_ordered: f64,
    /// `D`.
    pub barrier_plain: f64,
    /// `V_ord(0) = D + 1/8 + 3/(256 D)`.
    pub v_ord_at_zero: f64,
    /// `V_ord(q_min) = 1/2 - 6/(256 D)`.
    pub v_ord_at_min: f64,
    /// `D - 3/8 + 9/(256 D)`.
    pub barrier_ordered: f64,
    /// `H_ord` at the hyperbolic point `q = p = 0`.
    pub separatrix_energy_ordered: f64,
}

/// Unit-frequency harmonic oscillator in normal order, `H = zc z`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Harmonic;

impl ClassicalHamiltonian for Harmonic {
    fn value(&self, zc: Complex64, z: Complex64) -> Complex64 {
        zc * z
    }

    fn gradient(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64) {
        (z, zc)
    }
}

/// A Hamiltonian shifted by a real constant. The shift only contributes a
/// global phase to the quantum evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shifted<H> {
    /// Underlying Hamiltonian.
    pub inner: H,
    /// Additive constant.
    pub shift: f64,
}

impl<H: ClassicalHamiltonian> ClassicalHamiltonian for Shifted<H> {
    fn value(&self, zc: Complex64, z: Complex64) -> Complex64 {
        self.inner.value(zc, z) + self.shift
    }

    fn gradient(&self, zc: Complex64, z: Complex64) -> (Complex64, Complex64) {
        self.inner.gradient(zc, z)
    }
}
