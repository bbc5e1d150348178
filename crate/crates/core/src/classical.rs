//! Uncoupled classical flow of the coherent-state centers,
//! `i dz/dt = dH/dzc (conj(z), z)`, integrated with fixed-step RK4.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::coherent::CsLabel;
use crate::error::{Error, Result};
use crate::model::ClassicalHamiltonian;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// `dz/dt = -i dH/dzc` at `(conj(z), z)`.
#[inline]
pub fn eom_rhs<H: ClassicalHamiltonian>(z: CsLabel, h: &H) -> Complex64 {
    MINUS_I * h.gradient(z.0.conj(), z.0).0
}

/// One classical RK4 step of a single label.
#[inline]
pub fn rk4_step<H: ClassicalHamiltonian>(z: CsLabel, h: &H, dt: f64) -> CsLabel {
    let z0 = z.0;
    let k1 = eom_rhs(z, h);
    let k2 = eom_rhs(CsLabel(z0 + k1 * (0.5 * dt)), h);
    let k3 = eom_rhs(CsLabel(z0 + k2 * (0.5 * dt)), h);
    let k4 = eom_rhs(CsLabel(z0 + k3 * dt), h);
    CsLabel(z0 + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTimeStep(dt))
    }
}

/// The current positions of a set of independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    /// Current centers.
    pub labels: Vec<CsLabel>,
    /// Current time.
    pub t: f64,
    /// Energies `H(conj(z), z)` at the initial time.
    pub energies: Vec<f64>,
}

impl TrajectorySet {
    /// Starts a set at `t = 0`, caching the initial energies.
    pub fn new<H: ClassicalHamiltonian>(labels: Vec<CsLabel>, h: &H) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyBasis);
        }
        let energies = labels.iter().map(|z| h.energy(z.0)).collect();
        Ok(Self {
            labels,
            t: 0.0,
            energies,
        })
    }

    /// Number of trajectories.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; a set holds at least one trajectory.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Energies at the current positions.
    pub fn current_energies<H: ClassicalHamiltonian>(&self, h: &H) -> Vec<f64> {
        self.labels.iter().map(|z| h.energy(z.0)).collect()
    }

    /// Largest `|H(t) - H(0)| / max(1, |H(0)|)` over the set.
    pub fn max_relative_drift<H: ClassicalHamiltonian>(&self, h: &H) -> f64 {
        self.labels
            .iter()
            .zip(&self.energies)
            .map(|(z, &e0)| (h.energy(z.0) - e0).abs() / e0.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// Advances every label by one RK4 step. Negative `dt` is rejected; use
    /// [`TrajectorySet::step_signed`] to integrate backwards.
    pub fn step<H: ClassicalHamiltonian>(&self, h: &H, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        Ok(self.step_signed(h, dt))
    }

    /// RK4 step with either sign of `dt`.
    pub fn step_signed<H: ClassicalHamiltonian>(&self, h: &H, dt: f64) -> Self {
        Self {
            labels: self.labels.iter().map(|&z| rk4_step(z, h, dt)).collect(),
            t: self.t + dt,
            energies: self.energies.clone(),
        }
    }

    /// Takes `n_steps` steps, returning the starting set followed by a
    /// snapshot every `stride` steps. The final set is always included.
    pub fn propagate<H: ClassicalHamiltonian>(
        &self,
        h: &H,
        dt: f64,
        n_steps: usize,
        stride: usize,
    ) -> Result<Vec<Self>> {
        check_dt(dt)?;
        let stride = stride.max(1);
        let t0 = self.t;
        let mut labels = self.labels.clone();
        let mut snapshots = Vec::with_capacity(n_steps / stride + 2);
        snapshots.push(self.clone());
        for i in 1..=n_steps {
            for z in labels.iter_mut() {
                *z = rk4_step(*z, h, dt);
            }
            if i % stride == 0 || i == n_steps {
                snapshots.push(Self {
                    labels: labels.clone(),
                    t: t0 + i as f64 * dt,
                    energies: self.energies.clone(),
                });
            }
        }
        Ok(snapshots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Harmonic, WellParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_point_has_zero_velocity() {
        let w = WellParams::new(1.0).unwrap();
        assert_eq!(eom_rhs(CsLabel::default(), &w), Complex64::new(0.0, 0.0));
        let set = TrajectorySet::new(alloc::vec![CsLabel::default()], &w).unwrap();
        let next = set.step(&w, 1e-3).unwrap();
        assert_eq!(next.labels[0], CsLabel::default());
        assert_eq!(next.t, 1e-3);
    }

    #[test]
    fn ordered_minimum_is_stationary() {
        let w = WellParams::new(1.0).unwrap();
        let z = CsLabel::from_qp(w.landmarks().q_min_ordered, 0.0);
        let v = eom_rhs(z, &w);
        // dq/dt = sqrt(2) Re v = p, dp/dt = sqrt(2) Im v = -V_ord'(q)
        assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn velocity_matches_hamilton_equations() {
        let w = WellParams::new(1.7).unwrap();
        let (q, p) = (1.3, -0.4);
        let v = eom_rhs(CsLabel::from_qp(q, p), &w);
        let s = core::f64::consts::SQRT_2;
        assert_abs_diff_eq!(s * v.re, p, epsilon = 1e-14);
        assert_abs_diff_eq!(
            s * v.im,
            -w.potential_ordered_derivative(q),
            epsilon = 1e-14
        );
    }

    #[test]
    fn harmonic_rotation() {
        let z0 = CsLabel(Complex64::new(1.2, 0.3));
        let set = TrajectorySet::new(alloc::vec![z0], &Harmonic).unwrap();
        let snaps = set.propagate(&Harmonic, 1e-3, 2000, 500).unwrap();
        assert_eq!(snaps.len(), 5);
        for s in &snaps {
            let exact = z0.0 * Complex64::new(0.0, -s.t).exp();
            assert_abs_diff_eq!((s.labels[0].0 - exact).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let set = TrajectorySet::new(alloc::vec![CsLabel::default()], &Harmonic).unwrap();
        assert_eq!(set.step(&Harmonic, 0.0), Err(Error::InvalidTimeStep(0.0)));
        assert!(set.propagate(&Harmonic, -1.0, 3, 1).is_err());
        assert_eq!(
            TrajectorySet::new(alloc::vec![], &Harmonic),
            Err(Error::EmptyBasis)
        );
    }

    #[test]
    fn separatrix_energy_drift_per_step() {
        let w = WellParams::new(1.0).unwrap();
        let labels: Vec<_> = w
            .separatrix_points(true, 41)
            .into_iter()
            .map(|(q, p)| CsLabel::from_qp(q, p))
            .collect();
        let set = TrajectorySet::new(labels, &w).unwrap();
        let next = set.step(&w, 1e-3).unwrap();
        for (z, e0) in next.labels.iter().zip(&set.current_energies(&w)) {
            assert!((w.energy(z.0) - e0).abs() <= 1e-10);
        }
    }

    #[test]
    fn mirrored_pair_stays_mirrored() {
        let w = WellParams::new(1.0).unwrap();
        let z = CsLabel::from_qp(2.1, 0.7);
        let set = TrajectorySet::new(alloc::vec![z, -z], &w).unwrap();
        let last = set.propagate(&w, 1e-3, 5000, 5000).unwrap().pop().unwrap();
        assert!((last.labels[0].0 + last.labels[1].0).norm() <= 1e-12);
    }

    #[test]
    fn time_reversal() {
        let w = WellParams::new(1.0).unwrap();
        let labels = alloc::vec![CsLabel::from_qp(3.0, 0.2), CsLabel::from_qp(0.5, 1.5)];
        let mut set = TrajectorySet::new(labels.clone(), &w).unwrap();
        for _ in 0..3000 {
            set = set.step_signed(&w, 1e-3);
        }
        for _ in 0..3000 {
            set = set.step_signed(&w, -1e-3);
        }
        for (a, b) in set.labels.iter().zip(&labels) {
            assert!((a.0 - b.0).norm() <= 1e-9);
        }
    }
}
