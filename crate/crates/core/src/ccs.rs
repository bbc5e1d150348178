//! Coupled coherent states propagation.
//!
//! The wavefunction is `|Psi(t)> = sum_l a_l(t) |z_l(t)>`. Centers follow the
//! classical flow of [`crate::classical`]; the coefficients obey
//!
//! ```text
//! i sum_l <z_k|z_l> da_l/dt = sum_l H~_kl a_l
//! ```
//!
//! solved as `(Omega + eps I) da/dt = -i H~ a` by a Cholesky (or, failing that,
//! LU) factorization at every
//! Runge-Kutta stage. Labels and coefficients share one RK4 time grid.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::classical::{check_dt, eom_rhs};
use crate::coherent::{gram, overlap, CsLabel, GramMatrix, TrajectoryTerms};
use crate::error::{Error, Result};
use crate::linalg::HermitianSystem;
use crate::model::ClassicalHamiltonian;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default Tikhonov shift added to the overlap matrix before each solve.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;
/// Default time step.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default relative norm drift that aborts a propagation.
pub const DEFAULT_NORM_ABORT: f64 = 0.1;

/// Time, trajectory labels and expansion coefficients of a CCS wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct CcsState {
    /// Time.
    pub t: f64,
    /// Coherent-state centers.
    pub labels: Vec<CsLabel>,
    /// Expansion coefficients, one per label.
    pub coefficients: Vec<Complex64>,
}

impl CcsState {
    /// State at `t = 0` with only `occupied` populated, so that
    /// `|Psi(0)> = |z_occupied>`.
    pub fn initial(labels: Vec<CsLabel>, occupied: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if occupied >= labels.len() {
            return Err(Error::InvalidIndex {
                index: occupied,
                len: labels.len(),
            });
        }
        let mut coefficients = vec![ZERO; labels.len()];
        coefficients[occupied] = Complex64::new(1.0, 0.0);
        Ok(Self {
            t: 0.0,
            labels,
            coefficients,
        })
    }

    /// Builds a state from explicit parts.
    pub fn new(t: f64, labels: Vec<CsLabel>, coefficients: Vec<Complex64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if labels.len() != coefficients.len() {
            return Err(Error::LengthMismatch {
                labels: labels.len(),
                coefficients: coefficients.len(),
            });
        }
        Ok(Self {
            t,
            labels,
            coefficients,
        })
    }

    /// Basis size `M`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false for a valid state.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `conj(a)^T Omega a` including its (round-off) imaginary part.
    pub fn norm_complex(&self) -> Complex64 {
        let mut total = ZERO;
        for (l, (&zl, &al)) in self.labels.iter().zip(&self.coefficients).enumerate() {
            total += al.norm_sqr();
            for (&zk, &ak) in self.labels.iter().zip(&self.coefficients).take(l) {
                // k < l and its mirror l < k combine into twice the real part
                total += 2.0 * (ak.conj() * overlap(zk, zl) * al).re;
            }
        }
        total
    }

    /// Physical norm `<Psi|Psi>`.
    pub fn norm(&self) -> f64 {
        self.norm_complex().re
    }

    /// `<beta|Psi> = sum_l a_l <beta|z_l>`.
    pub fn cross_correlation(&self, beta: CsLabel) -> Complex64 {
        self.labels
            .iter()
            .zip(&self.coefficients)
            .map(|(&z, &a)| a * overlap(beta, z))
            .sum()
    }
}

/// Overlap matrix and CCS Hamiltonian matrix `H~` for a set of labels.
pub fn assemble<H: ClassicalHamiltonian>(
    labels: &[CsLabel],
    h: &H,
) -> (GramMatrix, DMatrix<Complex64>) {
    let omega = gram(labels);
    let terms: Vec<_> = labels
        .iter()
        .map(|z| TrajectoryTerms::from_hamiltonian(z.0, h))
        .collect();
    let m = labels.len();
    let ht = DMatrix::from_fn(m, m, |k, l| {
        omega.get(k, l) * terms[l].bracket(h, labels[k].0, labels[l].0)
    });
    (omega, ht)
}

/// `da/dt` for the current labels and coefficients, from
/// `(Omega + eps I) da/dt = -i H~ a`.
pub fn coeff_rhs<H: ClassicalHamiltonian>(
    state: &CcsState,
    h: &H,
    eps: f64,
) -> Result<Vec<Complex64>> {
    check_eps(eps)?;
    if state.labels.len() != state.coefficients.len() {
        return Err(Error::LengthMismatch {
            labels: state.labels.len(),
            coefficients: state.coefficients.len(),
        });
    }
    let mut ws = Workspace::new(state.len());
    let velocities: Vec<_> = state.labels.iter().map(|&z| eom_rhs(z, h)).collect();
    ws.coefficient_rate(
        h,
        &state.labels,
        &velocities,
        &state.coefficients,
        None,
        eps,
        false,
        state.t,
    )?;
    let e_ref = ws.reference;
    for (rate, a) in ws.rate.iter_mut().zip(&state.coefficients) {
        *rate -= I * e_ref * a;
    }
    Ok(ws.rate)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRegularization(eps))
    }
}

/// Scratch buffers reused across stages.
///
/// The solve works relative to a reference energy `E_ref`, by default the
/// Rayleigh quotient `Re(a^H H~ a) / (a^H Omega a)`:
/// `(Omega + eps I) db/dt = -i (H~ - E_ref Omega) b` for
/// `b = exp(i E_ref t) a`. For `eps = 0` this is the same equation; for
/// `eps > 0` it keeps the shift from acting on the absolute energy scale, so
/// adding a constant to `H` only changes the phase.
struct Workspace {
    system: HermitianSystem,
    rate: Vec<Complex64>,
    omega_a: Vec<Complex64>,
    terms: Vec<TrajectoryTerms>,
    /// `E_ref` used by the last call.
    reference: f64,
}

impl Workspace {
    fn new(m: usize) -> Self {
        Self {
            system: HermitianSystem::new(m),
            rate: vec![ZERO; m],
            omega_a: vec![ZERO; m],
            terms: Vec::with_capacity(m),
            reference: 0.0,
        }
    }

    /// Solves for `db/dt` into `self.rate`, relative to `reference` or, if
    /// that is `None`, to the Rayleigh quotient of `a`. `velocities` are `dz_l/dt`; when `substitute` is set the Hamiltonian
    /// derivatives on each trajectory are taken from them instead of from the
    /// analytic gradient.
    #[allow(clippy::too_many_arguments)]
    fn coefficient_rate<H: ClassicalHamiltonian>(
        &mut self,
        h: &H,
        labels: &[CsLabel],
        velocities: &[Complex64],
        a: &[Complex64],
        reference: Option<f64>,
        eps: f64,
        substitute: bool,
        t: f64,
    ) -> Result<()> {
        let m = labels.len();
        self.terms.clear();
        self.terms
            .extend(labels.iter().zip(velocities).map(|(z, &v)| {
                if substitute {
                    // i dz/dt = dH/dzc, and dH/dz = conj(dH/dzc) on the physical slice
                    let d_zc = I * v;
                    TrajectoryTerms::new(z.0, d_zc, d_zc.conj())
                } else {
                    TrajectoryTerms::from_hamiltonian(z.0, h)
                }
            }));

        if self.system.dim() != m {
            self.system.resize(m);
            self.rate.resize(m, ZERO);
            self.omega_a.resize(m, ZERO);
        }
        for k in 0..m {
            self.system.set(k, k, Complex64::new(1.0, 0.0));
            for l in (k + 1)..m {
                let o = overlap(labels[k], labels[l]);
                self.system.set(k, l, o);
                self.system.set(l, k, o.conj());
            }
        }

        // (H~ a)_k = sum_l Omega_kl bracket_kl a_l, alongside (Omega a)_k
        let mut energy = 0.0;
        let mut norm = 0.0;
        for k in 0..m {
            let zk = labels[k].0;
            let mut acc = ZERO;
            let mut plain = ZERO;
            for (((omega, terms), zl), al) in self
                .system
                .row(k)
                .iter()
                .zip(&self.terms)
                .zip(labels)
                .zip(a)
            {
                let oa = omega * al;
                acc += terms.bracket(h, zk, zl.0) * oa;
                plain += oa;
            }
            energy += (a[k].conj() * acc).re;
            norm += (a[k].conj() * plain).re;
            self.rate[k] = acc;
            self.omega_a[k] = plain;
        }
        let e_ref = reference.unwrap_or(if norm > 0.0 { energy / norm } else { 0.0 });
        self.reference = e_ref;
        for (rate, oa) in self.rate.iter_mut().zip(&self.omega_a) {
            *rate = -I * (*rate - e_ref * oa);
        }

        self.system.add_diagonal(eps);
        self.system
            .solve_in_place(&mut self.rate)
            .map_err(|e| Error::SingularSystem {
                t,
                condition: e.condition,
            })
    }
}

/// Fixed-step RK4 propagator for CCS states.
#[derive(Debug, Clone)]
pub struct CcsPropagator<H> {
    /// Classical Hamiltonian in normal order.
    pub hamiltonian: H,
    /// Time step.
    pub dt: f64,
    /// Regularization added to the overlap diagonal.
    pub eps: f64,
    /// Snapshot interval in steps.
    pub stride: usize,
    /// Relative norm drift that aborts the run.
    pub norm_abort: f64,
    /// Take trajectory derivatives from the equations of motion.
    pub substitute_derivatives: bool,
}

impl<H: ClassicalHamiltonian> CcsPropagator<H> {
    /// Propagator with default step, regularization and abort threshold.
    pub fn new(hamiltonian: H) -> Self {
        Self {
            hamiltonian,
            dt: DEFAULT_DT,
            eps: DEFAULT_REGULARIZATION,
            stride: 1,
            norm_abort: DEFAULT_NORM_ABORT,
            substitute_derivatives: false,
        }
    }

    /// Sets the time step.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Sets the regularization.
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Sets the snapshot stride.
    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    /// Sets the abort threshold on relative norm drift.
    pub fn with_norm_abort(mut self, limit: f64) -> Self {
        self.norm_abort = limit;
        self
    }

    /// Enables the derivative substitution.
    pub fn with_substitution(mut self, on: bool) -> Self {
        self.substitute_derivatives = on;
        self
    }

    /// Runs `n_steps` steps, handing the starting state and every `stride`-th
    /// state (and the last one) to `observe`. The norm is checked at those
    /// points. Returns the final state.
    pub fn run<F>(&self, state: &CcsState, n_steps: usize, mut observe: F) -> Result<CcsState>
    where
        F: FnMut(&CcsState),
    {
        check_dt(self.dt)?;
        check_eps(self.eps)?;
        if state.labels.len() != state.coefficients.len() {
            return Err(Error::LengthMismatch {
                labels: state.labels.len(),
                coefficients: state.coefficients.len(),
            });
        }
        let h = &self.hamiltonian;
        let dt = self.dt;
        let m = state.len();
        let norm0 = state.norm();
        let t0 = state.t;
        let mut ws = Workspace::new(m);
        // The reference energy is frozen at its initial value: a linear
        // equation for `b` is no stiffer than the plain one, while an updated
        // Rayleigh quotient is.
        let velocities: Vec<_> = state.labels.iter().map(|&z| eom_rhs(z, h)).collect();
        ws.coefficient_rate(
            h,
            &state.labels,
            &velocities,
            &state.coefficients,
            None,
            self.eps,
            self.substitute_derivatives,
            t0,
        )?;
        let e_ref = Some(ws.reference);
        // `cur` carries the rotating-frame coefficients `b`, `out` the physical
        // ones `a = exp(-i E_ref (t - t0)) b`
        let mut cur = state.clone();
        let mut out = state.clone();
        observe(&out);

        let mut stage_z = vec![CsLabel::default(); m];
        let mut stage_a = vec![ZERO; m];
        let mut kz = [vec![ZERO; m], vec![ZERO; m], vec![ZERO; m], vec![ZERO; m]];
        let mut ka = [vec![ZERO; m], vec![ZERO; m], vec![ZERO; m], vec![ZERO; m]];

        for step in 1..=n_steps {
            let t = cur.t;
            for s in 0..4 {
                let (frac, prev) = match s {
                    0 => (0.0, None),
                    1 | 2 => (0.5, Some(s - 1)),
                    _ => (1.0, Some(2)),
                };
                match prev {
                    None => {
                        stage_z.copy_from_slice(&cur.labels);
                        stage_a.copy_from_slice(&cur.coefficients);
                    }
                    Some(p) => {
                        let h_dt = frac * dt;
                        for l in 0..m {
                            stage_z[l] = CsLabel(cur.labels[l].0 + kz[p][l] * h_dt);
                            stage_a[l] = cur.coefficients[l] + ka[p][l] * h_dt;
                        }
                    }
                }
                for l in 0..m {
                    kz[s][l] = eom_rhs(stage_z[l], h);
                }
                ws.coefficient_rate(
                    h,
                    &stage_z,
                    &kz[s],
                    &stage_a,
                    e_ref,
                    self.eps,
                    self.substitute_derivatives,
                    t + frac * dt,
                )?;
                ka[s].copy_from_slice(&ws.rate);
            }
            let w = dt / 6.0;
            for l in 0..m {
                cur.labels[l] = CsLabel(
                    cur.labels[l].0 + (kz[0][l] + (kz[1][l] + kz[2][l]) * 2.0 + kz[3][l]) * w,
                );
                cur.coefficients[l] += (ka[0][l] + (ka[1][l] + ka[2][l]) * 2.0 + ka[3][l]) * w;
            }
            cur.t = t0 + step as f64 * dt;

            if step % self.stride == 0 || step == n_steps {
                out.t = cur.t;
                out.labels.copy_from_slice(&cur.labels);
                let phase = Complex64::from_polar(1.0, -ws.reference * (cur.t - t0));
                for (o, b) in out.coefficients.iter_mut().zip(&cur.coefficients) {
                    *o = b * phase;
                }
                let norm = out.norm();
                if !norm.is_finite() || (norm - norm0).abs() > self.norm_abort * norm0 {
                    return Err(Error::NormDrift {
                        t: cur.t,
                        norm,
                        limit: self.norm_abort,
                    });
                }
                observe(&out);
            }
        }
        Ok(out)
    }

    /// Runs `n_steps` steps and collects the snapshots.
    pub fn propagate(&self, state: &CcsState, n_steps: usize) -> Result<Vec<CcsState>> {
        let mut out = Vec::with_capacity(n_steps / self.stride.max(1) + 2);
        self.run(state, n_steps, |s| out.push(s.clone()))?;
        Ok(out)
    }
}

/// Propagates `state` for `n_steps` of size `dt`, keeping every `stride`-th
/// snapshot.
pub fn propagate_ccs<H: ClassicalHamiltonian>(
    state: &CcsState,
    h: H,
    dt: f64,
    n_steps: usize,
    eps: f64,
    stride: usize,
) -> Result<Vec<CcsState>> {
    CcsPropagator::new(h)
        .with_dt(dt)
        .with_eps(eps)
        .with_stride(stride)
        .propagate(state, n_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Harmonic, WellParams};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_state_is_single_coherent_state() {
        let labels: Vec<_> = (0..5)
            .map(|i| CsLabel::from_qp(i as f64 * 0.3, 0.1))
            .collect();
        let s = CcsState::initial(labels.clone(), 2).unwrap();
        assert_eq!(s.norm(), 1.0);
        assert_eq!(s.coefficients[2], c(1.0, 0.0));
        assert_eq!(
            CcsState::initial(labels, 5),
            Err(Error::InvalidIndex { index: 5, len: 5 })
        );
        assert_eq!(CcsState::initial(vec![], 0), Err(Error::EmptyBasis));
    }

    #[test]
    fn cross_correlation_between_wells() {
        let alpha = CsLabel::from_qp(8f64.sqrt(), 0.0);
        let s = CcsState::initial(vec![CsLabel::from_qp(1.0, 0.0), alpha], 1).unwrap();
        assert_abs_diff_eq!(
            (s.cross_correlation(alpha) - 1.0).norm(),
            0.0,
            epsilon = 1e-15
        );
        let c0 = s.cross_correlation(-alpha);
        assert_abs_diff_eq!(c0.re, (-8.0f64).exp(), epsilon = 1e-17);
    }

    #[test]
    fn norm_is_bilinear_and_nonnegative() {
        let labels = vec![
            CsLabel::from_qp(0.0, 0.0),
            CsLabel::from_qp(0.4, 0.1),
            CsLabel::from_qp(-0.3, 0.5),
            CsLabel::from_qp(1.0, -0.2),
            CsLabel::from_qp(0.2, 0.2),
        ];
        let a = vec![
            c(0.3, -1.0),
            c(-0.7, 0.2),
            c(1.1, 0.4),
            c(0.0, 0.9),
            c(-0.5, -0.5),
        ];
        let s = CcsState::new(0.0, labels.clone(), a.clone()).unwrap();
        assert!(s.norm() >= 0.0);
        assert!(s.norm_complex().im.abs() <= 1e-12);
        let doubled = CcsState::new(0.0, labels, a.iter().map(|x| x * 2.0).collect()).unwrap();
        assert_abs_diff_eq!(doubled.norm(), 4.0 * s.norm(), epsilon = 1e-12);
    }

    #[test]
    fn single_label_assembly() {
        let w = WellParams::new(1.0).unwrap();
        let (omega, ht) = assemble(&[CsLabel::default()], &w);
        assert_eq!(omega.get(0, 0), c(1.0, 0.0));
        assert_abs_diff_eq!(ht[(0, 0)].re, 0.13671875, epsilon = 1e-15);
    }

    #[test]
    fn mirrored_pair_assembly() {
        let w = WellParams::new(1.0).unwrap();
        let z = CsLabel::from_qp(2.4, 0.3);
        let (omega, ht) = assemble(&[z, -z], &w);
        assert_abs_diff_eq!(ht[(0, 1)].norm(), ht[(1, 0)].norm(), epsilon = 1e-14);
        assert!((omega.get(0, 1) - omega.get(1, 0).conj()).norm() <= 1e-15);
    }

    #[test]
    fn fixed_point_rate_is_phase_rotation() {
        let w = WellParams::new(1.0).unwrap();
        let s = CcsState::initial(vec![CsLabel::default()], 0).unwrap();
        let rate = coeff_rhs(&s, &w, DEFAULT_REGULARIZATION).unwrap();
        assert_abs_diff_eq!(rate[0].re, 0.0, epsilon = 1e-15);
        // the reference energy equals the only diagonal entry, so eps drops out
        assert_abs_diff_eq!(rate[0].im, -0.13671875, epsilon = 1e-15);
        let exact = coeff_rhs(&s, &w, 0.0).unwrap();
        assert_eq!(exact[0], c(0.0, -0.13671875));
    }

    #[test]
    fn regularization_perturbs_well_conditioned_rate_weakly() {
        let w = WellParams::new(1.0).unwrap();
        let s = CcsState::new(
            0.0,
            vec![CsLabel::from_qp(2.8, 0.0), CsLabel::from_qp(1.0, 1.0)],
            vec![c(1.0, 0.0), c(0.2, -0.1)],
        )
        .unwrap();
        let a = coeff_rhs(&s, &w, 0.0).unwrap();
        let b = coeff_rhs(&s, &w, 1e-8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-6 * x.norm());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = CcsState::initial(vec![CsLabel::default()], 0).unwrap();
        assert_eq!(
            coeff_rhs(&s, &Harmonic, -1.0),
            Err(Error::InvalidRegularization(-1.0))
        );
        let p = CcsPropagator::new(Harmonic).with_dt(0.0);
        assert_eq!(p.propagate(&s, 1), Err(Error::InvalidTimeStep(0.0)));
        assert!(CcsState::new(0.0, vec![CsLabel::default()], vec![]).is_err());
    }

    #[test]
    fn duplicated_labels_without_regularization_are_singular() {
        let z = CsLabel::from_qp(1.0, 0.0);
        let s = CcsState::new(0.0, vec![z, z], vec![c(1.0, 0.0), ZERO]).unwrap();
        match coeff_rhs(&s, &Harmonic, 0.0) {
            Err(Error::SingularSystem { condition, .. }) => assert!(condition > 1e12),
            other => panic!("expected a singular system, got {other:?}"),
        }
        // the regularized system is solvable
        assert!(coeff_rhs(&s, &Harmonic, 1e-8).is_ok());
    }

    #[test]
    fn single_basis_keeps_unit_modulus() {
        let w = WellParams::new(1.0).unwrap();
        let z = CsLabel::from_qp(w.landmarks().q_min_ordered, 0.0);
        let s = CcsState::initial(vec![z], 0).unwrap();
        let snaps = CcsPropagator::new(w)
            .with_stride(500)
            .propagate(&s, 5000)
            .unwrap();
        for snap in &snaps {
            assert_abs_diff_eq!(snap.coefficients[0].norm(), 1.0, epsilon = 1e-9);
        }
        // moving single basis state, still pure phase
        let s = CcsState::initial(vec![CsLabel::from_qp(2.0, 0.8)], 0).unwrap();
        let last = CcsPropagator::new(w)
            .propagate(&s, 3000)
            .unwrap()
            .pop()
            .unwrap();
        assert_abs_diff_eq!(last.coefficients[0].norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn substitution_matches_analytic_derivatives() {
        let w = WellParams::new(1.0).unwrap();
        let labels: Vec<_> = (0..4)
            .flat_map(|i| {
                (0..3).map(move |j| CsLabel::from_qp(2.2 + 0.3 * i as f64, -0.3 + 0.3 * j as f64))
            })
            .collect();
        let s = CcsState::initial(labels, 4).unwrap();
        let a = CcsPropagator::new(w)
            .propagate(&s, 400)
            .unwrap()
            .pop()
            .unwrap();
        let b = CcsPropagator::new(w)
            .with_substitution(true)
            .propagate(&s, 400)
            .unwrap()
            .pop()
            .unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).norm() <= 1e-8);
        }
    }

    #[test]
    fn norm_drift_aborts() {
        // a step far beyond RK4 stability blows the coefficients up
        let labels = vec![
            CsLabel::from_qp(2.8, 0.0),
            CsLabel::from_qp(2.0, 0.5),
            CsLabel::from_qp(3.3, -0.6),
        ];
        let s = CcsState::initial(labels, 0).unwrap();
        let p = CcsPropagator::new(WellParams::new(1.0).unwrap()).with_dt(4.0);
        match p.propagate(&s, 50) {
            Err(Error::NormDrift { limit, .. }) => assert_eq!(limit, DEFAULT_NORM_ABORT),
            other => panic!("expected a norm abort, got {other:?}"),
        }
    }
}
