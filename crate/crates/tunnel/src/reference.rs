//! Grid-based reference solver: split-operator FFT propagation of the
//! Schrödinger equation on a periodic position grid, and the tunneling
//! splitting from parity-projected imaginary-time relaxation.

use std::f64::consts::PI;
use std::sync::Arc;

use ccs_core::coherent::position_amplitude;
use ccs_core::{Complex64, CsLabel, WellParams};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default half extent of the box.
pub const DEFAULT_HALF_EXTENT: f64 = 10.0;
/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 512;
/// Largest probability density `|psi|^2` accepted at the box edge for an
/// initial Gaussian.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Uniform periodic grid `x_j = -L + j 2L/N`, `j = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_extent: f64,
    points: usize,
}

impl Grid {
    /// Grid on `[-half_extent, half_extent)` with a power-of-two point count.
    pub fn new(half_extent: f64, points: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::Grid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::Grid(format!(
                "point count must be a power of two, got {points}"
            )));
        }
        Ok(Self {
            half_extent,
            points,
        })
    }

    /// `L`.
    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    /// `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid spacing.
    pub fn dx(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    /// Position of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.dx()
    }

    /// All node positions.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = PI / self.half_extent;
        (0..n)
            .map(|m| if m < n / 2 { m } else { m - n } as f64 * dk)
            .collect()
    }

    /// Index of the mirror node `-x_j` (node 0 is its own mirror by periodicity).
    pub fn mirror(&self, j: usize) -> usize {
        (self.points - j) % self.points
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            half_extent: DEFAULT_HALF_EXTENT,
            points: DEFAULT_POINTS,
        }
    }
}

/// Potential used by the grid solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `V(q)` of the quartic double well.
    Plain(WellParams),
    /// Normal-ordered `V_ord(q)`.
    Ordered(WellParams),
    /// `q^2 / 2`.
    Harmonic,
    /// No potential.
    Free,
}

impl Potential {
    /// Value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Plain(w) => w.potential_plain(x),
            Potential::Ordered(w) => w.potential_ordered(x),
            Potential::Harmonic => 0.5 * x * x,
            Potential::Free => 0.0,
        }
    }
}

/// Wavefunction sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    /// Position grid.
    pub grid: Grid,
    /// Amplitudes at the grid nodes.
    pub psi: Vec<Complex64>,
    /// Time.
    pub t: f64,
}

impl ReferenceState {
    /// Coherent state centered at `(q, p)`, normalized on the grid.
    pub fn init_gaussian(q: f64, p: f64, grid: Grid) -> Result<Self> {
        let label = CsLabel::from_qp(q, p);
        let edge = [-grid.half_extent(), grid.half_extent()]
            .iter()
            .map(|&x| position_amplitude(x, label).norm_sqr())
            .fold(0.0, f64::max);
        if edge.is_nan() || edge > EDGE_TOLERANCE {
            return Err(Error::TailAtEdge {
                amplitude: edge,
                limit: EDGE_TOLERANCE,
            });
        }
        let psi = grid
            .positions()
            .into_iter()
            .map(|x| position_amplitude(x, label))
            .collect();
        let mut state = Self { grid, psi, t: 0.0 };
        state.normalize();
        Ok(state)
    }

    /// `sum |psi_j|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Rescales to unit norm.
    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        for v in &mut self.psi {
            *v *= s;
        }
    }

    /// `<x>`.
    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        self.psi
            .iter()
            .enumerate()
            .map(|(j, v)| self.grid.x(j) * v.norm_sqr())
            .sum::<f64>()
            * dx
            / self.norm()
    }

    /// `<x^2> - <x>^2`.
    pub fn position_variance(&self) -> f64 {
        let dx = self.grid.dx();
        let second = self
            .psi
            .iter()
            .enumerate()
            .map(|(j, v)| self.grid.x(j).powi(2) * v.norm_sqr())
            .sum::<f64>()
            * dx
            / self.norm();
        second - self.mean_position().powi(2)
    }

    /// Grid inner product `<other|self>`.
    pub fn inner(&self, other: &ReferenceState) -> Complex64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| b.conj() * a)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// `<beta|psi>` for the coherent state centered at `(q, p)`.
    pub fn correlation_with(&self, q: f64, p: f64) -> Complex64 {
        let beta = CsLabel::from_qp(q, p);
        self.psi
            .iter()
            .enumerate()
            .map(|(j, v)| position_amplitude(self.grid.x(j), beta).conj() * v)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// Largest amplitude at the two outermost nodes.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.psi.len();
        self.psi[0].norm().max(self.psi[n - 1].norm())
    }

    /// Norm of the component odd under `x -> -x`.
    pub fn odd_component_norm(&self) -> f64 {
        let g = self.grid;
        (0..g.points())
            .map(|j| (0.5 * (self.psi[j] - self.psi[g.mirror(j)])).norm_sqr())
            .sum::<f64>()
            * g.dx()
    }
}

/// Strang-split propagator `e^{-iT dt/2} e^{-iV dt} e^{-iT dt/2}`, or its
/// imaginary-time counterpart.
pub struct SplitOperator {
    grid: Grid,
    dt: f64,
    kinetic_half: Vec<Complex64>,
    potential_full: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SplitOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitOperator")
            .field("grid", &self.grid)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

impl SplitOperator {
    /// Real-time propagator with step `dt`.
    pub fn new(grid: Grid, potential: Potential, dt: f64) -> Result<Self> {
        Self::build(grid, potential, dt, false)
    }

    /// Imaginary-time propagator `e^{-H tau}` with step `dtau`. The state is
    /// not renormalized.
    pub fn imaginary(grid: Grid, potential: Potential, dtau: f64) -> Result<Self> {
        Self::build(grid, potential, dtau, true)
    }

    fn build(grid: Grid, potential: Potential, dt: f64, imaginary: bool) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = grid.points();
        // exponent factor: -i dt for real time, -dt for imaginary time
        let phase = |e: f64| {
            if imaginary {
                Complex64::new((-e).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -e)
            }
        };
        // 1/N normalization of the inverse transform folded into the kinetic factor
        let scale = 1.0 / n as f64;
        let kinetic_half = grid
            .wavenumbers()
            .into_iter()
            .map(|k| phase(0.25 * k * k * dt) * scale)
            .collect();
        let potential_full = grid
            .positions()
            .into_iter()
            .map(|x| phase(potential.eval(x) * dt))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            grid,
            dt,
            kinetic_half,
            potential_full,
            forward,
            inverse,
            scratch: vec![ZERO; scratch_len],
        })
    }

    /// Step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn half_kinetic(&mut self, psi: &mut [Complex64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (v, k) in psi.iter_mut().zip(&self.kinetic_half) {
            *v *= k;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut ReferenceState) {
        debug_assert_eq!(state.grid, self.grid);
        self.half_kinetic(&mut state.psi);
        for (v, p) in state.psi.iter_mut().zip(&self.potential_full) {
            *v *= p;
        }
        self.half_kinetic(&mut state.psi);
        state.t += self.dt;
    }

    /// Advances `state` by `n` steps.
    pub fn advance(&mut self, state: &mut ReferenceState, n: usize) {
        let t0 = state.t;
        for _ in 0..n {
            self.step(state);
        }
        state.t = t0 + n as f64 * self.dt;
    }
}

/// One real-time Strang step.
pub fn step_split(state: &ReferenceState, dt: f64, potential: Potential) -> Result<ReferenceState> {
    let mut prop = SplitOperator::new(state.grid, potential, dt)?;
    let mut next = state.clone();
    prop.step(&mut next);
    Ok(next)
}

/// `<psi|H|psi> / <psi|psi>` with the kinetic term evaluated spectrally.
pub fn energy(state: &ReferenceState, potential: Potential) -> f64 {
    let grid = state.grid;
    let n = grid.points();
    let mut spectrum = state.psi.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    // Parseval: sum |psi_j|^2 = (1/N) sum |psi~_k|^2
    let kinetic: f64 = spectrum
        .iter()
        .zip(grid.wavenumbers())
        .map(|(v, k)| 0.5 * k * k * v.norm_sqr())
        .sum::<f64>()
        / n as f64;
    let pot: f64 = state
        .psi
        .iter()
        .enumerate()
        .map(|(j, v)| potential.eval(grid.x(j)) * v.norm_sqr())
        .sum();
    let norm: f64 = state.psi.iter().map(|v| v.norm_sqr()).sum();
    (kinetic + pot) / norm
}

/// Cross-correlation `<beta|psi(t)>` at the requested times, with `beta` the
/// coherent state centered at `beta_center`.
pub fn correlation_reference(
    state0: &ReferenceState,
    beta_center: (f64, f64),
    times: &[f64],
    dt: f64,
    potential: Potential,
) -> Result<Vec<Complex64>> {
    let mut prop = SplitOperator::new(state0.grid, potential, dt)?;
    let mut state = state0.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = (t - state.t) / dt;
        let n = steps.round();
        if n < 0.0 || (steps - n).abs() > 1e-6 {
            return Err(Error::Incommensurate {
                t,
                dt,
                from: state.t,
            });
        }
        prop.advance(&mut state, n as usize);
        out.push(state.correlation_with(beta_center.0, beta_center.1));
    }
    Ok(out)
}

/// Lowest even and odd eigenvalues and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitting {
    /// Symmetric ground-state energy.
    pub e1: f64,
    /// Antisymmetric first excited energy.
    pub e2: f64,
    /// `e2 - e1`.
    pub delta: f64,
}

impl Splitting {
    /// Tunneling period `2 pi / delta`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.delta
    }
}

/// Controls for imaginary-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    /// Imaginary time step.
    pub dtau: f64,
    /// Imaginary-time budget.
    pub max_tau: f64,
    /// Relative energy change per unit imaginary time that counts as converged.
    pub tolerance: f64,
}

impl Default for Relaxation {
    fn default() -> Self {
        Self {
            dtau: 1e-3,
            max_tau: 200.0,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Copy)]
enum Parity {
    Even,
    Odd,
}

fn project(state: &mut ReferenceState, parity: Parity) {
    let g = state.grid;
    let src = state.psi.clone();
    for j in 0..g.points() {
        let m = src[g.mirror(j)];
        state.psi[j] = match parity {
            Parity::Even => 0.5 * (src[j] + m),
            Parity::Odd => 0.5 * (src[j] - m),
        };
    }
}

fn relax(
    start: &ReferenceState,
    parity: Parity,
    potential: Potential,
    opts: Relaxation,
) -> Result<f64> {
    let mut prop = SplitOperator::imaginary(start.grid, potential, opts.dtau)?;
    let mut state = start.clone();
    project(&mut state, parity);
    state.normalize();
    let per_unit = (1.0 / opts.dtau).round().max(1.0) as usize;
    let mut last = energy(&state, potential);
    let mut change = f64::INFINITY;
    let mut tau = 0.0;
    while tau < opts.max_tau {
        for _ in 0..per_unit {
            prop.step(&mut state);
            project(&mut state, parity);
            state.normalize();
        }
        tau += per_unit as f64 * opts.dtau;
        let e = energy(&state, potential);
        change = (e - last).abs() / e.abs().max(1e-300);
        last = e;
        if change <= opts.tolerance {
            return Ok(e);
        }
    }
    Err(Error::NotConverged {
        budget: opts.max_tau,
        change,
    })
}

/// Lowest doublet of `potential`, relaxed from the coherent state at
/// `(center_q, 0)` split into its even and odd parts.
pub fn relax_doublet(
    potential: Potential,
    grid: Grid,
    center_q: f64,
    opts: Relaxation,
) -> Result<Splitting> {
    let start = ReferenceState::init_gaussian(center_q, 0.0, grid)?;
    let e1 = relax(&start, Parity::Even, potential, opts)?;
    let e2 = relax(&start, Parity::Odd, potential, opts)?;
    Ok(Splitting {
        e1,
        e2,
        delta: e2 - e1,
    })
}

/// Tunneling splitting of the plain double well, starting from the
/// right-well Gaussian.
pub fn tunneling_splitting(params: WellParams, grid: Grid) -> Result<Splitting> {
    relax_doublet(
        Potential::Plain(params),
        grid,
        params.landmarks().q_min_plain,
        Relaxation::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(10.0, 500).is_err());
        assert!(Grid::new(0.0, 512).is_err());
        let g = Grid::new(10.0, 512).unwrap();
        assert_eq!(g.x(0), -10.0);
        assert_abs_diff_eq!(g.x(256), 0.0, epsilon = 1e-15);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(256), 256);
        assert_abs_diff_eq!(g.x(g.mirror(100)), -g.x(100), epsilon = 1e-13);
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert!(k[256] < 0.0);
    }

    #[test]
    fn gaussian_initialization() {
        let q = 8f64.sqrt();
        let s = ReferenceState::init_gaussian(q, 0.0, Grid::default()).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.mean_position(), q, epsilon = 1e-8);
        let label = CsLabel::from_qp(q, 0.0);
        let overlap: Complex64 = s
            .psi
            .iter()
            .enumerate()
            .map(|(j, v)| position_amplitude(s.grid.x(j), label).conj() * v)
            .sum::<Complex64>()
            * s.grid.dx();
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-10);
        assert!(s.edge_amplitude() < 1e-8);
    }

    #[test]
    fn edge_violation_is_rejected() {
        let err =
            ReferenceState::init_gaussian(5.0, 0.0, Grid::new(8.0, 256).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TailAtEdge { .. }));
    }

    #[test]
    fn real_time_step_is_unitary() {
        let w = WellParams::new(1.0).unwrap();
        let s = ReferenceState::init_gaussian(8f64.sqrt(), 0.3, Grid::default()).unwrap();
        let mut prop = SplitOperator::new(s.grid, Potential::Plain(w), 1e-3).unwrap();
        let mut cur = s.clone();
        for _ in 0..100 {
            let before = cur.norm();
            prop.step(&mut cur);
            assert_abs_diff_eq!(cur.norm(), before, epsilon = 1e-12);
        }
        let one = step_split(&s, 1e-3, Potential::Plain(w)).unwrap();
        assert_abs_diff_eq!(one.t, 1e-3);
    }

    #[test]
    fn correlation_at_origin_time() {
        let q = 8f64.sqrt();
        let s = ReferenceState::init_gaussian(q, 0.0, Grid::default()).unwrap();
        let c = correlation_reference(&s, (q, 0.0), &[0.0], 1e-3, Potential::Harmonic).unwrap();
        assert_abs_diff_eq!(c[0].norm(), 1.0, epsilon = 1e-10);
        assert!(correlation_reference(&s, (q, 0.0), &[0.0105], 1e-2, Potential::Harmonic).is_err());
    }

    #[test]
    fn harmonic_energy_of_coherent_state() {
        // <H> = |z|^2 + 1/2 for a unit-frequency coherent state
        let s = ReferenceState::init_gaussian(1.0, 0.5, Grid::default()).unwrap();
        assert_abs_diff_eq!(
            energy(&s, Potential::Harmonic),
            0.5 + (1.0 + 0.25) / 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn even_state_stays_even() {
        let w = WellParams::new(1.0).unwrap();
        let a = ReferenceState::init_gaussian(8f64.sqrt(), 0.0, Grid::default()).unwrap();
        let b = ReferenceState::init_gaussian(-(8f64.sqrt()), 0.0, Grid::default()).unwrap();
        let mut s = a.clone();
        for (v, u) in s.psi.iter_mut().zip(&b.psi) {
            *v += u;
        }
        s.normalize();
        let mut prop = SplitOperator::new(s.grid, Potential::Plain(w), 1e-2).unwrap();
        prop.advance(&mut s, 2000);
        assert!(s.odd_component_norm() <= 1e-10);
    }
}
