//! Experiment orchestration: phase-space grids of initial conditions, energy
//! classification, scenario configuration, joint CCS / reference runs and
//! CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ccs_core::{CcsPropagator, CcsState, ClassicalHamiltonian, Complex64, CsLabel, WellParams};

use crate::csv::{Cell, CsvWriter};
use crate::error::{Error, Result};
use crate::reference::{Grid, Potential, ReferenceState, SplitOperator};

/// Largest internal step of the reference solver; coarser scenario steps are
/// subdivided.
pub const REFERENCE_MAX_STEP: f64 = 5e-3;
/// Number of position samples per separatrix branch in CSV output.
pub const SEPARATRIX_SAMPLES: usize = 401;

/// Rectangular lattice of phase-space points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Lattice center `(q, p)`; the occupied Gaussian sits here.
    pub center: (f64, f64),
    /// Points along `q` (odd).
    pub nq: usize,
    /// Points along `p` (odd).
    pub np: usize,
    /// Half extent along `q`.
    pub half_width_q: f64,
    /// Half extent along `p`.
    pub half_width_p: f64,
    /// Append the copy reflected through the origin, `z -> -z`.
    pub mirrored: bool,
}

impl GridSpec {
    /// Number of labels produced by [`make_grid`].
    pub fn len(&self) -> usize {
        self.nq * self.np * if self.mirrored { 2 } else { 1 }
    }

    /// True when the lattice has no points.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.nq.is_multiple_of(2) || self.np.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "grid counts must be odd, got nq = {} and np = {}",
                self.nq, self.np
            )));
        }
        for (name, v) in [
            ("half_width_q", self.half_width_q),
            ("half_width_p", self.half_width_p),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn lattice_coordinate(center: f64, half_width: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        center
    } else {
        center + half_width * (2.0 * i as f64 / (n - 1) as f64 - 1.0)
    }
}

/// Labels of the lattice (`q` major, `p` minor) and the index of its center.
/// A mirrored lattice appends `-z` for every label, so
/// `labels[M/2 + i] == -labels[i]`.
pub fn make_grid(spec: &GridSpec) -> Result<(Vec<CsLabel>, usize)> {
    spec.validate()?;
    let mut labels = Vec::with_capacity(spec.len());
    for i in 0..spec.nq {
        let q = lattice_coordinate(spec.center.0, spec.half_width_q, spec.nq, i);
        for j in 0..spec.np {
            let p = lattice_coordinate(spec.center.1, spec.half_width_p, spec.np, j);
            labels.push(CsLabel::from_qp(q, p));
        }
    }
    if spec.mirrored {
        let reflected: Vec<_> = labels.iter().map(|&z| -z).collect();
        labels.extend(reflected);
    }
    let occupied = (spec.nq / 2) * spec.np + spec.np / 2;
    Ok((labels, occupied))
}

/// Energy of a label relative to the ordered separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyClass {
    /// Inside the figure eight.
    Below,
    /// Outside the figure eight.
    Above,
}

impl EnergyClass {
    /// CSV spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyClass::Below => "below",
            EnergyClass::Above => "above",
        }
    }
}

/// Compares `H_ord(conj(z), z)` with the ordered separatrix energy.
pub fn classify_energies(labels: &[CsLabel], params: &WellParams) -> Vec<EnergyClass> {
    let threshold = params.landmarks().separatrix_energy_ordered;
    labels
        .iter()
        .map(|z| {
            if params.energy(z.0) < threshold {
                EnergyClass::Below
            } else {
                EnergyClass::Above
            }
        })
        .collect()
}

/// Named presets. Any key in a config file overrides the preset value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Single-sided sub-barrier grid, M = 49.
    Fig2,
    /// Sub-barrier grid plus its mirror image, M = 98.
    Fig3,
    /// Wide single-sided grid reaching over the barrier, M = 81.
    Fig4,
    /// The `fig4` grid with a phase-space snapshot at half the tunneling period.
    Fig5,
    /// No preset; same defaults as `fig2`.
    Custom,
}

impl Scenario {
    /// Parses a scenario name.
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "fig2" => Scenario::Fig2,
            "fig3" => Scenario::Fig3,
            "fig4" => Scenario::Fig4,
            "fig5" => Scenario::Fig5,
            "custom" => Scenario::Custom,
            _ => return None,
        })
    }
}

/// Half width of the dense sub-barrier grid. At `D = 1` every point of the
/// 7 x 7 lattice lies inside the ordered separatrix.
pub const DENSE_HALF_WIDTH: f64 = 0.6;
/// Half width of the wide grid: four times the phase-space area of the dense one.
pub const WIDE_HALF_WIDTH: f64 = 2.0 * DENSE_HALF_WIDTH;

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Scenario name, used as the output file prefix.
    pub scenario: String,
    /// Barrier height.
    pub d: f64,
    /// Lattice of initial conditions; `center` is derived from `d`.
    pub grid: GridSpec,
    /// Shared time step of both propagations.
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
    /// Overlap regularization.
    pub eps: f64,
    /// Times at which coefficient snapshots are written.
    pub snapshot_times: Vec<f64>,
    /// Output directory.
    pub out_dir: PathBuf,
}

const KEYS: [&str; 12] = [
    "D",
    "nq",
    "np",
    "half_width_q",
    "half_width_p",
    "mirrored",
    "dt",
    "t_final",
    "eps",
    "snapshot_times",
    "scenario",
    "out_dir",
];

impl ExperimentConfig {
    /// Preset values for a scenario at `D = 1`.
    pub fn preset(scenario: Scenario) -> Self {
        let d = 1.0;
        let (n, half_width, mirrored, t_final, snapshots) = match scenario {
            Scenario::Fig2 | Scenario::Custom => (7, DENSE_HALF_WIDTH, false, 263.0, vec![]),
            Scenario::Fig3 => (7, DENSE_HALF_WIDTH, true, 526.0, vec![]),
            Scenario::Fig4 => (9, WIDE_HALF_WIDTH, false, 263.0, vec![]),
            Scenario::Fig5 => (9, WIDE_HALF_WIDTH, false, 131.0, vec![0.0, 131.0]),
        };
        let name = match scenario {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Custom => "custom",
        };
        Self {
            scenario: name.into(),
            d,
            grid: GridSpec {
                center: ((8.0 * d).sqrt(), 0.0),
                nq: n,
                np: n,
                half_width_q: half_width,
                half_width_p: half_width,
                mirrored,
            },
            dt: 0.05,
            t_final,
            eps: ccs_core::ccs::DEFAULT_REGULARIZATION,
            snapshot_times: snapshots,
            out_dir: PathBuf::from("out"),
        }
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// unknown or repeated keys are errors. Missing keys take the values of
    /// the `scenario` preset.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key, (line_no, value)).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }

        let scenario = match entries.get("scenario") {
            Some(&(line, name)) => Scenario::parse(name).ok_or_else(|| Error::Config {
                line,
                message: format!(
                    "unknown scenario `{name}` (expected fig2, fig3, fig4, fig5 or custom)"
                ),
            })?,
            None => Scenario::Custom,
        };
        let mut cfg = Self::preset(scenario);

        for (&key, &(line, value)) in &entries {
            let bad = |what: &str| Error::Config {
                line,
                message: format!("`{key}`: expected {what}, got `{value}`"),
            };
            let float = || value.parse::<f64>().map_err(|_| bad("a number"));
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad("a non-negative integer"))
            };
            match key {
                "D" => cfg.d = float()?,
                "nq" => cfg.grid.nq = count()?,
                "np" => cfg.grid.np = count()?,
                "half_width_q" => cfg.grid.half_width_q = float()?,
                "half_width_p" => cfg.grid.half_width_p = float()?,
                "mirrored" => {
                    cfg.grid.mirrored = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad("true or false")),
                    }
                }
                "dt" => cfg.dt = float()?,
                "t_final" => cfg.t_final = float()?,
                "eps" => cfg.eps = float()?,
                "snapshot_times" => {
                    cfg.snapshot_times = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.parse::<f64>()
                                .map_err(|_| bad("a comma-separated list of times"))
                        })
                        .collect::<Result<_>>()?;
                }
                "scenario" => cfg.scenario = value.to_string(),
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.grid.center = ((8.0 * cfg.d.max(0.0)).sqrt(), 0.0);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the config in the file format accepted by [`ExperimentConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
        format!(
            "scenario = {}\nD = {}\nnq = {}\nnp = {}\nhalf_width_q = {}\nhalf_width_p = {}\nmirrored = {}\ndt = {}\nt_final = {}\neps = {:e}\nsnapshot_times = {}\nout_dir = {}\n",
            self.scenario,
            self.d,
            self.grid.nq,
            self.grid.np,
            self.grid.half_width_q,
            self.grid.half_width_p,
            self.grid.mirrored,
            self.dt,
            self.t_final,
            self.eps,
            times.join(", "),
            self.out_dir.display()
        )
    }

    /// Checks value ranges and time-grid commensurability.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("D", self.d)?;
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::Invalid(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if self.scenario.is_empty() || self.scenario.contains(['/', '\\']) {
            return Err(Error::Invalid(format!(
                "invalid scenario name `{}`",
                self.scenario
            )));
        }
        self.grid.validate()?;
        self.step_index(self.t_final).ok_or_else(|| {
            Error::Invalid(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            ))
        })?;
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final).contains(&t) || self.step_index(t).is_none() {
                return Err(Error::Invalid(format!(
                    "snapshot time {t} must be a multiple of dt = {} within [0, {}]",
                    self.dt, self.t_final
                )));
            }
        }
        Ok(())
    }

    /// Step index of time `t`, when `t` lies on the time grid.
    pub fn step_index(&self, t: f64) -> Option<usize> {
        let steps = t / self.dt;
        let n = steps.round();
        (n >= 0.0 && (steps - n).abs() <= 1e-9 * n.max(1.0)).then_some(n as usize)
    }

    /// Number of steps to `t_final`.
    pub fn n_steps(&self) -> usize {
        self.step_index(self.t_final).unwrap_or(0)
    }

    /// Well parameters.
    pub fn params(&self) -> Result<WellParams> {
        Ok(WellParams::new(self.d)?)
    }

    /// Center of the initial Gaussian, `(sqrt(8 D), 0)`.
    pub fn alpha(&self) -> (f64, f64) {
        ((8.0 * self.d).sqrt(), 0.0)
    }

    /// Center of the probe Gaussian in the left well, `(-sqrt(8 D), 0)`.
    pub fn beta(&self) -> (f64, f64) {
        (-(8.0 * self.d).sqrt(), 0.0)
    }

    /// Position grid for the reference solver: at least `[-10, 10)` with the
    /// default spacing, widened for deeper wells.
    pub fn reference_grid(&self) -> Result<Grid> {
        let half = (4.0 * self.d.sqrt() + 6.0).max(crate::reference::DEFAULT_HALF_EXTENT);
        let spacing =
            2.0 * crate::reference::DEFAULT_HALF_EXTENT / crate::reference::DEFAULT_POINTS as f64;
        let points = ((2.0 * half / spacing).ceil() as usize).next_power_of_two();
        Grid::new(half, points)
    }
}

/// Time series and snapshots of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Sample times.
    pub times: Vec<f64>,
    /// CCS cross-correlation.
    pub c_ccs: Vec<Complex64>,
    /// Reference cross-correlation.
    pub c_ref: Vec<Complex64>,
    /// CCS norm.
    pub norms: Vec<f64>,
    /// CCS states at the configured snapshot times.
    pub snapshots: Vec<CcsState>,
    /// Index of the initially occupied label.
    pub occupied: usize,
}

impl Outcome {
    /// `max_t | |c_ccs| - |c_ref| |` over samples with `t <= t_max`.
    pub fn max_deviation(&self, t_max: f64) -> f64 {
        self.window(0.0, t_max)
            .map(|i| (self.c_ccs[i].norm() - self.c_ref[i].norm()).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|c_ccs|` and its time, over `[t_min, t_max]`.
    pub fn peak_ccs(&self, t_min: f64, t_max: f64) -> (f64, f64) {
        self.peak(&self.c_ccs, t_min, t_max)
    }

    /// Largest `|c_ref|` and its time, over `[t_min, t_max]`.
    pub fn peak_ref(&self, t_min: f64, t_max: f64) -> (f64, f64) {
        self.peak(&self.c_ref, t_min, t_max)
    }

    /// Smallest and largest CCS norm.
    pub fn norm_range(&self) -> (f64, f64) {
        self.norms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| {
                (lo.min(n), hi.max(n))
            })
    }

    fn window(&self, t_min: f64, t_max: f64) -> impl Iterator<Item = usize> + '_ {
        let slack = 1e-9 * t_max.abs().max(1.0);
        self.times
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t >= t_min - slack && t <= t_max + slack)
            .map(|(i, _)| i)
    }

    fn peak(&self, series: &[Complex64], t_min: f64, t_max: f64) -> (f64, f64) {
        self.window(t_min, t_max)
            .map(|i| (series[i].norm(), self.times[i]))
            .fold((f64::NEG_INFINITY, f64::NAN), |best, cur| {
                if cur.0 > best.0 {
                    cur
                } else {
                    best
                }
            })
    }
}

/// Output of [`run_ccs`], sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct CcsSeries {
    /// Sample times.
    pub times: Vec<f64>,
    /// Cross-correlation with the probe state.
    pub correlation: Vec<Complex64>,
    /// Norm.
    pub norms: Vec<f64>,
    /// States at the configured snapshot times.
    pub snapshots: Vec<CcsState>,
}

/// Runs the CCS propagation with Hamiltonian `h` and collects the
/// cross-correlation with `beta`, the norm, and snapshots.
pub fn run_ccs<H: ClassicalHamiltonian>(
    config: &ExperimentConfig,
    h: H,
    initial: &CcsState,
    beta: CsLabel,
) -> Result<CcsSeries> {
    let n_steps = config.n_steps();
    let snapshot_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .filter_map(|&t| config.step_index(t))
        .collect();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut c = Vec::with_capacity(n_steps + 1);
    let mut norms = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let mut step = 0usize;
    CcsPropagator::new(h)
        .with_dt(config.dt)
        .with_eps(config.eps)
        .run(initial, n_steps, |s| {
            times.push(step as f64 * config.dt);
            c.push(s.cross_correlation(beta));
            norms.push(s.norm());
            if snapshot_steps.contains(&step) {
                let mut snap = s.clone();
                snap.t = step as f64 * config.dt;
                snapshots.push(snap);
            }
            step += 1;
        })?;
    Ok(CcsSeries {
        times,
        correlation: c,
        norms,
        snapshots,
    })
}

/// Reference cross-correlation on the scenario time grid.
pub fn run_reference(config: &ExperimentConfig) -> Result<Vec<Complex64>> {
    let params = config.params()?;
    let grid = config.reference_grid()?;
    let (q, p) = config.alpha();
    let (bq, bp) = config.beta();
    let mut state = ReferenceState::init_gaussian(q, p, grid)?;
    let substeps = (config.dt / REFERENCE_MAX_STEP).ceil().max(1.0) as usize;
    let mut prop = SplitOperator::new(grid, Potential::Plain(params), config.dt / substeps as f64)?;
    let n_steps = config.n_steps();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(state.correlation_with(bq, bp));
    for step in 1..=n_steps {
        prop.advance(&mut state, substeps);
        state.t = step as f64 * config.dt;
        out.push(state.correlation_with(bq, bp));
    }
    Ok(out)
}

/// Runs both propagations (concurrently) without touching the disk.
pub fn simulate(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let params = config.params()?;
    let (labels, occupied) = make_grid(&config.grid)?;
    let initial = CcsState::initial(labels, occupied)?;
    let (bq, bp) = config.beta();
    let beta = CsLabel::from_qp(bq, bp);

    let (ccs, reference) = std::thread::scope(|scope| {
        let reference = scope.spawn(|| run_reference(config));
        let ccs = run_ccs(config, params, &initial, beta);
        (
            ccs,
            reference.join().expect("reference propagation panicked"),
        )
    });
    let CcsSeries {
        times,
        correlation: c_ccs,
        norms,
        snapshots,
    } = ccs?;
    let c_ref = reference?;
    Ok(Outcome {
        times,
        c_ccs,
        c_ref,
        norms,
        snapshots,
        occupied,
    })
}

/// Files written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    /// Correlation series.
    pub correlation: PathBuf,
    /// Coefficient snapshots.
    pub snapshots: PathBuf,
    /// Separatrix curves.
    pub separatrix: PathBuf,
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs a scenario and writes its CSV files under `config.out_dir`.
pub fn run_scenario(config: &ExperimentConfig) -> Result<(Outcome, Artifacts)> {
    config.validate()?;
    create_out_dir(&config.out_dir)?;
    let outcome = simulate(config)?;
    let prefix = &config.scenario;
    let artifacts = Artifacts {
        correlation: config.out_dir.join(format!("{prefix}_correlation.csv")),
        snapshots: config.out_dir.join(format!("{prefix}_snapshots.csv")),
        separatrix: config.out_dir.join(format!("{prefix}_separatrix.csv")),
    };
    write_correlation(&artifacts.correlation, &outcome)?;
    write_snapshots(&artifacts.snapshots, &outcome.snapshots)?;
    write_separatrix(&artifacts.separatrix, &config.params()?)?;
    Ok((outcome, artifacts))
}

fn io_at<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io(path, e))
}

/// Writes `t, re_c_ccs, im_c_ccs, abs_c_ccs, abs_c_ref, norm_ccs`.
pub fn write_correlation(path: &Path, outcome: &Outcome) -> Result<()> {
    let mut w = CsvWriter::create(
        path,
        &[
            "t",
            "re_c_ccs",
            "im_c_ccs",
            "abs_c_ccs",
            "abs_c_ref",
            "norm_ccs",
        ],
    )?;
    for i in 0..outcome.times.len() {
        let c = outcome.c_ccs[i];
        io_at(
            path,
            w.row(&[
                Cell::Num(outcome.times[i]),
                Cell::Num(c.re),
                Cell::Num(c.im),
                Cell::Num(c.norm()),
                Cell::Num(outcome.c_ref[i].norm()),
                Cell::Num(outcome.norms[i]),
            ]),
        )?;
    }
    io_at(path, w.finish()).map(drop)
}

/// Writes `t, label_index, q, p, re_a, im_a` for every snapshot.
pub fn write_snapshots(path: &Path, snapshots: &[CcsState]) -> Result<()> {
    let mut w = CsvWriter::create(path, &["t", "label_index", "q", "p", "re_a", "im_a"])?;
    for s in snapshots {
        for (l, (z, a)) in s.labels.iter().zip(&s.coefficients).enumerate() {
            let (q, p) = z.qp();
            io_at(
                path,
                w.row(&[
                    Cell::Num(s.t),
                    Cell::Int(l),
                    Cell::Num(q),
                    Cell::Num(p),
                    Cell::Num(a.re),
                    Cell::Num(a.im),
                ]),
            )?;
        }
    }
    io_at(path, w.finish()).map(drop)
}

fn separatrix_rows<W: std::io::Write>(
    w: &mut CsvWriter<W>,
    params: &WellParams,
    ordered: bool,
) -> std::io::Result<()> {
    let variant = if ordered { "ordered" } else { "plain" };
    for (q, p) in params.separatrix_points(ordered, SEPARATRIX_SAMPLES) {
        w.row(&[Cell::Num(q), Cell::Num(p), Cell::Text(variant)])?;
    }
    Ok(())
}

/// Writes both separatrices as `q, p, variant`.
pub fn write_separatrix(path: &Path, params: &WellParams) -> Result<()> {
    let mut w = CsvWriter::create(path, &["q", "p", "variant"])?;
    io_at(path, separatrix_rows(&mut w, params, false))?;
    io_at(path, separatrix_rows(&mut w, params, true))?;
    io_at(path, w.finish()).map(drop)
}

/// Writes one separatrix to an arbitrary sink.
pub fn emit_separatrix<W: std::io::Write>(
    out: W,
    params: &WellParams,
    ordered: bool,
) -> std::io::Result<W> {
    let mut w = CsvWriter::new(out, &["q", "p", "variant"])?;
    separatrix_rows(&mut w, params, ordered)?;
    w.finish()
}

/// Per-label grid report: the labels, their classes and the occupied index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    /// Lattice labels.
    pub labels: Vec<CsLabel>,
    /// Energy classes.
    pub classes: Vec<EnergyClass>,
    /// Occupied index.
    pub occupied: usize,
    /// Written CSV file.
    pub path: PathBuf,
}

impl GridReport {
    /// Number of labels below the ordered separatrix energy.
    pub fn below(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| **c == EnergyClass::Below)
            .count()
    }
}

/// Builds and classifies the grid of `config`, writing
/// `label_index, q, p, energy, class, occupied`.
pub fn write_grid(config: &ExperimentConfig) -> Result<GridReport> {
    config.validate()?;
    let params = config.params()?;
    let (labels, occupied) = make_grid(&config.grid)?;
    let classes = classify_energies(&labels, &params);
    create_out_dir(&config.out_dir)?;
    let path = config.out_dir.join(format!("{}_grid.csv", config.scenario));
    let mut w = CsvWriter::create(
        &path,
        &["label_index", "q", "p", "energy", "class", "occupied"],
    )?;
    for (l, (z, class)) in labels.iter().zip(&classes).enumerate() {
        let (q, p) = z.qp();
        io_at(
            &path,
            w.row(&[
                Cell::Int(l),
                Cell::Num(q),
                Cell::Num(p),
                Cell::Num(params.energy(z.0)),
                Cell::Text(class.as_str()),
                Cell::Int(usize::from(l == occupied)),
            ]),
        )?;
    }
    io_at(&path, w.finish())?;
    Ok(GridReport {
        labels,
        classes,
        occupied,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense(mirrored: bool) -> GridSpec {
        ExperimentConfig::preset(if mirrored {
            Scenario::Fig3
        } else {
            Scenario::Fig2
        })
        .grid
    }

    #[test]
    fn grid_sizes() {
        let (labels, occupied) = make_grid(&dense(false)).unwrap();
        assert_eq!(labels.len(), 49);
        assert_eq!(occupied, 24);
        let (q, p) = labels[occupied].qp();
        assert_abs_diff_eq!(q, 8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);

        let (labels, occupied) = make_grid(&dense(true)).unwrap();
        assert_eq!(labels.len(), 98);
        assert_eq!(occupied, 24);
        for i in 0..49 {
            assert_eq!(labels[49 + i], -labels[i]);
        }

        let wide = ExperimentConfig::preset(Scenario::Fig4).grid;
        assert_eq!(make_grid(&wide).unwrap().0.len(), 81);
    }

    #[test]
    fn even_counts_are_rejected() {
        let mut spec = dense(false);
        spec.nq = 6;
        assert!(make_grid(&spec).is_err());
    }

    #[test]
    fn classification() {
        let w = WellParams::new(1.0).unwrap();
        let min = CsLabel::from_qp(w.landmarks().q_min_ordered, 0.0);
        let kick = CsLabel::from_qp(0.0, 2.0);
        assert_eq!(
            classify_energies(&[min, kick], &w),
            vec![EnergyClass::Below, EnergyClass::Above]
        );

        let (labels, _) = make_grid(&dense(false)).unwrap();
        assert!(classify_energies(&labels, &w)
            .iter()
            .all(|c| *c == EnergyClass::Below));

        let (labels, _) = make_grid(&ExperimentConfig::preset(Scenario::Fig4).grid).unwrap();
        let classes = classify_energies(&labels, &w);
        assert!(classes.contains(&EnergyClass::Above));
        let mirrored: Vec<_> = labels.iter().map(|&z| -z).collect();
        assert_eq!(classify_energies(&mirrored, &w), classes);
    }

    #[test]
    fn config_round_trip_and_overrides() {
        let text =
            "# wide grid, denser\nscenario = fig4\nnq = 11\nnp = 11\n\nsnapshot_times = 0, 131\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario, "fig4");
        assert_eq!(cfg.grid.nq, 11);
        assert_eq!(cfg.grid.half_width_q, WIDE_HALF_WIDTH);
        assert_eq!(cfg.snapshot_times, vec![0.0, 131.0]);
        assert_eq!(
            ExperimentConfig::parse(&cfg.to_config_string()).unwrap(),
            cfg
        );
    }

    #[test]
    fn config_errors() {
        let err = |text: &str| ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err("foo = 1").contains("unknown key"));
        assert!(err("dt = 0.1\ndt = 0.2").contains("duplicate"));
        assert!(err("nq 7").contains("key = value"));
        assert!(err("mirrored = yes").contains("true or false"));
        assert!(err("scenario = fig9").contains("unknown scenario"));
        assert!(err("t_final = 0").contains("t_final"));
        assert!(err("dt = 0.05\nt_final = 1.01").contains("multiple"));
        assert!(err("snapshot_times = 1000").contains("snapshot"));
        assert!(err("D = -1").contains("D must be positive"));
    }

    #[test]
    fn outcome_metrics() {
        let o = Outcome {
            times: vec![0.0, 1.0, 2.0],
            c_ccs: vec![
                Complex64::new(0.1, 0.0),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.2, 0.0),
            ],
            c_ref: vec![
                Complex64::new(0.1, 0.0),
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.25),
            ],
            norms: vec![1.0, 0.99, 1.01],
            snapshots: vec![],
            occupied: 0,
        };
        assert_abs_diff_eq!(o.max_deviation(2.0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(o.max_deviation(0.5), 0.0, epsilon = 1e-15);
        assert_eq!(o.peak_ccs(0.0, 2.0), (0.5, 1.0));
        assert_eq!(o.peak_ref(1.5, 2.0), (0.25, 2.0));
        assert_eq!(o.norm_range(), (0.99, 1.01));
    }

    #[test]
    fn reference_grid_defaults() {
        let g = ExperimentConfig::preset(Scenario::Fig3)
            .reference_grid()
            .unwrap();
        assert_eq!((g.half_extent(), g.points()), (10.0, 512));
    }
}
