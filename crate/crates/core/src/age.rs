//! Deterministic solvers for the age-structured renewal model, with and
//! without spatial jumps.
//!
//! Time and age advance in lock-step (`Δt = Δa`), so transport along
//! characteristics is exact. Inside an age cell the density is taken
//! proportional to the survival function `S`; the one-step escape
//! probability of cell `c` is then `1 - S̄_{c+1}/S̄_c` with `S̄_c` the cell
//! average of `S`. Under that closure the ratio `u / S̄` of a cohort never
//! changes, and for a cohort born during step `k` it equals the renewal flux
//! `U_k`. The solver state is therefore the flux history, and each step is a
//! discrete Volterra sum. Particles that are born and escape again inside the
//! same step are resolved implicitly, which keeps total mass exact.
//!
//! The spatial model is linear with a translation-invariant kernel on the
//! periodic domain, so it is solved one Fourier mode at a time.

use std::ops::{Add, AddAssign, Mul, Sub};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{AgeProfile, HazardModel, InitialAgeData, JumpKernel, KernelShape, PERIOD};
use crate::par;
use crate::quad::Quadrature;

/// Relative mass drift accepted from a run.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// Initial age mass beyond the last tracked cell, relative to the total.
const INITIAL_TAIL: f64 = 1e-17;

/// Uniform age grid `[0, cells·Δa)` plus one overflow bin for older particles,
/// which escape at the frozen rate `d(a_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    pub da: f64,
    pub cells: usize,
}

impl AgeGrid {
    pub fn new(da: f64, cells: usize) -> Result<Self> {
        if !(da > 0.0 && da.is_finite()) {
            return Err(Error::Config(format!("age step must be positive, got {da}")));
        }
        if cells == 0 {
            return Err(Error::Config("age grid needs at least one cell".into()));
        }
        Ok(AgeGrid { da, cells })
    }

    /// Grid that holds every age reachable within `steps` steps from initial
    /// data supported on `initial_cells` cells, so the overflow bin stays empty.
    pub fn covering(da: f64, initial_cells: usize, steps: usize) -> Result<Self> {
        Self::new(da, initial_cells + steps + 1)
    }

    pub fn a_max(&self) -> f64 {
        self.cells as f64 * self.da
    }
}

/// Per-model tables shared by every cohort sum.
struct Tables {
    h: f64,
    cells: usize,
    /// `S̄_c`, `c = 0..=cells`.
    sbar: Vec<f64>,
    /// `S̄_c - S̄_{c+1}`, `c < cells`.
    drop: Vec<f64>,
    /// Probability that a particle born during a step escapes in the same step.
    p0: f64,
    overflow_escape: f64,
}

impl Tables {
    fn new(model: &HazardModel, grid: &AgeGrid) -> Self {
        let h = grid.da;
        let sbar: Vec<f64> = (0..=grid.cells)
            .map(|c| model.survival_integral(c as f64 * h, (c + 1) as f64 * h) / h)
            .collect();
        let drop = sbar.windows(2).map(|w| w[0] - w[1]).collect();
        let overflow_escape = -(-model.hazard_unchecked(grid.a_max()) * h).exp_m1();
        Tables {
            h,
            cells: grid.cells,
            p0: 1.0 - sbar[0],
            sbar,
            drop,
            overflow_escape,
        }
    }
}

trait Amplitude:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
}
impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// Cohort ratios of one Fourier mode (or of the homogeneous problem).
struct Cohorts<T> {
    initial: Vec<T>,
    born: Vec<T>,
    overflow: T,
}

impl<T: Amplitude> Cohorts<T> {
    fn new(initial: Vec<T>) -> Self {
        Cohorts { initial, born: Vec::new(), overflow: T::default() }
    }

    /// Advances one step with a jump symbol `sigma` and returns the renewal flux.
    fn step(&mut self, tab: &Tables, sigma: f64) -> T {
        let n = self.born.len();
        let cells = tab.cells;
        let mut escaped = T::default();
        let mut crossing = T::default();
        if n < cells {
            let len = self.initial.len().min(cells - n);
            for (q, d) in self.initial[..len].iter().zip(&tab.drop[n..n + len]) {
                escaped += *q * *d;
            }
            if len > 0 && n + len == cells {
                crossing += self.initial[len - 1] * tab.sbar[cells];
            }
        }
        let lo = n.saturating_sub(cells);
        let span = n - lo;
        for (q, d) in self.born[lo..].iter().rev().zip(&tab.drop[..span]) {
            escaped += *q * *d;
        }
        if span == cells {
            crossing += self.born[lo] * tab.sbar[cells];
        }
        let from_overflow = self.overflow * tab.overflow_escape;
        self.overflow = self.overflow - from_overflow + crossing * tab.h;
        let emitted = escaped * tab.h + from_overflow;
        let births = emitted * (sigma / (1.0 - tab.p0 * sigma));
        let flux = births * (1.0 / tab.h);
        self.born.push(flux);
        flux
    }

    /// `∫ u da` after the steps taken so far.
    fn density(&self, tab: &Tables) -> T {
        let n = self.born.len();
        let cells = tab.cells;
        let mut total = T::default();
        if n < cells {
            let len = self.initial.len().min(cells - n);
            for (q, s) in self.initial[..len].iter().zip(&tab.sbar[n..n + len]) {
                total += *q * *s;
            }
        }
        let lo = n.saturating_sub(cells);
        for (q, s) in self.born[lo..].iter().rev().zip(&tab.sbar) {
            total += *q * *s;
        }
        total * tab.h + self.overflow
    }
}

fn check_age_profile(g: &AgeProfile) -> Result<()> {
    match *g {
        AgeProfile::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
        AgeProfile::Exponential { rate } => Err(Error::Input(format!(
            "initial age density must be nonnegative and integrable, got rate {rate}"
        ))),
    }
}

/// Initial cohort ratios `m_i / (Δa S̄_i)` and the discarded tail mass.
fn initial_ratios(g: &AgeProfile, tab: &Tables, h: f64) -> (Vec<f64>, f64) {
    let cut = g.support_cutoff(INITIAL_TAIL);
    let count = ((cut / h).ceil() as usize).clamp(1, tab.cells);
    let mut discarded = g.mass_between(count as f64 * h, f64::INFINITY);
    let ratios = (0..count)
        .map(|i| {
            let m = g.mass_between(i as f64 * h, (i + 1) as f64 * h);
            let s = tab.sbar[i];
            if s > 0.0 {
                m / (h * s)
            } else {
                discarded += m;
                0.0
            }
        })
        .collect();
    (ratios, discarded)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Output of an age-structured run.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTrace {
    /// Macroscopic time step.
    pub dt: f64,
    /// Renewal flux on `[n·dt, (n+1)·dt)`, integrated over space for spatial runs.
    pub flux: Vec<f64>,
    pub mass_times: Vec<f64>,
    pub mass: Vec<f64>,
    pub initial_mass: f64,
    /// Initial mass lost to age truncation, relative to the total.
    pub discarded_mass: f64,
    pub overflow_mass: f64,
    pub snapshots: Vec<Snapshot>,
    /// `max u / S̄` over the initial data.
    pub initial_ratio_max: f64,
    /// `max u / S̄` over the whole run.
    pub ratio_max: f64,
    /// Smallest renewal flux value seen anywhere.
    pub flux_min: f64,
}

impl RenewalTrace {
    pub fn t_end(&self) -> f64 {
        self.dt * self.flux.len() as f64
    }

    /// Left ends of the flux intervals.
    pub fn times(&self) -> Vec<f64> {
        (0..self.flux.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.mass
            .iter()
            .map(|m| ((m - self.initial_mass) / self.initial_mass).abs())
            .fold(0.0, f64::max)
    }

    fn check_mass(&self) -> Result<()> {
        let drift = self.max_mass_drift();
        if drift > 10.0 * MASS_TOLERANCE {
            return Err(Error::Numerical(format!("relative mass drift {drift:e}")));
        }
        Ok(())
    }
}

fn mass_stride(steps: usize) -> usize {
    (steps / 2000).max(1)
}

/// Renewal equation without space, on an age grid covering every reachable age.
pub fn solve_age_homogeneous(model: &HazardModel, g: &AgeProfile, t_end: f64, da: f64) -> Result<RenewalTrace> {
    let steps = step_count(t_end, da)?;
    let initial_cells = (g.support_cutoff(INITIAL_TAIL) / da).ceil() as usize;
    let grid = AgeGrid::covering(da, initial_cells, steps)?;
    solve_age_homogeneous_on(model, g, t_end, &grid)
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("final time must be nonnegative, got {t_end}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// Renewal equation without space on a given (possibly truncated) age grid.
pub fn solve_age_homogeneous_on(
    model: &HazardModel,
    g: &AgeProfile,
    t_end: f64,
    grid: &AgeGrid,
) -> Result<RenewalTrace> {
    check_age_profile(g)?;
    let steps = step_count(t_end, grid.da)?;
    let tab = Tables::new(model, grid);
    let (ratios, discarded) = initial_ratios(g, &tab, grid.da);
    let initial_ratio_max = ratios.iter().copied().fold(0.0, f64::max);
    let mut cohorts = Cohorts::new(ratios);
    let initial_mass = cohorts.density(&tab);
    let stride = mass_stride(steps);
    let mut trace = RenewalTrace {
        dt: grid.da,
        flux: Vec::with_capacity(steps),
        mass_times: vec![0.0],
        mass: vec![initial_mass],
        initial_mass,
        discarded_mass: discarded,
        overflow_mass: 0.0,
        snapshots: Vec::new(),
        initial_ratio_max,
        ratio_max: initial_ratio_max,
        flux_min: f64::INFINITY,
    };
    for n in 0..steps {
        let u = cohorts.step(&tab, 1.0);
        trace.flux.push(u);
        trace.ratio_max = trace.ratio_max.max(u);
        trace.flux_min = trace.flux_min.min(u);
        if (n + 1) % stride == 0 || n + 1 == steps {
            trace.mass_times.push((n + 1) as f64 * grid.da);
            trace.mass.push(cohorts.density(&tab));
        }
    }
    trace.overflow_mass = cohorts.overflow;
    trace.check_mass()?;
    Ok(trace)
}

/// How the jump operator acts on a Fourier mode of the space grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolMode {
    /// Exact transform of the continuous kernel at the mode's wavenumber.
    Exact,
    /// Eigenvalue of the cell-averaged discrete convolution.
    CellAveraged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgeSpaceConfig {
    pub model: HazardModel,
    pub initial: InitialAgeData,
    pub kernel: JumpKernel,
    pub beta: f64,
    pub t_end: f64,
    pub da: f64,
    /// Cells on the periodic domain `[0, 2π)`.
    pub space_cells: usize,
    pub symbol: SymbolMode,
    /// Macroscopic output times; each is moved to the nearest step.
    pub snapshot_times: Vec<f64>,
    /// Explicit age cap; by default the grid covers every reachable age.
    pub age_max: Option<f64>,
    /// Reject time scalings other than the diffusive balance.
    pub enforce_scaling: bool,
}

impl AgeSpaceConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = self.kernel.epsilon;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.enforce_scaling {
            let expected = match self.model {
                HazardModel::PowerLaw { alpha } if alpha < 1.0 => 2.0 / alpha,
                _ => 2.0,
            };
            if (self.beta - expected).abs() > 1e-9 * expected {
                return Err(Error::Config(format!(
                    "time scaling beta = {} does not match the diffusive balance {expected}",
                    self.beta
                )));
            }
        }
        if self.space_cells < 2 {
            return Err(Error::Config("space grid needs at least two cells".into()));
        }
        let dx = PERIOD / self.space_cells as f64;
        if self.kernel.shape != KernelShape::Delta && dx > eps / 4.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "space step {dx} does not resolve the jump length {eps} (need at least 8 cells across 2 eps)"
            )));
        }
        self.initial.validate(&self.model)?;
        check_age_profile(&self.initial.age)
    }

    /// Internal time step in macroscopic units, `ε^β Δa`.
    pub fn macro_dt(&self) -> f64 {
        self.kernel.epsilon.powf(self.beta) * self.da
    }
}

fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn symbols(cfg: &AgeSpaceConfig) -> Result<Vec<f64>> {
    let n = cfg.space_cells;
    match cfg.symbol {
        SymbolMode::Exact => Ok((0..n)
            .map(|k| cfg.kernel.symbol(cfg.kernel.epsilon * wavenumber(k, n)))
            .collect()),
        SymbolMode::CellAveraged => {
            let weights = cfg.kernel.cell_weights(PERIOD / n as f64)?;
            Ok((0..n)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    weights.iter().map(|&(m, w)| w * (theta * m as f64).cos()).sum()
                })
                .collect())
        }
    }
}

struct ModeRun {
    k: usize,
    flux: Vec<Complex64>,
    densities: Vec<Complex64>,
    masses: Vec<Complex64>,
    overflow: Complex64,
}

/// Scaled age-structured jump model on the periodic domain.
pub fn solve_age_space(cfg: &AgeSpaceConfig) -> Result<RenewalTrace> {
    cfg.validate()?;
    let h = cfg.da;
    let dt = cfg.macro_dt();
    let steps = step_count(cfg.t_end, dt)?;
    let g = cfg.initial.age;
    let grid = match cfg.age_max {
        Some(a) => AgeGrid::new(h, ((a / h).ceil() as usize).max(1))?,
        None => AgeGrid::covering(h, (g.support_cutoff(INITIAL_TAIL) / h).ceil() as usize, steps)?,
    };
    let tab = Tables::new(&cfg.model, &grid);
    let (age_ratios, discarded) = initial_ratios(&g, &tab, h);

    let n = cfg.space_cells;
    let dx = PERIOD / n as f64;
    let x: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dx).collect();
    let rho0: Vec<f64> = (0..n)
        .map(|j| cfg.initial.spatial.cell_average(j as f64 * dx, (j + 1) as f64 * dx))
        .collect();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex64> = rho0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut spectrum);

    let scale = spectrum[0].norm().max(f64::MIN_POSITIVE);
    let modes: Vec<usize> = (0..=n / 2).filter(|&k| spectrum[k].norm() > 1e-14 * scale).collect();
    let sigma = symbols(cfg)?;

    let mut snap_steps: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|&t| ((t / dt).round() as usize).min(steps))
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();
    let stride = mass_stride(steps);
    let is_mass_step = |s: usize| s % stride == 0 || s == steps;

    let runs = par::map(modes.len(), |i| {
        let k = modes[i];
        let c = spectrum[k];
        let init: Vec<Complex64> = age_ratios.iter().map(|&q| c * q).collect();
        let mut cohorts = Cohorts::new(init);
        let mut densities = Vec::with_capacity(snap_steps.len());
        let mut masses = Vec::new();
        let mut next_snap = 0;
        for s in 0..=steps {
            while next_snap < snap_steps.len() && snap_steps[next_snap] == s {
                densities.push(cohorts.density(&tab));
                next_snap += 1;
            }
            if k == 0 && is_mass_step(s) {
                masses.push(cohorts.density(&tab));
            }
            if s < steps {
                cohorts.step(&tab, sigma[k]);
            }
        }
        ModeRun { k, flux: cohorts.born, densities, masses, overflow: cohorts.overflow }
    });

    let to_physical = |coeffs: &dyn Fn(&ModeRun) -> Complex64, buf: &mut Vec<Complex64>| {
        buf.iter_mut().for_each(|b| *b = Complex64::default());
        for run in &runs {
            let v = coeffs(run);
            buf[run.k] = v;
            if run.k != 0 && 2 * run.k != n {
                buf[n - run.k] = v.conj();
            }
        }
        inverse.process(buf);
        buf.iter_mut().for_each(|b| *b = *b / n as f64);
    };

    let mut buf = vec![Complex64::default(); n];
    let mode0 = runs.iter().find(|r| r.k == 0);
    let to_mass = |v: Complex64| v.re * dx;

    let rho0_max = rho0.iter().copied().fold(0.0, f64::max);
    let age_max_ratio = age_ratios.iter().copied().fold(0.0, f64::max);
    let initial_ratio_max = rho0_max * age_max_ratio;
    let mut ratio_max = initial_ratio_max;
    let mut flux_min = f64::INFINITY;
    let mut flux = Vec::with_capacity(steps);
    for s in 0..steps {
        to_physical(&|r: &ModeRun| r.flux[s], &mut buf);
        for b in &buf {
            ratio_max = ratio_max.max(b.re);
            flux_min = flux_min.min(b.re);
        }
        flux.push(mode0.map_or(0.0, |r| to_mass(r.flux[s])));
    }

    let mut snapshots = Vec::with_capacity(snap_steps.len());
    for (i, &s) in snap_steps.iter().enumerate() {
        to_physical(&|r: &ModeRun| r.densities[i], &mut buf);
        snapshots.push(Snapshot {
            t: s as f64 * dt,
            x: x.clone(),
            rho: buf.iter().map(|b| b.re).collect(),
        });
    }

    let mass_times: Vec<f64> = (0..=steps).filter(|&s| is_mass_step(s)).map(|s| s as f64 * dt).collect();
    let mass: Vec<f64> = mode0.map_or(vec![0.0; mass_times.len()], |r| {
        r.masses.iter().map(|&v| to_mass(v)).collect()
    });
    let initial_mass = mass.first().copied().unwrap_or(0.0);
    let trace = RenewalTrace {
        dt,
        flux,
        mass_times,
        mass,
        initial_mass,
        discarded_mass: discarded,
        overflow_mass: mode0.map_or(0.0, |r| to_mass(r.overflow)),
        snapshots,
        initial_ratio_max,
        ratio_max,
        flux_min,
    };
    if initial_mass > 0.0 {
        trace.check_mass()?;
    }
    Ok(trace)
}

/// `(lhs, rhs)` of the exact renewal integral identity at time `t`:
/// `∫_0^t U(τ)(1+t-τ)^{-α} dτ = ∫g - ∫ g(a)(1+a)^α(1+t+a)^{-α} da`.
///
/// The flux is integrated exactly as a step function.
pub fn renewal_integral_check(trace: &RenewalTrace, g: &AgeProfile, alpha: f64, t: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(t >= 0.0 && t <= trace.t_end() * (1.0 + 1e-12)) {
        return Err(Error::domain(format!("time {t} outside the trace range [0, {}]", trace.t_end())));
    }
    let e = 1.0 - alpha;
    let mut lhs = 0.0;
    for (n, &u) in trace.flux.iter().enumerate() {
        let a = n as f64 * trace.dt;
        if a >= t {
            break;
        }
        let b = ((n + 1) as f64 * trace.dt).min(t);
        lhs += u * ((1.0 + t - a).powf(e) - (1.0 + t - b).powf(e)) / e;
    }
    let cut = g.support_cutoff(1e-17);
    let q = Quadrature::new(1e-15, 1e-12);
    let decay = q
        .integrate_with_breaks(
            |a: f64| g.density(a) * ((1.0 + a) / (1.0 + t + a)).powf(alpha),
            &[0.0, 1.0, 4.0, 16.0, cut.max(32.0)],
        )?
        .value;
    let mass = g.mass_between(0.0, f64::INFINITY);
    Ok((lhs, mass - decay))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Holds,
    Violated,
    /// The truncated trace cannot decide; the tail estimate could close the gap.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub delta: f64,
    /// `∫_0^T t^{-α-δ} U dt`.
    pub lower_integral: f64,
    /// `∫_1^T t^{-α-δ} U dt`.
    pub upper_integral: f64,
    /// Estimate of `∫_T^∞ t^{-α-δ} U dt` assuming `U ∝ t^{α-1}` past `T`.
    pub tail_estimate: f64,
    /// `C₊` with `∫_1^∞ t^{-α-δ} U ≤ C₊/δ`.
    pub upper_constant: f64,
    /// `C₋` with `∫_0^∞ t^{-α-δ} U ≥ C₋/δ`.
    pub lower_constant: f64,
    pub upper: BoundStatus,
    pub lower: BoundStatus,
}

/// `∫_a^b t^{-q} dt` for `0 ≤ a < b`, infinite when it diverges at 0.
fn power_integral(q: f64, a: f64, b: f64) -> f64 {
    if (q - 1.0).abs() < 1e-14 {
        if a == 0.0 {
            f64::INFINITY
        } else {
            (b / a).ln()
        }
    } else if q > 1.0 && a == 0.0 {
        f64::INFINITY
    } else {
        (b.powf(1.0 - q) - a.powf(1.0 - q)) / (1.0 - q)
    }
}

/// Weighted integrals of the renewal flux against the two decay bounds.
///
/// With `q = α + δ`, `M = ∫g` and `c₁ = M - ∫ g ((1+a)/(2+a))^α`:
/// `C₊ = M q` and `C₋ = c₁ / (2^{1-α}/(1-α) + 1/q)`.
pub fn decay_weighted_integrals(trace: &RenewalTrace, g: &AgeProfile, alpha: f64, delta: f64) -> Result<DecayReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let q = alpha + delta;
    let mut lower_integral = 0.0;
    let mut upper_integral = 0.0;
    for (n, &u) in trace.flux.iter().enumerate() {
        let a = n as f64 * trace.dt;
        let b = a + trace.dt;
        if u != 0.0 {
            lower_integral += u * power_integral(q, a, b);
        }
        if b > 1.0 && u != 0.0 {
            upper_integral += u * power_integral(q, a.max(1.0), b);
        }
    }
    let t_end = trace.t_end();
    let u_end = trace.flux.last().copied().unwrap_or(0.0);
    let tail_estimate = if t_end > 0.0 { u_end * t_end.powf(1.0 - q) / delta } else { 0.0 };

    let mass = g.mass_between(0.0, f64::INFINITY);
    let quad = Quadrature::new(1e-15, 1e-12);
    let cut = g.support_cutoff(1e-17).max(32.0);
    let near = quad
        .integrate_with_breaks(
            |a: f64| g.density(a) * ((1.0 + a) / (2.0 + a)).powf(alpha),
            &[0.0, 1.0, 4.0, 16.0, cut],
        )?
        .value;
    let c1 = mass - near;
    let upper_constant = mass * q;
    let lower_constant = c1 / (2f64.powf(1.0 - alpha) / (1.0 - alpha) + 1.0 / q);
    let upper_bound = upper_constant / delta;
    let lower_bound = lower_constant / delta;

    let upper = if upper_integral > upper_bound {
        BoundStatus::Violated
    } else if upper_integral + tail_estimate <= upper_bound {
        BoundStatus::Holds
    } else {
        BoundStatus::Inconclusive
    };
    let lower = if lower_integral >= lower_bound {
        BoundStatus::Holds
    } else if lower_integral + tail_estimate < lower_bound {
        BoundStatus::Violated
    } else {
        BoundStatus::Inconclusive
    };
    Ok(DecayReport {
        delta,
        lower_integral,
        upper_integral,
        tail_estimate,
        upper_constant,
        lower_constant,
        upper,
        lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpatialProfile;

    fn power(alpha: f64) -> HazardModel {
        HazardModel::power_law(alpha).unwrap()
    }

    #[test]
    fn constant_rate_equilibrium_is_stationary() {
        let d0 = 1.7;
        let trace = solve_age_homogeneous(
            &HazardModel::constant(d0).unwrap(),
            &AgeProfile::Exponential { rate: d0 },
            20.0,
            0.05,
        )
        .unwrap();
        for u in &trace.flux {
            assert!((u - d0).abs() < 1e-10, "{u}");
        }
    }

    #[test]
    fn power_law_run_conserves_mass() {
        let trace = solve_age_homogeneous(&power(0.5), &AgeProfile::default(), 50.0, 0.05).unwrap();
        assert!(trace.max_mass_drift() < 1e-12);
        assert!((trace.initial_mass - 1.0).abs() < 1e-12);
        assert!(trace.flux_min >= 0.0);
        assert!(trace.ratio_max <= trace.initial_ratio_max + 1e-12);
    }

    #[test]
    fn renewal_identity_vanishes_at_start() {
        let g = AgeProfile::default();
        let trace = solve_age_homogeneous(&power(0.5), &g, 5.0, 0.05).unwrap();
        let (l, r) = renewal_integral_check(&trace, &g, 0.5, 0.0).unwrap();
        assert_eq!(l, 0.0);
        assert!(r.abs() < 1e-14);
        assert!(renewal_integral_check(&trace, &g, 0.5, 6.0).is_err());
    }

    #[test]
    fn truncated_age_grid_uses_overflow() {
        let g = AgeProfile::default();
        let grid = AgeGrid::new(0.1, 50).unwrap();
        let trace = solve_age_homogeneous_on(&power(0.5), &g, 30.0, &grid).unwrap();
        assert!(trace.overflow_mass > 0.0);
        assert!(trace.max_mass_drift() < 1e-12);
    }

    #[test]
    fn negative_age_rate_is_rejected() {
        let r = solve_age_homogeneous(&power(0.5), &AgeProfile::Exponential { rate: -1.0 }, 1.0, 0.1);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn zero_flux_violates_lower_bound() {
        let trace = RenewalTrace {
            dt: 1.0,
            flux: vec![0.0; 100],
            mass_times: vec![],
            mass: vec![],
            initial_mass: 1.0,
            discarded_mass: 0.0,
            overflow_mass: 0.0,
            snapshots: vec![],
            initial_ratio_max: 0.0,
            ratio_max: 0.0,
            flux_min: 0.0,
        };
        let r = decay_weighted_integrals(&trace, &AgeProfile::default(), 0.5, 0.5).unwrap();
        assert_eq!(r.lower, BoundStatus::Violated);
        assert_eq!(r.upper, BoundStatus::Holds);
    }

    fn space_config(kernel: JumpKernel, symbol: SymbolMode) -> AgeSpaceConfig {
        AgeSpaceConfig {
            model: power(0.5),
            initial: InitialAgeData::new(SpatialProfile::Cosine, AgeProfile::default()),
            kernel,
            beta: 4.0,
            t_end: 0.05,
            da: 0.5,
            space_cells: 128,
            symbol,
            snapshot_times: vec![0.0, 0.05],
            age_max: None,
            enforce_scaling: true,
        }
    }

    #[test]
    fn without_jumps_profile_is_frozen() {
        let kernel = JumpKernel::new(KernelShape::Delta, 0.3).unwrap();
        let trace = solve_age_space(&space_config(kernel, SymbolMode::Exact)).unwrap();
        let (a, b) = (&trace.snapshots[0], &trace.snapshots[1]);
        for (u, v) in a.rho.iter().zip(&b.rho) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_run_conserves_mass_and_comparison() {
        let kernel = JumpKernel::triangular(0.3).unwrap();
        for symbol in [SymbolMode::Exact, SymbolMode::CellAveraged] {
            let trace = solve_age_space(&space_config(kernel, symbol)).unwrap();
            assert!(trace.max_mass_drift() < 1e-10);
            assert!((trace.initial_mass - PERIOD).abs() < 1e-10);
            assert!(trace.ratio_max <= trace.initial_ratio_max + 1e-12);
            assert!(trace.flux_min >= -1e-14);
        }
    }

    #[test]
    fn unresolved_kernel_is_a_config_error() {
        let mut cfg = space_config(JumpKernel::triangular(0.01).unwrap(), SymbolMode::Exact);
        cfg.space_cells = 64;
        assert!(matches!(solve_age_space(&cfg), Err(Error::Config(_))));
        let mut cfg = space_config(JumpKernel::triangular(0.3).unwrap(), SymbolMode::Exact);
        cfg.beta = 3.0;
        assert!(matches!(solve_age_space(&cfg), Err(Error::Config(_))));
    }
}
