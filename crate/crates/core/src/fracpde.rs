//! Macroscopic limits on the periodic domain: normal diffusion, and
//! sub-diffusion with the memory operator `∂_t ∫_0^t f(τ)(t-τ)^{-α} dτ`.
//!
//! The sub-diffusion solver works with `v = ρ - ρ⁰`, `v(0) = 0`, which turns
//! the singular `t^{-α} ρ⁰` source into the regular `∂²(Aρ⁰)`. The memory
//! term uses the L1 scheme (exact for piecewise-linear histories) and the
//! diffusion term is implicit with the centered second difference.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::laplace::gamma_alpha;
use crate::model::{AgeProfile, HazardModel, InitialAgeData, SpatialProfile, PERIOD};
use crate::quad::Quadrature;

/// Uniform cell grid on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    pub cells: usize,
}

impl PeriodicGrid {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::Config(format!("periodic grid needs at least 3 cells, got {cells}")));
        }
        Ok(PeriodicGrid { cells })
    }

    pub fn dx(&self) -> f64 {
        PERIOD / self.cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| (j as f64 + 0.5) * self.dx()).collect()
    }

    pub fn cell_averages(&self, profile: &SpatialProfile) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells)
            .map(|j| profile.cell_average(j as f64 * dx, (j + 1) as f64 * dx))
            .collect()
    }

    /// Eigenvalue of `-δ²/δx²` on DFT mode `k`.
    fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let dx = self.dx();
        (2.0 - 2.0 * (2.0 * PI * k as f64 / self.cells as f64).cos()) / (dx * dx)
    }
}

/// Signed integer wavenumber of DFT index `k` on `n` points.
fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// L1 weights `b_m = (m+1)^{1-α} - m^{1-α}` and the scale `Δt^{-α}/(1-α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryWeights {
    pub alpha: f64,
    pub dt: f64,
    b: Vec<f64>,
}

impl MemoryWeights {
    pub fn new(alpha: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        let e = 1.0 - alpha;
        let b = (0..steps.max(1))
            .map(|m| {
                let m = m as f64;
                (m + 1.0).powf(e) - m.powf(e)
            })
            .collect();
        Ok(MemoryWeights { alpha, dt, b })
    }

    pub fn scale(&self) -> f64 {
        self.dt.powf(-self.alpha) / (1.0 - self.alpha)
    }

    /// Weight of the newest increment, `scale · b_0`.
    pub fn newest(&self) -> f64 {
        self.scale() * self.b[0]
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// Discrete memory operator at `t_k` for the samples `f_0..=f_k`:
/// `f_0 t_k^{-α} + Δt^{-α}/(1-α) Σ_{j=1..k} b_{k-j}(f_j - f_{j-1})`.
pub fn memory_operator(history: &[f64], weights: &MemoryWeights, k: usize) -> Result<f64> {
    if k == 0 || k >= history.len() || k > weights.len() {
        return Err(Error::domain(format!(
            "step {k} outside the available history of {} samples",
            history.len()
        )));
    }
    let t = k as f64 * weights.dt;
    let mut sum = 0.0;
    for j in 1..=k {
        sum += weights.b[k - j] * (history[j] - history[j - 1]);
    }
    Ok(history[0] * t.powf(-weights.alpha) + weights.scale() * sum)
}

/// Densities on a uniform time grid, `values[k] = ρ(kΔt)` on the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistory {
    pub dt: f64,
    pub grid: PeriodicGrid,
    pub rho0: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Most negative density value encountered (positivity is not guaranteed).
    pub min_value: f64,
}

impl DensityHistory {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Step index closest to `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(k >= 0.0 && k as usize <= self.steps()) {
            return Err(Error::domain(format!("time {t} outside the computed history")));
        }
        Ok(k as usize)
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.values[k].iter().sum::<f64>() * self.grid.dx()
    }

    /// `v = ρ - ρ⁰` at step `k`.
    pub fn deviation(&self, k: usize) -> Vec<f64> {
        self.values[k].iter().zip(&self.rho0).map(|(r, r0)| r - r0).collect()
    }
}

/// Coefficients of `∂_t ∫ ρ/(t-τ)^α - f·∂²(Aρ) = t^{-α}ρ⁰`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffusionParams {
    pub alpha: f64,
    /// Diffusion coefficient `A`.
    pub a_coef: f64,
    /// Factor `f` in front of `A`.
    pub moment_factor: f64,
}

impl SubdiffusionParams {
    pub fn effective(&self) -> f64 {
        self.a_coef * self.moment_factor
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.a_coef > 0.0 && self.moment_factor > 0.0) {
            return Err(Error::Config("diffusion coefficient and moment factor must be positive".into()));
        }
        Ok(())
    }
}

/// Solves `(c - D δ²) x = rhs` on the periodic grid through the DFT.
struct CirculantSolver {
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv_diag: Vec<f64>,
    buf: Vec<Complex64>,
}

impl CirculantSolver {
    fn new(grid: &PeriodicGrid, shift: f64, diffusion: f64) -> Result<Self> {
        let n = grid.cells;
        let mut planner = FftPlanner::new();
        let inv_diag: Vec<f64> = (0..n)
            .map(|k| 1.0 / (shift + diffusion * grid.laplacian_eigenvalue(k)))
            .collect();
        if inv_diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical("singular implicit system".into()));
        }
        Ok(CirculantSolver {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            inv_diag,
            buf: vec![Complex64::default(); n],
        })
    }

    fn solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len() as f64;
        for (b, &r) in self.buf.iter_mut().zip(rhs) {
            *b = Complex64::new(r, 0.0);
        }
        self.forward.process(&mut self.buf);
        for (b, d) in self.buf.iter_mut().zip(&self.inv_diag) {
            *b *= *d / n;
        }
        self.inverse.process(&mut self.buf);
        self.buf.iter().map(|b| b.re).collect()
    }
}

fn second_difference(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| (f[(j + 1) % n] - 2.0 * f[j] + f[(j + n - 1) % n]) / (dx * dx))
        .collect()
}

fn check_time_grid(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("final time must be nonnegative, got {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// Sub-diffusion equation with zero history before `t = 0` and source `t^{-α}ρ⁰`.
pub fn solve_subdiffusion(
    params: &SubdiffusionParams,
    rho0: &SpatialProfile,
    grid: &PeriodicGrid,
    dt: f64,
    t_end: f64,
) -> Result<DensityHistory> {
    params.validate()?;
    let steps = check_time_grid(dt, t_end)?;
    let weights = MemoryWeights::new(params.alpha, dt, steps)?;
    let d = params.effective();
    let base = grid.cell_averages(rho0);
    let source: Vec<f64> = second_difference(&base, grid.dx()).iter().map(|s| d * s).collect();
    let newest = weights.newest();
    let mut solver = CirculantSolver::new(grid, newest, d)?;
    let n = grid.cells;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    v.push(vec![0.0; n]);
    let mut rhs = vec![0.0; n];
    for k in 1..=steps {
        // c b_0 v_k - D δ² v_k = D δ² ρ⁰ + c b_0 v_{k-1} - c Σ_{j<k} b_{k-j}(v_j - v_{j-1})
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = source[i] + newest * v[k - 1][i];
        }
        for j in 1..k {
            let w = weights.scale() * weights.b[k - j];
            let (cur, prev) = (&v[j], &v[j - 1]);
            for i in 0..n {
                rhs[i] -= w * (cur[i] - prev[i]);
            }
        }
        v.push(solver.solve(&rhs));
    }
    let mut min_value = f64::INFINITY;
    let values: Vec<Vec<f64>> = v
        .iter()
        .map(|vk| {
            vk.iter()
                .zip(&base)
                .map(|(a, b)| {
                    let r = a + b;
                    min_value = min_value.min(r);
                    r
                })
                .collect()
        })
        .collect();
    Ok(DensityHistory { dt, grid: *grid, rho0: base, values, min_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    ImplicitEuler,
    CrankNicolson,
}

/// `∂_t ρ = D₀ f ∂²(Aρ)`, `ρ(0) = ρ⁰`.
pub fn solve_diffusion(
    d0: f64,
    params: &SubdiffusionParams,
    rho0: &SpatialProfile,
    grid: &PeriodicGrid,
    dt: f64,
    t_end: f64,
    scheme: TimeScheme,
) -> Result<DensityHistory> {
    if !(d0 > 0.0 && d0.is_finite()) {
        return Err(Error::Config(format!("escape rate must be positive, got {d0}")));
    }
    if !(params.a_coef > 0.0 && params.moment_factor > 0.0) {
        return Err(Error::Config("diffusion coefficient and moment factor must be positive".into()));
    }
    let steps = check_time_grid(dt, t_end)?;
    let d = d0 * params.effective();
    let theta = match scheme {
        TimeScheme::ImplicitEuler => 1.0,
        TimeScheme::CrankNicolson => 0.5,
    };
    let mut solver = CirculantSolver::new(grid, 1.0 / dt, theta * d)?;
    let base = grid.cell_averages(rho0);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(base.clone());
    let mut min_value = base.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 1..=steps {
        let prev: &Vec<f64> = &values[k - 1];
        let lap = second_difference(prev, grid.dx());
        let rhs: Vec<f64> = prev
            .iter()
            .zip(&lap)
            .map(|(p, l)| p / dt + (1.0 - theta) * d * l)
            .collect();
        let next = solver.solve(&rhs);
        min_value = next.iter().copied().fold(min_value, f64::min);
        values.push(next);
    }
    Ok(DensityHistory { dt, grid: *grid, rho0: base, values, min_value })
}

/// `E_α(z)` for `0 < α ≤ 1`, `z ≤ 0`.
///
/// Power series for `|z| ≤ 1`; beyond, the Laplace-type representation
/// `E_α(-t^α) = ∫_0^∞ e^{-rt} K_α(r) dr` with the spectral density
/// `K_α(r) = r^{α-1} sin(απ) / (π (r^{2α} + 2 r^α cos(απ) + 1))`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("argument must be a finite nonpositive number, got {z}")));
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    if z >= -1.0 {
        let mut sum = 1.0;
        let mut power = z;
        for k in 1..200 {
            let term = power / gamma(alpha * k as f64 + 1.0);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 4 {
                break;
            }
            power *= z;
        }
        return Ok(sum);
    }
    let t = (-z).powf(1.0 / alpha);
    let (s, c) = (alpha * PI).sin_cos();
    let kernel = |r: f64| {
        let ra = r.powf(alpha);
        (-r * t).exp() * r.powf(alpha - 1.0) * s / (PI * (ra * ra + 2.0 * ra * c + 1.0))
    };
    let q = Quadrature::new(1e-16, 1e-13);
    let head = q.integrate_left_singular(kernel, 0.0, 1.0, 1.0 - alpha)?.value;
    let cut = (45.0 / t).max(2.0);
    let mut edges = vec![1.0];
    let mut e = 2.0;
    while e < cut {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(cut);
    let body = q.integrate_with_breaks(kernel, &edges)?.value;
    Ok(head + body)
}

fn modal_evolution(profile: &SpatialProfile, grid: &PeriodicGrid, factor: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let n = grid.cells;
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = grid
        .cell_averages(profile)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let m = wavenumber(k, n);
        *b *= factor(m * m)?;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|b| b.re / n as f64).collect())
}

/// Cell averages of the exact sub-diffusion solution: each Fourier mode of
/// `ρ⁰` relaxes as `E_α(-D k² t^α / Γ(1-α))` with `D = A f`.
pub fn modal_subdiffusion(params: &SubdiffusionParams, profile: &SpatialProfile, grid: &PeriodicGrid, t: f64) -> Result<Vec<f64>> {
    params.validate()?;
    let g = gamma_alpha(params.alpha)?;
    let d = params.effective();
    modal_evolution(profile, grid, |k2| {
        mittag_leffler(params.alpha, -d * k2 * t.powf(params.alpha) / g)
    })
}

/// Cell averages of the exact diffusion solution.
pub fn modal_diffusion(d_eff: f64, profile: &SpatialProfile, grid: &PeriodicGrid, t: f64) -> Result<Vec<f64>> {
    modal_evolution(profile, grid, |k2| Ok((-d_eff * k2 * t).exp()))
}

/// Both sides of the fractional chain rule at `t` and their relative mismatch:
/// `½∂_t∫v²/(t-τ)^α + v²/(2t^α) + (α/2)∫|v(τ)-v(t)|²/(t-τ)^{α+1} = v ∂_t∫v/(t-τ)^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRuleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluates the chain rule for `v` with derivative `dv`; requires `v(0) = 0`.
pub fn chain_rule_residual(
    v: impl Fn(f64) -> f64,
    dv: impl Fn(f64) -> f64,
    alpha: f64,
    t: f64,
) -> Result<ChainRuleCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    if v(0.0) != 0.0 {
        return Err(Error::Precondition("the chain rule needs v(0) = 0".into()));
    }
    let q = Quadrature::new(1e-15, 1e-12);
    let vt = v(t);
    // all integrals in s = t - τ
    let memory_sq = q
        .integrate_right_singular(|s: f64| v(t - s) * dv(t - s) * s.powf(-alpha), 0.0, t, alpha)?
        .value;
    let boundary = vt * vt / (2.0 * t.powf(alpha));
    let spread = 0.5
        * alpha
        * q.integrate_left_singular(
            |s: f64| {
                let e = v(t - s) - vt;
                if s == 0.0 {
                    0.0
                } else {
                    e * e * s.powf(-alpha - 1.0)
                }
            },
            0.0,
            t,
            alpha,
        )?
        .value;
    let memory = q
        .integrate_left_singular(|s: f64| dv(t - s) * s.powf(-alpha), 0.0, t, alpha)?
        .value;
    let lhs = memory_sq + boundary + spread;
    let rhs = vt * memory;
    let residual = if rhs == 0.0 { lhs.abs() } else { ((lhs - rhs) / rhs).abs() };
    Ok(ChainRuleCheck { lhs, rhs, residual })
}

/// Terms of the `H¹` energy identity for `v = ρ - ρ⁰` at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `½ ∂_t ∫∫ v²/(t-τ)^α`.
    pub memory: f64,
    /// `∫ |∇v|²`.
    pub gradient: f64,
    /// `(α/2) ∫∫ |v(τ)-v(t)|²/(t-τ)^{α+1}`.
    pub spread: f64,
    /// `∫ v²/(2t^α)`.
    pub boundary: f64,
    /// `-∫ ∇v·∇ρ⁰`.
    pub rhs: f64,
    pub residual: f64,
}

fn power_moment(p: f64, a: f64, b: f64) -> f64 {
    if (p + 1.0).abs() < 1e-14 {
        (b / a).ln()
    } else {
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
    }
}

/// Energy identity on the piecewise-linear-in-time interpolant of a
/// sub-diffusion run at step `k`. Requires `A f = 1`.
pub fn energy_balance(history: &DensityHistory, params: &SubdiffusionParams, k: usize) -> Result<EnergyReport> {
    if (params.effective() - 1.0).abs() > 1e-12 {
        return Err(Error::Unsupported(
            "the energy identity is implemented for unit diffusion only".into(),
        ));
    }
    if k == 0 || k > history.steps() {
        return Err(Error::domain(format!("step {k} outside the computed history")));
    }
    let alpha = params.alpha;
    let dt = history.dt;
    let dx = history.grid.dx();
    let n = history.grid.cells;
    let t = k as f64 * dt;
    let v: Vec<Vec<f64>> = (0..=k).map(|j| history.deviation(j)).collect();
    let vk = &v[k];

    let mut memory = 0.0;
    let mut spread = 0.0;
    for j in 1..=k {
        // τ ∈ [t_{j-1}, t_j] ↔ s = t - τ ∈ [s_lo, s_lo + Δt]
        let s_lo = (k - j) as f64 * dt;
        let s_hi = s_lo + dt;
        let m0 = power_moment(-alpha, s_lo, s_hi);
        let m1 = power_moment(1.0 - alpha, s_lo, s_hi);
        let mm1 = if j == k { 0.0 } else { power_moment(-alpha - 1.0, s_lo, s_hi) };
        for i in 0..n {
            let slope = -(v[j][i] - v[j - 1][i]) / dt;
            // v(t - s) = c + slope s on this interval
            let c = v[j][i] - slope * s_lo;
            memory += -slope * (c * m0 + slope * m1);
            let a = c - vk[i];
            let quad = if j == k {
                slope * slope * m1
            } else {
                a * a * mm1 + 2.0 * a * slope * m0 + slope * slope * m1
            };
            spread += quad;
        }
    }
    memory *= dx;
    spread *= 0.5 * alpha * dx;
    let boundary = vk.iter().map(|x| x * x).sum::<f64>() * dx / (2.0 * t.powf(alpha));
    let mut gradient = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        let dv = (vk[(i + 1) % n] - vk[i]) / dx;
        let dr = (history.rho0[(i + 1) % n] - history.rho0[i]) / dx;
        gradient += dv * dv;
        rhs -= dv * dr;
    }
    gradient *= dx;
    rhs *= dx;
    let scale = [memory.abs(), gradient, spread.abs(), boundary, rhs.abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let residual = if scale == 0.0 {
        0.0
    } else {
        (memory + gradient + spread + boundary - rhs).abs() / scale
    };
    Ok(EnergyReport { t, memory, gradient, spread, boundary, rhs, residual })
}

/// `max over cells of ½∂_t∫v²/(t-τ)^α - v ∂_t∫v/(t-τ)^α` at step `k`; the
/// convexity inequality asserts this is `≤ 0`.
pub fn convexity_gap(history: &DensityHistory, alpha: f64, k: usize) -> Result<f64> {
    let weights = MemoryWeights::new(alpha, history.dt, k.max(1))?;
    let dt = history.dt;
    let n = history.grid.cells;
    let v: Vec<Vec<f64>> = (0..=k).map(|j| history.deviation(j)).collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let series: Vec<f64> = v.iter().map(|vj| vj[i]).collect();
        let op = memory_operator(&series, &weights, k)?;
        let mut half_sq = 0.0;
        for j in 1..=k {
            let s_lo = (k - j) as f64 * dt;
            let s_hi = s_lo + dt;
            let slope = -(series[j] - series[j - 1]) / dt;
            let c = series[j] - slope * s_lo;
            half_sq += -slope * (c * power_moment(-alpha, s_lo, s_hi) + slope * power_moment(1.0 - alpha, s_lo, s_hi));
        }
        worst = worst.max(half_sq - series[k] * op);
    }
    Ok(worst)
}

/// `∫∫ |∂_a u⁰ + d(a) u⁰| da dx`, the size of the departure of the initial
/// data from the local age equilibrium.
pub fn near_equilibrium_residual(model: &HazardModel, initial: &InitialAgeData) -> Result<f64> {
    let g = initial.age;
    let q = Quadrature::new(1e-14, 1e-11);
    let cut = g.support_cutoff(1e-17).max(32.0);
    let age_part = match g {
        AgeProfile::Exponential { rate } => q
            .integrate_with_breaks(
                |a: f64| ((model.hazard_unchecked(a) - rate) * g.density(a)).abs(),
                &[0.0, 1.0, 4.0, 16.0, cut],
            )?
            .value,
    };
    Ok(age_part * initial.spatial.mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    #[test]
    fn l1_operator_is_exact_on_ramps_and_steps() {
        let dt = 0.01;
        let w = MemoryWeights::new(0.5, dt, 200).unwrap();
        let ramp: Vec<f64> = (0..=200).map(|k| k as f64 * dt).collect();
        for k in [1, 7, 100, 200] {
            let t = k as f64 * dt;
            assert!((memory_operator(&ramp, &w, k).unwrap() - 2.0 * t.sqrt()).abs() < 1e-12);
        }
        let step = vec![1.0; 201];
        assert!((memory_operator(&step, &w, 100).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(memory_operator(&[0.0; 201], &w, 50).unwrap(), 0.0);
        assert!(memory_operator(&ramp, &w, 0).is_err());
        assert!(memory_operator(&ramp, &w, 201).is_err());
        assert!(w.newest() > 0.0);
    }

    #[test]
    fn mittag_leffler_reference_values() {
        assert_eq!(mittag_leffler(0.5, 0.0).unwrap(), 1.0);
        assert!((mittag_leffler(1.0, -1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        for x in [0.3f64, 1.0, 1.7, 4.0, 10.0] {
            let exact = (x * x).exp() * erfc(x);
            let e = mittag_leffler(0.5, -x).unwrap();
            assert!((e - exact).abs() < 1e-10, "x={x}: {e} vs {exact}");
        }
        assert!((mittag_leffler(0.5, -1.0).unwrap() - 0.427_583_576_155_807).abs() < 1e-10);
        assert!(mittag_leffler(0.5, 1.0).is_err());
        assert!(mittag_leffler(1.5, -1.0).is_err());
    }

    #[test]
    fn mittag_leffler_is_continuous_across_methods() {
        for alpha in [0.3, 0.7, 0.95] {
            let a = mittag_leffler(alpha, -1.0).unwrap();
            let b = mittag_leffler(alpha, -1.0 - 1e-9).unwrap();
            assert!((a - b).abs() < 1e-8, "alpha={alpha}: {a} {b}");
        }
    }

    #[test]
    fn uniform_state_is_stationary() {
        let grid = PeriodicGrid::new(32).unwrap();
        let p = SubdiffusionParams { alpha: 0.5, a_coef: 1.0, moment_factor: 0.5 };
        let h = solve_subdiffusion(&p, &SpatialProfile::Uniform(2.0), &grid, 0.01, 0.5).unwrap();
        for v in h.values.last().unwrap() {
            assert!((v - 2.0).abs() < 1e-13);
        }
        let h = solve_diffusion(1.0, &p, &SpatialProfile::Uniform(2.0), &grid, 0.01, 0.5, TimeScheme::CrankNicolson)
            .unwrap();
        for v in h.values.last().unwrap() {
            assert!((v - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn chain_rule_worked_values() {
        let c = chain_rule_residual(|t| t, |_| 1.0, 0.5, 1.0).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-9 && (c.rhs - 2.0).abs() < 1e-9);
        assert!(c.residual < 1e-8);
        let c = chain_rule_residual(|t| t * t, |t| 2.0 * t, 0.25, 2.0).unwrap();
        assert!(c.residual < 1e-6);
        let z = chain_rule_residual(|_| 0.0, |_| 0.0, 0.5, 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs, z.residual), (0.0, 0.0, 0.0));
        assert!(matches!(
            chain_rule_residual(|t| 1.0 + t, |_| 1.0, 0.5, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn energy_identity_on_cosine_run() {
        let grid = PeriodicGrid::new(64).unwrap();
        let p = SubdiffusionParams { alpha: 0.5, a_coef: 2.0, moment_factor: 0.5 };
        let h = solve_subdiffusion(&p, &SpatialProfile::Cosine, &grid, 0.01, 0.5).unwrap();
        let r = energy_balance(&h, &p, h.steps()).unwrap();
        assert!(r.gradient >= 0.0 && r.spread >= 0.0 && r.boundary >= 0.0);
        assert!(r.residual < 1e-8, "{r:?}");
        let uniform = solve_subdiffusion(&p, &SpatialProfile::Uniform(1.0), &grid, 0.01, 0.1).unwrap();
        let r = energy_balance(&uniform, &p, 5).unwrap();
        assert!(r.memory.abs() < 1e-20 && r.rhs.abs() < 1e-20 && r.residual == 0.0);
        let q = SubdiffusionParams { moment_factor: 1.0, ..p };
        assert!(matches!(energy_balance(&h, &q, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn near_equilibrium_residual_vanishes_at_equilibrium() {
        let m = HazardModel::constant(2.0).unwrap();
        let u0 = InitialAgeData::new(SpatialProfile::Cosine, AgeProfile::Exponential { rate: 2.0 });
        assert!(near_equilibrium_residual(&m, &u0).unwrap() < 1e-14);
        let m = HazardModel::power_law(0.5).unwrap();
        let u0 = InitialAgeData::new(SpatialProfile::Cosine, AgeProfile::default());
        assert!(near_equilibrium_residual(&m, &u0).unwrap() > 0.1);
    }
}
