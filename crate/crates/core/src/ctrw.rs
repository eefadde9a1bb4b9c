//! Particle Monte Carlo of the renewal-with-jumps process.
//!
//! Each particle waits in a trap for a time drawn from the age-conditional
//! survival law, then jumps by `ε` times a normalized displacement and
//! restarts at age zero. Internal time is converted to macroscopic time by
//! `t = ε^β τ`. Every particle owns the ChaCha stream `(seed, index)`, so
//! results do not depend on how particles are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{HazardModel, InitialAgeData, JumpKernel, PERIOD};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct CtrwConfig {
    pub model: HazardModel,
    pub kernel: JumpKernel,
    pub beta: f64,
    pub particles: usize,
    /// Macroscopic times at which positions are recorded, increasing.
    pub snapshot_times: Vec<f64>,
    pub initial: InitialAgeData,
    pub seed: u64,
    pub enforce_scaling: bool,
}

impl CtrwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("particle count must be positive".into()));
        }
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
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("snapshot times must be finite and nonnegative".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("snapshot times must be nondecreasing".into()));
        }
        self.initial.validate(&self.model)
    }
}

/// Recorded state of all particles.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub times: Vec<f64>,
    /// Initial positions.
    pub start: Vec<f64>,
    /// `positions[s][p]`: unwrapped position of particle `p` at snapshot `s`.
    pub positions: Vec<Vec<f64>>,
    /// Internal-time age of every particle at the last snapshot.
    pub ages: Vec<f64>,
    /// Number of jumps each particle made up to the last snapshot.
    pub jumps: Vec<u64>,
}

/// Stream of particle `index` under `seed`.
pub fn particle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform variate in `(0, 1]`, the domain of the survival inversions.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

struct Track {
    start: f64,
    positions: Vec<f64>,
    age: f64,
    jumps: u64,
}

fn simulate_one(cfg: &CtrwConfig, scale: f64, index: usize) -> Result<Track> {
    let mut rng = particle_rng(cfg.seed, index as u64);
    let x0 = cfg.initial.spatial.sample(&mut rng);
    let age0 = cfg.initial.age.sample(rng.random::<f64>());
    let mut x = x0;
    let mut clock = 0.0;
    let mut born = -age0;
    let mut exit = born + cfg.model.sample_total_age(age0, open_unit(&mut rng))?;
    let mut jumps = 0;
    let mut positions = Vec::with_capacity(cfg.snapshot_times.len());
    for &t in &cfg.snapshot_times {
        let tau = t / scale;
        while exit <= tau {
            clock = exit;
            x = cfg.kernel.sample_jump(x, rng.random::<f64>(), rng.random::<f64>());
            jumps += 1;
            born = clock;
            exit = born + cfg.model.sample_waiting_time(open_unit(&mut rng))?;
        }
        positions.push(x);
        clock = clock.max(tau);
    }
    Ok(Track { start: x0, positions, age: clock - born, jumps })
}

pub fn simulate_particles(cfg: &CtrwConfig) -> Result<ParticleEnsemble> {
    cfg.validate()?;
    let scale = cfg.kernel.epsilon.powf(cfg.beta);
    let tracks = par::try_map(cfg.particles, |i| simulate_one(cfg, scale, i))?;
    let snaps = cfg.snapshot_times.len();
    let mut positions = vec![Vec::with_capacity(tracks.len()); snaps];
    let mut start = Vec::with_capacity(tracks.len());
    let mut ages = Vec::with_capacity(tracks.len());
    let mut jumps = Vec::with_capacity(tracks.len());
    for t in tracks {
        for (s, x) in t.positions.into_iter().enumerate() {
            positions[s].push(x);
        }
        start.push(t.start);
        ages.push(t.age);
        jumps.push(t.jumps);
    }
    Ok(ParticleEnsemble { times: cfg.snapshot_times.clone(), start, positions, ages, jumps })
}

/// Waiting times of particles starting at age zero, one per stream index.
pub fn sample_waiting_times(model: &HazardModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    par::try_map(count, |i| {
        let mut rng = particle_rng(seed, i as u64);
        model.sample_waiting_time(open_unit(&mut rng))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsdReport {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    /// Least-squares slope of `log msd` against `log t` inside the window.
    pub slope: f64,
    pub window: (f64, f64),
}

/// Mean squared displacement from each particle's own start, with a
/// log-log slope fitted over `window`.
pub fn msd(ensemble: &ParticleEnsemble, window: (f64, f64)) -> Result<MsdReport> {
    if ensemble.times.len() < 2 {
        return Err(Error::Input("need at least two snapshots".into()));
    }
    let n = ensemble.start.len() as f64;
    let values: Vec<f64> = ensemble
        .positions
        .iter()
        .map(|xs| {
            xs.iter()
                .zip(&ensemble.start)
                .map(|(x, x0)| (x - x0) * (x - x0))
                .sum::<f64>()
                / n
        })
        .collect();
    let slope = fit_loglog_slope(&ensemble.times, &values, window)?;
    Ok(MsdReport { times: ensemble.times.clone(), msd: values, slope, window })
}

/// Least-squares slope in log-log coordinates over points with `t` in `window`.
pub fn fit_loglog_slope(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Input(format!(
            "fit window [{}, {}] holds fewer than two snapshots",
            window.0, window.1
        )));
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Input("cannot fit a power law to zero displacement".into()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxx, sxy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (x - mx), b + (x - mx) * (y - my)));
    if sxx == 0.0 {
        return Err(Error::Input("fit window holds a single time".into()));
    }
    Ok(sxy / sxx)
}

/// Histogram of positions normalized to total mass `mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub lower: f64,
    pub upper: f64,
    pub centers: Vec<f64>,
    pub rho: Vec<f64>,
    /// Particles left of `lower` and right of `upper`.
    pub underflow: usize,
    pub overflow: usize,
}

impl DensityEstimate {
    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.rho.len() as f64
    }

    /// Mass inside the grid plus the mass of the overflow bins.
    pub fn total_mass(&self, mass: f64, particles: usize) -> f64 {
        let per = mass / particles as f64;
        self.rho.iter().sum::<f64>() * self.width() + (self.underflow + self.overflow) as f64 * per
    }
}

pub fn empirical_density(positions: &[f64], lower: f64, upper: f64, bins: usize, mass: f64) -> Result<DensityEstimate> {
    if bins == 0 || !(upper > lower) {
        return Err(Error::Config("histogram needs at least one bin over a nonempty interval".into()));
    }
    let width = (upper - lower) / bins as f64;
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &x in positions {
        if x < lower {
            underflow += 1;
        } else if x >= upper {
            overflow += 1;
        } else {
            let b = (((x - lower) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let per = if positions.is_empty() { 0.0 } else { mass / positions.len() as f64 };
    Ok(DensityEstimate {
        lower,
        upper,
        centers: (0..bins).map(|b| lower + (b as f64 + 0.5) * width).collect(),
        rho: counts.iter().map(|&c| c as f64 * per / width).collect(),
        underflow,
        overflow,
    })
}

/// Bin counts of positions wrapped onto the periodic domain.
fn periodic_counts(positions: &[f64], bins: usize) -> Vec<u64> {
    let width = PERIOD / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in positions {
        let b = ((x.rem_euclid(PERIOD) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

/// Density on `bins` equal cells of `[0, 2π)` after wrapping positions.
pub fn periodic_density(positions: &[f64], bins: usize, mass: f64) -> Result<Vec<f64>> {
    if bins == 0 || positions.is_empty() {
        return Err(Error::Input("need at least one bin and one particle".into()));
    }
    let width = PERIOD / bins as f64;
    let per = mass / positions.len() as f64;
    Ok(periodic_counts(positions, bins)
        .into_iter()
        .map(|c| c as f64 * per / width)
        .collect())
}

/// `Σ |a - b| · width`.
pub fn l1_distance(a: &[f64], b: &[f64], width: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * width
}

/// Averages cell values over groups of `factor` consecutive cells.
pub fn coarsen(values: &[f64], factor: usize) -> Vec<f64> {
    values
        .chunks(factor)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Statistical noise floor of the periodic density estimator: mean L¹
/// distance between the estimate and `resamples` bootstrap replicates.
pub fn bootstrap_l1_noise(positions: &[f64], bins: usize, mass: f64, resamples: usize, seed: u64) -> Result<f64> {
    if resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let base = periodic_density(positions, bins, mass)?;
    let width = PERIOD / bins as f64;
    let n = positions.len();
    let distances = par::try_map(resamples, |r| {
        let mut rng = particle_rng(seed, r as u64);
        let sample: Vec<f64> = (0..n).map(|_| positions[rng.random_range(0..n)]).collect();
        let rho = periodic_density(&sample, bins, mass)?;
        Ok(l1_distance(&rho, &base, width))
    })?;
    Ok(distances.iter().sum::<f64>() / resamples as f64)
}
