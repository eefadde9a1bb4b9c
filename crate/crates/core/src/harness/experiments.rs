use std::time::Instant;

use crate::age::{
    decay_weighted_integrals, renewal_integral_check, solve_age_homogeneous, solve_age_space, AgeSpaceConfig,
    RenewalTrace,
};
use crate::ctrw::{self, CtrwConfig, MsdReport, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::fracpde::{
    chain_rule_residual, convexity_gap, energy_balance, modal_diffusion, modal_subdiffusion, solve_diffusion,
    solve_subdiffusion, DensityHistory, EnergyReport, PeriodicGrid, SubdiffusionParams,
};
use crate::laplace::{verify_fund_laplace, verify_fund_laplace2, verify_scaling_rule, verify_transit_rule, AnalyticFn};
use crate::model::{AgeProfile, PERIOD};
use crate::par;

use super::config::{Case, ExperimentConfig};

/// Age-solver configuration for one jump length.
pub fn age_space_config(cfg: &ExperimentConfig, epsilon: f64) -> Result<AgeSpaceConfig> {
    Ok(AgeSpaceConfig {
        model: cfg.case.model()?,
        initial: cfg.initial_data(),
        kernel: cfg.kernel(epsilon)?,
        beta: cfg.beta(),
        t_end: cfg.t_end,
        da: cfg.da,
        space_cells: cfg.space_cells,
        symbol: cfg.symbol,
        snapshot_times: cfg.times.clone(),
        age_max: None,
        enforce_scaling: cfg.enforce_scaling(),
    })
}

pub fn ctrw_config(cfg: &ExperimentConfig, epsilon: f64, snapshot_times: Vec<f64>) -> Result<CtrwConfig> {
    Ok(CtrwConfig {
        model: cfg.case.model()?,
        kernel: cfg.kernel(epsilon)?,
        beta: cfg.beta(),
        particles: cfg.particles,
        snapshot_times,
        initial: cfg.initial_data(),
        seed: cfg.seed,
        enforce_scaling: cfg.enforce_scaling(),
    })
}

/// Exact cell averages of the limit equation at `t`.
pub fn limit_reference(cfg: &ExperimentConfig, t: f64) -> Result<Vec<f64>> {
    let grid = PeriodicGrid::new(cfg.space_cells)?;
    let params = cfg.limit_params()?;
    match cfg.case {
        Case::SubDiffusion { .. } => modal_subdiffusion(&params, &cfg.initial, &grid, t),
        Case::NormalDiffusion { d0 } => modal_diffusion(d0 * params.effective(), &cfg.initial, &grid, t),
    }
}

/// Time-stepped solution of the limit equation on the configured grid.
pub fn solve_limit(cfg: &ExperimentConfig) -> Result<DensityHistory> {
    let grid = PeriodicGrid::new(cfg.space_cells)?;
    let params = cfg.limit_params()?;
    match cfg.case {
        Case::SubDiffusion { .. } => solve_subdiffusion(&params, &cfg.initial, &grid, cfg.dt, cfg.t_end),
        Case::NormalDiffusion { d0 } => solve_diffusion(d0, &params, &cfg.initial, &grid, cfg.dt, cfg.t_end, cfg.scheme),
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    ctrw::l1_distance(a, b, PERIOD / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// `‖ρ_ε(t) - ρ₀(t)‖₁` at each comparison time; empty on failure.
    pub distances: Vec<f64>,
    pub steps: usize,
    pub runtime: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// How the limit solution was obtained, for auditing.
    pub reference: String,
    /// Distance between the time-stepped limit solver and the exact reference.
    pub solver_gap: Vec<f64>,
    /// Fitted exponent `p` in `distance ∝ ε^p` at the last comparison time.
    pub order: Option<f64>,
}

impl ConvergenceReport {
    /// Every row succeeded and distances fall strictly with `ε` at every time.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.iter().all(|r| r.failure.is_none())
            && self
                .rows
                .windows(2)
                .all(|w| w[0].distances.iter().zip(&w[1].distances).all(|(a, b)| b < a))
    }
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let references: Vec<Vec<f64>> = cfg.times.iter().map(|&t| limit_reference(cfg, t)).collect::<Result<_>>()?;
    let limit = solve_limit(cfg)?;
    let solver_gap = cfg
        .times
        .iter()
        .zip(&references)
        .map(|(&t, r)| Ok(l1(&limit.values[limit.index_at(t)?], r)))
        .collect::<Result<Vec<_>>>()?;
    let rows = par::map(cfg.epsilons.len(), |i| {
        let epsilon = cfg.epsilons[i];
        let clock = Instant::now();
        let outcome = age_space_config(cfg, epsilon).and_then(|a| {
            let steps = (cfg.t_end / a.macro_dt()).round() as usize;
            solve_age_space(&a).map(|trace| (trace, steps))
        });
        let runtime = clock.elapsed().as_secs_f64();
        match outcome {
            Ok((trace, steps)) => ConvergenceRow {
                epsilon,
                distances: trace.snapshots.iter().zip(&references).map(|(s, r)| l1(&s.rho, r)).collect(),
                steps,
                runtime,
                failure: None,
            },
            Err(e) => ConvergenceRow { epsilon, distances: Vec::new(), steps: 0, runtime, failure: Some(e.to_string()) },
        }
    });
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.distances.last().map(|d| (r.epsilon, *d)))
        .filter(|(_, d)| *d > 0.0)
        .collect();
    let order = if ok.len() >= 2 {
        let (e, d): (Vec<f64>, Vec<f64>) = ok.into_iter().unzip();
        ctrw::fit_loglog_slope(&e, &d, (0.0, f64::INFINITY)).ok()
    } else {
        None
    };
    let reference = format!(
        "exact Fourier modes on {} cells; time-stepped solver at dt = {}",
        cfg.space_cells, cfg.dt
    );
    Ok(ConvergenceReport { times: cfg.times.clone(), rows, reference, solver_gap, order })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub identity: &'static str,
    pub alpha: Option<f64>,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub passed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub tolerance: f64,
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

const BATTERY_S: [f64; 3] = [0.25, 1.0, 4.0];

struct Job {
    identity: &'static str,
    alpha: Option<f64>,
    params: String,
    run: Box<dyn Fn() -> Result<(f64, f64, f64)> + Sync + Send>,
}

fn test_function(name: &str) -> AnalyticFn<'static> {
    match name {
        "exp" => AnalyticFn::exp_decay(1.0),
        _ => AnalyticFn::indicator(1.0),
    }
}

/// Antiderivative of the test function vanishing at zero.
fn antiderivative(name: &str) -> AnalyticFn<'static> {
    use crate::laplace::TailModel;
    match name {
        "exp" => AnalyticFn::new(|t: f64| if t <= 0.0 { 0.0 } else { -(-t).exp_m1() }, TailModel::Bounded(1.0)),
        _ => AnalyticFn::new(|t: f64| t.clamp(0.0, 1.0), TailModel::Bounded(1.0)).with_breakpoints(&[1.0]),
    }
}

fn identity_jobs(alphas: &[f64]) -> Vec<Job> {
    let mut jobs: Vec<Job> = Vec::new();
    if !alphas.is_empty() {
        for name in ["exp", "indicator"] {
            for s in BATTERY_S {
                jobs.push(Job {
                    identity: "transit",
                    alpha: None,
                    params: format!("f={name} s={s}"),
                    run: Box::new(move || {
                        let c = verify_transit_rule(&antiderivative(name), &test_function(name), s)?;
                        Ok((c.lhs, c.rhs, c.residual))
                    }),
                });
            }
        }
    }
    for &alpha in alphas {
        jobs.push(Job {
            identity: "scaling",
            alpha: Some(alpha),
            params: "s=0.25,1,4".into(),
            run: Box::new(move || {
                let c = verify_scaling_rule(alpha, &BATTERY_S)?;
                Ok((c.lhs, c.rhs, c.residual))
            }),
        });
        for name in ["exp", "indicator"] {
            for s in BATTERY_S {
                jobs.push(Job {
                    identity: "fund_laplace",
                    alpha: Some(alpha),
                    params: format!("f={name} s={s}"),
                    run: Box::new(move || {
                        let c = verify_fund_laplace(&test_function(name), alpha, s)?;
                        Ok((c.lhs, c.rhs, c.residual))
                    }),
                });
                jobs.push(Job {
                    identity: "fund_laplace2",
                    alpha: Some(alpha),
                    params: format!("f={name} s={s}"),
                    run: Box::new(move || {
                        let c = verify_fund_laplace2(&test_function(name), alpha, s)?;
                        Ok((c.lhs, c.rhs, c.residual))
                    }),
                });
            }
        }
        for t in [10.0, 100.0] {
            jobs.push(Job {
                identity: "renewal",
                alpha: Some(alpha),
                params: format!("g=exp da=0.01 t={t}"),
                run: Box::new(move || {
                    let model = crate::model::HazardModel::power_law(alpha)?;
                    let g = AgeProfile::default();
                    let trace = solve_age_homogeneous(&model, &g, t, 0.01)?;
                    let (lhs, rhs) = renewal_integral_check(&trace, &g, alpha, t)?;
                    Ok((lhs, rhs, ((lhs - rhs) / rhs).abs()))
                }),
            });
        }
        for (name, power) in [("t", 1), ("t^2", 2)] {
            jobs.push(Job {
                identity: "chain_rule",
                alpha: Some(alpha),
                params: format!("v={name} t=1"),
                run: Box::new(move || {
                    let c = chain_rule_residual(
                        |t: f64| t.powi(power),
                        |t: f64| power as f64 * t.powi(power - 1),
                        alpha,
                        1.0,
                    )?;
                    Ok((c.lhs, c.rhs, c.residual))
                }),
            });
        }
    }
    jobs
}

/// Transform identities only, without the solver-based checks.
pub const LAPLACE_IDENTITIES: &[&str] = &["transit", "scaling", "fund_laplace", "fund_laplace2"];

/// Every identity check across `alphas`; failures are recorded, not raised.
pub fn run_identity_battery(alphas: &[f64], tolerance: f64) -> IdentityReport {
    run_identities(alphas, tolerance, |_| true)
}

/// The battery restricted to identities accepted by `select`.
pub fn run_identities(alphas: &[f64], tolerance: f64, select: impl Fn(&str) -> bool) -> IdentityReport {
    let jobs: Vec<Job> = identity_jobs(alphas).into_iter().filter(|j| select(j.identity)).collect();
    let rows = par::map(jobs.len(), |i| {
        let job = &jobs[i];
        let (lhs, rhs, residual, failure) = match (job.run)() {
            Ok((l, r, res)) => (l, r, res, None),
            Err(e) => (f64::NAN, f64::NAN, f64::NAN, Some(e.to_string())),
        };
        IdentityRow {
            identity: job.identity,
            alpha: job.alpha,
            params: job.params.clone(),
            lhs,
            rhs,
            residual,
            passed: failure.is_none() && residual < tolerance,
            failure,
        }
    });
    IdentityReport { tolerance, rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroMacroRow {
    pub epsilon: f64,
    pub t: f64,
    pub mc_age: f64,
    pub mc_limit: f64,
    pub age_limit: f64,
    /// Bootstrap estimate of the particle histogram's own L¹ error.
    pub noise: f64,
}

impl MicroMacroRow {
    /// Particles and the age solver agree within twice the sampling noise.
    pub fn agrees(&self) -> bool {
        self.mc_age < 2.0 * self.noise
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroMacroReport {
    pub bins: usize,
    pub particles: usize,
    pub rows: Vec<MicroMacroRow>,
}

impl MicroMacroReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(MicroMacroRow::agrees)
    }
}

/// Compares particle histograms, the age solver and the limit equation on
/// `bins` cells at every configured time and jump length.
pub fn run_micro_macro(cfg: &ExperimentConfig) -> Result<MicroMacroReport> {
    cfg.validate()?;
    let factor = cfg.space_cells / cfg.bins;
    let mass = cfg.initial_data().total_mass();
    let width = PERIOD / cfg.bins as f64;
    let limits: Vec<Vec<f64>> = cfg
        .times
        .iter()
        .map(|&t| Ok(ctrw::coarsen(&limit_reference(cfg, t)?, factor)))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &epsilon in &cfg.epsilons {
        let trace = solve_age_space(&age_space_config(cfg, epsilon)?)?;
        let ensemble = ctrw::simulate_particles(&ctrw_config(cfg, epsilon, cfg.times.clone())?)?;
        for (i, &t) in cfg.times.iter().enumerate() {
            let mc = ctrw::periodic_density(&ensemble.positions[i], cfg.bins, mass)?;
            let age = ctrw::coarsen(&trace.snapshots[i].rho, factor);
            let noise = ctrw::bootstrap_l1_noise(
                &ensemble.positions[i],
                cfg.bins,
                mass,
                cfg.bootstrap,
                cfg.seed.wrapping_add(1 + i as u64),
            )?;
            rows.push(MicroMacroRow {
                epsilon,
                t,
                mc_age: ctrw::l1_distance(&mc, &age, width),
                mc_limit: ctrw::l1_distance(&mc, &limits[i], width),
                age_limit: ctrw::l1_distance(&age, &limits[i], width),
                noise,
            });
        }
    }
    Ok(MicroMacroReport { bins: cfg.bins, particles: cfg.particles, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCheck {
    pub reports: Vec<EnergyReport>,
    /// Largest convexity gap over the checked steps; must be `≤ 0` up to roundoff.
    pub convexity_max: f64,
    pub tolerance: f64,
}

impl EnergyCheck {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.residual < self.tolerance) && self.convexity_max <= 1e-10
    }
}

/// Energy identity at each comparison time of a unit-coefficient run, and
/// the convexity inequality at `samples` evenly spaced steps.
pub fn run_energy_check(cfg: &ExperimentConfig, samples: usize) -> Result<EnergyCheck> {
    let Case::SubDiffusion { alpha } = cfg.case else {
        return Err(Error::Unsupported("the energy check needs the sub-diffusion case".into()));
    };
    let params = SubdiffusionParams { alpha, a_coef: 1.0, moment_factor: 1.0 };
    let grid = PeriodicGrid::new(cfg.space_cells)?;
    let history = solve_subdiffusion(&params, &cfg.initial, &grid, cfg.dt, cfg.t_end)?;
    let reports = cfg
        .times
        .iter()
        .map(|&t| energy_balance(&history, &params, history.index_at(t)?.max(1)))
        .collect::<Result<Vec<_>>>()?;
    let steps = history.steps();
    let picks: Vec<usize> = (1..=samples.max(1)).map(|i| (i * steps / samples.max(1)).max(1)).collect();
    let gaps = par::try_map(picks.len(), |i| convexity_gap(&history, alpha, picks[i]))?;
    Ok(EnergyCheck {
        reports,
        convexity_max: gaps.into_iter().fold(f64::NEG_INFINITY, f64::max),
        tolerance: 0.05,
    })
}

pub struct CtrwRun {
    pub ensemble: ParticleEnsemble,
    pub msd: Option<MsdReport>,
}

/// Particle run at the first jump length, with the MSD fit when the
/// snapshot times reach into the fit window.
pub fn run_ctrw(cfg: &ExperimentConfig, snapshot_times: Vec<f64>) -> Result<CtrwRun> {
    let ensemble = ctrw::simulate_particles(&ctrw_config(cfg, cfg.epsilons[0], snapshot_times)?)?;
    let msd = ctrw::msd(&ensemble, cfg.msd_window).ok();
    Ok(CtrwRun { ensemble, msd })
}

/// Geometric sequence of `count` times spanning `window`.
pub fn log_times(window: (f64, f64), count: usize) -> Vec<f64> {
    let ratio = (window.1 / window.0).ln() / (count.max(2) - 1) as f64;
    (0..count.max(2)).map(|i| window.0 * (ratio * i as f64).exp()).collect()
}

/// Spatially homogeneous renewal run with its integral-identity and decay checks.
pub struct RenewalRun {
    pub trace: RenewalTrace,
    pub identity: Vec<(f64, f64, f64)>,
    pub decay: Vec<crate::age::DecayReport>,
}

pub fn run_renewal(cfg: &ExperimentConfig, da: f64) -> Result<RenewalRun> {
    let model = cfg.case.model()?;
    let g = cfg.age_profile();
    let trace = solve_age_homogeneous(&model, &g, cfg.t_end, da)?;
    let mut identity = Vec::new();
    let mut decay = Vec::new();
    if let Case::SubDiffusion { alpha } = cfg.case {
        for &t in &cfg.times {
            let (l, r) = renewal_integral_check(&trace, &g, alpha, t)?;
            identity.push((t, l, r));
        }
        for delta in [0.5, 0.9] {
            decay.push(decay_weighted_integrals(&trace, &g, alpha, delta)?);
        }
    }
    Ok(RenewalRun { trace, identity, decay })
}
