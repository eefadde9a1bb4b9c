//! End-to-end acceptance checks. Each criterion prints one line; the test
//! fails if any criterion fails.

use std::time::Instant;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;
use subdiff_core::age::{
    decay_weighted_integrals, renewal_integral_check, solve_age_homogeneous, solve_age_space, AgeSpaceConfig,
    BoundStatus, RenewalTrace, SymbolMode,
};
use subdiff_core::fracpde::{
    chain_rule_residual, mittag_leffler, solve_subdiffusion, PeriodicGrid, SubdiffusionParams,
};
use subdiff_core::harness::{
    log_times, run_convergence, run_ctrw, run_energy_check, run_micro_macro, Case, ExperimentConfig,
};
use subdiff_core::laplace::{
    verify_fund_laplace, verify_fund_laplace2, verify_scaling_rule, verify_transit_rule, AnalyticFn, TailModel,
};
use subdiff_core::model::{AgeProfile, HazardModel, InitialAgeData, JumpKernel, SpatialProfile};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn laplace_identities() -> Outcome {
    let clock = Instant::now();
    let s_values = [0.25, 1.0, 4.0];
    let functions = [
        ("exp", AnalyticFn::exp_decay(1.0), AnalyticFn::new(|t: f64| -(-t.max(0.0)).exp_m1(), TailModel::Bounded(1.0))),
        (
            "indicator",
            AnalyticFn::indicator(1.0),
            AnalyticFn::new(|t: f64| t.clamp(0.0, 1.0), TailModel::Bounded(1.0)).with_breakpoints(&[1.0]),
        ),
    ];
    let mut worst: (f64, String) = (0.0, String::new());
    let mut record = |r: f64, label: String| {
        if !(r <= worst.0) {
            worst = (r, label);
        }
    };
    for (name, f, antideriv) in &functions {
        for &s in &s_values {
            let c = verify_transit_rule(antideriv, f, s).unwrap();
            record(c.residual, format!("transit f={name} s={s}"));
        }
    }
    for alpha in [0.25, 0.5, 0.75] {
        let c = verify_scaling_rule(alpha, &s_values).unwrap();
        record(c.residual, format!("scaling alpha={alpha}"));
        // independent Γ(α) check of the quadrature reference
        record(((c.rhs - gamma(alpha)) / gamma(alpha)).abs(), format!("gamma alpha={alpha}"));
        for (name, f, _) in &functions {
            for &s in &s_values {
                let c = verify_fund_laplace(f, alpha, s).unwrap();
                record(c.residual, format!("fund alpha={alpha} f={name} s={s}"));
                let c = verify_fund_laplace2(f, alpha, s).unwrap();
                record(c.residual, format!("fund2 alpha={alpha} f={name} s={s}"));
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst.0 < 1e-5 && secs < 10.0,
        format!("worst residual {:.2e} ({}), {secs:.1}s", worst.0, worst.1),
    )
}

fn renewal_identity() -> Outcome {
    let clock = Instant::now();
    let g = AgeProfile::default();
    let trace = solve_age_homogeneous(&HazardModel::power_law(0.5).unwrap(), &g, 100.0, 0.01).unwrap();
    let (l10, r10) = renewal_integral_check(&trace, &g, 0.5, 10.0).unwrap();
    let (l100, r100) = renewal_integral_check(&trace, &g, 0.5, 100.0).unwrap();
    let e10 = ((l10 - r10) / r10).abs();
    let e100 = ((l100 - r100) / r100).abs();
    let toward_one = (1.0 - r100).abs() < (1.0 - r10).abs() && (1.0 - l100).abs() < (1.0 - l10).abs();
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        e10 < 0.02 && e100 < 0.02 && toward_one && secs < 60.0,
        format!("rel err {e10:.1e} at t=10, {e100:.1e} at t=100; rhs {r10:.4} -> {r100:.4}; {secs:.1}s"),
    )
}

fn decay_bounds() -> Outcome {
    let g = AgeProfile::default();
    let trace = solve_age_homogeneous(&HazardModel::power_law(0.5).unwrap(), &g, 1000.0, 0.05).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for delta in [0.5, 0.9] {
        let r = decay_weighted_integrals(&trace, &g, 0.5, delta).unwrap();
        ok &= r.upper == BoundStatus::Holds && r.lower == BoundStatus::Holds;
        detail.push(format!(
            "delta={delta}: upper {:.3} vs {:.3} ({:?}), lower {:.3} vs {:.3} ({:?})",
            r.upper_integral, r.upper_constant, r.upper, r.lower_integral, r.lower_constant, r.lower
        ));
    }
    outcome(ok, detail.join("; "))
}

fn equilibrium() -> Outcome {
    let d0 = 1.5;
    let trace = solve_age_homogeneous(
        &HazardModel::constant(d0).unwrap(),
        &AgeProfile::Exponential { rate: d0 },
        50.0,
        0.01,
    )
    .unwrap();
    let worst = trace.flux.iter().map(|u| (u - d0).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-10, format!("max |U - D0| = {worst:.1e} over {} steps", trace.flux.len()))
}

fn space_run(model: HazardModel, epsilon: f64, beta: f64, da: f64, spatial: SpatialProfile, age: AgeProfile) -> RenewalTrace {
    solve_age_space(&AgeSpaceConfig {
        model,
        initial: InitialAgeData::new(spatial, age),
        kernel: JumpKernel::triangular(epsilon).unwrap(),
        beta,
        t_end: 1.0,
        da,
        space_cells: 256,
        symbol: SymbolMode::Exact,
        snapshot_times: vec![1.0],
        age_max: None,
        enforce_scaling: true,
    })
    .unwrap()
}

/// Deterministic runs shared by the conservation and comparison checks.
fn deterministic_runs() -> Vec<(&'static str, RenewalTrace)> {
    let g = AgeProfile::default();
    let power = HazardModel::power_law(0.5).unwrap();
    let bump = SpatialProfile::Gaussian { center: 3.0, width: 0.4 };
    vec![
        ("homogeneous power law", solve_age_homogeneous(&power, &g, 1000.0, 0.05).unwrap()),
        (
            "homogeneous constant",
            solve_age_homogeneous(&HazardModel::constant(2.0).unwrap(), &AgeProfile::Exponential { rate: 3.0 }, 100.0, 0.01)
                .unwrap(),
        ),
        ("spatial power law cosine", space_run(power, 0.1, 4.0, 1.0, SpatialProfile::Cosine, g)),
        ("spatial power law bump", space_run(power, 0.1, 4.0, 1.0, bump, g)),
        (
            "spatial constant bump",
            space_run(HazardModel::constant(1.0).unwrap(), 0.1, 2.0, 0.05, bump, g),
        ),
    ]
}

fn mass_conservation(runs: &[(&str, RenewalTrace)]) -> Outcome {
    let (name, worst) = runs
        .iter()
        .map(|(n, t)| (*n, t.max_mass_drift()))
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    outcome(worst < 1e-8, format!("worst relative drift {worst:.1e} ({name}) over {} runs", runs.len()))
}

fn comparison_principle(runs: &[(&str, RenewalTrace)]) -> Outcome {
    let (name, worst) = runs
        .iter()
        .map(|(n, t)| (*n, t.ratio_max - t.initial_ratio_max))
        .fold(("", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    outcome(worst <= 1e-12, format!("max ratio excess {worst:.1e} ({name})"))
}

fn cosine_amplitude(values: &[f64], grid: &PeriodicGrid) -> f64 {
    values.iter().zip(grid.centers()).map(|(v, x)| v * x.cos()).sum()
}

fn mittag_leffler_modes() -> Outcome {
    let clock = Instant::now();
    // closed form at α = 1/2 checks the oracle itself
    let x: f64 = 0.8;
    let oracle_err = (mittag_leffler(0.5, -x).unwrap() - (x * x).exp() * erfc(x)).abs();
    let grid = PeriodicGrid::new(256).unwrap();
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.7] {
        let params = SubdiffusionParams { alpha, a_coef: 1.0 / 6.0, moment_factor: 0.5 };
        let h = solve_subdiffusion(&params, &SpatialProfile::Cosine, &grid, 1e-3, 1.0).unwrap();
        let k = h.index_at(1.0).unwrap();
        let ratio = cosine_amplitude(&h.values[k], &grid) / cosine_amplitude(&h.values[0], &grid);
        let lambda = params.effective() / gamma(1.0 - alpha);
        let expected = mittag_leffler(alpha, -lambda).unwrap();
        worst = worst.max(((ratio - expected) / expected).abs());
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst < 0.01 && oracle_err < 1e-10 && secs < 60.0,
        format!("worst amplitude error {worst:.1e}, oracle error {oracle_err:.1e}, {secs:.1}s"),
    )
}

fn initial_jump() -> Outcome {
    let grid = PeriodicGrid::new(256).unwrap();
    let params = SubdiffusionParams { alpha: 0.5, a_coef: 1.0 / 6.0, moment_factor: 0.5 };
    let h = solve_subdiffusion(&params, &SpatialProfile::Cosine, &grid, 1e-4, 1e-4).unwrap();
    let sup0 = h.values[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = h.values[1].iter().zip(&h.values[0]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    outcome(diff / sup0 < 0.05, format!("relative sup change after one step {:.1e}", diff / sup0))
}

fn chain_rule() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5] {
        let c = chain_rule_residual(|t| t, |_| 1.0, alpha, 1.0).unwrap();
        worst = worst.max(c.residual);
        let c = chain_rule_residual(|t| t * t, |t| 2.0 * t, alpha, 1.0).unwrap();
        worst = worst.max(c.residual);
    }
    let c = chain_rule_residual(|t| t, |_| 1.0, 0.5, 1.0).unwrap();
    let worked = (c.lhs - 2.0).abs().max((c.rhs - 2.0).abs());
    outcome(
        worst < 1e-6 && worked < 1e-8,
        format!("worst residual {worst:.1e}; worked case lhs {:.10} rhs {:.10}", c.lhs, c.rhs),
    )
}

fn energy() -> Outcome {
    let cfg = ExperimentConfig { space_cells: 256, dt: 1e-3, t_end: 1.0, times: vec![1.0], ..Default::default() };
    let r = run_energy_check(&cfg, 8).unwrap();
    let e = &r.reports[0];
    outcome(
        e.residual < 0.05 && r.passed(),
        format!("residual {:.1e}, max convexity gap {:.1e}", e.residual, r.convexity_max),
    )
}

fn convergence(case: Case, da: f64, limit: f64) -> Outcome {
    let clock = Instant::now();
    let cfg = ExperimentConfig { case, da, space_cells: 512, epsilons: vec![0.2, 0.1, 0.05], ..Default::default() };
    let r = run_convergence(&cfg).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let distances: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{}: {:.3e}", row.epsilon, row.distances.first().copied().unwrap_or(f64::NAN)))
        .collect();
    outcome(
        r.strictly_decreasing() && secs < limit,
        format!("L1 at t=1 [{}], order {:.2}, {secs:.0}s", distances.join(", "), r.order.unwrap_or(f64::NAN)),
    )
}

fn msd_exponent() -> Outcome {
    let clock = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [0.5, 0.7] {
        let cfg = ExperimentConfig {
            case: Case::SubDiffusion { alpha },
            epsilons: vec![0.1],
            t_end: 1000.0,
            times: vec![1000.0],
            particles: 100_000,
            msd_window: (10.0, 1000.0),
            ..Default::default()
        };
        let slope = run_ctrw(&cfg, log_times(cfg.msd_window, 9)).unwrap().msd.unwrap().slope;
        ok &= (slope - alpha).abs() <= 0.1;
        detail.push(format!("alpha {alpha}: slope {slope:.3}"));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(ok && secs < 300.0, format!("{}; {secs:.0}s", detail.join(", ")))
}

fn micro_macro() -> Outcome {
    let cfg = ExperimentConfig {
        case: Case::NormalDiffusion { d0: 1.0 },
        epsilons: vec![0.1],
        da: 0.05,
        space_cells: 256,
        bins: 32,
        particles: 100_000,
        bootstrap: 100,
        ..Default::default()
    };
    let r = run_micro_macro(&cfg).unwrap();
    let row = &r.rows[0];
    outcome(
        r.passed(),
        format!(
            "mc-age {:.3e} vs noise {:.3e}; mc-limit {:.3e}; age-limit {:.3e}",
            row.mc_age, row.noise, row.mc_limit, row.age_limit
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let runs = deterministic_runs();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("laplace identities", Box::new(laplace_identities)),
        ("renewal integral identity", Box::new(renewal_identity)),
        ("decay bounds", Box::new(decay_bounds)),
        ("equilibrium fixed point", Box::new(equilibrium)),
        ("mass conservation", Box::new(|| mass_conservation(&runs))),
        ("comparison principle", Box::new(|| comparison_principle(&runs))),
        ("sub-diffusion vs mittag-leffler", Box::new(mittag_leffler_modes)),
        ("initial jump", Box::new(initial_jump)),
        ("chain rule", Box::new(chain_rule)),
        ("energy balance", Box::new(energy)),
        ("normal diffusion limit", Box::new(|| convergence(Case::NormalDiffusion { d0: 1.0 }, 0.02, 300.0))),
        ("sub-diffusion limit", Box::new(|| convergence(Case::SubDiffusion { alpha: 0.5 }, 1.0, 900.0))),
        ("msd exponent", Box::new(msd_exponent)),
        ("micro-macro agreement", Box::new(micro_macro)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        println!("criterion {:>2} {:<32} {}  {}", i + 1, name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
