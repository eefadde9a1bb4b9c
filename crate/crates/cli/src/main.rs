use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use subdiff_core::age::solve_age_space;
use subdiff_core::ctrw::periodic_density;
use subdiff_core::harness::report::{self, Table};
use subdiff_core::harness::{
    age_space_config, log_times, run_convergence, run_ctrw, run_energy_check, run_identities, run_micro_macro,
    solve_limit, Case, ExperimentConfig, LAPLACE_IDENTITIES,
};
use subdiff_core::model::PERIOD;
use subdiff_core::Error;

const DENSITY_HELP: &str = "Writes density.csv with columns t,x,rho.";

#[derive(Parser)]
#[command(name = "subdiff", version, about = "Age-structured renewal, particle and fractional diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` experiment file; absent keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Age-structured model with jumps at the first jump length.
    #[command(after_help = "Writes density.csv (t,x,rho) and flux.csv (t,flux). report.csv columns: check,value,status.")]
    SimulateAge,
    /// Particle simulation at the first jump length.
    #[command(after_help = "Writes density.csv (t,x,rho) and msd.csv (t,msd). report.csv columns: check,value,status.")]
    SimulateCtrw,
    /// Time-fractional limit equation.
    #[command(after_help = DENSITY_HELP)]
    SolveSubdiffusion,
    /// Diffusion limit equation.
    #[command(after_help = DENSITY_HELP)]
    SolveDiffusion,
    /// Laplace transform identities.
    #[command(after_help = "report.csv columns: identity,alpha,params,lhs,rhs,residual,status.")]
    VerifyLaplace,
    /// All identity checks across the `alphas` list.
    #[command(after_help = "report.csv columns: identity,alpha,params,lhs,rhs,residual,status.")]
    IdentityBattery,
    /// Distance to the limit equation for every jump length.
    #[command(after_help = "report.csv columns: epsilon,t,distance,steps,status.")]
    Converge,
    /// Particles against the age model and the limit equation.
    #[command(after_help = "report.csv columns: epsilon,t,mc_vs_age,mc_vs_limit,age_vs_limit,noise,status.")]
    MicroMacro,
    /// Energy identity and convexity inequality of the fractional solver.
    #[command(after_help = "report.csv columns: t,memory,gradient,spread,boundary,rhs,residual.")]
    EnergyCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SimulateAge => "simulate-age",
            Command::SimulateCtrw => "simulate-ctrw",
            Command::SolveSubdiffusion => "solve-subdiffusion",
            Command::SolveDiffusion => "solve-diffusion",
            Command::VerifyLaplace => "verify-laplace",
            Command::IdentityBattery => "identity-battery",
            Command::Converge => "converge",
            Command::MicroMacro => "micro-macro",
            Command::EnergyCheck => "energy-check",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => e.exit_code() as u8,
            Failure::Io(..) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

/// Tables and metadata produced by one command.
struct Run {
    passed: bool,
    files: Vec<(&'static str, Table)>,
    notes: Vec<(String, String)>,
}

impl Run {
    fn new(passed: bool) -> Self {
        Run { passed, files: Vec::new(), notes: Vec::new() }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

fn checks_table(checks: &[(&str, f64, bool)]) -> Table {
    let mut t = Table::new(&["check", "value", "status"]);
    for (name, value, ok) in checks {
        t.push(vec![name.to_string(), value.to_string(), if *ok { "pass" } else { "fail" }.into()]);
    }
    t
}

fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Run, Error> {
    match command {
        Command::SimulateAge => {
            let trace = solve_age_space(&age_space_config(cfg, cfg.epsilons[0])?)?;
            let drift = trace.max_mass_drift();
            let excess = trace.ratio_max - trace.initial_ratio_max;
            let checks = [("mass_drift", drift, drift < 1e-8), ("ratio_excess", excess, excess <= 1e-12)];
            let mut run = Run::new(checks.iter().all(|c| c.2));
            run.files.push(("report.csv", checks_table(&checks)));
            run.files.push(("density.csv", report::snapshot_table(&trace.snapshots)));
            run.files.push(("flux.csv", report::flux_table(&trace)));
            run.note("epsilon", cfg.epsilons[0]);
            run.note("discarded_initial_mass", trace.discarded_mass);
            Ok(run)
        }
        Command::SimulateCtrw => {
            let mut times = cfg.times.clone();
            if cfg.msd_window.1 <= cfg.t_end {
                times.extend(log_times(cfg.msd_window, 9));
                times.sort_by(f64::total_cmp);
                times.dedup();
            }
            let out = run_ctrw(cfg, times)?;
            let mass = cfg.initial_data().total_mass();
            let mut density = Table::new(report::DENSITY_COLUMNS);
            for (t, xs) in out.ensemble.times.iter().zip(&out.ensemble.positions) {
                let rho = periodic_density(xs, cfg.bins, mass)?;
                let w = PERIOD / cfg.bins as f64;
                for (j, r) in rho.iter().enumerate() {
                    density.push(vec![t.to_string(), ((j as f64 + 0.5) * w).to_string(), r.to_string()]);
                }
            }
            let mut run = Run::new(true);
            let mut checks = Vec::new();
            if let Some(m) = &out.msd {
                checks.push(("msd_slope", m.slope, true));
                run.files.push(("msd.csv", report::msd_table(m)));
            }
            run.files.insert(0, ("report.csv", checks_table(&checks)));
            run.files.push(("density.csv", density));
            run.note("epsilon", cfg.epsilons[0]);
            run.note("particles", cfg.particles);
            Ok(run)
        }
        Command::SolveSubdiffusion | Command::SolveDiffusion => {
            let wanted_sub = matches!(command, Command::SolveSubdiffusion);
            if wanted_sub != matches!(cfg.case, Case::SubDiffusion { .. }) {
                return Err(Error::Config(format!("`{}` needs the matching `case` key", command.name())));
            }
            let h = solve_limit(cfg)?;
            let m0 = h.mass(0);
            let drift = (0..=h.steps()).map(|k| ((h.mass(k) - m0) / m0).abs()).fold(0.0, f64::max);
            let checks = [("mass_drift", drift, drift < 1e-10), ("min_density", h.min_value, true)];
            let mut run = Run::new(drift < 1e-10);
            let mut times = vec![0.0];
            times.extend(&cfg.times);
            run.files.push(("report.csv", checks_table(&checks)));
            run.files.push(("density.csv", report::history_table(&h, &times)));
            Ok(run)
        }
        Command::VerifyLaplace | Command::IdentityBattery => {
            let laplace_only = matches!(command, Command::VerifyLaplace);
            let r = run_identities(&cfg.alphas, cfg.tolerance, |id| !laplace_only || LAPLACE_IDENTITIES.contains(&id));
            let mut run = Run::new(r.passed());
            run.files.push(("report.csv", report::identity_table(&r)));
            Ok(run)
        }
        Command::Converge => {
            let r = run_convergence(cfg)?;
            let mut run = Run::new(r.strictly_decreasing());
            run.files.push(("report.csv", report::convergence_table(&r)));
            run.note("reference", &r.reference);
            run.note(
                "solver_gap",
                r.solver_gap.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            );
            run.note("order", r.order.map_or("undefined".into(), |o| o.to_string()));
            for row in &r.rows {
                run.note(&format!("runtime_seconds[{}]", row.epsilon), format!("{:.3}", row.runtime));
            }
            Ok(run)
        }
        Command::MicroMacro => {
            let r = run_micro_macro(cfg)?;
            let mut run = Run::new(r.passed());
            run.files.push(("report.csv", report::micro_macro_table(&r)));
            run.note("bins", r.bins);
            run.note("particles", r.particles);
            Ok(run)
        }
        Command::EnergyCheck => {
            let r = run_energy_check(cfg, 8)?;
            let mut run = Run::new(r.passed());
            run.files.push(("report.csv", report::energy_table(&r.reports)));
            run.note("convexity_max", r.convexity_max);
            Ok(run)
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn main_inner(cli: &Cli) -> Result<bool, Failure> {
    let clock = Instant::now();
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(path.clone(), e))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let run = execute(cli.command, &cfg)?;
    let out = &cli.common.out;
    fs::create_dir_all(out).map_err(|e| Failure::Io(out.clone(), e))?;
    for (name, table) in &run.files {
        write(&out.join(name), &table.to_csv())?;
    }
    let meta = report::metadata(
        cli.command.name(),
        &cfg.to_text(),
        cfg.seed,
        clock.elapsed().as_secs_f64(),
        &run.notes,
    );
    write(&out.join("run-metadata.txt"), &meta)?;
    Ok(run.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: checks failed, see {}", cli.command.name(), cli.common.out.join("report.csv").display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
