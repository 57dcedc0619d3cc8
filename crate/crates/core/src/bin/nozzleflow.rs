use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nozzleflow::diagnostics::{weak_residual, TestFunction};
use nozzleflow::entropy::{EntropyGenerator, EntropyKernel};
use nozzleflow::harness::{run_single, sweep, BoundaryKind, Config};
use nozzleflow::schedule::certify;
use nozzleflow::solver::snapshot::Snapshot;
use nozzleflow::thermo::GasLaw;
use nozzleflow::Result;

/// Energy excess tolerated by `check` in spherical Dirichlet mode, relative to the initial energy.
const ENERGY_TOL: f64 = 1e-3;
/// Entropy-inequality violation tolerated by `check` at the smallest viscosity,
/// relative to the test-function norm.
const ENTROPY_TOL: f64 = 1e-2;

#[derive(Parser)]
#[command(name = "nozzleflow", version, about = "Vanishing-viscosity runs for nozzle and spherical Euler flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one viscosity and write snapshot and report CSVs.
    Run {
        config: PathBuf,
        /// Viscosity to run; the first rung of the ladder by default.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the whole ladder and compare consecutive runs.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Proceed even if the schedule certificate fails.
        #[arg(long)]
        force: bool,
    },
    /// Certify the schedule and check the energy and entropy inequalities on the last rung.
    Check { config: PathBuf },
    /// CSV of (rho, u, eta, q) for a named generator.
    EntropyTable {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 2.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 2.0)]
        u_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
}

fn output_dir(cfg: &Config, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("nozzleflow-out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_run(path: &Path, eps: Option<f64>, output: Option<PathBuf>) -> Result<bool> {
    let cfg = Config::read(path)?;
    let schedule = cfg.schedule()?;
    let eps = eps.unwrap_or(schedule.eps_list[0]);
    let (stepper, _, report) = run_single(&cfg, &schedule, eps)?;
    let dir = output_dir(&cfg, output)?;
    for (k, f) in report.history.iter().enumerate() {
        Snapshot::from_field(&stepper, f).write(&dir.join(format!("snapshot_{k:04}.csv")))?;
    }
    std::fs::write(dir.join("report.csv"), report.to_csv())?;
    println!(
        "eps={eps:e} steps={} energy_excess={:.3e} undershoots={} -> {}",
        report.steps,
        report.energy_excess(),
        report.undershoots,
        dir.display()
    );
    Ok(true)
}

fn cmd_sweep(path: &Path, output: Option<PathBuf>, force: bool) -> Result<bool> {
    let mut cfg = Config::read(path)?;
    cfg.force |= force;
    let result = sweep(&cfg)?;
    let dir = output_dir(&cfg, output)?;
    let mut csv = String::from("k,eps_a,eps_b,rho_distance,m_distance\n");
    let ok: Vec<_> = result.successful().collect();
    for (k, w) in ok.windows(2).enumerate() {
        let _ = writeln!(
            csv,
            "{k},{:e},{:e},{:e},{:e}",
            w[0].eps, w[1].eps, result.rho_distances[k], result.m_distances[k]
        );
    }
    std::fs::write(dir.join("distances.csv"), csv)?;
    for r in &ok {
        if let Some(rep) = &r.report {
            std::fs::write(dir.join(format!("report_eps_{:e}.csv", r.eps)), rep.to_csv())?;
        }
    }
    let summary = result.summary();
    std::fs::write(dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(result.rho_verdict.passed() && result.m_verdict.passed())
}

fn cmd_check(path: &Path) -> Result<bool> {
    let cfg = Config::read(path)?;
    let schedule = cfg.schedule()?;
    let cert = certify(&schedule, &cfg.profile()?, &cfg.gas(0.0)?)?;
    print!("{}", cert.to_text());
    let eps = *schedule.eps_list.last().expect("schedule has rungs");
    let (_, _, report) = run_single(&cfg, &schedule, eps)?;
    let energy_ok = if cfg.boundary == BoundaryKind::DirichletSpherical {
        let excess = report.energy_excess();
        let ok = excess <= ENERGY_TOL;
        println!(
            "energy inequality eps={eps:e}: excess {excess:.3e} (tol {ENERGY_TOL:e}) {}",
            if ok { "PASS" } else { "FAIL" }
        );
        ok
    } else {
        let ok = report.gronwall_holds(cfg.energy_bound);
        println!(
            "energy bound eps={eps:e}: E+D <= {}(E0+1) {}",
            cfg.energy_bound,
            if ok { "PASS" } else { "FAIL" }
        );
        ok
    };
    let mut entropy_ok = true;
    if cfg.weak_residuals {
        let tests = TestFunction::lattice(cfg.window, (0.0, cfg.t_end));
        let gas = cfg.gas(schedule.delta(eps))?;
        let rec = weak_residual(
            &report.history,
            &gas,
            &cfg.profile()?,
            &tests,
            &EntropyGenerator::default_convex_family(),
        )?;
        let v = rec.max_entropy_violation();
        entropy_ok = v <= ENTROPY_TOL;
        println!(
            "entropy inequality eps={eps:e}: violation {v:.3e} (tol {ENTROPY_TOL:e}) {}",
            if entropy_ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(cert.pass && energy_ok && entropy_ok)
}

fn cmd_entropy_table(gamma: f64, generator: &str, rho_max: f64, u_max: f64, points: usize) -> Result<bool> {
    let gas = GasLaw::new(gamma, 0.0)?;
    let kernel = EntropyKernel::new(&gas)?;
    let gen = EntropyGenerator::from_name(generator)?;
    let n = points.max(2);
    let mut out = String::from("rho,u,eta,q\n");
    for i in 1..=n {
        let rho = rho_max * i as f64 / n as f64;
        for j in 0..n {
            let u = -u_max + 2.0 * u_max * j as f64 / (n - 1) as f64;
            let (eta, q) = kernel.pair(&gen, rho, rho * u)?;
            let _ = writeln!(out, "{rho:e},{u:e},{eta:e},{q:e}");
        }
    }
    print!("{out}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, eps, output } => cmd_run(&config, eps, output),
        Command::Sweep { config, output, force } => cmd_sweep(&config, output, force),
        Command::Check { config } => cmd_check(&config),
        Command::EntropyTable {
            gamma,
            generator,
            rho_max,
            u_max,
            points,
        } => cmd_entropy_table(gamma, &generator, rho_max, u_max, points),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
