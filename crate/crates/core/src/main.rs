//! Command-line front end: simulate, consistency, certify, verify.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 property-suite
//! failure.

use chaindyn::config::Config;
use chaindyn::inertial::{pseudo_inertia, trajectory_margins};
use chaindyn::{bounds, eigen, report, simulator, verify, Error};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chaindyn",
    about = "Open-chain dynamics with time-dependent inertial parameters: \
             simulation, consistency tests and mass-matrix bound certificates"
)]
struct Cli {
    /// Scenario configuration (TOML).
    #[arg(long, global = true, default_value = "scenario.toml")]
    config: PathBuf,
    /// Output directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario and emit a trajectory CSV plus summary.
    Simulate,
    /// Per-body consistency margins of the parameter trajectory.
    Consistency,
    /// Sampled mass-matrix bound certificate.
    Certify,
    /// Structural property suite on the configured system.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidInput(_) | Error::UnsupportedChain(_) => 2,
        Error::NumericFailure(_)
        | Error::SingularMassMatrix { .. }
        | Error::InternalInvariant(_) => 3,
    }
}

fn write_output(dir: &PathBuf, name: &str, content: &str) -> chaindyn::Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::NumericFailure(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| Error::NumericFailure(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> chaindyn::Result<()> {
    let mut cfg = Config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &cli.out),
        Command::Consistency => cmd_consistency(&cfg, &cli.out),
        Command::Certify => cmd_certify(&cfg, &cli.out),
        Command::Verify => cmd_verify(&cfg, &cli.out),
    }
}

fn cmd_simulate(cfg: &Config, out: &PathBuf) -> chaindyn::Result<()> {
    let scenario = cfg.build_scenario()?;
    scenario.validate().map_err(|e| match e {
        // state/source dimension problems are configuration mistakes
        Error::InvalidInput(m) => Error::config("scenario", m),
        other => other,
    })?;
    let tr = simulator::run(&scenario)?;
    let csv = report::trajectory_csv(&tr, scenario.chain.dof());
    let summary = report::simulate_summary(&tr);
    write_output(out, "trajectory.csv", &csv)?;
    write_output(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_consistency(cfg: &Config, out: &PathBuf) -> chaindyn::Result<()> {
    let tr = cfg.param_trajectory()?;
    let margins = trajectory_margins(&tr, cfg.consistency.margin, cfg.consistency.uniform_margin)?;
    let mut per_sample = Vec::with_capacity(tr.body_count());
    for l in 0..tr.body_count() {
        let mut rows = Vec::with_capacity(tr.times().len());
        for p in tr.body(l) {
            let w = eigen::sym_eigenvalues(&pseudo_inertia(p).0)?;
            rows.push((w[0], *w.last().unwrap()));
        }
        per_sample.push(rows);
    }
    let text = report::consistency_report(
        tr.times(),
        &margins,
        &per_sample,
        cfg.consistency.margin,
        cfg.consistency.uniform_margin,
    );
    write_output(out, "consistency.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_certify(cfg: &Config, out: &PathBuf) -> chaindyn::Result<()> {
    let tr = cfg.param_trajectory()?;
    let grid = cfg.q_grid()?;
    let restarts = cfg.grids.as_ref().map(|g| g.random_restarts).unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cert = bounds::certify(
        &cfg.chain,
        &tr,
        &grid,
        restarts,
        cfg.consistency.uniform_margin,
        &mut rng,
    )?;
    let grid_desc = grid
        .axes
        .iter()
        .map(|a| format!("[{:.6},{:.6}]x{}", a.min, a.max, a.count))
        .collect::<Vec<_>>()
        .join(" ");
    let text = report::certificate_report(&cert, &grid_desc, cfg.seed);
    write_output(out, "certificate.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_verify(cfg: &Config, out: &PathBuf) -> chaindyn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clouds = cfg.clouds().ok();
    let oracle_times = cfg
        .verify
        .oracle_times_s
        .clone()
        .unwrap_or_else(|| vec![0.2, 0.7, 1.3]);
    let outcome = verify::run_suite(
        &cfg.chain,
        clouds.as_deref(),
        cfg.verify.tuples,
        &oracle_times,
        cfg.verify.inject_fault,
        &mut rng,
    )?;
    let text = report::verify_report(&outcome, cfg.seed);
    write_output(out, "verify.txt", &text)?;
    print!("{text}");
    if outcome.all_pass() {
        Ok(())
    } else {
        // distinct exit code for a failed property suite
        std::process::exit(4);
    }
}
