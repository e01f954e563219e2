use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vlab_cli::commands::{cmd_solve, cmd_sweep, cmd_tangents, cmd_verify, render_table};
use vlab_cli::config::parse_grid;
use vlab_cli::{CliError, CliResult, RunConfig};

/// Abelian vortices on a flat torus: solve, build moduli tangents, verify
/// the Kähler and prequantum identities.
#[derive(Parser, Debug)]
#[command(name = "vlab", version)]
struct Cli {
    /// TOML run configuration (defaults are used when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Battery seed, overrides `verify.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid size as <nx>x<ny>, overrides the surface resolution.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the vortex equations and write field snapshots.
    Solve,
    /// Write the Gram matrix of the projected position tangents.
    Tangents,
    /// Run the identity battery.
    Verify {
        /// Flip the sign of Omega (mutation check).
        #[arg(long, hide = true)]
        sabotage: bool,
    },
    /// Sweep the first vortex over a grid of positions.
    Sweep,
    /// Print the effective configuration as TOML.
    Config,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
    }
    if let Some((nx, ny)) = cli.grid {
        cfg.surface.nx = nx;
        cfg.surface.ny = ny;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Config => print!("{}", cfg.emit()),
        Command::Solve => {
            let s = cmd_solve(&cfg)?;
            println!(
                "converged in {} iterations: residual1 {:.3e}, residual2 {:.3e}, Area - int|Psi|^2 h^2 = {:.12} (pi N = {:.12})",
                s.iterations.unwrap_or(0),
                s.residual1.unwrap_or(f64::NAN),
                s.residual2.unwrap_or(f64::NAN),
                s.area - s.section_mass.unwrap_or(f64::NAN),
                s.bradlow_bound,
            );
            if s.psi_bound_ok == Some(false) {
                eprintln!("warning: max |Psi|^2_H = {:.9} exceeds 1", s.max_psi_sq.unwrap_or(f64::NAN));
            }
        }
        Command::Tangents => {
            let t = cmd_tangents(&cfg)?;
            for w in &t.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} tangents, Gram condition number {:.4}", t.labels.len(), t.condition);
        }
        Command::Verify { sabotage } => {
            let reports = cmd_verify(&cfg, sabotage)?;
            print!("{}", render_table(&reports));
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::IdentitiesFailed {
                    failed,
                    total: reports.len(),
                });
            }
        }
        Command::Sweep => {
            let rows = cmd_sweep(&cfg)?;
            let bad = rows.iter().filter(|r| r.status != "ok").count();
            println!("{} rows, {bad} failed", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("VLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
