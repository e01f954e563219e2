//! The four workflows behind the `vlab` subcommands.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use vlab_core::io::{write_atomic, write_csv, write_raw};
use vlab_core::kahler::{omega, omega_psi0, FixedSection};
use vlab_core::report::VerificationReport;
use vlab_core::solver::{solve, VortexSolution};
use vlab_core::spectral::Field;
use vlab_core::tangent::{
    gauge_project, gram_matrix, tangent_from_positions, Direction, PositionTangentOptions,
    TangentVector,
};
use vlab_core::{Error, C64};

use crate::battery::{condition_number, run_battery, Setup};
use crate::config::{Psi0Choice, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub degree: usize,
    pub positions: Vec<[f64; 2]>,
    pub grid: [usize; 2],
    pub area: f64,
    pub bradlow_bound: f64,
    pub iterations: Option<usize>,
    pub residual1: Option<f64>,
    pub residual2: Option<f64>,
    /// `∫|Ψ|²_H h² dx dy`.
    pub section_mass: Option<f64>,
    pub bradlow_defect: Option<f64>,
    pub max_psi_sq: Option<f64>,
    pub psi_bound_ok: Option<bool>,
    pub last_residual: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

fn csv_bytes(lx: f64, ly: f64, f: &Field) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, lx, ly, f)?;
    Ok(buf)
}

fn solve_config(cfg: &RunConfig) -> CliResult<VortexSolution> {
    let s = cfg.surface()?;
    let h = cfg.hermitian_metric(&s)?;
    Ok(solve(&s, &h, &cfg.positions(), &cfg.solve_options())?)
}

/// Solves and writes `psi.csv`, `psi.vlab` (the section in the Landau frame,
/// periodic in x and twisted in y), `density.csv` (`|Ψ|²_H`) and
/// `summary.json`.
pub fn cmd_solve(cfg: &RunConfig) -> CliResult<SolveSummary> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let s = cfg.surface()?;
    let mut summary = SolveSummary {
        converged: false,
        degree: cfg.degree(),
        positions: cfg.bundle.positions.clone(),
        grid: [s.nx(), s.ny()],
        area: s.area(),
        bradlow_bound: std::f64::consts::PI * cfg.degree() as f64,
        iterations: None,
        residual1: None,
        residual2: None,
        section_mass: None,
        bradlow_defect: None,
        max_psi_sq: None,
        psi_bound_ok: None,
        last_residual: None,
    };
    let sol = match solve_config(cfg) {
        Ok(sol) => sol,
        Err(CliError::Core(Error::NotConverged { iterations, residual })) => {
            summary.iterations = Some(iterations);
            summary.last_residual = Some(residual);
            write_json(&dir.join("summary.json"), &summary)?;
            return Err(Error::NotConverged { iterations, residual }.into());
        }
        Err(e) => return Err(e),
    };
    let (lx, ly) = (s.lx(), s.ly());
    let psi = sol.config().section.field();
    write_atomic(&dir.join("psi.csv"), &csv_bytes(lx, ly, psi)?)?;
    let mut raw = Vec::new();
    write_raw(&mut raw, lx, ly, psi)?;
    write_atomic(&dir.join("psi.vlab"), &raw)?;
    let density = sol.config().psi_norm_sq().mapv(|v| C64::new(v, 0.0));
    write_atomic(&dir.join("density.csv"), &csv_bytes(lx, ly, &density)?)?;

    summary.converged = true;
    summary.iterations = Some(sol.iterations());
    summary.residual1 = Some(sol.residual1());
    summary.residual2 = Some(sol.residual2());
    summary.section_mass = Some(sol.section_mass());
    summary.bradlow_defect = Some(sol.bradlow_defect());
    summary.max_psi_sq = Some(sol.max_psi_sq());
    summary.psi_bound_ok = Some(sol.psi_bound_ok());
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn position_basis(cfg: &RunConfig, sol: &VortexSolution) -> CliResult<(Vec<String>, Vec<TangentVector>)> {
    let opts = PositionTangentOptions {
        eps: cfg.verify.tangent_eps,
        richardson: false,
        solver: cfg.solve_options(),
    };
    let jobs: Vec<(usize, Direction)> = (0..sol.positions().len())
        .flat_map(|k| [(k, Direction::X), (k, Direction::Y)])
        .collect();
    let tangents = jobs
        .par_iter()
        .map(|&(k, d)| {
            let raw = tangent_from_positions(sol, k, d, &opts)?;
            Ok(gauge_project(sol.config(), &raw)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let labels = jobs
        .iter()
        .map(|(k, d)| format!("z{k}_{}", if *d == Direction::X { "x" } else { "y" }))
        .collect();
    Ok((labels, tangents))
}

#[derive(Clone, Debug)]
pub struct TangentsOutcome {
    pub labels: Vec<String>,
    pub gram: Vec<Vec<f64>>,
    pub condition: f64,
    pub warnings: Vec<String>,
}

/// Writes the `𝒢` Gram matrix of the projected position tangents to
/// `gram.csv`.
pub fn cmd_tangents(cfg: &RunConfig) -> CliResult<TangentsOutcome> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let sol = solve_config(cfg)?;
    let (labels, basis) = position_basis(cfg, &sol)?;
    let gram = gram_matrix(sol.config(), &basis)?;
    let mut csv = String::from("tangent");
    for l in &labels {
        write!(csv, ",{l}").unwrap();
    }
    csv.push('\n');
    for (l, row) in labels.iter().zip(&gram) {
        csv.push_str(l);
        for v in row {
            write!(csv, ",{v:?}").unwrap();
        }
        csv.push('\n');
    }
    write_atomic(&dir.join("gram.csv"), csv.as_bytes())?;
    let warnings = labels
        .iter()
        .zip(&basis)
        .filter_map(|(l, t)| t.warning().map(|w| format!("{l}: {w}")))
        .collect();
    Ok(TangentsOutcome {
        condition: condition_number(&gram),
        labels,
        gram,
        warnings,
    })
}

/// Runs the identity battery and writes `reports.json`.
pub fn cmd_verify(cfg: &RunConfig, sabotage: bool) -> CliResult<Vec<VerificationReport>> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let setup = Setup::new(cfg, sabotage)?;
    let reports = run_battery(&setup)?;
    write_json(&dir.join("reports.json"), &reports)?;
    Ok(reports)
}

pub fn render_table(reports: &[VerificationReport]) -> String {
    let width = reports.iter().map(|r| r.identity.len()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<6} {:<width$} {:<10} {:>10} {:>10}  note\n", "status", "identity", "tag", "defect", "tol");
    for r in reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let mut note = r.note.clone().unwrap_or_default();
        if let Some(p) = &r.prefactor {
            if !note.is_empty() {
                note.push_str("; ");
            }
            write!(note, "prefactor {p}").unwrap();
        }
        writeln!(
            out,
            "{status:<6} {:<width$} {:<10} {:>10.3e} {:>10.1e}  {note}",
            r.identity, r.tag, r.defect, r.tolerance
        )
        .unwrap();
    }
    if let Some(r) = reports.first() {
        let failed = reports.iter().filter(|r| !r.pass).count();
        writeln!(
            out,
            "{} checks, {failed} failed (grid {}x{}, N = {}, seed {})",
            reports.len(),
            r.context.nx,
            r.context.ny,
            r.context.degree,
            r.context.seed
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub position: [f64; 2],
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub omega12: f64,
    pub omega_psi0_12: f64,
    pub status: String,
}

pub fn sweep_positions(cfg: &RunConfig) -> Vec<[f64; 2]> {
    if !cfg.sweep.positions.is_empty() {
        return cfg.sweep.positions.clone();
    }
    let [cols, rows] = cfg.sweep.counts;
    let (lx, ly) = (cfg.surface.lx, cfg.surface.ly);
    (0..rows)
        .flat_map(|j| {
            (0..cols).map(move |i| {
                [
                    (i as f64 + 0.5) / cols as f64 * lx,
                    (j as f64 + 0.5) / rows as f64 * ly,
                ]
            })
        })
        .collect()
}

fn sweep_row(cfg: &RunConfig, psi0: &FixedSection, p: [f64; 2]) -> CliResult<SweepRow> {
    let mut row_cfg = cfg.clone();
    if row_cfg.bundle.positions.is_empty() {
        return Err(CliError::Config("sweep needs at least one vortex".into()));
    }
    row_cfg.bundle.positions[0] = p;
    let sol = solve_config(&row_cfg)?;
    let (_, basis) = position_basis(&row_cfg, &sol)?;
    let (x, y) = (&basis[0], &basis[1]);
    let gram = gram_matrix(sol.config(), &basis[..2])?;
    let c = sol.config();
    Ok(SweepRow {
        position: p,
        g11: gram[0][0],
        g12: gram[0][1],
        g22: gram[1][1],
        omega12: omega(c, x, y)?,
        omega_psi0_12: omega_psi0(c, psi0, x, y)?,
        status: "ok".into(),
    })
}

/// Moves the first vortex over the sweep positions and records the `𝒢`,
/// `Ω` and `Ω_{Ψ₀}` entries of its translation tangents. Failed rows are
/// kept with their error as status.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    if cfg.degree() == 0 {
        return Err(CliError::Config("sweep needs at least one vortex".into()));
    }
    let s = cfg.surface()?;
    let h = cfg.hermitian_metric(&s)?;
    let psi0 = match &cfg.psi0 {
        Psi0Choice::Unit => FixedSection::unit(&h),
        Psi0Choice::Solved => FixedSection::from_section(&h, solve_config(cfg)?.config().section.clone())?,
        Psi0Choice::Theta { zeros } => {
            let z: Vec<C64> = zeros.iter().map(|z| C64::new(z[0], z[1])).collect();
            FixedSection::theta_with_zeros(&s, &h, &z)?
        }
    };
    let rows: Vec<SweepRow> = sweep_positions(cfg)
        .par_iter()
        .map(|&p| {
            sweep_row(cfg, &psi0, p).unwrap_or_else(|e| SweepRow {
                position: p,
                g11: f64::NAN,
                g12: f64::NAN,
                g22: f64::NAN,
                omega12: f64::NAN,
                omega_psi0_12: f64::NAN,
                status: format!("error: {e}").replace(',', ";"),
            })
        })
        .collect();
    let mut csv = String::from("x,y,g11,g12,g22,omega12,omega_psi0_12,status\n");
    for r in &rows {
        writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.position[0], r.position[1], r.g11, r.g12, r.g22, r.omega12, r.omega_psi0_12, r.status
        )
        .unwrap();
    }
    write_atomic(&dir.join("sweep.csv"), csv.as_bytes())?;
    Ok(rows)
}
