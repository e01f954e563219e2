//! Run configuration, read from and written as TOML.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use vlab_core::bundle::HermitianMetric;
use vlab_core::solver::SolveOptions;
use vlab_core::surface::{Profile, Surface};
use vlab_core::C64;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub surface: SurfaceConfig,
    pub bundle: BundleConfig,
    pub metric: Profile,
    pub psi0: Psi0Choice,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    /// Conformal factor `h`.
    pub h: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BundleConfig {
    /// Vortex positions `[x, y]`; the degree is their count.
    pub positions: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Psi0Choice {
    Unit,
    Solved,
    Theta { zeros: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub linear_tol: f64,
    pub continuation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random tangent pairs for the bilinear-form identities.
    pub pairs: usize,
    pub gauge_transforms: usize,
    pub hamiltonian_pairs: usize,
    pub orthogonality_probes: usize,
    /// Finite-difference steps for `dH_ζ`.
    pub hamiltonian_eps: Vec<f64>,
    /// Step for position tangents.
    pub tangent_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Grid of positions `[cols, rows]` over the fundamental domain.
    pub counts: [usize; 2],
    /// Explicit positions; replaces the grid when non-empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: SurfaceConfig {
                lx: TAU,
                ly: TAU,
                nx: 128,
                ny: 128,
                h: Profile::default(),
            },
            bundle: BundleConfig {
                positions: vec![[0.5 * TAU, 0.5 * TAU]],
            },
            metric: Profile::default(),
            psi0: Psi0Choice::Solved,
            solver: SolverConfig {
                max_iter: 60,
                tol: 1e-12,
                linear_tol: 1e-12,
                continuation: true,
            },
            verify: VerifyConfig {
                seed: 0,
                pairs: 32,
                gauge_transforms: 8,
                hamiltonian_pairs: 16,
                orthogonality_probes: 16,
                hamiltonian_eps: vec![1e-4, 2e-4],
                tangent_eps: 1e-3,
            },
            sweep: SweepConfig {
                counts: [4, 4],
                positions: Vec::new(),
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
            },
        }
    }
}

// Missing sections and keys fall back to the defaults above.
macro_rules! default_from_run {
    ($($ty:ty => $field:ident),*) => {$(
        impl Default for $ty {
            fn default() -> Self {
                RunConfig::default().$field
            }
        }
    )*};
}

default_from_run!(
    SurfaceConfig => surface,
    BundleConfig => bundle,
    SolverConfig => solver,
    VerifyConfig => verify,
    SweepConfig => sweep,
    OutputConfig => output
);

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn check_profile(name: &str, p: &Profile) -> CliResult<()> {
    match *p {
        Profile::Constant { value } => positive(name, value),
        Profile::Cosine { base, amplitude, .. } => {
            positive(name, base)?;
            if amplitude.abs() >= 1.0 || !amplitude.is_finite() {
                return Err(CliError::Config(format!(
                    "{name}: cosine amplitude must lie in (-1, 1)"
                )));
            }
            Ok(())
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> CliResult<()> {
        let s = &self.surface;
        positive("surface.lx", s.lx)?;
        positive("surface.ly", s.ly)?;
        if s.nx < 8 || s.ny < 8 {
            return Err(CliError::Config("grid must be at least 8x8".into()));
        }
        check_profile("surface.h", &s.h)?;
        check_profile("metric", &self.metric)?;
        let points = self.bundle.positions.iter().chain(self.theta_zeros());
        for p in points.chain(&self.sweep.positions) {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(CliError::Config("positions must be finite".into()));
            }
        }
        if let Psi0Choice::Theta { zeros } = &self.psi0 {
            if zeros.len() != self.degree() {
                return Err(CliError::Config(format!(
                    "psi0 theta zeros: expected {} (the bundle degree), got {}",
                    self.degree(),
                    zeros.len()
                )));
            }
        }
        if self.solver.max_iter == 0 {
            return Err(CliError::Config("solver.max_iter must be at least 1".into()));
        }
        positive("solver.tol", self.solver.tol)?;
        positive("solver.linear_tol", self.solver.linear_tol)?;
        let v = &self.verify;
        if v.hamiltonian_eps.is_empty() {
            return Err(CliError::Config("verify.hamiltonian_eps must not be empty".into()));
        }
        for &e in &v.hamiltonian_eps {
            positive("verify.hamiltonian_eps", e)?;
        }
        positive("verify.tangent_eps", v.tangent_eps)?;
        if v.pairs < 2 {
            return Err(CliError::Config("verify.pairs must be at least 2".into()));
        }
        if self.sweep.counts.contains(&0) {
            return Err(CliError::Config("sweep.counts must be positive".into()));
        }
        Ok(())
    }

    fn theta_zeros(&self) -> impl Iterator<Item = &[f64; 2]> {
        match &self.psi0 {
            Psi0Choice::Theta { zeros } => zeros.iter(),
            _ => [].iter(),
        }
    }

    pub fn degree(&self) -> usize {
        self.bundle.positions.len()
    }

    pub fn positions(&self) -> Vec<C64> {
        self.bundle.positions.iter().map(|p| C64::new(p[0], p[1])).collect()
    }

    pub fn surface(&self) -> CliResult<Arc<Surface>> {
        let s = &self.surface;
        Ok(Surface::new(s.lx, s.ly, s.nx, s.ny, &s.h)?.shared())
    }

    pub fn hermitian_metric(&self, s: &Surface) -> CliResult<HermitianMetric> {
        Ok(HermitianMetric::from_profile(s, &self.metric)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            max_iter: self.solver.max_iter,
            tol: self.solver.tol,
            linear_tol: self.solver.linear_tol,
            continuation: self.solver.continuation,
            initial_guess: None,
        }
    }
}

/// Parses `--grid` values such as `128x96`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected <nx>x<ny>, got {s:?}"))?;
    let nx = a.trim().parse().map_err(|e| format!("bad nx {a:?}: {e}"))?;
    let ny = b.trim().parse().map_err(|e| format!("bad ny {b:?}: {e}"))?;
    Ok((nx, ny))
}
