//! Vortex solutions for prescribed zeros.
//!
//! Writing `Ψ = e^{v/2} σ_ref` with a smooth periodic real `v`, equation (2)
//! fixes the connection as `A = A_ref + ½(∂v dz − ∂̄v dz̄)` and equation (1)
//! becomes the scalar equation
//!
//! ```text
//!     Δv = 4h²(e^v W − 1) + 2c,     W = |σ_ref|² H,  c = 2πN/(Lx·Ly)
//! ```
//!
//! which is solved by damped Newton iteration with a spectrally
//! preconditioned conjugate-gradient inner solve. Integrating it gives the
//! area constraint `Area − ∫|Ψ|²_H h² dx dy = πN`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Zip};

use crate::bundle::{
    curvature, dbar_a, landau_strength, reference_background, Configuration, Connection,
    HermitianMetric, ReferenceBackground, Section,
};
use crate::spectral::Field;
use crate::surface::{OneForm, Surface};
use crate::{Error, Result, C64};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Target for the max-norm of the equation (1) defect.
    pub tol: f64,
    /// Relative residual for the inner conjugate-gradient solves.
    pub linear_tol: f64,
    /// Fall back to an area staircase when direct Newton fails.
    pub continuation: bool,
    /// Starting `v`, e.g. a nearby solution.
    pub initial_guess: Option<Array2<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 60,
            tol: 1e-12,
            linear_tol: 1e-12,
            continuation: true,
            initial_guess: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VortexSolution {
    config: Configuration,
    background: ReferenceBackground,
    v: Array2<f64>,
    residual1: f64,
    residual2: f64,
    iterations: usize,
    max_psi_sq: f64,
}

/// Tolerance on the monitored bound `|Ψ|²_H ≤ 1`.
pub const PSI_BOUND_TOL: f64 = 1e-6;

impl VortexSolution {
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn surface(&self) -> &Arc<Surface> {
        &self.config.surface
    }

    pub fn degree(&self) -> i32 {
        self.config.degree()
    }

    pub fn positions(&self) -> &[C64] {
        self.background.zeros()
    }

    pub fn background(&self) -> &ReferenceBackground {
        &self.background
    }

    /// Regular part `v` of `log|Ψ|²_H = v + log|σ_ref|² + log H`.
    pub fn regular_profile(&self) -> &Array2<f64> {
        &self.v
    }

    /// `u = log|Ψ|²_H` (−∞ at the zeros).
    pub fn log_profile(&self) -> Array2<f64> {
        self.config.psi_norm_sq().mapv(f64::ln)
    }

    /// Max-norm of the equation (1) defect.
    pub fn residual1(&self) -> f64 {
        self.residual1
    }

    /// L²-norm of `∂̄_A Ψ`.
    pub fn residual2(&self) -> f64 {
        self.residual2
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn max_psi_sq(&self) -> f64 {
        self.max_psi_sq
    }

    pub fn psi_bound_ok(&self) -> bool {
        self.max_psi_sq <= 1.0 + PSI_BOUND_TOL
    }

    /// `∫|Ψ|²_H h² dx dy`.
    pub fn section_mass(&self) -> f64 {
        section_mass(&self.config)
    }

    /// Relative defect of `Area − ∫|Ψ|²_H h² = πN`.
    pub fn bradlow_defect(&self) -> f64 {
        bradlow_defect(&self.config)
    }
}

pub fn section_mass(config: &Configuration) -> f64 {
    let s = &config.surface;
    let w = config.psi_norm_sq() * &s.h_squared();
    s.integrate_real(&w)
}

pub fn bradlow_defect(config: &Configuration) -> f64 {
    let target = PI * config.degree() as f64;
    let lhs = config.surface.area() - section_mass(config);
    if target == 0.0 {
        lhs.abs()
    } else {
        ((lhs - target) / target).abs()
    }
}

/// `(r1, r2)`: max-norm of the coefficient of `F(A) − (1 − |Ψ|²_H)ω` and
/// L²-norm of `∂̄_A Ψ`.
pub fn residuals(config: &Configuration) -> Result<(f64, f64)> {
    let s = &config.surface;
    let f = curvature(s, &config.connection)?;
    let rho = config.psi_norm_sq();
    let h2 = s.h_squared();
    let mut r1: f64 = 0.0;
    Zip::from(f.coef())
        .and(&rho)
        .and(&h2)
        .for_each(|f, r, h2| r1 = r1.max((f - C64::new((1.0 - r) * h2, 0.0)).norm()));
    let d = dbar_a(s, &config.connection, &config.section)?;
    let r2 = (d.iter().map(|v| v.norm_sqr()).sum::<f64>() * s.cell_area()).sqrt();
    Ok((r1, r2))
}

/// Builds `(A, Ψ)` from the regular profile `v`.
pub fn assemble(
    surface: &Arc<Surface>,
    metric: &HermitianMetric,
    background: &ReferenceBackground,
    v: &Array2<f64>,
) -> Result<Configuration> {
    let s = surface.as_ref();
    let vc = v.mapv(|x| C64::new(x, 0.0));
    let dv = s.spectral().del(&vc, 0.0) * 0.5;
    let a = background
        .connection()
        .periodic_part()
        .add(&OneForm::imaginary(dv));
    let degree = background.degree();
    let psi = background
        .section()
        .mul_function(&v.mapv(|x| C64::new((0.5 * x).exp(), 0.0)));
    Configuration::new(
        surface.clone(),
        metric.clone(),
        Connection::new(a, degree)?,
        Section::new(psi.into_field(), degree),
    )
}

struct Problem<'a> {
    s: &'a Surface,
    w: Array2<f64>,
    h2: Array2<f64>,
    c: f64,
}

impl Problem<'_> {
    /// `Δv − 4h²(e^v W − 1) − 2c`; four times the equation (1) defect.
    fn residual(&self, v: &Array2<f64>) -> Array2<f64> {
        let mut r = self.s.spectral().laplacian_real(v);
        Zip::from(&mut r)
            .and(v)
            .and(&self.w)
            .and(&self.h2)
            .for_each(|r, v, w, h2| *r -= 4.0 * h2 * (v.exp() * w - 1.0) + 2.0 * self.c);
        r
    }

    fn weight(&self, v: &Array2<f64>) -> Array2<f64> {
        Zip::from(v)
            .and(&self.w)
            .and(&self.h2)
            .map_collect(|v, w, h2| 4.0 * h2 * v.exp() * w)
    }

    fn newton(&self, mut v: Array2<f64>, opts: &SolveOptions) -> Result<(Array2<f64>, usize)> {
        let mut r = self.residual(&v);
        let mut iters = 0;
        loop {
            let rmax = max_abs(&r) / 4.0;
            if !rmax.is_finite() {
                return Err(Error::NotConverged {
                    iterations: iters,
                    residual: rmax,
                });
            }
            if rmax <= opts.tol {
                return Ok((v, iters));
            }
            if iters >= opts.max_iter {
                return Err(Error::NotConverged {
                    iterations: iters,
                    residual: rmax,
                });
            }
            iters += 1;
            let m = self.weight(&v);
            let shift = m.iter().cloned().fold(0.0, f64::max).max(1e-12);
            let sp = self.s.spectral();
            let step = pcg(
                |x| {
                    let mut y = sp.laplacian_real(x).mapv(|v| -v);
                    Zip::from(&mut y).and(&m).and(x).for_each(|y, m, x| *y += m * x);
                    y
                },
                |x| sp.inverse_helmholtz_real(x, shift),
                &r,
                opts.linear_tol,
                2000,
            )?;
            let norm0 = l2(&r);
            let mut t = 1.0;
            loop {
                let trial = &v + &(&step * t);
                let rt = self.residual(&trial);
                let nt = l2(&rt);
                if nt.is_finite() && nt < norm0 {
                    v = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
                if t < 1.0 / 1024.0 {
                    // No descent left: accept only if already at round-off level.
                    let rmax = max_abs(&r) / 4.0;
                    if rmax <= opts.tol.max(1e-10) {
                        return Ok((v, iters));
                    }
                    return Err(Error::NotConverged {
                        iterations: iters,
                        residual: rmax,
                    });
                }
            }
        }
    }
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn l2(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |s, x, y| s + x * y)
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator. Stops when `‖b − Ax‖ ≤ tol·‖b‖`.
pub(crate) fn pcg(
    apply: impl Fn(&Array2<f64>) -> Array2<f64>,
    precondition: impl Fn(&Array2<f64>) -> Array2<f64>,
    b: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    let bnorm = l2(b);
    let mut x = Array2::zeros(b.dim());
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve(format!(
                "operator not positive definite (p·Ap = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        if l2(&r) <= tol * bnorm {
            return Ok(x);
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &(&p * beta);
    }
    // Round-off can stall just above a very tight tolerance.
    let final_rel = l2(&(b - &apply(&x))) / bnorm;
    if final_rel <= tol * 100.0 {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!(
            "CG stalled at relative residual {final_rel:e}"
        )))
    }
}

/// Solves the vortex equations with zeros at `positions` (`N = positions.len()`).
pub fn solve(
    surface: &Arc<Surface>,
    metric: &HermitianMetric,
    positions: &[C64],
    opts: &SolveOptions,
) -> Result<VortexSolution> {
    let s = surface.as_ref();
    s.check_shape(metric.values().dim())?;
    let degree = positions.len();
    let area = s.area();
    let bound = PI * degree as f64;
    if area <= bound {
        return Err(Error::BradlowViolated { area, bound });
    }
    let background = reference_background(s, positions)?;
    let w = metric.norm_sq(background.section().field());
    let h2 = s.h_squared();
    let c = landau_strength(s, degree as i32);
    let problem = Problem { s, w, h2, c };

    let mut guesses: Vec<Array2<f64>> = Vec::new();
    if let Some(g) = &opts.initial_guess {
        s.check_shape(g.dim())?;
        guesses.push(g.clone());
    }
    // Smoothed clip: e^{v₀}W = W/(W + δ) ≈ min(1, W/δ).
    let delta = 0.05 * problem.w.iter().cloned().fold(0.0, f64::max);
    guesses.push(problem.w.mapv(|w| -(w + delta).ln()));
    // Flat guess carrying the right total mass, good near the area bound.
    let mass = s.integrate_real(&(&problem.w * &problem.h2));
    guesses.push(Array2::from_elem(s.shape(), ((area - bound) / mass).ln()));

    let mut last_err = None;
    for g in guesses {
        match problem.newton(g, opts) {
            Ok((v, iters)) => return finish(surface, metric, background, v, iters),
            Err(e) => last_err = Some(e),
        }
    }
    if opts.continuation {
        match continuation(&problem, area, bound, opts) {
            Ok((v, iters)) => return finish(surface, metric, background, v, iters),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt was made"))
}

/// Area staircase: the excess area over the bound is halved at every step,
/// starting from at least twice the actual area.
fn continuation(
    problem: &Problem<'_>,
    area: f64,
    bound: f64,
    opts: &SolveOptions,
) -> Result<(Array2<f64>, usize)> {
    let excess = area - bound;
    let mut levels = vec![excess];
    while *levels.last().unwrap() < 2.0 * area {
        let next = levels.last().unwrap() * 2.0;
        levels.push(next);
    }
    levels.reverse();
    let mut v: Option<Array2<f64>> = None;
    let mut total = 0;
    for e in levels {
        let scale = (bound + e) / area;
        let scaled = Problem {
            s: problem.s,
            w: problem.w.clone(),
            h2: &problem.h2 * scale,
            c: problem.c,
        };
        let start = match v.take() {
            Some(v) => v,
            None => {
                let mass = problem.s.integrate_real(&(&scaled.w * &scaled.h2));
                Array2::from_elem(problem.s.shape(), (e / mass).ln())
            }
        };
        let (next, iters) = scaled.newton(start, opts)?;
        total += iters;
        v = Some(next);
    }
    Ok((v.unwrap(), total))
}

fn finish(
    surface: &Arc<Surface>,
    metric: &HermitianMetric,
    background: ReferenceBackground,
    v: Array2<f64>,
    iterations: usize,
) -> Result<VortexSolution> {
    let config = assemble(surface, metric, &background, &v)?;
    let (residual1, residual2) = residuals(&config)?;
    let max_psi_sq = config.psi_norm_sq().iter().cloned().fold(0.0, f64::max);
    Ok(VortexSolution {
        config,
        background,
        v,
        residual1,
        residual2,
        iterations,
        max_psi_sq,
    })
}

/// `|Ψ|²_H` of a solution as a complex field (for snapshots).
pub fn density_field(sol: &VortexSolution) -> Field {
    sol.config().psi_norm_sq().mapv(|v| C64::new(v, 0.0))
}
