//! The identity battery behind `vlab verify`.
//!
//! Every item draws from its own seeded random stream, so the reports do not
//! depend on how rayon schedules the items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vlab_core::bundle::{dbar_a, Configuration};
use vlab_core::kahler::{
    hamiltonian_complex, metric_g, metric_g_closed_form, metric_g_complex, metric_g_psi0,
    moment_map, negativity_closed_form, norm_g, omega, omega_psi0, FixedSection,
};
use vlab_core::quillen::{
    b_form, kahler_form_f, quillen_pm, Sign, ThetaForms, ZeroOneForm, PREFACTOR,
    PREQUANTUM_TOLERANCE,
};
use vlab_core::random::{band_limited, band_limited_real, imaginary_field, imaginary_one_form};
use vlab_core::report::{ReportContext, VerificationReport};
use vlab_core::solver::{solve, VortexSolution};
use vlab_core::spectral::Field;
use vlab_core::surface::{integrate_two_form, wedge_one_one, OneForm, Profile};
use vlab_core::tangent::{
    apply_complex_structure, displaced, gauge_project, gauge_vector_field, gram_matrix,
    linearization_defect, push_forward, random_tangent, tangent_from_positions, Direction,
    PositionTangentOptions, TangentVector,
};
use vlab_core::C64;

use crate::config::{Psi0Choice, RunConfig, VerifyConfig};
use crate::error::CliResult;

/// Identity names paired with the claim each one checks. Every name is
/// emitted by the default battery.
pub const COVERAGE: &[(&str, &str)] = &[
    ("eq1_residual", "equation (1) holds at the solution"),
    ("eq2_residual", "equation (2) holds at the solution"),
    ("bradlow_identity", "Area - int |Psi|^2_H h^2 = pi N"),
    ("psi_bound", "|Psi|_H <= 1 (monitored)"),
    ("moment_map_vanishes", "equation (1) is mu = 0"),
    ("hamiltonian_at_solution", "H_zeta vanishes on solutions"),
    ("hamiltonian_real", "H_zeta is real for imaginary zeta"),
    ("hamiltonian_linearity", "H_zeta is linear in zeta"),
    ("metric_real", "G is real"),
    ("metric_two_paths", "G(X,X) = 4 int |a|^2 + 4 int |beta|^2_H h^2"),
    ("metric_symmetry", "G is symmetric"),
    ("metric_positive", "G is positive definite"),
    ("omega_antisymmetry", "Omega is antisymmetric"),
    ("compatibility", "G(I X, Y) = Omega(X, Y)"),
    ("complex_structure_square", "I^2 = -1"),
    ("omega_complex_invariance", "Omega(I X, I Y) = Omega(X, Y)"),
    ("gauge_invariance_metric", "G is gauge invariant"),
    ("gauge_invariance_omega", "Omega is gauge invariant"),
    ("gauge_invariance_omega_psi0", "Omega_Psi0 is gauge invariant"),
    ("gauge_equivariance_complex_structure", "I commutes with g_*"),
    ("gauge_invariance_moment_map", "mu is gauge invariant"),
    ("gauge_covariance_dbar", "dbar_A is gauge covariant"),
    ("hamiltonian_identity", "dH_zeta(X) = Omega(X_zeta, X)"),
    ("gauge_direction_linearization", "gauge orbits stay in the solution space"),
    ("gauge_orbit_projects_to_zero", "orbit directions project to zero"),
    ("projection_idempotent", "projection is idempotent"),
    ("orthogonality", "projected tangents are G-orthogonal to the gauge orbit"),
    ("position_tangent_linearization", "position tangents solve the linearized equations"),
    ("position_tangent_consistency", "position tangents converge as the step shrinks"),
    ("lemma_orthogonal_direction", "X orthogonal to the orbit => I X in T S"),
    ("lemma_probe_direction", "X along the orbit => I X not in T S"),
    ("translation_isotropy", "x and y translations have equal G-norm"),
    ("gram_condition", "position tangents span a nondegenerate plane"),
    ("constant_form", "Omega and Omega_Psi0 do not depend on (A, Psi)"),
    ("omega_psi0_unit", "Omega_Psi0 = Omega when |Psi0|_H = 1"),
    ("omega_psi0_scaling", "Omega_Psi0 is quadratic in Psi0"),
    ("omega_psi0_negativity", "Omega_Psi0(I X, X) closed form"),
    ("omega_psi0_negative", "Omega_Psi0(I X, X) < 0"),
    ("metric_g_psi0_symmetry", "G_Psi0 is symmetric"),
    ("metric_g_psi0_positive", "G_Psi0 is positive"),
    ("omega_psi0_nondegenerate", "Omega_Psi0 is nondegenerate on the moduli plane"),
    ("theta_forms", "theta wedge theta-bar = omega"),
    ("kahler_form_f", "Re int a1 ^ *2 a2 = -1/2 int alpha1 ^ alpha2"),
    ("b_form_gauge_invariance", "B is gauge invariant"),
    ("quillen_cross_terms", "cross terms cancel in F_+ + F_-"),
    ("prequantum_identity[unit]", "F_+ + F_- = (i/pi) Omega_Psi0, unit Psi0"),
    ("prequantum_identity[solved]", "F_+ + F_- = (i/pi) Omega_Psi0, solved Psi0"),
    ("prequantum_identity[theta]", "F_+ + F_- = (i/pi) Omega_Psi0, theta Psi0"),
    ("prequantum_identity[raw]", "F_+ + F_- = (i/pi) Omega_Psi0 off the solution space"),
];

/// Everything the battery items share: solutions, fixed sections and the
/// position tangents. Built once, read concurrently.
pub struct Setup {
    pub config: RunConfig,
    pub solution: VortexSolution,
    /// Degree-0 solution on the same surface, for the unit fixed section.
    pub trivial: VortexSolution,
    /// A second solution with shifted vortices.
    pub shifted: VortexSolution,
    pub unit: FixedSection,
    pub solved: FixedSection,
    pub theta: FixedSection,
    /// Projected position tangents at steps `ε` and `ε/2`, ordered
    /// `(k, x), (k, y)` per vortex.
    pub positions: Vec<TangentVector>,
    pub positions_fine: Vec<TangentVector>,
    /// `Ω` is multiplied by this sign; `-1` is the mutation hook.
    pub omega_sign: f64,
}

impl Setup {
    pub fn new(config: &RunConfig, sabotage: bool) -> CliResult<Setup> {
        let s = config.surface()?;
        let h = config.hermitian_metric(&s)?;
        let opts = config.solve_options();
        let pos = config.positions();
        let solution = solve(&s, &h, &pos, &opts)?;
        let trivial = solve(&s, &h, &[], &opts)?;
        let offset = C64::new(0.173 * s.lx(), 0.291 * s.ly());
        let moved: Vec<C64> = pos.iter().map(|z| z + offset).collect();
        let shifted = solve(&s, &h, &moved, &opts)?;
        let theta_zeros: Vec<C64> = match &config.psi0 {
            Psi0Choice::Theta { zeros } => zeros.iter().map(|z| C64::new(z[0], z[1])).collect(),
            _ => pos
                .iter()
                .map(|z| z + C64::new(0.25 * s.lx(), 0.3 * s.ly()))
                .collect(),
        };
        let unit = FixedSection::unit(&h);
        let solved = FixedSection::from_section(&h, solution.config().section.clone())?;
        let theta = FixedSection::theta_with_zeros(&s, &h, &theta_zeros)?;

        let eps = config.verify.tangent_eps;
        let jobs: Vec<(usize, Direction, f64)> = (0..pos.len())
            .flat_map(|k| [Direction::X, Direction::Y].map(|d| (k, d)))
            .flat_map(|(k, d)| [(k, d, eps), (k, d, 0.5 * eps)])
            .collect();
        let tangents = jobs
            .par_iter()
            .map(|&(k, d, e)| {
                let popts = PositionTangentOptions {
                    eps: e,
                    richardson: false,
                    solver: opts.clone(),
                };
                let raw = tangent_from_positions(&solution, k, d, &popts)?;
                Ok(gauge_project(solution.config(), &raw)?)
            })
            .collect::<CliResult<Vec<_>>>()?;
        let (positions, positions_fine) = tangents
            .chunks(2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .unzip();
        Ok(Setup {
            config: config.clone(),
            solution,
            trivial,
            shifted,
            unit,
            solved,
            theta,
            positions,
            positions_fine,
            omega_sign: if sabotage { -1.0 } else { 1.0 },
        })
    }

    pub fn context(&self) -> ReportContext {
        let s = self.solution.surface();
        ReportContext {
            nx: s.nx(),
            ny: s.ny(),
            degree: self.solution.degree(),
            seed: self.config.verify.seed,
        }
    }

    fn verify(&self) -> &VerifyConfig {
        &self.config.verify
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.verify().seed);
        rng.set_stream(stream);
        rng
    }

    fn c(&self) -> &Configuration {
        self.solution.config()
    }

    /// The configured fixed section.
    pub fn psi0(&self) -> &FixedSection {
        match self.config.psi0 {
            Psi0Choice::Unit => &self.unit,
            Psi0Choice::Solved => &self.solved,
            Psi0Choice::Theta { .. } => &self.theta,
        }
    }

    fn omega(&self, c: &Configuration, x: &TangentVector, y: &TangentVector) -> CliResult<f64> {
        Ok(self.omega_sign * omega(c, x, y)?)
    }

    fn omega_psi0(&self, c: &Configuration, p: &FixedSection, x: &TangentVector, y: &TangentVector) -> CliResult<f64> {
        Ok(self.omega_sign * omega_psi0(c, p, x, y)?)
    }

    fn report(&self, identity: &str, tag: &str, defect: f64, tol: f64) -> VerificationReport {
        VerificationReport::new(identity, tag, defect, tol, self.context())
    }

    /// Lower-bound check `value > floor`, reported as `floor/value ≤ 1`.
    fn lower_bound(&self, identity: &str, tag: &str, value: f64, floor: f64) -> VerificationReport {
        self.report(identity, tag, floor / value, 1.0)
            .with_note(format!("measured {value:.3e}, must exceed {floor:e}"))
    }
}

type Item = fn(&Setup) -> CliResult<Vec<VerificationReport>>;

const ITEMS: &[Item] = &[
    solver_checks,
    moment_checks,
    compatibility_checks,
    gauge_checks,
    hamiltonian_checks,
    projection_checks,
    position_checks,
    psi0_checks,
    quillen_checks,
];

pub fn run_battery(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let parts = ITEMS
        .par_iter()
        .map(|item| item(setup))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

fn max_abs(f: &Field) -> f64 {
    f.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
}

fn random_pairs(setup: &Setup, c: &Configuration, stream: u64, n: usize, project: bool) -> CliResult<Vec<(TangentVector, TangentVector)>> {
    let mut rng = setup.rng(stream);
    (0..n)
        .map(|_| {
            let x = random_tangent(c, &mut rng);
            let y = random_tangent(c, &mut rng);
            if project {
                Ok((gauge_project(c, &x)?, gauge_project(c, &y)?))
            } else {
                Ok((x, y))
            }
        })
        .collect()
}

/// `|a − b|` over the Cauchy–Schwarz scale of a bilinear form.
fn bilinear_defect(c: &Configuration, a: f64, b: f64, x: &TangentVector, y: &TangentVector) -> CliResult<f64> {
    let scale = norm_g(c, x)? * norm_g(c, y)?;
    Ok((a - b).abs() / scale.max(f64::MIN_POSITIVE))
}

fn solver_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let sol = &setup.solution;
    Ok(vec![
        setup.report("eq1_residual", "solver", sol.residual1(), 1e-8),
        setup.report("eq2_residual", "solver", sol.residual2(), 1e-10),
        setup.report("bradlow_identity", "solver", sol.bradlow_defect(), 1e-6),
        setup
            .report("psi_bound", "solver", (sol.max_psi_sq() - 1.0).max(0.0), 1e-6)
            .with_note("monitored bound |Psi|^2_H <= 1"),
    ])
}

fn moment_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let s = c.surface.as_ref();
    let mut rng = setup.rng(1);
    let n = setup.verify().hamiltonian_pairs;
    let mut at_solution = Vec::new();
    let mut real = Vec::new();
    let mut linear = Vec::new();
    let off = Configuration::new(
        c.surface.clone(),
        c.metric.clone(),
        c.connection.shifted(&imaginary_one_form(s, &mut rng), 0.5)?,
        c.section.mul_function(&band_limited(s, &mut rng)),
    )?;
    for _ in 0..n {
        let z1 = imaginary_field(s, &mut rng);
        let z2 = imaginary_field(s, &mut rng);
        at_solution.push(hamiltonian_complex(c, &z1)?.norm() / max_abs(&z1));
        let (a, b) = (hamiltonian_complex(&off, &z1)?, hamiltonian_complex(&off, &z2)?);
        let ab = hamiltonian_complex(&off, &(&z1 + &z2))?;
        real.push(a.im.abs() / (1.0 + a.re.abs()));
        linear.push((ab - a - b).norm() / (1.0 + ab.norm()));
    }
    Ok(vec![
        setup.report("moment_map_vanishes", "moment_map", moment_map(c)?.max_abs(), 1e-8),
        setup.report("hamiltonian_at_solution", "moment_map", max_of(at_solution), 1e-8),
        setup
            .report("hamiltonian_real", "moment_map", max_of(real), 1e-12)
            .with_note("imaginary part of H_zeta off the solution space"),
        setup.report("hamiltonian_linearity", "moment_map", max_of(linear), 1e-12),
    ])
}

fn compatibility_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let pairs = random_pairs(setup, c, 2, setup.verify().pairs, false)?;
    let (mut real, mut two, mut sym, mut anti, mut compat, mut inv, mut square) =
        (vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    let mut nonpositive = 0usize;
    for (x, y) in &pairs {
        let g = metric_g_complex(c, x, y)?;
        real.push(g.im.abs() / (1.0 + g.re.abs()));
        two.push(bilinear_defect(c, g.re, metric_g_closed_form(c, x, y)?, x, y)?);
        sym.push(bilinear_defect(c, g.re, metric_g(c, y, x)?, x, y)?);
        let w = setup.omega(c, x, y)?;
        anti.push(bilinear_defect(c, w, -setup.omega(c, y, x)?, x, y)?);
        let ix = apply_complex_structure(x);
        let iy = apply_complex_structure(y);
        compat.push(bilinear_defect(c, w, metric_g(c, &ix, y)?, x, y)?);
        inv.push(bilinear_defect(c, w, setup.omega(c, &ix, &iy)?, x, y)?);
        let iix = apply_complex_structure(&ix);
        square.push(norm_g(c, &iix.add(x))? / norm_g(c, x)?);
        if !(metric_g(c, x, x)? > 0.0) {
            nonpositive += 1;
        }
    }
    let n = pairs.len();
    let note = format!("{n} random pairs");
    Ok(vec![
        setup.report("metric_real", "kahler", max_of(real), 1e-12).with_note(note.clone()),
        setup.report("metric_two_paths", "kahler", max_of(two), 1e-10).with_note(note.clone()),
        setup.report("metric_symmetry", "kahler", max_of(sym), 1e-10).with_note(note.clone()),
        setup
            .report("metric_positive", "kahler", nonpositive as f64 / n as f64, 0.0)
            .with_note("fraction of nonpositive G(X,X)"),
        setup.report("omega_antisymmetry", "kahler", max_of(anti), 1e-10).with_note(note.clone()),
        setup.report("compatibility", "kahler", max_of(compat), 1e-10).with_note(note.clone()),
        setup.report("complex_structure_square", "kahler", max_of(square), 0.0),
        setup.report("omega_complex_invariance", "kahler", max_of(inv), 1e-10).with_note(note),
    ])
}

fn gauge_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let s = c.surface.as_ref();
    let psi0 = setup.psi0();
    let mut rng = setup.rng(3);
    let (mut dg, mut dw, mut dw0, mut di, mut dmu, mut ddbar) =
        (vec![], vec![], vec![], vec![], vec![], vec![]);
    for _ in 0..setup.verify().gauge_transforms {
        let chi = band_limited_real(s, &mut rng).mapv(|v| 2.0 * v);
        let x = random_tangent(c, &mut rng);
        let y = random_tangent(c, &mut rng);
        // Move off the solution space so invariance is not trivially inherited.
        let p = displaced(c, &random_tangent(c, &mut rng), 0.3)?;
        let gp = p.gauge_transformed(&chi)?;
        let (gx, gy) = (push_forward(&x, &chi), push_forward(&y, &chi));
        let gpsi0 = psi0.gauge_transformed(&chi);
        dg.push(bilinear_defect(c, metric_g(&gp, &gx, &gy)?, metric_g(&p, &x, &y)?, &x, &y)?);
        dw.push(bilinear_defect(c, setup.omega(&gp, &gx, &gy)?, setup.omega(&p, &x, &y)?, &x, &y)?);
        dw0.push(bilinear_defect(
            c,
            setup.omega_psi0(&gp, &gpsi0, &gx, &gy)?,
            setup.omega_psi0(&p, psi0, &x, &y)?,
            &x,
            &y,
        )?);
        let a = push_forward(&apply_complex_structure(&x), &chi);
        let b = apply_complex_structure(&gx);
        di.push(norm_g(c, &a.sub(&b))? / norm_g(c, &x)?);
        dmu.push(moment_map(&gp)?.sub(&moment_map(&p)?).max_abs());
        let phase = chi.mapv(|v| C64::from_polar(1.0, -v));
        let lhs = dbar_a(s, &gp.connection, &gp.section)?;
        let rhs = dbar_a(s, &p.connection, &p.section)? * &phase;
        ddbar.push(max_abs(&(lhs - rhs)) / (1.0 + max_abs(p.section.field())));
    }
    let note = format!("{} random gauge transformations", setup.verify().gauge_transforms);
    Ok(vec![
        setup.report("gauge_invariance_metric", "gauge", max_of(dg), 1e-10).with_note(note.clone()),
        setup.report("gauge_invariance_omega", "gauge", max_of(dw), 1e-10).with_note(note.clone()),
        setup.report("gauge_invariance_omega_psi0", "gauge", max_of(dw0), 1e-10).with_note(note.clone()),
        setup.report("gauge_equivariance_complex_structure", "gauge", max_of(di), 1e-10).with_note(note.clone()),
        setup.report("gauge_invariance_moment_map", "gauge", max_of(dmu), 1e-10).with_note(note.clone()),
        setup.report("gauge_covariance_dbar", "gauge", max_of(ddbar), 1e-10).with_note(note),
    ])
}

/// `|dH_ζ(X) − Ω(X_ζ, X)| / (1 + |Ω(X_ζ, X)|)` for each random pair, with
/// `dH_ζ` the central difference along `p ± εX`.
pub fn hamiltonian_defects(setup: &Setup, eps: f64) -> CliResult<Vec<f64>> {
    let c = setup.c();
    let s = c.surface.as_ref();
    let mut rng = setup.rng(4);
    (0..setup.verify().hamiltonian_pairs)
        .map(|_| {
            let zeta = imaginary_field(s, &mut rng);
            let x = random_tangent(c, &mut rng);
            let plus = hamiltonian_complex(&displaced(c, &x, eps)?, &zeta)?.re;
            let minus = hamiltonian_complex(&displaced(c, &x, -eps)?, &zeta)?.re;
            let fd = (plus - minus) / (2.0 * eps);
            let target = setup.omega(c, &gauge_vector_field(c, &zeta)?, &x)?;
            Ok((fd - target).abs() / (1.0 + target.abs()))
        })
        .collect()
}

fn hamiltonian_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    setup
        .verify()
        .hamiltonian_eps
        .iter()
        .map(|&eps| {
            let d = hamiltonian_defects(setup, eps)?;
            Ok(setup
                .report("hamiltonian_identity", "moment_map", max_of(d), 1e-6)
                .with_note(format!("eps = {eps:e}, {} pairs", setup.verify().hamiltonian_pairs)))
        })
        .collect()
}

fn projection_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let s = c.surface.as_ref();
    let mut rng = setup.rng(5);
    let n = setup.verify().orthogonality_probes;
    let (mut lin, mut zero, mut idem, mut orth, mut probe) = (vec![], vec![], vec![], vec![], vec![]);
    let mut projected: Vec<TangentVector> = setup.positions.clone();
    for _ in 0..4 {
        projected.push(gauge_project(c, &random_tangent(c, &mut rng))?);
    }
    for x in &projected {
        let pp = gauge_project(c, x)?;
        idem.push(norm_g(c, &pp.sub(x))? / norm_g(c, x)?);
    }
    for _ in 0..n {
        let xz = gauge_vector_field(c, &imaginary_field(s, &mut rng))?;
        let l = linearization_defect(c, &xz)?;
        lin.push(l.max());
        zero.push(norm_g(c, &gauge_project(c, &xz)?)? / norm_g(c, &xz)?);
        probe.push(linearization_defect(c, &apply_complex_structure(&xz))?.eq1);
        for x in &projected {
            orth.push(bilinear_defect(c, metric_g(c, x, &xz)?, 0.0, x, &xz)?);
        }
    }
    let min_probe = probe.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(vec![
        setup.report("gauge_direction_linearization", "tangent", max_of(lin), 1e-8),
        setup.report("gauge_orbit_projects_to_zero", "tangent", max_of(zero), 1e-8),
        setup.report("projection_idempotent", "tangent", max_of(idem), 1e-10),
        setup
            .report("orthogonality", "tangent", max_of(orth), 1e-8)
            .with_note(format!("{n} random gauge directions")),
        setup.lower_bound("lemma_probe_direction", "tangent", min_probe, 1e-3),
    ])
}

fn position_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let mut out = Vec::new();
    if setup.positions.is_empty() {
        return Ok(out);
    }
    let mut lin = vec![];
    let mut lemma = vec![];
    let mut consistency = vec![];
    for (x, fine) in setup.positions.iter().zip(&setup.positions_fine) {
        lin.push(linearization_defect(c, x)?.max());
        lemma.push(linearization_defect(c, &apply_complex_structure(x))?.max());
        consistency.push(norm_g(c, &x.sub(fine))? / norm_g(c, x)?);
    }
    out.push(setup.report("position_tangent_linearization", "tangent", max_of(lin), 1e-6));
    out.push(
        setup
            .report("position_tangent_consistency", "tangent", max_of(consistency), 1e-5)
            .with_note(format!("steps {:e} and {:e}", setup.verify().tangent_eps, 0.5 * setup.verify().tangent_eps)),
    );
    out.push(setup.report("lemma_orthogonal_direction", "tangent", max_of(lemma), 1e-6));

    let flat = matches!(setup.config.surface.h, Profile::Constant { .. })
        && matches!(setup.config.metric, Profile::Constant { .. });
    if flat {
        let gx = metric_g(c, &setup.positions[0], &setup.positions[0])?;
        let gy = metric_g(c, &setup.positions[1], &setup.positions[1])?;
        out.push(setup.report("translation_isotropy", "tangent", (gx - gy).abs() / gx.max(gy), 1e-6));
    }
    let gram = gram_matrix(c, &setup.positions)?;
    let cond = condition_number(&gram);
    out.push(setup.report("gram_condition", "tangent", cond, 1e3));
    Ok(out)
}

/// Condition number of a symmetric positive matrix via Jacobi sweeps.
pub fn condition_number(m: &[Vec<f64>]) -> f64 {
    let ev = symmetric_eigenvalues(m);
    let max = ev.iter().cloned().fold(f64::MIN, f64::max);
    let min = ev.iter().cloned().fold(f64::MAX, f64::min);
    // Eigenvalues at roundoff level count as zero.
    if min <= 8.0 * f64::EPSILON * max {
        f64::INFINITY
    } else {
        max / min
    }
}

fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (sn, cs) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn psi0_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let psi0 = setup.psi0();
    let pairs = random_pairs(setup, c, 6, setup.verify().pairs, true)?;
    let (mut unit, mut scaling, mut neg, mut sym, mut constant) = (vec![], vec![], vec![], vec![], vec![]);
    let (mut nonneg, mut nonpos) = (0usize, 0usize);
    let k = C64::new(0.6, -1.3);
    let scaled = psi0.scaled(k);
    let other = setup.shifted.config();
    for (x, y) in &pairs {
        let w = setup.omega(c, x, y)?;
        unit.push(bilinear_defect(c, setup.omega_psi0(c, &setup.unit, x, y)?, w, x, y)?);
        let xa = TangentVector::new(x.alpha().clone(), Field::zeros(x.beta().dim()))?;
        let xb = TangentVector::new(OneForm::zeros(x.beta().dim()), x.beta().clone())?;
        let forms = setup.omega_psi0(c, psi0, &xa, y)?;
        let sections = setup.omega_psi0(c, psi0, &xb, y)?;
        scaling.push(bilinear_defect(
            c,
            setup.omega_psi0(c, &scaled, x, y)?,
            forms + k.norm_sqr() * sections,
            x,
            y,
        )?);
        let ix = apply_complex_structure(x);
        let value = setup.omega_psi0(c, psi0, &ix, x)?;
        let closed = negativity_closed_form(c, psi0, x)?;
        neg.push((value - closed).abs() / closed.abs());
        if !(value < 0.0) {
            nonneg += 1;
        }
        let g = metric_g_psi0(c, psi0, x, y)?;
        sym.push(bilinear_defect(c, g, metric_g_psi0(c, psi0, y, x)?, x, y)?);
        if !(metric_g_psi0(c, psi0, x, x)? > 0.0) {
            nonpos += 1;
        }
        constant.push(bilinear_defect(c, w, setup.omega(other, x, y)?, x, y)?);
        constant.push(bilinear_defect(
            c,
            setup.omega_psi0(c, psi0, x, y)?,
            setup.omega_psi0(other, psi0, x, y)?,
            x,
            y,
        )?);
    }
    let n = pairs.len() as f64;
    let mut out = vec![
        setup.report("omega_psi0_unit", "kahler", max_of(unit), 1e-12),
        setup.report("omega_psi0_scaling", "kahler", max_of(scaling), 1e-10),
        setup.report("omega_psi0_negativity", "kahler", max_of(neg), 1e-10),
        setup
            .report("omega_psi0_negative", "kahler", nonneg as f64 / n, 0.0)
            .with_note("fraction of battery members with Omega_Psi0(IX, X) >= 0"),
        setup.report("metric_g_psi0_symmetry", "kahler", max_of(sym), 1e-10),
        setup
            .report("metric_g_psi0_positive", "kahler", nonpos as f64 / n, 0.0)
            .with_note("fraction of nonpositive G_Psi0(X,X)"),
        setup.report("constant_form", "kahler", max_of(constant), 1e-12),
    ];
    if setup.positions.len() >= 2 {
        let (x, y) = (&setup.positions[0], &setup.positions[1]);
        let w = setup.omega_psi0(c, psi0, x, y)?;
        let gram = gram_matrix(c, &[x.clone(), y.clone()])?;
        let det_g = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        // |det Ω_{Ψ₀}| relative to det 𝒢 on the same basis.
        out.push(setup.lower_bound("omega_psi0_nondegenerate", "kahler", w * w / det_g, 1e-6));
    }
    Ok(out)
}

fn quillen_checks(setup: &Setup) -> CliResult<Vec<VerificationReport>> {
    let c = setup.c();
    let s = c.surface.as_ref();
    let n = setup.verify().pairs;
    let mut out = Vec::new();

    let t = ThetaForms::new(s);
    let dtheta = max_abs(&(t.theta_wedge_theta_bar().coef() - s.omega().coef()));
    out.push(setup.report("theta_forms", "quillen", dtheta, 0.0));

    let mut rng = setup.rng(7);
    let (mut fw, mut cross) = (vec![], vec![]);
    for _ in 0..n {
        let a1 = imaginary_one_form(s, &mut rng);
        let a2 = imaginary_one_form(s, &mut rng);
        let f = kahler_form_f(s, &ZeroOneForm::of(&a1), &ZeroOneForm::of(&a2))?;
        let full = -0.5 * integrate_two_form(s, &wedge_one_one(&a1, &a2)?)?.re;
        fw.push((f - full).abs() / (1.0 + full.abs()));
        let y = random_tangent(c, &mut rng);
        let xa = TangentVector::new(a1, Field::zeros(s.shape()))?;
        let sum = quillen_pm(c, &setup.solved, &xa, &y, Sign::Plus)?
            + quillen_pm(c, &setup.solved, &xa, &y, Sign::Minus)?;
        let f2 = kahler_form_f(s, &ZeroOneForm::of(xa.alpha()), &ZeroOneForm::of(y.alpha()))?;
        cross.push((sum - 2.0 * f2).abs() / (1.0 + f2.abs()));
    }
    out.push(setup.report("kahler_form_f", "quillen", max_of(fw), 1e-10));
    out.push(setup.report("quillen_cross_terms", "quillen", max_of(cross), 1e-12));

    let mut gauge = vec![];
    for _ in 0..setup.verify().gauge_transforms {
        let chi = band_limited_real(s, &mut rng);
        let b1 = b_form(s, &c.metric, &c.section, &setup.solved)?;
        let gp = c.gauge_transformed(&chi)?;
        let b2 = b_form(s, &c.metric, &gp.section, &setup.solved.gauge_transformed(&chi))?;
        gauge.push(max_abs(&(b1.coef() - b2.coef())));
    }
    out.push(setup.report("b_form_gauge_invariance", "quillen", max_of(gauge), 1e-12));

    let cases: [(&str, &Configuration, &FixedSection, u64); 3] = [
        ("unit", setup.trivial.config(), &setup.unit, 8),
        ("solved", c, &setup.solved, 9),
        ("theta", c, &setup.theta, 10),
    ];
    for (name, config, psi0, stream) in cases {
        let mut pairs = random_pairs(setup, config, stream, n, true)?;
        if name != "unit" && setup.positions.len() >= 2 {
            pairs.push((setup.positions[0].clone(), setup.positions[1].clone()));
        }
        let d = pairs
            .iter()
            .map(|(x, y)| prequantum_defect(setup, config, psi0, x, y))
            .collect::<CliResult<Vec<_>>>()?;
        out.push(
            setup
                .report(&format!("prequantum_identity[{name}]"), "quillen", max_of(d), PREQUANTUM_TOLERANCE)
                .with_prefactor(PREFACTOR)
                .with_note(format!("{} pairs", pairs.len())),
        );
    }
    // Off the solution space.
    let mut rng = setup.rng(11);
    let raw = displaced(c, &random_tangent(c, &mut rng), 0.7)?;
    let d = (0..n)
        .map(|_| {
            let x = random_tangent(&raw, &mut rng);
            let y = random_tangent(&raw, &mut rng);
            prequantum_defect(setup, &raw, &setup.theta, &x, &y)
        })
        .collect::<CliResult<Vec<_>>>()?;
    out.push(
        setup
            .report("prequantum_identity[raw]", "quillen", max_of(d), PREQUANTUM_TOLERANCE)
            .with_prefactor(PREFACTOR),
    );
    Ok(out)
}

/// `|F₊ + F₋ − Ω_{Ψ₀}| / (1 + |Ω_{Ψ₀}|)`, prefactors stripped.
pub fn prequantum_defect(
    setup: &Setup,
    c: &Configuration,
    psi0: &FixedSection,
    x: &TangentVector,
    y: &TangentVector,
) -> CliResult<f64> {
    let sum = quillen_pm(c, psi0, x, y, Sign::Plus)? + quillen_pm(c, psi0, x, y, Sign::Minus)?;
    let target = setup.omega_psi0(c, psi0, x, y)?;
    Ok((sum - target).abs() / (1.0 + target.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_number_of_diagonal_and_rotated() {
        assert!((condition_number(&[vec![4.0, 0.0], vec![0.0, 1.0]]) - 4.0).abs() < 1e-12);
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        assert!((condition_number(&m) - 3.0).abs() < 1e-12);
        assert!(condition_number(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_infinite());
    }
}
