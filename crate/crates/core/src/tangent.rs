//! Tangent vectors to the space of solutions: linearized equations, gauge
//! directions, projection onto the `𝒢`-orthogonal complement of the gauge
//! orbit, and position tangents obtained by re-solving.
//!
//! A tangent `X = (α, β)` stores `α = a dz − ā dz̄` periodic and `β` in the
//! same frame as the section, so differences of nearby solutions are taken
//! directly.

use ndarray::{Array2, Zip};
use rand::Rng;

use crate::bundle::{dbar_a, Configuration, Section};
use crate::kahler::{check_imaginary, metric_g_closed_form, norm_g};
use crate::random::{band_limited, imaginary_one_form};
use crate::solver::{pcg, solve, SolveOptions, VortexSolution};
use crate::spectral::Field;
use crate::surface::{d_one_form, d_zero_form, hodge1, OneForm, TwoForm};
use crate::{Error, Result, C64};

/// Linearized-equation defects, each an L² norm divided by `‖X‖_𝒢`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linearization {
    pub eq1: f64,
    pub eq2: f64,
}

impl Linearization {
    pub fn max(&self) -> f64 {
        self.eq1.max(self.eq2)
    }
}

#[derive(Clone, Debug)]
pub struct TangentVector {
    alpha: OneForm,
    beta: Field,
    linearization: Option<Linearization>,
    projection_defect: Option<f64>,
    warning: Option<String>,
}

impl TangentVector {
    pub fn new(alpha: OneForm, beta: Field) -> Result<Self> {
        if !alpha.is_imaginary_valued() {
            return Err(Error::InvalidInput(
                "tangent connection part must be imaginary-valued".into(),
            ));
        }
        if alpha.dim() != beta.dim() {
            return Err(Error::GridMismatch {
                expected: alpha.dim(),
                found: beta.dim(),
            });
        }
        Ok(TangentVector {
            alpha,
            beta,
            linearization: None,
            projection_defect: None,
            warning: None,
        })
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        TangentVector::new(OneForm::zeros(shape), Field::zeros(shape)).unwrap()
    }

    pub fn alpha(&self) -> &OneForm {
        &self.alpha
    }

    /// The `dz` coefficient `a` of `α`.
    pub fn a(&self) -> &Field {
        self.alpha.dz()
    }

    pub fn beta(&self) -> &Field {
        &self.beta
    }

    pub fn linearization(&self) -> Option<Linearization> {
        self.linearization
    }

    pub fn is_projected(&self) -> bool {
        self.projection_defect.is_some()
    }

    pub fn projection_defect(&self) -> Option<f64> {
        self.projection_defect
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn with_linearization(mut self, config: &Configuration) -> Result<Self> {
        self.linearization = Some(linearization_defect(config, &self)?);
        Ok(self)
    }

    fn bare(alpha: OneForm, beta: Field) -> Self {
        TangentVector {
            alpha,
            beta,
            linearization: None,
            projection_defect: None,
            warning: None,
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::bare(self.alpha.scale(t), &self.beta * t)
    }

    pub fn add(&self, other: &TangentVector) -> Self {
        Self::bare(self.alpha.add(&other.alpha), &self.beta + &other.beta)
    }

    pub fn sub(&self, other: &TangentVector) -> Self {
        Self::bare(self.alpha.sub(&other.alpha), &self.beta - &other.beta)
    }

    pub fn max_abs(&self) -> f64 {
        self.beta
            .iter()
            .fold(self.alpha.max_abs(), |m, v| m.max(v.norm()))
    }
}

/// The straight-line point `p + tX`.
pub fn displaced(config: &Configuration, x: &TangentVector, t: f64) -> Result<Configuration> {
    let degree = config.degree();
    Configuration::new(
        config.surface.clone(),
        config.metric.clone(),
        config.connection.shifted(x.alpha(), t)?,
        config.section.add(&Section::new(x.beta() * t, degree))?,
    )
}

/// `dμ(X) = dα + 2Re(βHΨ̄)ω`.
pub fn linearized_moment(config: &Configuration, x: &TangentVector) -> Result<TwoForm> {
    let s = config.surface.as_ref();
    s.check_field(x.beta())?;
    let mut coef = d_one_form(s, x.alpha())?.into_coef();
    let w = config.metric.inner(x.beta(), config.section.field());
    Zip::from(&mut coef)
        .and(&w)
        .and(s.h())
        .for_each(|c, w, h| *c += 2.0 * w.re * h * h);
    Ok(TwoForm::new(coef))
}

/// `∂̄β + A^{(0,1)}β + α^{(0,1)}Ψ`.
pub fn linearized_dbar(config: &Configuration, x: &TangentVector) -> Result<Field> {
    let s = config.surface.as_ref();
    let beta = Section::new(x.beta().clone(), config.degree());
    let mut out = dbar_a(s, &config.connection, &beta)?;
    Zip::from(&mut out)
        .and(x.alpha().dzbar())
        .and(config.section.field())
        .for_each(|o, a, p| *o += a * p);
    Ok(out)
}

pub fn linearization_defect(config: &Configuration, x: &TangentVector) -> Result<Linearization> {
    let s = config.surface.as_ref();
    let l2 = |f: &Field| (f.iter().map(|v| v.norm_sqr()).sum::<f64>() * s.cell_area()).sqrt();
    let norm = norm_g(config, x)?.max(f64::MIN_POSITIVE);
    Ok(Linearization {
        eq1: l2(linearized_moment(config, x)?.coef()) / norm,
        eq2: l2(&linearized_dbar(config, x)?) / norm,
    })
}

/// `X_ζ = (dζ, −ζΨ)` for imaginary `ζ`.
pub fn gauge_vector_field(config: &Configuration, zeta: &Field) -> Result<TangentVector> {
    check_imaginary(zeta)?;
    let s = config.surface.as_ref();
    s.check_field(zeta)?;
    // Drop round-off real parts so dζ is exactly imaginary-valued.
    let zeta = zeta.mapv(|v| C64::new(0.0, v.im));
    let d = d_zero_form(s, &zeta)?;
    let alpha = OneForm::imaginary(d.dz().clone());
    Ok(TangentVector::bare(alpha, -(&zeta * config.section.field())))
}

/// The density `r` with `𝒢(X, X_{iη}) = ∫ η r dx dy` for real `η`:
/// `r = −4 Im(∂̄a) − 4h² Im(βHΨ̄)`.
pub fn orthogonality_source(config: &Configuration, x: &TangentVector) -> Result<Array2<f64>> {
    let s = config.surface.as_ref();
    s.check_field(x.beta())?;
    let da = s.spectral().delbar(x.a(), 0.0);
    let w = config.metric.inner(x.beta(), config.section.field());
    Ok(Zip::from(&da)
        .and(&w)
        .and(s.h())
        .map_collect(|da, w, h| -4.0 * da.im - 4.0 * h * h * w.im))
}

fn source_norm(config: &Configuration, r: &Array2<f64>) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() * config.surface.cell_area()).sqrt()
}

/// Removes the gauge-orbit component: `X − X_{iξ}` with
/// `(−Δ + 4h²|Ψ|²_H)ξ = r(X)`.
pub fn gauge_project(config: &Configuration, x: &TangentVector) -> Result<TangentVector> {
    let s = config.surface.as_ref();
    let rhs = orthogonality_source(config, x)?;
    let weight = config.psi_norm_sq() * &s.h_squared() * 4.0;
    let shift = weight.mean().unwrap_or(0.0);
    let orbit = |xi: &Array2<f64>| {
        let zeta = xi.mapv(|v| C64::new(0.0, v));
        gauge_vector_field(config, &zeta).expect("imaginary by construction")
    };
    let xi = pcg(
        |xi| orthogonality_source(config, &orbit(xi)).expect("grid checked"),
        |r| s.spectral().inverse_helmholtz_real(r, shift),
        &rhs,
        1e-12,
        2000,
    )?;
    let mut out = x.sub(&orbit(&xi));
    let norm = norm_g(config, x)?.max(f64::MIN_POSITIVE);
    out.projection_defect = Some(source_norm(config, &orthogonality_source(config, &out)?) / norm);
    Ok(out)
}

/// `ℐ(α, β) = (*₁α, iβ)`. Flags are dropped; callers re-measure.
pub fn apply_complex_structure(x: &TangentVector) -> TangentVector {
    TangentVector::bare(hodge1(x.alpha()), x.beta() * C64::i())
}

/// `g_*` for `g = e^{iχ}`: `(α, β) ↦ (α, e^{−iχ}β)`.
pub fn push_forward(x: &TangentVector, chi: &Array2<f64>) -> TangentVector {
    let phase = chi.mapv(|v| C64::from_polar(1.0, -v));
    let mut out = TangentVector::bare(x.alpha.clone(), &x.beta * &phase);
    out.projection_defect = x.projection_defect;
    out.linearization = x.linearization;
    out
}

/// A random tangent with band-limited `a` and `β = f₁Ψ + f₂σ'`, where `σ'` is
/// a reference section whose zeros are offset by half a period, so `β` does
/// not vanish at the vortices.
pub fn random_tangent<R: Rng>(config: &Configuration, rng: &mut R) -> TangentVector {
    let s = config.surface.as_ref();
    let alpha = imaginary_one_form(s, rng);
    let f1 = band_limited(s, rng);
    let f2 = band_limited(s, rng);
    let offset = C64::new(0.5 * s.lx(), 0.5 * s.ly());
    let zeros: Vec<C64> = (0..config.degree().max(0))
        .map(|k| offset + C64::new(0.37 * k as f64, 0.21 * k as f64))
        .collect();
    let other = crate::bundle::reference_background(s, &zeros)
        .map(|bg| bg.section().field().clone())
        .unwrap_or_else(|_| Field::from_elem(s.shape(), C64::new(1.0, 0.0)));
    let beta = &f1 * config.section.field() + &(&f2 * &other);
    TangentVector::bare(alpha, beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn unit(self) -> C64 {
        match self {
            Direction::X => C64::new(1.0, 0.0),
            Direction::Y => C64::new(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PositionTangentOptions {
    pub eps: f64,
    /// Combine steps `ε` and `ε/2` to cancel the `O(ε²)` error.
    pub richardson: bool,
    pub solver: SolveOptions,
}

impl Default for PositionTangentOptions {
    fn default() -> Self {
        PositionTangentOptions {
            eps: 1e-3,
            richardson: false,
            solver: SolveOptions::default(),
        }
    }
}

/// Linearization defect above which a position tangent is flagged.
pub const POSITION_WARN_LEVEL: f64 = 1e-4;

fn central_difference(
    sol: &VortexSolution,
    k: usize,
    dir: Direction,
    eps: f64,
    opts: &SolveOptions,
) -> Result<TangentVector> {
    let mut opts = opts.clone();
    opts.initial_guess = Some(sol.regular_profile().clone());
    let config = sol.config();
    let shifted = |t: f64| -> Result<Configuration> {
        let mut pos = sol.positions().to_vec();
        pos[k] += dir.unit() * t;
        Ok(solve(sol.surface(), &config.metric, &pos, &opts)?.config().clone())
    };
    let (plus, minus) = (shifted(eps)?, shifted(-eps)?);
    let inv = 1.0 / (2.0 * eps);
    let alpha = plus
        .connection
        .periodic_part()
        .sub(minus.connection.periodic_part())
        .scale(inv);
    let beta = (plus.section.field() - minus.section.field()) * inv;
    let alpha = OneForm::imaginary(alpha.dz().clone());
    Ok(TangentVector::bare(alpha, beta))
}

/// Raw tangent for moving vortex `k` along `dir`, by central differences of
/// re-solved configurations.
pub fn tangent_from_positions(
    sol: &VortexSolution,
    k: usize,
    dir: Direction,
    opts: &PositionTangentOptions,
) -> Result<TangentVector> {
    if k >= sol.positions().len() {
        return Err(Error::InvalidInput(format!(
            "vortex index {k} out of range for degree {}",
            sol.positions().len()
        )));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let coarse = central_difference(sol, k, dir, opts.eps, &opts.solver)?;
    let x = if opts.richardson {
        let fine = central_difference(sol, k, dir, 0.5 * opts.eps, &opts.solver)?;
        fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0))
    } else {
        coarse
    };
    let mut x = x.with_linearization(sol.config())?;
    let lin = x.linearization.unwrap().max();
    if lin > POSITION_WARN_LEVEL {
        x.warning = Some(format!(
            "linearization defect {lin:.3e} exceeds {POSITION_WARN_LEVEL:e}; reduce the step"
        ));
    }
    Ok(x)
}

/// `𝒢` Gram matrix of a family of tangents.
pub fn gram_matrix(config: &Configuration, xs: &[TangentVector]) -> Result<Vec<Vec<f64>>> {
    xs.iter()
        .map(|x| xs.iter().map(|y| metric_g_closed_form(config, x, y)).collect())
        .collect()
}
