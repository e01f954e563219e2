//! The bilinear forms on configuration space: the metric `𝒢`, the symplectic
//! form `Ω`, the weighted family `Ω_{Ψ₀}`, `𝒢_{Ψ₀}`, and the moment map with
//! its Hamiltonians `H_ζ`.
//!
//! For `X = (a dz − ā dz̄, β)` and `Y = (b dz − b̄ dz̄, η)` the forms reduce to
//!
//! ```text
//!     𝒢(X, Y) = 4∫Re(a b̄) + 4∫Re(βHη̄) h²
//!     Ω(X, Y) = 4∫Im(a b̄) − 4∫Im(βHη̄) h²
//! ```
//!
//! (integrals against `dx dy`). `metric_g` and `omega` evaluate the wedge
//! expressions directly; `metric_g_closed_form` is the first line above and
//! serves as an independent check.

use ndarray::{Array2, Zip};

use crate::bundle::{curvature, reference_background, Configuration, HermitianMetric, Section};
use crate::spectral::Field;
use crate::surface::{hodge1, integrate_two_form, wedge_one_one, Surface, TwoForm};
use crate::tangent::{apply_complex_structure, TangentVector};
use crate::{Error, Result, C64};

/// Threshold below which `|Ψ₀|²_H` counts as a zero.
pub const ZERO_LEVEL: f64 = 1e-12;
/// Largest admissible fraction of grid nodes where `Ψ₀` vanishes.
pub const MAX_ZERO_FRACTION: f64 = 0.01;

/// The fixed section `Ψ₀` defining `Ω_{Ψ₀}`.
#[derive(Clone, Debug)]
pub struct FixedSection {
    section: Section,
    weight: Array2<f64>,
}

impl FixedSection {
    /// `Ψ₀ = H^{-1/2}` on the trivial bundle, so `|Ψ₀|_H ≡ 1`.
    pub fn unit(metric: &HermitianMetric) -> Self {
        let field = metric.values().mapv(|h| C64::new(h.powf(-0.5), 0.0));
        FixedSection {
            weight: metric.norm_sq(&field),
            section: Section::new(field, 0),
        }
    }

    pub fn from_section(metric: &HermitianMetric, section: Section) -> Result<Self> {
        if section.field().dim() != metric.values().dim() {
            return Err(Error::GridMismatch {
                expected: metric.values().dim(),
                found: section.field().dim(),
            });
        }
        let fixed = FixedSection {
            weight: metric.norm_sq(section.field()),
            section,
        };
        let frac = fixed.zero_fraction();
        if frac >= MAX_ZERO_FRACTION {
            return Err(Error::InvalidInput(format!(
                "fixed section vanishes on {:.2}% of the grid",
                100.0 * frac
            )));
        }
        Ok(fixed)
    }

    /// Theta-function section with zeros at `zeros` (degree `zeros.len()`).
    pub fn theta_with_zeros(s: &Surface, metric: &HermitianMetric, zeros: &[C64]) -> Result<Self> {
        let bg = reference_background(s, zeros)?;
        FixedSection::from_section(metric, bg.section().clone())
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn degree(&self) -> i32 {
        self.section.degree()
    }

    /// `|Ψ₀|²_H`.
    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn zero_fraction(&self) -> f64 {
        let n = self.weight.iter().filter(|&&w| w < ZERO_LEVEL).count();
        n as f64 / self.weight.len() as f64
    }

    /// `cΨ₀`.
    pub fn scaled(&self, c: C64) -> FixedSection {
        FixedSection {
            section: self.section.scale(c),
            weight: &self.weight * c.norm_sqr(),
        }
    }

    /// `e^{−iχ}Ψ₀`; the weight is unchanged.
    pub fn gauge_transformed(&self, chi: &Array2<f64>) -> FixedSection {
        let phase = chi.mapv(|v| C64::from_polar(1.0, -v));
        FixedSection {
            section: self.section.mul_function(&phase),
            weight: self.weight.clone(),
        }
    }
}

fn check(config: &Configuration, x: &TangentVector) -> Result<()> {
    config.surface.check_field(x.beta())?;
    config.surface.check_shape(x.alpha().dim())
}

/// `Σ f·H·h²` pointwise, with `f = βHη̄`-type products precomputed by caller.
fn section_density(config: &Configuration, beta: &Field, eta: &Field) -> Field {
    let h2 = config.surface.h_squared();
    let mut out = config.metric.inner(beta, eta);
    Zip::from(&mut out).and(&h2).for_each(|o, h2| *o *= h2);
    out
}

/// `∫*₁α₁∧α₂ + 2i∫Re⟨β,η⟩_H ω` before taking the real part.
pub fn metric_g_complex(config: &Configuration, x: &TangentVector, y: &TangentVector) -> Result<C64> {
    check(config, x)?;
    check(config, y)?;
    let s = config.surface.as_ref();
    let forms = integrate_two_form(s, &wedge_one_one(&hodge1(x.alpha()), y.alpha())?)?;
    let dens = section_density(config, x.beta(), y.beta()).mapv(|v| C64::new(0.0, 2.0 * v.re));
    let sections = integrate_two_form(s, &TwoForm::new(dens))?;
    Ok(forms + sections)
}

pub fn metric_g(config: &Configuration, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    Ok(metric_g_complex(config, x, y)?.re)
}

pub fn metric_g_closed_form(config: &Configuration, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    check(config, x)?;
    check(config, y)?;
    let s = config.surface.as_ref();
    let ab = Zip::from(x.a()).and(y.a()).map_collect(|a, b| (a * b.conj()).re);
    let sec = section_density(config, x.beta(), y.beta()).mapv(|v| v.re);
    Ok(4.0 * s.integrate_real(&ab) + 4.0 * s.integrate_real(&sec))
}

pub fn norm_g(config: &Configuration, x: &TangentVector) -> Result<f64> {
    Ok(metric_g_closed_form(config, x, x)?.max(0.0).sqrt())
}

fn omega_weighted(
    config: &Configuration,
    weight: Option<&Array2<f64>>,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<C64> {
    check(config, x)?;
    check(config, y)?;
    let s = config.surface.as_ref();
    let forms = integrate_two_form(s, &wedge_one_one(x.alpha(), y.alpha())?)?;
    let mut dens = section_density(config, x.beta(), y.beta()).mapv(|w| w - w.conj());
    if let Some(w) = weight {
        s.check_shape(w.dim())?;
        Zip::from(&mut dens).and(w).for_each(|d, w| *d *= w);
    }
    let sections = integrate_two_form(s, &TwoForm::new(dens))?;
    Ok(-forms - sections)
}

/// `Ω(X,Y) = −∫α₁∧α₂ − ∫(βHη̄ − β̄Hη)ω`.
pub fn omega(config: &Configuration, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    Ok(omega_weighted(config, None, x, y)?.re)
}

/// `Ω_{Ψ₀}`: the section term of `Ω` weighted by `|Ψ₀|²_H`.
pub fn omega_psi0(
    config: &Configuration,
    psi0: &FixedSection,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<f64> {
    Ok(omega_weighted(config, Some(psi0.weight()), x, y)?.re)
}

/// `𝒢_{Ψ₀}(X,Y) = Ω_{Ψ₀}(X, ℐY)`.
pub fn metric_g_psi0(
    config: &Configuration,
    psi0: &FixedSection,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<f64> {
    omega_psi0(config, psi0, x, &apply_complex_structure(y))
}

/// `−4∫|a|² − 4∫|β|²_H|Ψ₀|²_H h²`, the value of `Ω_{Ψ₀}(ℐX, X)`.
pub fn negativity_closed_form(config: &Configuration, psi0: &FixedSection, x: &TangentVector) -> Result<f64> {
    check(config, x)?;
    let s = config.surface.as_ref();
    let a2 = x.a().mapv(|a| a.norm_sqr());
    let b2 = Zip::from(&config.metric.norm_sq(x.beta()))
        .and(psi0.weight())
        .and(&s.h_squared())
        .map_collect(|b, w, h2| b * w * h2);
    Ok(-4.0 * s.integrate_real(&a2) - 4.0 * s.integrate_real(&b2))
}

/// `μ(A,Ψ) = F(A) − (1 − |Ψ|²_H)ω`.
pub fn moment_map(config: &Configuration) -> Result<TwoForm> {
    let s = config.surface.as_ref();
    let f = curvature(s, &config.connection)?;
    let rho = config.psi_norm_sq();
    let h2 = s.h_squared();
    let mut coef = f.into_coef();
    Zip::from(&mut coef)
        .and(&rho)
        .and(&h2)
        .for_each(|c, r, h2| *c -= (1.0 - r) * h2);
    Ok(TwoForm::new(coef))
}

pub(crate) fn check_imaginary(zeta: &Field) -> Result<()> {
    let scale = zeta.iter().fold(1.0, |m: f64, v| m.max(v.norm()));
    let re = zeta.iter().fold(0.0, |m: f64, v| m.max(v.re.abs()));
    if re > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "gauge parameter must be purely imaginary (max |Re| = {re:e})"
        )));
    }
    Ok(())
}

/// `H_ζ(p) = ∫ζ·μ(p)` as a complex number; its imaginary part vanishes for
/// imaginary `ζ`.
pub fn hamiltonian_complex(config: &Configuration, zeta: &Field) -> Result<C64> {
    check_imaginary(zeta)?;
    config.surface.check_field(zeta)?;
    let mu = moment_map(config)?;
    integrate_two_form(&config.surface, &TwoForm::new(mu.coef() * zeta))
}

pub fn hamiltonian(config: &Configuration, zeta: &Field) -> Result<f64> {
    Ok(hamiltonian_complex(config, zeta)?.re)
}
