//! Curvature of the determinant bundles `L±` of `∂̄ + A^{(0,1)} ± B^{(0,1)}`.
//!
//! Only the curvature two-forms are evaluated, from their closed form. Values
//! are returned without the `i/π` prefactor, which reports carry as a label.

use ndarray::{Array2, Zip};

use crate::bundle::{Configuration, HermitianMetric, Section};
use crate::kahler::{omega_psi0, FixedSection};
use crate::report::{ReportContext, VerificationReport};
use crate::spectral::Field;
use crate::surface::{hodge2, integrate_two_form, wedge_one_one, OneForm, Surface, TwoForm};
use crate::tangent::TangentVector;
use crate::{Error, Result, C64};

/// Common prefactor of the Quillen curvature and of the prequantum identity.
pub const PREFACTOR: &str = "i/pi";
pub const PREQUANTUM_TOLERANCE: f64 = 1e-10;

/// The `(0,1)`-form `c dz̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroOneForm {
    c: Field,
}

impl ZeroOneForm {
    pub fn new(c: Field) -> Self {
        ZeroOneForm { c }
    }

    /// `α^{(0,1)}` of a 1-form.
    pub fn of(alpha: &OneForm) -> Self {
        ZeroOneForm::new(alpha.dzbar().clone())
    }

    pub fn coef(&self) -> &Field {
        &self.c
    }

    /// The imaginary-valued 1-form whose `(0,1)` part this is.
    pub fn imaginary_completion(&self) -> OneForm {
        OneForm::imaginary(self.c.mapv(|v| -v.conj()))
    }

    fn as_one_form(&self) -> OneForm {
        OneForm::general(Field::zeros(self.c.dim()), self.c.clone())
            .expect("shapes agree")
    }

    fn add(&self, other: &ZeroOneForm, sign: f64) -> ZeroOneForm {
        ZeroOneForm::new(&self.c + &(&other.c * sign))
    }
}

/// `θ = h dz` and `θ̄ = h dz̄`.
#[derive(Clone, Debug)]
pub struct ThetaForms {
    h: Array2<f64>,
}

impl ThetaForms {
    pub fn new(s: &Surface) -> Self {
        ThetaForms { h: s.h().clone() }
    }

    pub fn theta(&self) -> OneForm {
        OneForm::general(self.h.mapv(|v| C64::new(v, 0.0)), Field::zeros(self.h.dim()))
            .expect("shapes agree")
    }

    pub fn theta_bar(&self) -> OneForm {
        OneForm::general(Field::zeros(self.h.dim()), self.h.mapv(|v| C64::new(v, 0.0)))
            .expect("shapes agree")
    }

    /// `θ∧θ̄`, equal to `ω`.
    pub fn theta_wedge_theta_bar(&self) -> TwoForm {
        wedge_one_one(&self.theta(), &self.theta_bar()).expect("shapes agree")
    }
}

/// `F(p, q) = Re∫ p∧*₂q` on `(0,1)`-forms.
pub fn kahler_form_f(s: &Surface, p: &ZeroOneForm, q: &ZeroOneForm) -> Result<f64> {
    let w = wedge_one_one(&p.as_one_form(), &hodge2(&q.as_one_form()))?;
    Ok(integrate_two_form(s, &w)?.re)
}

fn check_degrees(left: i32, right: i32) -> Result<()> {
    if left != right {
        return Err(Error::DegreeMismatch { left, right });
    }
    Ok(())
}

/// `B^{(0,1)} = ΨHΨ̄₀θ̄`, with coefficient `ΨHΨ̄₀h`.
pub fn b_form(
    s: &Surface,
    metric: &HermitianMetric,
    psi: &Section,
    psi0: &FixedSection,
) -> Result<ZeroOneForm> {
    check_degrees(psi.degree(), psi0.degree())?;
    s.check_field(psi.field())?;
    let mut c = metric.inner(psi.field(), psi0.section().field());
    Zip::from(&mut c).and(s.h()).for_each(|c, h| *c *= h);
    Ok(ZeroOneForm::new(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `Re∫(α₁^{(0,1)} ± βHΨ̄₀θ̄)∧*₂(α₂^{(0,1)} ± ηHΨ̄₀θ̄)`: the curvature of `L±`
/// on `(X, Y)` without the `i/π` prefactor.
pub fn quillen_pm(
    config: &Configuration,
    psi0: &FixedSection,
    x: &TangentVector,
    y: &TangentVector,
    sign: Sign,
) -> Result<f64> {
    let s = config.surface.as_ref();
    let degree = config.degree();
    check_degrees(degree, psi0.degree())?;
    let bx = b_form(s, &config.metric, &Section::new(x.beta().clone(), degree), psi0)?;
    let by = b_form(s, &config.metric, &Section::new(y.beta().clone(), degree), psi0)?;
    let p = ZeroOneForm::of(x.alpha()).add(&bx, sign.value());
    let q = ZeroOneForm::of(y.alpha()).add(&by, sign.value());
    kahler_form_f(s, &p, &q)
}

/// Checks `ℱ_{L+} + ℱ_{L−} = (i/π)Ω_{Ψ₀}` on `(X, Y)`, prefactors stripped.
pub fn verify_prequantum_identity(
    config: &Configuration,
    psi0: &FixedSection,
    x: &TangentVector,
    y: &TangentVector,
    context: ReportContext,
) -> Result<VerificationReport> {
    let sum = quillen_pm(config, psi0, x, y, Sign::Plus)? + quillen_pm(config, psi0, x, y, Sign::Minus)?;
    let target = omega_psi0(config, psi0, x, y)?;
    let defect = (sum - target).abs() / (1.0 + target.abs());
    Ok(
        VerificationReport::new("prequantum_identity", "quillen", defect, PREQUANTUM_TOLERANCE, context)
            .with_prefactor(PREFACTOR),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::reference_background;
    use crate::kahler::omega;
    use crate::random::{band_limited, imaginary_one_form, band_limited_real};
    use crate::solver::{solve, SolveOptions};
    use crate::surface::Profile;
    use crate::tangent::{gauge_project, random_tangent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn surface(n: usize) -> std::sync::Arc<Surface> {
        let profile = Profile::Cosine { base: 1.0, amplitude: 0.2, mx: 1, my: 1 };
        Surface::new(2.0 * PI, 2.0 * PI, n, n, &profile).unwrap().shared()
    }

    fn ctx() -> ReportContext {
        ReportContext { nx: 32, ny: 32, degree: 1, seed: 0 }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn theta_forms_give_the_volume_form() {
        let s = surface(16);
        let t = ThetaForms::new(&s);
        assert_eq!(t.theta_wedge_theta_bar().coef(), s.omega().coef());
        let rev = wedge_one_one(&t.theta_bar(), &t.theta()).unwrap();
        assert_eq!(rev.coef(), &s.omega().coef().mapv(|v| -v));
    }

    #[test]
    fn kahler_form_matches_full_wedge() {
        let s = surface(32);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a1 = imaginary_one_form(&s, &mut rng);
        let a2 = imaginary_one_form(&s, &mut rng);
        let (p, q) = (ZeroOneForm::of(&a1), ZeroOneForm::of(&a2));
        let f = kahler_form_f(&s, &p, &q).unwrap();
        let full = -0.5 * integrate_two_form(&s, &wedge_one_one(&a1, &a2).unwrap()).unwrap().re;
        assert!(rel(f, full) < 1e-10);
        assert!(kahler_form_f(&s, &p, &p).unwrap().abs() < 1e-12);
        assert!(rel(f, -kahler_form_f(&s, &q, &p).unwrap()) < 1e-12);
        // Re∫α₁^{(0,1)}∧α₂^{(1,0)} = ½∫α₁∧α₂.
        let mixed = wedge_one_one(&a1.zero_one_part(), &a2.one_zero_part()).unwrap();
        let half = 0.5 * integrate_two_form(&s, &wedge_one_one(&a1, &a2).unwrap()).unwrap().re;
        assert!(rel(integrate_two_form(&s, &mixed).unwrap().re, half) < 1e-12);
        // Completion recovers the form.
        assert_eq!(p.imaginary_completion().dz(), a1.dz());
    }

    #[test]
    fn b_form_properties() {
        let s = surface(32);
        let h = HermitianMetric::from_profile(&s, &Profile::Cosine { base: 1.5, amplitude: 0.3, mx: 0, my: 1 }).unwrap();
        let psi = reference_background(&s, &[C64::new(1.0, 2.0)]).unwrap().section().clone();
        let psi0 = FixedSection::theta_with_zeros(&s, &h, &[C64::new(4.0, 4.5)]).unwrap();
        let b = b_form(&s, &h, &psi, &psi0).unwrap();
        let chi = band_limited_real(&s, &mut ChaCha8Rng::seed_from_u64(9));
        let phase = chi.mapv(|v| C64::from_polar(1.0, -v));
        let b2 = b_form(&s, &h, &psi.mul_function(&phase), &psi0.gauge_transformed(&chi)).unwrap();
        assert!((b.coef() - b2.coef()).iter().all(|v| v.norm() < 1e-12));
        for (((bv, p), q), (hv, hh)) in b
            .coef()
            .iter()
            .zip(psi.field())
            .zip(psi0.section().field())
            .zip(h.values().iter().zip(s.h()))
        {
            assert!((bv.norm() - p.norm() * q.norm() * hv * hh).abs() < 1e-12);
        }
        let zero = b_form(&s, &h, &psi, &psi0.scaled(C64::new(0.0, 0.0))).unwrap();
        assert!(zero.coef().iter().all(|v| v.norm() == 0.0));
        let unit = FixedSection::unit(&h);
        assert!(matches!(b_form(&s, &h, &psi, &unit), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn zero_fixed_section_reduces_to_kahler_form() {
        let s = surface(32);
        let h = HermitianMetric::constant(&s, 1.0).unwrap();
        let sol = solve(&s, &h, &[C64::new(3.0, 2.0)], &SolveOptions::default()).unwrap();
        let c = sol.config();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = (random_tangent(c, &mut rng), random_tangent(c, &mut rng));
        let psi0 = FixedSection::from_section(&h, c.section.clone()).unwrap().scaled(C64::new(0.0, 0.0));
        let f = kahler_form_f(&s, &ZeroOneForm::of(x.alpha()), &ZeroOneForm::of(y.alpha())).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            assert!(rel(quillen_pm(c, &psi0, &x, &y, sign).unwrap(), f) < 1e-12);
        }
    }

    #[test]
    fn expansion_oracle_and_cross_terms() {
        let s = surface(32);
        let h = HermitianMetric::constant(&s, 1.3).unwrap();
        let sol = solve(&s, &h, &[C64::new(3.0, 2.0)], &SolveOptions::default()).unwrap();
        let c = sol.config();
        let psi0 = FixedSection::from_section(&h, c.section.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = (random_tangent(c, &mut rng), random_tangent(c, &mut rng));
        // Re∫(c₁dz̄)∧*₂(c₂dz̄) = −2 Im∫c₁c̄₂ dx dy, term by term.
        let pair = |u: &Field, v: &Field| {
            let prod = Zip::from(u).and(v).map_collect(|a, b| (a * b.conj()).im);
            -2.0 * s.integrate_real(&prod)
        };
        let weight = |b: &Field| {
            Zip::from(b)
                .and(psi0.section().field())
                .and(s.h())
                .map_collect(|b, p, hh| b * 1.3 * p.conj() * hh)
        };
        let (p, q) = (x.alpha().dzbar(), y.alpha().dzbar());
        let (bx, by) = (weight(x.beta()), weight(y.beta()));
        for (sign, sv) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let oracle = pair(p, q) + sv * pair(p, &by) + sv * pair(&bx, q) + pair(&bx, &by);
            assert!(rel(quillen_pm(c, &psi0, &x, &y, sign).unwrap(), oracle) < 1e-12);
        }
        // With β = 0 the cross terms cancel and the sum is twice F.
        let xa = TangentVector::new(x.alpha().clone(), Field::zeros(s.shape())).unwrap();
        let sum = quillen_pm(c, &psi0, &xa, &y, Sign::Plus).unwrap() + quillen_pm(c, &psi0, &xa, &y, Sign::Minus).unwrap();
        let f = kahler_form_f(&s, &ZeroOneForm::of(x.alpha()), &ZeroOneForm::of(y.alpha())).unwrap();
        assert!(rel(sum, 2.0 * f) < 1e-12);
    }

    #[test]
    fn prequantum_identity_on_projected_and_raw_tangents() {
        let s = surface(32);
        let h = HermitianMetric::constant(&s, 1.0).unwrap();
        let sol = solve(&s, &h, &[C64::new(3.0, 2.0)], &SolveOptions::default()).unwrap();
        let c = sol.config();
        let psi0 = FixedSection::theta_with_zeros(&s, &h, &[C64::new(1.0, 5.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gauge_project(c, &random_tangent(c, &mut rng)).unwrap();
        let y = gauge_project(c, &random_tangent(c, &mut rng)).unwrap();
        let r = verify_prequantum_identity(c, &psi0, &x, &y, ctx()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.prefactor.as_deref(), Some(PREFACTOR));
        let same = verify_prequantum_identity(c, &psi0, &x, &x, ctx()).unwrap();
        assert!(same.pass && omega_psi0(c, &psi0, &x, &x).unwrap().abs() < 1e-12);

        // A configuration off the solution space.
        let raw = Configuration::new(
            s.clone(),
            h.clone(),
            c.connection.shifted(&imaginary_one_form(&s, &mut rng), 1.0).unwrap(),
            c.section.mul_function(&band_limited(&s, &mut rng)),
        )
        .unwrap();
        let (x, y) = (random_tangent(&raw, &mut rng), random_tangent(&raw, &mut rng));
        assert!(verify_prequantum_identity(&raw, &psi0, &x, &y, ctx()).unwrap().pass);
    }

    #[test]
    fn unit_fixed_section_recovers_omega() {
        let s = surface(16);
        let h = HermitianMetric::constant(&s, 2.0).unwrap();
        let sol = solve(&s, &h, &[], &SolveOptions::default()).unwrap();
        let c = sol.config();
        let unit = FixedSection::unit(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x, y) = (random_tangent(c, &mut rng), random_tangent(c, &mut rng));
        let sum = quillen_pm(c, &unit, &x, &y, Sign::Plus).unwrap() + quillen_pm(c, &unit, &x, &y, Sign::Minus).unwrap();
        assert!(rel(sum, omega(c, &x, &y).unwrap()) < 1e-10);
    }
}
