//! Degree-`N` Hermitian line bundle data over the torus.
//!
//! Sections are stored in a fixed Landau frame: a section of degree `N` is a
//! grid field `Ψ(x, y)` that is periodic in `x` and satisfies
//! `Ψ(x, y + Ly) = exp(−i·c·Ly·x) Ψ(x, y)` with `c = 2πN/(Lx·Ly)`. In that
//! frame the background connection is `A_L = i·c·y dx`, whose curvature is the
//! constant 2-form `(c/2) dz∧dz̄` with `∫F = −2πiN`. A connection is stored as
//! the periodic imaginary-valued 1-form `a` in `A = A_L + a`.
//!
//! Products `Ψ₁ H Ψ̄₂` of two sections of the same degree are periodic, so all
//! gauge-invariant quantities live on the plain periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Zip};

use crate::spectral::Field;
use crate::surface::{d_one_form, d_zero_form, OneForm, Profile, Surface, TwoForm};
use crate::theta::jacobi_theta;
use crate::{Error, Result, C64};

/// `c = 2πN/(Lx·Ly)`, the constant field strength of the Landau background.
pub fn landau_strength(s: &Surface, degree: i32) -> f64 {
    2.0 * PI * degree as f64 / (s.lx() * s.ly())
}

/// The real positive weight `H` in `⟨Ψ₁, Ψ₂⟩_H = Ψ₁ H Ψ̄₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMetric {
    values: Array2<f64>,
}

impl HermitianMetric {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Hermitian metric must be positive, found {bad}"
            )));
        }
        Ok(HermitianMetric { values })
    }

    pub fn constant(s: &Surface, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem(s.shape(), value))
    }

    pub fn from_profile(s: &Surface, profile: &Profile) -> Result<Self> {
        Self::new(profile.sample(s.nx(), s.ny(), s.lx(), s.ly()))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// `Ψ₁ H Ψ̄₂`.
    pub fn inner(&self, a: &Field, b: &Field) -> Field {
        let mut out = a.clone();
        Zip::from(&mut out)
            .and(b)
            .and(&self.values)
            .for_each(|o, b, h| *o = *o * b.conj() * *h);
        out
    }

    /// `|Ψ|²_H = |Ψ|² H`.
    pub fn norm_sq(&self, psi: &Field) -> Array2<f64> {
        Zip::from(psi)
            .and(&self.values)
            .map_collect(|p, h| p.norm_sqr() * h)
    }
}

/// A section of the degree-`N` bundle in the Landau frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    field: Field,
    degree: i32,
}

impl Section {
    pub fn new(field: Field, degree: i32) -> Self {
        Section { field, degree }
    }

    pub fn zeros(shape: (usize, usize), degree: i32) -> Self {
        Section::new(Field::zeros(shape), degree)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn twist(&self, s: &Surface) -> f64 {
        landau_strength(s, self.degree)
    }

    pub fn check_degree(&self, other: &Section) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> Section {
        Section::new(&self.field * s, self.degree)
    }

    /// Product with a periodic function.
    pub fn mul_function(&self, f: &Field) -> Section {
        Section::new(&self.field * f, self.degree)
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        self.check_degree(other)?;
        Ok(Section::new(&self.field + &other.field, self.degree))
    }

    pub fn sub(&self, other: &Section) -> Result<Section> {
        self.check_degree(other)?;
        Ok(Section::new(&self.field - &other.field, self.degree))
    }
}

/// `A = A_L + a` with `a` periodic and imaginary-valued.
#[derive(Clone, Debug)]
pub struct Connection {
    a: OneForm,
    degree: i32,
}

impl Connection {
    pub fn new(a: OneForm, degree: i32) -> Result<Self> {
        if !a.is_imaginary_valued() {
            return Err(Error::InvalidInput(
                "connection 1-form must be imaginary-valued".into(),
            ));
        }
        Ok(Connection { a, degree })
    }

    /// The bare Landau background `A_L`.
    pub fn background(shape: (usize, usize), degree: i32) -> Self {
        Connection {
            a: OneForm::zeros(shape),
            degree,
        }
    }

    pub fn periodic_part(&self) -> &OneForm {
        &self.a
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    /// `A + t·α` for a periodic imaginary-valued `α`.
    pub fn shifted(&self, alpha: &OneForm, t: f64) -> Result<Connection> {
        Connection::new(self.a.add(&alpha.scale(t)), self.degree)
    }

    /// The `(0,1)` coefficient of the full connection, `A_L^{(0,1)} + a^{(0,1)}`.
    pub fn zero_one(&self, s: &Surface) -> Field {
        let c = landau_strength(s, self.degree);
        let mut out = self.a.dzbar().clone();
        for ((j, _), v) in out.indexed_iter_mut() {
            *v += C64::new(0.0, 0.5 * c * s.y(j));
        }
        out
    }
}

/// Reference holomorphic section `σ_ref` with prescribed zeros, together with
/// the connection `A_ref` for which `∂̄_{A_ref} σ_ref = 0`.
///
/// `σ_ref = λ·exp(−c y²/2 + p y + i q y)·Πₖ ϑ((z − zₖ)/Lx + ½ + τ/2 | τ)` with
/// `τ = i Ly/Lx`; the constants `p`, `q` make the quasi-periodicity of the
/// theta product match the Landau frame, and `A_ref = A_L − i p dx − i q dy`.
#[derive(Clone, Debug)]
pub struct ReferenceBackground {
    degree: i32,
    zeros: Vec<C64>,
    lx: f64,
    ly: f64,
    p: f64,
    q: f64,
    scale: f64,
    connection: Connection,
    section: Section,
}

impl ReferenceBackground {
    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    /// Evaluates `σ_ref` at an arbitrary point of the plane (in the Landau
    /// frame continued off the fundamental domain).
    pub fn eval(&self, x: f64, y: f64) -> C64 {
        eval_reference(self.degree, &self.zeros, self.lx, self.ly, self.p, self.q, x, y) * self.scale
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_reference(
    degree: i32,
    zeros: &[C64],
    lx: f64,
    ly: f64,
    p: f64,
    q: f64,
    x: f64,
    y: f64,
) -> C64 {
    let c = 2.0 * PI * degree as f64 / (lx * ly);
    let tau = C64::new(0.0, ly / lx);
    let z = C64::new(x, y);
    let shift = C64::new(0.5, 0.0) + tau * 0.5;
    let theta: C64 = zeros
        .iter()
        .map(|zk| jacobi_theta((z - zk) / lx + shift, tau))
        .product();
    C64::new(-0.5 * c * y * y + p * y, q * y).exp() * theta
}

/// Builds `(A_ref, σ_ref)` for `N = zeros.len()` vortices. `N = 0` gives the
/// trivial bundle with `σ_ref ≡ 1`.
pub fn reference_background(s: &Surface, zeros: &[C64]) -> Result<ReferenceBackground> {
    let degree = i32::try_from(zeros.len())
        .map_err(|_| Error::InvalidInput("too many zeros".into()))?;
    if zeros.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("zero positions must be finite".into()));
    }
    let (lx, ly) = (s.lx(), s.ly());
    let sum: C64 = zeros.iter().sum::<C64>() / lx;
    let n = degree as f64;
    let p = 2.0 * PI * sum.im / ly - PI * n / lx;
    let q = (PI * n - 2.0 * PI * sum.re) / ly;

    let raw = Array2::from_shape_fn(s.shape(), |(j, i)| {
        eval_reference(degree, zeros, lx, ly, p, q, s.x(i), s.y(j))
    });
    let mean_sq = raw.iter().map(|v| v.norm_sqr()).sum::<f64>() / raw.len() as f64;
    if !(mean_sq > 0.0 && mean_sq.is_finite()) {
        return Err(Error::InvalidInput(
            "reference section under/overflowed on this surface".into(),
        ));
    }
    let scale = 1.0 / mean_sq.sqrt();
    let flat = OneForm::from_real_components(
        &Array2::from_elem(s.shape(), -p),
        &Array2::from_elem(s.shape(), -q),
    );
    Ok(ReferenceBackground {
        degree,
        zeros: zeros.to_vec(),
        lx,
        ly,
        p,
        q,
        scale,
        connection: Connection::new(flat, degree)?,
        section: Section::new(raw * scale, degree),
    })
}

/// `F(A) = dA = (c/2) dz∧dz̄ + da`.
pub fn curvature(s: &Surface, a: &Connection) -> Result<TwoForm> {
    let c = landau_strength(s, a.degree);
    let da = d_one_form(s, &a.a)?;
    Ok(TwoForm::new(da.into_coef().mapv(|v| v + 0.5 * c)))
}

/// `∂̄Ψ + A^{(0,1)} Ψ`, the `dz̄` coefficient of `∂̄_A Ψ`, as a section of the
/// same degree.
pub fn dbar_a(s: &Surface, a: &Connection, psi: &Section) -> Result<Field> {
    if a.degree != psi.degree {
        return Err(Error::DegreeMismatch {
            left: a.degree,
            right: psi.degree,
        });
    }
    s.check_field(psi.field())?;
    let mut out = s.spectral().delbar(psi.field(), psi.twist(s));
    Zip::from(&mut out)
        .and(&a.zero_one(s))
        .and(psi.field())
        .for_each(|o, a01, p| *o += a01 * p);
    Ok(out)
}

/// Applies `g = e^{iχ}`: `A ↦ A + g⁻¹dg = A + i dχ`, `Ψ ↦ g⁻¹Ψ`.
pub fn gauge_transform(
    s: &Surface,
    chi: &Array2<f64>,
    a: &Connection,
    psi: &Section,
) -> Result<(Connection, Section)> {
    s.check_shape(chi.dim())?;
    let ichi = chi.mapv(|v| C64::new(0.0, v));
    let d = d_zero_form(s, &ichi)?;
    let phase = chi.mapv(|v| C64::from_polar(1.0, -v));
    Ok((
        Connection::new(a.a.add(&d), a.degree)?,
        psi.mul_function(&phase),
    ))
}

/// A point `p = (A, Ψ)` of configuration space, not necessarily a solution.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub surface: Arc<Surface>,
    pub metric: HermitianMetric,
    pub connection: Connection,
    pub section: Section,
}

impl Configuration {
    pub fn new(
        surface: Arc<Surface>,
        metric: HermitianMetric,
        connection: Connection,
        section: Section,
    ) -> Result<Self> {
        if connection.degree() != section.degree() {
            return Err(Error::DegreeMismatch {
                left: connection.degree(),
                right: section.degree(),
            });
        }
        surface.check_field(section.field())?;
        surface.check_shape(metric.values().dim())?;
        surface.check_shape(connection.periodic_part().dim())?;
        Ok(Configuration {
            surface,
            metric,
            connection,
            section,
        })
    }

    pub fn degree(&self) -> i32 {
        self.section.degree()
    }

    /// `|Ψ|²_H`.
    pub fn psi_norm_sq(&self) -> Array2<f64> {
        self.metric.norm_sq(self.section.field())
    }

    pub fn gauge_transformed(&self, chi: &Array2<f64>) -> Result<Configuration> {
        let (a, psi) = gauge_transform(&self.surface, chi, &self.connection, &self.section)?;
        Configuration::new(self.surface.clone(), self.metric.clone(), a, psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::integrate_two_form;

    fn torus(n: usize) -> Surface {
        Surface::new(2.0 * PI, 2.0 * PI, n, n, &Profile::default()).unwrap()
    }

    fn max_norm(f: &Field) -> f64 {
        f.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
    }

    #[test]
    fn reference_modulus_is_periodic() {
        let s = torus(32);
        let bg = reference_background(&s, &[C64::new(PI, PI)]).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..40 {
            let t = k as f64 * 0.157;
            worst = worst.max((bg.eval(t, 2.0 * PI).norm() - bg.eval(t, 0.0).norm()).abs());
            worst = worst.max((bg.eval(2.0 * PI, t).norm() - bg.eval(0.0, t).norm()).abs());
        }
        assert!(worst < 1e-10, "periodicity defect {worst}");
    }

    #[test]
    fn reference_follows_landau_twist() {
        let s = Surface::new(5.0, 7.0, 16, 16, &Profile::default()).unwrap();
        let zeros = [C64::new(1.0, 2.0), C64::new(3.5, 0.4), C64::new(1.0, 2.0)];
        let bg = reference_background(&s, &zeros).unwrap();
        let c = landau_strength(&s, 3);
        for k in 0..25 {
            let t = 0.2 * k as f64;
            let x_shift = bg.eval(t + 5.0, 0.3 * t) - bg.eval(t, 0.3 * t);
            assert!(x_shift.norm() < 1e-10 * bg.eval(t, 0.3 * t).norm().max(1.0));
            let twisted = bg.eval(t, 0.3 * t + 7.0)
                - C64::from_polar(1.0, -c * 7.0 * t) * bg.eval(t, 0.3 * t);
            assert!(twisted.norm() < 1e-9 * bg.eval(t, 0.3 * t).norm().max(1.0));
        }
    }

    #[test]
    fn reference_vanishes_at_prescribed_zeros() {
        let s = torus(32);
        let zeros = [C64::new(1.0, 2.0), C64::new(4.0, 5.5)];
        let bg = reference_background(&s, &zeros).unwrap();
        for z in &zeros {
            assert!(bg.eval(z.re, z.im).norm() < 1e-12);
        }
        assert!(bg.eval(3.0, 3.0).norm() > 1e-3);
    }

    #[test]
    fn degree_oracle() {
        let s = torus(32);
        for n in 1..=3 {
            let zeros: Vec<C64> = (0..n).map(|k| C64::new(1.0 + k as f64, 2.0)).collect();
            let bg = reference_background(&s, &zeros).unwrap();
            let f = curvature(&s, bg.connection()).unwrap();
            let deg = integrate_two_form(&s, &f).unwrap() / C64::new(0.0, -2.0 * PI);
            assert!((deg - C64::new(n as f64, 0.0)).norm() < 1e-10);
            assert!(f.is_purely_imaginary());
        }
    }

    #[test]
    fn winding_around_a_zero_is_one() {
        let s = torus(128);
        let bg = reference_background(&s, &[C64::new(PI, PI)]).unwrap();
        // grid node (64, 64) is the zero; walk the 2x2-cell square around it
        let sigma = bg.section().field();
        assert!(sigma[(64, 64)].norm() < 1e-12);
        let path = [
            (63, 63), (63, 64), (63, 65), (64, 65), (65, 65), (65, 64), (65, 63), (64, 63), (63, 63),
        ];
        let mut winding = 0.0;
        for w in path.windows(2) {
            let (a, b) = (sigma[w[0]], sigma[w[1]]);
            winding += (b / a).arg();
        }
        // path is listed as (row=j, col=i) so this loop runs counterclockwise in (x, y)
        // only if it goes +x first; (63,63)->(63,64) increases i, i.e. +x.
        assert!((winding / (2.0 * PI) - 1.0).abs() < 1e-10, "winding {winding}");
    }

    #[test]
    fn reference_is_holomorphic_for_its_connection() {
        let s = torus(64);
        for zeros in [vec![C64::new(PI, PI)], vec![C64::new(1.0, 1.0), C64::new(2.5, 4.0)]] {
            let bg = reference_background(&s, &zeros).unwrap();
            let r = dbar_a(&s, bg.connection(), bg.section()).unwrap();
            assert!(max_norm(&r) < 1e-12, "defect {}", max_norm(&r));
        }
    }

    #[test]
    fn curvature_of_sine_form_matches_curl_stencil() {
        // a = i sin(y) dx has F = c/2 + cos(y)/2 in dz∧dz̄ units.
        let s = torus(64);
        let fx = Array2::from_shape_fn(s.shape(), |(j, _)| s.y(j).sin());
        let a = OneForm::from_real_components(&fx, &Array2::zeros(s.shape()));
        let conn = Connection::new(a, 1).unwrap();
        let f = curvature(&s, &conn).unwrap();
        let c = landau_strength(&s, 1);
        let h = s.dy();
        for ((j, i), v) in f.coef().indexed_iter() {
            // F = −i ∂y(a_x) dx∧dy, with a_x = i sin y, dx∧dy = (i/2) dz∧dz̄
            let dy_ax = (fx[((j + 1) % 64, i)] - fx[((j + 63) % 64, i)]) / (2.0 * h);
            let stencil = 0.5 * c + 0.5 * dy_ax;
            assert!((v.re - stencil).abs() < h * h);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_transform_basics() {
        let s = torus(64);
        let bg = reference_background(&s, &[C64::new(2.0, 3.0)]).unwrap();
        let h = HermitianMetric::constant(&s, 1.0).unwrap();
        let chi = Array2::from_shape_fn(s.shape(), |(j, i)| (s.x(i)).sin() + 0.5 * (2.0 * s.y(j)).cos());
        let (a2, psi2) = gauge_transform(&s, &chi, bg.connection(), bg.section()).unwrap();
        let f1 = curvature(&s, bg.connection()).unwrap();
        let f2 = curvature(&s, &a2).unwrap();
        assert!(max_norm(&(f1.coef() - f2.coef())) < 1e-12);
        assert_eq!(
            h.norm_sq(bg.section().field())
                .iter()
                .zip(h.norm_sq(psi2.field()).iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                < 1e-14,
            true
        );
        // covariance: dbar_A' Ψ' = e^{−iχ} dbar_A Ψ
        let psi = bg.section().mul_function(&Array2::from_shape_fn(s.shape(), |(j, i)| {
            C64::new(1.0 + 0.3 * s.x(i).cos(), 0.2 * s.y(j).sin())
        }));
        let (a3, psi3) = gauge_transform(&s, &chi, bg.connection(), &psi).unwrap();
        let lhs = dbar_a(&s, &a3, &psi3).unwrap();
        let rhs = dbar_a(&s, bg.connection(), &psi).unwrap() * &chi.mapv(|v| C64::from_polar(1.0, -v));
        assert!(max_norm(&(lhs - rhs)) < 1e-10);

        let constant = Array2::from_elem(s.shape(), 0.7);
        let (a4, psi4) = gauge_transform(&s, &constant, bg.connection(), bg.section()).unwrap();
        assert!(a4.periodic_part().sub(bg.connection().periodic_part()).max_abs() < 1e-15);
        assert!(max_norm(&(psi4.field() - &(bg.section().field() * C64::from_polar(1.0, -0.7)))) < 1e-15);
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let s = torus(16);
        let a = Connection::background(s.shape(), 1);
        let psi = Section::zeros(s.shape(), 2);
        assert!(matches!(dbar_a(&s, &a, &psi), Err(Error::DegreeMismatch { .. })));
    }
}
