//! Flat-torus geometry and differential forms on the periodic grid.
//!
//! A 1-form is stored through its `(1,0)` and `(0,1)` coefficients,
//! `p = p10 dz + p01 dz̄`. A 2-form is stored as its `dz∧dz̄` coefficient.

use std::sync::Arc;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::spectral::{Field, Spectral};
use crate::{Error, Result, C64};

const FLAG_TOL: f64 = 1e-12;

/// Scalar profile used for the conformal factor `h` or the Hermitian metric `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `base·(1 + amplitude·cos(2π·mx·x/Lx)·cos(2π·my·y/Ly))`.
    Cosine {
        base: f64,
        amplitude: f64,
        mx: i32,
        my: i32,
    },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant { value: 1.0 }
    }
}

impl Profile {
    pub fn eval(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        use std::f64::consts::TAU;
        match *self {
            Profile::Constant { value } => value,
            Profile::Cosine {
                base,
                amplitude,
                mx,
                my,
            } => {
                base * (1.0
                    + amplitude
                        * (TAU * mx as f64 * x / lx).cos()
                        * (TAU * my as f64 * y / ly).cos())
            }
        }
    }

    pub fn sample(&self, nx: usize, ny: usize, lx: f64, ly: f64) -> Array2<f64> {
        let (dx, dy) = (lx / nx as f64, ly / ny as f64);
        Array2::from_shape_fn((ny, nx), |(j, i)| {
            self.eval(i as f64 * dx, j as f64 * dy, lx, ly)
        })
    }
}

/// The fundamental domain `[0, Lx) × [0, Ly)` of a flat torus with a smooth
/// conformal factor `h`, so that `ω = h² dz∧dz̄`.
#[derive(Clone, Debug)]
pub struct Surface {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    h: Array2<f64>,
    spectral: Spectral,
}

impl Surface {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, profile: &Profile) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidSurface(format!(
                "side lengths must be positive, got {lx} x {ly}"
            )));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidSurface(format!(
                "grid {nx}x{ny} is too coarse"
            )));
        }
        Self::from_h(lx, ly, profile.sample(nx, ny, lx, ly))
    }

    pub fn from_h(lx: f64, ly: f64, h: Array2<f64>) -> Result<Self> {
        let (ny, nx) = h.dim();
        if let Some(bad) = h.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSurface(format!(
                "conformal factor must be positive, found {bad}"
            )));
        }
        Ok(Surface {
            lx,
            ly,
            nx,
            ny,
            h,
            spectral: Spectral::new(nx, ny, lx, ly),
        })
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Array shape `(ny, nx)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    pub fn h(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn h_squared(&self) -> Array2<f64> {
        self.h.mapv(|v| v * v)
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `∫ h² dx dy`.
    pub fn area(&self) -> f64 {
        self.h.iter().map(|v| v * v).sum::<f64>() * self.cell_area()
    }

    /// The area form `ω = h² dz∧dz̄`.
    pub fn omega(&self) -> TwoForm {
        TwoForm::new(self.h.mapv(|v| C64::new(v * v, 0.0)))
    }

    pub fn check_field(&self, f: &Field) -> Result<()> {
        self.check_shape(f.dim())
    }

    pub fn check_shape(&self, found: (usize, usize)) -> Result<()> {
        if found != self.shape() {
            return Err(Error::GridMismatch {
                expected: self.shape(),
                found,
            });
        }
        Ok(())
    }

    /// Fraction of the spectral energy of `h` carried by the outermost ring of
    /// resolved modes. Smooth periodic profiles give values near round-off.
    pub fn highest_mode_energy_fraction(&self) -> f64 {
        let hat = self.spectral.forward(&self.h.mapv(|v| C64::new(v, 0.0)));
        let edge = |i: usize, n: usize| {
            let k = if i <= n / 2 { i } else { n - i };
            k + 1 >= n / 2
        };
        let mut total = 0.0;
        let mut high = 0.0;
        for ((j, i), v) in hat.indexed_iter() {
            let e = v.norm_sqr();
            total += e;
            if edge(i, self.nx) || edge(j, self.ny) {
                high += e;
            }
        }
        high / total
    }

    /// `Σ f Δx Δy`, the Riemann sum against `dx dy`.
    pub fn integrate_dxdy(&self, f: &Field) -> C64 {
        f.sum() * self.cell_area()
    }

    pub fn integrate_real(&self, f: &Array2<f64>) -> f64 {
        f.sum() * self.cell_area()
    }
}

/// Whether a 1-form is known to take values in `iℝ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormKind {
    /// `a dz − ā dz̄`.
    ImaginaryValued,
    General,
}

#[derive(Clone, Debug)]
pub struct OneForm {
    dz: Field,
    dzbar: Field,
    kind: FormKind,
}

impl OneForm {
    /// `a dz − ā dz̄`.
    pub fn imaginary(a: Field) -> Self {
        let dzbar = a.mapv(|v| -v.conj());
        OneForm {
            dz: a,
            dzbar,
            kind: FormKind::ImaginaryValued,
        }
    }

    /// Independent `(1,0)` and `(0,1)` coefficients. The form is flagged
    /// imaginary-valued if `conj(p01) = −p10` holds to `1e-12`.
    pub fn general(dz: Field, dzbar: Field) -> Result<Self> {
        if dz.dim() != dzbar.dim() {
            return Err(Error::GridMismatch {
                expected: dz.dim(),
                found: dzbar.dim(),
            });
        }
        let mut p = OneForm {
            dz,
            dzbar,
            kind: FormKind::General,
        };
        if p.imaginary_defect() <= FLAG_TOL {
            p.kind = FormKind::ImaginaryValued;
        }
        Ok(p)
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        OneForm::imaginary(Field::zeros(shape))
    }

    /// `i(fx dx + fy dy)` for real coefficient fields.
    pub fn from_real_components(fx: &Array2<f64>, fy: &Array2<f64>) -> Self {
        // dx = (dz + dz̄)/2, dy = (dz − dz̄)/(2i)
        let a = Zip::from(fx)
            .and(fy)
            .map_collect(|&u, &w| C64::new(0.0, 1.0) * (C64::new(u, 0.0) - C64::new(0.0, w)) * 0.5);
        OneForm::imaginary(a)
    }

    pub fn dz(&self) -> &Field {
        &self.dz
    }

    pub fn dzbar(&self) -> &Field {
        &self.dzbar
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn is_imaginary_valued(&self) -> bool {
        self.kind == FormKind::ImaginaryValued
    }

    pub fn dim(&self) -> (usize, usize) {
        self.dz.dim()
    }

    /// Max-norm of `conj(p01) + p10`.
    pub fn imaginary_defect(&self) -> f64 {
        Zip::from(&self.dz)
            .and(&self.dzbar)
            .fold(0.0, |m: f64, a, b| m.max((a + b.conj()).norm()))
    }

    pub fn scale(&self, s: f64) -> Self {
        OneForm {
            dz: &self.dz * s,
            dzbar: &self.dzbar * s,
            kind: self.kind,
        }
    }

    /// Multiplication by a complex number; imaginary-valuedness survives only
    /// for real factors.
    pub fn scale_complex(&self, s: C64) -> Self {
        let kind = if s.im == 0.0 { self.kind } else { FormKind::General };
        OneForm {
            dz: &self.dz * s,
            dzbar: &self.dzbar * s,
            kind,
        }
    }

    pub fn add(&self, other: &OneForm) -> Self {
        OneForm {
            dz: &self.dz + &other.dz,
            dzbar: &self.dzbar + &other.dzbar,
            kind: if self.kind == other.kind {
                self.kind
            } else {
                FormKind::General
            },
        }
    }

    pub fn sub(&self, other: &OneForm) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `(1,0)` part as a 1-form.
    pub fn one_zero_part(&self) -> OneForm {
        OneForm {
            dz: self.dz.clone(),
            dzbar: Field::zeros(self.dim()),
            kind: FormKind::General,
        }
    }

    /// `(0,1)` part as a 1-form.
    pub fn zero_one_part(&self) -> OneForm {
        OneForm {
            dz: Field::zeros(self.dim()),
            dzbar: self.dzbar.clone(),
            kind: FormKind::General,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dz
            .iter()
            .chain(self.dzbar.iter())
            .fold(0.0, |m: f64, v| m.max(v.norm()))
    }
}

#[derive(Clone, Debug)]
pub struct TwoForm {
    coef: Field,
}

impl TwoForm {
    pub fn new(coef: Field) -> Self {
        TwoForm { coef }
    }

    pub fn coef(&self) -> &Field {
        &self.coef
    }

    pub fn into_coef(self) -> Field {
        self.coef
    }

    /// A 2-form `f dz∧dz̄` is purely imaginary iff `f` is real.
    pub fn is_purely_imaginary(&self) -> bool {
        self.coef.iter().all(|v| v.im.abs() <= FLAG_TOL * (1.0 + v.re.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        TwoForm::new(&self.coef - &other.coef)
    }
}

/// `∫_M w` for `w = f dz∧dz̄`, i.e. `Σ f·(−2i)·Δx·Δy`.
pub fn integrate_two_form(s: &Surface, w: &TwoForm) -> Result<C64> {
    s.check_field(&w.coef)?;
    Ok(s.integrate_dxdy(&w.coef) * C64::new(0.0, -2.0))
}

/// `p∧q = (p10·q01 − p01·q10) dz∧dz̄`.
pub fn wedge_one_one(p: &OneForm, q: &OneForm) -> Result<TwoForm> {
    if p.dim() != q.dim() {
        return Err(Error::GridMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let mut coef = &p.dz * &q.dzbar;
    Zip::from(&mut coef)
        .and(&p.dzbar)
        .and(&q.dz)
        .for_each(|c, a, b| *c -= a * b);
    Ok(TwoForm::new(coef))
}

/// `*₁`: multiplies the `(1,0)` part by `−i` and the `(0,1)` part by `+i`.
pub fn hodge1(p: &OneForm) -> OneForm {
    OneForm {
        dz: p.dz.mapv(|v| v * C64::new(0.0, -1.0)),
        dzbar: p.dzbar.mapv(|v| v * C64::new(0.0, 1.0)),
        kind: p.kind,
    }
}

/// `*₂`: `η dz ↦ −η̄ dz̄` and `η̄ dz̄ ↦ η dz` (conjugate-linear).
pub fn hodge2(p: &OneForm) -> OneForm {
    OneForm {
        dz: p.dzbar.mapv(|v| v.conj()),
        dzbar: p.dz.mapv(|v| -v.conj()),
        kind: FormKind::General,
    }
}

/// `df = ∂f dz + ∂̄f dz̄` for a periodic scalar field.
pub fn d_zero_form(s: &Surface, f: &Field) -> Result<OneForm> {
    s.check_field(f)?;
    let sp = s.spectral();
    let dz = sp.del(f, 0.0);
    let imaginary = f.iter().all(|v| v.re == 0.0);
    if imaginary {
        Ok(OneForm::imaginary(dz))
    } else {
        OneForm::general(dz, sp.delbar(f, 0.0))
    }
}

/// `d(p10 dz + p01 dz̄) = (∂p01 − ∂̄p10) dz∧dz̄` for periodic coefficients.
pub fn d_one_form(s: &Surface, p: &OneForm) -> Result<TwoForm> {
    s.check_shape(p.dim())?;
    let sp = s.spectral();
    Ok(TwoForm::new(sp.del(&p.dzbar, 0.0) - sp.delbar(&p.dz, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(n: usize) -> Surface {
        Surface::new(2.0 * PI, 2.0 * PI, n, n, &Profile::default()).unwrap()
    }

    fn field(s: &Surface, f: impl Fn(f64, f64) -> C64) -> Field {
        Array2::from_shape_fn(s.shape(), |(j, i)| f(s.x(i), s.y(j)))
    }

    #[test]
    fn integrate_constant_area_form() {
        let s = torus(32);
        let v = integrate_two_form(&s, &s.omega()).unwrap();
        assert!((v - C64::new(0.0, -2.0 * 4.0 * PI * PI)).norm() < 1e-12);
    }

    #[test]
    fn integrate_mean_zero_mode() {
        let s = torus(32);
        let w = TwoForm::new(field(&s, |x, _| C64::new(x.cos(), 0.0)));
        assert!(integrate_two_form(&s, &w).unwrap().norm() < 1e-12);
    }

    #[test]
    fn integrate_band_limited_matches_high_resolution_sum() {
        // Oracle: the same integrand summed on a 1024² grid.
        let f = |x: f64, y: f64| C64::new(1.0 + 0.5 * x.cos() * y.cos(), 0.0);
        let fine = 1024;
        let h = 2.0 * PI / fine as f64;
        let mut oracle = C64::new(0.0, 0.0);
        for j in 0..fine {
            for i in 0..fine {
                oracle += f(i as f64 * h, j as f64 * h);
            }
        }
        let oracle = oracle * h * h * C64::new(0.0, -2.0);
        let s = torus(64);
        let v = integrate_two_form(&s, &TwoForm::new(field(&s, f))).unwrap();
        assert!((v - oracle).norm() < 1e-12);
        assert!((v - C64::new(0.0, -8.0 * PI * PI)).norm() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let s = torus(16);
        let w = TwoForm::new(Field::zeros((8, 8)));
        assert!(matches!(
            integrate_two_form(&s, &w),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn wedge_of_imaginary_constants() {
        // a = 1, b = i: coefficient āb − ab̄ = i − (−i) = 2i.
        let s = torus(16);
        let p = OneForm::imaginary(Field::from_elem(s.shape(), C64::new(1.0, 0.0)));
        let q = OneForm::imaginary(Field::from_elem(s.shape(), C64::new(0.0, 1.0)));
        let w = wedge_one_one(&p, &q).unwrap();
        // Brute force: pointwise (p10 q01 − p01 q10), summed.
        let mut brute = C64::new(0.0, 0.0);
        for j in 0..16 {
            for i in 0..16 {
                let c = p.dz()[(j, i)] * q.dzbar()[(j, i)] - p.dzbar()[(j, i)] * q.dz()[(j, i)];
                brute += c * s.cell_area() * C64::new(0.0, -2.0);
            }
        }
        let integral = integrate_two_form(&s, &w).unwrap();
        assert!((integral - brute).norm() < 1e-12);
        // −∫α₁∧α₂ = −(2i)(−2i)·4π² = −16π².
        assert!((-integral - C64::new(-16.0 * PI * PI, 0.0)).norm() < 1e-10);
        assert!(w.is_purely_imaginary() || w.coef().iter().all(|c| c.re.abs() < 1e-14));
        let zero = wedge_one_one(&p, &p).unwrap();
        assert!(zero.max_abs() == 0.0);
    }

    #[test]
    fn hodge1_convention_and_square() {
        let s = torus(8);
        let a = field(&s, |x, y| C64::new(x.sin(), y.cos()));
        let p = OneForm::imaginary(a.clone());
        let q = hodge1(&p);
        // *₁(a dz − ā dz̄) = −i(a dz + ā dz̄)
        for ((j, i), v) in a.indexed_iter() {
            assert_eq!(q.dz()[(j, i)], C64::new(0.0, -1.0) * v);
            assert_eq!(q.dzbar()[(j, i)], C64::new(0.0, -1.0) * v.conj());
        }
        assert!(q.is_imaginary_valued());
        let qq = hodge1(&q);
        assert_eq!(qq.dz(), &p.dz().mapv(|v| -v));
        assert_eq!(qq.dzbar(), &p.dzbar().mapv(|v| -v));
        let z = hodge1(&OneForm::zeros(s.shape()));
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn hodge2_convention_and_square() {
        let shape = (4, 4);
        let one = Field::from_elem(shape, C64::new(1.0, 0.0));
        let p = OneForm::general(one.clone(), Field::zeros(shape)).unwrap();
        let q = hodge2(&p);
        assert!(q.dz().iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert!(q.dzbar().iter().all(|v| *v == C64::new(-1.0, 0.0)));
        let eta = OneForm::general(one.mapv(|_| C64::new(0.0, 1.0)), Field::zeros(shape)).unwrap();
        assert!(hodge2(&eta).dzbar().iter().all(|v| *v == C64::new(0.0, 1.0)));
        let back = hodge2(&q);
        assert!(back.dz().iter().all(|v| *v == C64::new(-1.0, 0.0)));
    }

    #[test]
    fn d_of_constant_is_zero() {
        let s = torus(16);
        let df = d_zero_form(&s, &Field::from_elem(s.shape(), C64::new(0.0, 3.0))).unwrap();
        assert!(df.max_abs() < 1e-14);
        assert!(df.is_imaginary_valued());
    }

    #[test]
    fn d_of_imaginary_sine_matches_finite_differences() {
        // f = i sin x: ∂f = ∂̄f = (i cos x)/2.
        let s = torus(64);
        let f = field(&s, |x, _| C64::new(0.0, x.sin()));
        let df = d_zero_form(&s, &f).unwrap();
        assert!(df.is_imaginary_valued());
        let h = s.dx();
        let mut worst: f64 = 0.0;
        for ((j, i), v) in df.dz().indexed_iter() {
            let fd = (f[(j, (i + 1) % 64)] - f[(j, (i + 63) % 64)]) / (2.0 * h) * 0.5;
            worst = worst.max((v - fd).norm());
            let exact = C64::new(0.0, 0.5 * s.x(i).cos());
            assert!((v - exact).norm() < 1e-12);
        }
        assert!(worst < h * h, "centered differences agree to O(h²): {worst}");
    }

    #[test]
    fn product_rule_for_band_limited_fields() {
        let s = torus(64);
        let f = field(&s, |x, y| C64::new((x + 2.0 * y).sin(), 0.3 * (3.0 * y).cos()));
        let g = field(&s, |x, y| C64::new(x.cos() * y.sin(), (2.0 * x).sin()));
        let dfg = d_zero_form(&s, &(&f * &g)).unwrap();
        let df = d_zero_form(&s, &f).unwrap();
        let dg = d_zero_form(&s, &g).unwrap();
        let rhs_dz = &f * dg.dz() + &g * df.dz();
        let rhs_dzbar = &f * dg.dzbar() + &g * df.dzbar();
        let e1 = (dfg.dz() - &rhs_dz).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let e2 = (dfg.dzbar() - &rhs_dzbar).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(e1 < 1e-10 && e2 < 1e-10);
    }

    #[test]
    fn integration_by_parts_is_exact() {
        let s = torus(48);
        let f = field(&s, |x, y| C64::new((x - y).cos(), 0.2 * (2.0 * x).sin()));
        let q = OneForm::general(
            field(&s, |x, y| C64::new(y.sin(), x.cos())),
            field(&s, |x, y| C64::new((x + y).cos(), 0.0)),
        )
        .unwrap();
        let df = d_zero_form(&s, &f).unwrap();
        let lhs = integrate_two_form(&s, &wedge_one_one(&df, &q).unwrap()).unwrap();
        let dq = d_one_form(&s, &q).unwrap();
        let rhs = integrate_two_form(&s, &TwoForm::new(&f * dq.coef())).unwrap();
        assert!((lhs + rhs).norm() < 1e-10);
    }
}
