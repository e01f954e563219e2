//! Fourier pseudo-spectral calculus on the periodic grid.
//!
//! Grid fields are `Array2<C64>` of shape `(ny, nx)`: row `j` holds the points
//! with `y = j·Ly/ny`, column `i` the points with `x = i·Lx/nx`.
//!
//! First-derivative symbols drop the Nyquist mode, and the Laplacian is the
//! composition of those first derivatives, so `∂∂̄ = Δ/4` holds exactly on the
//! grid and discrete integration by parts is exact.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use rustfft::{Fft, FftPlanner};

use crate::C64;

pub type Field = Array2<C64>;

#[derive(Clone)]
pub struct Spectral {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

/// Angular wavenumbers for a periodic grid of `n` points on length `l`, with
/// the Nyquist mode set to zero.
fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / l;
    (0..n)
        .map(|i| {
            if 2 * i == n {
                0.0
            } else if i < n / 2 + n % 2 {
                base * i as f64
            } else {
                base * (i as f64 - n as f64)
            }
        })
        .collect()
}

impl Spectral {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            nx,
            ny,
            lx,
            ly,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
        }
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    fn rows(&self, f: &mut Field, inverse: bool) {
        let data = f
            .as_slice_mut()
            .expect("grid fields are kept in standard layout");
        if inverse {
            self.inv_x.process(data);
            let s = 1.0 / self.nx as f64;
            data.iter_mut().for_each(|v| *v *= s);
        } else {
            self.fwd_x.process(data);
        }
    }

    fn cols(&self, f: &mut Field, inverse: bool) {
        let mut t = f.t().as_standard_layout().into_owned();
        let data = t.as_slice_mut().unwrap();
        if inverse {
            self.inv_y.process(data);
            let s = 1.0 / self.ny as f64;
            data.iter_mut().for_each(|v| *v *= s);
        } else {
            self.fwd_y.process(data);
        }
        f.assign(&t.t());
    }

    /// Unnormalized 2-D forward transform.
    pub fn forward(&self, f: &Field) -> Field {
        let mut g = f.as_standard_layout().into_owned();
        self.rows(&mut g, false);
        self.cols(&mut g, false);
        g
    }

    /// Inverse of [`Spectral::forward`].
    pub fn inverse(&self, f: &Field) -> Field {
        let mut g = f.as_standard_layout().into_owned();
        self.cols(&mut g, true);
        self.rows(&mut g, true);
        g
    }

    pub fn dx(&self, f: &Field) -> Field {
        let mut g = f.as_standard_layout().into_owned();
        self.rows(&mut g, false);
        for mut row in g.rows_mut() {
            for (v, &k) in row.iter_mut().zip(&self.kx) {
                *v *= C64::new(0.0, k);
            }
        }
        self.rows(&mut g, true);
        g
    }

    pub fn dy(&self, f: &Field) -> Field {
        let mut g = f.as_standard_layout().into_owned();
        self.cols(&mut g, false);
        for (mut row, &k) in g.rows_mut().into_iter().zip(&self.ky) {
            row.iter_mut().for_each(|v| *v *= C64::new(0.0, k));
        }
        self.cols(&mut g, true);
        g
    }

    /// `∂y` of a field obeying `f(x, y + Ly) = e^{−i·twist·Ly·x} f(x, y)`.
    ///
    /// `e^{i·twist·x·y} f` is periodic in `y`, so it is differentiated
    /// spectrally and the phase is removed again.
    pub fn dy_twisted(&self, f: &Field, twist: f64) -> Field {
        if twist == 0.0 {
            return self.dy(f);
        }
        let (dx, dy) = (self.lx / self.nx as f64, self.ly / self.ny as f64);
        let phase = Array2::from_shape_fn((self.ny, self.nx), |(j, i)| {
            let (x, y) = (i as f64 * dx, j as f64 * dy);
            C64::from_polar(1.0, twist * x * y)
        });
        let g = f * &phase;
        let mut out = self.dy(&g);
        Zip::indexed(&mut out)
            .and(&phase)
            .and(f)
            .for_each(|(_, i), o, p, v| {
                let x = i as f64 * dx;
                *o = *o * p.conj() - C64::new(0.0, twist * x) * v;
            });
        out
    }

    /// `∂ = ½(∂x − i∂y)` for a field with the given twist (0 for periodic).
    pub fn del(&self, f: &Field, twist: f64) -> Field {
        let fx = self.dx(f);
        let fy = self.dy_twisted(f, twist);
        (fx - fy * C64::i()) * 0.5
    }

    /// `∂̄ = ½(∂x + i∂y)` for a field with the given twist (0 for periodic).
    pub fn delbar(&self, f: &Field, twist: f64) -> Field {
        let fx = self.dx(f);
        let fy = self.dy_twisted(f, twist);
        (fx + fy * C64::i()) * 0.5
    }

    pub fn laplacian(&self, f: &Field) -> Field {
        let mut g = self.forward(f);
        Zip::indexed(&mut g).for_each(|(j, i), v| {
            *v *= -(self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]);
        });
        self.inverse(&g)
    }

    /// Applies `(−Δ + shift)⁻¹`. Modes where the symbol vanishes are set to zero.
    pub fn inverse_helmholtz(&self, f: &Field, shift: f64) -> Field {
        let mut g = self.forward(f);
        Zip::indexed(&mut g).for_each(|(j, i), v| {
            let symbol = self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j] + shift;
            if symbol.abs() > 1e-300 {
                *v /= symbol;
            } else {
                *v = C64::new(0.0, 0.0);
            }
        });
        self.inverse(&g)
    }

    /// Real-valued convenience wrapper around [`Spectral::laplacian`].
    pub fn laplacian_real(&self, f: &Array2<f64>) -> Array2<f64> {
        self.laplacian(&f.mapv(|v| C64::new(v, 0.0))).mapv(|v| v.re)
    }

    pub fn inverse_helmholtz_real(&self, f: &Array2<f64>, shift: f64) -> Array2<f64> {
        self.inverse_helmholtz(&f.mapv(|v| C64::new(v, 0.0)), shift)
            .mapv(|v| v.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64, f: impl Fn(f64, f64) -> C64) -> Field {
        let d = l / n as f64;
        Array2::from_shape_fn((n, n), |(j, i)| f(i as f64 * d, j as f64 * d))
    }

    #[test]
    fn wavenumbers_drop_nyquist() {
        let k = wavenumbers(8, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, 0.0, -3.0, -2.0, -1.0]);
        let k = wavenumbers(5, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let s = Spectral::new(32, 32, 2.0 * PI, 2.0 * PI);
        let f = grid(32, 2.0 * PI, |x, y| C64::new((2.0 * x).sin() * y.cos(), 0.0));
        let fx = s.dx(&f);
        let fy = s.dy(&f);
        let ex = grid(32, 2.0 * PI, |x, y| C64::new(2.0 * (2.0 * x).cos() * y.cos(), 0.0));
        let ey = grid(32, 2.0 * PI, |x, y| C64::new(-(2.0 * x).sin() * y.sin(), 0.0));
        assert!((fx - ex).iter().all(|v| v.norm() < 1e-12));
        assert!((fy - ey).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn helmholtz_inverts_laplacian() {
        let s = Spectral::new(16, 24, 3.0, 5.0);
        let f = Array2::from_shape_fn((24, 16), |(j, i)| {
            C64::new((i as f64 * 0.3).sin() + (j as f64 * 0.7).cos(), 0.1 * i as f64)
        });
        let m = 2.5;
        let u = s.inverse_helmholtz(&f, m);
        let back = -s.laplacian(&u) + &u * m;
        // Nyquist modes are projected consistently on both sides.
        let back_hat = s.forward(&back);
        let f_hat = s.forward(&f);
        for ((j, i), v) in back_hat.indexed_iter() {
            if 2 * i != 16 && 2 * j != 24 {
                assert!((v - f_hat[(j, i)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn twisted_derivative_matches_analytic_landau_function() {
        // f = exp(-i c x y) is the simplest field with the y-twist `c`.
        let (n, l) = (32, 2.0 * PI);
        let c = 1.0 / PI; // 2πN/(Lx Ly) with N = 2
        let s = Spectral::new(n, n, l, l);
        let f = grid(n, l, |x, y| C64::from_polar(1.0 + 0.2 * y.sin(), -c * x * y));
        let fy = s.dy_twisted(&f, c);
        let e = grid(n, l, |x, y| {
            let amp = 1.0 + 0.2 * y.sin();
            C64::from_polar(1.0, -c * x * y) * (C64::new(0.2 * y.cos(), 0.0) - C64::new(0.0, c * x) * amp)
        });
        let err = (fy - e).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "err = {err}");
    }
}
