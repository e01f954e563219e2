//! Jacobi theta function `ϑ(u | τ) = Σₙ exp(πi n² τ + 2πi n u)`.
//!
//! `ϑ(u + 1) = ϑ(u)`, `ϑ(u + τ) = exp(−πiτ − 2πiu) ϑ(u)`, and the only zeros
//! are at `u = ½ + τ/2` modulo the lattice.

use std::f64::consts::PI;

use crate::C64;

/// Evaluates `ϑ(u | τ)` for `Im τ > 0` by direct summation.
///
/// The series is summed over a window centred on the dominant term, wide
/// enough that the neglected terms are below `1e-18` relative to it.
pub fn jacobi_theta(u: C64, tau: C64) -> C64 {
    assert!(tau.im > 0.0, "theta requires Im(tau) > 0");
    let t = tau.im;
    // |term_n| = exp(−π n² t − 2π n Im u): peaked at n* = −Im(u)/t.
    let centre = -u.im / t;
    let half_width = (42.0 / (PI * t)).sqrt() + 2.0;
    let lo = (centre - half_width).floor() as i64;
    let hi = (centre + half_width).ceil() as i64;
    let mut sum = C64::new(0.0, 0.0);
    for n in lo..=hi {
        let nf = n as f64;
        let arg = C64::new(0.0, PI) * (tau * nf * nf + u * (2.0 * nf));
        sum += arg.exp();
    }
    sum
}
