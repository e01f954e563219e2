//! Numerical toolkit for abelian vortices on a flat torus.
//!
//! The crate solves the vortex equations
//!
//! ```text
//!     F(A) = (1 - |Ψ|²_H) ω,        ∂̄_A Ψ = 0
//! ```
//!
//! for a unitary connection `A` and a section `Ψ` of a degree-`N` line bundle,
//! builds tangent vectors to the moduli space of solutions, and evaluates the
//! Kähler data (`𝒢`, `ℐ`, `Ω`), the weighted forms `Ω_{Ψ₀}`, the moment map and
//! the curvature of the determinant bundles `L±` on those tangents.
//!
//! Conventions used throughout: `z = x + iy`, `∂ = ½(∂x − i∂y)`,
//! `∂̄ = ½(∂x + i∂y)`, `dz∧dz̄ = −2i dx∧dy`, and `ω = h² dz∧dz̄`.

pub mod bundle;
pub mod error;
pub mod io;
pub mod kahler;
pub mod quillen;
pub mod random;
pub mod report;
pub mod solver;
pub mod spectral;
pub mod surface;
pub mod tangent;
pub mod theta;

pub use error::{Error, Result};

/// Complex grid scalar.
pub type C64 = num_complex::Complex64;
