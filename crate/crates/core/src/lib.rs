//! Numerical core for laser-bound atom pairs in a simple-cubic optical lattice.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the physics end to end:
//! the off-resonant induced dipole-dipole potential, tight-binding band
//! parameters from harmonic Wannier functions, the two-atom lattice Green
//! function as Bessel-function integrals, the `det(1 - G V)` spectral analysis
//! that locates resonances and bound states, and the Lippmann-Schwinger pair
//! wavefunction with its Schmidt diagnostics.
//!
//! Internally all dimensional quantities are Gaussian-CGS (erg, cm, s, esu).
//! Helpers in [`units`] convert from and to the SI-style inputs used at the
//! edges (nm, W/cm², Hz).
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod green;
pub mod lattice;
pub mod params;
pub mod potential;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod units;
pub mod wavefunction;

pub use error::{Error, Result};
pub use num_complex::Complex64;
