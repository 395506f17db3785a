//! Physical constants (Gaussian-CGS) and unit conversions.

use core::f64::consts::PI;

/// Reduced Planck constant, erg s.
pub const HBAR: f64 = 1.054_571_817e-27;
/// Planck constant, erg s.
pub const PLANCK: f64 = 2.0 * PI * HBAR;
/// Speed of light, cm/s.
pub const C_LIGHT: f64 = 2.997_924_58e10;
/// Atomic mass unit, g.
pub const AMU: f64 = 1.660_539_066_60e-24;
/// Atomic unit of electric dipole moment (e a0), esu cm.
pub const DIPOLE_AU: f64 = 2.541_746_473e-18;

/// Metres to centimetres.
pub const fn m_to_cm(x: f64) -> f64 {
    x * 100.0
}

pub const fn nm_to_cm(x: f64) -> f64 {
    x * 1e-7
}

pub const fn kg_to_g(x: f64) -> f64 {
    x * 1000.0
}

/// W/cm² to erg s⁻¹ cm⁻².
pub const fn w_per_cm2_to_cgs(x: f64) -> f64 {
    x * 1e7
}

/// mW/cm² to erg s⁻¹ cm⁻².
pub const fn mw_per_cm2_to_cgs(x: f64) -> f64 {
    x * 1e4
}

/// C m to esu cm.
pub const fn coulomb_m_to_esu_cm(x: f64) -> f64 {
    x * 2.997_924_58e11
}

/// Energy (erg) expressed as a frequency E/h in Hz.
pub fn erg_to_hz(e: f64) -> f64 {
    e / PLANCK
}

/// Frequency E/h in Hz to energy in erg.
pub fn hz_to_erg(f: f64) -> f64 {
    f * PLANCK
}

/// Cyclic frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

/// Wavenumber 2π/λ for a wavelength in cm.
pub fn wavenumber(wavelength_cm: f64) -> f64 {
    2.0 * PI / wavelength_cm
}

/// Angular frequency of light with the given vacuum wavelength (cm).
pub fn angular_frequency(wavelength_cm: f64) -> f64 {
    2.0 * PI * C_LIGHT / wavelength_cm
}

/// Vacuum wavelength (cm) of light at the given angular frequency.
pub fn wavelength_from_angular(omega: f64) -> f64 {
    2.0 * PI * C_LIGHT / omega
}
