//! Atomic and laser parameters, derived two-level quantities and the
//! observability conditions for laser-bound pairs.

use alloc::string::String;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::potential::{self, PotentialContext};
use crate::units::{self, C_LIGHT, HBAR};

/// Relative detuning below which the polarizability is treated as resonant.
const RESONANCE_TOLERANCE: f64 = 1e-12;

/// A two-level atom. Stored in SI at the edges except the dipole moment,
/// which is kept in esu cm.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m
    pub transition_wavelength: f64,
    /// Natural linewidth, rad/s.
    pub natural_linewidth: f64,
    /// esu cm
    pub dipole_moment: f64,
}

impl AtomSpecies {
    /// Builds a species whose dipole moment follows from its linewidth.
    pub fn from_linewidth(name: impl Into<String>, mass: f64, transition_wavelength: f64, natural_linewidth: f64) -> Result<Self> {
        if !(transition_wavelength > 0.0) {
            return Err(Error::InvalidParameter { name: "transition_wavelength", reason: "must be positive" });
        }
        let omega = units::angular_frequency(units::m_to_cm(transition_wavelength));
        let d = dipole_from_linewidth(natural_linewidth, omega);
        Self::with_dipole(name, mass, transition_wavelength, natural_linewidth, d)
    }

    /// Builds a species with an explicit dipole moment (esu cm).
    pub fn with_dipole(
        name: impl Into<String>,
        mass: f64,
        transition_wavelength: f64,
        natural_linewidth: f64,
        dipole_moment: f64,
    ) -> Result<Self> {
        let checks = [
            (mass, "mass"),
            (transition_wavelength, "transition_wavelength"),
            (natural_linewidth, "natural_linewidth"),
            (dipole_moment, "dipole_moment"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive and finite" });
            }
        }
        Ok(Self { name: name.into(), mass, transition_wavelength, natural_linewidth, dipole_moment })
    }

    /// Lithium-7, D2 line.
    pub fn lithium7() -> Self {
        Self::from_linewidth("Li-7", 7.016_003_4 * units::AMU * 1e-3, 670.77e-9, units::hz_to_angular(5.9e6))
            .expect("built-in species is valid")
    }

    /// Caesium-133, D2 line.
    pub fn caesium133() -> Self {
        Self::from_linewidth("Cs-133", 132.905_451_96 * units::AMU * 1e-3, 852.1e-9, units::hz_to_angular(5.234e6))
            .expect("built-in species is valid")
    }

    /// Transition angular frequency, rad/s.
    pub fn omega_a(&self) -> f64 {
        units::angular_frequency(units::m_to_cm(self.transition_wavelength))
    }

    /// Mass in grams.
    pub fn mass_g(&self) -> f64 {
        units::kg_to_g(self.mass)
    }
}

/// `d^2 = 3 hbar c^3 Gamma / (4 omega^3)`.
pub fn dipole_from_linewidth(linewidth: f64, omega_a: f64) -> f64 {
    (3.0 * HBAR * C_LIGHT.powi(3) * linewidth / (4.0 * omega_a.powi(3))).sqrt()
}

/// Laser polarization. Only circular light is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarization {
    #[default]
    Circular,
}

/// A plane-wave laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserField {
    /// m
    pub wavelength: f64,
    /// W/cm²
    pub intensity: f64,
    /// `omega - omega_A`, rad/s.
    pub detuning: f64,
    pub direction: [f64; 3],
    pub polarization: Polarization,
}

impl LaserField {
    pub fn new(wavelength: f64, intensity: f64, detuning: f64, direction: [f64; 3]) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidParameter { name: "wavelength", reason: "must be positive" });
        }
        if !(intensity >= 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidParameter { name: "intensity", reason: "must be non-negative" });
        }
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter { name: "detuning", reason: "must be finite" });
        }
        let n = (direction[0] * direction[0] + direction[1] * direction[1] + direction[2] * direction[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter { name: "direction", reason: "must be a unit vector" });
        }
        Ok(Self { wavelength, intensity, detuning, direction, polarization: Polarization::Circular })
    }

    /// Laser detuned from `atom` by `detuning` (rad/s); the wavelength follows.
    pub fn detuned_from(atom: &AtomSpecies, detuning: f64, intensity: f64, direction: [f64; 3]) -> Result<Self> {
        let omega = atom.omega_a() + detuning;
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter { name: "detuning", reason: "laser frequency must stay positive" });
        }
        Self::new(units::wavelength_from_angular(omega) * 1e-2, intensity, detuning, direction)
    }

    pub fn with_intensity(&self, intensity: f64) -> Self {
        Self { intensity, ..*self }
    }

    /// Wavenumber, cm⁻¹.
    pub fn k(&self) -> f64 {
        units::wavenumber(units::m_to_cm(self.wavelength))
    }

    /// Angular frequency, rad/s.
    pub fn omega(&self) -> f64 {
        units::angular_frequency(units::m_to_cm(self.wavelength))
    }

    /// Intensity in erg s⁻¹ cm⁻².
    pub fn intensity_cgs(&self) -> f64 {
        units::w_per_cm2_to_cgs(self.intensity)
    }
}

/// `alpha = 2 omega_A d^2 / (hbar (omega_A^2 - omega^2))`, cm³.
pub fn polarizability(atom: &AtomSpecies, laser_omega: f64) -> Result<f64> {
    let wa = atom.omega_a();
    let rel = (laser_omega - wa) / wa;
    if rel.abs() < RESONANCE_TOLERANCE {
        return Err(Error::Resonant { relative_detuning: rel });
    }
    let d2 = atom.dipole_moment * atom.dipole_moment;
    Ok(2.0 * wa * d2 / (HBAR * (wa * wa - laser_omega * laser_omega)))
}

/// `S = 2 Omega^2 / (4 delta^2 + Gamma^2)`.
pub fn saturation(rabi: f64, detuning: f64, linewidth: f64) -> f64 {
    2.0 * rabi * rabi / (4.0 * detuning * detuning + linewidth * linewidth)
}

/// Rabi frequency that produces saturation `s`.
pub fn rabi_for_saturation(s: f64, detuning: f64, linewidth: f64) -> f64 {
    (s * (4.0 * detuning * detuning + linewidth * linewidth) / 2.0).sqrt()
}

/// `Omega = d E_0 / hbar` with the Gaussian field amplitude `E_0 = sqrt(8 pi I / c)`.
pub fn rabi_frequency(dipole: f64, intensity_cgs: f64) -> f64 {
    dipole * (8.0 * core::f64::consts::PI * intensity_cgs / C_LIGHT).sqrt() / HBAR
}

/// `E_R = hbar^2 k^2 / 2m` (k in cm⁻¹, mass in g), erg.
pub fn recoil_energy(k: f64, mass_g: f64) -> f64 {
    HBAR * HBAR * k * k / (2.0 * mass_g)
}

/// Two-level quantities of one atom in one laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// cm³
    pub polarizability: f64,
    /// rad/s
    pub rabi_frequency: f64,
    pub saturation: f64,
    /// erg
    pub recoil_energy: f64,
    /// `(kr)^2` at the requested separation.
    pub lamb_dicke: f64,
    /// Heating rate, 1/s (proportionality constants set to 1).
    pub heating_rate: f64,
    /// `hbar Gamma S`, erg.
    pub absorption_linewidth: f64,
    /// Set when `saturation` is not small.
    pub saturation_warning: bool,
}

/// Derived quantities at separation `r` (cm) and angle cosine `cos_theta`.
///
/// `saturation_override` replaces the saturation computed from the intensity.
pub fn derive(
    atom: &AtomSpecies,
    laser: &LaserField,
    r: f64,
    cos_theta: f64,
    saturation_override: Option<f64>,
) -> Result<DerivedParams> {
    let alpha = polarizability(atom, laser.omega())?;
    let rabi = rabi_frequency(atom.dipole_moment, laser.intensity_cgs());
    let s = saturation_override.unwrap_or_else(|| saturation(rabi, laser.detuning, atom.natural_linewidth));
    let k = laser.k();
    let e_r = recoil_energy(k, atom.mass_g());
    let kr = k * r;
    let f_ld = kr * kr;
    let f = potential::f_theta(kr, cos_theta)?;
    // hbar Gamma_heat = E_R f_LD / |F|
    let heating = e_r * f_ld / f.abs() / HBAR;
    Ok(DerivedParams {
        polarizability: alpha,
        rabi_frequency: rabi,
        saturation: s,
        recoil_energy: e_r,
        lamb_dicke: f_ld,
        heating_rate: heating,
        absorption_linewidth: HBAR * atom.natural_linewidth * s,
        saturation_warning: s > 0.1,
    })
}

/// Options for [`feasibility_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityOptions {
    /// Both ratios must exceed this for the pair to count as observable.
    pub threshold: f64,
    pub saturation_override: Option<f64>,
    /// Short-range cutoff, cm.
    pub cutoff: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self { threshold: 10.0, saturation_override: None, cutoff: potential::DEFAULT_CUTOFF_CM }
    }
}

/// Binding depth against the two broadening mechanisms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// Signed potential, erg.
    pub v_ab: f64,
    /// `hbar Gamma S`, erg.
    pub absorption_linewidth: f64,
    /// `hbar Gamma_heat`, erg.
    pub heating_energy: f64,
    /// `|V| / (hbar Gamma S)`.
    pub absorption_ratio: f64,
    /// `|V| / (hbar Gamma_heat)`.
    pub heating_ratio: f64,
    pub kr: f64,
    /// `k_L r` of the lattice laser.
    pub lattice_kr: f64,
    pub f_theta: f64,
    pub lamb_dicke: f64,
    pub saturation: f64,
    /// `kr >= 1`: the near-zone estimates are order-of-magnitude only.
    pub outside_near_zone: bool,
    /// `(kr)^2 > 0.1`.
    pub lamb_dicke_warning: bool,
    pub saturation_warning: bool,
    pub observable: bool,
}

/// Evaluates the two observability conditions at `separation` (m) and
/// interatomic angle `angle` (rad) to the binding-laser direction.
pub fn feasibility_report(
    atom: &AtomSpecies,
    lattice_laser: &LaserField,
    binding_laser: &LaserField,
    separation: f64,
    angle: f64,
    options: &FeasibilityOptions,
) -> Result<FeasibilityReport> {
    if !(separation > 0.0) {
        return Err(Error::InvalidParameter { name: "separation", reason: "must be positive" });
    }
    let r = units::m_to_cm(separation);
    let cos_theta = angle.cos();
    let derived = derive(atom, binding_laser, r, cos_theta, options.saturation_override)?;
    let ctx = PotentialContext::new(
        binding_laser.k(),
        derived.polarizability,
        binding_laser.intensity_cgs(),
        binding_laser.direction,
        options.cutoff,
    )?;
    let geom = potential::AngularGeometry::new(r, cos_theta)?;
    let v = potential::v_ab(&ctx, &geom)?;
    let kr = binding_laser.k() * r;
    let heating_energy = HBAR * derived.heating_rate;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let absorption_ratio = ratio(v.abs(), derived.absorption_linewidth);
    let heating_ratio = ratio(v.abs(), heating_energy);
    Ok(FeasibilityReport {
        v_ab: v,
        absorption_linewidth: derived.absorption_linewidth,
        heating_energy,
        absorption_ratio,
        heating_ratio,
        kr,
        lattice_kr: lattice_laser.k() * r,
        f_theta: potential::f_theta(kr, cos_theta)?,
        lamb_dicke: derived.lamb_dicke,
        saturation: derived.saturation,
        outside_near_zone: kr >= 1.0,
        lamb_dicke_warning: derived.lamb_dicke > 0.1,
        saturation_warning: derived.saturation_warning,
        observable: absorption_ratio > options.threshold && heating_ratio > options.threshold,
    })
}
