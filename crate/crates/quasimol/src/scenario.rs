//! Physical set-up assembled from a [`RunConfig`].

use quasimol_core::green::{ElementCache, GreenConfig, LatticeGreen, Regularization};
use quasimol_core::lattice::{self, BandParams, HarmonicWannier, LatticeSpec, PairBand, PairBasis, PotentialMatrix};
use quasimol_core::params::{self, AtomSpecies, LaserField};
use quasimol_core::potential::PotentialContext;
use quasimol_core::spectral::{Spectral, SpectralSettings, SweepWindows};
use quasimol_core::units;

use crate::config::RunConfig;
use crate::error::RunError;
use crate::registry::Registry;

/// Everything the spectral and wavefunction stages need, with the
/// potential stored per unit intensity (it is linear in `I`).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub atom: AtomSpecies,
    /// Binding laser at the reference intensity.
    pub binding: LaserField,
    /// Lattice laser (intensity unused).
    pub lattice_laser: LaserField,
    pub lattice: LatticeSpec,
    pub wannier: HarmonicWannier,
    /// Band constants from the harmonic Wannier calculation.
    pub computed_band: BandParams,
    /// Band constants actually used (injected when configured).
    pub band_params: BandParams,
    pub band: PairBand,
    pub basis: PairBasis,
    /// Potential on the basis at 1 W/cm².
    pub unit_potential: PotentialMatrix,
    pub green: LatticeGreen,
    pub settings: SpectralSettings,
    pub regularization: Regularization,
    pub windows: SweepWindows,
}

pub fn load_species(config: &RunConfig) -> Result<AtomSpecies, RunError> {
    let registry = match &config.atom.registry {
        Some(path) => Registry::with_file(path)?,
        None => Registry::built_in(),
    };
    let mut record = registry.find(&config.atom.species)?.clone();
    if let Some(d) = config.atom.dipole_moment {
        record.dipole_moment = Some(d);
    }
    record.to_species()
}

impl Scenario {
    pub fn build(config: &RunConfig) -> Result<Self, RunError> {
        config.validate()?;
        let atom = load_species(config)?;
        let gamma = atom.natural_linewidth;
        let b = &config.binding_laser;
        let binding = LaserField::detuned_from(&atom, b.detuning_gamma * gamma, b.intensity, config.direction())?;

        let l = &config.lattice;
        let lattice_laser = match (l.wavelength_nm, l.detuning_gamma) {
            (Some(nm), _) => {
                let omega = units::angular_frequency(units::nm_to_cm(nm));
                LaserField::new(nm * 1e-9, 0.0, omega - atom.omega_a(), [1.0, 0.0, 0.0])?
            }
            (None, Some(d)) => LaserField::detuned_from(&atom, d * gamma, 0.0, [1.0, 0.0, 0.0])?,
            (None, None) => return Err(RunError::Config(vec!["missing field `lattice.wavelength_nm` (or `lattice.detuning_gamma`)".into()])),
        };
        let depth = match (l.well_depth_hz, l.detuning_gamma, l.saturation) {
            (Some(hz), _, _) => units::hz_to_erg(hz),
            (None, Some(d), Some(s)) => lattice::light_shift_depth(d * gamma, s),
            _ => return Err(RunError::Config(vec!["missing field `lattice.well_depth_hz` (or `lattice.detuning_gamma` with `lattice.saturation`)".into()])),
        };
        let lattice = LatticeSpec::from_wavenumber(lattice_laser.k(), depth, atom.mass_g())?;
        let wannier = lattice::harmonic_wannier(&lattice, 0)?;
        let computed_band = lattice::band_params(&lattice, 0)?;
        let band_params = match (l.lambda0_hz, l.lambda1_hz) {
            (Some(l0), Some(l1)) => BandParams { lambda0: units::hz_to_erg(l0), lambda1: units::hz_to_erg(l1), band_index: 0 },
            _ => computed_band,
        };
        let band = PairBand::lowest(&band_params)?;
        let basis = PairBasis::with_radius(l.r_max, l.statistics.into())?;

        let n = &config.numerics;
        let settings = SpectralSettings {
            samples_per_unit: n.samples_per_unit,
            derivative_step: n.derivative_step,
            root_tolerance: n.root_tolerance,
            bound_tolerance: n.bound_tolerance,
            det_floor: n.det_floor,
            flat_slope: n.flat_slope,
        };
        settings.validate()?;
        let windows = SweepWindows { band: (n.band_window[0], n.band_window[1]), above: (n.bound_window[0], n.bound_window[1]) };
        let mut out = Self {
            config: config.clone(),
            atom,
            binding,
            lattice_laser,
            lattice,
            wannier,
            computed_band,
            band_params,
            band,
            unit_potential: PotentialMatrix::zeros(0),
            green: LatticeGreen::new(0, GreenConfig::default())?,
            basis,
            settings,
            regularization: n.regularization(),
            windows,
        };
        out.rebuild_cluster()?;
        Ok(out)
    }

    fn green_config(&self) -> GreenConfig {
        let n = &self.config.numerics;
        GreenConfig { tolerance: n.quadrature_tolerance, tail_start: n.tail_start, tail_terms: n.tail_terms }
    }

    fn rebuild_cluster(&mut self) -> Result<(), RunError> {
        let ctx = self.potential_context(1.0)?;
        let smear = self.config.lattice.smear.then_some(&self.wannier);
        self.unit_potential = lattice::potential_matrix(&self.basis, &ctx, self.lattice.spacing, smear)?;
        self.green = LatticeGreen::new(self.basis.max_order(), self.green_config())?;
        Ok(())
    }

    /// Same scenario on a cluster of radius `r_max` lattice constants.
    pub fn with_r_max(&self, r_max: f64) -> Result<Self, RunError> {
        let mut out = self.clone();
        out.config.lattice.r_max = r_max;
        out.basis = PairBasis::with_radius(r_max, self.basis.statistics)?;
        out.rebuild_cluster()?;
        Ok(out)
    }

    pub fn with_regularization(&self, regularization: Regularization) -> Self {
        let mut out = self.clone();
        out.regularization = regularization;
        out
    }

    /// Potential context of the binding laser at `intensity` (W/cm²).
    pub fn potential_context(&self, intensity: f64) -> Result<PotentialContext, RunError> {
        let alpha = params::polarizability(&self.atom, self.binding.omega())?;
        let cutoff = units::nm_to_cm(self.config.binding_laser.cutoff_nm);
        Ok(PotentialContext::new(self.binding.k(), alpha, units::w_per_cm2_to_cgs(intensity), self.binding.direction, cutoff)?)
    }

    pub fn potential_at(&self, intensity: f64) -> PotentialMatrix {
        self.unit_potential.scaled(intensity)
    }

    /// Determinant problem at `intensity` (W/cm²).
    pub fn spectral<'a, C: ElementCache + ?Sized>(&'a self, intensity: f64, cache: &'a C) -> Result<Spectral<'a, C>, RunError> {
        Ok(Spectral::new(
            &self.green,
            &self.basis,
            &self.potential_at(intensity),
            self.band,
            intensity,
            self.regularization,
            self.settings,
            cache,
        )?)
    }

    /// Wannier amplitude width in lattice constants.
    pub fn sigma_lattice(&self) -> f64 {
        self.wannier.sigma / self.lattice.spacing
    }

    /// Pair hopping `4 lambda(1)` in Hz.
    pub fn hopping_hz(&self) -> f64 {
        units::erg_to_hz(self.band.hopping)
    }

    /// Header comments describing the scenario.
    pub fn describe(&self) -> Vec<(String, String)> {
        let c = &self.config;
        vec![
            ("atom".into(), self.atom.name.clone()),
            ("binding_detuning_gamma".into(), c.binding_laser.detuning_gamma.to_string()),
            ("binding_direction".into(), format!("{:?}", c.direction())),
            ("lattice_spacing_nm".into(), (self.lattice.spacing * 1e7).to_string()),
            ("lambda0_hz".into(), units::erg_to_hz(self.band_params.lambda0).to_string()),
            ("lambda1_hz".into(), units::erg_to_hz(self.band_params.lambda1).to_string()),
            ("r_max".into(), c.lattice.r_max.to_string()),
            ("basis_size".into(), self.basis.len().to_string()),
            ("regularization".into(), format!("{:?}", self.regularization)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figures_preset_builds_with_injected_band() {
        let s = Scenario::build(&RunConfig::figures()).unwrap();
        assert!((s.hopping_hz() - 3.92).abs() < 1e-9);
        assert!((units::erg_to_hz(s.band.onsite) - 6.816e6).abs() < 1e-3);
        assert_eq!(s.basis.len(), 16);
        // Lattice laser 1e4 linewidths blue of 670.77 nm.
        assert!((s.lattice.spacing * 1e7 - 335.38).abs() < 0.1);
    }

    #[test]
    fn potential_is_linear_in_intensity() {
        let s = Scenario::build(&RunConfig::figures()).unwrap();
        let a = s.potential_at(0.25);
        let b = s.potential_at(0.5);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((2.0 * x - y).abs() <= 1e-15 * y.abs());
        }
        assert!(s.potential_at(0.0).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn larger_cluster_keeps_physics() {
        let s = Scenario::build(&RunConfig::figures()).unwrap();
        let t = s.with_r_max(3.0).unwrap();
        assert!(t.basis.len() > s.basis.len());
        assert_eq!(t.band, s.band);
        let i = t.basis.index_of([1, 1, 1]).unwrap();
        let j = s.basis.index_of([1, 1, 1]).unwrap();
        assert_eq!(t.unit_potential.values()[i], s.unit_potential.values()[j]);
    }
}
