//! Atom species registry backed by TOML data files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use quasimol_core::params::AtomSpecies;
use quasimol_core::units;

use crate::error::RunError;

const BUILT_IN: &str = include_str!("../data/species.toml");

/// One registry entry, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesRecord {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m
    pub transition_wavelength: f64,
    /// rad/s
    pub natural_linewidth: f64,
    /// C m; derived from the linewidth when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_moment: Option<f64>,
}

impl SpeciesRecord {
    pub fn to_species(&self) -> Result<AtomSpecies, RunError> {
        let atom = match self.dipole_moment {
            Some(d) => AtomSpecies::with_dipole(
                self.name.clone(),
                self.mass,
                self.transition_wavelength,
                self.natural_linewidth,
                units::coulomb_m_to_esu_cm(d),
            ),
            None => AtomSpecies::from_linewidth(self.name.clone(), self.mass, self.transition_wavelength, self.natural_linewidth),
        };
        atom.map_err(|e| RunError::Config(vec![format!("species `{}`: {e}", self.name)]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    #[serde(default)]
    pub species: Vec<SpeciesRecord>,
}

impl Registry {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(vec![format!("species registry: {e}")]))
    }

    /// Entries shipped with the crate (Li-7 and Cs-133).
    pub fn built_in() -> Self {
        Self::parse(BUILT_IN).expect("built-in registry parses")
    }

    /// Built-ins overlaid by the entries of `path`.
    pub fn with_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut extra = Self::parse(&text)?;
        extra.species.extend(Self::built_in().species);
        Ok(extra)
    }

    /// First entry called `name`.
    pub fn find(&self, name: &str) -> Result<&SpeciesRecord, RunError> {
        self.species.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.species.iter().map(|s| s.name.as_str()).collect();
            RunError::Config(vec![format!("`atom.species`: unknown species `{name}` (known: {})", known.join(", "))])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn built_ins_match_core_constructors() {
        let reg = Registry::built_in();
        for (name, core) in [("Li-7", AtomSpecies::lithium7()), ("Cs-133", AtomSpecies::caesium133())] {
            let a = reg.find(name).unwrap().to_species().unwrap();
            assert!(rel(a.mass, core.mass) < 1e-14);
            assert!(rel(a.natural_linewidth, core.natural_linewidth) < 1e-14);
            assert!(rel(a.dipole_moment, core.dipole_moment) < 1e-12);
            assert_eq!(a.transition_wavelength, core.transition_wavelength);
        }
    }

    #[test]
    fn explicit_dipole_is_used() {
        let text = "[[species]]\nname = \"X\"\nmass = 1e-26\ntransition_wavelength = 7e-7\nnatural_linewidth = 3e7\ndipole_moment = 2e-29\n";
        let a = Registry::parse(text).unwrap().find("X").unwrap().to_species().unwrap();
        assert!(rel(a.dipole_moment, units::coulomb_m_to_esu_cm(2e-29)) < 1e-15);
    }

    #[test]
    fn unknown_species_names_the_known_ones() {
        let err = Registry::built_in().find("Rb-87").unwrap_err().to_string();
        assert!(err.contains("Li-7") && err.contains("Cs-133"));
    }

    #[test]
    fn file_entries_shadow_built_ins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(&path, "[[species]]\nname = \"Li-7\"\nmass = 1e-26\ntransition_wavelength = 6e-7\nnatural_linewidth = 1e7\n").unwrap();
        let reg = Registry::with_file(&path).unwrap();
        assert_eq!(reg.find("Li-7").unwrap().transition_wavelength, 6e-7);
        assert!(reg.find("Cs-133").is_ok());
    }
}
