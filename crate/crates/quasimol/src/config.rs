//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use quasimol_core::green::Regularization;
use quasimol_core::lattice::Statistics;

use crate::error::RunError;

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub atom: AtomConfig,
    pub binding_laser: BindingLaserConfig,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub potential: PotentialPlotConfig,
    #[serde(default)]
    pub dos: DosConfig,
    #[serde(default)]
    pub wavefunction: WavefunctionConfig,
    #[serde(default)]
    pub feasibility: FeasibilityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Registry name, e.g. `"Li-7"`.
    pub species: String,
    /// Extra species file searched before the built-ins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    /// Transition dipole moment override, C m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_moment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingLaserConfig {
    /// `omega - omega_A` in units of the natural linewidth.
    pub detuning_gamma: f64,
    /// Propagation direction, normalized on use.
    pub direction: [f64; 3],
    /// Reference intensity, W/cm².
    pub intensity: f64,
    /// Ascending sweep grid, W/cm².
    #[serde(default)]
    pub intensity_grid: Vec<f64>,
    /// Saturation override for the feasibility report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
    /// Short-range cutoff, nm.
    #[serde(default = "default_cutoff_nm")]
    pub cutoff_nm: f64,
}

fn default_cutoff_nm() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsConfig {
    Boson,
    Fermion,
}

impl From<StatisticsConfig> for Statistics {
    fn from(s: StatisticsConfig) -> Self {
        match s {
            StatisticsConfig::Boson => Statistics::Boson,
            StatisticsConfig::Fermion => Statistics::Fermion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Lattice-laser detuning in natural linewidths; sets the wavelength and,
    /// with `saturation`, the light-shift depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
    /// Well depth `V_0`, Hz. Takes precedence over the light shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_depth_hz: Option<f64>,
    /// Lattice-laser wavelength, nm. Takes precedence over the detuning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    /// Cluster radius in lattice constants.
    pub r_max: f64,
    pub statistics: StatisticsConfig,
    /// Injected on-site energy `lambda(0)` per atom, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0_hz: Option<f64>,
    /// Injected hopping `lambda(1)` per atom, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1_hz: Option<f64>,
    /// Average the potential over the relative-coordinate Wannier density.
    #[serde(default)]
    pub smear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// First damping of the extrapolation ladder; 0 selects the exact
    /// boundary value.
    pub eta0: f64,
    /// Ladder length; 1 means fixed damping `eta0`.
    pub eta_levels: usize,
    /// Absolute tolerance per Green element.
    pub quadrature_tolerance: f64,
    pub tail_start: f64,
    pub tail_terms: usize,
    /// Root bracketing grid per unit `E'`.
    pub samples_per_unit: f64,
    pub derivative_step: f64,
    pub root_tolerance: f64,
    pub bound_tolerance: f64,
    pub det_floor: f64,
    pub flat_slope: f64,
    /// Resonance scan window inside the band.
    pub band_window: [f64; 2],
    /// Bound-state scan window above the band; the sweep raises the upper
    /// end to `4 + max|V/hopping|` when that is larger.
    pub bound_window: [f64; 2],
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            eta0: 0.0,
            eta_levels: 3,
            quadrature_tolerance: 1e-8,
            tail_start: 200.0,
            tail_terms: 20,
            samples_per_unit: 400.0,
            derivative_step: 1e-4,
            root_tolerance: 1e-8,
            bound_tolerance: 1e-8,
            det_floor: 1e-12,
            flat_slope: 1e-10,
            band_window: [-2.999, 2.999],
            bound_window: [3.0005, 10.0],
        }
    }
}

impl NumericsConfig {
    pub fn regularization(&self) -> Regularization {
        if self.eta0 == 0.0 {
            Regularization::Exact
        } else if self.eta_levels <= 1 {
            Regularization::Damped(self.eta0)
        } else {
            Regularization::Extrapolated { eta0: self.eta0, levels: self.eta_levels }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Significant digits in CSV; absent means shortest round-trip form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), precision: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialPlotConfig {
    pub kr_min: f64,
    pub kr_max: f64,
    pub points: usize,
    /// Angle cosines, one column each.
    pub cos_theta: Vec<f64>,
    /// W/cm²; the binding-laser reference intensity when absent.
    pub intensity: Option<f64>,
}

impl Default for PotentialPlotConfig {
    fn default() -> Self {
        Self {
            kr_min: 1.0,
            kr_max: 20.0,
            points: 400,
            cos_theta: vec![0.0, (2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()],
            intensity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DosConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
}

impl Default for DosConfig {
    fn default() -> Self {
        Self { e_min: -2.995, e_max: 2.995, points: 1199 }
    }
}

/// Energy at which the Lippmann-Schwinger system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "value")]
pub enum EnergyPolicy {
    /// Narrowest valid resonance at that intensity, else the fallback energy.
    Resonance,
    /// Fixed `E'`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefunctionConfig {
    /// Sites of atoms A and B of the incident pair.
    pub incident: [[i32; 3]; 2],
    /// Intensities, W/cm².
    pub intensities: Vec<f64>,
    pub energy: EnergyPolicy,
    /// `E'` used by the resonance policy when no valid resonance exists.
    /// Away from 0, where elements with even `|l|` vanish.
    pub fallback_energy: f64,
    pub r_max: f64,
    pub points: usize,
    pub directions: Vec<[i32; 3]>,
}

impl Default for WavefunctionConfig {
    fn default() -> Self {
        Self {
            incident: [[0, 0, 0], [1, 1, 1]],
            intensities: vec![0.0, 4.8e-4, 5.0],
            energy: EnergyPolicy::Resonance,
            fallback_energy: 2.0,
            r_max: 3.0,
            points: 301,
            directions: quasimol_core::wavefunction::DEFAULT_DIRECTIONS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibilityConfig {
    /// Separation in lattice constants.
    pub separation: f64,
    pub cos_theta: f64,
    /// Both ratios must exceed this.
    pub threshold: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self { separation: 1.0, cos_theta: (1.0f64 / 3.0).sqrt(), threshold: 10.0 }
    }
}

/// Fields without defaults, as dotted paths.
const REQUIRED: [&str; 6] = [
    "atom.species",
    "binding_laser.detuning_gamma",
    "binding_laser.direction",
    "binding_laser.intensity",
    "lattice.r_max",
    "lattice.statistics",
];

fn lookup<'a>(root: &'a toml::Value, path: &str) -> Option<&'a toml::Value> {
    path.split('.').try_fold(root, |v, key| v.get(key))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| RunError::Config(vec![e.to_string()]))?;
        let mut missing: Vec<String> =
            REQUIRED.iter().filter(|p| lookup(&value, p).is_none()).map(|p| format!("missing field `{p}`")).collect();
        let has = |p: &str| lookup(&value, p).is_some();
        if !has("lattice.well_depth_hz") && !(has("lattice.detuning_gamma") && has("lattice.saturation")) {
            missing.push("missing field `lattice.well_depth_hz` (or `lattice.detuning_gamma` with `lattice.saturation`)".into());
        }
        if !has("lattice.wavelength_nm") && !has("lattice.detuning_gamma") {
            missing.push("missing field `lattice.wavelength_nm` (or `lattice.detuning_gamma`)".into());
        }
        if !missing.is_empty() {
            return Err(RunError::Config(missing));
        }
        let config: RunConfig = value.try_into().map_err(|e: toml::de::Error| RunError::Config(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks value ranges; every violation is reported with its path.
    pub fn validate(&self) -> Result<(), RunError> {
        let mut errs = Vec::new();
        let mut positive = |path: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("`{path}` must be positive, got {v}"));
            }
        };
        let n = &self.numerics;
        positive("lattice.r_max", self.lattice.r_max);
        positive("binding_laser.cutoff_nm", self.binding_laser.cutoff_nm);
        positive("numerics.quadrature_tolerance", n.quadrature_tolerance);
        positive("numerics.tail_start", n.tail_start);
        positive("numerics.samples_per_unit", n.samples_per_unit);
        positive("numerics.derivative_step", n.derivative_step);
        positive("numerics.root_tolerance", n.root_tolerance);
        positive("numerics.bound_tolerance", n.bound_tolerance);
        positive("numerics.det_floor", n.det_floor);
        positive("numerics.flat_slope", n.flat_slope);
        positive("potential.kr_min", self.potential.kr_min);
        positive("feasibility.separation", self.feasibility.separation);
        positive("wavefunction.r_max", self.wavefunction.r_max);
        if let Some(v) = self.lattice.well_depth_hz {
            positive("lattice.well_depth_hz", v);
        }
        if let Some(v) = self.lattice.saturation {
            positive("lattice.saturation", v);
        }
        if let Some(v) = self.lattice.wavelength_nm {
            positive("lattice.wavelength_nm", v);
        }
        if let Some(v) = self.atom.dipole_moment {
            positive("atom.dipole_moment", v);
        }
        if !(n.eta0 >= 0.0 && n.eta0.is_finite()) {
            errs.push(format!("`numerics.eta0` must be non-negative, got {}", n.eta0));
        }
        if n.eta_levels == 0 {
            errs.push("`numerics.eta_levels` must be at least 1".into());
        }
        if n.tail_terms < 4 {
            errs.push("`numerics.tail_terms` must be at least 4".into());
        }
        let [blo, bhi] = n.band_window;
        if !(blo > -3.0 && bhi < 3.0 && bhi > blo) {
            errs.push("`numerics.band_window` must be an ascending interval inside (-3, 3)".into());
        }
        let [alo, ahi] = n.bound_window;
        if !(alo > 3.0 && ahi > alo) {
            errs.push("`numerics.bound_window` must be an ascending interval above 3".into());
        }
        let b = &self.binding_laser;
        if !(b.intensity >= 0.0 && b.intensity.is_finite()) {
            errs.push("`binding_laser.intensity` must be non-negative".into());
        }
        if b.intensity_grid.iter().any(|i| !(*i >= 0.0)) || b.intensity_grid.windows(2).any(|w| !(w[1] > w[0])) {
            errs.push("`binding_laser.intensity_grid` must be non-negative and strictly ascending".into());
        }
        if b.direction.iter().map(|x| x * x).sum::<f64>() == 0.0 || b.direction.iter().any(|x| !x.is_finite()) {
            errs.push("`binding_laser.direction` must be a finite non-zero vector".into());
        }
        if self.wavefunction.intensities.iter().any(|i| !(*i >= 0.0)) {
            errs.push("`wavefunction.intensities` must be non-negative".into());
        }
        if self.lattice.lambda0_hz.is_some() != self.lattice.lambda1_hz.is_some() {
            errs.push("`lattice.lambda0_hz` and `lattice.lambda1_hz` must be given together".into());
        }
        if let Some(l1) = self.lattice.lambda1_hz {
            if l1 == 0.0 || !l1.is_finite() {
                errs.push("`lattice.lambda1_hz` must be finite and non-zero".into());
            }
        }
        if !(self.potential.kr_max > self.potential.kr_min) || self.potential.points < 2 {
            errs.push("`potential` needs kr_max > kr_min and at least 2 points".into());
        }
        if self.potential.cos_theta.iter().any(|c| !(c.abs() <= 1.0)) {
            errs.push("`potential.cos_theta` entries must lie in [-1, 1]".into());
        }
        if !(self.dos.e_max > self.dos.e_min) || self.dos.points < 2 {
            errs.push("`dos` needs e_max > e_min and at least 2 points".into());
        }
        if !(self.wavefunction.fallback_energy.abs() < 3.0) {
            errs.push("`wavefunction.fallback_energy` must lie inside the band (-3, 3)".into());
        }
        if self.wavefunction.points < 2 {
            errs.push("`wavefunction.points` must be at least 2".into());
        }
        if !(self.feasibility.cos_theta.abs() <= 1.0) {
            errs.push("`feasibility.cos_theta` must lie in [-1, 1]".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(RunError::Config(errs))
        }
    }

    /// Unit binding-laser direction.
    pub fn direction(&self) -> [f64; 3] {
        let d = self.binding_laser.direction;
        let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        [d[0] / n, d[1] / n, d[2] / n]
    }

    /// The parameter set of the figures: Li-7, binding laser 300 linewidths
    /// blue of the transition along (1,1,1), lattice 1e4 linewidths blue with
    /// the tight-binding constants injected.
    pub fn figures() -> Self {
        let mut grid = vec![4.8e-4];
        grid.extend((1..=10).map(|k| 0.5 * f64::from(k)));
        RunConfig {
            atom: AtomConfig { species: "Li-7".into(), registry: None, dipole_moment: None },
            binding_laser: BindingLaserConfig {
                detuning_gamma: 300.0,
                direction: [1.0, 1.0, 1.0],
                intensity: 4.8e-4,
                intensity_grid: grid,
                saturation: None,
                cutoff_nm: default_cutoff_nm(),
            },
            lattice: LatticeConfig {
                detuning_gamma: Some(1e4),
                saturation: Some(7.6e-5),
                well_depth_hz: None,
                wavelength_nm: None,
                r_max: 2.0,
                statistics: StatisticsConfig::Boson,
                lambda0_hz: Some(3.408e6),
                lambda1_hz: Some(0.98),
                smear: false,
            },
            numerics: NumericsConfig::default(),
            output: OutputConfig::default(),
            potential: PotentialPlotConfig { intensity: Some(5.0), ..PotentialPlotConfig::default() },
            dos: DosConfig::default(),
            wavefunction: WavefunctionConfig::default(),
            feasibility: FeasibilityConfig::default(),
        }
    }
}
