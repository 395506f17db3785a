//! Pipelines behind the CLI subcommands. Each returns data that the CLI
//! writes out; the functions are usable on their own.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use quasimol_core::green::{self, ElementCache};
use quasimol_core::params::{self, FeasibilityOptions};
use quasimol_core::potential::{self, AngularGeometry};
use quasimol_core::spectral::{self, ResonanceRecord, SweepRow, SweepWindows};
use quasimol_core::units;
use quasimol_core::wavefunction::{self, PsiCurves, StateKind};

use crate::cache::SharedCache;
use crate::config::{EnergyPolicy, RunConfig};
use crate::error::RunError;
use crate::output::{sha256_hex, CsvTable, RunManifest};
use crate::scenario::Scenario;
use crate::validate;

/// CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Potential,
    Dos,
    ResonanceSweep,
    Wavefunction,
    Feasibility,
    ValidateGreen,
    ValidateAll,
    /// Potential, sweep, inset DOS and wavefunction in one go.
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Potential => "potential",
            Command::Dos => "dos",
            Command::ResonanceSweep => "resonance-sweep",
            Command::Wavefunction => "wavefunction",
            Command::Feasibility => "feasibility",
            Command::ValidateGreen => "validate-green",
            Command::ValidateAll => "validate-all",
            Command::Figures => "figures",
        }
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(config.to_toml_string().as_bytes())
}

/// Runs `command` and writes its outputs and manifest into `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<RunManifest, RunError> {
    let mut manifest = RunManifest::new(command.name(), config_hash(config));
    let scenario = manifest.time("setup", || Scenario::build(config))?;
    let cache = SharedCache::new();
    match command {
        Command::Potential => emit_potential(&scenario, &mut manifest, out)?,
        Command::Dos => emit_dos(&scenario, &cache, &mut manifest, out)?,
        Command::ResonanceSweep => emit_sweep(&scenario, &cache, &mut manifest, out)?,
        Command::Wavefunction => emit_wavefunction(&scenario, &cache, &mut manifest, out)?,
        Command::Feasibility => emit_feasibility(&scenario, &mut manifest, out)?,
        Command::ValidateGreen => {
            let report = manifest.time("validate-green", || validate::green_table(&scenario));
            let (table, check) = report?;
            manifest.emit(out, "validate-green.csv", &table.render(config.output.precision))?;
            if !check.pass {
                manifest.warnings.push(format!("{}: {}", check.name, check.detail));
            }
        }
        Command::ValidateAll => {
            let report = manifest.time("validate-all", || validate::validate_all(&scenario, &cache));
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            manifest.emit(out, "validation.json", &text)?;
            manifest.warnings.extend(report.checks.iter().filter(|c| !c.pass || c.warning).map(|c| format!("{}: {}", c.name, c.detail)));
        }
        Command::Figures => {
            emit_potential(&scenario, &mut manifest, out)?;
            emit_sweep(&scenario, &cache, &mut manifest, out)?;
            emit_dos(&scenario, &cache, &mut manifest, out)?;
            emit_wavefunction(&scenario, &cache, &mut manifest, out)?;
        }
    }
    manifest.write(out)?;
    Ok(manifest)
}

fn header(scenario: &Scenario, table: &mut CsvTable) {
    for (k, v) in scenario.describe() {
        table.comment(&k, v);
    }
}

// ---- potential --------------------------------------------------------------

/// `V(kr)` in Hz for each configured angle; points inside the cutoff are NaN.
pub fn potential_table(scenario: &Scenario) -> Result<(CsvTable, usize), RunError> {
    let p = &scenario.config.potential;
    let intensity = p.intensity.unwrap_or(scenario.config.binding_laser.intensity);
    let ctx = scenario.potential_context(intensity)?;
    let mut columns = vec!["kr".to_string(), "r_nm".to_string()];
    columns.extend(p.cos_theta.iter().map(|c| format!("v_hz_cos_{c:.6}")));
    let mut table = CsvTable { columns, ..CsvTable::default() };
    header(scenario, &mut table);
    table.comment("intensity_w_cm2", intensity);
    let mut masked = 0;
    let ratio = (p.kr_max / p.kr_min).ln();
    for i in 0..p.points {
        let kr = p.kr_min * (ratio * i as f64 / (p.points - 1) as f64).exp();
        let r = kr / ctx.k;
        let mut row = vec![kr, r * 1e7];
        for c in &p.cos_theta {
            match AngularGeometry::new(r, *c).and_then(|g| potential::v_ab(&ctx, &g)) {
                Ok(v) => row.push(units::erg_to_hz(v)),
                Err(quasimol_core::Error::BelowCutoff { .. }) => {
                    masked += 1;
                    row.push(f64::NAN);
                }
                Err(e) => return Err(e.into()),
            }
        }
        table.push(row);
    }
    Ok((table, masked))
}

fn emit_potential(scenario: &Scenario, manifest: &mut RunManifest, out: &Path) -> Result<(), RunError> {
    let (table, masked) = manifest.time("potential", || potential_table(scenario))?;
    if masked > 0 {
        manifest.warnings.push(format!("potential: {masked} values inside the short-range cutoff set to NaN"));
    }
    manifest.emit(out, "potential.csv", &table.render(scenario.config.output.precision))?;
    Ok(())
}

// ---- dos ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct DosCurve {
    pub intensity: f64,
    pub e_prime: Vec<f64>,
    pub rho0: Vec<f64>,
    pub delta_rho: Vec<f64>,
    /// Grid indices where `|D|` fell below the floor.
    pub masked: Vec<usize>,
}

/// `rho0` and `delta rho` on `grid` at `intensity`, in parallel over the grid.
pub fn dos_curve<C: ElementCache + Sync + ?Sized>(scenario: &Scenario, intensity: f64, grid: &[f64], cache: &C) -> Result<DosCurve, RunError> {
    let problem = scenario.spectral(intensity, cache)?;
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|e| {
            let r0 = green::rho0(&scenario.green, &scenario.basis, &[*e], scenario.regularization, cache)?[0];
            let dr = problem.delta_rho(&[*e])?.values[0];
            Ok((r0, dr))
        })
        .collect::<Result<_, quasimol_core::Error>>()?;
    let masked = points.iter().enumerate().filter(|(_, p)| p.1.is_nan()).map(|(i, _)| i).collect();
    Ok(DosCurve {
        intensity,
        e_prime: grid.to_vec(),
        rho0: points.iter().map(|p| p.0).collect(),
        delta_rho: points.iter().map(|p| p.1).collect(),
        masked,
    })
}

pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 }).collect()
}

fn emit_dos<C: ElementCache + Sync + ?Sized>(scenario: &Scenario, cache: &C, manifest: &mut RunManifest, out: &Path) -> Result<(), RunError> {
    let d = &scenario.config.dos;
    let intensity = scenario.config.binding_laser.intensity;
    let grid = linear_grid(d.e_min, d.e_max, d.points);
    let curve = manifest.time("dos", || dos_curve(scenario, intensity, &grid, cache))?;
    let mut table = CsvTable::new(&["e_prime", "rho0", "delta_rho"]);
    header(scenario, &mut table);
    table.comment("intensity_w_cm2", intensity);
    table.comment("normalization", "per unit E', integral of rho0 over the band is 1");
    for i in 0..grid.len() {
        table.push(vec![curve.e_prime[i], curve.rho0[i], curve.delta_rho[i]]);
    }
    if !curve.masked.is_empty() {
        manifest.failures.push(format!("dos: {} points masked where |D| is below the floor", curve.masked.len()));
    }
    manifest.emit(out, "dos.csv", &table.render(scenario.config.output.precision))?;
    Ok(())
}

// ---- resonance sweep ------------------------------------------------------

/// Sweep intensities: the configured grid, else the reference intensity.
pub fn sweep_grid(config: &RunConfig) -> Vec<f64> {
    if config.binding_laser.intensity_grid.is_empty() {
        vec![config.binding_laser.intensity]
    } else {
        config.binding_laser.intensity_grid.clone()
    }
}

/// Resonances and bound states per intensity, intensities in parallel.
pub fn sweep<C: ElementCache + Sync + ?Sized>(scenario: &Scenario, grid: &[f64], cache: &C) -> Result<Vec<SweepRow>, RunError> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|i| !(*i >= 0.0)) {
        return Err(RunError::Config(vec!["`binding_laser.intensity_grid` must be non-negative and strictly ascending".into()]));
    }
    grid.par_iter()
        .map(|i| {
            let problem = scenario.spectral(*i, cache)?;
            Ok(spectral::sweep_point(&problem, windows_for(scenario, &problem.u)))
        })
        .collect()
}

/// Configured windows with the bound-state scan stretched to
/// `3 + max|V/hopping| + 1`; no bound state lies beyond `3 + max|V/hopping|`.
pub fn windows_for(scenario: &Scenario, u: &[f64]) -> SweepWindows {
    let umax = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut w = scenario.windows;
    w.above.1 = w.above.1.max(4.0 + umax);
    w
}

pub fn sweep_table(scenario: &Scenario, rows: &[SweepRow]) -> CsvTable {
    let mut table = CsvTable::new(&["intensity_w_cm2", "e_r", "gamma_r_prime", "gamma_r_hz", "valid", "e_b"]);
    header(scenario, &mut table);
    table.comment("rows", "one per resonance (e_b = NaN) or bound state (e_r = NaN); NaN-only rows mark intensities without roots");
    let nan = f64::NAN;
    for row in rows {
        for r in &row.resonances {
            table.push(vec![row.intensity, r.e_r, r.gamma_prime, r.gamma_hz(), if r.valid { 1.0 } else { 0.0 }, nan]);
        }
        for b in &row.bound_states {
            table.push(vec![row.intensity, nan, nan, nan, nan, b.e_b]);
        }
        if row.resonances.is_empty() && row.bound_states.is_empty() {
            table.push(vec![row.intensity, nan, nan, nan, nan, nan]);
        }
    }
    table
}

fn emit_sweep<C: ElementCache + Sync + ?Sized>(scenario: &Scenario, cache: &C, manifest: &mut RunManifest, out: &Path) -> Result<(), RunError> {
    let grid = sweep_grid(&scenario.config);
    let rows = manifest.time("resonance-sweep", || sweep(scenario, &grid, cache))?;
    for row in &rows {
        manifest.failures.extend(row.failures.iter().map(|e| format!("I = {} W/cm2: {e}", row.intensity)));
    }
    let failed_points = rows.iter().filter(|r| !r.failures.is_empty() && r.resonances.is_empty() && r.bound_states.is_empty()).count();
    if failed_points == rows.len() && rows.iter().any(|r| !r.failures.is_empty()) {
        return Err(RunError::Failed(format!("resonance sweep failed at every intensity: {}", manifest.failures.join("; "))));
    }
    manifest.emit(out, "resonance-sweep.csv", &sweep_table(scenario, &rows).render(scenario.config.output.precision))?;
    Ok(())
}

// ---- wavefunction -------------------------------------------------------

/// Where the solve energy came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    Resonance,
    Fallback,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteWeight {
    pub sites: [[i32; 3]; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionSummary {
    pub intensity_w_cm2: f64,
    pub e_prime: f64,
    pub energy_source: EnergySource,
    pub incident_residual: f64,
    pub solve_residual: f64,
    pub norm: f64,
    /// `|C|^2` for the incident pair and its neighbour pairs.
    pub site_weights: Vec<SiteWeight>,
    /// `|C|^2` summed over symmetry-equivalent separations.
    pub class_weights: Vec<([u32; 3], f64)>,
    pub schmidt_spectrum: Vec<f64>,
    pub entropy: f64,
    pub adjusted_entropy: f64,
    pub schmidt_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionPoint {
    pub summary: WavefunctionSummary,
    pub curves: PsiCurves,
}

/// Narrowest valid resonance at `intensity`, if any.
pub fn narrowest_resonance<C: ElementCache + ?Sized>(scenario: &Scenario, intensity: f64, cache: &C) -> Result<Option<ResonanceRecord>, RunError> {
    if intensity == 0.0 {
        return Ok(None);
    }
    let problem = scenario.spectral(intensity, cache)?;
    let (lo, hi) = scenario.windows.band;
    let scan = problem.find_resonances(lo, hi)?;
    Ok(scan.records.into_iter().filter(|r| r.valid).min_by(|a, b| a.gamma_prime.total_cmp(&b.gamma_prime)))
}

/// Solves for the pair state at one intensity and analyses it.
pub fn wavefunction_point<C: ElementCache + ?Sized>(scenario: &Scenario, intensity: f64, cache: &C) -> Result<WavefunctionPoint, RunError> {
    let w = &scenario.config.wavefunction;
    let [a, b] = w.incident;
    let incident = wavefunction::unperturbed_state(&scenario.basis, StateKind::Localized { a, b })?;
    let (e_prime, source) = match w.energy {
        EnergyPolicy::Fixed(e) => (e, EnergySource::Fixed),
        EnergyPolicy::Resonance => match narrowest_resonance(scenario, intensity, cache)? {
            Some(r) => (r.e_r, EnergySource::Resonance),
            None => (w.fallback_energy, EnergySource::Fallback),
        },
    };
    let problem = scenario.spectral(intensity, cache)?;
    let state = wavefunction::solve_coefficients(&problem, &incident, e_prime)?;
    let r_grid = linear_grid(0.0, w.r_max, w.points);
    let curves = wavefunction::psi_squared(&state, &scenario.basis, scenario.sigma_lattice(), &r_grid, &w.directions)?;
    let report = wavefunction::entanglement_report(&state, &scenario.basis);
    let origin = a;
    let offsets = [[1, 1, 1], [1, 0, 0], [1, 1, 0], [2, 0, 0]];
    let site_weights = offsets
        .iter()
        .filter_map(|o| {
            let other = [origin[0] + o[0], origin[1] + o[1], origin[2] + o[2]];
            state.weight(&scenario.basis, *o).map(|weight| SiteWeight { sites: [origin, other], weight })
        })
        .collect();
    Ok(WavefunctionPoint {
        summary: WavefunctionSummary {
            intensity_w_cm2: intensity,
            e_prime,
            energy_source: source,
            incident_residual: incident.residual,
            solve_residual: state.residual,
            norm: state.norm_sqr(),
            site_weights,
            class_weights: wavefunction::class_weights(&state, &scenario.basis),
            schmidt_spectrum: report.schmidt_spectrum,
            entropy: report.entropy,
            adjusted_entropy: report.adjusted_entropy,
            schmidt_rank: report.schmidt_rank,
        },
        curves,
    })
}

pub fn psi_table(scenario: &Scenario, point: &WavefunctionPoint) -> CsvTable {
    let mut columns = vec!["r_over_a".to_string()];
    columns.extend(point.curves.directions.iter().map(|(d, _)| format!("psi2_a3_{}{}{}", d[0], d[1], d[2])));
    let mut table = CsvTable { columns, ..CsvTable::default() };
    header(scenario, &mut table);
    table.comment("intensity_w_cm2", point.summary.intensity_w_cm2);
    table.comment("e_prime", point.summary.e_prime);
    table.comment("norm", point.curves.norm);
    for (i, r) in point.curves.r.iter().enumerate() {
        let mut row = vec![*r];
        row.extend(point.curves.directions.iter().map(|(_, v)| v[i]));
        table.push(row);
    }
    table
}

fn emit_wavefunction<C: ElementCache + Sync + ?Sized>(scenario: &Scenario, cache: &C, manifest: &mut RunManifest, out: &Path) -> Result<(), RunError> {
    let intensities = scenario.config.wavefunction.intensities.clone();
    let results: Vec<Result<WavefunctionPoint, RunError>> =
        manifest.time("wavefunction", || intensities.par_iter().map(|i| wavefunction_point(scenario, *i, cache)).collect());
    let mut summaries = Vec::new();
    for (k, (i, res)) in intensities.iter().zip(results).enumerate() {
        match res {
            Ok(point) => {
                manifest.emit(out, &format!("wavefunction-{k}.csv"), &psi_table(scenario, &point).render(scenario.config.output.precision))?;
                summaries.push(point.summary);
            }
            Err(e) => manifest.failures.push(format!("wavefunction at I = {i} W/cm2: {e}")),
        }
    }
    if summaries.is_empty() && !intensities.is_empty() {
        return Err(RunError::Failed(format!("wavefunction failed at every intensity: {}", manifest.failures.join("; "))));
    }
    let text = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    manifest.emit(out, "wavefunction-summary.json", &text)?;
    Ok(())
}

// ---- feasibility --------------------------------------------------------

pub fn feasibility_table(scenario: &Scenario) -> Result<CsvTable, RunError> {
    let f = &scenario.config.feasibility;
    let options = FeasibilityOptions {
        threshold: f.threshold,
        saturation_override: scenario.config.binding_laser.saturation,
        cutoff: units::nm_to_cm(scenario.config.binding_laser.cutoff_nm),
    };
    let separation_m = f.separation * scenario.lattice.spacing * 1e-2;
    let mut table = CsvTable::new(&[
        "intensity_w_cm2",
        "v_ab_hz",
        "absorption_hz",
        "heating_hz",
        "absorption_ratio",
        "heating_ratio",
        "kr",
        "lamb_dicke",
        "saturation",
        "outside_near_zone",
        "observable",
    ]);
    header(scenario, &mut table);
    table.comment("separation_nm", separation_m * 1e9);
    table.comment("cos_theta", f.cos_theta);
    table.comment("threshold", f.threshold);
    let reference = scenario.config.binding_laser.intensity;
    let mut grid = vec![reference];
    grid.extend(scenario.config.binding_laser.intensity_grid.iter().filter(|i| **i != reference));
    for i in grid {
        let laser = scenario.binding.with_intensity(i);
        let r = params::feasibility_report(&scenario.atom, &scenario.lattice_laser, &laser, separation_m, f.cos_theta.acos(), &options)?;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        table.push(vec![
            i,
            units::erg_to_hz(r.v_ab),
            units::erg_to_hz(r.absorption_linewidth),
            units::erg_to_hz(r.heating_energy),
            r.absorption_ratio,
            r.heating_ratio,
            r.kr,
            r.lamb_dicke,
            r.saturation,
            flag(r.outside_near_zone),
            flag(r.observable),
        ]);
    }
    Ok(table)
}

fn emit_feasibility(scenario: &Scenario, manifest: &mut RunManifest, out: &Path) -> Result<(), RunError> {
    let table = manifest.time("feasibility", || feasibility_table(scenario))?;
    manifest.emit(out, "feasibility.csv", &table.render(scenario.config.output.precision))?;
    Ok(())
}
