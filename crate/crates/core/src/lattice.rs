//! Simple-cubic optical lattice: harmonic Wannier states, tight-binding band
//! parameters, the exchange-symmetrized pair basis and the pair potential.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::AtomSpecies;
use crate::potential::{self, AngularGeometry, PotentialContext};
use crate::quadrature;
use crate::units::{self, HBAR};

/// Lattice geometry and depth. Lengths in cm, energies in erg, mass in g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub spacing: f64,
    pub lattice_wavenumber: f64,
    pub well_depth: f64,
    pub mass: f64,
}

impl LatticeSpec {
    /// Checks `spacing = pi / k_L` to 1e-9 relative.
    pub fn new(spacing: f64, lattice_wavenumber: f64, well_depth: f64, mass: f64) -> Result<Self> {
        for (v, name) in [
            (spacing, "spacing"),
            (lattice_wavenumber, "lattice_wavenumber"),
            (well_depth, "well_depth"),
            (mass, "mass"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive and finite" });
            }
        }
        let expected = core::f64::consts::PI / lattice_wavenumber;
        if ((spacing - expected) / expected).abs() > 1e-9 {
            return Err(Error::InvalidParameter { name: "spacing", reason: "standing-wave lattice needs a = pi / k_L" });
        }
        Ok(Self { spacing, lattice_wavenumber, well_depth, mass })
    }

    /// Lattice with `a = pi / k_L`.
    pub fn from_wavenumber(lattice_wavenumber: f64, well_depth: f64, mass: f64) -> Result<Self> {
        Self::new(core::f64::consts::PI / lattice_wavenumber, lattice_wavenumber, well_depth, mass)
    }

    /// Lattice made by light detuned by `detuning` (rad/s) with saturation
    /// `saturation`; the depth is the light shift `hbar |delta| S / 2`.
    pub fn from_light_shift(atom: &AtomSpecies, detuning: f64, saturation: f64) -> Result<Self> {
        let omega = atom.omega_a() + detuning;
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter { name: "detuning", reason: "laser frequency must stay positive" });
        }
        let k_l = omega / units::C_LIGHT;
        Self::from_wavenumber(k_l, light_shift_depth(detuning, saturation), atom.mass_g())
    }

    /// Lattice recoil energy `hbar^2 k_L^2 / 2m`.
    pub fn recoil(&self) -> f64 {
        HBAR * HBAR * self.lattice_wavenumber * self.lattice_wavenumber / (2.0 * self.mass)
    }
}

/// `V_0 = hbar |delta| S / 2`.
pub fn light_shift_depth(detuning: f64, saturation: f64) -> f64 {
    0.5 * HBAR * detuning.abs() * saturation
}

/// Ground-state harmonic Wannier function of one well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicWannier {
    /// rad/s
    pub trap_frequency: f64,
    /// Amplitude width: `phi ~ exp(-x^2 / 2 sigma^2)`, cm.
    pub sigma: f64,
    pub band_index: u32,
}

impl HarmonicWannier {
    /// Normalized 1D amplitude.
    pub fn amplitude_1d(&self, x: f64) -> f64 {
        let s = self.sigma;
        (core::f64::consts::PI * s * s).powf(-0.25) * (-x * x / (2.0 * s * s)).exp()
    }

    /// Normalized 3D density.
    pub fn density(&self, r: [f64; 3]) -> f64 {
        r.iter().map(|x| self.amplitude_1d(*x).powi(2)).product()
    }

    /// Overlap of two wells a distance `d` (cm) apart.
    pub fn overlap(&self, d: f64) -> f64 {
        (-d * d / (4.0 * self.sigma * self.sigma)).exp()
    }
}

/// Harmonic expansion of one lattice well.
pub fn harmonic_wannier(spec: &LatticeSpec, n: u32) -> Result<HarmonicWannier> {
    let recoil = spec.recoil();
    if spec.well_depth <= recoil {
        return Err(Error::TightBindingInvalid { well_depth: spec.well_depth, recoil });
    }
    if n != 0 {
        return Err(Error::InvalidParameter { name: "band_index", reason: "only the lowest band is modelled" });
    }
    let omega = spec.lattice_wavenumber * (2.0 * spec.well_depth / spec.mass).sqrt();
    Ok(HarmonicWannier { trap_frequency: omega, sigma: (HBAR / (spec.mass * omega)).sqrt(), band_index: n })
}

/// On-site energy and nearest-neighbour hopping of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandParams {
    /// erg
    pub lambda0: f64,
    /// erg
    pub lambda1: f64,
    pub band_index: u32,
}

/// Band parameters from closed-form Gaussian integrals of the full
/// `V_0 sin^2` lattice Hamiltonian.
pub fn band_params(spec: &LatticeSpec, n: u32) -> Result<BandParams> {
    let w = harmonic_wannier(spec, n)?;
    let (s2, k2) = (w.sigma * w.sigma, spec.lattice_wavenumber * spec.lattice_wavenumber);
    let a = spec.spacing;
    let v0 = spec.well_depth;
    let damp = (-k2 * s2).exp();
    let kinetic = HBAR * HBAR / (4.0 * spec.mass * s2);
    let h00 = kinetic + 0.5 * v0 * (1.0 - damp);
    let s = w.overlap(a);
    let h01 = s * (kinetic * (1.0 - a * a / (2.0 * s2)) + 0.5 * v0 * (1.0 - (spec.lattice_wavenumber * a).cos() * damp));
    Ok(BandParams { lambda0: 3.0 * h00, lambda1: h01 + 2.0 * s * h00, band_index: n })
}

/// Same integrals by adaptive quadrature.
pub fn band_params_quadrature(spec: &LatticeSpec, n: u32) -> Result<BandParams> {
    band_integrals(spec, n, 0.0)
}

/// Quadrature for the lattice potential plus a constant `offset` (erg).
fn band_integrals(spec: &LatticeSpec, n: u32, offset: f64) -> Result<BandParams> {
    let w = harmonic_wannier(spec, n)?;
    let (sigma, a, k, v0, m) = (w.sigma, spec.spacing, spec.lattice_wavenumber, spec.well_depth, spec.mass);
    let phi = |x: f64| w.amplitude_1d(x);
    // H phi for the well at the origin; the operator is the same for every well.
    let h_phi = |x: f64, centre: f64| {
        let u = x - centre;
        let second = (u * u / sigma.powi(4) - 1.0 / (sigma * sigma)) * phi(u);
        -HBAR * HBAR / (2.0 * m) * second + (v0 * (k * x).sin().powi(2) + offset) * phi(u)
    };
    let (lo, hi) = (-12.0 * sigma, a + 12.0 * sigma);
    let tol = 1e-14;
    // h01 cancels to ~1e-6 of the energy scale, so a pure relative target is unreachable.
    let floor = 1e-16 * (HBAR * HBAR / (m * sigma * sigma) + v0.abs() + offset.abs());
    let h00 = quadrature::integrate(|x| phi(x) * h_phi(x, 0.0), lo, hi, floor, tol, 4000)?.value;
    let h01 = quadrature::integrate(|x| phi(x) * h_phi(x, a), lo, hi, floor, tol, 4000)?.value;
    let s = quadrature::integrate(|x| phi(x) * phi(x - a), lo, hi, 1e-18, tol, 4000)?.value;
    Ok(BandParams { lambda0: 3.0 * h00, lambda1: h01 + 2.0 * s * h00, band_index: n })
}

/// `lambda0 + 2 lambda1 (cos q_x a + cos q_y a + cos q_z a)`.
pub fn dispersion(params: &BandParams, qa: [f64; 3]) -> f64 {
    params.lambda0 + 2.0 * params.lambda1 * (qa[0].cos() + qa[1].cos() + qa[2].cos())
}

/// Relative-motion energies of a pair in bands `(n, m)` at zero total momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBand {
    /// `lambda_n(0) + lambda_m(0)`, erg.
    pub onsite: f64,
    /// `2 (lambda_n(1) + lambda_m(1))`, erg.
    pub hopping: f64,
}

impl PairBand {
    pub fn new(first: &BandParams, second: &BandParams) -> Result<Self> {
        let hopping = 2.0 * (first.lambda1 + second.lambda1);
        if hopping == 0.0 || !hopping.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda1", reason: "pair hopping must be finite and non-zero" });
        }
        Ok(Self { onsite: first.lambda0 + second.lambda0, hopping })
    }

    /// Both atoms in the same band.
    pub fn lowest(params: &BandParams) -> Result<Self> {
        Self::new(params, params)
    }

    /// `E' = (E - onsite) / hopping`.
    pub fn to_normalized(&self, energy: f64) -> f64 {
        (energy - self.onsite) / self.hopping
    }

    pub fn to_physical(&self, e_prime: f64) -> f64 {
        self.onsite + self.hopping * e_prime
    }
}

/// Exchange symmetry of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// +1 for bosons, -1 for fermions.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Boson => 1.0,
            Statistics::Fermion => -1.0,
        }
    }
}

/// Relative site vector in lattice units.
pub type Separation = [i32; 3];

/// Representative of `{d, -d}`: first non-zero component positive.
pub fn canonical(d: Separation) -> Separation {
    match d.iter().find(|c| **c != 0) {
        Some(c) if *c < 0 => [-d[0], -d[1], -d[2]],
        _ => d,
    }
}

pub fn norm2(d: Separation) -> i64 {
    d.iter().map(|c| i64::from(*c) * i64::from(*c)).sum()
}

/// Symmetrized pair states `|n m; mu nu>` labelled by their relative separation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBasis {
    pub band_pair: (u32, u32),
    pub separations: Vec<Separation>,
    pub statistics: Statistics,
    /// Cluster radius in lattice units.
    pub radius: f64,
    index: BTreeMap<Separation, usize>,
}

impl PairBasis {
    /// All canonical separations with `0 < |d| <= radius` (lattice units),
    /// ordered by `(|d|^2, d)`.
    pub fn with_radius(radius: f64, statistics: Statistics) -> Result<Self> {
        if !(radius >= 1.0) {
            return Err(Error::EmptyBasis { r_max: radius, spacing: 1.0 });
        }
        let reach = radius.floor() as i32;
        let limit = radius * radius * (1.0 + 1e-12);
        let mut seps = Vec::new();
        for x in -reach..=reach {
            for y in -reach..=reach {
                for z in -reach..=reach {
                    let d = [x, y, z];
                    let n2 = norm2(d);
                    if n2 > 0 && (n2 as f64) <= limit && canonical(d) == d {
                        seps.push(d);
                    }
                }
            }
        }
        seps.sort_by_key(|d| (norm2(*d), *d));
        Ok(Self::from_separations(seps, statistics, radius))
    }

    /// Basis over an explicit list (canonicalized, deduplicated, order kept).
    pub fn from_separations(list: Vec<Separation>, statistics: Statistics, radius: f64) -> Self {
        let mut index = BTreeMap::new();
        let mut separations = Vec::with_capacity(list.len());
        for d in list {
            let c = canonical(d);
            if norm2(c) == 0 || index.contains_key(&c) {
                continue;
            }
            index.insert(c, separations.len());
            separations.push(c);
        }
        Self { band_pair: (0, 0), separations, statistics, radius, index }
    }

    pub fn len(&self) -> usize {
        self.separations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.separations.is_empty()
    }

    /// Index of `d` or `-d`.
    pub fn index_of(&self, d: Separation) -> Option<usize> {
        self.index.get(&canonical(d)).copied()
    }

    /// Norm of the symmetrized state relative to a bare product, `1/sqrt(2)`
    /// for orthonormal Wannier functions on distinct sites.
    pub fn normalization(&self) -> f64 {
        core::f64::consts::FRAC_1_SQRT_2
    }

    /// Largest `|d_i| + |d'_i|` over all pairs, the highest Bessel order the
    /// Green matrix needs.
    pub fn max_order(&self) -> u32 {
        let m = self.separations.iter().flat_map(|d| d.iter().map(|c| c.unsigned_abs())).max().unwrap_or(0);
        2 * m
    }
}

/// Builds the pair basis for a cluster of radius `r_max` (cm).
pub fn build_pair_basis(spec: &LatticeSpec, r_max: f64, statistics: Statistics) -> Result<PairBasis> {
    if !(r_max >= spec.spacing * (1.0 - 1e-12)) {
        return Err(Error::EmptyBasis { r_max, spacing: spec.spacing });
    }
    PairBasis::with_radius((r_max / spec.spacing).max(1.0), statistics)
}

/// Potential on the pair basis, diagonal in the separation.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialMatrix {
    /// Point values `V(d a)`, erg.
    pub diagonal: Vec<f64>,
    /// Values averaged over the relative-coordinate Gaussian, erg.
    pub smeared: Option<Vec<f64>>,
}

impl PotentialMatrix {
    /// Diagonal to use in the spectral problem.
    pub fn values(&self) -> &[f64] {
        self.smeared.as_deref().unwrap_or(&self.diagonal)
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Zero potential of size `n`.
    pub fn zeros(n: usize) -> Self {
        Self { diagonal: alloc::vec![0.0; n], smeared: None }
    }

    /// Every value multiplied by `factor` (the potential is linear in intensity).
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        Self { diagonal: scale(&self.diagonal), smeared: self.smeared.as_ref().map(scale) }
    }
}

fn separation_cm(d: Separation, spacing: f64) -> [f64; 3] {
    [f64::from(d[0]) * spacing, f64::from(d[1]) * spacing, f64::from(d[2]) * spacing]
}

/// Potential at each basis separation (lattice spacing `spacing`, cm),
/// optionally also smeared over the Wannier densities of both atoms.
pub fn potential_matrix(
    basis: &PairBasis,
    ctx: &PotentialContext,
    spacing: f64,
    smear: Option<&HarmonicWannier>,
) -> Result<PotentialMatrix> {
    let diagonal = basis
        .separations
        .iter()
        .map(|d| {
            let g = AngularGeometry::from_vector(separation_cm(*d, spacing), ctx.laser_direction)?;
            potential::v_ab(ctx, &g)
        })
        .collect::<Result<Vec<_>>>()?;
    let smeared = match smear {
        Some(w) => Some(
            basis
                .separations
                .iter()
                .map(|d| smeared_potential(ctx, w, separation_cm(*d, spacing)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(PotentialMatrix { diagonal, smeared })
}

const SMEAR_NODES: usize = 12;

/// `V` averaged over an isotropic Gaussian of standard deviation `sigma`
/// per axis around `centre` (cm): the relative-coordinate distribution of
/// two atoms in harmonic Wannier states.
pub fn smeared_potential(ctx: &PotentialContext, wannier: &HarmonicWannier, centre: [f64; 3]) -> Result<f64> {
    ctx_check(ctx, centre)?;
    let rule = quadrature::gauss_hermite(SMEAR_NODES);
    let scale = core::f64::consts::SQRT_2 * wannier.sigma;
    let norm = core::f64::consts::PI.powf(-1.5);
    let pre = -ctx.scale();
    let mut total = 0.0;
    for (x, wx) in &rule {
        for (y, wy) in &rule {
            for (z, wz) in &rule {
                let r = [centre[0] + scale * x, centre[1] + scale * y, centre[2] + scale * z];
                let g = AngularGeometry::from_vector(r, ctx.laser_direction)?;
                total += wx * wy * wz * potential::f_theta(ctx.k * g.r, g.cos_theta)?;
            }
        }
    }
    Ok(pre * norm * total)
}

fn ctx_check(ctx: &PotentialContext, r: [f64; 3]) -> Result<()> {
    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if len < ctx.cutoff {
        return Err(Error::BelowCutoff { separation: len, cutoff: ctx.cutoff });
    }
    Ok(())
}

/// Matrix element of `V` between pair states that differ by moving one atom
/// from relative separation `d` to `d2`: the one-atom overlap times the
/// smeared potential at the midpoint.
pub fn off_diagonal_element(
    ctx: &PotentialContext,
    wannier: &HarmonicWannier,
    spacing: f64,
    d: Separation,
    d2: Separation,
) -> Result<f64> {
    let diff = [d[0] - d2[0], d[1] - d2[1], d[2] - d2[2]];
    let hop = (norm2(diff) as f64).sqrt() * spacing;
    let mid = [
        0.5 * f64::from(d[0] + d2[0]) * spacing,
        0.5 * f64::from(d[1] + d2[1]) * spacing,
        0.5 * f64::from(d[2] + d2[2]) * spacing,
    ];
    Ok(wannier.overlap(hop) * smeared_potential(ctx, wannier, mid)?)
}
