//! Scattered pair state `C = (1 - G V)^-1 C0` on the pair basis, its
//! relative-coordinate density and a Schmidt analysis over the two atoms'
//! sites.
//!
//! Each symmetrized basis state is placed on concrete sites anchored at the
//! centre of mass of a reference pair: for separation `d`, atom A sits at
//! `floor((X2 - d) / 2)` per axis (`X2` the doubled reference centre) and atom
//! B at `A + d`. Wannier functions are Gaussians of amplitude width `sigma`
//! in lattice units.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::green::ElementCache;
use crate::lattice::{canonical, norm2, PairBasis, Separation};
use crate::spectral::Spectral;

pub type Site = [i32; 3];

/// Preparation of the incoming pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind {
    /// Atoms on sites `a` and `b`.
    Localized { a: Site, b: Site },
    /// Lowest eigenvector of the free pair Hamiltonian on the cluster.
    BandBottom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidentState {
    pub coefficients: DVector<Complex64>,
    pub label: String,
    /// Reference pair for site anchoring.
    pub anchor: (Site, Site),
    /// Rayleigh quotient of the free Hamiltonian, `E'` units.
    pub energy: f64,
    /// `|(H0 - energy) C0|`, zero for an eigenvector.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub coefficients: DVector<Complex64>,
    pub e_prime: f64,
    pub intensity: f64,
    pub anchor: (Site, Site),
    /// `|C - C0 - G V C| / |C|`.
    pub residual: f64,
}

impl PairState {
    pub fn weight(&self, basis: &PairBasis, d: Separation) -> Option<f64> {
        basis.index_of(d).map(|i| self.coefficients[i].norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.norm_squared()
    }
}

/// Free relative-motion Hamiltonian on the symmetrized basis, `E'` units:
/// `h(d' - d) ± h(d' + d)` with `h = 1/2` between nearest neighbours.
pub fn free_hamiltonian(basis: &PairBasis) -> DMatrix<f64> {
    let sign = basis.statistics.sign();
    let n = basis.len();
    let hop = |v: [i32; 3]| if norm2(v) == 1 { 0.5 } else { 0.0 };
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (basis.separations[i], basis.separations[j]);
        hop([a[0] - b[0], a[1] - b[1], a[2] - b[2]]) + sign * hop([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    })
}

pub fn unperturbed_state(basis: &PairBasis, kind: StateKind) -> Result<IncidentState> {
    let h = free_hamiltonian(basis);
    let n = basis.len();
    if n == 0 {
        return Err(Error::EmptyBasis { r_max: basis.radius, spacing: 1.0 });
    }
    let (coefficients, label, anchor) = match kind {
        StateKind::Localized { a, b } => {
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let idx = basis.index_of(d).ok_or(Error::NotInBasis(d))?;
            let mut c = DVector::from_element(n, Complex64::new(0.0, 0.0));
            c[idx] = Complex64::new(1.0, 0.0);
            (c, alloc::format!("localized {a:?} {b:?}"), (a, b))
        }
        StateKind::BandBottom => {
            let eig = nalgebra::SymmetricEigen::new(h.clone());
            let (k, _) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("non-empty");
            let mut v = eig.eigenvectors.column(k).clone_owned();
            // Fix the overall sign so the largest entry is positive.
            let big = v.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap_or(1.0);
            v *= big.signum();
            let c = v.map(|x| Complex64::new(x, 0.0));
            (c, String::from("band bottom"), ([0, 0, 0], [1, 0, 0]))
        }
    };
    let re = coefficients.map(|z| z.re);
    let hc = &h * &re;
    let energy = re.dot(&hc) / re.dot(&re);
    let residual = (hc - re * energy).norm();
    Ok(IncidentState { coefficients, label, anchor, energy, residual })
}

/// Solves `(1 - G V) C = C0` at `e_prime`.
pub fn solve_coefficients<C: ElementCache + ?Sized>(
    problem: &Spectral<'_, C>,
    incident: &IncidentState,
    e_prime: f64,
) -> Result<PairState> {
    let n = problem.size();
    if incident.coefficients.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: incident.coefficients.len() });
    }
    let a = problem.system_matrix(e_prime)?;
    let lu = a.clone().lu();
    let det = lu.determinant();
    let inverse = lu.try_inverse();
    let condition = match &inverse {
        Some(inv) => one_norm(&a) * one_norm(inv),
        None => f64::INFINITY,
    };
    if det.norm() < problem.settings.det_floor || !condition.is_finite() {
        return Err(Error::IllConditioned { e_prime, det_abs: det.norm(), condition });
    }
    let c = inverse.expect("checked") * &incident.coefficients;
    let residual = (&a * &c - &incident.coefficients).norm() / c.norm();
    Ok(PairState { coefficients: c, e_prime, intensity: problem.intensity, anchor: incident.anchor, residual })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Sites of atoms A and B for separation `d`, anchored at the centre of the
/// reference pair.
pub fn anchored_sites(anchor: (Site, Site), d: Separation) -> (Site, Site) {
    let x2 = [anchor.0[0] + anchor.1[0], anchor.0[1] + anchor.1[1], anchor.0[2] + anchor.1[2]];
    let a = [(x2[0] - d[0]).div_euclid(2), (x2[1] - d[1]).div_euclid(2), (x2[2] - d[2]).div_euclid(2)];
    (a, [a[0] + d[0], a[1] + d[1], a[2] + d[2]])
}

/// One Gaussian pair product: amplitude, centre of mass and relative offset.
#[derive(Debug, Clone, Copy)]
struct Component {
    amp: Complex64,
    com: [f64; 3],
    rel: [f64; 3],
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn components(coeffs: &DVector<Complex64>, basis: &PairBasis, anchor: (Site, Site), sigma: f64) -> Vec<Component> {
    let s = basis.statistics.sign();
    let mut out = Vec::with_capacity(2 * coeffs.len());
    for (c, d) in coeffs.iter().zip(&basis.separations) {
        let (a, b) = anchored_sites(anchor, *d);
        let exch = (-(norm2(*d) as f64) / (2.0 * sigma * sigma)).exp();
        let norm = (2.0 * (1.0 + s * exch)).sqrt().recip();
        let com = [0.5 * f64::from(a[0] + b[0]), 0.5 * f64::from(a[1] + b[1]), 0.5 * f64::from(a[2] + b[2])];
        let rel = [f64::from(a[0] - b[0]), f64::from(a[1] - b[1]), f64::from(a[2] - b[2])];
        out.push(Component { amp: *c * norm, com, rel });
        out.push(Component { amp: *c * (norm * s), com, rel: [-rel[0], -rel[1], -rel[2]] });
    }
    out
}

fn com_overlaps(parts: &[Component], sigma: f64) -> DMatrix<f64> {
    let n = parts.len();
    DMatrix::from_fn(n, n, |i, j| (-dist2(parts[i].com, parts[j].com) / (2.0 * sigma * sigma)).exp())
}

/// Relative-coordinate density `|Psi(r)|^2 a^3` along lattice directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiCurves {
    pub r: Vec<f64>,
    pub directions: Vec<([i32; 3], Vec<f64>)>,
    /// `∫ |Psi(r)|^2 d^3r`.
    pub norm: f64,
}

pub const DEFAULT_DIRECTIONS: [[i32; 3]; 5] = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 1, 1]];

/// `∫ d^3R |Psi(R, r)|^2` at relative position `r` (lattice units), centre
/// of mass integrated in closed form.
pub fn pair_density(coeffs: &DVector<Complex64>, basis: &PairBasis, anchor: (Site, Site), sigma: f64, r: [f64; 3]) -> f64 {
    let parts = components(coeffs, basis, anchor, sigma);
    let o = com_overlaps(&parts, sigma);
    density_at(&parts, &o, sigma, r)
}

fn density_at(parts: &[Component], o: &DMatrix<f64>, sigma: f64, r: [f64; 3]) -> f64 {
    let pre = (2.0 * core::f64::consts::PI * sigma * sigma).powf(-1.5);
    let v: Vec<Complex64> = parts.iter().map(|p| p.amp * (-dist2(r, p.rel) / (4.0 * sigma * sigma)).exp()).collect();
    let mut total = 0.0;
    for i in 0..parts.len() {
        for j in 0..parts.len() {
            total += (v[i].conj() * v[j]).re * o[(i, j)];
        }
    }
    pre * total
}

/// `∫ |Psi(r)|^2 d^3r` in closed form.
pub fn pair_norm(coeffs: &DVector<Complex64>, basis: &PairBasis, anchor: (Site, Site), sigma: f64) -> f64 {
    let parts = components(coeffs, basis, anchor, sigma);
    let o = com_overlaps(&parts, sigma);
    let mut total = 0.0;
    for i in 0..parts.len() {
        for j in 0..parts.len() {
            let rel = (-dist2(parts[i].rel, parts[j].rel) / (8.0 * sigma * sigma)).exp();
            total += (parts[i].amp.conj() * parts[j].amp).re * o[(i, j)] * rel;
        }
    }
    total
}

pub fn psi_squared(state: &PairState, basis: &PairBasis, sigma: f64, r_grid: &[f64], directions: &[[i32; 3]]) -> Result<PsiCurves> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter { name: "sigma", reason: "Wannier width must be positive" });
    }
    if state.coefficients.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: state.coefficients.len() });
    }
    let parts = components(&state.coefficients, basis, state.anchor, sigma);
    let o = com_overlaps(&parts, sigma);
    let mut curves = Vec::with_capacity(directions.len());
    for dir in directions {
        let len = (norm2(*dir) as f64).sqrt();
        if len == 0.0 {
            return Err(Error::InvalidParameter { name: "direction", reason: "must be non-zero" });
        }
        let unit = [f64::from(dir[0]) / len, f64::from(dir[1]) / len, f64::from(dir[2]) / len];
        let values = r_grid.iter().map(|r| density_at(&parts, &o, sigma, [r * unit[0], r * unit[1], r * unit[2]])).collect();
        curves.push((*dir, values));
    }
    Ok(PsiCurves { r: r_grid.to_vec(), directions: curves, norm: pair_norm(&state.coefficients, basis, state.anchor, sigma) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    /// Singular values of the normalized site array, descending.
    pub schmidt_spectrum: Vec<f64>,
    pub entropy: f64,
    /// `entropy - ln 2`, removing the exchange-symmetrization floor of two
    /// atoms on distinct sites.
    pub adjusted_entropy: f64,
    pub schmidt_rank: usize,
}

pub const SCHMIDT_THRESHOLD: f64 = 1e-8;

/// Schmidt analysis of an amplitude array (rows: atom A sites, columns: atom B sites).
pub fn schmidt(array: &DMatrix<Complex64>) -> EntanglementReport {
    let norm = array.norm();
    let scaled = if norm > 0.0 { array / Complex64::new(norm, 0.0) } else { array.clone() };
    let mut spectrum: Vec<f64> = scaled.singular_values().iter().copied().collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let entropy = spectrum
        .iter()
        .map(|s| s * s)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    let schmidt_rank = spectrum.iter().filter(|s| **s > SCHMIDT_THRESHOLD).count().max(1);
    EntanglementReport { schmidt_spectrum: spectrum, entropy, adjusted_entropy: entropy - core::f64::consts::LN_2, schmidt_rank }
}

/// Site array of a pair state: each symmetrized separation contributes
/// `C/sqrt(2)` at `(A, B)` and `±C/sqrt(2)` at `(B, A)`.
pub fn site_array(coeffs: &DVector<Complex64>, basis: &PairBasis, anchor: (Site, Site)) -> (Vec<Site>, DMatrix<Complex64>) {
    let s = basis.statistics.sign();
    let mut sites: Vec<Site> = Vec::new();
    let mut entries = Vec::with_capacity(coeffs.len());
    let slot = |x: Site, sites: &mut Vec<Site>| match sites.iter().position(|y| *y == x) {
        Some(p) => p,
        None => {
            sites.push(x);
            sites.len() - 1
        }
    };
    for (c, d) in coeffs.iter().zip(&basis.separations) {
        let (a, b) = anchored_sites(anchor, canonical(*d));
        let (ia, ib) = (slot(a, &mut sites), slot(b, &mut sites));
        entries.push((ia, ib, *c));
    }
    let n = sites.len();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let w = core::f64::consts::FRAC_1_SQRT_2;
    for (ia, ib, c) in entries {
        m[(ia, ib)] += c * w;
        m[(ib, ia)] += c * (w * s);
    }
    (sites, m)
}

pub fn entanglement_report(state: &PairState, basis: &PairBasis) -> EntanglementReport {
    let (_, m) = site_array(&state.coefficients, basis, state.anchor);
    schmidt(&m)
}

/// Coefficients of a state summed over symmetry-equivalent separations
/// (same sorted absolute components), keyed by that class.
pub fn class_weights(state: &PairState, basis: &PairBasis) -> Vec<([u32; 3], f64)> {
    let mut out: Vec<([u32; 3], f64)> = Vec::new();
    for (c, d) in state.coefficients.iter().zip(&basis.separations) {
        let key = crate::green::sorted_triple(*d);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, w)) => *w += c.norm_sqr(),
            None => out.push((key, c.norm_sqr())),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::green::{GreenConfig, LatticeGreen, NoCache, Regularization};
    use crate::lattice::{PairBand, PotentialMatrix, Statistics};
    use crate::spectral::SpectralSettings;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const LOCAL: StateKind = StateKind::Localized { a: [0, 0, 0], b: [1, 1, 1] };

    fn problem<'a>(gf: &'a LatticeGreen, basis: &PairBasis, v: f64) -> Spectral<'a, NoCache> {
        let pot = PotentialMatrix { diagonal: basis.separations.iter().map(|d| v / (norm2(*d) as f64).powf(1.5)).collect(), smeared: None };
        Spectral::new(gf, basis, &pot, PairBand { onsite: 0.0, hopping: 1.0 }, if v == 0.0 { 0.0 } else { 1.0 }, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap()
    }

    fn setup() -> (LatticeGreen, PairBasis) {
        let basis = PairBasis::with_radius(2.0, Statistics::Boson).unwrap();
        (LatticeGreen::new(basis.max_order(), GreenConfig::default()).unwrap(), basis)
    }

    #[test]
    fn localized_state_has_one_entry() {
        let (_, basis) = setup();
        let s = unperturbed_state(&basis, LOCAL).unwrap();
        assert_eq!(s.coefficients.iter().filter(|c| c.norm() > 0.0).count(), 1);
        assert!(s.residual > 0.1, "a localized pair is not stationary");
        assert!(matches!(unperturbed_state(&basis, StateKind::Localized { a: [0; 3], b: [5, 0, 0] }), Err(Error::NotInBasis(_))));
    }

    #[test]
    fn band_bottom_approaches_edge() {
        let mut last = 0.0;
        for r in [1.5, 2.5, 3.5, 4.5] {
            let basis = PairBasis::with_radius(r, Statistics::Boson).unwrap();
            let s = unperturbed_state(&basis, StateKind::BandBottom).unwrap();
            assert!(s.residual < 1e-10);
            assert!(s.energy > -3.0 && s.energy < last, "R={r}: {}", s.energy);
            // Dense diagonalization oracle on the same cluster.
            let h = free_hamiltonian(&basis);
            let min = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            assert_relative_eq!(s.energy, min, epsilon = 1e-12);
            last = s.energy;
        }
        assert!(last < -2.0);
    }

    #[test]
    fn zero_intensity_returns_incident() {
        let (gf, basis) = setup();
        let inc = unperturbed_state(&basis, LOCAL).unwrap();
        let st = solve_coefficients(&problem(&gf, &basis, 0.0), &inc, 1.2).unwrap();
        assert_eq!(st.coefficients, inc.coefficients);
    }

    #[test]
    fn scattering_spreads_weight() {
        let (gf, basis) = setup();
        let inc = unperturbed_state(&basis, LOCAL).unwrap();
        let st = solve_coefficients(&problem(&gf, &basis, 0.3), &inc, 1.2).unwrap();
        assert!(st.residual < 1e-10);
        for d in [[1, 0, 0], [1, 1, 0], [2, 0, 0]] {
            assert!(st.weight(&basis, d).unwrap() > 0.0);
        }
        let base = entanglement_report(&PairState { coefficients: inc.coefficients.clone(), e_prime: 1.2, intensity: 0.0, anchor: inc.anchor, residual: 0.0 }, &basis);
        assert!(entanglement_report(&st, &basis).entropy > base.entropy);
    }

    #[test]
    fn ill_conditioned_near_bound_state() {
        let basis = PairBasis::from_separations(vec![[1, 0, 0]], Statistics::Boson, 1.0);
        let gf = LatticeGreen::new(2, GreenConfig::default()).unwrap();
        let pot = PotentialMatrix { diagonal: vec![4.0], smeared: None };
        let p = Spectral::new(&gf, &basis, &pot, PairBand { onsite: 0.0, hopping: 1.0 }, 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let e_b = p.find_bound_states(3.0001, 12.0).unwrap()[0].e_b;
        let inc = unperturbed_state(&basis, StateKind::Localized { a: [0; 3], b: [1, 0, 0] }).unwrap();
        let mut strict = p.clone();
        strict.settings.det_floor = 1e-6;
        assert!(matches!(solve_coefficients(&strict, &inc, e_b), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn localized_pair_schmidt() {
        let (_, basis) = setup();
        let inc = unperturbed_state(&basis, LOCAL).unwrap();
        let st = PairState { coefficients: inc.coefficients, e_prime: 0.0, intensity: 0.0, anchor: inc.anchor, residual: 0.0 };
        let r = entanglement_report(&st, &basis);
        assert_eq!(r.schmidt_rank, 2);
        assert_relative_eq!(r.entropy, core::f64::consts::LN_2, epsilon = 1e-12);
        assert!(r.adjusted_entropy.abs() < 1e-12);
    }

    #[test]
    fn product_state_is_separable() {
        let f = [0.3, -0.5, 0.8];
        let g = [1.0, 0.2, -0.4, 0.1];
        let m = DMatrix::from_fn(3, 4, |i, j| Complex64::new(f[i] * g[j], 0.5 * f[i] * g[j]));
        let r = schmidt(&m);
        assert_eq!(r.schmidt_rank, 1);
        assert!(r.entropy.abs() < 1e-12);
    }

    #[test]
    fn localized_density_peaks_at_separation() {
        let (_, basis) = setup();
        let inc = unperturbed_state(&basis, LOCAL).unwrap();
        let st = PairState { coefficients: inc.coefficients, e_prime: 0.0, intensity: 0.0, anchor: inc.anchor, residual: 0.0 };
        let r: Vec<f64> = (0..=300).map(|i| 0.01 * i as f64).collect();
        let curves = psi_squared(&st, &basis, 0.15, &r, &DEFAULT_DIRECTIONS).unwrap();
        let diag = &curves.directions[4].1;
        let peak = diag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((r[peak] - 3f64.sqrt()).abs() < 0.011);
        assert!(curves.directions[0].1.iter().all(|v| *v < 1e-6 * diag[peak]));
        assert_relative_eq!(curves.norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn density_integrates_to_norm() {
        // 3D Gauss-Hermite quadrature around each relative centre would be
        // exact; use a dense product grid instead as an independent check.
        let basis = PairBasis::with_radius(1.5, Statistics::Boson).unwrap();
        let coeffs = DVector::from_fn(basis.len(), |i, _| Complex64::new(1.0 / (1.0 + i as f64), 0.3 * i as f64));
        let sigma = 0.3;
        let anchor = ([0, 0, 0], [1, 1, 1]);
        let want = pair_norm(&coeffs, &basis, anchor, sigma);
        let parts = components(&coeffs, &basis, anchor, sigma);
        let o = com_overlaps(&parts, sigma);
        let (lo, hi, n) = (-3.5, 3.5, 90);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let r = [lo + h * i as f64, lo + h * j as f64, lo + h * k as f64];
                    total += density_at(&parts, &o, sigma, r);
                }
            }
        }
        total *= h * h * h;
        assert!((total - want).abs() < 1e-6 * want, "{total} vs {want}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn residual_small_and_continuous_in_intensity(v in 0.05f64..0.6, e in -2.5f64..2.5) {
            let (gf, basis) = setup();
            let inc = unperturbed_state(&basis, LOCAL).unwrap();
            let p = problem(&gf, &basis, v);
            let a = solve_coefficients(&p, &inc, e).unwrap();
            prop_assert!(a.residual < 1e-10);
            let b = solve_coefficients(&p.at_intensity(1.0 + 1e-6).unwrap(), &inc, e).unwrap();
            prop_assert!((&a.coefficients - &b.coefficients).norm() < 1e-3 * a.coefficients.norm());
        }
    }
}
