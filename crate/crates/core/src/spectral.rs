//! `D(E') = det(1 - G V)` on the pair basis: bound states above the band,
//! resonances inside it, and the interaction-induced density of states.
//!
//! `V` enters as `u = V / hopping` so `G V` is dimensionless. For a negative
//! pair hopping the retarded Green function at `E + i0` maps to
//! `E' - i0`, and the conjugate elements are used.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::{self, ElementCache, LatticeGreen, PairLayout, Regularization};
use crate::lattice::{PairBand, PairBasis, PotentialMatrix};

/// Root-finding and differencing settings in `E'` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSettings {
    /// Bracketing grid density per unit `E'`.
    pub samples_per_unit: f64,
    /// Central-difference step for `dD/dE'`.
    pub derivative_step: f64,
    /// Bracket width at which refinement stops.
    pub root_tolerance: f64,
    /// Largest `|Im D|` accepted at a bound state.
    pub bound_tolerance: f64,
    /// `|D|` below which `delta_rho` masks a point.
    pub det_floor: f64,
    /// `|d Re D / dE'|` below which a root is degenerate.
    pub flat_slope: f64,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self {
            samples_per_unit: 400.0,
            derivative_step: 1e-4,
            root_tolerance: 1e-8,
            bound_tolerance: 1e-8,
            det_floor: 1e-12,
            flat_slope: 1e-10,
        }
    }
}

impl SpectralSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("samples_per_unit", self.samples_per_unit),
            ("derivative_step", self.derivative_step),
            ("root_tolerance", self.root_tolerance),
            ("bound_tolerance", self.bound_tolerance),
            ("det_floor", self.det_floor),
            ("flat_slope", self.flat_slope),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        Ok(())
    }
}

/// Sampled determinant with a central-difference slope of `Re D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantCurve {
    pub e_prime: Vec<f64>,
    pub d: Vec<Complex64>,
    pub slope: Vec<f64>,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceRecord {
    pub e_r: f64,
    /// Width in `E'` units, `Gamma_r / |hopping|`; negative when invalid.
    pub gamma_prime: f64,
    /// Width, erg.
    pub gamma_r: f64,
    pub valid: bool,
    pub intensity: f64,
    pub im_d: f64,
    pub slope: f64,
    /// Relative change of the width when the difference step is halved.
    pub step_sensitivity: f64,
}

impl ResonanceRecord {
    pub fn gamma_hz(&self) -> f64 {
        crate::units::erg_to_hz(self.gamma_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateRecord {
    pub e_b: f64,
    pub intensity: f64,
    pub im_d: f64,
}

/// Resonance candidates of one scan, with rejected roots kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResonanceScan {
    pub records: Vec<ResonanceRecord>,
    pub rejected: Vec<Error>,
}

/// `delta rho` per unit `E'`; masked points hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRho {
    pub e_prime: Vec<f64>,
    pub values: Vec<f64>,
    pub masked: Vec<usize>,
}

/// Lorentzian `area/pi * (w/2) / ((E - centre)^2 + (w/2)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub centre: f64,
    pub width: f64,
    pub area: f64,
}

/// Determinant problem at one intensity.
pub struct Spectral<'a, C: ElementCache + ?Sized> {
    pub gf: &'a LatticeGreen,
    pub layout: PairLayout,
    /// `V / hopping` on the basis.
    pub u: Vec<f64>,
    pub band: PairBand,
    pub intensity: f64,
    pub regularization: Regularization,
    pub settings: SpectralSettings,
    cache: &'a C,
}

impl<'a, C: ElementCache + ?Sized> Clone for Spectral<'a, C> {
    fn clone(&self) -> Self {
        Self {
            gf: self.gf,
            layout: self.layout.clone(),
            u: self.u.clone(),
            band: self.band,
            intensity: self.intensity,
            regularization: self.regularization,
            settings: self.settings,
            cache: self.cache,
        }
    }
}

impl<'a, C: ElementCache + ?Sized> Spectral<'a, C> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gf: &'a LatticeGreen,
        basis: &PairBasis,
        potential: &PotentialMatrix,
        band: PairBand,
        intensity: f64,
        regularization: Regularization,
        settings: SpectralSettings,
        cache: &'a C,
    ) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::EmptyBasis { r_max: basis.radius, spacing: 1.0 });
        }
        if potential.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: potential.len() });
        }
        if basis.max_order() > gf.max_order() {
            return Err(Error::OrderTooLarge { order: basis.max_order(), max_order: gf.max_order() });
        }
        regularization.validate()?;
        settings.validate()?;
        let u = potential.values().iter().map(|v| v / band.hopping).collect();
        Ok(Self { gf, layout: PairLayout::new(basis), u, band, intensity, regularization, settings, cache })
    }

    /// Same problem with the potential scaled to `intensity` (V is linear in I).
    pub fn at_intensity(&self, intensity: f64) -> Result<Self> {
        if self.intensity == 0.0 && intensity != 0.0 {
            return Err(Error::InvalidParameter { name: "intensity", reason: "reference problem has zero intensity" });
        }
        let mut out = self.clone();
        let f = if intensity == 0.0 { 0.0 } else { intensity / self.intensity };
        out.u.iter_mut().for_each(|x| *x *= f);
        out.intensity = intensity;
        Ok(out)
    }

    pub fn with_regularization(&self, regularization: Regularization) -> Self {
        let mut out = self.clone();
        out.regularization = regularization;
        out
    }

    pub fn size(&self) -> usize {
        self.u.len()
    }

    fn retarded(&self) -> bool {
        self.band.hopping > 0.0
    }

    /// `G'(E')` in units of `1/hopping`, retarded in physical energy.
    pub fn green(&self, e_prime: f64) -> Result<DMatrix<Complex64>> {
        let reg = if e_prime.abs() >= 3.0 { self.bound_regularization() } else { self.regularization };
        let m = green::green_matrix(self.gf, &self.layout, e_prime, reg, self.cache)?;
        Ok(if self.retarded() { m.entries } else { m.entries.map(|z| z.conj()) })
    }

    /// Outside the band the boundary value is real and used directly.
    fn bound_regularization(&self) -> Regularization {
        match self.regularization {
            Regularization::Damped(eta) if eta > 0.0 => self.regularization,
            _ => Regularization::Exact,
        }
    }

    /// `1 - G V`.
    pub fn system_matrix(&self, e_prime: f64) -> Result<DMatrix<Complex64>> {
        let g = self.green(e_prime)?;
        let n = self.size();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta, 0.0) - g[(i, j)] * self.u[j]
        }))
    }

    pub fn determinant(&self, e_prime: f64) -> Result<Complex64> {
        if self.u.iter().all(|x| *x == 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.system_matrix(e_prime)?.lu().determinant())
    }

    /// Determinant at a physical energy (erg).
    pub fn determinant_physical(&self, energy: f64) -> Result<Complex64> {
        self.determinant(self.band.to_normalized(energy))
    }

    fn derivative(&self, e_prime: f64, h: f64) -> Result<Complex64> {
        let hi = self.determinant(e_prime + h)?;
        let lo = self.determinant(e_prime - h)?;
        Ok((hi - lo) / (2.0 * h))
    }

    pub fn determinant_curve(&self, grid: &[f64]) -> Result<DeterminantCurve> {
        let h = self.settings.derivative_step;
        let mut d = Vec::with_capacity(grid.len());
        let mut slope = Vec::with_capacity(grid.len());
        for e in grid {
            let v = self.determinant(*e)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonConvergence { panels: 0, estimate_re: v.re, estimate_im: v.im, error_bound: f64::INFINITY });
            }
            d.push(v);
            slope.push(self.derivative(*e, h)?.re);
        }
        Ok(DeterminantCurve { e_prime: grid.to_vec(), d, slope, step: h })
    }

    fn scan_grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = ((hi - lo) * self.settings.samples_per_unit).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        (0..=n).map(|i| if i == n { hi } else { lo + step * i as f64 }).collect()
    }

    /// Roots of the real function `f` on `grid`, refined to the tolerance.
    fn roots<F: FnMut(f64) -> Result<f64>>(&self, grid: &[f64], mut f: F) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut prev = (grid[0], f(grid[0])?);
        if prev.1 == 0.0 {
            out.push(prev.0);
        }
        for x in &grid[1..] {
            let cur = (*x, f(*x)?);
            if cur.1 == 0.0 {
                out.push(cur.0);
            } else if prev.1 != 0.0 && prev.1.signum() != cur.1.signum() {
                out.push(refine(&mut f, prev, cur, self.settings.root_tolerance)?);
            }
            prev = cur;
        }
        Ok(out)
    }

    /// Zeros of the real determinant on `[lo, hi]`, a sub-interval of `(3, inf)`.
    pub fn find_bound_states(&self, lo: f64, hi: f64) -> Result<Vec<BoundStateRecord>> {
        if !(lo > 3.0 && hi > lo) {
            return Err(Error::WrongBranch { e_prime: lo, reason: "bound-state scan must lie above E' = 3" });
        }
        if self.u.iter().all(|x| *x == 0.0) {
            return Ok(Vec::new());
        }
        let grid = self.scan_grid(lo, hi);
        let roots = self.roots(&grid, |e| Ok(self.determinant(e)?.re))?;
        let mut out = Vec::new();
        for e_b in roots {
            let im_d = self.determinant(e_b)?.im;
            if im_d.abs() < self.settings.bound_tolerance {
                out.push(BoundStateRecord { e_b, intensity: self.intensity, im_d });
            }
        }
        Ok(out)
    }

    /// Zeros of `Re D` on `[lo, hi]` inside the band, each with its width.
    pub fn find_resonances(&self, lo: f64, hi: f64) -> Result<ResonanceScan> {
        if !(lo > -3.0 && hi < 3.0 && hi > lo) {
            return Err(Error::WrongBranch { e_prime: lo, reason: "resonance scan must lie inside (-3, 3)" });
        }
        let mut scan = ResonanceScan::default();
        if self.u.iter().all(|x| *x == 0.0) {
            return Ok(scan);
        }
        let grid = self.scan_grid(lo, hi);
        for e_r in self.roots(&grid, |e| Ok(self.determinant(e)?.re))? {
            match self.width_at(e_r) {
                Ok(r) => scan.records.push(r),
                Err(e) => scan.rejected.push(e),
            }
        }
        Ok(scan)
    }

    /// Width from `2 Im D / (d Re D / dE)` at a root of `Re D`.
    pub fn width_at(&self, e_r: f64) -> Result<ResonanceRecord> {
        let h = self.settings.derivative_step;
        let d = self.determinant(e_r)?;
        let slope = self.derivative(e_r, h)?.re;
        if !(slope.abs() >= self.settings.flat_slope) {
            return Err(Error::DegenerateRoot { e_prime: e_r, slope });
        }
        let half = self.derivative(e_r, 0.5 * h)?.re;
        let gamma_r = self.band.hopping * 2.0 * d.im / slope;
        let gamma_half = self.band.hopping * 2.0 * d.im / half;
        let step_sensitivity = if gamma_r == 0.0 { 0.0 } else { ((gamma_r - gamma_half) / gamma_r).abs() };
        Ok(ResonanceRecord {
            e_r,
            gamma_prime: gamma_r / self.band.hopping.abs(),
            gamma_r,
            valid: gamma_r > 0.0,
            intensity: self.intensity,
            im_d: d.im,
            slope,
            step_sensitivity,
        })
    }

    /// `-(1/(pi N)) Im d ln D / dE'`, per unit `|E'|`.
    pub fn delta_rho(&self, grid: &[f64]) -> Result<DeltaRho> {
        let n = self.size() as f64;
        let sign = self.band.hopping.signum();
        let mut values = Vec::with_capacity(grid.len());
        let mut masked = Vec::new();
        for (i, e) in grid.iter().enumerate() {
            if self.u.iter().all(|x| *x == 0.0) {
                values.push(0.0);
                continue;
            }
            let d = self.determinant(*e)?;
            if d.norm() < self.settings.det_floor {
                values.push(f64::NAN);
                masked.push(i);
                continue;
            }
            let dd = self.derivative(*e, self.settings.derivative_step)?;
            values.push(-sign * (dd / d).im / (core::f64::consts::PI * n));
        }
        Ok(DeltaRho { e_prime: grid.to_vec(), values, masked })
    }
}

/// Alternating false-position and bisection on a sign-change bracket.
fn refine<F: FnMut(f64) -> Result<f64>>(f: &mut F, mut a: (f64, f64), mut b: (f64, f64), tol: f64) -> Result<f64> {
    let mut secant = true;
    for _ in 0..400 {
        if (b.0 - a.0).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a.0 + b.0);
        let mut x = if secant { b.0 - b.1 * (b.0 - a.0) / (b.1 - a.1) } else { mid };
        let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        if !(x > lo && x < hi) {
            x = mid;
        }
        secant = !secant;
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == a.1.signum() {
            a = (x, fx);
        } else {
            b = (x, fx);
        }
    }
    Ok(if a.1.abs() < b.1.abs() { a.0 } else { b.0 })
}

/// Fits a Lorentzian to the samples above half maximum around the peak,
/// via a weighted quadratic fit of `1/y`.
pub fn fit_lorentzian(e: &[f64], y: &[f64]) -> Option<LorentzianFit> {
    let (peak, ymax) = y
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))?;
    if !(ymax > 0.0) {
        return None;
    }
    let mut lo = peak;
    while lo > 0 && y[lo - 1].is_finite() && y[lo - 1] > 0.5 * ymax {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < y.len() && y[hi + 1].is_finite() && y[hi + 1] > 0.5 * ymax {
        hi += 1;
    }
    let rows = hi - lo + 1;
    if rows < 3 {
        return None;
    }
    let x0 = e[peak];
    // Abscissae scaled to the window so the columns stay comparable.
    let scale = (e[hi] - e[lo]).abs().max(f64::MIN_POSITIVE);
    let mut a = DMatrix::<f64>::zeros(rows, 3);
    let mut b = nalgebra::DVector::<f64>::zeros(rows);
    for (r, i) in (lo..=hi).enumerate() {
        // Relative weight y/ymax keeps residuals of 1/y comparable.
        let w = y[i] / ymax;
        let x = (e[i] - x0) / scale;
        a[(r, 0)] = w;
        a[(r, 1)] = w * x;
        a[(r, 2)] = w * x * x;
        b[r] = w * ymax / y[i];
    }
    let p = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let (p0, p1, p2) = (p[0] / ymax, p[1] / (ymax * scale), p[2] / (ymax * scale * scale));
    if !(p2 > 0.0) {
        return None;
    }
    let shift = -p1 / (2.0 * p2);
    let m = p0 - p1 * p1 / (4.0 * p2);
    if !(m > 0.0) {
        return None;
    }
    let width = 2.0 * (m / p2).sqrt();
    Some(LorentzianFit { centre: x0 + shift, width, area: 2.0 * core::f64::consts::PI / (p2 * width) })
}

/// One intensity of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub intensity: f64,
    pub resonances: Vec<ResonanceRecord>,
    pub bound_states: Vec<BoundStateRecord>,
    pub failures: Vec<Error>,
}

/// Scan windows of a sweep, `E'` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepWindows {
    pub band: (f64, f64),
    pub above: (f64, f64),
}

impl Default for SweepWindows {
    fn default() -> Self {
        Self { band: (-2.999, 2.999), above: (3.0005, 10.0) }
    }
}

/// Resonances and bound states at each intensity of an ascending grid.
/// Failures are recorded per point and the sweep continues.
pub fn intensity_sweep<C: ElementCache + ?Sized>(base: &Spectral<'_, C>, grid: &[f64], windows: SweepWindows) -> Result<Vec<SweepRow>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|i| !(*i >= 0.0)) {
        return Err(Error::InvalidParameter { name: "intensity_grid", reason: "must be non-negative and ascending" });
    }
    let mut rows = Vec::with_capacity(grid.len());
    for intensity in grid {
        rows.push(sweep_point(&base.at_intensity(*intensity)?, windows));
    }
    Ok(rows)
}

/// One sweep row; errors become row failures.
pub fn sweep_point<C: ElementCache + ?Sized>(problem: &Spectral<'_, C>, windows: SweepWindows) -> SweepRow {
    let mut row = SweepRow { intensity: problem.intensity, resonances: vec![], bound_states: vec![], failures: vec![] };
    match problem.find_resonances(windows.band.0, windows.band.1) {
        Ok(scan) => {
            row.resonances = scan.records;
            row.failures.extend(scan.rejected);
        }
        Err(e) => row.failures.push(e),
    }
    match problem.find_bound_states(windows.above.0, windows.above.1) {
        Ok(b) => row.bound_states = b,
        Err(e) => row.failures.push(e),
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{GreenConfig, LocalCache, NoCache};
    use crate::lattice::Statistics;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn setup(radius: f64) -> (LatticeGreen, PairBasis) {
        let basis = PairBasis::with_radius(radius, Statistics::Boson).unwrap();
        (LatticeGreen::new(basis.max_order(), GreenConfig::default()).unwrap(), basis)
    }

    fn band() -> PairBand {
        PairBand { onsite: 0.0, hopping: 1.0 }
    }

    fn uniform(basis: &PairBasis, v: f64) -> PotentialMatrix {
        PotentialMatrix { diagonal: vec![v; basis.len()], smeared: None }
    }

    #[test]
    fn zero_potential_is_trivial() {
        let (gf, basis) = setup(2.0);
        let s = Spectral::new(&gf, &basis, &PotentialMatrix::zeros(basis.len()), band(), 0.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        assert_eq!(s.determinant(1.1).unwrap(), Complex64::new(1.0, 0.0));
        assert!(s.find_resonances(-2.9, 2.9).unwrap().records.is_empty());
        assert!(s.find_bound_states(3.1, 8.0).unwrap().is_empty());
        assert!(s.delta_rho(&[0.0, 1.0]).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn weak_potential_first_order() {
        // 1 - D - Tr(G u) is second order in u.
        let (gf, basis) = setup(2.0);
        let pot = PotentialMatrix { diagonal: (0..basis.len()).map(|i| 1e-2 * (1.0 + i as f64 * 0.1)).collect(), smeared: None };
        let s = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let weak = s.at_intensity(1e-3).unwrap();
        for e in [-1.5, 0.4, 4.0] {
            let residual = |p: &Spectral<'_, NoCache>| {
                let g = p.green(e).unwrap();
                let trace: Complex64 = (0..basis.len()).map(|i| g[(i, i)] * p.u[i]).sum();
                (p.determinant(e).unwrap() - (Complex64::new(1.0, 0.0) - trace)).norm()
            };
            let ratio = residual(&s) / residual(&weak);
            assert!((ratio / 1e6 - 1.0).abs() < 0.1, "E'={e}: ratio {ratio}");
        }
    }

    #[test]
    fn single_site_bound_state() {
        // One separation: D = 1 - u (g(0) + g(2d)) is real above the band.
        let basis = PairBasis::from_separations(vec![[1, 0, 0]], Statistics::Boson, 1.0);
        let gf = LatticeGreen::new(2, GreenConfig::default()).unwrap();
        let pot = uniform(&basis, 4.0);
        let s = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let found = s.find_bound_states(3.0001, 12.0).unwrap();
        assert_eq!(found.len(), 1);
        let e = found[0].e_b;
        let g = gf.elements(&[[0, 0, 0], [0, 0, 2]], e, Regularization::Exact).unwrap();
        assert!((1.0 - 4.0 * (g[0].re + g[1].re)).abs() < 1e-7);
        // Stronger binding sits higher.
        let deeper = s.at_intensity(2.0).unwrap().find_bound_states(3.0001, 12.0).unwrap();
        assert!(deeper[0].e_b > e);
    }

    #[test]
    fn delta_rho_is_phase_derivative() {
        // -(1/(pi N)) d arg D / dE' from unwrapped phases on a coarser step.
        let (gf, basis) = setup(1.0);
        let pot = uniform(&basis, 2.0);
        let cache = LocalCache::new();
        let s = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &cache).unwrap();
        let n = basis.len() as f64;
        for e in [-1.2, 0.6, 2.43] {
            let h = 1e-3;
            let (lo, hi) = (s.determinant(e - h).unwrap(), s.determinant(e + h).unwrap());
            let dphase = (hi / lo).arg() / (2.0 * h);
            let want = -dphase / (core::f64::consts::PI * n);
            let got = s.delta_rho(&[e]).unwrap().values[0];
            assert!((got - want).abs() < 1e-4 * (1.0 + want.abs()), "E'={e}: {got} vs {want}");
        }
    }

    #[test]
    fn resonance_records_are_consistent() {
        let (gf, basis) = setup(1.0);
        let s = Spectral::new(&gf, &basis, &uniform(&basis, 2.0), band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let scan = s.find_resonances(-2.99, 2.99).unwrap();
        assert!(!scan.records.is_empty());
        for r in &scan.records {
            assert!(s.determinant(r.e_r).unwrap().re.abs() < 1e-6);
            assert_eq!(r.valid, r.gamma_r > 0.0);
            assert!(r.step_sensitivity < 1e-3);
        }
        assert!(scan.records.iter().any(|r| r.valid) && scan.records.iter().any(|r| !r.valid));
    }

    #[test]
    fn resonance_sign_flip_and_mirror() {
        // D(-E', -u) = conj D(E', u)
        let (gf, basis) = setup(2.0);
        let pot = PotentialMatrix { diagonal: (0..basis.len()).map(|i| 0.3 + 0.05 * i as f64).collect(), smeared: None };
        let neg = pot.scaled(-1.0);
        let a = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let b = Spectral::new(&gf, &basis, &neg, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        for e in [0.3, 1.7, 2.8, 3.5] {
            let x = a.determinant(e).unwrap();
            let y = b.determinant(-e).unwrap();
            assert!((x.conj() - y).norm() < 1e-10, "{x} {y}");
        }
    }

    #[test]
    fn negative_hopping_gives_retarded_determinant() {
        let (gf, basis) = setup(1.0);
        let pot = uniform(&basis, 0.2);
        let up = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        let down = Spectral::new(&gf, &basis, &pot.scaled(-1.0), PairBand { onsite: 0.0, hopping: -1.0 }, 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        // Same u, opposite hopping: the physical problem is the conjugate one.
        assert_relative_eq!(up.determinant(0.7).unwrap().conj().im, down.determinant(0.7).unwrap().im, epsilon = 1e-14);
    }

    #[test]
    fn lorentzian_fit_recovers_parameters() {
        let (c, w, a) = (0.3, 0.02, 2.0);
        let e: Vec<f64> = (0..201).map(|i| c - 0.1 + 0.001 * i as f64).collect();
        let y: Vec<f64> = e.iter().map(|x| a / core::f64::consts::PI * (w / 2.0) / ((x - c).powi(2) + w * w / 4.0)).collect();
        let fit = fit_lorentzian(&e, &y).unwrap();
        assert_relative_eq!(fit.centre, c, epsilon = 1e-10);
        assert_relative_eq!(fit.width, w, max_relative = 1e-9);
        assert_relative_eq!(fit.area, a, max_relative = 1e-9);
    }

    #[test]
    fn lorentzian_fit_is_scale_free() {
        // Narrow, tall peak far from the origin.
        let (c, w, a) = (4.8e-3, 1e-9, 3e-2);
        let e: Vec<f64> = (0..201).map(|i| c - 5e-9 + 5e-11 * i as f64).collect();
        let y: Vec<f64> = e.iter().map(|x| a / core::f64::consts::PI * (w / 2.0) / ((x - c).powi(2) + w * w / 4.0)).collect();
        let fit = fit_lorentzian(&e, &y).unwrap();
        assert_relative_eq!(fit.width, w, max_relative = 1e-6);
        assert_relative_eq!(fit.area, a, max_relative = 1e-6);
    }

    #[test]
    fn scan_window_errors() {
        let (gf, basis) = setup(1.0);
        let s = Spectral::new(&gf, &basis, &uniform(&basis, 1.0), band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
        assert!(matches!(s.find_bound_states(2.0, 5.0), Err(Error::WrongBranch { .. })));
        assert!(matches!(s.find_resonances(-3.5, 0.0), Err(Error::WrongBranch { .. })));
        assert!(intensity_sweep(&s, &[2.0, 1.0], SweepWindows::default()).is_err());
    }

    #[test]
    fn refine_converges() {
        let mut f = |x: f64| Ok::<f64, Error>(x * x * x - 2.0);
        let r = refine(&mut f, (1.0, -1.0), (2.0, 6.0), 1e-12).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn determinant_invariant_under_reordering(seed in 0u64..1000, e in -2.9f64..5.0) {
            let (gf, basis) = setup(1.5);
            let n = basis.len();
            let vals: Vec<f64> = (0..n).map(|i| 0.2 * (((seed + 7 * i as u64) % 11) as f64 - 5.0) / 5.0).collect();
            let pot = PotentialMatrix { diagonal: vals.clone(), smeared: None };
            let mut order: Vec<usize> = (0..n).collect();
            order.rotate_left((seed as usize) % n);
            order.reverse();
            let seps: Vec<_> = order.iter().map(|i| basis.separations[*i]).collect();
            let shuffled = PairBasis::from_separations(seps, Statistics::Boson, basis.radius);
            let pot2 = PotentialMatrix { diagonal: order.iter().map(|i| vals[*i]).collect(), smeared: None };
            let a = Spectral::new(&gf, &basis, &pot, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
            let b = Spectral::new(&gf, &shuffled, &pot2, band(), 1.0, Regularization::Exact, SpectralSettings::default(), &NoCache).unwrap();
            let (x, y) = (a.determinant(e).unwrap(), b.determinant(e).unwrap());
            prop_assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
        }
    }
}
