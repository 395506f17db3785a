//! Laser-induced dipole-dipole potential between two ground-state atoms.
//!
//! All lengths are in cm, the polarizability in cm³ and the intensity in
//! erg s⁻¹ cm⁻², so the returned energies are in erg. Negative values are
//! attractive.

#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::units::C_LIGHT;

/// Default short-range cutoff, 100 nm.
pub const DEFAULT_CUTOFF_CM: f64 = 1.0e-5;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Everything about the binding laser that the potential depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialContext {
    /// Binding-laser wavenumber, cm⁻¹.
    pub k: f64,
    /// Dynamic polarizability, cm³.
    pub alpha: f64,
    /// Intensity, erg s⁻¹ cm⁻².
    pub intensity: f64,
    /// Unit propagation direction.
    pub laser_direction: [f64; 3],
    /// Separations below this (cm) are rejected.
    pub cutoff: f64,
}

impl PotentialContext {
    pub fn new(k: f64, alpha: f64, intensity: f64, laser_direction: [f64; 3], cutoff: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter { name: "k", reason: "must be positive and finite" });
        }
        if !(cutoff > 0.0) {
            return Err(Error::InvalidParameter { name: "cutoff", reason: "must be positive" });
        }
        if !(intensity >= 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidParameter { name: "intensity", reason: "must be non-negative" });
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter { name: "alpha", reason: "must be finite" });
        }
        let n = norm(laser_direction);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter { name: "laser_direction", reason: "must be a unit vector" });
        }
        Ok(Self { k, alpha, intensity, laser_direction, cutoff })
    }

    /// Same context at another intensity.
    pub fn with_intensity(&self, intensity: f64) -> Self {
        Self { intensity, ..*self }
    }

    /// Energy scale `2 pi k^3 alpha^2 I / c` multiplying `F_theta`.
    pub fn scale(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.k.powi(3) * self.alpha * self.alpha * self.intensity / C_LIGHT
    }

    /// Near-zone prefactor `2 pi alpha^2 I / c`.
    fn near_scale(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.alpha * self.alpha * self.intensity / C_LIGHT
    }

    fn check(&self, r: f64) -> Result<()> {
        if !(r >= self.cutoff) {
            return Err(Error::BelowCutoff { separation: r, cutoff: self.cutoff });
        }
        Ok(())
    }
}

/// Separation and orientation of the interatomic axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularGeometry {
    /// Separation, cm.
    pub r: f64,
    /// Cosine of the angle to the laser direction.
    pub cos_theta: f64,
}

impl AngularGeometry {
    pub fn new(r: f64, cos_theta: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter { name: "r", reason: "must be positive" });
        }
        if !(cos_theta.abs() <= 1.0) {
            return Err(Error::InvalidParameter { name: "cos_theta", reason: "must lie in [-1, 1]" });
        }
        Ok(Self { r, cos_theta })
    }

    /// Geometry of the separation vector `r` (cm) relative to `direction`.
    pub fn from_vector(r: [f64; 3], direction: [f64; 3]) -> Result<Self> {
        let len = norm(r);
        if !(len > 0.0) {
            return Err(Error::InvalidParameter { name: "r", reason: "zero separation vector" });
        }
        let dot = r[0] * direction[0] + r[1] * direction[1] + r[2] * direction[2];
        Self::new(len, (dot / (len * norm(direction))).clamp(-1.0, 1.0))
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Angular-radial factor of the induced dipole-dipole interaction.
pub fn f_theta(kr: f64, cos_theta: f64) -> Result<f64> {
    if kr == 0.0 {
        return Err(Error::SingularSeparation { kr });
    }
    if !(kr > 0.0) {
        return Err(Error::InvalidParameter { name: "kr", reason: "must be positive" });
    }
    let c2 = cos_theta * cos_theta;
    let (s, c) = kr.sin_cos();
    let bracket = (c + kr * s) * (1.0 - 3.0 * c2) / kr.powi(3) + (1.0 + c2) * c / kr;
    Ok((kr * cos_theta).cos() * bracket)
}

/// `V_AB = -(2 pi k^3 alpha^2 I / c) F_theta(kr)`.
pub fn v_ab(ctx: &PotentialContext, geom: &AngularGeometry) -> Result<f64> {
    ctx.check(geom.r)?;
    Ok(-ctx.scale() * f_theta(ctx.k * geom.r, geom.cos_theta)?)
}

/// Closed form for atoms on a lattice axis with the laser along (1,1,1).
pub fn v_axis_111(ctx: &PotentialContext, r: f64) -> Result<f64> {
    ctx.check(r)?;
    let kr = ctx.k * r;
    let pre = 8.0 * core::f64::consts::PI * ctx.alpha * ctx.alpha * ctx.intensity * ctx.k * ctx.k / (3.0 * C_LIGHT);
    Ok(-pre * (kr / SQRT3).cos() * kr.cos() / r)
}

/// Closed form for atoms along a face diagonal with the laser along (1,1,1).
///
/// The leading bracket term carries `k^2/r`; without it the three terms do
/// not share units.
pub fn v_axis_110(ctx: &PotentialContext, r: f64) -> Result<f64> {
    ctx.check(r)?;
    let k = ctx.k;
    let kr = k * r;
    let (s, c) = kr.sin_cos();
    let bracket = -(5.0 / 3.0) * k * k * c / r + k * s / (r * r) + c / r.powi(3);
    Ok(ctx.near_scale() * (core::f64::consts::SQRT_2 * kr / SQRT3).cos() * bracket)
}

/// Leading small-`kr` form, valid for `kr < 0.1`.
pub fn near_zone_v(ctx: &PotentialContext, r: f64, cos_theta: f64) -> Result<f64> {
    ctx.check(r)?;
    let kr = ctx.k * r;
    if !(kr < 0.1) {
        return Err(Error::OutsideNearZone { kr });
    }
    let c2 = cos_theta * cos_theta;
    Ok(-ctx.near_scale() * ((1.0 - 3.0 * c2) / r.powi(3) + (1.0 + c2) * ctx.k * ctx.k / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec::Vec;

    const DIR111: [f64; 3] = [1.0 / SQRT3, 1.0 / SQRT3, 1.0 / SQRT3];

    fn ctx(k: f64) -> PotentialContext {
        PotentialContext::new(k, -3.0e-18, 4.8e3, DIR111, 1e-9).unwrap()
    }

    #[test]
    fn magic_angle_kills_the_static_term() {
        let c = 1.0 / SQRT3;
        for kr in [0.01, 0.3, 2.0, 17.0] {
            let f = f_theta(kr, c).unwrap();
            let expected = (kr * c).cos() * (4.0 / 3.0) * kr.cos() / kr;
            // 1 - 3c^2 is only zero up to rounding of c, amplified by 1/kr^2.
            assert_relative_eq!(f, expected, max_relative = 1e-14 / (kr * kr) + 1e-14);
        }
    }

    #[test]
    fn small_kr_limits() {
        let kr: f64 = 1e-4;
        assert_relative_eq!(f_theta(kr, 0.0).unwrap() * kr.powi(3), 1.0, max_relative = 1e-7);
        assert_relative_eq!(f_theta(kr, 1.0).unwrap() * kr.powi(3), -2.0, max_relative = 1e-7);
    }

    #[test]
    fn reference_values_at_nearest_neighbour() {
        let pi = core::f64::consts::PI;
        assert_relative_eq!(f_theta(pi, 0.0).unwrap(), -0.350_561_420_616_990_16, max_relative = 1e-10);
        assert_relative_eq!(f_theta(pi, (2.0f64 / 3.0).sqrt()).unwrap(), 0.417_735_076_397_951_99, max_relative = 1e-10);
        assert_relative_eq!(f_theta(pi, 1.0 / SQRT3).unwrap(), 0.102_121_669_293_847_72, max_relative = 1e-10);
        assert_relative_eq!(f_theta(pi, 1.0).unwrap(), 0.572_116_703_501_182_36, max_relative = 1e-10);
    }

    #[test]
    fn zero_kr_is_singular() {
        assert!(matches!(f_theta(0.0, 0.3), Err(Error::SingularSeparation { .. })));
    }

    #[test]
    fn cutoff_is_enforced() {
        let c = ctx(1.0e5);
        let g = AngularGeometry::new(1e-10, 0.0).unwrap();
        assert!(matches!(v_ab(&c, &g), Err(Error::BelowCutoff { .. })));
        assert!(v_axis_111(&c, 1e-10).is_err());
        assert!(v_axis_110(&c, 1e-10).is_err());
    }

    #[test]
    fn zero_intensity_gives_zero() {
        let c = ctx(1.0e5).with_intensity(0.0);
        let g = AngularGeometry::new(3e-5, 0.2).unwrap();
        assert_eq!(v_ab(&c, &g).unwrap(), 0.0);
        assert_eq!(v_axis_110(&c, 3e-5).unwrap(), 0.0);
    }

    #[test]
    fn near_zone_signs() {
        // k much smaller than the lattice wavenumber: r = pi/k_L is near zone.
        let k_l = 9.4e4;
        let c = ctx(k_l / 200.0);
        let r = core::f64::consts::PI / k_l;
        let axis = v_ab(&c, &AngularGeometry::new(r, 1.0 / SQRT3).unwrap()).unwrap();
        let face = v_ab(&c, &AngularGeometry::new(r, (2.0f64 / 3.0).sqrt()).unwrap()).unwrap();
        assert!(axis < 0.0);
        assert!(face > 0.0);
    }

    #[test]
    fn gravity_like_limit() {
        let c = ctx(1.0e3);
        let r = 1e-6;
        let lead = -8.0 * core::f64::consts::PI * c.alpha * c.alpha * c.intensity * c.k * c.k / (3.0 * C_LIGHT * r);
        assert_relative_eq!(v_axis_111(&c, r).unwrap(), lead, max_relative = 1e-5);
        assert_relative_eq!(near_zone_v(&c, r, 1.0 / SQRT3).unwrap(), lead, max_relative = 1e-12);
        let rep = 2.0 * core::f64::consts::PI * c.alpha * c.alpha * c.intensity / (C_LIGHT * r.powi(3));
        assert_relative_eq!(v_axis_110(&c, r).unwrap(), rep, max_relative = 1e-5);
    }

    #[test]
    fn first_zero_of_axis_form() {
        let c = ctx(1.0e5);
        let r = SQRT3 * core::f64::consts::FRAC_PI_2 / c.k;
        let v = v_axis_111(&c, r).unwrap();
        let scale = v_axis_111(&c, 0.5 * r).unwrap().abs();
        assert!(v.abs() < 1e-14 * scale);
    }

    #[test]
    fn near_zone_agrees_for_small_kr() {
        let c = ctx(1.0e3);
        for kr in [0.01, 0.03, 0.049] {
            let r = kr / c.k;
            let full = v_ab(&c, &AngularGeometry::new(r, 0.0).unwrap()).unwrap();
            let near = near_zone_v(&c, r, 0.0).unwrap();
            assert!(((near - full) / full).abs() < 0.01);
        }
        assert!(matches!(near_zone_v(&c, 0.1 / c.k, 0.0), Err(Error::OutsideNearZone { .. })));
    }

    #[test]
    fn far_zone_envelope_decays_as_inverse_kr() {
        // Local maxima of |F| at cos = 0 over kr in [200, 2000], log-log slope.
        let mut peaks: Vec<(f64, f64)> = Vec::new();
        let mut prev = (0.0, 0.0, 0.0);
        let mut kr = 200.0;
        while kr < 2000.0 {
            let f = f_theta(kr, 0.0).unwrap().abs();
            if prev.1 > prev.0 && prev.1 >= f {
                peaks.push((prev.2, prev.1));
            }
            prev = (prev.1, f, kr);
            kr += 0.01;
        }
        let n = peaks.len() as f64;
        let (sx, sy, sxx, sxy) = peaks.iter().fold((0.0, 0.0, 0.0, 0.0), |acc, (x, y)| {
            let (lx, ly) = (x.ln(), y.ln());
            (acc.0 + lx, acc.1 + ly, acc.2 + lx * lx, acc.3 + lx * ly)
        });
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn geometry_from_vector() {
        let g = AngularGeometry::from_vector([1.0, 0.0, 0.0], DIR111).unwrap();
        assert_relative_eq!(g.cos_theta, 1.0 / SQRT3, max_relative = 1e-15);
        assert!(AngularGeometry::from_vector([0.0; 3], DIR111).is_err());
    }

    #[test]
    fn context_validation() {
        assert!(PotentialContext::new(1.0, 1.0, 1.0, [1.0, 1.0, 0.0], 1.0).is_err());
        assert!(PotentialContext::new(0.0, 1.0, 1.0, [1.0, 0.0, 0.0], 1.0).is_err());
        assert!(PotentialContext::new(1.0, 1.0, -1.0, [1.0, 0.0, 0.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn f_theta_even_in_cos(kr in 1e-3f64..100.0, c in 0.0f64..1.0) {
            prop_assert_eq!(f_theta(kr, c).unwrap(), f_theta(kr, -c).unwrap());
        }

        #[test]
        fn v_linear_in_intensity(lr in -6.5f64..-3.0, c in -1.0f64..1.0) {
            let ctx1 = ctx(9.4e4);
            let g = AngularGeometry::new(10f64.powf(lr), c).unwrap();
            let v1 = v_ab(&ctx1, &g).unwrap();
            let v2 = v_ab(&ctx1.with_intensity(2.0 * ctx1.intensity), &g).unwrap();
            prop_assert!((v2 - 2.0 * v1).abs() <= 1e-15 * v1.abs());
        }

        #[test]
        fn v_independent_of_alpha_sign(lr in -6.5f64..-3.0, c in -1.0f64..1.0) {
            let blue = ctx(9.4e4);
            let red = PotentialContext { alpha: -blue.alpha, ..blue };
            let g = AngularGeometry::new(10f64.powf(lr), c).unwrap();
            prop_assert_eq!(v_ab(&blue, &g).unwrap(), v_ab(&red, &g).unwrap());
        }

        #[test]
        fn closed_forms_match_general(kr in 0.5f64..10.0) {
            let c = ctx(9.4e4);
            let r = kr / c.k;
            let a = v_axis_111(&c, r).unwrap();
            let b = v_ab(&c, &AngularGeometry::new(r, 1.0 / SQRT3).unwrap()).unwrap();
            let floor = 1e-3 * c.scale() / kr;
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(floor));
            let a = v_axis_110(&c, r).unwrap();
            let b = v_ab(&c, &AngularGeometry::new(r, (2.0f64 / 3.0).sqrt()).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(floor));
        }
    }
}
