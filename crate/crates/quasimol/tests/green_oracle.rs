//! Bessel-integral lattice Green function against the direct Brillouin-zone
//! quadrature at random separations and energies.

use proptest::prelude::*;

use quasimol::oracle::{self, OracleConfig};
use quasimol_core::green::{GreenConfig, LatticeGreen, Regularization};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn engine_matches_zone_integral(
        l in prop::array::uniform3(-3i32..=3),
        e in prop_oneof![-2.98f64..2.98, 3.02f64..8.0, -8.0f64..-3.02],
    ) {
        let gf = LatticeGreen::new(9, GreenConfig::default()).unwrap();
        let a = gf.lattice_g(l, e, Regularization::Exact).unwrap();
        let b = oracle::lattice_green(l, e, 0.0, &OracleConfig::default());
        prop_assert!((a - b).norm() <= 1e-5 * b.norm().max(1e-6), "l = {l:?}, E' = {e}: {a} vs {b}");
    }

    #[test]
    fn damped_ladder_matches_damped_oracle(l in prop::array::uniform3(0i32..=2), e in -2.5f64..2.5) {
        let gf = LatticeGreen::new(6, GreenConfig::default()).unwrap();
        let eta = 0.05;
        let a = gf.lattice_g(l, e, Regularization::Damped(eta)).unwrap();
        let b = oracle::lattice_green(l, e, eta, &OracleConfig::default());
        prop_assert!((a - b).norm() <= 1e-6 * b.norm().max(1e-6), "l = {l:?}, E' = {e}: {a} vs {b}");
    }
}

#[test]
fn band_edge_is_the_watson_integral() {
    let gf = LatticeGreen::new(0, GreenConfig::default()).unwrap();
    let g = gf.lattice_g([0, 0, 0], 3.0, Regularization::Exact).unwrap();
    assert!((g.re - oracle::watson_integral()).abs() < 1e-6);
    assert!((oracle::watson_integral() - 0.505_462_019_717_326_1).abs() < 1e-15);
}
