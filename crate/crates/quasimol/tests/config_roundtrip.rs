//! Configuration and CSV serialization round trips.

use proptest::prelude::*;

use quasimol::config::EnergyPolicy;
use quasimol::output::CsvTable;
use quasimol::RunConfig;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e12f64..1e12, 1e-300f64..1e-200, Just(0.0), Just(-0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_survives_toml(
        detuning in 1.0f64..1e4,
        grid in prop::collection::vec(1e-6f64..10.0, 0..6),
        r_max in 1.0f64..4.0,
        eta0 in prop_oneof![Just(0.0), 1e-4f64..1e-1],
        levels in 1usize..6,
        fixed in prop::option::of(-2.9f64..2.9),
        precision in prop::option::of(1usize..17),
    ) {
        let mut grid = grid;
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut c = RunConfig::figures();
        c.binding_laser.detuning_gamma = detuning;
        c.binding_laser.intensity_grid = grid;
        c.lattice.r_max = r_max;
        c.numerics.eta0 = eta0;
        c.numerics.eta_levels = levels;
        c.wavefunction.energy = fixed.map_or(EnergyPolicy::Resonance, EnergyPolicy::Fixed);
        c.output.precision = precision;
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn csv_values_round_trip_bit_exactly(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 1..20)) {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        t.comment("note", "x = 1");
        for r in &rows {
            t.push(r.clone());
        }
        let back = CsvTable::parse(&t.render(None)).unwrap();
        prop_assert_eq!(back.columns, t.columns);
        for (x, y) in back.rows.iter().flatten().zip(rows.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn example_config_matches_preset() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/figures.toml")).unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::figures());
}
