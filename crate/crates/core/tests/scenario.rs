use tvws_core::scenario::*;
use tvws_core::{Config, GeoPoint};

#[test]
fn single_tower_has_one_station() {
    let s = generate_synthetic(SyntheticKind::SingleTower, &SyntheticParams::default(), 1).unwrap();
    assert_eq!(s.registry().len(), 1);
    assert!(validate(s.parts()).is_empty());
}

#[test]
fn same_seed_same_scenario() {
    let p = field_params(5, vec![20, 21]);
    let a = generate_synthetic(SyntheticKind::UniformField, &p, 9).unwrap();
    let b = generate_synthetic(SyntheticKind::UniformField, &p, 9).unwrap();
    assert_eq!(a, b);
    let c = generate_synthetic(SyntheticKind::UniformField, &p, 10).unwrap();
    assert_ne!(a, c);
}

#[test]
fn ring_places_towers_on_the_circle() {
    let p = SyntheticParams::default();
    let s = generate_synthetic(SyntheticKind::Ring, &p, 0).unwrap();
    assert_eq!(s.registry().len(), p.n_towers);
    for tx in s.registry() {
        let d = tvws_core::geodata::distance_km(p.center, tx.location);
        assert!((d - p.ring_radius_km).abs() < 1e-6);
    }
}

#[test]
fn tower_outside_terrain_is_one_violation() {
    let s = generate_synthetic(SyntheticKind::SingleTower, &SyntheticParams::default(), 1).unwrap();
    let mut parts = s.into_parts();
    parts.registry[0].location = GeoPoint { lat_deg: 10.0, lon_deg: 10.0 };
    assert_eq!(validate(&parts).len(), 1);
}

#[test]
fn negative_step_is_one_violation() {
    let s = generate_synthetic(SyntheticKind::SingleTower, &SyntheticParams::default(), 1).unwrap();
    let mut parts = s.into_parts();
    parts.area.step_km = -2.0;
    assert_eq!(validate(&parts).len(), 1);
}

#[test]
fn with_config_keeps_contours_when_inputs_unchanged() {
    let s = generate_synthetic(SyntheticKind::SingleTower, &SyntheticParams::default(), 1).unwrap();
    s.contours().unwrap();
    let cfg = Config {
        r_cell_km: 2.0,
        ..s.config().clone()
    };
    assert!(s.with_config(cfg).unwrap().contours_computed());
    let cfg = Config {
        delta_h_override_m: Some(10.0),
        ..s.config().clone()
    };
    assert!(!s.with_config(cfg).unwrap().contours_computed());
}

mod persistence {
    use super::*;
    use proptest::prelude::*;
    use std::path::Path;
    use tvws_core::geodata::{GridGeometry, PopulationGrid, Raster};
    use tvws_core::regulatory::{AstronomySite, PlmrsMetro};
    use tvws_core::{Channel, DeviceClass, DeviceParams, Scenario};

    /// Every file in `dir`, sorted by name, with its bytes.
    fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        out.sort();
        out
    }

    fn decorated(seed: u64, eirp: f64, override_dh: Option<f64>) -> Scenario {
        let params = SyntheticParams {
            terrain: TerrainKind::Rough { delta_h_m: 75.3 },
            channels: vec![14, 22, 30, 51],
            eirp_dbm: (55.0, 82.5),
            tower_height_m: (30.0, 600.0),
            ..field_params(7, vec![14, 22, 30, 51])
        };
        let mut parts = generate_synthetic(SyntheticKind::UniformField, &params, seed).unwrap().into_parts();
        let geom = GridGeometry::from_nw_sample(GeoPoint { lat_deg: 42.0, lon_deg: -102.5 }, 900.0, 17, 21);
        let values = (0..17 * 21).map(|k| (k as f64 * 0.7317).sin().abs() * 3100.0 / 3.0).collect();
        parts.population = Some(PopulationGrid::new(Raster::new(geom, values).unwrap()).unwrap());
        parts.sites.plmrs.push(PlmrsMetro {
            name: "Metro, North".into(),
            location: GeoPoint { lat_deg: 40.1234567, lon_deg: -99.7654321 },
            channel: Channel::new(17).unwrap(),
        });
        parts.sites.astronomy.push(AstronomySite {
            name: "Dish".into(),
            location: GeoPoint { lat_deg: 39.5, lon_deg: -100.25 },
        });
        let (rows, cols) = parts.area.dims();
        parts.area.mask = Some((0..rows * cols).map(|k| k % 7 != 3).collect());
        parts.device = DeviceParams {
            eirp_dbm: eirp,
            ..DeviceParams::at_limits(DeviceClass::Portable)
        };
        parts.config.delta_h_override_m = override_dh;
        parts.config.r_cell_km = 1.0 / 3.0;
        parts.seed = seed;
        Scenario::new(parts).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn save_then_load_is_bit_exact(
            seed in any::<u64>(),
            eirp in -20.0..20.0f64,
            override_dh in prop::option::of(0.0..500.0f64),
        ) {
            let original = decorated(seed, eirp, override_dh);
            let first = tempfile::tempdir().unwrap();
            original.save(first.path().join("scenario.toml")).unwrap();
            let loaded = Scenario::load(first.path().join("scenario.toml")).unwrap();
            prop_assert_eq!(&loaded, &original);
            prop_assert_eq!(loaded.seed(), seed);
            prop_assert_eq!(loaded.config(), original.config());
            prop_assert_eq!(loaded.device().eirp_dbm.to_bits(), eirp.to_bits());

            let second = tempfile::tempdir().unwrap();
            loaded.save(second.path().join("scenario.toml")).unwrap();
            prop_assert_eq!(files(first.path()), files(second.path()));
        }
    }

    #[test]
    fn poisson_count_concentrates_around_its_mean() {
        let base = SyntheticParams::default();
        let area = tvws_core::availability::StudyArea::square(base.center, base.half_width_km, base.step_km).unwrap();
        let params = SyntheticParams {
            intensity_per_km2: 400.0 / area.area_km2(),
            ..base
        };
        for seed in 0..10 {
            let s = generate_synthetic(SyntheticKind::PoissonField, &params, seed).unwrap();
            let n = s.registry().len() as f64;
            assert!((n - 400.0).abs() <= 3.0 * 400f64.sqrt(), "seed {seed}: {n} towers");
        }
    }
}
