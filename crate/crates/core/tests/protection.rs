use tvws_core::protection::*;
use tvws_core::geodata::{destination, GridGeometry, GeoPoint, TerrainGrid, TransmitterRecord};
use tvws_core::regulatory::{Channel, DeviceClass, DeviceParams, ProtectionTables, Relationship, ServiceType};
use tvws_core::Config;

fn center() -> GeoPoint {
    GeoPoint { lat_deg: 40.0, lon_deg: -100.0 }
}

#[test]
fn radius_interpolates_linearly() {
    let mut r = vec![10.0; 360];
    r[10] = 20.0;
    let c = RadialContour::new(center(), r).unwrap();
    assert_eq!(c.radius_at(10.0), 20.0);
    assert!((c.radius_at(10.25) - 17.5).abs() < 1e-12);
    assert!((c.radius_at(9.5) - 15.0).abs() < 1e-12);
    assert_eq!(c.radius_at(359.5), 10.0);
    assert_eq!(c.radius_at(-350.0), 20.0);
}

#[test]
fn contains_center_and_excludes_far() {
    let c = RadialContour::circle(center(), 30.0).unwrap();
    assert!(c.contains(center()));
    assert!(!c.contains(destination(center(), 77.0, 31.0)));
    assert!(c.contains(destination(center(), 77.0, 29.0)));
}

#[test]
fn ring_is_closed_with_361_vertices() {
    let c = RadialContour::circle(center(), 30.0).unwrap();
    let ring = c.ring();
    assert_eq!(ring.len(), 361);
    assert_eq!(ring[0], ring[360]);
}

#[test]
fn rejects_wrong_length_and_negative_radii() {
    assert!(RadialContour::new(center(), vec![1.0; 10]).is_err());
    let mut r = vec![1.0; 360];
    r[3] = -1.0;
    assert!(RadialContour::new(center(), r).is_err());
}

#[test]
fn separation_orders_by_du_ratio_and_power() {
    let cfg = Config::default();
    let t = ProtectionTables::default();
    let ch = Channel::new(30).unwrap();
    let fixed = DeviceParams::at_limits(DeviceClass::Fixed);
    let co = min_separation_km(ServiceType::DIGITAL_FULL, ch, &fixed, Relationship::Co, &cfg, &t);
    let adj = min_separation_km(ServiceType::DIGITAL_FULL, ch, &fixed, Relationship::UpperAdj, &cfg, &t);
    assert!(adj < co, "{adj} {co}");
    let quiet = DeviceParams {
        eirp_dbm: f64::NEG_INFINITY,
        ..fixed
    };
    assert_eq!(
        min_separation_km(ServiceType::DIGITAL_FULL, ch, &quiet, Relationship::Co, &cfg, &t),
        1.0
    );
}

#[test]
fn flat_terrain_contour_is_circular() {
    let geom = GridGeometry::from_nw_sample(GeoPoint { lat_deg: 43.0, lon_deg: -104.0 }, 60.0, 361, 481);
    let terrain = TerrainGrid::flat(geom, 100.0).unwrap();
    let tx = TransmitterRecord {
        id: "T".into(),
        channel: Channel::new(30).unwrap(),
        service: ServiceType::DIGITAL_FULL,
        eirp_dbm: 60.0,
        ground_height_m: 150.0,
        location: center(),
    };
    let c = protected_contour(&tx, &terrain, &Config::default(), &ProtectionTables::default()).unwrap();
    let spread = c.max_radius_km() - c.min_radius_km();
    assert!(spread * 1e3 <= 1.0, "spread {spread} km");
    assert!(c.min_radius_km() > 1.0);
}

mod properties {
    use super::*;
    use proptest::prelude::*;
    use tvws_core::geodata::{bearing_deg, distance_km};

    fn arb_service() -> impl Strategy<Value = ServiceType> {
        prop::sample::select(ServiceType::ALL.to_vec())
    }

    fn arb_relationship() -> impl Strategy<Value = Relationship> {
        prop::sample::select(vec![Relationship::Co, Relationship::UpperAdj, Relationship::LowerAdj])
    }

    fn arb_channel() -> impl Strategy<Value = Channel> {
        (2u8..=51).prop_filter_map("channel 37", |n| if n == 37 { None } else { Channel::new(n).ok() })
    }

    fn device(eirp_dbm: f64, height_m: f64) -> DeviceParams {
        DeviceParams {
            eirp_dbm,
            antenna_height_m: height_m,
            ..DeviceParams::at_limits(DeviceClass::Fixed)
        }
    }

    fn station(channel: Channel, service: ServiceType, eirp_dbm: f64, height_m: f64) -> TransmitterRecord {
        TransmitterRecord {
            id: "T".into(),
            channel,
            service,
            eirp_dbm,
            ground_height_m: height_m,
            location: center(),
        }
    }

    /// Smooth random relief on a grid centered on `center()`, rotated
    /// clockwise by `rot_deg`.
    fn relief(waves: &[(f64, f64, f64, f64)], rot_deg: f64) -> TerrainGrid {
        let geom = GridGeometry::from_nw_sample(GeoPoint { lat_deg: 42.5, lon_deg: -103.0 - 1.0 / 3.0 }, 50.0, 361, 481);
        let c = center();
        TerrainGrid::from_fn(geom, |p| {
            let d = distance_km(c, p);
            let q = destination(c, bearing_deg(c, p) - rot_deg, d);
            let x = (q.lon_deg - c.lon_deg) * 85.0;
            let y = (q.lat_deg - c.lat_deg) * 111.0;
            waves
                .iter()
                .map(|&(a, wl, dir, ph)| a * ((x * dir.cos() + y * dir.sin()) * std::f64::consts::TAU / wl + ph).sin())
                .sum::<f64>()
                + 300.0
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn separation_grows_with_power_and_height(
            service in arb_service(),
            channel in arb_channel(),
            rel in arb_relationship(),
            eirp in -10.0..40.0f64,
            d_eirp in 0.0..20.0f64,
            height in 1.0..100.0f64,
            d_height in 0.0..100.0f64,
        ) {
            let cfg = Config::default();
            let t = ProtectionTables::default();
            let base = min_separation_km(service, channel, &device(eirp, height), rel, &cfg, &t);
            let louder = min_separation_km(service, channel, &device(eirp + d_eirp, height), rel, &cfg, &t);
            let taller = min_separation_km(service, channel, &device(eirp, height + d_height), rel, &cfg, &t);
            prop_assert!(louder >= base, "eirp: {louder} < {base}");
            prop_assert!(taller >= base, "height: {taller} < {base}");
        }

        #[test]
        fn contour_shrinks_as_threshold_rises(
            service in arb_service(),
            channel in arb_channel(),
            eirp in 40.0..90.0f64,
            height in 30.0..600.0f64,
            dh in 0.0..300.0f64,
            raise in 0.0..20.0f64,
        ) {
            let cfg = Config { delta_h_override_m: Some(dh), ..Config::default() };
            let geom = GridGeometry::from_nw_sample(GeoPoint { lat_deg: 40.5, lon_deg: -100.5 }, 60.0, 61, 61);
            let flat = TerrainGrid::flat(geom, 0.0).unwrap();
            let tx = station(channel, service, eirp, height);
            let base = ProtectionTables::default();
            let mut strict = base.clone();
            for v in strict.analog_contour_dbu.iter_mut().chain(strict.digital_contour_dbu.iter_mut()) {
                *v += raise;
            }
            let (r0, _) = contour_azimuth(&tx, &flat, 0.0, &cfg, &base).unwrap();
            let (r1, _) = contour_azimuth(&tx, &flat, 0.0, &cfg, &strict).unwrap();
            prop_assert!(r1 <= r0 + 1e-9, "{r1} > {r0}");
        }

        #[test]
        fn region_contains_contour(
            radii in prop::collection::vec(0.0..300.0f64, 360),
            sep in 0.0..100.0f64,
            probes in prop::collection::vec((0.0..360.0f64, 0.0..0.999f64), 50),
        ) {
            let contour = RadialContour::new(center(), radii).unwrap();
            let region = ProtectionRegion::from_contour(
                "T", contour.clone(), sep, Channel::new(30).unwrap(), Relationship::Co,
            );
            for (az, frac) in probes {
                let p = destination(center(), az, frac * contour.radius_at(az));
                prop_assert!(contour.contains(p), "az {az} frac {frac}");
                prop_assert!(region.contains(p), "az {az} frac {frac}");
                prop_assert!(region.region.radius_at(az) >= contour.radius_at(az));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4))]

        #[test]
        fn rotating_terrain_rotates_the_contour(
            waves in prop::collection::vec((5.0..80.0f64, 15.0..80.0f64, 0.0..6.3f64, 0.0..6.3f64), 3),
        ) {
            let tx = station(Channel::new(30).unwrap(), ServiceType::DIGITAL_FULL, 70.0, 200.0);
            let cfg = Config::default();
            let t = ProtectionTables::default();
            let a = protected_contour(&tx, &relief(&waves, 0.0), &cfg, &t).unwrap();
            let b = protected_contour(&tx, &relief(&waves, 90.0), &cfg, &t).unwrap();
            let mut worst = 0.0f64;
            for az in 0..360 {
                let ra = a.radii_km[az];
                let rb = b.radii_km[(az + 90) % 360];
                worst = worst.max((ra - rb).abs() / ra);
            }
            prop_assert!(worst < 0.02, "worst relative radius difference {worst}");
        }
    }
}
