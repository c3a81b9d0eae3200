mod hata {
    use tvws_core::propagation::*;

    #[test]
    fn textbook_urban_value() {
        // independent evaluation of the medium-city formula
        let f: f64 = 700.0;
        let (hb, hm, d): (f64, f64, f64) = (30.0, 1.5, 1.0);
        let ahm = (1.1 * f.log10() - 0.7) * hm - (1.56 * f.log10() - 0.8);
        let l = 69.55 + 26.16 * f.log10() - 13.82 * hb.log10() - ahm + (44.9 - 6.55 * hb.log10()) * d.log10();
        let got = hata_loss(700.0, 30.0, 1.5, 1.0, Environment::Urban);
        assert!((got.loss_db - l).abs() < 1e-9);
        assert!((got.loss_db - 123.56).abs() < 0.01, "{}", got.loss_db);
        assert!(!got.out_of_domain);
    }

    #[test]
    fn environment_ordering() {
        for d in [1.0, 5.0, 20.0] {
            let u = hata_loss(600.0, 50.0, 2.0, d, Environment::Urban).loss_db;
            let s = hata_loss(600.0, 50.0, 2.0, d, Environment::Suburban).loss_db;
            let r = hata_loss(600.0, 50.0, 2.0, d, Environment::Rural).loss_db;
            assert!(s < u && r < s);
        }
    }

    #[test]
    fn strictly_increasing_in_distance() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=190 {
            let d = 1.0 + 0.1 * k as f64;
            let l = hata_loss(500.0, 40.0, 1.5, d, Environment::Urban).loss_db;
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn out_of_domain_inputs_are_flagged() {
        assert!(hata_loss(57.0, 30.0, 1.5, 1.0, Environment::Urban).out_of_domain);
        assert!(hata_loss(600.0, 10.0, 1.5, 1.0, Environment::Urban).out_of_domain);
        assert!(hata_loss(600.0, 30.0, 1.5, 40.0, Environment::Urban).out_of_domain);
        // frequency clamps to the domain edge
        assert_eq!(
            hata_loss(57.0, 30.0, 1.5, 1.0, Environment::Urban).loss_db,
            hata_loss(150.0, 30.0, 1.5, 1.0, Environment::Urban).loss_db
        );
    }

    #[test]
    fn taller_base_loses_less() {
        let lo = hata_loss(600.0, 3.0, 10.0, 5.0, Environment::Urban).loss_db;
        let hi = hata_loss(600.0, 30.0, 10.0, 5.0, Environment::Urban).loss_db;
        assert!(hi < lo);
    }
}

mod general {
    use tvws_core::propagation::*;
    use tvws_core::Error;

    #[test]
    fn free_space_at_one_km_615_mhz() {
        let expected = 20.0 * (4.0 * std::f64::consts::PI * 1000.0 * 615e6 / 2.998e8).log10();
        assert!((free_space_loss_db(615.0, 1000.0) - expected).abs() < 1e-12);
        assert!((free_space_loss_db(615.0, 1000.0) - 88.2).abs() < 0.05);
    }

    #[test]
    fn free_space_inversion_closed_form() {
        let fs = FreeSpace { f_mhz: 615.0 };
        let target = free_space_loss_db(615.0, 1000.0);
        let inv = inverse_loss(&fs, target).unwrap();
        assert_eq!(inv.bound, InversionBound::Interior);
        assert!((inv.distance_m - 1000.0).abs() <= 1.0);
        // closed form: d = C·10^(L/20) / (4π f)
        let d = 2.998e8 * 10f64.powf(88.2 / 20.0) / (4.0 * std::f64::consts::PI * 615e6);
        let inv = inverse_loss(&fs, 88.2).unwrap();
        assert!((inv.distance_m - d).abs() <= 1.0);
    }

    #[test]
    fn inversion_clamps_at_both_ends() {
        let fs = FreeSpace { f_mhz: 100.0 };
        assert_eq!(inverse_loss(&fs, 0.0).unwrap().bound, InversionBound::BelowDomain);
        assert_eq!(inverse_loss(&fs, 0.0).unwrap().distance_m, 1.0);
        let far = inverse_loss(&fs, 500.0).unwrap();
        assert_eq!(far.bound, InversionBound::BeyondDomain);
        assert_eq!(far.distance_m, ITM_MAX_DISTANCE_M);
    }

    struct Dip;
    impl PathLossModel for Dip {
        fn loss_db(&self, d_m: f64) -> f64 {
            if (5e3..6e3).contains(&d_m) { 10.0 } else { d_m / 100.0 }
        }
        fn domain_m(&self) -> (f64, f64) {
            (1e3, 1e5)
        }
    }

    #[test]
    fn non_monotone_model_is_rejected() {
        assert!(matches!(inverse_loss(&Dip, 500.0), Err(Error::NonMonotone { .. })));
    }
}

mod itm {
    use tvws_core::propagation::*;
    use tvws_core::Error;

    /// Reference link for the calibration coefficients.
    fn example(f_mhz: f64) -> ItmCoefficients {
        itm_coefficients(&ItmParams::new(f_mhz, 300.0, 30.0, 90.0)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn smooth_earth_horizon_is_symmetric_in_heights() {
        let a = itm_coefficients(&ItmParams::new(600.0, 200.0, 10.0, 50.0)).unwrap();
        let b = itm_coefficients(&ItmParams::new(600.0, 10.0, 200.0, 50.0)).unwrap();
        assert!((a.d_ls_m - b.d_ls_m).abs() < 1e-6);
        let closed = (2.0 * 200.0 / (1.0_f64 / 8.493e6)).sqrt() + (2.0 * 10.0 / (1.0_f64 / 8.493e6)).sqrt();
        assert!((a.d_ls_m - closed).abs() < 1e-6);
    }

    #[test]
    fn flat_terrain_horizon_equals_smooth_earth_horizon() {
        let c = itm_coefficients(&ItmParams::new(600.0, 100.0, 10.0, 0.0)).unwrap();
        assert!((c.d_l_m - c.d_ls_m).abs() < 1e-6);
    }

    #[test]
    fn channel_51_example_coefficients() {
        let c = example(695.0);
        assert!(rel(c.d_ls_m, 94e3) < 0.01, "{}", c.d_ls_m);
        assert!(rel(c.d_x_m, 136e3) < 0.01, "{}", c.d_x_m);
        assert!((c.a_el - -17.94).abs() < 0.1);
        assert!(rel(c.k1, 5.08e-4) < 0.01);
        assert!((c.a_ed - -17.2).abs() < 0.1);
        assert!(rel(c.m_d, 5.0e-4) < 0.01);
        assert!((c.a_es - 42.0).abs() < 0.1);
        assert!(rel(c.m_s, 6.56e-5) < 0.01);
        let expected = 42.0 + 150e3 * 6.56e-5;
        assert!((itm_aref(&c, 150e3).unwrap() - expected).abs() < 0.1);
    }

    #[test]
    fn channel_2_example_coefficients() {
        let c = example(57.0);
        assert!(rel(c.d_ls_m, 94.1e3) < 0.01);
        assert!(rel(c.d_x_m, 159e3) < 0.01, "{}", c.d_x_m);
        assert!((c.a_el - -7.1).abs() < 0.1);
        assert!(rel(c.k1, 4.03e-4) < 0.01);
        assert!((c.a_ed - 5.87).abs() < 0.1);
        assert!(rel(c.m_d, 2.65e-4) < 0.01);
        assert!((c.a_es - 38.58).abs() < 0.1);
        assert!(rel(c.m_s, 5.95e-5) < 0.01);
    }

    #[test]
    fn reference_attenuation_is_clamped_at_zero() {
        let c = example(695.0);
        assert_eq!(itm_aref(&c, 5e3).unwrap(), 0.0);
    }

    #[test]
    fn distance_domain_is_enforced() {
        let c = example(695.0);
        assert!(matches!(itm_aref(&c, 999.0), Err(Error::Domain(_))));
        assert!(matches!(itm_aref(&c, 2.1e6), Err(Error::Domain(_))));
        assert!(itm_aref(&c, 1e3).is_ok());
    }

    #[test]
    fn parameter_domain_is_enforced() {
        assert!(itm_coefficients(&ItmParams::new(10.0, 10.0, 10.0, 0.0)).is_err());
        assert!(itm_coefficients(&ItmParams::new(600.0, 0.1, 10.0, 0.0)).is_err());
        assert!(itm_coefficients(&ItmParams::new(600.0, 10.0, 10.0, -1.0)).is_err());
    }

    #[test]
    fn total_loss_adds_free_space() {
        let p = ItmParams::new(695.0, 300.0, 30.0, 90.0);
        let c = itm_coefficients(&p).unwrap();
        let d = 150e3;
        let want = itm_aref(&c, d).unwrap() + 20.0 * (4.0 * std::f64::consts::PI * d * 695e6 / 2.998e8).log10();
        assert!((total_loss(&c, &p, d).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn csv_row_has_header_arity() {
        let c = example(695.0);
        assert_eq!(
            c.to_csv_row().split(',').count(),
            ItmCoefficients::CSV_HEADER.split(',').count()
        );
    }
}

mod properties {
    use proptest::prelude::*;
    use tvws_core::propagation::*;

    fn arb_params() -> impl Strategy<Value = ItmParams> {
        (20f64.ln()..20000f64.ln(), 0.5f64.ln()..3000f64.ln(), 0.5f64.ln()..3000f64.ln(), 0.0..500.0)
            .prop_map(|(f, h1, h2, dh)| {
                ItmParams::new(
                    f.exp().clamp(20.0, 20000.0),
                    h1.exp().clamp(0.5, 3000.0),
                    h2.exp().clamp(0.5, 3000.0),
                    dh,
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn breaks_are_ordered_and_continuous(p in arb_params()) {
            let c = itm_coefficients(&p).unwrap();
            prop_assert!(c.d_ls_m > 0.0);
            prop_assert!(c.d_x_m >= c.d_ls_m);
            for brk in [c.d_ls_m, c.d_x_m] {
                if brk > 1.001e3 && brk < 1.999e6 {
                    let below = itm_aref(&c, brk * (1.0 - 1e-12)).unwrap();
                    let above = itm_aref(&c, brk * (1.0 + 1e-12)).unwrap();
                    prop_assert!((above - below).abs() <= 0.5);
                }
            }
        }

        #[test]
        fn aref_never_decreases_beyond_the_horizon(p in arb_params(), t in 0.0..1.0f64, u in 0.0..1.0f64) {
            let c = itm_coefficients(&p).unwrap();
            let start = c.d_ls_m.clamp(1e3, 2e6);
            let d1 = start * (2e6 / start).powf(t.min(u));
            let d2 = start * (2e6 / start).powf(t.max(u));
            prop_assert!(itm_aref(&c, d2).unwrap() >= itm_aref(&c, d1).unwrap() - 1e-9);
        }

        #[test]
        fn inverse_of_total_loss_is_identity(p in arb_params(), t in 0.0..1.0f64) {
            let model = ItmModel::new(p).unwrap();
            let d0 = 1e3 * 2000f64.powf(t);
            let inv = inverse_loss(&model, model.loss_db(d0)).unwrap();
            prop_assert!((inv.distance_m - d0).abs() <= 1.0, "{} vs {}", inv.distance_m, d0);
        }

        #[test]
        fn rougher_terrain_raises_the_broadcast_diffraction_intercept(
            f in 54.0..698.0f64,
            h1 in 30.0..1000.0f64,
            h2 in 1.0..30.0f64,
            dh in 0.0..500.0f64,
            extra in 0.0..300.0f64,
        ) {
            let p = ItmParams::new(f, h1, h2, dh);
            let smooth = itm_coefficients(&p).unwrap();
            let rough = itm_coefficients(&ItmParams { delta_h_m: p.delta_h_m + extra, ..p }).unwrap();
            prop_assert!(rough.a_ed >= smooth.a_ed - 1e-9, "{} < {}", rough.a_ed, smooth.a_ed);
        }

        #[test]
        fn free_space_region_loss_increases_with_frequency(f in 50.0..900.0f64, df in 1.0..100.0f64) {
            // at 1 km between tall antennas the reference attenuation is clamped at 0
            let p1 = ItmParams::new(f, 300.0, 300.0, 0.0);
            let p2 = ItmParams::new(f + df, 300.0, 300.0, 0.0);
            let c1 = itm_coefficients(&p1).unwrap();
            let c2 = itm_coefficients(&p2).unwrap();
            prop_assume!(itm_aref(&c1, 1e3).unwrap() == 0.0 && itm_aref(&c2, 1e3).unwrap() == 0.0);
            prop_assert!(total_loss(&c2, &p2, 1e3).unwrap() > total_loss(&c1, &p1, 1e3).unwrap());
        }

        #[test]
        fn hata_increases_with_distance_and_decreases_with_base_height(
            f in 150.0..1500.0f64,
            hb in 1.0..199.0f64,
            dhb in 0.5..50.0f64,
            hm in 1.0..10.0f64,
            d in 1.0..99.0f64,
            dd in 0.01..20.0f64,
        ) {
            for env in [Environment::Urban, Environment::Suburban, Environment::Rural] {
                let near = hata_loss(f, hb, hm, d, env).loss_db;
                let far = hata_loss(f, hb, hm, (d + dd).min(100.0), env).loss_db;
                prop_assert!(far > near || d + dd > 100.0);
                let taller = hata_loss(f, (hb + dhb).min(200.0), hm, d, env).loss_db;
                prop_assert!(taller < near);
            }
        }

        #[test]
        fn hata_inverse_roundtrip(f in 150.0..1500.0f64, hb in 1.0..200.0f64, d in 1.0..100.0f64) {
            let m = HataModel { f_mhz: f, h_b_m: hb, h_m_m: 10.0, environment: Environment::Urban };
            let inv = inverse_loss(&m, m.loss_db(d * 1e3)).unwrap();
            prop_assert!((inv.distance_m - d * 1e3).abs() <= 1.0);
        }
    }

    /// Rougher terrain flattens the diffraction slope, so far beyond the
    /// horizon a rough path can lose less than a smooth one.
    #[test]
    fn rougher_terrain_can_lose_less_far_beyond_the_horizon() {
        let smooth = itm_coefficients(&ItmParams::new(554.46, 50.31, 1.11, 0.87)).unwrap();
        let rough = itm_coefficients(&ItmParams::new(554.46, 50.31, 1.11, 37.39)).unwrap();
        assert!(rough.a_ed > smooth.a_ed);
        assert!(rough.m_d < smooth.m_d);
        let d = 80e3;
        assert!(d > smooth.d_l_m && d < smooth.d_x_m.min(rough.d_x_m));
        assert!(itm_aref(&rough, d).unwrap() < itm_aref(&smooth, d).unwrap() - 5.0);
    }
}
