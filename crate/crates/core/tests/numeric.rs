use tvws_core::numeric::*;

#[test]
fn percentile_matches_order_statistics() {
    let mut xs: Vec<f64> = (0..=10).map(f64::from).collect();
    assert_eq!(percentile(&mut xs, 0.1), 1.0);
    assert_eq!(percentile(&mut xs, 0.9), 9.0);
    assert_eq!(percentile(&mut xs, 0.5), 5.0);
    let mut two = vec![0.0, 100.0, 0.0, 100.0];
    assert_eq!(percentile(&mut two, 0.9) - percentile(&mut two, 0.1), 100.0);
}

#[test]
fn simpson_on_exponential() {
    let got = integrate(|x| (-x).exp(), 0.0, 5.0, 1e-9);
    let exact = 1.0 - (-5.0f64).exp();
    assert!((got - exact).abs() < 1e-9);
}

#[test]
fn pairwise_sum_agrees_with_naive() {
    let xs: Vec<f64> = (1..=1000).map(|i| 1.0 / i as f64).collect();
    let naive: f64 = xs.iter().sum();
    assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
}

#[test]
fn db_conversions_invert() {
    assert!((mw_to_dbm(dbm_to_mw(-37.5)) + 37.5).abs() < 1e-12);
    assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
}
