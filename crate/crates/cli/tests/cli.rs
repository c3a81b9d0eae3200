use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tvws_core::geodata::distance_km;
use tvws_core::scenario::{generate_synthetic, SyntheticKind, SyntheticParams};
use tvws_core::{GeoPoint, Scenario};

fn tvws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvws"))
        .args(args)
        .env("TVWS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV text, header dropped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

struct Fixture {
    _dir: TempDir,
    path: PathBuf,
}

impl Fixture {
    fn arg(&self) -> &str {
        self.path.to_str().unwrap()
    }
}

fn write(scenario: &Scenario) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    scenario.save(&path).unwrap();
    Fixture { _dir: dir, path }
}

fn small_params() -> SyntheticParams {
    SyntheticParams {
        half_width_km: 90.0,
        step_km: 6.0,
        eirp_dbm: (60.0, 60.0),
        ..SyntheticParams::default()
    }
}

fn single_tower() -> Fixture {
    write(&generate_synthetic(SyntheticKind::SingleTower, &small_params(), 1).unwrap())
}

fn empty_registry() -> Fixture {
    let mut parts = generate_synthetic(SyntheticKind::SingleTower, &small_params(), 1)
        .unwrap()
        .into_parts();
    parts.registry.clear();
    write(&Scenario::new(parts).unwrap())
}

#[test]
fn empty_registry_lists_45_fixed_channels_without_37() {
    let f = empty_registry();
    let out = stdout(&tvws(&["channels", "--scenario", f.arg(), "--lat", "40", "--lon", "-100", "--device", "fixed"]));
    let r = rows(&out);
    assert_eq!(r.len(), 45);
    let channels: Vec<u8> = r.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(!channels.contains(&37));
    assert!(channels.windows(2).all(|w| w[0] < w[1]), "sorted by channel");
    for bad in [3, 4, 36, 38] {
        assert!(!channels.contains(&bad), "channel {bad}");
    }
}

#[test]
fn portable_rows_are_all_upper_band() {
    let f = empty_registry();
    let out = stdout(&tvws(&["channels", "--scenario", f.arg(), "--lat", "40", "--lon", "-100", "--device", "portable"]));
    let r = rows(&out);
    assert_eq!(r.len(), 28);
    assert!(r.iter().all(|row| row[0].parse::<u8>().unwrap() >= 21));
}

#[test]
fn portable_next_to_a_station_is_flagged_reduced_power() {
    let f = single_tower();
    let out = stdout(&tvws(&["channels", "--scenario", f.arg(), "--lat", "40", "--lon", "-100", "--device", "portable"]));
    let r = rows(&out);
    let status = |ch: &str| r.iter().find(|row| row[0] == ch).map(|row| row[2].clone());
    assert_eq!(status("30"), None);
    assert_eq!(status("29").as_deref(), Some("reduced_power"));
    assert_eq!(status("31").as_deref(), Some("reduced_power"));
    assert_eq!(status("40").as_deref(), Some("available"));
}

fn ring(feature: &Value) -> Vec<(f64, f64)> {
    feature["geometry"]["coordinates"][0]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v[0].as_f64().unwrap(), v[1].as_f64().unwrap()))
        .collect()
}

#[test]
fn contour_geojson_has_closed_rings_with_region_outside_contour() {
    let f = single_tower();
    let out = stdout(&tvws(&["contour", "--scenario", f.arg(), "--tx", "T0"]));
    let gj: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(gj["type"], "FeatureCollection");
    let features = gj["features"].as_array().unwrap();
    assert_eq!(features.len(), 2);
    assert_eq!(features[0]["properties"]["kind"], "contour");
    assert_eq!(features[1]["properties"]["kind"], "region");
    let center = GeoPoint { lat_deg: 40.0, lon_deg: -100.0 };
    let radii = |f: &Value| -> Vec<f64> {
        let r = ring(f);
        assert_eq!(r.first(), r.last(), "ring must be closed");
        assert!(r.len() >= 4);
        r.iter()
            .map(|&(lon, lat)| distance_km(center, GeoPoint { lat_deg: lat, lon_deg: lon }))
            .collect()
    };
    let contour = radii(&features[0]);
    let region = radii(&features[1]);
    assert_eq!(contour.len(), region.len());
    for (c, r) in contour.iter().zip(&region) {
        assert!(r >= c, "region {r} inside contour {c}");
    }
    // flat terrain: circular within 1 m
    let spread = contour.iter().cloned().fold(f64::MIN, f64::max) - contour.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread * 1e3 <= 1.0, "spread {spread} km");
}

#[test]
fn sweep_with_two_steps_gives_two_rows() {
    let f = single_tower();
    let out = stdout(&tvws(&[
        "sweep", "--scenario", f.arg(), "--param", "eirp", "--from", "10", "--to", "30", "--steps", "2", "--channel", "30",
    ]));
    assert_eq!(out.lines().next().unwrap(), "param,value,channel,p,capacity_bps,cpa_bps_m2,mobile_bps");
    assert_eq!(rows(&out).len(), 2);
}

#[test]
fn eirp_sweep_p_column_never_rises() {
    let f = single_tower();
    let out = stdout(&tvws(&[
        "sweep", "--scenario", f.arg(), "--param", "eirp", "--from", "-10", "--to", "36", "--steps", "5", "--channel", "30",
    ]));
    let p: Vec<f64> = rows(&out).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(p.len(), 5);
    assert!(p.windows(2).all(|w| w[1] <= w[0]), "{p:?}");
    assert!(p[4] < p[0], "{p:?}");
}

fn run_to_file(f: &Fixture, out_dir: &Path, name: &str, jobs: &str) -> Vec<u8> {
    let target = out_dir.join(name);
    let t = target.to_str().unwrap();
    let out = tvws(&[
        "--jobs", jobs, "--output", t, "sweep", "--scenario", f.arg(), "--param", "height", "--from", "3", "--to", "30",
        "--steps", "3", "--channel", "31",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    std::fs::read(target).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let f = single_tower();
    let dir = tempfile::tempdir().unwrap();
    let a = run_to_file(&f, dir.path(), "a.csv", "1");
    let b = run_to_file(&f, dir.path(), "b.csv", "1");
    let c = run_to_file(&f, dir.path(), "c.csv", "2");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

fn code(args: &[&str]) -> Option<i32> {
    tvws(args).status.code()
}

#[test]
fn input_errors_exit_with_2() {
    let f = single_tower();
    let s = f.arg();
    assert_eq!(
        code(&["sweep", "--scenario", s, "--param", "eirp", "--from", "30", "--to", "10", "--steps", "3", "--channel", "30"]),
        Some(2)
    );
    assert_eq!(
        code(&["sweep", "--scenario", s, "--param", "eirp", "--from", "10", "--to", "30", "--steps", "1", "--channel", "30"]),
        Some(2)
    );
    assert_eq!(code(&["contour", "--scenario", s, "--tx", "missing"]), Some(2));
    assert_eq!(code(&["channels", "--scenario", s, "--lat", "45", "--lon", "-100"]), Some(2));
    assert_eq!(code(&["channels", "--scenario", s, "--lat", "95", "--lon", "-100"]), Some(2));
    assert_eq!(code(&["availability", "--scenario", s, "--channel", "52"]), Some(2));
    assert_eq!(code(&["channels", "--scenario", "/no/such/scenario.toml", "--lat", "40", "--lon", "-100"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&[]), Some(2));
}

#[test]
fn availability_csv_has_one_row_per_cell() {
    let f = single_tower();
    let out = stdout(&tvws(&["availability", "--scenario", f.arg(), "--channel", "30"]));
    assert_eq!(out.lines().next().unwrap(), "lat,lon,channel,available,reduced_power_flag");
    let r = rows(&out);
    assert_eq!(r.len(), 30 * 30);
    let open = r.iter().filter(|row| row[3] == "1").count();
    assert!(open > 0 && open < r.len());

    let gj: Value = serde_json::from_str(&stdout(&tvws(&[
        "availability", "--scenario", f.arg(), "--channel", "30", "--format", "geojson",
    ])))
    .unwrap();
    assert_eq!(gj["features"].as_array().unwrap().len(), 900);
    let p = gj["properties"]["p"].as_f64().unwrap();
    assert!((p - open as f64 / 900.0).abs() < 1e-12);
}

#[test]
fn interference_at_a_point_reports_status_and_levels() {
    let f = single_tower();
    let out = stdout(&tvws(&["interference", "--scenario", f.arg(), "--channel", "31", "--lat", "40.5", "--lon", "-99.5"]));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], "31");
    assert_eq!(r[0][3], "unavailable");
    assert!(r[0][4].parse::<f64>().unwrap() < 0.0);

    // a channel two away from the only station sees no primary interference
    let out = stdout(&tvws(&["interference", "--scenario", f.arg(), "--channel", "40", "--lat", "40.5", "--lon", "-99.5"]));
    let r = rows(&out);
    assert_eq!(r[0][3], "available");
    assert_eq!(r[0][4], "");
    assert!(r[0][6].parse::<f64>().unwrap().is_finite());
}

#[test]
fn capacity_rows_sum_to_total() {
    let f = single_tower();
    let out = stdout(&tvws(&["capacity", "--scenario", f.arg(), "--channel", "30", "--channel", "40"]));
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    assert_eq!(r[2][0], "total");
    let c30: f64 = r[0][4].parse().unwrap();
    let c40: f64 = r[1][4].parse().unwrap();
    let total: f64 = r[2][4].parse().unwrap();
    assert!(c30 >= 0.0 && c30 < c40);
    assert!((total - (c30 + c40)).abs() <= 1e-9 * total);
}

#[test]
fn stats_table_and_cdf() {
    let f = single_tower();
    let out = stdout(&tvws(&["stats", "--scenario", f.arg(), "--points", "40"]));
    let r = rows(&out);
    assert_eq!(r.len(), 12);
    let all = r.iter().find(|row| row[0] == "all" && row[1] == "ALL").unwrap();
    assert_eq!(all[2], "40");
    assert_eq!(all[3], "49");

    let out = stdout(&tvws(&["stats", "--scenario", f.arg(), "--points", "40", "--cdf"]));
    let cdf = rows(&out);
    assert_eq!(cdf.len(), 51);
    for col in 1..=3 {
        let v: Vec<f64> = cdf.iter().map(|row| row[col].parse().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(v[50], 1.0);
    }
}
