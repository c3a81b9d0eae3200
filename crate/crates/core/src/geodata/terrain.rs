use super::{destination, GeoPoint, TerrainGrid, TransmitterRecord};
use crate::error::Result;
use crate::numeric::{pairwise_sum, percentile};

pub const HAAT_RADIAL_START_KM: f64 = 3.2;
pub const HAAT_RADIAL_END_KM: f64 = 16.1;
pub const RADIAL_STEP_KM: f64 = 0.1;

/// Elevations sampled every [`RADIAL_STEP_KM`] from `start_km` to `end_km`
/// (both inclusive) along `azimuth_deg`.
pub fn radial_samples(
    grid: &TerrainGrid,
    center: GeoPoint,
    azimuth_deg: f64,
    start_km: f64,
    end_km: f64,
) -> Result<Vec<f64>> {
    let n = ((end_km - start_km) / RADIAL_STEP_KM + 1e-6).floor() as usize;
    (0..=n)
        .map(|k| {
            let d = start_km + k as f64 * RADIAL_STEP_KM;
            grid.elevation_at(destination(center, azimuth_deg, d))
        })
        .collect()
}

/// Height of the antenna above the mean terrain between 3.2 and 16.1 km
/// along one azimuth.
pub fn haat(grid: &TerrainGrid, tx: &TransmitterRecord, azimuth_deg: f64) -> Result<f64> {
    let site = grid.elevation_at(tx.location)?;
    let samples = radial_samples(
        grid,
        tx.location,
        azimuth_deg,
        HAAT_RADIAL_START_KM,
        HAAT_RADIAL_END_KM,
    )?;
    let mean = pairwise_sum(&samples) / samples.len() as f64;
    Ok(site + tx.ground_height_m - mean)
}

/// Terrain irregularity: interdecile range (90th minus 10th percentile) of
/// elevations along a radial out to `range_km`.
pub fn delta_h(grid: &TerrainGrid, center: GeoPoint, azimuth_deg: f64, range_km: f64) -> Result<f64> {
    let mut samples = radial_samples(grid, center, azimuth_deg, 0.0, range_km)?;
    let p90 = percentile(&mut samples, 0.9);
    let p10 = percentile(&mut samples, 0.1);
    Ok((p90 - p10).max(0.0))
}

/// Like [`delta_h`], but a radial that leaves the grid is cut at the last
/// in-grid sample instead of failing. At least 1 km of radial is required.
pub fn delta_h_clipped(grid: &TerrainGrid, center: GeoPoint, azimuth_deg: f64, range_km: f64) -> Result<f64> {
    let n = ((range_km / RADIAL_STEP_KM) + 1e-6).floor() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        match grid.elevation_at(destination(center, azimuth_deg, k as f64 * RADIAL_STEP_KM)) {
            Ok(z) => samples.push(z),
            Err(e) if samples.len() <= 10 => return Err(e),
            Err(_) => break,
        }
    }
    let p90 = percentile(&mut samples, 0.9);
    let p10 = percentile(&mut samples, 0.1);
    Ok((p90 - p10).max(0.0))
}
