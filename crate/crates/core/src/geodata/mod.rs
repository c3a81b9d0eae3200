//! Geographic inputs: points on a spherical Earth, elevation and population
//! rasters, per-azimuth terrain statistics and the transmitter registry.

mod raster;
mod registry;
mod terrain;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use raster::{GridGeometry, PopulationGrid, Raster, TerrainGrid};
pub use registry::{load_registry, read_registry, write_registry, TransmitterRecord};
pub use terrain::{
    delta_h, delta_h_clipped, haat, radial_samples, HAAT_RADIAL_END_KM, HAAT_RADIAL_START_KM, RADIAL_STEP_KM,
};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    /// Validated constructor. Longitude must be in `[-180, 180)`.
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        let p = GeoPoint { lat_deg, lon_deg };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat_deg) {
            return Err(Error::invariant("lat_deg", format!("{} not in [-90, 90]", self.lat_deg)));
        }
        if !(-180.0..180.0).contains(&self.lon_deg) {
            return Err(Error::invariant("lon_deg", format!("{} not in [-180, 180)", self.lon_deg)));
        }
        Ok(())
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat_deg, self.lon_deg)
    }
}

/// Great-circle distance (haversine).
pub fn distance_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dphi = phi2 - phi1;
    let dlam = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlam / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Initial bearing from `a` towards `b`, degrees clockwise from north in `[0, 360)`.
pub fn bearing_deg(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dlam = (b.lon_deg - a.lon_deg).to_radians();
    let y = dlam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlam.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point reached travelling `dist_km` from `origin` on initial bearing `azimuth_deg`.
pub fn destination(origin: GeoPoint, azimuth_deg: f64, dist_km: f64) -> GeoPoint {
    let delta = dist_km / EARTH_RADIUS_KM;
    let theta = azimuth_deg.to_radians();
    let phi1 = origin.lat_deg.to_radians();
    let lam1 = origin.lon_deg.to_radians();
    let sin_phi2 = phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos();
    let phi2 = sin_phi2.clamp(-1.0, 1.0).asin();
    let lam2 = lam1
        + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * sin_phi2);
    GeoPoint {
        lat_deg: phi2.to_degrees(),
        lon_deg: normalize_lon(lam2.to_degrees()),
    }
}

pub(crate) fn normalize_lon(lon: f64) -> f64 {
    let l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l >= 180.0 {
        l - 360.0
    } else {
        l
    }
}
