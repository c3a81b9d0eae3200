//! Protected contours, minimum separation distances and the keep-out
//! regions secondary devices must stay out of.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geodata::{bearing_deg, delta_h_clipped, destination, distance_km, haat, GeoPoint, TerrainGrid, TransmitterRecord};
use crate::propagation::{inverse_loss, HataModel, ItmModel, ItmParams};
use crate::regulatory::{dbu_to_dbm, Channel, DeviceParams, ProtectionTables, Relationship, ServiceType};

pub const AZIMUTHS: usize = 360;
pub const MAX_RADIUS_KM: f64 = 2000.0;

/// A star-shaped region: one radius per integer azimuth degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialContour {
    pub center: GeoPoint,
    pub radii_km: Vec<f64>,
}

impl RadialContour {
    pub fn new(center: GeoPoint, radii_km: Vec<f64>) -> Result<Self> {
        if radii_km.len() != AZIMUTHS {
            return Err(Error::invariant("radii_km", format!("expected 360 radii, got {}", radii_km.len())));
        }
        if let Some(r) = radii_km.iter().find(|r| !(0.0..=MAX_RADIUS_KM).contains(*r)) {
            return Err(Error::invariant("radii_km", format!("radius {r} km not in [0, 2000]")));
        }
        Ok(RadialContour { center, radii_km })
    }

    pub fn circle(center: GeoPoint, radius_km: f64) -> Result<Self> {
        Self::new(center, vec![radius_km; AZIMUTHS])
    }

    /// Radius towards `azimuth_deg`, linear between the bracketing degrees.
    pub fn radius_at(&self, azimuth_deg: f64) -> f64 {
        self.expanded_radius_at(azimuth_deg, 0.0)
    }

    /// Radius of [`expanded`](Self::expanded)`(margin_km)` towards
    /// `azimuth_deg`, without building the expanded contour.
    pub fn expanded_radius_at(&self, azimuth_deg: f64, margin_km: f64) -> f64 {
        let az = azimuth_deg.rem_euclid(360.0);
        let i = az.floor() as usize % AZIMUTHS;
        let t = az - az.floor();
        let j = (i + 1) % AZIMUTHS;
        let ri = (self.radii_km[i] + margin_km).min(MAX_RADIUS_KM);
        let rj = (self.radii_km[j] + margin_km).min(MAX_RADIUS_KM);
        ri * (1.0 - t) + rj * t
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.contains_within(p, 0.0)
    }

    /// Membership in the contour grown by `margin_km`.
    pub fn contains_within(&self, p: GeoPoint, margin_km: f64) -> bool {
        let d = distance_km(self.center, p);
        if d == 0.0 {
            return true;
        }
        d <= self.expanded_radius_at(bearing_deg(self.center, p), margin_km)
    }

    pub fn max_radius_km(&self) -> f64 {
        self.radii_km.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_radius_km(&self) -> f64 {
        self.radii_km.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grows every radius by `d_km`, capped at the model range.
    pub fn expanded(&self, d_km: f64) -> RadialContour {
        RadialContour {
            center: self.center,
            radii_km: self.radii_km.iter().map(|r| (r + d_km).min(MAX_RADIUS_KM)).collect(),
        }
    }

    /// Closed ring of 361 vertices (first vertex repeated).
    pub fn ring(&self) -> Vec<GeoPoint> {
        let mut pts: Vec<GeoPoint> = (0..AZIMUTHS)
            .map(|az| destination(self.center, az as f64, self.radii_km[az]))
            .collect();
        pts.push(pts[0]);
        pts
    }

    pub fn to_geojson_polygon(&self) -> Value {
        let coords: Vec<Value> = self.ring().iter().map(|p| json!([p.lon_deg, p.lat_deg])).collect();
        json!({ "type": "Polygon", "coordinates": [coords] })
    }
}

/// Contour plus separation for one station and one secondary relationship.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionRegion {
    pub transmitter_id: String,
    pub contour: RadialContour,
    pub separation_km: f64,
    pub region: RadialContour,
    /// Channel of the protected station.
    pub channel: Channel,
    pub relationship: Relationship,
}

impl ProtectionRegion {
    pub fn from_contour(
        transmitter_id: impl Into<String>,
        contour: RadialContour,
        separation_km: f64,
        channel: Channel,
        relationship: Relationship,
    ) -> Self {
        let region = contour.expanded(separation_km);
        ProtectionRegion {
            transmitter_id: transmitter_id.into(),
            contour,
            separation_km,
            region,
            channel,
            relationship,
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.region.contains(p)
    }

    pub fn to_geojson(&self) -> Value {
        let feature = |kind: &str, c: &RadialContour| {
            json!({
                "type": "Feature",
                "properties": {
                    "id": self.transmitter_id,
                    "kind": kind,
                    "channel": self.channel.number(),
                    "relationship": self.relationship,
                    "separation_km": self.separation_km,
                },
                "geometry": c.to_geojson_polygon(),
            })
        };
        json!({
            "type": "FeatureCollection",
            "features": [feature("contour", &self.contour), feature("region", &self.region)],
        })
    }
}

/// Union membership over a set of regions.
pub fn in_region(p: GeoPoint, regions: &[ProtectionRegion]) -> bool {
    regions.iter().any(|r| r.contains(p))
}

/// Path-loss budget available to the station before its signal falls to the
/// service threshold: P_t + G_r − Δ.
pub fn contour_target_db(tx: &TransmitterRecord, cfg: &Config, tables: &ProtectionTables) -> f64 {
    let f = tx.channel.frequency().mid_mhz;
    let threshold = dbu_to_dbm(tables.coverage_threshold_dbu(tx.service, tx.channel), f);
    tx.eirp_dbm + cfg.tv_rx_gain_dbi - threshold
}

/// Propagation inputs for one azimuth of a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthTerrain {
    pub haat_m: f64,
    pub delta_h_m: f64,
}

fn itm_for(tx: &TransmitterRecord, haat_m: f64, rx_height_m: f64, delta_h_m: f64) -> Result<ItmModel> {
    ItmModel::new(ItmParams::new(
        tx.channel.frequency().mid_mhz,
        haat_m.clamp(0.5, 3000.0),
        rx_height_m.clamp(0.5, 3000.0),
        delta_h_m,
    ))
}

/// Per-azimuth terrain and contour radius. Terrain irregularity is measured
/// out to the current contour estimate and refined a fixed number of times.
pub fn contour_azimuth(
    tx: &TransmitterRecord,
    terrain: &TerrainGrid,
    azimuth_deg: f64,
    cfg: &Config,
    tables: &ProtectionTables,
) -> Result<(f64, AzimuthTerrain)> {
    let h = haat(terrain, tx, azimuth_deg)?;
    let target = contour_target_db(tx, cfg, tables);
    let mut range_km = cfg.initial_contour_km;
    let mut dh = 0.0;
    let passes = if cfg.delta_h_override_m.is_some() { 1 } else { cfg.delta_h_iterations };
    for _ in 0..passes {
        dh = match cfg.delta_h_override_m {
            Some(d) => d,
            None => delta_h_clipped(terrain, tx.location, azimuth_deg, range_km)?,
        };
        let model = itm_for(tx, h, cfg.tv_rx_height_m, dh)?;
        range_km = inverse_loss(&model, target)?.distance_m / 1e3;
    }
    Ok((range_km, AzimuthTerrain { haat_m: h, delta_h_m: dh }))
}

pub fn protected_contour(
    tx: &TransmitterRecord,
    terrain: &TerrainGrid,
    cfg: &Config,
    tables: &ProtectionTables,
) -> Result<RadialContour> {
    let radii = (0..AZIMUTHS)
        .into_par_iter()
        .map(|az| contour_azimuth(tx, terrain, az as f64, cfg, tables).map(|(r, _)| r))
        .collect::<Result<Vec<f64>>>()?;
    RadialContour::new(tx.location, radii)
}

/// Contours and per-azimuth terrain of every station in a registry.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub contours: Vec<RadialContour>,
    pub terrain: Vec<Vec<AzimuthTerrain>>,
}

impl ContourSet {
    pub fn compute(
        registry: &[TransmitterRecord],
        terrain: &TerrainGrid,
        cfg: &Config,
        tables: &ProtectionTables,
    ) -> Result<Self> {
        let per_station = registry
            .par_iter()
            .map(|tx| {
                let rows = (0..AZIMUTHS)
                    .into_par_iter()
                    .map(|az| contour_azimuth(tx, terrain, az as f64, cfg, tables))
                    .collect::<Result<Vec<_>>>()?;
                let (radii, table): (Vec<f64>, Vec<AzimuthTerrain>) = rows.into_iter().unzip();
                Ok((RadialContour::new(tx.location, radii)?, table))
            })
            .collect::<Result<Vec<_>>>()?;
        let (contours, terrain) = per_station.into_iter().unzip();
        Ok(ContourSet { contours, terrain })
    }
}

/// Distance beyond the contour at which a secondary device no longer
/// violates the D/U ratio at an edge receiver.
pub fn min_separation_km(
    service: ServiceType,
    channel: Channel,
    dev: &DeviceParams,
    relationship: Relationship,
    cfg: &Config,
    tables: &ProtectionTables,
) -> f64 {
    let f = channel.frequency().mid_mhz;
    let threshold = dbu_to_dbm(tables.coverage_threshold_dbu(service, channel), f);
    let gamma0 = tables.du_ratio_db(service, relationship);
    let target = dev.eirp_dbm + cfg.tv_rx_gain_dbi - threshold + gamma0;
    let model = HataModel {
        f_mhz: f,
        h_b_m: dev.antenna_height_m,
        h_m_m: cfg.tv_rx_height_m,
        environment: cfg.hata_environment,
    };
    match inverse_loss(&model, target) {
        Ok(inv) => inv.distance_m / 1e3,
        // Hata is monotone in distance; reaching this would be a model bug
        Err(e) => unreachable!("hata inversion failed: {e}"),
    }
}

pub fn protection_region(
    tx: &TransmitterRecord,
    terrain: &TerrainGrid,
    dev: &DeviceParams,
    relationship: Relationship,
    cfg: &Config,
    tables: &ProtectionTables,
) -> Result<ProtectionRegion> {
    let contour = protected_contour(tx, terrain, cfg, tables)?;
    let d_ms = min_separation_km(tx.service, tx.channel, dev, relationship, cfg, tables);
    Ok(ProtectionRegion::from_contour(tx.id.clone(), contour, d_ms, tx.channel, relationship))
}
