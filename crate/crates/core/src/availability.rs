//! Channel availability at a point, the availability probability over a
//! study area, and channel-count statistics over random locations.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geodata::{bearing_deg, distance_km, GeoPoint, EARTH_RADIUS_KM};
use crate::protection::{min_separation_km, ProtectionRegion};
use crate::regulatory::{
    exclusion_checks, permissible_channels, Channel, DeviceClass, DeviceParams, Relationship,
    MICROPHONE_RESERVED, RADIO_ASTRONOMY_CHANNEL,
};
use crate::scenario::Scenario;

/// Rectangular latitude/longitude box sampled on a regular lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyArea {
    pub south_west: GeoPoint,
    pub north_east: GeoPoint,
    /// Lattice spacing along both axes (measured at the middle latitude).
    pub step_km: f64,
    /// Row-major validity flags, north row first; `None` keeps every cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
}

impl StudyArea {
    pub fn new(south_west: GeoPoint, north_east: GeoPoint, step_km: f64) -> Result<Self> {
        let area = StudyArea {
            south_west,
            north_east,
            step_km,
            mask: None,
        };
        area.validate()?;
        Ok(area)
    }

    /// Box of `2·half_width_km` on each side centered on `center`.
    pub fn square(center: GeoPoint, half_width_km: f64, step_km: f64) -> Result<Self> {
        let dlat = (half_width_km / EARTH_RADIUS_KM).to_degrees();
        let dlon = dlat / center.lat_deg.to_radians().cos();
        StudyArea::new(
            GeoPoint {
                lat_deg: center.lat_deg - dlat,
                lon_deg: center.lon_deg - dlon,
            },
            GeoPoint {
                lat_deg: center.lat_deg + dlat,
                lon_deg: center.lon_deg + dlon,
            },
            step_km,
        )
    }

    pub fn violations(&self) -> Vec<Error> {
        let mut v = Vec::new();
        for p in [self.south_west, self.north_east] {
            if let Err(e) = p.validate() {
                v.push(e);
            }
        }
        if !(self.north_east.lat_deg > self.south_west.lat_deg && self.north_east.lon_deg > self.south_west.lon_deg) {
            v.push(Error::invariant("area", "bounding box is degenerate"));
        }
        if !(self.step_km > 0.0 && self.step_km.is_finite()) {
            v.push(Error::invariant("step_km", format!("{} must be > 0", self.step_km)));
        } else if v.is_empty() {
            let (rows, cols) = self.dims();
            if let Some(m) = &self.mask {
                if m.len() != rows * cols {
                    v.push(Error::invariant(
                        "mask",
                        format!("{} flags for a {rows}x{cols} lattice", m.len()),
                    ));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn height_km(&self) -> f64 {
        EARTH_RADIUS_KM * (self.north_east.lat_deg - self.south_west.lat_deg).to_radians()
    }

    /// East-west extent at the middle latitude.
    pub fn width_km(&self) -> f64 {
        let mid = 0.5 * (self.north_east.lat_deg + self.south_west.lat_deg);
        EARTH_RADIUS_KM * (self.north_east.lon_deg - self.south_west.lon_deg).to_radians() * mid.to_radians().cos()
    }

    /// Lattice `(rows, cols)`.
    pub fn dims(&self) -> (usize, usize) {
        let n = |extent: f64| ((extent / self.step_km).round() as usize).max(1);
        (n(self.height_km()), n(self.width_km()))
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat_deg: 0.5 * (self.south_west.lat_deg + self.north_east.lat_deg),
            lon_deg: 0.5 * (self.south_west.lon_deg + self.north_east.lon_deg),
        }
    }

    /// Center of lattice cell `(row, col)`, row 0 on the north edge.
    pub fn cell_center(&self, row: usize, col: usize) -> GeoPoint {
        let (rows, cols) = self.dims();
        let dlat = self.north_east.lat_deg - self.south_west.lat_deg;
        let dlon = self.north_east.lon_deg - self.south_west.lon_deg;
        GeoPoint {
            lat_deg: self.north_east.lat_deg - (row as f64 + 0.5) * dlat / rows as f64,
            lon_deg: self.south_west.lon_deg + (col as f64 + 0.5) * dlon / cols as f64,
        }
    }

    pub fn is_valid_cell(&self, index: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[index])
    }

    /// Every lattice cell as `(row-major index, center)`, masked cells included.
    pub fn cells(&self) -> Vec<(usize, GeoPoint)> {
        let (rows, cols) = self.dims();
        (0..rows * cols)
            .map(|k| (k, self.cell_center(k / cols, k % cols)))
            .collect()
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.south_west.lat_deg..=self.north_east.lat_deg).contains(&p.lat_deg)
            && (self.south_west.lon_deg..=self.north_east.lon_deg).contains(&p.lon_deg)
    }

    /// Surface area of the box on the sphere.
    pub fn area_km2(&self) -> f64 {
        let dlon = (self.north_east.lon_deg - self.south_west.lon_deg).to_radians();
        let s = self.north_east.lat_deg.to_radians().sin() - self.south_west.lat_deg.to_radians().sin();
        EARTH_RADIUS_KM * EARTH_RADIUS_KM * dlon * s
    }

    /// Points uniformly distributed over the box surface, masked cells
    /// rejected.
    pub fn random_points(&self, n: usize, seed: u64) -> Vec<GeoPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = self.south_west.lat_deg.to_radians().sin();
        let s1 = self.north_east.lat_deg.to_radians().sin();
        let (rows, cols) = self.dims();
        let mut out = Vec::with_capacity(n);
        let any_valid = self.mask.as_ref().is_none_or(|m| m.iter().any(|&b| b));
        if !any_valid {
            return out;
        }
        while out.len() < n {
            let lat = rng.random_range(s0..s1).asin().to_degrees();
            let lon = rng.random_range(self.south_west.lon_deg..self.north_east.lon_deg);
            let p = GeoPoint { lat_deg: lat, lon_deg: lon };
            let fr = (self.north_east.lat_deg - lat) / (self.north_east.lat_deg - self.south_west.lat_deg);
            let fc = (lon - self.south_west.lon_deg) / (self.north_east.lon_deg - self.south_west.lon_deg);
            let r = ((fr * rows as f64) as usize).min(rows - 1);
            let c = ((fc * cols as f64) as usize).min(cols - 1);
            if self.is_valid_cell(r * cols + c) {
                out.push(p);
            }
        }
        out
    }
}

/// Outcome of the availability check for one channel at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelStatus {
    Unavailable,
    Available,
    /// Usable inside an adjacent-channel region at the reduced portable
    /// power limit.
    ReducedPower,
}

impl ChannelStatus {
    pub fn is_available(self) -> bool {
        self != ChannelStatus::Unavailable
    }
}

fn relationship_index(r: Relationship) -> usize {
    match r {
        Relationship::Co => 0,
        Relationship::UpperAdj => 1,
        Relationship::LowerAdj => 2,
    }
}

const RELATIONSHIPS: [Relationship; 3] = [Relationship::Co, Relationship::UpperAdj, Relationship::LowerAdj];

/// Protection regions of every station for one secondary device.
pub struct AvailabilityMap<'a> {
    scenario: &'a Scenario,
    dev: DeviceParams,
    /// Separation per station, indexed by relationship.
    separations: Vec<[f64; 3]>,
    /// Largest region radius per station, for quick rejection.
    reach_km: Vec<f64>,
}

impl<'a> AvailabilityMap<'a> {
    pub fn new(scenario: &'a Scenario, dev: DeviceParams) -> Result<Self> {
        dev.validate()?;
        let contours = scenario.contours()?;
        let cfg = scenario.config();
        let tables = scenario.tables();
        let separations: Vec<[f64; 3]> = scenario
            .registry()
            .iter()
            .map(|tx| RELATIONSHIPS.map(|rel| min_separation_km(tx.service, tx.channel, &dev, rel, cfg, tables)))
            .collect();
        let reach_km = contours
            .contours
            .iter()
            .zip(&separations)
            .map(|(c, s)| c.max_radius_km() + s.iter().copied().fold(0.0, f64::max))
            .collect();
        Ok(AvailabilityMap {
            scenario,
            dev,
            separations,
            reach_km,
        })
    }

    pub fn device(&self) -> &DeviceParams {
        &self.dev
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// Separation of station `index` for a secondary in `relationship`.
    pub fn separation_km(&self, index: usize, relationship: Relationship) -> f64 {
        self.separations[index][relationship_index(relationship)]
    }

    pub fn status(&self, q: GeoPoint, channel: Channel) -> ChannelStatus {
        if !permissible_channels(self.dev.device_class).contains(&channel) {
            return ChannelStatus::Unavailable;
        }
        if !exclusion_checks(q, channel, self.scenario.sites()).is_empty() {
            return ChannelStatus::Unavailable;
        }
        let contours = &self
            .scenario
            .contours()
            .expect("contours are computed when the map is built")
            .contours;
        let mut reduced = false;
        for (i, tx) in self.scenario.registry().iter().enumerate() {
            let Some(rel) = Relationship::between(tx.channel, channel) else {
                continue;
            };
            if distance_km(tx.location, q) > self.reach_km[i] {
                continue;
            }
            if !contours[i].contains_within(q, self.separations[i][relationship_index(rel)]) {
                continue;
            }
            match (rel, self.dev.device_class) {
                (Relationship::Co, _) | (_, DeviceClass::Fixed) => return ChannelStatus::Unavailable,
                (_, DeviceClass::Portable) => reduced = true,
            }
        }
        if reduced {
            ChannelStatus::ReducedPower
        } else {
            ChannelStatus::Available
        }
    }

    /// True when `q` lies inside the protected contour of a station on
    /// `channel`.
    pub fn busy(&self, q: GeoPoint, channel: Channel) -> bool {
        let contours = &self
            .scenario
            .contours()
            .expect("contours are computed when the map is built")
            .contours;
        self.scenario
            .registry()
            .iter()
            .zip(contours)
            .any(|(tx, c)| tx.channel == channel && c.contains(q))
    }

    /// Permissible channels at `q` with their status, unavailable ones
    /// omitted, sorted by channel.
    pub fn available_set(&self, q: GeoPoint) -> Vec<(Channel, ChannelStatus)> {
        permissible_channels(self.dev.device_class)
            .into_iter()
            .map(|c| (c, self.status(q, c)))
            .filter(|(_, s)| s.is_available())
            .collect()
    }

    /// Region of station `index` in `relationship`.
    pub fn region(&self, index: usize, relationship: Relationship) -> Result<ProtectionRegion> {
        let tx = &self.scenario.registry()[index];
        let contour = self.scenario.contours()?.contours[index].clone();
        Ok(ProtectionRegion::from_contour(
            tx.id.clone(),
            contour,
            self.separation_km(index, relationship),
            tx.channel,
            relationship,
        ))
    }

    pub fn probability(&self, channel: Channel, area: &StudyArea) -> AvailabilityResult {
        let (rows, cols) = area.dims();
        let cells: Vec<Option<ChannelStatus>> = area
            .cells()
            .into_par_iter()
            .map(|(k, q)| area.is_valid_cell(k).then(|| self.status(q, channel)))
            .collect();
        let n_samples = cells.iter().filter(|c| c.is_some()).count();
        let n_available = cells.iter().filter(|c| c.is_some_and(ChannelStatus::is_available)).count();
        let p = if n_samples == 0 {
            0.0
        } else {
            n_available as f64 / n_samples as f64
        };
        AvailabilityResult {
            channel,
            p,
            n_samples,
            n_available,
            rows,
            cols,
            cells,
        }
    }
}

/// Availability of one channel over a study-area lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityResult {
    pub channel: Channel,
    pub p: f64,
    pub n_samples: usize,
    pub n_available: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, north row first; `None` for masked cells.
    pub cells: Vec<Option<ChannelStatus>>,
}

impl AvailabilityResult {
    pub const CSV_HEADER: &'static str = "lat,lon,channel,available,reduced_power_flag";

    /// One row per unmasked lattice cell.
    pub fn write_csv<W: Write>(&self, area: &StudyArea, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for (k, status) in self.cells.iter().enumerate() {
            let Some(s) = status else { continue };
            let q = area.cell_center(k / self.cols, k % self.cols);
            writeln!(
                w,
                "{:.6},{:.6},{},{},{}",
                q.lat_deg,
                q.lon_deg,
                self.channel,
                u8::from(s.is_available()),
                u8::from(*s == ChannelStatus::ReducedPower)
            )?;
        }
        Ok(())
    }

    /// Point features, one per unmasked lattice cell.
    pub fn to_geojson(&self, area: &StudyArea) -> Value {
        let features: Vec<Value> = self
            .cells
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|s| (k, s)))
            .map(|(k, s)| {
                let q = area.cell_center(k / self.cols, k % self.cols);
                json!({
                    "type": "Feature",
                    "geometry": { "type": "Point", "coordinates": [q.lon_deg, q.lat_deg] },
                    "properties": {
                        "channel": self.channel.number(),
                        "available": s.is_available(),
                        "reduced_power": s == ChannelStatus::ReducedPower,
                    },
                })
            })
            .collect();
        json!({
            "type": "FeatureCollection",
            "properties": { "channel": self.channel.number(), "p": self.p, "n_samples": self.n_samples },
            "features": features,
        })
    }
}

pub fn channel_available(q: GeoPoint, channel: Channel, dev: &DeviceParams, scenario: &Scenario) -> Result<bool> {
    Ok(AvailabilityMap::new(scenario, *dev)?.status(q, channel).is_available())
}

pub fn available_set(q: GeoPoint, dev: &DeviceParams, scenario: &Scenario) -> Result<Vec<(Channel, ChannelStatus)>> {
    Ok(AvailabilityMap::new(scenario, *dev)?.available_set(q))
}

pub fn availability_probability(
    channel: Channel,
    dev: &DeviceParams,
    scenario: &Scenario,
    area: &StudyArea,
) -> Result<AvailabilityResult> {
    area.validate()?;
    Ok(AvailabilityMap::new(scenario, *dev)?.probability(channel, area))
}

/// Channel groups used by the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandGroup {
    /// Channels 2 to 6.
    LowVhf,
    /// Channels 7 to 13.
    HighVhf,
    /// Channels 14 to 51 without 37.
    LowUhf,
}

impl BandGroup {
    pub const ALL: [BandGroup; 3] = [BandGroup::LowVhf, BandGroup::HighVhf, BandGroup::LowUhf];

    pub fn channels(self) -> Vec<Channel> {
        let range = match self {
            BandGroup::LowVhf => 2..=6u8,
            BandGroup::HighVhf => 7..=13,
            BandGroup::LowUhf => 14..=51,
        };
        range
            .filter(|&c| c != RADIO_ASTRONOMY_CHANNEL)
            .map(|c| Channel::new(c).expect("band channels are valid"))
            .collect()
    }

    pub fn size(self) -> u32 {
        self.channels().len() as u32
    }

    pub fn of(channel: Channel) -> Option<BandGroup> {
        BandGroup::ALL.into_iter().find(|g| g.channels().contains(&channel))
    }

    pub fn label(self) -> &'static str {
        match self {
            BandGroup::LowVhf => "LVHF",
            BandGroup::HighVhf => "HVHF",
            BandGroup::LowUhf => "LUHF",
        }
    }

    /// Channels of the group held back for wireless microphones.
    pub fn microphone_reserved(self) -> u32 {
        self.channels()
            .iter()
            .filter(|c| MICROPHONE_RESERVED.contains(&c.number()))
            .count() as u32
    }
}

/// Channel counts in one band group at one location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BandCount {
    /// Channels open to at least one device class.
    pub total: u32,
    pub fixed: u32,
    pub portable: u32,
    /// Channels whose protected contour covers the location.
    pub busy: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCounts {
    pub location: GeoPoint,
    pub density_per_sq_mi: f64,
    pub urban: bool,
    /// Indexed like [`BandGroup::ALL`].
    pub bands: [BandCount; 3],
}

impl PointCounts {
    pub fn total(&self) -> u32 {
        self.bands.iter().map(|b| b.total).sum()
    }
    pub fn fixed(&self) -> u32 {
        self.bands.iter().map(|b| b.fixed).sum()
    }
    pub fn portable(&self) -> u32 {
        self.bands.iter().map(|b| b.portable).sum()
    }
}

/// Sums of per-location counts in one band group (or all groups).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BandSums {
    pub n_points: u64,
    pub band_size: u32,
    pub microphone_reserved: u32,
    pub total: u64,
    pub fixed: u64,
    pub portable: u64,
    pub busy: u64,
}

impl BandSums {
    /// Mean per location; NaN for an empty subset.
    fn mean(&self, x: u64) -> f64 {
        if self.n_points == 0 {
            f64::NAN
        } else {
            x as f64 / self.n_points as f64
        }
    }
    pub fn mean_total(&self) -> f64 {
        self.mean(self.total)
    }
    pub fn mean_fixed(&self) -> f64 {
        self.mean(self.fixed)
    }
    pub fn mean_portable(&self) -> f64 {
        self.mean(self.portable)
    }
    pub fn mean_busy(&self) -> f64 {
        self.mean(self.busy)
    }
    /// Channels neither available nor occupied by a local station.
    pub fn mean_unused(&self) -> f64 {
        self.band_size as f64 - self.mean_total() - self.mean_busy()
    }
    /// Channel-utilization factor, 1 − unused / band size.
    pub fn cuf(&self) -> f64 {
        1.0 - self.mean_unused() / self.band_size as f64
    }
}

/// Band sums and empirical CDFs over one set of locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub bands: [BandSums; 3],
    pub all: BandSums,
    /// `cdf[x]` is the fraction of locations with at most `x` channels,
    /// `x` in `0..=50`.
    pub cdf_total: Vec<f64>,
    pub cdf_fixed: Vec<f64>,
    pub cdf_portable: Vec<f64>,
}

pub const CDF_MAX_CHANNELS: usize = 50;

/// Fraction of counts at or below each channel count 0..=50; counts above 50
/// fall in the last bin. An empty sample gives 1 everywhere.
pub fn empirical_cdf(counts: impl Iterator<Item = u32>) -> Vec<f64> {
    let mut hist = vec![0u64; CDF_MAX_CHANNELS + 1];
    let mut n = 0u64;
    for c in counts {
        hist[(c as usize).min(CDF_MAX_CHANNELS)] += 1;
        n += 1;
    }
    let mut acc = 0u64;
    hist.iter()
        .map(|h| {
            acc += h;
            if n == 0 {
                1.0
            } else {
                acc as f64 / n as f64
            }
        })
        .collect()
}

impl StatsTable {
    pub fn from_points<'p>(points: impl Iterator<Item = &'p PointCounts> + Clone) -> Self {
        let mut bands = BandGroup::ALL.map(|g| BandSums {
            band_size: g.size(),
            microphone_reserved: g.microphone_reserved(),
            ..BandSums::default()
        });
        for p in points.clone() {
            for (sum, c) in bands.iter_mut().zip(&p.bands) {
                sum.n_points += 1;
                sum.total += u64::from(c.total);
                sum.fixed += u64::from(c.fixed);
                sum.portable += u64::from(c.portable);
                sum.busy += u64::from(c.busy);
            }
        }
        let all = BandSums {
            n_points: bands[0].n_points,
            band_size: bands.iter().map(|b| b.band_size).sum(),
            microphone_reserved: bands.iter().map(|b| b.microphone_reserved).sum(),
            total: bands.iter().map(|b| b.total).sum(),
            fixed: bands.iter().map(|b| b.fixed).sum(),
            portable: bands.iter().map(|b| b.portable).sum(),
            busy: bands.iter().map(|b| b.busy).sum(),
        };
        StatsTable {
            bands,
            all,
            cdf_total: empirical_cdf(points.clone().map(PointCounts::total)),
            cdf_fixed: empirical_cdf(points.clone().map(PointCounts::fixed)),
            cdf_portable: empirical_cdf(points.map(PointCounts::portable)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub all: StatsTable,
    pub urban: StatsTable,
    pub rural: StatsTable,
    pub points: Vec<PointCounts>,
}

impl Statistics {
    pub const CSV_HEADER: &'static str =
        "subset,band,points,band_size,total,fixed,portable,microphone_reserved,busy,unused,cuf";

    /// Mean counts per subset and band group, plus an `ALL` row per subset.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for (subset, t) in [("all", &self.all), ("urban", &self.urban), ("rural", &self.rural)] {
            let rows = BandGroup::ALL
                .iter()
                .map(|g| g.label())
                .zip(t.bands.iter())
                .chain(std::iter::once(("ALL", &t.all)));
            for (label, b) in rows {
                writeln!(
                    w,
                    "{subset},{label},{},{},{:.4},{:.4},{:.4},{},{:.4},{:.4},{:.4}",
                    b.n_points,
                    b.band_size,
                    b.mean_total(),
                    b.mean_fixed(),
                    b.mean_portable(),
                    b.microphone_reserved,
                    b.mean_busy(),
                    b.mean_unused(),
                    b.cuf()
                )?;
            }
        }
        Ok(())
    }

    /// CDF table `x,total,fixed,portable` over all locations.
    pub fn write_cdf_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,total,fixed,portable")?;
        for x in 0..=CDF_MAX_CHANNELS {
            writeln!(
                w,
                "{x},{:.6},{:.6},{:.6}",
                self.all.cdf_total[x], self.all.cdf_fixed[x], self.all.cdf_portable[x]
            )?;
        }
        Ok(())
    }
}

/// Per-station region membership at one location.
#[derive(Clone, Copy, Default)]
struct StationHit {
    in_contour: bool,
    /// `[co, upper adjacent, lower adjacent]`.
    fixed: [bool; 3],
    portable: [bool; 3],
}

fn band_counts(
    q: GeoPoint,
    scenario: &Scenario,
    fixed: &AvailabilityMap<'_>,
    portable: &AvailabilityMap<'_>,
) -> Result<[BandCount; 3]> {
    let contours = &scenario.contours()?.contours;
    let registry = scenario.registry();
    let hits: Vec<StationHit> = registry
        .iter()
        .enumerate()
        .map(|(i, tx)| {
            let c = &contours[i];
            let d = distance_km(tx.location, q);
            let az = bearing_deg(tx.location, q);
            let inside = |margin: f64| d == 0.0 || d <= c.expanded_radius_at(az, margin);
            StationHit {
                in_contour: inside(0.0),
                fixed: RELATIONSHIPS.map(|r| inside(fixed.separation_km(i, r))),
                portable: RELATIONSHIPS.map(|r| inside(portable.separation_km(i, r))),
            }
        })
        .collect();
    let fixed_ok = permissible_channels(DeviceClass::Fixed);
    let portable_ok = permissible_channels(DeviceClass::Portable);

    let mut out = [BandCount::default(); 3];
    for (g, count) in BandGroup::ALL.iter().zip(out.iter_mut()) {
        for ch in g.channels() {
            let n = i32::from(ch.number());
            let mut busy = false;
            let mut fixed_blocked = !fixed_ok.contains(&ch);
            let mut portable_blocked = !portable_ok.contains(&ch);
            for (tx, h) in registry.iter().zip(&hits) {
                // secondary relative to station: same, one above, one below
                let idx = match n - i32::from(tx.channel.number()) {
                    0 => 0,
                    1 => 1,
                    -1 => 2,
                    _ => continue,
                };
                if idx == 0 {
                    busy |= h.in_contour;
                    portable_blocked |= h.portable[0];
                }
                fixed_blocked |= h.fixed[idx];
            }
            if !fixed_blocked || !portable_blocked {
                let excluded = !exclusion_checks(q, ch, scenario.sites()).is_empty();
                fixed_blocked |= excluded;
                portable_blocked |= excluded;
            }
            count.busy += u32::from(busy);
            count.fixed += u32::from(!fixed_blocked);
            count.portable += u32::from(!portable_blocked);
            count.total += u32::from(!fixed_blocked || !portable_blocked);
        }
    }
    Ok(out)
}

/// Channel counts at `n_points` seeded uniform locations in `area` for the
/// largest fixed and portable devices the rules allow, split into urban
/// and rural locations at `population_threshold` people per square mile.
pub fn statistics(scenario: &Scenario, area: &StudyArea, n_points: usize, population_threshold: f64) -> Result<Statistics> {
    if n_points == 0 {
        return Err(Error::invariant("n_points", "must be >= 1"));
    }
    area.validate()?;
    let fixed = AvailabilityMap::new(scenario, DeviceParams::at_limits(DeviceClass::Fixed))?;
    let portable = AvailabilityMap::new(scenario, DeviceParams::at_limits(DeviceClass::Portable))?;
    let fallback = scenario.config().population_density_per_sq_mi;
    let points: Vec<PointCounts> = area
        .random_points(n_points, scenario.seed())
        .into_par_iter()
        .map(|q| {
            let density = scenario
                .population()
                .and_then(|pop| pop.density_at(q).ok())
                .unwrap_or(fallback);
            Ok(PointCounts {
                location: q,
                density_per_sq_mi: density,
                urban: density >= population_threshold,
                bands: band_counts(q, scenario, &fixed, &portable)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Statistics {
        all: StatsTable::from_points(points.iter()),
        urban: StatsTable::from_points(points.iter().filter(|p| p.urban)),
        rural: StatsTable::from_points(points.iter().filter(|p| !p.urban)),
        points,
    })
}
