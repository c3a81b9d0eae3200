//! Transmitter emission masks, adjacent-channel leakage, aggregate
//! interference from TV stations and co-channel interference inside a
//! secondary reuse pattern.

use std::io::Read;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{bearing_deg, distance_km, GeoPoint, TransmitterRecord};
use crate::numeric::{dbm_to_mw, integrate, mw_to_dbm, pairwise_sum};
use crate::propagation::{ItmModel, ItmParams, PathLossModel, ITM_MIN_DISTANCE_M};
use crate::protection::{AzimuthTerrain, AZIMUTHS};
use crate::regulatory::{Channel, DeviceParams, StationClass, CHANNEL_WIDTH_MHZ};

/// One piece of a mask: level at `start_mhz` plus `slope_db_per_mhz` per MHz
/// beyond it. Offsets are measured from the channel edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSegment {
    pub start_mhz: f64,
    pub end_mhz: f64,
    pub level_db: f64,
    pub slope_db_per_mhz: f64,
}

impl MaskSegment {
    /// Mask level at `offset_mhz` from the channel edge.
    pub fn level_at(&self, offset_mhz: f64) -> f64 {
        self.level_db + self.slope_db_per_mhz * (offset_mhz - self.start_mhz)
    }
}

/// Out-of-channel emission limit in dB relative to in-channel power,
/// symmetric about the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionMask {
    segments: Vec<MaskSegment>,
}

impl EmissionMask {
    pub fn new(segments: Vec<MaskSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invariant("segments", "mask has no segments"));
        }
        if segments[0].start_mhz != 0.0 {
            return Err(Error::invariant("segments", "mask must start at the channel edge"));
        }
        for w in segments.windows(2) {
            if w[0].end_mhz != w[1].start_mhz {
                return Err(Error::invariant(
                    "segments",
                    format!("gap or overlap at {} MHz", w[0].end_mhz),
                ));
            }
        }
        for s in &segments {
            if !(s.end_mhz > s.start_mhz) {
                return Err(Error::invariant("segments", format!("empty segment at {} MHz", s.start_mhz)));
            }
            let end_level = if s.end_mhz.is_finite() {
                s.level_at(s.end_mhz)
            } else if s.slope_db_per_mhz > 0.0 {
                f64::INFINITY
            } else {
                s.level_db
            };
            if s.level_db > 0.0 || end_level > 0.0 {
                return Err(Error::invariant("segments", "mask levels must be <= 0 dB"));
            }
        }
        if segments.last().is_some_and(|s| s.end_mhz != f64::INFINITY) {
            return Err(Error::invariant("segments", "mask must extend to infinite offset"));
        }
        Ok(EmissionMask { segments })
    }

    pub fn segments(&self) -> &[MaskSegment] {
        &self.segments
    }

    /// Level in dB at `offset_mhz` from the channel edge (either side).
    pub fn level_db(&self, offset_mhz: f64) -> f64 {
        let x = offset_mhz.abs();
        let seg = self
            .segments
            .iter()
            .find(|s| x >= s.start_mhz && x < s.end_mhz)
            .unwrap_or(&self.segments[self.segments.len() - 1]);
        seg.level_at(x)
    }

    /// Full-service 8-VSB transmitter limits.
    pub fn full_service() -> Self {
        EmissionMask {
            segments: vec![
                MaskSegment { start_mhz: 0.0, end_mhz: 0.5, level_db: -47.0, slope_db_per_mhz: 0.0 },
                MaskSegment { start_mhz: 0.5, end_mhz: 6.0, level_db: -47.0, slope_db_per_mhz: -11.5 },
                MaskSegment { start_mhz: 6.0, end_mhz: f64::INFINITY, level_db: -110.0, slope_db_per_mhz: 0.0 },
            ],
        }
    }

    /// Low-power, Class A and translator limits.
    pub fn low_power() -> Self {
        EmissionMask {
            segments: vec![
                MaskSegment { start_mhz: 0.0, end_mhz: 0.5, level_db: -47.0, slope_db_per_mhz: 0.0 },
                MaskSegment { start_mhz: 0.5, end_mhz: 3.0, level_db: -47.0, slope_db_per_mhz: -11.5 },
                MaskSegment { start_mhz: 3.0, end_mhz: f64::INFINITY, level_db: -76.0, slope_db_per_mhz: 0.0 },
            ],
        }
    }

    /// Reads CSV `offset_start_mhz,offset_end_mhz,level_db_dtv,slope_db_per_mhz`;
    /// the last end may be `inf`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            offset_start_mhz: f64,
            offset_end_mhz: f64,
            level_db_dtv: f64,
            slope_db_per_mhz: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut segments = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let r = row.map_err(|e| Error::Parse { row: i + 2, reason: e.to_string() })?;
            segments.push(MaskSegment {
                start_mhz: r.offset_start_mhz,
                end_mhz: r.offset_end_mhz,
                level_db: r.level_db_dtv,
                slope_db_per_mhz: r.slope_db_per_mhz,
            });
        }
        EmissionMask::new(segments)
    }
}

/// Fraction of in-channel power leaking into the channel `channel_offset`
/// away (±1 or ±2).
pub fn leakage_factor(mask: &EmissionMask, channel_offset: i32) -> Result<f64> {
    let k = channel_offset.unsigned_abs();
    if !(1..=2).contains(&k) {
        return Err(Error::Domain(format!("channel offset {channel_offset} not in ±1, ±2")));
    }
    let lo = CHANNEL_WIDTH_MHZ * (k - 1) as f64;
    let hi = CHANNEL_WIDTH_MHZ * k as f64;
    // integrate piecewise so every sub-integral is smooth
    let parts: Vec<f64> = mask
        .segments
        .iter()
        .filter_map(|s| {
            let a = s.start_mhz.max(lo);
            let b = s.end_mhz.min(hi);
            (b > a).then(|| integrate(|x| 10f64.powf(s.level_at(x) / 10.0), a, b, 1e-9))
        })
        .collect();
    Ok(pairwise_sum(&parts))
}

/// Mask that governs a station's out-of-channel emission.
pub fn mask_for(class: StationClass) -> &'static EmissionMask {
    static FULL: OnceLock<EmissionMask> = OnceLock::new();
    static LOW: OnceLock<EmissionMask> = OnceLock::new();
    match class {
        StationClass::Full => FULL.get_or_init(EmissionMask::full_service),
        StationClass::ClassA | StationClass::Lptv | StationClass::Translator => {
            LOW.get_or_init(EmissionMask::low_power)
        }
    }
}

/// `[η±1, η±2]` of a station class, cached.
pub fn leakage_pair(class: StationClass) -> [f64; 2] {
    static FULL: OnceLock<[f64; 2]> = OnceLock::new();
    static LOW: OnceLock<[f64; 2]> = OnceLock::new();
    let compute = |c| {
        let m = mask_for(c);
        [leakage_factor(m, 1).unwrap(), leakage_factor(m, 2).unwrap()]
    };
    match class {
        StationClass::Full => *FULL.get_or_init(|| compute(StationClass::Full)),
        _ => *LOW.get_or_init(|| compute(StationClass::Lptv)),
    }
}

/// Weight applied to a station's EIRP as seen on `channel`: full power on
/// its own channel, mask leakage on the two neighbours each side.
pub fn channel_weight(station: Channel, class: StationClass, channel: Channel) -> f64 {
    let [eta1, eta2] = leakage_pair(class);
    match (i32::from(channel.number()) - i32::from(station.number())).abs() {
        0 => 1.0,
        1 => eta1,
        2 => eta2,
        _ => 0.0,
    }
}

/// An aggregate interference level; the empty sum is kept distinct from
/// any finite dBm value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Interference {
    NoInterference,
    Dbm(f64),
}

impl Interference {
    pub fn from_mw(mw: f64) -> Self {
        if mw > 0.0 {
            Interference::Dbm(mw_to_dbm(mw))
        } else {
            Interference::NoInterference
        }
    }

    pub fn mw(self) -> f64 {
        match self {
            Interference::NoInterference => 0.0,
            Interference::Dbm(d) => dbm_to_mw(d),
        }
    }

    pub fn dbm(self) -> f64 {
        match self {
            Interference::NoInterference => f64::NEG_INFINITY,
            Interference::Dbm(d) => d,
        }
    }
}

struct StationPaths {
    tx: TransmitterRecord,
    /// One model per integer azimuth.
    models: Vec<ItmModel>,
}

/// Precomputed per-azimuth loss models for every station, for repeated
/// primary-to-secondary interference queries at one receiver height.
pub struct P2sField {
    stations: Vec<StationPaths>,
    rx_gain_dbi: f64,
    max_distance_km: f64,
}

impl P2sField {
    /// `terrain[i]` holds the azimuth table of `registry[i]`.
    pub fn new(
        registry: &[TransmitterRecord],
        terrain: &[Vec<AzimuthTerrain>],
        rx_height_m: f64,
        rx_gain_dbi: f64,
        max_distance_km: f64,
    ) -> Result<Self> {
        if registry.len() != terrain.len() {
            return Err(Error::invariant("terrain", "one azimuth table per station required"));
        }
        let stations = registry
            .iter()
            .zip(terrain)
            .map(|(tx, table)| {
                if table.len() != AZIMUTHS {
                    return Err(Error::invariant("terrain", "azimuth table must have 360 entries"));
                }
                let models = table
                    .iter()
                    .map(|t| {
                        ItmModel::new(ItmParams::new(
                            tx.channel.frequency().mid_mhz,
                            t.haat_m.clamp(0.5, 3000.0),
                            rx_height_m.clamp(0.5, 3000.0),
                            t.delta_h_m,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(StationPaths { tx: tx.clone(), models })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(P2sField {
            stations,
            rx_gain_dbi,
            max_distance_km,
        })
    }

    /// Received power contributions (mW) of every station at `q` on `channel`.
    pub fn contributions_mw(&self, q: GeoPoint, channel: Channel) -> Vec<f64> {
        self.stations
            .iter()
            .filter_map(|s| {
                let w = channel_weight(s.tx.channel, s.tx.service.class, channel);
                if w == 0.0 {
                    return None;
                }
                let d_km = distance_km(s.tx.location, q);
                if d_km > self.max_distance_km {
                    return None;
                }
                let az = bearing_deg(s.tx.location, q).round() as usize % AZIMUTHS;
                let loss = s.models[az].loss_db((d_km * 1e3).max(ITM_MIN_DISTANCE_M));
                Some(w * dbm_to_mw(s.tx.eirp_dbm - loss + self.rx_gain_dbi))
            })
            .collect()
    }

    pub fn interference(&self, q: GeoPoint, channel: Channel) -> Interference {
        Interference::from_mw(pairwise_sum(&self.contributions_mw(q, channel)))
    }
}

/// Hexagonal reuse pattern with shift parameters `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReusePlan {
    pub i: u32,
    pub j: u32,
    pub r_cell_km: f64,
    /// Interferers per tier.
    pub k_i: u32,
}

impl ReusePlan {
    pub fn new(i: u32, j: u32, r_cell_km: f64) -> Result<Self> {
        let p = ReusePlan { i, j, r_cell_km, k_i: 6 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.i == 0 && self.j == 0 {
            return Err(Error::invariant("reuse", "shift parameters must not both be 0"));
        }
        if !(self.r_cell_km > 0.0) {
            return Err(Error::invariant("r_cell_km", "must be > 0"));
        }
        Ok(())
    }

    /// Cluster size i² + ij + j².
    pub fn k(&self) -> u32 {
        self.i * self.i + self.i * self.j + self.j * self.j
    }
}

/// Co-channel reuse distance √(3K)·r_cell.
pub fn reuse_distance_km(plan: &ReusePlan) -> f64 {
    (3.0 * plan.k() as f64).sqrt() * plan.r_cell_km
}

/// Distance to the interfering cell shifted by `(a, b)` reuse steps.
pub fn tier_distance_km(plan: &ReusePlan, a: u32, b: u32) -> f64 {
    ((a * a + a * b + b * b) as f64).sqrt() * reuse_distance_km(plan)
}

/// Tier shifts `(a, b)` with `0 <= a <= b <= 2`, excluding `(0, 0)`.
pub const TIER_SHIFTS: [(u32, u32); 5] = [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Aggregate co-channel interference at a cell center from the given tiers.
pub fn s2s_interference_over<M: PathLossModel + ?Sized>(
    plan: &ReusePlan,
    dev: &DeviceParams,
    loss_model: &M,
    shifts: &[(u32, u32)],
) -> Interference {
    if dev.eirp_dbm == f64::NEG_INFINITY {
        return Interference::NoInterference;
    }
    let terms: Vec<f64> = shifts
        .iter()
        .map(|&(a, b)| {
            let d_m = tier_distance_km(plan, a, b) * 1e3;
            let (lo, _) = loss_model.domain_m();
            let loss = loss_model.loss_db(d_m.max(lo));
            plan.k_i as f64 * dbm_to_mw(dev.eirp_dbm + dev.rx_gain_dbi - loss)
        })
        .collect();
    Interference::from_mw(pairwise_sum(&terms))
}

/// Aggregate co-channel interference over the standard tier set.
pub fn s2s_interference_dbm<M: PathLossModel + ?Sized>(
    plan: &ReusePlan,
    dev: &DeviceParams,
    loss_model: &M,
) -> Interference {
    s2s_interference_over(plan, dev, loss_model, &TIER_SHIFTS)
}
