//! FCC rules for TV-band devices: channel plan, permissible channels,
//! power and height caps, protected-contour field strengths, D/U ratios and
//! the PLMRS / radio-astronomy / wireless-microphone exclusions.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{distance_km, GeoPoint};

/// US TV channel number (2..=69).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Channel(u8);

impl Channel {
    pub fn new(n: u8) -> Result<Self> {
        if (2..=69).contains(&n) {
            Ok(Channel(n))
        } else {
            Err(Error::invariant("channel", format!("{n} not in 2..=69")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Neighbouring channel `offset` away, if it exists in the plan.
    pub fn offset(self, offset: i32) -> Option<Channel> {
        let n = i32::from(self.0) + offset;
        u8::try_from(n).ok().and_then(|n| Channel::new(n).ok())
    }

    pub fn band(self) -> Band {
        match self.0 {
            2..=6 => Band::LowVhf,
            7..=13 => Band::HighVhf,
            _ => Band::Uhf,
        }
    }

    pub fn frequency(self) -> ChannelFrequency {
        channel_frequency_mhz(self)
    }

    /// Channels 2..=51, the span used by the TV-band device rules.
    pub fn tv_band() -> impl Iterator<Item = Channel> {
        (2..=51).map(Channel)
    }
}

impl TryFrom<u8> for Channel {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        Channel::new(n)
    }
}

impl From<Channel> for u8 {
    fn from(c: Channel) -> u8 {
        c.0
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    LowVhf,
    HighVhf,
    Uhf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelFrequency {
    pub low_mhz: f64,
    pub mid_mhz: f64,
    pub high_mhz: f64,
}

/// Channel edges and center in the US 6 MHz channel plan.
pub fn channel_frequency_mhz(channel: Channel) -> ChannelFrequency {
    let n = f64::from(channel.number());
    let low = match channel.number() {
        2..=4 => 54.0 + (n - 2.0) * 6.0,
        5..=6 => 76.0 + (n - 5.0) * 6.0,
        7..=13 => 174.0 + (n - 7.0) * 6.0,
        _ => 470.0 + (n - 14.0) * 6.0,
    };
    ChannelFrequency {
        low_mhz: low,
        mid_mhz: low + 3.0,
        high_mhz: low + CHANNEL_WIDTH_MHZ,
    }
}

pub const CHANNEL_WIDTH_MHZ: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Analog,
    Digital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationClass {
    Full,
    ClassA,
    Lptv,
    Translator,
}

/// Broadcast service of a primary station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ServiceType {
    pub modulation: Modulation,
    pub class: StationClass,
}

impl ServiceType {
    pub const DIGITAL_FULL: ServiceType = ServiceType::new(Modulation::Digital, StationClass::Full);
    pub const DIGITAL_CLASS_A: ServiceType = ServiceType::new(Modulation::Digital, StationClass::ClassA);
    pub const DIGITAL_LPTV: ServiceType = ServiceType::new(Modulation::Digital, StationClass::Lptv);
    pub const DIGITAL_TRANSLATOR: ServiceType =
        ServiceType::new(Modulation::Digital, StationClass::Translator);
    pub const ANALOG_FULL: ServiceType = ServiceType::new(Modulation::Analog, StationClass::Full);
    pub const ANALOG_CLASS_A: ServiceType = ServiceType::new(Modulation::Analog, StationClass::ClassA);
    pub const ANALOG_LPTV: ServiceType = ServiceType::new(Modulation::Analog, StationClass::Lptv);
    pub const ANALOG_TRANSLATOR: ServiceType =
        ServiceType::new(Modulation::Analog, StationClass::Translator);

    pub const ALL: [ServiceType; 8] = [
        Self::DIGITAL_FULL,
        Self::DIGITAL_CLASS_A,
        Self::DIGITAL_LPTV,
        Self::DIGITAL_TRANSLATOR,
        Self::ANALOG_FULL,
        Self::ANALOG_CLASS_A,
        Self::ANALOG_LPTV,
        Self::ANALOG_TRANSLATOR,
    ];

    pub const fn new(modulation: Modulation, class: StationClass) -> Self {
        ServiceType { modulation, class }
    }
}

impl fmt::Display for ServiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.modulation {
            Modulation::Analog => "analog",
            Modulation::Digital => "digital",
        };
        let c = match self.class {
            StationClass::Full => "full",
            StationClass::ClassA => "class_a",
            StationClass::Lptv => "lptv",
            StationClass::Translator => "translator",
        };
        write!(f, "{m}_{c}")
    }
}

impl From<ServiceType> for String {
    fn from(s: ServiceType) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ServiceType {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for ServiceType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ServiceType::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::invariant("service", format!("unknown service `{s}`")))
    }
}

/// Position of a secondary channel relative to a protected station's channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    Co,
    /// The secondary operates one channel above the station.
    UpperAdj,
    /// The secondary operates one channel below the station.
    LowerAdj,
}

impl Relationship {
    /// Relationship of a secondary on `secondary` to a station on `station`.
    pub fn between(station: Channel, secondary: Channel) -> Option<Relationship> {
        match i32::from(secondary.number()) - i32::from(station.number()) {
            0 => Some(Relationship::Co),
            1 => Some(Relationship::UpperAdj),
            -1 => Some(Relationship::LowerAdj),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Fixed,
    Portable,
}

impl FromStr for DeviceClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DeviceClass::Fixed),
            "portable" => Ok(DeviceClass::Portable),
            _ => Err(Error::invariant("device_class", format!("unknown device class `{s}`"))),
        }
    }
}

/// Secondary device parameters governing availability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub device_class: DeviceClass,
    /// Transmit power plus antenna gain.
    pub eirp_dbm: f64,
    pub antenna_height_m: f64,
    pub antenna_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl DeviceParams {
    /// The largest device of each class the rules allow.
    pub fn at_limits(class: DeviceClass) -> Self {
        match class {
            DeviceClass::Fixed => DeviceParams {
                device_class: class,
                eirp_dbm: 36.0,
                antenna_height_m: 30.0,
                antenna_gain_dbi: 6.0,
                rx_gain_dbi: 0.0,
            },
            DeviceClass::Portable => DeviceParams {
                device_class: class,
                eirp_dbm: 20.0,
                antenna_height_m: 3.0,
                antenna_gain_dbi: 0.0,
                rx_gain_dbi: 0.0,
            },
        }
    }

    /// Cap violations; an empty list means the device is certifiable. Sweeps
    /// may deliberately exceed these (hypothetical rule studies).
    pub fn cap_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let (max_eirp, max_h) = match self.device_class {
            DeviceClass::Fixed => (36.0, 30.0),
            DeviceClass::Portable => (20.0, 3.0),
        };
        if self.eirp_dbm > max_eirp {
            v.push(format!("eirp {} dBm exceeds {max_eirp} dBm", self.eirp_dbm));
        }
        if self.antenna_height_m > max_h {
            v.push(format!("antenna height {} m exceeds {max_h} m", self.antenna_height_m));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eirp_dbm.is_finite() && self.eirp_dbm != f64::NEG_INFINITY {
            return Err(Error::invariant("eirp_dbm", "must be finite or -inf"));
        }
        if !(self.antenna_height_m > 0.0) {
            return Err(Error::invariant("antenna_height_m", "must be positive"));
        }
        Ok(())
    }
}

pub const MICROPHONE_RESERVED: [u8; 2] = [36, 38];
pub const RADIO_ASTRONOMY_CHANNEL: u8 = 37;

pub fn permissible_channels(class: DeviceClass) -> BTreeSet<Channel> {
    let range = match class {
        DeviceClass::Fixed => 2..=51u8,
        DeviceClass::Portable => 21..=51u8,
    };
    range
        .filter(|&c| c != RADIO_ASTRONOMY_CHANNEL)
        .filter(|&c| class == DeviceClass::Portable || (c != 3 && c != 4))
        .map(Channel)
        .collect()
}

pub fn max_eirp_dbm(class: DeviceClass, adjacent_to_primary: bool) -> f64 {
    match (class, adjacent_to_primary) {
        (DeviceClass::Fixed, _) => 36.0,
        (DeviceClass::Portable, false) => 20.0,
        (DeviceClass::Portable, true) => 16.0,
    }
}

/// Protected-contour field strength by service and band (dBu).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionTables {
    /// `[low VHF, high VHF, UHF]`
    pub analog_contour_dbu: [f64; 3],
    pub digital_contour_dbu: [f64; 3],
    /// `[co, upper adjacent, lower adjacent]`
    pub analog_du_db: [f64; 3],
    pub digital_du_db: [f64; 3],
}

impl Default for ProtectionTables {
    fn default() -> Self {
        ProtectionTables {
            analog_contour_dbu: [47.0, 56.0, 64.0],
            digital_contour_dbu: [28.0, 36.0, 41.0],
            analog_du_db: [34.0, -17.0, -14.0],
            digital_du_db: [23.0, -26.0, -28.0],
        }
    }
}

fn band_index(b: Band) -> usize {
    match b {
        Band::LowVhf => 0,
        Band::HighVhf => 1,
        Band::Uhf => 2,
    }
}

fn rel_index(r: Relationship) -> usize {
    match r {
        Relationship::Co => 0,
        Relationship::UpperAdj => 1,
        Relationship::LowerAdj => 2,
    }
}

impl ProtectionTables {
    pub fn contour_threshold_dbu(&self, service: ServiceType, channel: Channel) -> f64 {
        let row = match service.modulation {
            Modulation::Analog => &self.analog_contour_dbu,
            Modulation::Digital => &self.digital_contour_dbu,
        };
        row[band_index(channel.band())]
    }

    /// Field strength that defines the coverage area used for contour
    /// computation. Analog UHF stations use the dipole-corrected value.
    pub fn coverage_threshold_dbu(&self, service: ServiceType, channel: Channel) -> f64 {
        match (service.modulation, channel.band()) {
            (Modulation::Analog, Band::Uhf) => {
                let base = self.analog_contour_dbu[2];
                base - 20.0 * (615.0 / channel.frequency().mid_mhz).log10()
            }
            _ => self.contour_threshold_dbu(service, channel),
        }
    }

    pub fn du_ratio_db(&self, service: ServiceType, relationship: Relationship) -> f64 {
        let row = match service.modulation {
            Modulation::Analog => &self.analog_du_db,
            Modulation::Digital => &self.digital_du_db,
        };
        row[rel_index(relationship)]
    }

    /// Applies overrides from CSV `table,service,key,value` where `table` is
    /// `contour` (keys `low_vhf|high_vhf|uhf`) or `du_ratio`
    /// (keys `co|upper_adj|lower_adj`) and `service` is `analog|digital`.
    pub fn apply_overrides<R: Read>(&mut self, reader: R) -> Result<()> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec?;
            let bad = |reason: String| Error::Parse { row, reason };
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", rec.len())));
            }
            let value: f64 = rec[3].parse().map_err(|e| bad(format!("value: {e}")))?;
            let analog = match &rec[1] {
                "analog" => true,
                "digital" => false,
                s => return Err(bad(format!("unknown service `{s}`"))),
            };
            let slot = match (&rec[0], &rec[2]) {
                ("contour", k) => {
                    let idx = match k {
                        "low_vhf" => 0,
                        "high_vhf" => 1,
                        "uhf" => 2,
                        _ => return Err(bad(format!("unknown band `{k}`"))),
                    };
                    if analog {
                        &mut self.analog_contour_dbu[idx]
                    } else {
                        &mut self.digital_contour_dbu[idx]
                    }
                }
                ("du_ratio", k) => {
                    let idx = match k {
                        "co" => 0,
                        "upper_adj" => 1,
                        "lower_adj" => 2,
                        _ => return Err(bad(format!("unknown separation `{k}`"))),
                    };
                    if analog {
                        &mut self.analog_du_db[idx]
                    } else {
                        &mut self.digital_du_db[idx]
                    }
                }
                (t, _) => return Err(bad(format!("unknown table `{t}`"))),
            };
            *slot = value;
        }
        Ok(())
    }

    pub fn with_overrides_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.apply_overrides(std::fs::File::open(path)?)?;
        Ok(self)
    }
}

pub fn contour_threshold_dbu(service: ServiceType, channel: Channel) -> f64 {
    ProtectionTables::default().contour_threshold_dbu(service, channel)
}

pub fn du_ratio_db(service: ServiceType, relationship: Relationship) -> f64 {
    ProtectionTables::default().du_ratio_db(service, relationship)
}

/// Defining field strength for analog stations.
pub fn analog_modified_field_dbu(channel: Channel) -> f64 {
    match channel.band() {
        Band::LowVhf => 47.0,
        Band::HighVhf => 56.0,
        Band::Uhf => 64.0 - 20.0 * (615.0 / channel.frequency().mid_mhz).log10(),
    }
}

/// Field strength (dBu) to power (dBm) received by an isotropic antenna.
pub fn dbu_to_dbm(field_dbu: f64, f_mhz: f64) -> f64 {
    field_dbu - 20.0 * f_mhz.log10() - 77.2
}

pub fn dbm_to_dbu(power_dbm: f64, f_mhz: f64) -> f64 {
    power_dbm + 20.0 * f_mhz.log10() + 77.2
}

pub const PLMRS_CO_CHANNEL_KM: f64 = 134.0;
pub const PLMRS_ADJACENT_KM: f64 = 131.0;
pub const RADIO_ASTRONOMY_KM: f64 = 2.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmrsMetro {
    pub name: String,
    pub location: GeoPoint,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AstronomySite {
    pub name: String,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExclusionSites {
    pub plmrs: Vec<PlmrsMetro>,
    pub astronomy: Vec<AstronomySite>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleViolation {
    PlmrsCoChannel { metro: String, distance_km: f64 },
    PlmrsAdjacent { metro: String, distance_km: f64 },
    RadioAstronomy { site: String, distance_km: f64 },
    MicrophoneReserved,
}

/// Every exclusion rule that forbids operating on `channel` at `p`.
pub fn exclusion_checks(p: GeoPoint, channel: Channel, sites: &ExclusionSites) -> Vec<RuleViolation> {
    let mut out = Vec::new();
    for m in &sites.plmrs {
        let d = distance_km(p, m.location);
        match Relationship::between(m.channel, channel) {
            Some(Relationship::Co) if d < PLMRS_CO_CHANNEL_KM => out.push(RuleViolation::PlmrsCoChannel {
                metro: m.name.clone(),
                distance_km: d,
            }),
            Some(Relationship::UpperAdj | Relationship::LowerAdj) if d < PLMRS_ADJACENT_KM => {
                out.push(RuleViolation::PlmrsAdjacent {
                    metro: m.name.clone(),
                    distance_km: d,
                })
            }
            _ => {}
        }
    }
    for s in &sites.astronomy {
        let d = distance_km(p, s.location);
        if d < RADIO_ASTRONOMY_KM {
            out.push(RuleViolation::RadioAstronomy {
                site: s.name.clone(),
                distance_km: d,
            });
        }
    }
    if MICROPHONE_RESERVED.contains(&channel.number()) {
        out.push(RuleViolation::MicrophoneReserved);
    }
    out
}

#[derive(Deserialize)]
struct PlmrsRow {
    name: String,
    lat_deg: f64,
    lon_deg: f64,
    channel: u8,
}

#[derive(Deserialize)]
struct AstronomyRow {
    name: String,
    lat_deg: f64,
    lon_deg: f64,
}

/// CSV with header `name,lat_deg,lon_deg,channel`.
pub fn read_plmrs<R: Read>(reader: R) -> Result<Vec<PlmrsMetro>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<PlmrsRow>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| Error::Parse { row: i + 2, reason: e.to_string() })?;
            Ok(PlmrsMetro {
                name: r.name,
                location: GeoPoint::new(r.lat_deg, r.lon_deg).map_err(|e| e.at_row(i + 2))?,
                channel: Channel::new(r.channel).map_err(|e| e.at_row(i + 2))?,
            })
        })
        .collect()
}

/// CSV with header `name,lat_deg,lon_deg`.
pub fn read_astronomy<R: Read>(reader: R) -> Result<Vec<AstronomySite>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<AstronomyRow>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| Error::Parse { row: i + 2, reason: e.to_string() })?;
            Ok(AstronomySite {
                name: r.name,
                location: GeoPoint::new(r.lat_deg, r.lon_deg).map_err(|e| e.at_row(i + 2))?,
            })
        })
        .collect()
}

pub fn write_plmrs<W: std::io::Write>(w: W, metros: &[PlmrsMetro]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["name", "lat_deg", "lon_deg", "channel"])?;
    for m in metros {
        wtr.write_record([
            m.name.clone(),
            m.location.lat_deg.to_string(),
            m.location.lon_deg.to_string(),
            m.channel.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_astronomy<W: std::io::Write>(w: W, sites: &[AstronomySite]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["name", "lat_deg", "lon_deg"])?;
    for s in sites {
        wtr.write_record([s.name.clone(), s.location.lat_deg.to_string(), s.location.lon_deg.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
