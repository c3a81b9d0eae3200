use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GeoPoint;
use crate::error::{Error, Result};
use crate::regulatory::{Channel, ServiceType};

/// A licensed primary station.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterRecord {
    pub id: String,
    pub channel: Channel,
    pub service: ServiceType,
    /// Transmit power plus antenna gain.
    pub eirp_dbm: f64,
    /// Antenna structure height above ground.
    pub ground_height_m: f64,
    pub location: GeoPoint,
}

impl TransmitterRecord {
    pub fn validate(&self) -> Result<()> {
        if !(2..=51).contains(&self.channel.number()) {
            return Err(Error::invariant("channel", format!("{} not in 2..=51", self.channel)));
        }
        if !self.eirp_dbm.is_finite() {
            return Err(Error::invariant("eirp_dbm", "must be finite"));
        }
        if !(0.5..=3000.0).contains(&self.ground_height_m) {
            return Err(Error::invariant(
                "ground_height_m",
                format!("{} not in [0.5, 3000]", self.ground_height_m),
            ));
        }
        self.location.validate()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: String,
    channel: i64,
    service: String,
    eirp_dbm: f64,
    ground_height_m: f64,
    lat_deg: f64,
    lon_deg: f64,
}

impl Row {
    fn into_record(self) -> Result<TransmitterRecord> {
        let channel = u8::try_from(self.channel)
            .ok()
            .filter(|c| (2..=51).contains(c))
            .ok_or_else(|| Error::invariant("channel", format!("{} not in 2..=51", self.channel)))?;
        let service: ServiceType = self
            .service
            .parse()
            .map_err(|_| Error::invariant("service", format!("unknown service `{}`", self.service)))?;
        let rec = TransmitterRecord {
            id: self.id,
            channel: Channel::new(channel)?,
            service,
            eirp_dbm: self.eirp_dbm,
            ground_height_m: self.ground_height_m,
            location: GeoPoint {
                lat_deg: self.lat_deg,
                lon_deg: self.lon_deg,
            },
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Reads a registry from CSV with header
/// `id,channel,service,eirp_dbm,ground_height_m,lat_deg,lon_deg`.
pub fn read_registry<R: Read>(reader: R) -> Result<Vec<TransmitterRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = ["id", "channel", "service", "eirp_dbm", "ground_height_m", "lat_deg", "lon_deg"];
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            row: 1,
            reason: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        // row numbers are 1-based file lines, header is line 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            reason: e.to_string(),
        })?;
        out.push(rec.into_record().map_err(|e| e.at_row(row))?);
    }
    Ok(out)
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Vec<TransmitterRecord>> {
    read_registry(std::fs::File::open(path)?)
}

pub fn write_registry<W: Write>(writer: W, records: &[TransmitterRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    // serialize() only emits the header once a row exists
    wtr.write_record(["id", "channel", "service", "eirp_dbm", "ground_height_m", "lat_deg", "lon_deg"])?;
    for r in records {
        wtr.write_record([
            r.id.clone(),
            r.channel.number().to_string(),
            r.service.to_string(),
            r.eirp_dbm.to_string(),
            r.ground_height_m.to_string(),
            r.location.lat_deg.to_string(),
            r.location.lon_deg.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
