//! SINR of a secondary link, per-cell capacity averaged over a study area,
//! per-user, per-area and mobile capacity, and parameter sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::availability::{AvailabilityMap, ChannelStatus, StudyArea};
use crate::error::{Error, Result};
use crate::geodata::{destination, GeoPoint};
use crate::interference::{s2s_interference_dbm, Interference, P2sField, ReusePlan};
use crate::numeric::{dbm_to_mw, pairwise_sum};
use crate::propagation::{Environment, HataModel, PathLossModel};
use crate::regulatory::{max_eirp_dbm, Channel, DeviceParams};
use crate::scenario::Scenario;

pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;
const KM_PER_MILE: f64 = 1.609_344;

/// Received powers and noise of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub signal_dbm: f64,
    pub interference: Interference,
}

impl LinkBudget {
    pub fn noise_dbm(&self) -> f64 {
        self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }

    /// Linear signal over noise plus interference.
    pub fn sinr(&self) -> f64 {
        dbm_to_mw(self.signal_dbm) / (dbm_to_mw(self.noise_dbm()) + self.interference.mw())
    }
}

/// Handover cost of a moving user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handover {
    pub delay_s: f64,
    pub speed_m_s: f64,
    pub alpha: f64,
}

/// One secondary cell and its users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellModel {
    pub r_cell_km: f64,
    pub reuse: ReusePlan,
    pub dev: DeviceParams,
    pub mac_efficiency: f64,
    /// Service requests per person.
    pub users_alpha: f64,
    pub population_density_per_sq_mi: f64,
    pub handover: Handover,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub environment: Environment,
}

impl CellModel {
    /// Cell of the scenario's studied device under its configuration.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let cfg = scenario.config();
        let (i, j) = cfg.reuse_shift;
        let cell = CellModel {
            r_cell_km: cfg.r_cell_km,
            reuse: ReusePlan {
                i,
                j,
                r_cell_km: cfg.r_cell_km,
                k_i: cfg.interferers_per_tier,
            },
            dev: *scenario.device(),
            mac_efficiency: cfg.mac_efficiency,
            users_alpha: cfg.users_alpha,
            population_density_per_sq_mi: cfg.population_density_per_sq_mi,
            handover: Handover {
                delay_s: cfg.handover_delay_s,
                speed_m_s: cfg.user_speed_m_s,
                alpha: cfg.handover_alpha,
            },
            noise_density_dbm_hz: THERMAL_NOISE_DBM_HZ + cfg.noise_figure_db,
            bandwidth_hz: cfg.bandwidth_hz,
            environment: cfg.hata_environment,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_cell_km > 0.0) {
            return Err(Error::invariant("r_cell_km", "must be > 0"));
        }
        if !(self.mac_efficiency > 0.0 && self.mac_efficiency <= 1.0) {
            return Err(Error::invariant("mac_efficiency", "must be in (0, 1]"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invariant("bandwidth_hz", "must be > 0"));
        }
        self.reuse.validate()?;
        self.dev.validate()
    }

    /// Loss between two secondary devices, both at the device height.
    pub fn link_model(&self, channel: Channel) -> HataModel {
        HataModel {
            f_mhz: channel.frequency().mid_mhz,
            h_b_m: self.dev.antenna_height_m,
            h_m_m: self.dev.antenna_height_m.clamp(1.0, 10.0),
            environment: self.environment,
        }
    }

    /// Desired signal at the cell edge and the secondary-to-secondary
    /// interference for a transmit EIRP.
    fn secondary_powers(&self, channel: Channel, eirp_dbm: f64) -> (f64, Interference) {
        let model = self.link_model(channel);
        let dev = DeviceParams {
            eirp_dbm,
            ..self.dev
        };
        let signal = eirp_dbm + self.dev.rx_gain_dbi - model.loss_db(self.r_cell_km * 1e3);
        (signal, s2s_interference_dbm(&self.reuse, &dev, &model))
    }
}

/// SINR evaluator for one channel and cell over a scenario.
pub struct SinrField<'a> {
    map: AvailabilityMap<'a>,
    p2s: P2sField,
    channel: Channel,
    cell: CellModel,
    /// Signal and S2S interference at full and reduced power.
    full: (f64, Interference),
    reduced: (f64, Interference),
}

impl<'a> SinrField<'a> {
    pub fn new(channel: Channel, cell: &CellModel, scenario: &'a Scenario) -> Result<Self> {
        cell.validate()?;
        let map = AvailabilityMap::new(scenario, cell.dev)?;
        let cfg = scenario.config();
        let p2s = P2sField::new(
            scenario.registry(),
            &scenario.contours()?.terrain,
            cell.dev.antenna_height_m,
            cell.dev.rx_gain_dbi,
            cfg.p2s_max_distance_km,
        )?;
        let reduced_eirp = cell.dev.eirp_dbm.min(max_eirp_dbm(cell.dev.device_class, true));
        Ok(SinrField {
            map,
            p2s,
            channel,
            cell: *cell,
            full: cell.secondary_powers(channel, cell.dev.eirp_dbm),
            reduced: cell.secondary_powers(channel, reduced_eirp),
        })
    }

    /// Link budget at receiver `q`, or `ChannelUnavailable`.
    pub fn budget(&self, q: GeoPoint) -> Result<LinkBudget> {
        let (signal_dbm, s2s) = match self.map.status(q, self.channel) {
            ChannelStatus::Unavailable => return Err(Error::ChannelUnavailable(self.channel)),
            ChannelStatus::Available => self.full,
            ChannelStatus::ReducedPower => self.reduced,
        };
        let p2s = self.p2s.interference(q, self.channel);
        Ok(LinkBudget {
            noise_density_dbm_hz: self.cell.noise_density_dbm_hz,
            bandwidth_hz: self.cell.bandwidth_hz,
            signal_dbm,
            interference: Interference::from_mw(p2s.mw() + s2s.mw()),
        })
    }

    pub fn sinr(&self, q: GeoPoint) -> Result<f64> {
        self.budget(q).map(|b| b.sinr())
    }

    pub fn availability(&self) -> &AvailabilityMap<'a> {
        &self.map
    }
}

pub fn sinr(q: GeoPoint, channel: Channel, cell: &CellModel, scenario: &Scenario) -> Result<f64> {
    SinrField::new(channel, cell, scenario)?.sinr(q)
}

/// About `n` receiver points on equal-area rings around `center`.
pub fn receiver_lattice(center: GeoPoint, r_cell_km: f64, n: usize) -> Vec<GeoPoint> {
    let rings = ((n as f64).sqrt().round() as usize).max(1);
    let spokes = n.div_ceil(rings).max(1);
    let mut out = Vec::with_capacity(rings * spokes);
    for i in 0..rings {
        let r = r_cell_km * ((i as f64 + 0.5) / rings as f64).sqrt();
        let offset = if i % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..spokes {
            let az = 360.0 * (j as f64 + offset) / spokes as f64;
            out.push(destination(center, az, r));
        }
    }
    out
}

/// Cell centers on a `side × side` sub-lattice of `area`.
pub fn cell_centers(area: &StudyArea, side: usize) -> Vec<GeoPoint> {
    let dlat = area.north_east.lat_deg - area.south_west.lat_deg;
    let dlon = area.north_east.lon_deg - area.south_west.lon_deg;
    (0..side * side)
        .map(|k| GeoPoint {
            lat_deg: area.north_east.lat_deg - ((k / side) as f64 + 0.5) * dlat / side as f64,
            lon_deg: area.south_west.lon_deg + ((k % side) as f64 + 0.5) * dlon / side as f64,
        })
        .collect()
}

/// `(p/K)·W·mean(log2(1 + SINR))`; zero when no SINR sample exists.
pub fn capacity_from_sinr(p: f64, k: u32, bandwidth_hz: f64, sinrs: &[f64]) -> f64 {
    if sinrs.is_empty() || p == 0.0 {
        return 0.0;
    }
    let se: Vec<f64> = sinrs.iter().map(|s| (1.0 + s).log2()).collect();
    p / f64::from(k) * bandwidth_hz * pairwise_sum(&se) / se.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCapacity {
    pub channel: Channel,
    /// Availability probability over the area.
    pub p: f64,
    /// Receiver points where the channel was available.
    pub n_receivers: usize,
    /// Mean of log2(1 + SINR) over those points.
    pub spectral_efficiency: f64,
    pub capacity_bps: f64,
}

/// Average capacity of one cell on `channel` over `area`.
pub fn cell_capacity_bps(channel: Channel, cell: &CellModel, scenario: &Scenario, area: &StudyArea) -> Result<CellCapacity> {
    area.validate()?;
    let field = SinrField::new(channel, cell, scenario)?;
    let p = field.availability().probability(channel, area).p;
    let cfg = scenario.config();
    let receivers: Vec<GeoPoint> = cell_centers(area, cfg.capacity_grid)
        .into_iter()
        .flat_map(|c| receiver_lattice(c, cell.r_cell_km, cfg.capacity_points))
        .collect();
    let sinrs: Vec<f64> = receivers.par_iter().filter_map(|&q| field.sinr(q).ok()).collect();
    let capacity_bps = capacity_from_sinr(p, cell.reuse.k(), cell.bandwidth_hz, &sinrs);
    let spectral_efficiency = if sinrs.is_empty() {
        0.0
    } else {
        pairwise_sum(&sinrs.iter().map(|s| (1.0 + s).log2()).collect::<Vec<_>>()) / sinrs.len() as f64
    };
    Ok(CellCapacity {
        channel,
        p,
        n_receivers: sinrs.len(),
        spectral_efficiency,
        capacity_bps,
    })
}

/// Capacity summed over several channels.
pub fn summed_cell_capacity_bps(
    channels: &[Channel],
    cell: &CellModel,
    scenario: &Scenario,
    area: &StudyArea,
) -> Result<f64> {
    let per: Vec<f64> = channels
        .iter()
        .map(|&c| cell_capacity_bps(c, cell, scenario, area).map(|r| r.capacity_bps))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCapacity {
    pub c_user_bps: f64,
    /// Cell capacity over the squared cell radius.
    pub cpa_bps_m2: f64,
    /// Expected service requests in the cell.
    pub users: f64,
    /// Set when fewer than one user is expected; the cell capacity is then
    /// given to a single user.
    pub degenerate: bool,
}

pub fn per_user_capacity_bps(cell_capacity_bps: f64, cell: &CellModel) -> UserCapacity {
    let r_mi = cell.r_cell_km / KM_PER_MILE;
    let users = cell.users_alpha * cell.population_density_per_sq_mi * std::f64::consts::PI * r_mi * r_mi;
    let degenerate = users < 1.0;
    let share = if degenerate { 1.0 } else { users };
    let r_m = cell.r_cell_km * 1e3;
    UserCapacity {
        c_user_bps: cell.mac_efficiency * cell_capacity_bps / share,
        cpa_bps_m2: cell_capacity_bps / (r_m * r_m),
        users,
        degenerate,
    }
}

/// Per-user capacity net of handover time, zero once a user crosses the
/// cell faster than a handover completes.
pub fn mobile_capacity_bps(c_user_bps: f64, cell: &CellModel) -> f64 {
    let h = cell.handover;
    let factor = 1.0 - h.alpha * h.delay_s * h.speed_m_s / (cell.r_cell_km * 1e3);
    factor.max(0.0) * c_user_bps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eirp,
    AntennaHeight,
    DeltaH,
    RCell,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eirp => "eirp",
            SweepParam::AntennaHeight => "height",
            SweepParam::DeltaH => "deltah",
            SweepParam::RCell => "rcell",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eirp" => Ok(SweepParam::Eirp),
            "height" => Ok(SweepParam::AntennaHeight),
            "deltah" => Ok(SweepParam::DeltaH),
            "rcell" => Ok(SweepParam::RCell),
            _ => Err(Error::invariant("param", format!("unknown sweep parameter `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub channel: Channel,
    pub p: f64,
    pub capacity_bps: f64,
    pub cpa_bps_m2: f64,
    pub mobile_bps: f64,
    /// The device at this point exceeds the regulatory caps.
    pub hypothetical: bool,
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if !(from < to) || !from.is_finite() || !to.is_finite() {
        return Err(Error::invariant("range", format!("need from < to, got {from}..{to}")));
    }
    if steps < 2 {
        return Err(Error::invariant("steps", "must be >= 2"));
    }
    Ok((0..steps)
        .map(|k| {
            if k == steps - 1 {
                to
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

/// Scenario with the swept parameter set to `value`.
pub fn sweep_point(param: SweepParam, value: f64, scenario: &Scenario) -> Result<Scenario> {
    let dev = *scenario.device();
    let cfg = scenario.config().clone();
    match param {
        SweepParam::Eirp => scenario.with_device(DeviceParams { eirp_dbm: value, ..dev }),
        SweepParam::AntennaHeight => scenario.with_device(DeviceParams {
            antenna_height_m: value,
            ..dev
        }),
        SweepParam::DeltaH => scenario.with_config(crate::config::Config {
            delta_h_override_m: Some(value),
            ..cfg
        }),
        SweepParam::RCell => scenario.with_config(crate::config::Config { r_cell_km: value, ..cfg }),
    }
}

/// Re-runs availability, interference and capacity at every value.
pub fn sweep(param: SweepParam, values: &[f64], channel: Channel, scenario: &Scenario) -> Result<Vec<SweepRow>> {
    if param != SweepParam::DeltaH {
        // shared by every sweep point
        scenario.contours()?;
    }
    values
        .par_iter()
        .map(|&value| {
            let s = sweep_point(param, value, scenario)?;
            let cell = CellModel::from_scenario(&s)?;
            let cap = cell_capacity_bps(channel, &cell, &s, s.area())?;
            let user = per_user_capacity_bps(cap.capacity_bps, &cell);
            let hypothetical = !s.device().cap_violations().is_empty();
            if hypothetical {
                log::warn!("{param} = {value}: device exceeds regulatory caps");
            }
            Ok(SweepRow {
                param,
                value,
                channel,
                p: cap.p,
                capacity_bps: cap.capacity_bps,
                cpa_bps_m2: user.cpa_bps_m2,
                mobile_bps: mobile_capacity_bps(user.c_user_bps, &cell),
                hypothetical,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "param,value,channel,p,capacity_bps,cpa_bps_m2,mobile_bps";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.param, r.value, r.channel, r.p, r.capacity_bps, r.cpa_bps_m2, r.mobile_bps
        )?;
    }
    Ok(())
}
