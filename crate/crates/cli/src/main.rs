//! `tvws`: command-line driver for channel availability, protection
//! contours, interference and capacity studies over a scenario file.
//!
//! Every command reads a `scenario.toml`, writes CSV or GeoJSON to
//! `--output` (stdout by default) and exits with 0 on success, 1 on an
//! internal error and 2 on a usage or input error.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tvws_core::availability::AvailabilityMap;
use tvws_core::capacity::{
    cell_capacity_bps, mobile_capacity_bps, per_user_capacity_bps, sweep, sweep_values, write_sweep_csv, CellModel,
    SinrField, SweepParam,
};
use tvws_core::interference::{s2s_interference_dbm, Interference, P2sField};
use tvws_core::regulatory::{max_eirp_dbm, permissible_channels, Relationship};
use tvws_core::{availability, Channel, ChannelStatus, DeviceClass, DeviceParams, GeoPoint, Scenario};

#[derive(Parser, Debug)]
#[command(name = "tvws", version, about = "TV white space availability and capacity engine")]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the channels available at a point.
    Channels {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
    },
    /// Protected contour and protection region of one station as GeoJSON.
    Contour {
        #[command(flatten)]
        common: Common,
        /// Station identifier from the registry.
        #[arg(long = "tx", value_name = "ID")]
        tx: String,
        /// Position of the secondary channel relative to the station.
        #[arg(long, value_enum, default_value_t = Rel::Co)]
        relationship: Rel,
    },
    /// Availability of one channel over the study-area lattice.
    Availability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        channel: u8,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Primary-to-secondary interference and SINR on one channel, at a
    /// point or over the study-area lattice.
    Interference {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        channel: u8,
        #[arg(long, allow_hyphen_values = true, requires = "lon")]
        lat: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "lat")]
        lon: Option<f64>,
    },
    /// Average cell capacity per channel, with per-user and mobile figures.
    Capacity {
        #[command(flatten)]
        common: Common,
        /// Channels to evaluate (repeatable); all permissible channels when
        /// omitted.
        #[arg(long = "channel")]
        channels: Vec<u8>,
    },
    /// Re-run the availability and capacity pipeline over a parameter range.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["eirp", "height", "deltah", "rcell"])]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        channel: u8,
    },
    /// Channel-count statistics over random locations in the study area.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Number of locations (default from the scenario config).
        #[arg(long)]
        points: Option<usize>,
        /// Write the empirical CDF of channel counts instead of the table.
        #[arg(long)]
        cdf: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Device class; replaces the scenario device with the largest device
    /// of this class the rules allow.
    #[arg(long, value_enum)]
    device: Option<Class>,
    /// Device EIRP override (dBm).
    #[arg(long, allow_hyphen_values = true)]
    eirp: Option<f64>,
    /// Device antenna height override (m).
    #[arg(long)]
    height: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Class {
    Fixed,
    Portable,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Rel {
    Co,
    UpperAdj,
    LowerAdj,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Geojson,
}

/// Bad user input; reported with exit code 2.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<tvws_core::Error>() {
        Some(tvws_core::Error::Domain(_) | tvws_core::Error::NonMonotone { .. } | tvws_core::Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

/// The reader of our output went away (e.g. `| head`).
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = if let Some(io) = c.downcast_ref::<io::Error>() {
            Some(io.kind())
        } else if let Some(tvws_core::Error::Io(io)) = c.downcast_ref::<tvws_core::Error>() {
            Some(io.kind())
        } else {
            c.downcast_ref::<serde_json::Error>().and_then(serde_json::Error::io_error_kind)
        };
        kind == Some(io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TVWS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(input_error("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start worker pool")?;
    }
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| input_error(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.command {
        Command::Channels { common, lat, lon } => channels(&common, lat, lon, &mut out)?,
        Command::Contour {
            common,
            tx,
            relationship,
        } => contour(&common, &tx, relationship, &mut out)?,
        Command::Availability {
            common,
            channel,
            format,
        } => availability_raster(&common, channel, format, &mut out)?,
        Command::Interference {
            common,
            channel,
            lat,
            lon,
        } => interference(&common, channel, lat.zip(lon), &mut out)?,
        Command::Capacity { common, channels } => capacity(&common, &channels, &mut out)?,
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
            channel,
        } => {
            let scenario = load(&common)?;
            let param: SweepParam = param.parse()?;
            let values = sweep_values(from, to, steps)?;
            let rows = sweep(param, &values, channel_arg(channel)?, &scenario)?;
            write_sweep_csv(&rows, &mut out)?;
        }
        Command::Stats { common, points, cdf } => {
            let scenario = load(&common)?;
            let cfg = scenario.config();
            let n = points.unwrap_or(cfg.stats_points);
            let stats = availability::statistics(&scenario, scenario.area(), n, cfg.urban_threshold_per_sq_mi)?;
            if cdf {
                stats.write_cdf_csv(&mut out)?;
            } else {
                stats.write_csv(&mut out)?;
            }
        }
    }
    out.flush().context("cannot write output")?;
    Ok(())
}

/// Loads the scenario and applies the device flags.
fn load(common: &Common) -> anyhow::Result<Scenario> {
    let scenario = load_file(&common.scenario)?;
    let mut dev = *scenario.device();
    if let Some(class) = common.device {
        dev = DeviceParams::at_limits(match class {
            Class::Fixed => DeviceClass::Fixed,
            Class::Portable => DeviceClass::Portable,
        });
    }
    if let Some(eirp) = common.eirp {
        dev.eirp_dbm = eirp;
    }
    if let Some(h) = common.height {
        dev.antenna_height_m = h;
    }
    if dev == *scenario.device() {
        return Ok(scenario);
    }
    for v in dev.cap_violations() {
        log::warn!("hypothetical device: {v}");
    }
    Ok(scenario.with_device(dev)?)
}

fn load_file(path: &Path) -> anyhow::Result<Scenario> {
    Scenario::load(path).map_err(|e| input_error(format!("cannot load scenario {}: {e}", path.display())))
}

/// A channel of the TV band (2 to 51).
fn channel_arg(n: u8) -> anyhow::Result<Channel> {
    Channel::tv_band()
        .find(|c| c.number() == n)
        .ok_or_else(|| input_error(format!("channel {n} is outside the TV band 2..=51")))
}

fn point_arg(scenario: &Scenario, lat: f64, lon: f64) -> anyhow::Result<GeoPoint> {
    let q = GeoPoint::new(lat, lon)?;
    if !scenario.area().contains(q) {
        return Err(input_error(format!("point {q} lies outside the study area")));
    }
    Ok(q)
}

fn status_name(s: ChannelStatus) -> &'static str {
    match s {
        ChannelStatus::Unavailable => "unavailable",
        ChannelStatus::Available => "available",
        ChannelStatus::ReducedPower => "reduced_power",
    }
}

fn channels(common: &Common, lat: f64, lon: f64, out: &mut dyn Write) -> anyhow::Result<()> {
    let scenario = load(common)?;
    let q = point_arg(&scenario, lat, lon)?;
    let dev = *scenario.device();
    let map = AvailabilityMap::new(&scenario, dev)?;
    writeln!(out, "channel,center_mhz,status,max_eirp_dbm")?;
    for (ch, status) in map.available_set(q) {
        let reduced = status == ChannelStatus::ReducedPower;
        writeln!(
            out,
            "{ch},{},{},{}",
            ch.frequency().mid_mhz,
            status_name(status),
            dev.eirp_dbm.min(max_eirp_dbm(dev.device_class, reduced))
        )?;
    }
    Ok(())
}

fn contour(common: &Common, id: &str, rel: Rel, out: &mut dyn Write) -> anyhow::Result<()> {
    let scenario = load(common)?;
    let (index, _) = scenario.transmitter(id)?;
    let map = AvailabilityMap::new(&scenario, *scenario.device())?;
    let relationship = match rel {
        Rel::Co => Relationship::Co,
        Rel::UpperAdj => Relationship::UpperAdj,
        Rel::LowerAdj => Relationship::LowerAdj,
    };
    let region = map.region(index, relationship)?;
    serde_json::to_writer_pretty(&mut *out, &region.to_geojson())?;
    writeln!(out)?;
    Ok(())
}

fn availability_raster(common: &Common, channel: u8, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let scenario = load(common)?;
    let channel = channel_arg(channel)?;
    let map = AvailabilityMap::new(&scenario, *scenario.device())?;
    let result = map.probability(channel, scenario.area());
    log::info!("channel {channel}: p = {} over {} samples", result.p, result.n_samples);
    match format {
        Format::Csv => result.write_csv(scenario.area(), &mut *out)?,
        Format::Geojson => {
            serde_json::to_writer_pretty(&mut *out, &result.to_geojson(scenario.area()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn interference(common: &Common, channel: u8, point: Option<(f64, f64)>, out: &mut dyn Write) -> anyhow::Result<()> {
    let scenario = load(common)?;
    let channel = channel_arg(channel)?;
    let points: Vec<GeoPoint> = match point {
        Some((lat, lon)) => vec![point_arg(&scenario, lat, lon)?],
        None => {
            let area = scenario.area();
            area.cells()
                .into_iter()
                .filter(|&(k, _)| area.is_valid_cell(k))
                .map(|(_, q)| q)
                .collect()
        }
    };
    let cell = CellModel::from_scenario(&scenario)?;
    let dev = cell.dev;
    let cfg = scenario.config();
    let field = SinrField::new(channel, &cell, &scenario)?;
    let p2s = P2sField::new(
        scenario.registry(),
        &scenario.contours()?.terrain,
        dev.antenna_height_m,
        dev.rx_gain_dbi,
        cfg.p2s_max_distance_km,
    )?;
    let s2s_at = |eirp_dbm: f64| {
        let d = DeviceParams { eirp_dbm, ..dev };
        s2s_interference_dbm(&cell.reuse, &d, &cell.link_model(channel))
    };
    let s2s = [s2s_at(dev.eirp_dbm), s2s_at(dev.eirp_dbm.min(max_eirp_dbm(dev.device_class, true)))];
    let rows: Vec<String> = points
        .par_iter()
        .map(|&q| {
            let status = field.availability().status(q, channel);
            let i_p2s = p2s.interference(q, channel);
            let (i_s2s, sinr) = match status {
                ChannelStatus::Unavailable => (None, None),
                ChannelStatus::Available => (Some(s2s[0]), field.sinr(q).ok()),
                ChannelStatus::ReducedPower => (Some(s2s[1]), field.sinr(q).ok()),
            };
            format!(
                "{:.6},{:.6},{channel},{},{},{},{}",
                q.lat_deg,
                q.lon_deg,
                status_name(status),
                dbm_field(Some(i_p2s)),
                dbm_field(i_s2s),
                sinr.map(|s| (10.0 * s.log10()).to_string()).unwrap_or_default()
            )
        })
        .collect();
    writeln!(out, "lat,lon,channel,status,p2s_dbm,s2s_dbm,sinr_db")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

/// Empty for an absent or empty interference sum.
fn dbm_field(i: Option<Interference>) -> String {
    match i {
        Some(Interference::Dbm(d)) => d.to_string(),
        _ => String::new(),
    }
}

fn capacity(common: &Common, channels: &[u8], out: &mut dyn Write) -> anyhow::Result<()> {
    let scenario = load(common)?;
    let cell = CellModel::from_scenario(&scenario)?;
    let channels: Vec<Channel> = if channels.is_empty() {
        permissible_channels(cell.dev.device_class).into_iter().collect()
    } else {
        channels.iter().map(|&c| channel_arg(c)).collect::<anyhow::Result<_>>()?
    };
    scenario.contours()?;
    let results = channels
        .par_iter()
        .map(|&c| cell_capacity_bps(c, &cell, &scenario, scenario.area()))
        .collect::<tvws_core::Result<Vec<_>>>()?;
    writeln!(
        out,
        "channel,p,n_receivers,spectral_efficiency,capacity_bps,c_user_bps,cpa_bps_m2,mobile_bps"
    )?;
    let mut total = 0.0;
    for r in &results {
        let user = per_user_capacity_bps(r.capacity_bps, &cell);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.channel,
            r.p,
            r.n_receivers,
            r.spectral_efficiency,
            r.capacity_bps,
            user.c_user_bps,
            user.cpa_bps_m2,
            mobile_capacity_bps(user.c_user_bps, &cell)
        )?;
        total += r.capacity_bps;
    }
    if results.len() > 1 {
        let user = per_user_capacity_bps(total, &cell);
        writeln!(
            out,
            "total,,,,{total},{},{},{}",
            user.c_user_bps,
            user.cpa_bps_m2,
            mobile_capacity_bps(user.c_user_bps, &cell)
        )?;
    }
    Ok(())
}
