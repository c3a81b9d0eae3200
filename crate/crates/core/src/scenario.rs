//! A validated bundle of registry, terrain, population, study area and
//! configuration, its `scenario.toml` file form, and synthetic generators.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::availability::StudyArea;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::geodata::{
    destination, load_registry, write_registry, GeoPoint, GridGeometry, PopulationGrid, TerrainGrid,
    TransmitterRecord, EARTH_RADIUS_KM, HAAT_RADIAL_END_KM,
};
use crate::protection::ContourSet;
use crate::regulatory::{
    read_astronomy, read_plmrs, write_astronomy, write_plmrs, Channel, DeviceClass, DeviceParams,
    ExclusionSites, ProtectionTables, ServiceType,
};

/// The parts of a scenario, unvalidated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParts {
    pub registry: Vec<TransmitterRecord>,
    pub terrain: TerrainGrid,
    pub population: Option<PopulationGrid>,
    pub area: StudyArea,
    pub sites: ExclusionSites,
    pub tables: ProtectionTables,
    /// The secondary device studied by availability, capacity and sweeps.
    pub device: DeviceParams,
    pub config: Config,
    pub seed: u64,
}

/// Every invariant violation of `parts`; empty when the scenario is valid.
pub fn validate(parts: &ScenarioParts) -> Vec<Error> {
    let mut v = parts.config.violations();
    v.extend(parts.area.violations());
    if let Err(e) = parts.device.validate() {
        v.push(e);
    }
    let mut ids = std::collections::BTreeSet::new();
    for (i, tx) in parts.registry.iter().enumerate() {
        if let Err(e) = tx.validate() {
            v.push(e.at_row(i + 1));
            continue;
        }
        if !ids.insert(tx.id.as_str()) {
            v.push(Error::invariant("id", format!("duplicate transmitter id `{}`", tx.id)).at_row(i + 1));
        }
        // every HAAT radial must stay on the terrain grid
        let on_grid = parts.terrain.contains(tx.location)
            && (0..360).all(|az| {
                parts
                    .terrain
                    .contains(destination(tx.location, f64::from(az), HAAT_RADIAL_END_KM))
            });
        if !on_grid {
            v.push(
                Error::invariant(
                    "location",
                    format!("transmitter `{}` is not {HAAT_RADIAL_END_KM} km inside the terrain grid", tx.id),
                )
                .at_row(i + 1),
            );
        }
    }
    for m in &parts.sites.plmrs {
        if let Err(e) = m.location.validate() {
            v.push(e);
        }
    }
    for s in &parts.sites.astronomy {
        if let Err(e) = s.location.validate() {
            v.push(e);
        }
    }
    v
}

/// A validated scenario. Contours are computed on first use and shared
/// by every copy that keeps the same contour inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    parts: ScenarioParts,
    contours: OnceLock<Arc<ContourSet>>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

fn same_contour_inputs(a: &Config, b: &Config) -> bool {
    a.tv_rx_height_m == b.tv_rx_height_m
        && a.tv_rx_gain_dbi == b.tv_rx_gain_dbi
        && a.delta_h_override_m == b.delta_h_override_m
        && a.delta_h_iterations == b.delta_h_iterations
        && a.initial_contour_km == b.initial_contour_km
}

impl Scenario {
    pub fn new(parts: ScenarioParts) -> Result<Self> {
        if let Some(e) = validate(&parts).into_iter().next() {
            return Err(e);
        }
        Ok(Scenario {
            parts,
            contours: OnceLock::new(),
        })
    }

    pub fn parts(&self) -> &ScenarioParts {
        &self.parts
    }

    pub fn into_parts(self) -> ScenarioParts {
        self.parts
    }

    pub fn registry(&self) -> &[TransmitterRecord] {
        &self.parts.registry
    }

    pub fn terrain(&self) -> &TerrainGrid {
        &self.parts.terrain
    }

    pub fn population(&self) -> Option<&PopulationGrid> {
        self.parts.population.as_ref()
    }

    pub fn area(&self) -> &StudyArea {
        &self.parts.area
    }

    pub fn sites(&self) -> &ExclusionSites {
        &self.parts.sites
    }

    pub fn tables(&self) -> &ProtectionTables {
        &self.parts.tables
    }

    pub fn device(&self) -> &DeviceParams {
        &self.parts.device
    }

    pub fn config(&self) -> &Config {
        &self.parts.config
    }

    pub fn seed(&self) -> u64 {
        self.parts.seed
    }

    pub fn transmitter(&self, id: &str) -> Result<(usize, &TransmitterRecord)> {
        self.parts
            .registry
            .iter()
            .enumerate()
            .find(|(_, tx)| tx.id == id)
            .ok_or_else(|| Error::UnknownTransmitter(id.to_string()))
    }

    /// Protected contours and azimuth terrain of every station.
    pub fn contours(&self) -> Result<&ContourSet> {
        if let Some(c) = self.contours.get() {
            return Ok(c);
        }
        let set = ContourSet::compute(&self.parts.registry, &self.parts.terrain, &self.parts.config, &self.parts.tables)?;
        let _ = self.contours.set(Arc::new(set));
        Ok(self.contours.get().expect("just set"))
    }

    /// Whether contours have already been computed for this scenario.
    pub fn contours_computed(&self) -> bool {
        self.contours.get().is_some()
    }

    /// Same scenario with another studied device; contours are shared.
    pub fn with_device(&self, device: DeviceParams) -> Result<Scenario> {
        device.validate()?;
        Ok(Scenario {
            parts: ScenarioParts {
                device,
                ..self.parts.clone()
            },
            contours: self.contours.clone(),
        })
    }

    /// Same scenario with another configuration. Contours are kept when
    /// none of their inputs changed.
    pub fn with_config(&self, config: Config) -> Result<Scenario> {
        config.validate()?;
        let contours = if same_contour_inputs(&config, &self.parts.config) {
            self.contours.clone()
        } else {
            OnceLock::new()
        };
        Ok(Scenario {
            parts: ScenarioParts {
                config,
                ..self.parts.clone()
            },
            contours,
        })
    }

    /// Reads a `scenario.toml`; data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { dir.join(p) };

        let registry = load_registry(resolve(&file.data.registry))?;
        let terrain = TerrainGrid::load(resolve(&file.data.terrain))?;
        let population = file
            .data
            .population
            .as_deref()
            .map(|p| PopulationGrid::load(resolve(p)))
            .transpose()?;
        let plmrs = match &file.data.plmrs {
            Some(p) => read_plmrs(File::open(resolve(p))?)?,
            None => Vec::new(),
        };
        let astronomy = match &file.data.astronomy {
            Some(p) => read_astronomy(File::open(resolve(p))?)?,
            None => Vec::new(),
        };
        let mut tables = file.protection.unwrap_or_default();
        if let Some(p) = &file.data.protection_overrides {
            tables = tables.with_overrides_file(resolve(p))?;
        }
        Scenario::new(ScenarioParts {
            registry,
            terrain,
            population,
            area: file.area,
            sites: ExclusionSites { plmrs, astronomy },
            tables,
            device: file.device,
            config: file.config,
            seed: file.seed,
        })
    }

    /// Writes `path` plus its data files into the same directory.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().unwrap_or(Path::new("."));
        let p = &self.parts;
        write_registry(BufWriter::new(File::create(dir.join(REGISTRY_FILE))?), &p.registry)?;
        p.terrain.raster().save(dir.join(TERRAIN_FILE))?;
        if let Some(pop) = &p.population {
            pop.raster().save(dir.join(POPULATION_FILE))?;
        }
        if !p.sites.plmrs.is_empty() {
            write_plmrs(BufWriter::new(File::create(dir.join(PLMRS_FILE))?), &p.sites.plmrs)?;
        }
        if !p.sites.astronomy.is_empty() {
            write_astronomy(BufWriter::new(File::create(dir.join(ASTRONOMY_FILE))?), &p.sites.astronomy)?;
        }
        let file = ScenarioFile {
            seed: p.seed,
            data: DataFiles {
                registry: REGISTRY_FILE.into(),
                terrain: TERRAIN_FILE.into(),
                population: p.population.as_ref().map(|_| POPULATION_FILE.into()),
                plmrs: (!p.sites.plmrs.is_empty()).then(|| PLMRS_FILE.into()),
                astronomy: (!p.sites.astronomy.is_empty()).then(|| ASTRONOMY_FILE.into()),
                protection_overrides: None,
            },
            area: p.area.clone(),
            device: p.device,
            config: p.config.clone(),
            protection: Some(p.tables.clone()),
        };
        let text = toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

const REGISTRY_FILE: &str = "registry.csv";
const TERRAIN_FILE: &str = "terrain.asc";
const POPULATION_FILE: &str = "population.asc";
const PLMRS_FILE: &str = "plmrs.csv";
const ASTRONOMY_FILE: &str = "astronomy.csv";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataFiles {
    registry: PathBuf,
    terrain: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plmrs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    astronomy: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    protection_overrides: Option<PathBuf>,
}

fn default_device() -> DeviceParams {
    DeviceParams::at_limits(DeviceClass::Fixed)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    data: DataFiles,
    area: StudyArea,
    #[serde(default = "default_device")]
    device: DeviceParams,
    #[serde(default)]
    config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    protection: Option<ProtectionTables>,
}

/// Synthetic scenario layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// One tower at the area center.
    SingleTower,
    /// `n_towers` towers evenly spaced on a circle around the center.
    Ring,
    /// A Poisson number of towers per channel, uniformly placed.
    PoissonField,
    /// Exactly `n_towers` towers, uniformly placed, channels drawn from
    /// `channels`.
    UniformField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TerrainKind {
    Flat,
    /// Elevation rising eastwards.
    Ramp { slope_m_per_km: f64 },
    /// Sum of seeded plane waves with roughly the given interdecile range.
    Rough { delta_h_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub center: GeoPoint,
    /// Half the side of the square study area.
    pub half_width_km: f64,
    pub step_km: f64,
    /// Terrain extends this far beyond the study area.
    pub terrain_margin_km: f64,
    pub terrain_spacing_arcsec: f64,
    pub terrain: TerrainKind,
    pub base_elevation_m: f64,
    pub channels: Vec<u8>,
    pub service: ServiceType,
    /// Tower EIRP drawn uniformly from this range.
    pub eirp_dbm: (f64, f64),
    /// Tower height above ground drawn uniformly from this range.
    pub tower_height_m: (f64, f64),
    pub n_towers: usize,
    pub ring_radius_km: f64,
    /// Towers per km² per channel for the Poisson field.
    pub intensity_per_km2: f64,
    pub config: Config,
    pub device: DeviceParams,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            center: GeoPoint { lat_deg: 40.0, lon_deg: -100.0 },
            half_width_km: 150.0,
            step_km: 3.0,
            terrain_margin_km: 60.0,
            terrain_spacing_arcsec: 60.0,
            terrain: TerrainKind::Flat,
            base_elevation_m: 300.0,
            channels: vec![30],
            service: ServiceType::DIGITAL_FULL,
            eirp_dbm: (75.0, 75.0),
            tower_height_m: (300.0, 300.0),
            n_towers: 6,
            ring_radius_km: 100.0,
            intensity_per_km2: 2e-5,
            config: Config::default(),
            device: DeviceParams::at_limits(DeviceClass::Fixed),
        }
    }
}

/// Local east/north offsets in km from `origin`.
fn local_km(origin: GeoPoint, p: GeoPoint) -> (f64, f64) {
    let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    (
        (p.lon_deg - origin.lon_deg) * k * origin.lat_deg.to_radians().cos(),
        (p.lat_deg - origin.lat_deg) * k,
    )
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
}

fn terrain_for(params: &SyntheticParams, area: &StudyArea, rng: &mut ChaCha8Rng) -> Result<TerrainGrid> {
    let cell = params.terrain_spacing_arcsec / 3600.0;
    let margin_lat = (params.terrain_margin_km / EARTH_RADIUS_KM).to_degrees();
    let margin_lon = margin_lat / params.center.lat_deg.to_radians().cos();
    let north = area.north_east.lat_deg + margin_lat;
    let south = area.south_west.lat_deg - margin_lat;
    let west = area.south_west.lon_deg - margin_lon;
    let east = area.north_east.lon_deg + margin_lon;
    let n_rows = ((north - south) / cell).ceil() as usize + 1;
    let n_cols = ((east - west) / cell).ceil() as usize + 1;
    let geom = GridGeometry::from_nw_sample(GeoPoint { lat_deg: north, lon_deg: west }, params.terrain_spacing_arcsec, n_rows, n_cols);
    let base = params.base_elevation_m;
    let center = params.center;
    match params.terrain {
        TerrainKind::Flat => TerrainGrid::flat(geom, base),
        TerrainKind::Ramp { slope_m_per_km } => {
            TerrainGrid::from_fn(geom, |p| base + slope_m_per_km * local_km(center, p).0)
        }
        TerrainKind::Rough { delta_h_m } => {
            const WAVES: usize = 16;
            let waves: Vec<Wave> = (0..WAVES)
                .map(|_| {
                    let wavelength_km = rng.random_range(4.0..40.0);
                    let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let k = std::f64::consts::TAU / wavelength_km;
                    Wave {
                        kx: k * dir.cos(),
                        ky: k * dir.sin(),
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    }
                })
                .collect();
            // a sum of n unit sinusoids has standard deviation √(n/2); the
            // 10 to 90 % range of a near-Gaussian field is about 2.56 σ
            let amplitude = delta_h_m / (2.563 * (WAVES as f64 / 2.0).sqrt());
            TerrainGrid::from_fn(geom, |p| {
                let (x, y) = local_km(center, p);
                base + amplitude * waves.iter().map(|w| (w.kx * x + w.ky * y + w.phase).sin()).sum::<f64>()
            })
        }
    }
}

fn tower(
    id: String,
    channel: u8,
    location: GeoPoint,
    params: &SyntheticParams,
    rng: &mut ChaCha8Rng,
) -> Result<TransmitterRecord> {
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
    Ok(TransmitterRecord {
        id,
        channel: Channel::new(channel)?,
        service: params.service,
        eirp_dbm: draw(rng, params.eirp_dbm),
        ground_height_m: draw(rng, params.tower_height_m),
        location,
    })
}

fn uniform_point(area: &StudyArea, rng: &mut ChaCha8Rng) -> GeoPoint {
    let s0 = area.south_west.lat_deg.to_radians().sin();
    let s1 = area.north_east.lat_deg.to_radians().sin();
    GeoPoint {
        lat_deg: rng.random_range(s0..s1).asin().to_degrees(),
        lon_deg: rng.random_range(area.south_west.lon_deg..area.north_east.lon_deg),
    }
}

/// Deterministic synthetic scenario for `seed`.
pub fn generate_synthetic(kind: SyntheticKind, params: &SyntheticParams, seed: u64) -> Result<Scenario> {
    if params.channels.is_empty() {
        return Err(Error::invariant("channels", "at least one channel is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = StudyArea::square(params.center, params.half_width_km, params.step_km)?;
    let terrain = terrain_for(params, &area, &mut rng)?;
    let mut registry = Vec::new();
    match kind {
        SyntheticKind::SingleTower => {
            registry.push(tower("T0".into(), params.channels[0], params.center, params, &mut rng)?);
        }
        SyntheticKind::Ring => {
            for k in 0..params.n_towers {
                let az = 360.0 * k as f64 / params.n_towers as f64;
                let loc = destination(params.center, az, params.ring_radius_km);
                let ch = params.channels[k % params.channels.len()];
                registry.push(tower(format!("R{k}"), ch, loc, params, &mut rng)?);
            }
        }
        SyntheticKind::PoissonField => {
            let mean = params.intensity_per_km2 * area.area_km2();
            let dist = Poisson::new(mean).map_err(|e| Error::invariant("intensity_per_km2", e.to_string()))?;
            for &ch in &params.channels {
                let n = dist.sample(&mut rng) as usize;
                for k in 0..n {
                    let loc = uniform_point(&area, &mut rng);
                    registry.push(tower(format!("P{ch}-{k}"), ch, loc, params, &mut rng)?);
                }
            }
        }
        SyntheticKind::UniformField => {
            for k in 0..params.n_towers {
                let ch = params.channels[rng.random_range(0..params.channels.len())];
                let loc = uniform_point(&area, &mut rng);
                registry.push(tower(format!("U{k}"), ch, loc, params, &mut rng)?);
            }
        }
    }
    Scenario::new(ScenarioParts {
        registry,
        terrain,
        population: None,
        area,
        sites: ExclusionSites::default(),
        tables: ProtectionTables::default(),
        device: params.device,
        config: params.config.clone(),
        seed,
    })
}

/// Parameters of the standard synthetic scenario: `n_towers` stations on
/// rough terrain, channels drawn from `channels`.
pub fn field_params(n_towers: usize, channels: Vec<u8>) -> SyntheticParams {
    SyntheticParams {
        half_width_km: 200.0,
        step_km: 4.0,
        terrain: TerrainKind::Rough { delta_h_m: 90.0 },
        channels,
        eirp_dbm: (70.0, 80.0),
        tower_height_m: (150.0, 450.0),
        n_towers,
        ..SyntheticParams::default()
    }
}

/// The standard 20-tower scenario used for trade-off studies. Channels
/// cluster around 30 so that channel 30 sees co- and adjacent-channel
/// stations.
pub fn standard_scenario(seed: u64) -> Result<Scenario> {
    generate_synthetic(SyntheticKind::UniformField, &field_params(20, (26..=34).collect()), seed)
}

/// The channel studied in the standard scenario.
pub const STANDARD_CHANNEL: u8 = 30;
