//! Model constants that the rules and propagation models leave open. Every
//! tunable default lives here so a scenario file can override it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::Environment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Height of the protected TV receive antenna.
    pub tv_rx_height_m: f64,
    /// Gain of the protected TV receive antenna.
    pub tv_rx_gain_dbi: f64,
    pub hata_environment: Environment,
    /// Replaces the per-azimuth terrain irregularity when set.
    pub delta_h_override_m: Option<f64>,
    /// Passes of the contour / terrain-irregularity fixed point.
    pub delta_h_iterations: u32,
    /// Radial length for the first terrain-irregularity estimate.
    pub initial_contour_km: f64,
    /// Towers farther than this do not contribute interference.
    pub p2s_max_distance_km: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub mac_efficiency: f64,
    /// Service requests per person in the cell.
    pub users_alpha: f64,
    pub handover_alpha: f64,
    pub handover_delay_s: f64,
    pub user_speed_m_s: f64,
    pub r_cell_km: f64,
    /// Reuse shift parameters `(i, j)`.
    pub reuse_shift: (u32, u32),
    pub interferers_per_tier: u32,
    /// Fallback density when no population raster is given.
    pub population_density_per_sq_mi: f64,
    /// Urban/rural split for the statistics.
    pub urban_threshold_per_sq_mi: f64,
    /// Receiver points per cell for the capacity average.
    pub capacity_points: usize,
    /// Random locations for the channel-count statistics.
    pub stats_points: usize,
    /// Cells per side of the sub-lattice averaged in the capacity integral.
    pub capacity_grid: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tv_rx_height_m: 10.0,
            tv_rx_gain_dbi: 0.0,
            hata_environment: Environment::Urban,
            delta_h_override_m: None,
            delta_h_iterations: 3,
            initial_contour_km: 50.0,
            p2s_max_distance_km: 300.0,
            noise_figure_db: 6.0,
            bandwidth_hz: 6e6,
            mac_efficiency: 1.0,
            users_alpha: 1.0,
            handover_alpha: 1.0,
            handover_delay_s: 1.0,
            user_speed_m_s: 0.0,
            r_cell_km: 1.0,
            reuse_shift: (1, 1),
            interferers_per_tier: 6,
            population_density_per_sq_mi: 1000.0,
            urban_threshold_per_sq_mi: 1000.0,
            capacity_points: 64,
            stats_points: 400,
            capacity_grid: 6,
        }
    }
}

impl Config {
    /// All range violations, empty when the configuration is usable.
    pub fn violations(&self) -> Vec<Error> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &'static str, detail: &str| {
            if !ok {
                v.push(Error::invariant(field, detail.to_string()));
            }
        };
        check(
            (0.5..=3000.0).contains(&self.tv_rx_height_m),
            "tv_rx_height_m",
            "must be in [0.5, 3000]",
        );
        check(self.tv_rx_gain_dbi.is_finite(), "tv_rx_gain_dbi", "must be finite");
        check(
            self.delta_h_override_m.is_none_or(|d| d >= 0.0 && d.is_finite()),
            "delta_h_override_m",
            "must be >= 0",
        );
        check(self.delta_h_iterations >= 1, "delta_h_iterations", "must be >= 1");
        check(self.initial_contour_km > 0.0, "initial_contour_km", "must be > 0");
        check(self.p2s_max_distance_km > 0.0, "p2s_max_distance_km", "must be > 0");
        check(self.noise_figure_db.is_finite(), "noise_figure_db", "must be finite");
        check(self.bandwidth_hz > 0.0, "bandwidth_hz", "must be > 0");
        check(
            self.mac_efficiency > 0.0 && self.mac_efficiency <= 1.0,
            "mac_efficiency",
            "must be in (0, 1]",
        );
        check(self.users_alpha > 0.0, "users_alpha", "must be > 0");
        check(self.handover_alpha >= 0.0, "handover_alpha", "must be >= 0");
        check(self.handover_delay_s >= 0.0, "handover_delay_s", "must be >= 0");
        check(self.user_speed_m_s >= 0.0, "user_speed_m_s", "must be >= 0");
        check(self.r_cell_km > 0.0, "r_cell_km", "must be > 0");
        check(self.reuse_shift != (0, 0), "reuse_shift", "i and j must not both be 0");
        check(self.interferers_per_tier >= 1, "interferers_per_tier", "must be >= 1");
        check(
            self.population_density_per_sq_mi > 0.0,
            "population_density_per_sq_mi",
            "must be > 0",
        );
        check(
            self.urban_threshold_per_sq_mi >= 0.0,
            "urban_threshold_per_sq_mi",
            "must be >= 0",
        );
        check(self.capacity_points >= 1, "capacity_points", "must be >= 1");
        check(self.stats_points >= 1, "stats_points", "must be >= 1");
        check(self.capacity_grid >= 1, "capacity_grid", "must be >= 1");
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
