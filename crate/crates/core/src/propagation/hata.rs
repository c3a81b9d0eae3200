//! Okumura-Hata median loss for short secondary links.

use serde::{Deserialize, Serialize};

use super::PathLossModel;

pub const HATA_MIN_DISTANCE_KM: f64 = 1.0;
/// Distances out to this bound are extrapolated with the same log-distance
/// slope. Minimum-separation inversions at high EIRP reach past 20 km.
pub const HATA_MAX_DISTANCE_KM: f64 = 100.0;

const F_RANGE: (f64, f64) = (150.0, 1500.0);
const HB_STANDARD: (f64, f64) = (30.0, 200.0);
const HB_EXTENDED: (f64, f64) = (1.0, 200.0);
const HM_RANGE: (f64, f64) = (1.0, 10.0);
const D_STANDARD_KM: (f64, f64) = (1.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    #[default]
    Urban,
    Suburban,
    Rural,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HataLoss {
    pub loss_db: f64,
    /// Set when any input lay outside the standard Hata domain and was
    /// clamped or extrapolated.
    pub out_of_domain: bool,
}

fn clamp(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.clamp(lo, hi)
}

fn outside(x: f64, (lo, hi): (f64, f64)) -> bool {
    !(lo..=hi).contains(&x)
}

pub fn hata_loss(f_mhz: f64, h_b_m: f64, h_m_m: f64, d_km: f64, environment: Environment) -> HataLoss {
    let out_of_domain = outside(f_mhz, F_RANGE)
        || outside(h_b_m, HB_STANDARD)
        || outside(h_m_m, HM_RANGE)
        || outside(d_km, D_STANDARD_KM);
    let f = clamp(f_mhz, F_RANGE);
    let hb = clamp(h_b_m, HB_EXTENDED);
    let hm = clamp(h_m_m, HM_RANGE);
    let d = clamp(d_km, (HATA_MIN_DISTANCE_KM, HATA_MAX_DISTANCE_KM));

    let lf = f.log10();
    let lhb = hb.log10();
    let a_hm = (1.1 * lf - 0.7) * hm - (1.56 * lf - 0.8);
    let urban = 69.55 + 26.16 * lf - 13.82 * lhb - a_hm + (44.9 - 6.55 * lhb) * d.log10();
    let loss_db = match environment {
        Environment::Urban => urban,
        Environment::Suburban => urban - 2.0 * (f / 28.0).log10().powi(2) - 5.4,
        Environment::Rural => urban - 4.78 * lf * lf + 18.33 * lf - 40.94,
    };
    HataLoss { loss_db, out_of_domain }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HataModel {
    pub f_mhz: f64,
    pub h_b_m: f64,
    pub h_m_m: f64,
    pub environment: Environment,
}

impl PathLossModel for HataModel {
    fn loss_db(&self, d_m: f64) -> f64 {
        hata_loss(self.f_mhz, self.h_b_m, self.h_m_m, d_m / 1e3, self.environment).loss_db
    }

    fn domain_m(&self) -> (f64, f64) {
        (HATA_MIN_DISTANCE_KM * 1e3, HATA_MAX_DISTANCE_KM * 1e3)
    }
}
