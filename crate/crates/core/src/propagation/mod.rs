//! Path-loss models and their numeric inversion.
//!
//! Distances are meters throughout; losses are dB.

mod hata;
mod itm;

pub use hata::{hata_loss, Environment, HataLoss, HataModel, HATA_MAX_DISTANCE_KM, HATA_MIN_DISTANCE_KM};
pub use itm::{
    itm_aref, itm_coefficients, total_loss, ItmCoefficients, ItmModel, ItmParams, Polarization,
    ITM_MAX_DISTANCE_M, ITM_MIN_DISTANCE_M,
};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_M_S: f64 = 2.998e8;

/// A median path-loss curve over a closed distance interval.
pub trait PathLossModel {
    fn loss_db(&self, d_m: f64) -> f64;
    /// `(min, max)` distance in meters over which the model is defined.
    fn domain_m(&self) -> (f64, f64);
}

/// 20·log10(4π·d·f/C).
pub fn free_space_loss_db(f_mhz: f64, d_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d_m * f_mhz * 1e6 / SPEED_OF_LIGHT_M_S).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpace {
    pub f_mhz: f64,
}

impl PathLossModel for FreeSpace {
    fn loss_db(&self, d_m: f64) -> f64 {
        free_space_loss_db(self.f_mhz, d_m)
    }

    fn domain_m(&self) -> (f64, f64) {
        (1.0, ITM_MAX_DISTANCE_M)
    }
}

/// Where the inversion landed relative to the model domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionBound {
    Interior,
    /// Even the shortest distance loses more than the target.
    BelowDomain,
    /// The target is never exceeded inside the domain.
    BeyondDomain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub distance_m: f64,
    pub bound: InversionBound,
}

impl Inversion {
    pub fn is_clamped(&self) -> bool {
        self.bound != InversionBound::Interior
    }
}

const PROBES: usize = 64;
/// Allowed numerical wobble before a decrease counts as non-monotone.
const MONOTONE_SLACK_DB: f64 = 1e-9;

/// Largest distance whose loss does not exceed `target_db`, to 1 m.
pub fn inverse_loss<M: PathLossModel + ?Sized>(model: &M, target_db: f64) -> Result<Inversion> {
    let (lo, hi) = model.domain_m();
    if target_db.is_nan() {
        return Err(Error::Domain("inverse_loss target is NaN".into()));
    }
    if model.loss_db(lo) > target_db {
        return Ok(Inversion {
            distance_m: lo,
            bound: InversionBound::BelowDomain,
        });
    }

    // log-spaced probe: locate the bracket and verify monotonicity on the way
    let ratio = (hi / lo).powf(1.0 / PROBES as f64);
    let mut prev_d = lo;
    let mut prev_l = model.loss_db(lo);
    let mut bracket = None;
    for k in 1..=PROBES {
        let d = if k == PROBES { hi } else { lo * ratio.powi(k as i32) };
        let l = model.loss_db(d);
        if l < prev_l - MONOTONE_SLACK_DB {
            return Err(Error::NonMonotone { lo_m: prev_d, hi_m: d });
        }
        if l > target_db && bracket.is_none() {
            bracket = Some((prev_d, d));
        }
        prev_d = d;
        prev_l = l;
    }
    let Some((mut a, mut b)) = bracket else {
        return Ok(Inversion {
            distance_m: hi,
            bound: InversionBound::BeyondDomain,
        });
    };
    // invariant: loss(a) <= target < loss(b)
    while b - a > 0.5 {
        let m = 0.5 * (a + b);
        if model.loss_db(m) <= target_db {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Inversion {
        distance_m: a,
        bound: InversionBound::Interior,
    })
}
