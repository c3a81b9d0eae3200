//! Spectrum availability and capacity engine for secondary networks in the
//! TV white space.

// Validation uses `!(x > 0.0)` so that NaN is rejected with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod availability;
pub mod capacity;
pub mod config;
pub mod error;
pub mod geodata;
pub mod interference;
pub mod numeric;
pub mod propagation;
pub mod protection;
pub mod regulatory;
pub mod scenario;

pub use availability::{AvailabilityResult, ChannelStatus, StudyArea};
pub use config::Config;
pub use error::{Error, Result};
pub use geodata::{GeoPoint, PopulationGrid, TerrainGrid, TransmitterRecord};
pub use regulatory::{Channel, DeviceClass, DeviceParams, ServiceType};
pub use scenario::{Scenario, ScenarioParts};
