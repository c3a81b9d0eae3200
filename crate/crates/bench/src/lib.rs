//! Fixtures shared by the criterion benches.

use tvws_core::propagation::ItmParams;
use tvws_core::scenario::{field_params, generate_synthetic, SyntheticKind, SyntheticParams, TerrainKind};
use tvws_core::{Result, Scenario};

/// Broadcast-like ITM inputs: UHF channel, tall tower, rooftop receiver.
pub fn broadcast_params() -> ItmParams {
    ItmParams::new(563.0, 300.0, 10.0, 90.0)
}

/// One tower over rough terrain.
pub fn rough_single_tower() -> Result<Scenario> {
    let params = SyntheticParams {
        terrain: TerrainKind::Rough { delta_h_m: 90.0 },
        ..SyntheticParams::default()
    };
    generate_synthetic(SyntheticKind::SingleTower, &params, 1)
}

/// A ten-tower field around channel 30 with contours already computed.
pub fn field_with_contours() -> Result<Scenario> {
    let s = generate_synthetic(SyntheticKind::UniformField, &field_params(10, (26..=34).collect()), 3)?;
    s.contours()?;
    Ok(s)
}
