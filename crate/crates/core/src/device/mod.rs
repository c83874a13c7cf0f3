//! Non-relay branch devices: behavioral subthreshold MOSFETs and ideal passives.

mod mos;
mod passive;

pub use mos::{mos_drain_current, mos_off_current, MosParams, Polarity, REFERENCE_VDS};
pub use passive::{PassiveKind, PassiveParams};

/// Thermal voltage at 300 K.
pub const THERMAL_VOLTAGE: f64 = 0.02585;
