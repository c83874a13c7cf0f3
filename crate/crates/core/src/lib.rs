//! Behavioral mixed-signal simulation of CMOS and hybrid CMOS-NEMS
//! neuromorphic cells: a differential-pair integrator synapse and a leaky
//! integrate-and-fire neuron, with energy-per-spike accounting.

pub mod analysis;
pub mod circuit;
pub mod config;
pub mod device;
pub mod error;
pub mod experiments;
pub mod relay;
pub mod sim;
pub mod templates;
pub mod units;

pub use error::{Error, Result};
