//! Two-electron spin dynamics in a tunnel-coupled double quantum dot.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod noise;
pub mod readout;
pub mod units;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
