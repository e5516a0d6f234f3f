//! Parameter sweeps of the canonical protocols, each returning triplet probabilities.
//!
//! Every two-dimensional protocol is an [`Experiment`]: preparation that does not
//! depend on noise is done once in the constructor, and [`Experiment::probabilities`]
//! evaluates the whole grid for one quasi-static noise draw.

mod esr;
mod exchange;
mod funnel;
mod gap;
mod lz;
mod lzs;
mod map;
mod path;

pub use esr::{default_esr_pulse, esr_map, EsrMap, EsrProtocol};
pub use exchange::{exchange_map, ExchangeMap, ExchangeProtocol};
pub use funnel::{spin_funnel, FunnelProtocol, SpinFunnel};
pub use gap::gap_curve;
pub use lz::{lz_single_passage, lz_single_passage_with, LzProtocol, LzReadout};
pub use lzs::{lzs_map, LzsMap, LzsProtocol};
pub use map::{Axis, Curve, Metadata, PTMap};
pub use path::{crossing_coupling, Crossing};

use crate::error::Result;
use crate::model::DeviceParams;
use crate::noise::NoiseSample;

pub trait Experiment: Sync {
    fn params(&self) -> &DeviceParams;
    fn axes(&self) -> (&Axis, &Axis);
    fn protocol(&self) -> String;

    /// P_T per cell, row-major over (axis 1, axis 2), under one noise draw.
    fn probabilities(&self, noise: &NoiseSample) -> Result<Vec<f64>>;

    /// Noise-free map.
    fn map(&self) -> Result<PTMap> {
        self.assemble(self.probabilities(&NoiseSample::none())?, None)
    }

    fn cell_count(&self) -> usize {
        let (a, b) = self.axes();
        a.len() * b.len()
    }

    /// Wraps per-cell values into a map carrying this experiment's metadata.
    fn assemble(&self, values: Vec<f64>, n_shots: Option<u64>) -> Result<PTMap> {
        let (a, b) = self.axes();
        let params = self.params();
        let warnings = a.values.iter().filter_map(|&e| params.validity_warning(e)).collect();
        PTMap::new(a.clone(), b.clone(), values, Metadata { protocol: self.protocol(), params: params.clone(), n_shots, warnings })
    }
}

pub(crate) fn check_duration(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(crate::error::Error::param(name, format!("must be a finite duration ≥ 0, got {value}")));
    }
    Ok(())
}

pub(crate) fn check_rate(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(crate::error::Error::param(name, format!("must be finite and positive, got {value}")));
    }
    Ok(())
}
