use rayon::prelude::*;

use super::path::Echo;
use super::{check_duration, check_rate, Axis, Experiment, PTMap};
use crate::dynamics::{adiabatic_prepare_with, propagate, EvolveOptions, PrepProtocol, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{h5_real, DeviceParams};
use crate::noise::NoiseSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeProtocol {
    pub prep: PrepProtocol,
    /// End of the adiabatic preparation, deep in (1,1), µeV.
    pub eps_far: f64,
    /// Duration of the slow preparation leg, ns.
    pub prep_ramp: f64,
    /// Duration of the plunge to the exchange point, ns.
    pub plunge: f64,
}

impl Default for ExchangeProtocol {
    fn default() -> Self {
        ExchangeProtocol {
            prep: PrepProtocol { fast_rate: 20.0, ..PrepProtocol::default() },
            eps_far: 1000.0,
            prep_ramp: 2000.0,
            plunge: 2.0,
        }
    }
}

/// Adiabatic preparation of the product state, plunge to ε, exchange for τ, then the
/// mirror image back to the load point.
#[derive(Debug, Clone)]
pub struct ExchangeMap {
    params: DeviceParams,
    eps: Axis,
    tau: Axis,
    protocol: ExchangeProtocol,
    opts: EvolveOptions,
    prepared: StateVector,
    warnings: Vec<String>,
}

impl ExchangeMap {
    pub fn new(params: &DeviceParams, eps_grid: &[f64], tau_grid: &[f64], protocol: ExchangeProtocol) -> Result<Self> {
        params.validate()?;
        check_duration("plunge", protocol.plunge)?;
        check_rate("prep_ramp", protocol.prep_ramp)?;
        if protocol.eps_far <= protocol.prep.knee {
            return Err(Error::param("eps_far", "must lie beyond the end of the fast preparation leg"));
        }
        let opts = EvolveOptions::default();
        let prep = adiabatic_prepare_with(params, protocol.eps_far, protocol.prep_ramp, &protocol.prep, &opts)?;
        Ok(ExchangeMap {
            params: params.clone(),
            eps: Axis::new("eps", "ueV", eps_grid.to_vec())?,
            tau: Axis::new("tau", "ns", tau_grid.to_vec())?,
            protocol,
            opts,
            prepared: prep.state,
            warnings: prep.warnings,
        })
    }

    /// State at the far point after preparation.
    pub fn prepared(&self) -> &StateVector {
        &self.prepared
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same preparation with other noise widths.
    pub fn with_noise(&self, sigma_eps: f64, sigma_delta: f64) -> Self {
        let mut out = self.clone();
        out.params.sigma_eps = sigma_eps;
        out.params.sigma_delta = sigma_delta;
        out
    }

    /// Same preparation on other grids.
    pub fn regrid(&self, eps_grid: &[f64], tau_grid: &[f64]) -> Result<Self> {
        Ok(ExchangeMap {
            eps: Axis::new("eps", "ueV", eps_grid.to_vec())?,
            tau: Axis::new("tau", "ns", tau_grid.to_vec())?,
            ..self.clone()
        })
    }

    fn row(&self, params: &DeviceParams, eps: f64) -> Result<Vec<f64>> {
        let plunge = [Segment::ramp(self.protocol.eps_far, eps, self.protocol.plunge)];
        let psi = propagate(params, &plunge, &self.prepared, &self.opts, 0.0)?;
        let echo = Echo::new(&h5_real(params, eps), &psi);
        Ok(self.tau.values.iter().map(|&t| 1.0 - echo.return_probability(t)).collect())
    }
}

impl Experiment for ExchangeMap {
    fn params(&self) -> &DeviceParams {
        &self.params
    }

    fn axes(&self) -> (&Axis, &Axis) {
        (&self.eps, &self.tau)
    }

    fn protocol(&self) -> String {
        let p = &self.protocol;
        format!(
            "exchange_map prep={}->{}@{}ueV/ns->{} ueV in {} ns plunge={} ns",
            p.prep.eps_init, p.prep.knee, p.prep.fast_rate, p.eps_far, p.prep_ramp, p.plunge
        )
    }

    /// Preparation stays noise-free; the offset applies to the plunge and dwell.
    fn probabilities(&self, noise: &NoiseSample) -> Result<Vec<f64>> {
        let params = noise.perturb(&self.params);
        let rows = self.eps.values.par_iter().map(|&e| self.row(&params, e + noise.d_eps)).collect::<Result<Vec<_>>>()?;
        Ok(rows.concat())
    }
}

pub fn exchange_map(params: &DeviceParams, eps_grid: &[f64], tau_grid: &[f64], b0z: f64) -> Result<PTMap> {
    ExchangeMap::new(&params.with_field(b0z), eps_grid, tau_grid, ExchangeProtocol::default())?.map()
}
