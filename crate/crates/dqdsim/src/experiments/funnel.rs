use rayon::prelude::*;

use super::path::{states_along, Echo, Leg};
use super::{check_duration, check_rate, Axis, Experiment, PTMap};
use crate::dynamics::{EvolveOptions, StateVector};
use crate::error::Result;
use crate::model::{h5_real, singlet_state, DeviceParams};
use crate::noise::NoiseSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelProtocol {
    /// Where the (0,2) singlet is loaded, µeV.
    pub eps_init: f64,
    /// Ramp rate to and from the dwell point, µeV/ns.
    pub ramp_rate: f64,
}

impl Default for FunnelProtocol {
    fn default() -> Self {
        FunnelProtocol { eps_init: -50.0, ramp_rate: 50.0 }
    }
}

/// Load the singlet, ramp to ε, dwell, ramp back along the same path and count every
/// outcome other than the singlet as blockaded.
#[derive(Debug, Clone)]
pub struct SpinFunnel {
    params: DeviceParams,
    eps: Axis,
    field: Axis,
    dwell: f64,
    protocol: FunnelProtocol,
    opts: EvolveOptions,
}

impl SpinFunnel {
    pub fn new(params: &DeviceParams, eps_grid: &[f64], b_grid: &[f64], dwell: f64, protocol: FunnelProtocol) -> Result<Self> {
        params.validate()?;
        check_duration("dwell", dwell)?;
        check_rate("ramp_rate", protocol.ramp_rate)?;
        Ok(SpinFunnel {
            params: params.clone(),
            eps: Axis::new("eps", "ueV", eps_grid.to_vec())?,
            field: Axis::new("B", "mT", b_grid.to_vec())?,
            dwell,
            protocol,
            opts: EvolveOptions::default(),
        })
    }

    /// Triplet probability along ε for one applied field.
    fn column(&self, params: &DeviceParams, d_eps: f64) -> Result<Vec<f64>> {
        let start = self.protocol.eps_init + d_eps;
        let psi0 = StateVector::from_real(&singlet_state(params, start));
        let targets: Vec<f64> = self.eps.values.iter().map(|e| e + d_eps).collect();
        let mut states = vec![psi0; targets.len()];
        // one sweep each way from the load point, sampled at the grid detunings
        for up in [true, false] {
            let idx: Vec<usize> = (0..targets.len()).filter(|&i| (targets[i] >= start) == up).collect();
            let Some(edge) = idx.iter().map(|&i| targets[i]).reduce(if up { f64::max } else { f64::min }) else {
                continue;
            };
            let sampled: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
            let legs = [Leg { to: edge, rate: self.protocol.ramp_rate }];
            for (i, s) in idx.iter().zip(states_along(params, start, &psi0, &legs, &sampled, &self.opts)?) {
                states[*i] = s;
            }
        }
        Ok(targets
            .iter()
            .zip(&states)
            .map(|(&e, psi)| 1.0 - Echo::new(&h5_real(params, e), psi).return_probability(self.dwell))
            .collect())
    }
}

impl Experiment for SpinFunnel {
    fn params(&self) -> &DeviceParams {
        &self.params
    }

    fn axes(&self) -> (&Axis, &Axis) {
        (&self.eps, &self.field)
    }

    fn protocol(&self) -> String {
        format!(
            "spin_funnel load={} ueV ramp={} ueV/ns dwell={} ns",
            self.protocol.eps_init, self.protocol.ramp_rate, self.dwell
        )
    }

    fn probabilities(&self, noise: &NoiseSample) -> Result<Vec<f64>> {
        let params = noise.perturb(&self.params);
        let columns = self
            .field
            .values
            .par_iter()
            .map(|&b| self.column(&params.with_field(b), noise.d_eps))
            .collect::<Result<Vec<_>>>()?;
        let (ne, nb) = (self.eps.len(), self.field.len());
        Ok((0..ne * nb).map(|k| columns[k % nb][k / nb]).collect())
    }
}

pub fn spin_funnel(params: &DeviceParams, eps_grid: &[f64], b_grid: &[f64], dwell: f64) -> Result<PTMap> {
    SpinFunnel::new(params, eps_grid, b_grid, dwell, FunnelProtocol::default())?.map()
}
