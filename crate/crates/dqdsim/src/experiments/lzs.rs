use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};

use super::path::{crossing_coupling, passage, Crossing, Echo};
use super::{check_rate, Axis, Experiment, PTMap};
use crate::dynamics::{propagate, EvolveOptions, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{h5_real, singlet_state, DeviceParams};
use crate::noise::NoiseSample;
use crate::units::hz_per_s_to_ghz_per_ns;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzsProtocol {
    pub eps_init: f64,
    /// Cap on approach ramps, µeV/ns.
    pub max_rate: f64,
    /// Passage velocity in Hz/s; `None` picks the one splitting the state evenly.
    pub passage_velocity: Option<f64>,
    /// Rate of the ramp from the end of the passage to the dwell point, µeV/ns.
    pub ramp_rate: f64,
    pub search: f64,
}

impl Default for LzsProtocol {
    fn default() -> Self {
        LzsProtocol { eps_init: -50.0, max_rate: 10.0, passage_velocity: None, ramp_rate: 10.0, search: 3000.0 }
    }
}

/// Semi-diabatic passage into (1,1), ramp to ε, dwell τ, and the mirror image back.
#[derive(Debug, Clone)]
pub struct LzsMap {
    params: DeviceParams,
    eps: Axis,
    tau: Axis,
    protocol: LzsProtocol,
    opts: EvolveOptions,
    crossing: Crossing,
    /// Velocity actually used, GHz/ns.
    nu: f64,
    /// State at the end of the passage and where that is.
    split: StateVector,
    eps_split: f64,
}

impl LzsMap {
    pub fn new(params: &DeviceParams, eps_grid: &[f64], tau_grid: &[f64], protocol: LzsProtocol) -> Result<Self> {
        params.validate()?;
        check_rate("ramp_rate", protocol.ramp_rate)?;
        check_rate("max_rate", protocol.max_rate)?;
        let opts = EvolveOptions::default();
        let crossing = crossing_coupling(params, protocol.eps_init, protocol.eps_init + protocol.search)
            .ok_or_else(|| Error::InvalidInput("no singlet/triplet crossing to interfere at".into()))?;
        let nu = match protocol.passage_velocity {
            Some(v) => {
                check_rate("passage_velocity", v)?;
                hz_per_s_to_ghz_per_ns(v)
            }
            // 4π²c²/ν = ln 2; without coupling any finite velocity will do
            None if crossing.coupling > 0.0 => 4.0 * PI * PI * crossing.coupling.powi(2) / LN_2,
            None => 1.0,
        };
        let pass = passage(params, protocol.eps_init, &crossing, nu, protocol.max_rate)?;
        let psi0 = StateVector::from_real(&singlet_state(params, protocol.eps_init));
        let split = propagate(params, &pass.segments, &psi0, &opts, 0.0)?;
        Ok(LzsMap {
            params: params.clone(),
            eps: Axis::new("eps", "ueV", eps_grid.to_vec())?,
            tau: Axis::new("tau", "ns", tau_grid.to_vec())?,
            protocol,
            opts,
            crossing,
            nu,
            split,
            eps_split: pass.eps_end,
        })
    }

    pub fn crossing(&self) -> Crossing {
        self.crossing
    }

    /// Passage velocity, Hz/s.
    pub fn passage_velocity(&self) -> f64 {
        self.nu * 1e18
    }

    fn row(&self, params: &DeviceParams, eps: f64) -> Result<Vec<f64>> {
        let psi = if eps == self.eps_split {
            self.split
        } else {
            let ramp = [Segment::ramp_at_rate(self.eps_split, eps, self.protocol.ramp_rate)];
            propagate(params, &ramp, &self.split, &self.opts, 0.0)?
        };
        let echo = Echo::new(&h5_real(params, eps), &psi);
        Ok(self.tau.values.iter().map(|&t| 1.0 - echo.return_probability(t)).collect())
    }
}

impl Experiment for LzsMap {
    fn params(&self) -> &DeviceParams {
        &self.params
    }

    fn axes(&self) -> (&Axis, &Axis) {
        (&self.eps, &self.tau)
    }

    fn protocol(&self) -> String {
        format!(
            "lzs_map passage={:.6e} Hz/s crossing={:.4} ueV ramp={} ueV/ns",
            self.passage_velocity(),
            self.crossing.eps,
            self.protocol.ramp_rate
        )
    }

    /// The passage itself is kept noise-free; the offset applies from the ramp on.
    fn probabilities(&self, noise: &NoiseSample) -> Result<Vec<f64>> {
        let params = noise.perturb(&self.params);
        let rows = self.eps.values.par_iter().map(|&e| self.row(&params, e + noise.d_eps)).collect::<Result<Vec<_>>>()?;
        Ok(rows.concat())
    }
}

pub fn lzs_map(params: &DeviceParams, eps_grid: &[f64], tau_grid: &[f64]) -> Result<PTMap> {
    LzsMap::new(params, eps_grid, tau_grid, LzsProtocol::default())?.map()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> DeviceParams {
        DeviceParams { b0z: 50.0, delta11: 5.0, ..DeviceParams::default() }
    }

    #[test]
    fn even_split_gives_full_contrast_fringes() {
        let tau: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
        let m = lzs_map(&device(), &[30.0], &tau).unwrap();
        let (lo, hi) = m.row(0).iter().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi > 0.95 && lo < 0.05, "{lo} {hi}");
    }

    /// Only the small charge excitation of the ramps remains.
    #[test]
    fn no_coupling_flat_map() {
        let p = DeviceParams { delta11: 0.0, ..device() };
        let m = lzs_map(&p, &[20.0, 40.0], &[0.0, 1.0, 2.5, 7.0]).unwrap();
        assert!(m.values.iter().all(|&v| v < 2e-3), "{:?}", m.values);
    }
}
