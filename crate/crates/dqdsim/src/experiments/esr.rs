use rayon::prelude::*;

use super::path::{states_along, transposed_overlap, Leg};
use super::{check_rate, Axis, Experiment, PTMap};
use crate::dynamics::{propagate, Drive, EvolveOptions, PrepProtocol, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{singlet_state, DeviceParams};
use crate::noise::NoiseSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsrProtocol {
    pub prep: PrepProtocol,
    /// Rate of the slow leg beyond the knee, µeV/ns.
    pub prep_rate: f64,
}

impl Default for EsrProtocol {
    fn default() -> Self {
        EsrProtocol { prep: PrepProtocol::default(), prep_rate: 0.5 }
    }
}

/// 25 µs drive of 20 kHz Rabi frequency; detuning and carrier are set per cell.
pub fn default_esr_pulse() -> Segment {
    Segment::drive(0.0, 25_000.0, Drive { freq: 0.0, amp: 0.02, phase: 0.0 })
}

/// Prepare the m=0 ground state at ε, drive at each carrier frequency, and map back
/// along the preparation path.
#[derive(Debug, Clone)]
pub struct EsrMap {
    params: DeviceParams,
    eps: Axis,
    freq: Axis,
    duration: f64,
    amp: f64,
    phase: f64,
    protocol: EsrProtocol,
    opts: EvolveOptions,
    prepared: Vec<StateVector>,
    /// Time at which the drive starts, for the carrier phase.
    start_times: Vec<f64>,
}

impl EsrMap {
    pub fn new(params: &DeviceParams, eps_grid: &[f64], freq_grid: &[f64], pulse: &Segment, protocol: EsrProtocol) -> Result<Self> {
        params.validate()?;
        check_rate("prep_rate", protocol.prep_rate)?;
        let Segment::Drive { duration, drive, .. } = *pulse else {
            return Err(Error::Schedule(format!("ESR pulse must be a drive segment, got {}", pulse.kind())));
        };
        let p = &protocol.prep;
        if let Some(e) = eps_grid.iter().find(|&&e| e < p.eps_init) {
            return Err(Error::InvalidInput(format!("detuning {e} µeV lies before the load point {} µeV", p.eps_init)));
        }
        let eps = Axis::new("eps", "ueV", eps_grid.to_vec())?;
        let freq = Axis::new("f", "GHz", freq_grid.to_vec())?;
        let opts = EvolveOptions::default();
        let top = eps_grid.iter().copied().fold(p.knee, f64::max);
        let legs = [Leg { to: p.knee, rate: p.fast_rate }, Leg { to: top, rate: protocol.prep_rate }];
        let psi0 = StateVector::from_real(&singlet_state(params, p.eps_init));
        let prepared = states_along(params, p.eps_init, &psi0, &legs, eps_grid, &opts)?;
        let start_times = eps_grid
            .iter()
            .map(|&e| {
                let fast = (e.min(p.knee) - p.eps_init) / p.fast_rate;
                fast + (e - p.knee).max(0.0) / protocol.prep_rate
            })
            .collect();
        Ok(EsrMap {
            params: params.clone(),
            eps,
            freq,
            duration,
            amp: drive.amp,
            phase: drive.phase,
            protocol,
            opts,
            prepared,
            start_times,
        })
    }

    fn cell(&self, params: &DeviceParams, i: usize, freq: f64, d_eps: f64) -> Result<f64> {
        let seg = Segment::drive(self.eps.values[i] + d_eps, self.duration, Drive { freq, amp: self.amp, phase: self.phase });
        let psi = &self.prepared[i];
        let out = propagate(params, &[seg], psi, &self.opts, self.start_times[i])?;
        Ok(1.0 - transposed_overlap(psi, &out))
    }
}

impl Experiment for EsrMap {
    fn params(&self) -> &DeviceParams {
        &self.params
    }

    fn axes(&self) -> (&Axis, &Axis) {
        (&self.eps, &self.freq)
    }

    fn protocol(&self) -> String {
        format!(
            "esr_map pulse={} ns amp={} MHz prep knee={} ueV then {} ueV/ns",
            self.duration, self.amp, self.protocol.prep.knee, self.protocol.prep_rate
        )
    }

    /// Preparation and map-back stay noise-free; the offset applies during the drive.
    fn probabilities(&self, noise: &NoiseSample) -> Result<Vec<f64>> {
        let params = noise.perturb(&self.params);
        let nf = self.freq.len();
        (0..self.eps.len() * nf)
            .into_par_iter()
            .map(|k| self.cell(&params, k / nf, self.freq.values[k % nf], noise.d_eps))
            .collect()
    }
}

pub fn esr_map(params: &DeviceParams, eps_grid: &[f64], freq_grid: &[f64], pulse: &Segment) -> Result<PTMap> {
    EsrMap::new(params, eps_grid, freq_grid, pulse, EsrProtocol::default())?.map()
}
