//! Quasi-static noise and shot-averaged execution.
//!
//! Each shot draws one detuning offset and one coupling offset that stay fixed for the
//! whole schedule. Randomness comes from ChaCha8 seeded with the master seed; shot `k`
//! uses stream 2k for its noise sample and stream 2k+1 for its blockade outcomes, so
//! every result is a pure function of (seed, shot index).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::{Experiment, PTMap};
use crate::model::DeviceParams;

/// One shot's quasi-static offsets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSample {
    /// Detuning offset, µeV.
    pub d_eps: f64,
    /// Offset of the singlet/triplet coupling, kHz.
    pub d_delta: f64,
    pub seed: u64,
    pub shot: u64,
}

impl NoiseSample {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.d_eps == 0.0 && self.d_delta == 0.0
    }

    /// Parameters with the coupling offset applied. The detuning offset is applied by
    /// each protocol to the points it visits.
    pub fn perturb(&self, params: &DeviceParams) -> DeviceParams {
        DeviceParams { delta11: params.delta11 + self.d_delta * 1e-3, ..params.clone() }
    }
}

pub(crate) fn stream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("sigma is finite and positive").sample(rng)
    }
}

/// Independent zero-mean Gaussian offsets with the configured widths.
pub fn sample(params: &DeviceParams, master_seed: u64, shot_index: u64) -> Result<NoiseSample> {
    for (name, s) in [("sigma_eps", params.sigma_eps), ("sigma_delta", params.sigma_delta)] {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::param(name, format!("must be a finite value ≥ 0, got {s}")));
        }
    }
    let mut rng = stream(master_seed, 2 * shot_index);
    let d_eps = gaussian(&mut rng, params.sigma_eps);
    let d_delta = gaussian(&mut rng, params.sigma_delta);
    Ok(NoiseSample { d_eps, d_delta, seed: master_seed, shot: shot_index })
}

fn check_shots(n_shots: u64) -> Result<()> {
    if n_shots == 0 {
        return Err(Error::param("n_shots", "must be at least 1"));
    }
    Ok(())
}

/// Runs the experiment once per shot under that shot's noise, draws a binary blockade
/// outcome per cell and returns the fraction of blockaded shots.
pub fn shot_average<E: Experiment + ?Sized>(experiment: &E, n_shots: u64, master_seed: u64) -> Result<PTMap> {
    check_shots(n_shots)?;
    let params = experiment.params();
    let cells = experiment.cell_count();
    let counts = (0..n_shots)
        .into_par_iter()
        .map(|shot| -> Result<Vec<f64>> {
            let noise = sample(params, master_seed, shot)?;
            let p = experiment.probabilities(&noise)?;
            let mut rng = stream(master_seed, 2 * shot + 1);
            Ok(p.iter().map(|&q| if q.is_nan() { q } else { f64::from(u8::from(rng.random::<f64>() < q)) }).collect())
        })
        .try_reduce(|| vec![0.0; cells], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    experiment.assemble(counts.into_iter().map(|c| c / n_shots as f64).collect(), Some(n_shots))
}

/// Average of the per-shot probabilities without outcome sampling: the n → ∞ limit of
/// [`shot_average`] for a fixed set of noise draws.
pub fn ensemble_average<E: Experiment + ?Sized>(experiment: &E, n_shots: u64, master_seed: u64) -> Result<PTMap> {
    check_shots(n_shots)?;
    let params = experiment.params();
    let cells = experiment.cell_count();
    let sum = (0..n_shots)
        .into_par_iter()
        .map(|shot| experiment.probabilities(&sample(params, master_seed, shot)?))
        .try_reduce(|| vec![0.0; cells], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    experiment.assemble(sum.into_iter().map(|c| c / n_shots as f64).collect(), Some(n_shots))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_gives_zero_offsets() {
        let p = DeviceParams::default();
        for k in 0..10 {
            let s = sample(&p, 7, k).unwrap();
            assert!(s.is_zero());
            assert_eq!(s.shot, k);
        }
    }

    #[test]
    fn samples_are_reproducible_and_distinct() {
        let p = DeviceParams { sigma_eps: 5.0, sigma_delta: 30.0, ..DeviceParams::default() };
        assert_eq!(sample(&p, 11, 4).unwrap(), sample(&p, 11, 4).unwrap());
        assert_ne!(sample(&p, 11, 4).unwrap().d_eps, sample(&p, 11, 5).unwrap().d_eps);
        assert_ne!(sample(&p, 11, 4).unwrap().d_eps, sample(&p, 12, 4).unwrap().d_eps);
        assert!(sample(&DeviceParams { sigma_eps: -1.0, ..p }, 1, 1).is_err());
    }

    #[test]
    fn perturb_shifts_coupling_in_khz() {
        let p = DeviceParams::default();
        let s = NoiseSample { d_delta: 4.0, ..NoiseSample::none() };
        assert!((s.perturb(&p).delta11 - (p.delta11 + 0.004)).abs() < 1e-15);
    }
}
