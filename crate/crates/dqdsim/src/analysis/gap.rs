//! Tunnel-coupling and g-factor difference from singlet/T0 splittings.

use super::fit::{FitOptions, FitResult, Problem};
use crate::error::{Error, Result};
use crate::model::{labeled_levels, DeviceParams, Level, Pair};

/// One measured splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub eps: f64,
    /// Applied field, mT.
    pub b0z: f64,
    /// |E_SH − E_T0|, GHz.
    pub gap: f64,
    /// Uncertainty in GHz; without one the point is weighted by its own size.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapModel {
    /// tc0, ε₀ and δg free.
    Decaying,
    /// tc independent of detuning; tc0 and δg free.
    ConstantTc,
}

impl GapModel {
    fn names(self) -> &'static [&'static str] {
        match self {
            GapModel::Decaying => &["tc0", "tc_decay", "delta_g"],
            GapModel::ConstantTc => &["tc0", "delta_g"],
        }
    }

    fn device(self, prior: &DeviceParams, x: &[f64]) -> DeviceParams {
        let (tc0, tc_decay, dg) = match self {
            GapModel::Decaying => (x[0], x[1], x[2]),
            GapModel::ConstantTc => (x[0], f64::INFINITY, x[1]),
        };
        let g = prior.g_mean();
        DeviceParams { tc0, tc_decay, g1: g - dg / 2.0, g2: g + dg / 2.0, ..prior.clone() }
    }
}

/// Fits the exact singlet/T0 splitting to the data. Everything not fitted (mean
/// g-factor, offset field, Δ) comes from `prior`, whose tc0, ε₀ and |g2 − g1| also
/// seed the search. δg is reported as a magnitude since the splitting is even in it.
pub fn fit_gap_model(data: &[GapPoint], prior: &DeviceParams, model: GapModel, opts: &FitOptions) -> Result<FitResult> {
    prior.validate()?;
    let names = model.names();
    if data.len() <= names.len() {
        return Err(Error::InvalidInput(format!("{} points for {} parameters", data.len(), names.len())));
    }
    let mut sigma = Vec::with_capacity(data.len());
    for p in data {
        if !(p.eps.is_finite() && p.b0z.is_finite() && p.gap.is_finite() && p.gap > 0.0) {
            return Err(Error::InvalidInput(format!("bad gap point {p:?}")));
        }
        let s = p.sigma.unwrap_or(p.gap);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("bad uncertainty in {p:?}")));
        }
        sigma.push(s);
    }
    let gaps: Vec<f64> = data.iter().map(|p| p.gap).collect();
    let predict = |x: &[f64]| {
        let device = model.device(prior, x);
        data.iter()
            .map(|p| labeled_levels(&device.with_field(p.b0z), p.eps).gap(Pair::SingletT0, Level::TMinus))
            .collect()
    };
    let dg = (prior.g2 - prior.g1).abs().max(1e-5);
    let (guess, bounds, scale) = match model {
        GapModel::Decaying => (
            vec![prior.tc0, prior.tc_decay.clamp(10.0, 1e4), dg],
            vec![(1e-4, 100.0), (1.0, 1e5), (0.0, 0.1)],
            vec![prior.tc0, prior.tc_decay.clamp(10.0, 1e4), dg],
        ),
        GapModel::ConstantTc => (vec![prior.tc0, dg], vec![(1e-4, 100.0), (0.0, 0.1)], vec![prior.tc0, dg]),
    };
    let problem = Problem { names, model: &predict, data: &gaps, sigma: &sigma, bounds: &bounds, scale: &scale };
    Ok(problem.solve(&guess, opts))
}
