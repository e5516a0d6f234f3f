use rayon::prelude::*;

use super::path::{crossing_coupling, passage};
use super::{check_rate, Axis, Curve, Metadata};
use crate::dynamics::{propagate, EvolveOptions, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{labeled_levels, singlet_state, DeviceParams, Level};
use crate::units::hz_per_s_to_ghz_per_ns;

/// How the post-passage state is read.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LzReadout {
    /// Population outside the singlet-lineage eigenstate just past the crossing.
    #[default]
    Projected,
    /// Ramp back to the load point at `rate` µeV/ns, then read the singlet there.
    Return { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzProtocol {
    pub eps_init: f64,
    /// Cap on every approach ramp, µeV/ns.
    pub max_rate: f64,
    /// Search range for the crossing beyond the load point, µeV.
    pub search: f64,
    pub readout: LzReadout,
}

impl Default for LzProtocol {
    fn default() -> Self {
        LzProtocol { eps_init: -50.0, max_rate: 10.0, search: 3000.0, readout: LzReadout::Projected }
    }
}

/// Triplet probability after one passage through the S/T− crossing at each diabatic
/// level velocity (Hz/s).
pub fn lz_single_passage(params: &DeviceParams, velocity_grid: &[f64], b0z: f64) -> Result<Curve> {
    lz_single_passage_with(params, velocity_grid, b0z, &LzProtocol::default(), &EvolveOptions::default())
}

pub fn lz_single_passage_with(
    params: &DeviceParams,
    velocity_grid: &[f64],
    b0z: f64,
    protocol: &LzProtocol,
    opts: &EvolveOptions,
) -> Result<Curve> {
    let params = params.with_field(b0z);
    params.validate()?;
    opts.validate()?;
    check_rate("max_rate", protocol.max_rate)?;
    if let Some(v) = velocity_grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("level velocities must be positive, got {v}")));
    }
    let axis = Axis::new("nu", "Hz/s", velocity_grid.to_vec())?;
    let crossing = crossing_coupling(&params, protocol.eps_init, protocol.eps_init + protocol.search).ok_or_else(|| {
        Error::InvalidInput(format!("no singlet/triplet crossing within {} µeV of the load point", protocol.search))
    })?;
    let psi0 = StateVector::from_real(&singlet_state(&params, protocol.eps_init));

    let run = |nu: f64| -> Result<f64> {
        let pass = passage(&params, protocol.eps_init, &crossing, hz_per_s_to_ghz_per_ns(nu), protocol.max_rate)?;
        let psi = propagate(&params, &pass.segments, &psi0, opts, 0.0)?;
        Ok(match protocol.readout {
            LzReadout::Projected => 1.0 - psi.overlap_real(labeled_levels(&params, pass.eps_end).vector(Level::SH)),
            LzReadout::Return { rate } => {
                let back = [Segment::ramp_at_rate(pass.eps_end, protocol.eps_init, rate)];
                let out = propagate(&params, &back, &psi, opts, 0.0)?;
                1.0 - out.overlap_real(&singlet_state(&params, protocol.eps_init))
            }
        })
    };
    let results: Vec<Result<f64>> = velocity_grid.par_iter().map(|&nu| run(nu)).collect();
    let mut values = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => values.push(p.clamp(0.0, 1.0)),
            Err(e @ Error::StepBudget { .. }) => {
                warnings.push(format!("skipped nu={:e} Hz/s: {e}", velocity_grid[k]));
                skipped.push(k);
                values.push(f64::NAN);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Curve {
        axis,
        value_name: "P_T".into(),
        values,
        skipped,
        metadata: Metadata {
            protocol: format!(
                "lz_single_passage crossing={:.4} ueV coupling={:.6e} GHz readout={:?}",
                crossing.eps, crossing.coupling, protocol.readout
            ),
            params,
            n_shots: None,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::crossing_coupling;
    use std::f64::consts::PI;

    #[test]
    fn follows_landau_zener_formula() {
        let p = DeviceParams { delta11: 2.0, ..DeviceParams::default() };
        let b = 155.0;
        let c = crossing_coupling(&p.with_field(b), -50.0, 3000.0).unwrap().coupling;
        let nu_half = 4.0 * PI * PI * c * c / std::f64::consts::LN_2 * 1e18;
        let grid = [nu_half / 5.0, nu_half, nu_half * 20.0];
        let curve = lz_single_passage(&p, &grid, b).unwrap();
        for (nu, pt) in grid.iter().zip(&curve.values) {
            let expect = 1.0 - (-4.0 * PI * PI * c * c / (nu * 1e-18)).exp();
            assert!((pt - expect).abs() < 1e-3, "nu={nu:e}: {pt} vs {expect}");
        }
    }

    #[test]
    fn budget_overflow_is_skipped() {
        let p = DeviceParams { delta11: 2.0, ..DeviceParams::default() };
        let opts = EvolveOptions { step_budget: 1000, ..EvolveOptions::default() };
        let c = lz_single_passage_with(&p, &[1e15], 155.0, &LzProtocol::default(), &opts).unwrap();
        assert_eq!(c.skipped, vec![0]);
        assert!(c.values[0].is_nan());
        assert!(lz_single_passage(&p, &[-1.0], 155.0).is_err());
    }
}
