//! Dynamical phase between the hybridized singlet and its partner triplet.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::dynamics::{PulseSchedule, Segment};
use crate::model::{labeled_levels, polarized_partner, DeviceParams, Level, Pair};

/// Simpson intervals per ramp (even).
const RAMP_INTERVALS: usize = 256;

fn splitting(params: &DeviceParams, eps: f64, pair: Pair, partner: Level) -> f64 {
    let levels = labeled_levels(params, eps);
    let other = match pair {
        Pair::SingletT0 => Level::T0,
        Pair::SingletTMinus => partner,
    };
    levels.energy(Level::SH) - levels.energy(other)
}

/// ∫ 2π(E_SH − E_partner)(ε(t)) dt over the segments, rad. Constant-detuning
/// segments are integrated exactly, ramps by Simpson's rule.
pub fn phase_along(params: &DeviceParams, segments: &[Segment], pair: Pair) -> f64 {
    let partner = polarized_partner(params);
    let gap = |e: f64| splitting(params, e, pair, partner);
    segments
        .iter()
        .map(|seg| {
            let (a, b, d) = (seg.eps_start(), seg.eps_end(), seg.duration());
            if a == b {
                return 2.0 * PI * gap(a) * d;
            }
            let h = d / RAMP_INTERVALS as f64;
            let sum: f64 = (0..=RAMP_INTERVALS)
                .map(|k| {
                    let w = if k == 0 || k == RAMP_INTERVALS { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    w * gap(seg.eps_at(k as f64 * h))
                })
                .sum();
            2.0 * PI * sum * h / 3.0
        })
        .sum()
}

/// Phase between the hybridized singlet and the polarized triplet accumulated by the
/// whole schedule.
pub fn stueckelberg_phase(params: &DeviceParams, schedule: &PulseSchedule) -> f64 {
    phase_along(params, &schedule.segments, Pair::SingletTMinus)
}

/// Constant φ_S that best places the given fringe maxima at φ + φ_S ≡ 0 (mod 2π):
/// the circular mean of −φ. The passage contributes this offset, which the adiabatic
/// phase integral does not contain. Result in (−π, π].
pub fn stokes_offset(phases_at_maxima: &[f64]) -> f64 {
    let z: Complex<f64> = phases_at_maxima.iter().map(|&p| Complex::from_polar(1.0, -p)).sum();
    z.arg()
}
