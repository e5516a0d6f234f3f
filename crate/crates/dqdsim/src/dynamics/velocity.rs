use super::schedule::Segment;
use crate::error::{Error, Result};
use crate::model::{bisect, diabatic_crossing_gap, diabatic_levels, DeviceParams, Level, Pair};
use crate::units::ghz_per_ns_to_hz_per_s;

/// Finite-difference resolution as a fraction of the ramp duration.
const FD_FRACTION: f64 = 1e-4;
const SCAN_POINTS: usize = 2000;

/// |d gap/dt| (GHz/ns) of a signed gap function over `[0, duration]`, taken where the
/// gap changes sign or, failing that, where |gap| is smallest.
pub fn velocity_of(gap: impl Fn(f64) -> f64, duration: f64) -> f64 {
    let h = duration * FD_FRACTION;
    let mut prev = (0.0, gap(0.0));
    let mut best = prev;
    let mut crossing = None;
    for k in 1..=SCAN_POINTS {
        let t = duration * k as f64 / SCAN_POINTS as f64;
        let g = gap(t);
        if g.abs() < best.1.abs() {
            best = (t, g);
        }
        if crossing.is_none() && prev.1.signum() != g.signum() {
            crossing = Some(bisect(&gap, prev.0, t));
        }
        prev = (t, g);
    }
    let t0 = crossing.unwrap_or(best.0);
    let (a, b) = ((t0 - h).max(0.0), (t0 + h).min(duration));
    ((gap(b) - gap(a)) / (b - a)).abs()
}

/// Level velocity of a ramp at the singlet/triplet crossing, Hz/s.
///
/// The gap is the Δ-free splitting, so the crossing is a true sign change. For the
/// S/T0 pair, which never crosses, the slope is taken at the smallest splitting.
pub fn level_velocity(params: &DeviceParams, seg: &Segment, which: Pair) -> Result<f64> {
    let Segment::Ramp { duration, .. } = *seg else {
        return Err(Error::Schedule(format!("level velocity needs a ramp, got {}", seg.kind())));
    };
    let v = match which {
        Pair::SingletTMinus => velocity_of(|t| diabatic_crossing_gap(params, seg.eps_at(t)), duration),
        Pair::SingletT0 => velocity_of(
            |t| {
                let lv = diabatic_levels(params, seg.eps_at(t));
                lv.energy(Level::T0) - lv.energy(Level::SH)
            },
            duration,
        ),
    };
    Ok(ghz_per_ns_to_hz_per_s(v))
}
