//! Ramp-in from the (0,2) singlet to a (1,1) operating point.
//!
//! A fast leg crosses the charge anticrossing and the S/T− crossing (fast enough to
//! stay diabatic with respect to Δ, slow enough to follow t_c). A slow leg then
//! carries the singlet adiabatically into the product state favoured by δE_Z.

use nalgebra::Vector5;
use std::f64::consts::PI;

use super::evolve::{propagate, EvolveOptions};
use super::schedule::{Segment, StateVector};
use super::velocity::level_velocity;
use crate::error::{Error, Result};
use crate::model::{
    delta_theta, diabatic_levels, h5_real, polarized_partner, singlet_state, singlet_triplet_crossings, tunnel_coupling,
    DeviceParams, Level, Pair, S11, T_ZERO,
};
use crate::units::{hz_per_s_to_ghz_per_ns, mhz, H_UEV_PER_GHZ};

/// Leak probability above which a condition counts as violated.
const WARN_LEVEL: f64 = 0.05;
const ADIABATIC_PROBES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepProtocol {
    /// Initialization point, deep in (0,2), µeV.
    pub eps_init: f64,
    /// End of the fast leg, µeV.
    pub knee: f64,
    /// Fast-leg ramp rate, µeV/ns.
    pub fast_rate: f64,
}

impl Default for PrepProtocol {
    fn default() -> Self {
        PrepProtocol { eps_init: -50.0, knee: 50.0, fast_rate: 10.0 }
    }
}

impl PrepProtocol {
    /// The ramp-in segments to `eps_target`, the slow leg lasting `ramp` ns. Empty for
    /// an instantaneous ramp.
    pub fn segments(&self, eps_target: f64, ramp: f64) -> Vec<Segment> {
        if ramp <= 0.0 || eps_target == self.eps_init {
            return Vec::new();
        }
        if eps_target > self.knee && self.knee > self.eps_init {
            vec![Segment::ramp_at_rate(self.eps_init, self.knee, self.fast_rate), Segment::ramp(self.knee, eps_target, ramp)]
        } else {
            vec![Segment::ramp(self.eps_init, eps_target, ramp)]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrepDiagnostics {
    /// Largest Landau-Zener transfer into the polarized triplet over all S/T− crossings.
    pub triplet_leak: Option<f64>,
    /// Probability of leaving the hybridized singlet at the charge anticrossing.
    pub charge_diabatic: Option<f64>,
    /// max |⟨m|dH/dt|S_H⟩| / (2π·gap²) over the m=0 partners along the schedule.
    pub adiabaticity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub state: StateVector,
    pub segments: Vec<Segment>,
    pub diagnostics: PrepDiagnostics,
    pub warnings: Vec<String>,
}

/// exp(−4π²c²/ν): Landau-Zener probability of staying diabatic for coupling `c` (GHz)
/// and diabatic level velocity `nu` (GHz/ns).
pub fn lz_diabatic(coupling: f64, nu: f64) -> f64 {
    (-4.0 * PI * PI * coupling * coupling / nu).exp()
}

pub fn adiabatic_prepare(params: &DeviceParams, eps_target: f64, ramp: f64) -> Result<Prepared> {
    adiabatic_prepare_with(params, eps_target, ramp, &PrepProtocol::default(), &EvolveOptions::default())
}

pub fn adiabatic_prepare_with(
    params: &DeviceParams,
    eps_target: f64,
    ramp: f64,
    protocol: &PrepProtocol,
    opts: &EvolveOptions,
) -> Result<Prepared> {
    params.validate()?;
    if !(ramp >= 0.0) || !eps_target.is_finite() {
        return Err(Error::param("ramp", format!("needs a finite target and ramp ≥ 0, got {eps_target} µeV / {ramp} ns")));
    }
    let mut warnings = Vec::new();
    let start = singlet_state(params, protocol.eps_init);
    let lv = diabatic_levels(params, protocol.eps_init);
    if lv.energy(Level::SH) > lv.energy(polarized_partner(params)) {
        warnings.push(format!("singlet is not the ground state at the initialization point {} µeV", protocol.eps_init));
    }
    let segments = protocol.segments(eps_target, ramp);
    let psi0 = StateVector::from_real(&start);
    let state = if segments.is_empty() { psi0 } else { propagate(params, &segments, &psi0, opts, 0.0)? };
    let diagnostics = diagnose(params, &segments)?;
    if let Some(p) = diagnostics.triplet_leak.filter(|&p| p > WARN_LEVEL) {
        warnings.push(format!("S/T- crossing is not diabatic: transfer probability {p:.3}"));
    }
    if let Some(p) = diagnostics.charge_diabatic.filter(|&p| p > WARN_LEVEL) {
        warnings.push(format!("charge anticrossing is not adiabatic: diabatic probability {p:.3}"));
    }
    if diagnostics.adiabaticity > 0.1 {
        warnings.push(format!("slow leg is not adiabatic: first-order estimate {:.3}", diagnostics.adiabaticity));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Prepared { state, segments, diagnostics, warnings })
}

fn diagnose(params: &DeviceParams, segments: &[Segment]) -> Result<PrepDiagnostics> {
    let mut d = PrepDiagnostics::default();
    for seg in segments {
        let (a, b) = (seg.eps_start().min(seg.eps_end()), seg.eps_start().max(seg.eps_end()));
        let rate = (seg.eps_end() - seg.eps_start()).abs() / seg.duration();
        if !singlet_triplet_crossings(params, a, b).is_empty() {
            let nu = hz_per_s_to_ghz_per_ns(level_velocity(params, seg, Pair::SingletTMinus)?);
            let crossing = singlet_triplet_crossings(params, a, b)[0];
            let p = 1.0 - lz_diabatic(mhz(delta_theta(params, crossing)), nu);
            d.triplet_leak = Some(d.triplet_leak.map_or(p, |q: f64| q.max(p)));
        }
        if a < 0.0 && b > 0.0 {
            let p = lz_diabatic(tunnel_coupling(params, 0.0), rate / H_UEV_PER_GHZ);
            d.charge_diabatic = Some(d.charge_diabatic.map_or(p, |q: f64| q.max(p)));
        }
        for k in 0..=ADIABATIC_PROBES {
            let eps = a + (b - a) * k as f64 / ADIABATIC_PROBES as f64;
            d.adiabaticity = d.adiabaticity.max(adiabatic_parameter(params, eps, rate));
        }
    }
    Ok(d)
}

/// First-order non-adiabatic amplitude out of S_H at detuning `eps` for ramp rate
/// `rate` (µeV/ns).
fn adiabatic_parameter(params: &DeviceParams, eps: f64, rate: f64) -> f64 {
    let step = 1e-3;
    let dh = (h5_real(params, eps + step) - h5_real(params, eps - step)) / (2.0 * step) * rate;
    let lv = diabatic_levels(params, eps);
    let s = lv.vector(Level::SH);
    [Level::T0, Level::SUpper]
        .iter()
        .map(|&m| {
            let gap = lv.energy(m) - lv.energy(Level::SH);
            let el = lv.vector(m).dot(&(dh * s)).abs();
            if gap > 0.0 {
                el / (2.0 * PI * gap * gap)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// The m=0 product state of lower Zeeman energy (dot 1 up, dot 2 down when g2 > g1).
pub fn product_ground(params: &DeviceParams) -> Vector5<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Vector5::zeros();
    v[T_ZERO] = r;
    v[S11] = if params.ez_diff() >= 0.0 { r } else { -r };
    v
}
