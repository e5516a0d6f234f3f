//! Building blocks shared by the protocols: states sampled along a ramp, the echo
//! amplitude of a mirrored dwell, and constant-velocity passages through the S/T−
//! crossing.

use nalgebra::Matrix5;
use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

use crate::dynamics::{propagate, EvolveOptions, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{bisect, delta_theta, diabatic_crossing_gap, h5_real, singlet_triplet_crossings, DeviceParams};
use crate::units::mhz;

/// One leg of a piecewise-linear sweep: ramp to `to` at `rate` µeV/ns.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub to: f64,
    pub rate: f64,
}

/// States reached by sweeping from `start` (in `psi0`) through `legs`, sampled at
/// each target. All legs must run in one direction and the targets must lie on them.
pub(crate) fn states_along(
    params: &DeviceParams,
    start: f64,
    psi0: &StateVector,
    legs: &[Leg],
    targets: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<StateVector>> {
    let end = legs.last().map_or(start, |l| l.to);
    let dir = (end - start).signum();
    let on_path = |e: f64| (e - start) * dir >= -1e-12 && (end - e) * dir >= -1e-12;
    if let Some(&bad) = targets.iter().find(|&&e| !on_path(e)) {
        return Err(Error::InvalidInput(format!("detuning {bad} µeV is not on the sweep {start} → {end} µeV")));
    }
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| ((targets[a] - start) * dir).total_cmp(&((targets[b] - start) * dir)));

    let mut out = vec![*psi0; targets.len()];
    let (mut eps, mut leg, mut psi) = (start, 0usize, *psi0);
    for k in order {
        let target = targets[k];
        let mut segments = Vec::new();
        while leg < legs.len() && (target - legs[leg].to) * dir > 0.0 {
            if legs[leg].to != eps {
                segments.push(Segment::ramp_at_rate(eps, legs[leg].to, legs[leg].rate));
            }
            eps = legs[leg].to;
            leg += 1;
        }
        if target != eps {
            let rate = legs.get(leg).map_or(f64::INFINITY, |l| l.rate);
            segments.push(Segment::ramp_at_rate(eps, target, rate));
            eps = target;
        }
        if !segments.is_empty() {
            psi = propagate(params, &segments, &psi, opts, 0.0)?;
        }
        out[k] = psi;
    }
    Ok(out)
}

/// ψᵀ·exp(−i2πHτ)·ψ for a real symmetric dwell Hamiltonian H, expanded once in its
/// eigenbasis so any number of dwell times costs O(5) each.
///
/// A schedule that is its own time mirror around a dwell has propagator
/// Wᵀ·U_dwell·W for real H, so the return amplitude to the initial real state is
/// exactly this quantity with ψ = W·ψ₀.
#[derive(Debug, Clone)]
pub(crate) struct Echo {
    weights: [C64; 5],
    freqs: [f64; 5],
}

impl Echo {
    pub fn new(h: &Matrix5<f64>, psi: &StateVector) -> Self {
        let eig = h.symmetric_eigen();
        let mut weights = [C64::new(0.0, 0.0); 5];
        let mut freqs = [0.0; 5];
        for k in 0..5 {
            let v = eig.eigenvectors.column(k);
            let c: C64 = (0..5).map(|i| psi.amps[i] * v[i]).sum();
            weights[k] = c * c;
            freqs[k] = eig.eigenvalues[k];
        }
        Echo { weights, freqs }
    }

    /// |ψᵀ·U(τ)·ψ|².
    pub fn return_probability(&self, tau: f64) -> f64 {
        let a: C64 = self.weights.iter().zip(&self.freqs).map(|(w, f)| w * C64::from_polar(1.0, -TAU * f * tau)).sum();
        a.norm_sqr()
    }
}

/// |vᵀ·ψ|² for a real reference state: the mirrored-path return probability.
pub(crate) fn transposed_overlap(v: &StateVector, psi: &StateVector) -> f64 {
    (0..5).map(|i| v.amps[i] * psi.amps[i]).sum::<C64>().norm_sqr()
}

/// The S/T− crossing and its coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Detuning of the Δ-free crossing, µeV.
    pub eps: f64,
    /// Half the minimum splitting of the exact levels, GHz.
    pub coupling: f64,
}

/// The first singlet/polarized-triplet crossing in `[lo, hi]`, with its coupling
/// taken from the exact spectrum rather than the two-level estimate Δ(θ*).
pub fn crossing_coupling(params: &DeviceParams, lo: f64, hi: f64) -> Option<Crossing> {
    let eps_c = *singlet_triplet_crossings(params, lo, hi).first()?;
    let estimate = mhz(delta_theta(params, eps_c)).abs();
    if estimate == 0.0 {
        return Some(Crossing { eps: eps_c, coupling: 0.0 });
    }
    let slope = {
        let h = 1e-3;
        ((diabatic_crossing_gap(params, eps_c + h) - diabatic_crossing_gap(params, eps_c - h)) / (2.0 * h)).abs()
    };
    let half_width = 20.0 * estimate / slope;
    let pair_gap = |e: f64| {
        let ev = h5_real(params, e).symmetric_eigenvalues();
        let mut v: Vec<f64> = ev.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        let centre = {
            let lv = crate::model::diabatic_levels(params, e);
            lv.energy(crate::model::Level::SH)
        };
        // the anticrossing pair is the adjacent pair that brackets the diabatic singlet
        v.windows(2)
            .filter(|w| w[0] <= centre + 2.0 * estimate && w[1] >= centre - 2.0 * estimate)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    };
    let e_min = golden_min(pair_gap, eps_c - half_width, eps_c + half_width);
    Some(Crossing { eps: e_min, coupling: 0.5 * pair_gap(e_min) })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Sweep through the crossing at constant diabatic gap velocity.
#[derive(Debug, Clone)]
pub(crate) struct Passage {
    pub segments: Vec<Segment>,
    pub eps_end: f64,
}

/// Target size of the first-order non-adiabatic amplitude ν·c/(2π·G³) at the edges of
/// the constant-velocity window.
const EDGE_ADIABATICITY: f64 = 5e-5;
/// Minimum half-window in units of the coupling.
const MIN_WINDOW: f64 = 25.0;
/// Floor on the half-window, GHz, for vanishing coupling.
const MIN_GAP: f64 = 1e-4;
const WINDOW_PIECES: usize = 64;
/// How far past the crossing the gap inversion may search, µeV.
const FAR_SIDE: f64 = 3000.0;

/// Segments that approach the crossing adiabatically from `eps_from`, then sweep the
/// Δ-free gap from −G to +G at velocity `nu` (GHz/ns) using piecewise-linear ramps.
/// The approach slows as the gap closes so that ν_k/G_k³ stays at its window value.
/// `max_rate` (µeV/ns) caps every ramp so the charge anticrossing is followed.
pub(crate) fn passage(params: &DeviceParams, eps_from: f64, crossing: &Crossing, nu: f64, max_rate: f64) -> Result<Passage> {
    let gap = |e: f64| diabatic_crossing_gap(params, e);
    let g_from = gap(eps_from);
    if g_from >= 0.0 || crossing.eps <= eps_from {
        return Err(Error::InvalidInput(format!("sweep must start before the crossing at {:.3} µeV", crossing.eps)));
    }
    let far = crossing.eps + FAR_SIDE;
    let g_far = gap(far);
    let c = crossing.coupling;
    let window = (MIN_WINDOW * c).max((nu * c / (TAU * EDGE_ADIABATICITY)).cbrt()).max(MIN_GAP);
    let g_minus = window.min(-g_from);
    let g_plus = window.min(0.9 * g_far);
    let eps_of = |g: f64| {
        if g <= g_from {
            eps_from
        } else {
            bisect(|e| gap(e) - g, eps_from, far)
        }
    };

    let mut segments = Vec::new();
    let mut push = |a: f64, b: f64, duration: f64| {
        if b != a {
            segments.push(Segment::ramp(a, b, duration.max((b - a).abs() / max_rate)));
        }
    };

    // approach: gap levels −G·2^j down to −G
    let mut levels = vec![g_minus];
    while levels.last().unwrap() * 2.0 < -g_from {
        levels.push(levels.last().unwrap() * 2.0);
    }
    levels.push(-g_from);
    let mut eps = eps_from;
    for j in (0..levels.len() - 1).rev() {
        let (hi, lo) = (levels[j + 1], levels[j]);
        let next = eps_of(-lo);
        let nu_j = nu * (lo / g_minus).powi(3);
        push(eps, next, (hi - lo) / nu_j);
        eps = next;
    }
    // constant-velocity window
    for k in 1..=WINDOW_PIECES {
        let g = -g_minus + (g_plus + g_minus) * k as f64 / WINDOW_PIECES as f64;
        let next = eps_of(g);
        push(eps, next, (g_plus + g_minus) / WINDOW_PIECES as f64 / nu);
        eps = next;
    }
    Ok(Passage { segments, eps_end: eps })
}
