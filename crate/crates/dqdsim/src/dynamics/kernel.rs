//! Short-time propagators for 5×5 Hamiltonians.
//!
//! Step operators are exp(∓i·2π·H·dt). For time-dependent steps the exponential is
//! applied to the state directly by a Taylor series summed to machine precision
//! (the step phase is ≲ 0.2 rad, so a handful of terms suffice); constant segments
//! use an eigendecomposition once per segment.

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

pub(crate) type State = Vector5<C64>;

const MAX_TERMS: usize = 60;

/// Midpoint of the diagonal range. Subtracting it only changes the global phase and
/// keeps the series argument small when f_ε is large.
pub(crate) fn diagonal_center(h: &Matrix5<f64>) -> f64 {
    let (lo, hi) = (0..5).map(|i| h[(i, i)]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
    0.5 * (lo + hi)
}

/// ψ ← exp(−i·dir·2π·(H − center)·dt)·ψ for real symmetric H; `dir` = ±1.
pub(crate) fn taylor_real(h: &Matrix5<f64>, dt: f64, dir: f64, psi: &mut State) {
    let c = diagonal_center(h);
    let scale = dir * TAU * dt;
    let mut a = [[0.0f64; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            a[i][j] = h[(i, j)] * scale;
        }
        a[i][i] -= c * scale;
    }
    // term_{k+1} = (−i·A/(k+1))·term_k with A real
    let mut term: [C64; 5] = std::array::from_fn(|i| psi[i]);
    let mut acc = term;
    for k in 1..=MAX_TERMS {
        let inv = 1.0 / k as f64;
        let mut next = [C64::new(0.0, 0.0); 5];
        let mut size = 0.0;
        for i in 0..5 {
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..5 {
                re += a[i][j] * term[j].re;
                im += a[i][j] * term[j].im;
            }
            // multiply by −i
            next[i] = C64::new(im * inv, -re * inv);
            size += next[i].norm_sqr();
        }
        for i in 0..5 {
            acc[i] += next[i];
        }
        term = next;
        if size < 1e-34 {
            break;
        }
    }
    for i in 0..5 {
        psi[i] = acc[i];
    }
}

/// Complex Hermitian counterpart of [`taylor_real`].
pub(crate) fn taylor_complex(h: &Matrix5<C64>, dt: f64, dir: f64, psi: &mut State) {
    let c = {
        let (lo, hi) = (0..5).map(|i| h[(i, i)].re).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
        0.5 * (lo + hi)
    };
    let mut a = *h;
    for i in 0..5 {
        a[(i, i)] -= C64::new(c, 0.0);
    }
    let a = a * C64::new(0.0, -dir * TAU * dt);
    let mut term = *psi;
    let mut acc = term;
    for k in 1..=MAX_TERMS {
        term = (a * term).unscale(k as f64);
        acc += term;
        if term.norm_squared() < 1e-34 {
            break;
        }
    }
    *psi = acc;
}

/// exp(−i·dir·2π·H·t) for real symmetric H, via its eigenbasis.
pub(crate) fn expm_real(h: &Matrix5<f64>, t: f64, dir: f64) -> Matrix5<C64> {
    let c = diagonal_center(h);
    let eig = (h - Matrix5::identity() * c).symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phases = Vector5::from_fn(|k, _| C64::from_polar(1.0, -dir * TAU * eig.eigenvalues[k] * t));
    v * Matrix5::from_diagonal(&phases) * v.transpose()
}

/// exp(−i·dir·2π·H·t) for complex Hermitian H.
pub(crate) fn expm_hermitian(h: &Matrix5<C64>, t: f64, dir: f64) -> Matrix5<C64> {
    let c = {
        let (lo, hi) = (0..5).map(|i| h[(i, i)].re).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
        0.5 * (lo + hi)
    };
    let shifted = h - Matrix5::identity() * C64::new(c, 0.0);
    let eig = shifted.symmetric_eigen();
    let v = eig.eigenvectors;
    let phases = Vector5::from_fn(|k, _| C64::from_polar(1.0, -dir * TAU * eig.eigenvalues[k] * t));
    v * Matrix5::from_diagonal(&phases) * v.adjoint()
}

/// Half the spectral spread (λ_max − λ_min)/2: the largest eigenfrequency once the
/// global phase reference sits mid-spectrum.
pub(crate) fn half_spread_real(h: &Matrix5<f64>) -> f64 {
    let ev = h.symmetric_eigenvalues();
    0.5 * (ev.max() - ev.min())
}

pub(crate) fn half_spread_hermitian(h: &Matrix5<C64>) -> f64 {
    let ev = h.symmetric_eigenvalues();
    0.5 * (ev.max() - ev.min())
}
