//! Landau–Zener coupling from a single-passage velocity sweep.

use std::f64::consts::{LN_2, PI};

use super::fit::{FitOptions, FitResult, Problem};
use crate::error::{Error, Result};

const NAMES: [&str; 3] = ["f_delta", "A", "B"];

/// A·(1 − exp(−4π²f²/ν)) + B with f in Hz and ν in Hz/s.
pub fn lz_model(nu: f64, f_delta: f64, a: f64, b: f64) -> f64 {
    a * (1.0 - (-4.0 * PI * PI * f_delta * f_delta / nu).exp()) + b
}

/// Fits f_Δ (Hz) and the contrast A and offset B to P_T(ν). Data without a
/// transition come back unconverged.
pub fn fit_lz(nu: &[f64], p: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if nu.len() != p.len() {
        return Err(Error::InvalidInput(format!("{} velocities but {} probabilities", nu.len(), p.len())));
    }
    if nu.len() < 5 {
        return Err(Error::InvalidInput("at least 5 points needed".into()));
    }
    if nu.iter().chain(p).any(|v| !v.is_finite()) || nu.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("velocities must be positive and data finite".into()));
    }
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let guess = [start_coupling(nu, p, lo, hi), hi - lo, lo];
    let model = |x: &[f64]| nu.iter().map(|&v| lz_model(v, x[0], x[1], x[2])).collect();
    let sigma = vec![1.0; nu.len()];
    let f_scale = guess[0].max(1.0);
    let problem = Problem {
        names: &NAMES,
        model: &model,
        data: p,
        sigma: &sigma,
        bounds: &[(0.0, f64::INFINITY), (-2.0, 2.0), (-1.0, 2.0)],
        scale: &[f_scale, 1.0, 1.0],
    };
    let mut fit = problem.solve(&guess, opts);
    if fit.converged && !fit.is_identified("f_delta") {
        fit.reject("no transition in the data: f_delta undetermined");
    }
    Ok(fit)
}

/// f_Δ at which the curve is halfway between its extremes: 4π²f²/ν = ln 2.
fn start_coupling(nu: &[f64], p: &[f64], lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let mut order: Vec<usize> = (0..nu.len()).collect();
    order.sort_by(|&a, &b| nu[a].total_cmp(&nu[b]));
    let nu_mid = order
        .windows(2)
        .find(|w| (p[w[0]] - mid) * (p[w[1]] - mid) <= 0.0)
        .map(|w| (nu[w[0]] * nu[w[1]]).sqrt())
        .unwrap_or_else(|| nu[order[nu.len() / 2]]);
    (nu_mid * LN_2).sqrt() / (2.0 * PI)
}
