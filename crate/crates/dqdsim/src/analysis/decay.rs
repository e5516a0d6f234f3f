//! Damped oscillation fits and the π-rotation fidelity they imply.

use std::f64::consts::PI;

use super::fft::fft_peak;
use super::fit::{FitOptions, FitResult, Problem};
use crate::error::{Error, Result};

const NAMES: [&str; 5] = ["A", "f", "phi", "gamma", "C"];

/// Envelope exp(−(γτ)^p).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Exponential,
    Gaussian,
}

impl Envelope {
    pub fn exponent(self) -> f64 {
        match self {
            Envelope::Exponential => 1.0,
            Envelope::Gaussian => 2.0,
        }
    }

    pub fn value(self, gamma: f64, tau: f64) -> f64 {
        (-(gamma * tau).abs().powf(self.exponent())).exp()
    }
}

/// A·cos(2πfτ + φ)·exp(−(γτ)^p) + C.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Parameters A, f, phi, gamma (= 1/T) and C.
    pub fit: FitResult,
    /// The envelope with the smaller residual.
    pub envelope: Envelope,
    /// Decay time T, ns; infinite when no decay is resolved.
    pub decay_time: f64,
    /// (1 + exp(−(τ_π/T)^p))/2 with τ_π = 1/(2f): the fringe amplitude left after one
    /// π rotation relative to the undamped amplitude, mapped to a fidelity.
    pub f_pi: f64,
    pub f_pi_half_width: f64,
}

impl DecayFit {
    pub fn frequency(&self) -> f64 {
        self.fit.values[1]
    }

    pub fn to_text(&self) -> String {
        format!(
            "{}envelope = {:?}\ndecay_time = {:e}\nf_pi = {}\nf_pi.ci95 = {:e}\nf_pi.convention = (1 + envelope(1/(2f)))/2\n",
            self.fit.to_text(),
            self.envelope,
            self.decay_time,
            self.f_pi,
            self.f_pi_half_width
        )
    }
}

/// Fits both envelopes and keeps the better one. Needs a resolvable oscillation.
pub fn fit_decay(tau: &[f64], p: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    if tau.len() != p.len() {
        return Err(Error::InvalidInput(format!("{} times but {} values", tau.len(), p.len())));
    }
    if tau.len() < 8 {
        return Err(Error::InvalidInput("at least 8 points needed".into()));
    }
    let dt = (tau[tau.len() - 1] - tau[0]) / (tau.len() - 1) as f64;
    let uniform = tau.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.abs());
    if !uniform || dt <= 0.0 {
        return Err(Error::InvalidInput("times must be increasing and uniformly spaced".into()));
    }
    let peak = fft_peak(p, dt)?.ok_or_else(|| Error::Fit("no oscillation: frequency absent".into()))?;
    let span = tau[tau.len() - 1] - tau[0];
    if peak.frequency * span < 1.0 {
        return Err(Error::Fit("less than one visible period: frequency absent".into()));
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    // complex amplitude at the peak sets amplitude and phase
    let (re, im) = tau.iter().zip(p).fold((0.0, 0.0), |(re, im), (&t, &v)| {
        let w = 2.0 * PI * peak.frequency * t;
        (re + (v - mean) * w.cos(), im - (v - mean) * w.sin())
    });
    let amp = 2.0 * (re * re + im * im).sqrt() / p.len() as f64;
    let guess = [amp.max(1e-6), peak.frequency, im.atan2(re), 0.5 / span, mean];
    let sigma = vec![1.0; p.len()];
    let t0 = tau[0];

    let run = |env: Envelope| {
        let model = move |x: &[f64]| -> Vec<f64> {
            tau.iter().map(|&t| x[0] * (2.0 * PI * x[1] * t + x[2]).cos() * env.value(x[3], t - t0) + x[4]).collect()
        };
        let problem = Problem {
            names: &NAMES,
            model: &model,
            data: p,
            sigma: &sigma,
            bounds: &[(0.0, 10.0), (0.0, 0.5 / dt), (-4.0 * PI, 4.0 * PI), (0.0, 10.0 / dt), (-10.0, 10.0)],
            scale: &[guess[0], peak.frequency, 1.0, 1.0 / span, 1.0],
        };
        problem.solve(&guess, opts)
    };
    let (exp_fit, gauss_fit) = rayon::join(|| run(Envelope::Exponential), || run(Envelope::Gaussian));
    let (mut fit, envelope) = match (exp_fit.converged, gauss_fit.converged) {
        (true, false) => (exp_fit, Envelope::Exponential),
        (false, true) => (gauss_fit, Envelope::Gaussian),
        _ if gauss_fit.residual_norm <= exp_fit.residual_norm => (gauss_fit, Envelope::Gaussian),
        _ => (exp_fit, Envelope::Exponential),
    };
    let (f, gamma) = (fit.values[1], fit.values[3]);
    let (hf, hg) = (fit.ci_half_widths[1], fit.ci_half_widths[3]);
    let undamped = gamma * span < 1e-3;
    if undamped {
        fit.flags.push("no decay resolved: T infinite".into());
    }
    let tau_pi = 0.5 / f;
    let f_pi = 0.5 * (1.0 + envelope.value(gamma, tau_pi));
    // first-order propagation through γ and f
    let q = envelope.exponent();
    let x = gamma * tau_pi;
    let de = -q * x.powf(q - 1.0) * envelope.value(gamma, tau_pi);
    let d_gamma = 0.5 * de * tau_pi;
    let d_f = 0.5 * de * gamma * (-tau_pi / f);
    let hg = if hg.is_finite() { hg } else { gamma };
    let f_pi_half_width = ((d_gamma * hg).powi(2) + (d_f * hf).powi(2)).sqrt();
    Ok(DecayFit {
        decay_time: if undamped { f64::INFINITY } else { 1.0 / gamma },
        fit,
        envelope,
        f_pi,
        f_pi_half_width,
    })
}
