//! Weighted least squares with multi-start, linearized or bootstrap 95% intervals.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lm::{minimize, LmOptions, LmSolution, Residuals};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Relative singular value below which a Jacobian counts as rank deficient.
const RANK_TOL: f64 = 1e-10;
/// A parameter whose scaled sensitivity is this far below the strongest one is not
/// constrained by the data.
const SENSITIVITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Linearized,
    /// Residual resampling with this many refits.
    Bootstrap { reps: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    pub ci: CiMethod,
    /// Known noise level of the (weighted) residuals; estimated from the fit if absent.
    pub known_sigma: Option<f64>,
    /// Number of starting points (the first is the supplied guess, the rest jittered).
    pub starts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { lm: LmOptions::default(), ci: CiMethod::Linearized, known_sigma: None, starts: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 95% half-widths; NaN unless converged, infinite for unidentifiable parameters.
    pub ci_half_widths: Vec<f64>,
    /// √Σ r² of the weighted residuals.
    pub residual_norm: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub ci_method: CiMethod,
    pub flags: Vec<String>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn half_width(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.ci_half_widths[i])
    }

    /// (lower, upper) 95% bounds.
    pub fn interval(&self, name: &str) -> Option<(f64, f64)> {
        self.index(name).map(|i| (self.values[i] - self.ci_half_widths[i], self.values[i] + self.ci_half_widths[i]))
    }

    pub fn covers(&self, name: &str, truth: f64) -> bool {
        self.interval(name).is_some_and(|(lo, hi)| lo <= truth && truth <= hi)
    }

    pub fn is_identified(&self, name: &str) -> bool {
        !self.flags.iter().any(|f| f == &format!("unidentifiable: {name}"))
    }

    /// Marks the fit as failed, dropping its intervals.
    pub(crate) fn reject(&mut self, reason: &str) {
        self.converged = false;
        self.ci_half_widths.iter_mut().for_each(|h| *h = f64::NAN);
        self.flags.push(reason.to_string());
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "residual_norm = {:e}", self.residual_norm);
        let method = match self.ci_method {
            CiMethod::Linearized => "linearized".to_string(),
            CiMethod::Bootstrap { reps, seed } => format!("bootstrap reps={reps} seed={seed}"),
        };
        let _ = writeln!(s, "ci_method = {method}");
        for ((n, v), h) in self.names.iter().zip(&self.values).zip(&self.ci_half_widths) {
            let _ = writeln!(s, "{n} = {v:e}");
            let _ = writeln!(s, "{n}.ci95 = {h:e}");
        }
        for f in &self.flags {
            let _ = writeln!(s, "flag = {f}");
        }
        s
    }

    /// `x,residual` rows against the supplied abscissa.
    pub fn residuals_csv(&self, x: &[f64]) -> String {
        let mut s = String::from("x,residual\n");
        for (x, r) in x.iter().zip(&self.residuals) {
            let _ = writeln!(s, "{x},{r}");
        }
        s
    }
}

/// Linearized 95% half-widths Z95·√diag(s²·(JᵀJ)⁻¹) for weighted residuals `r`.
/// `s²` is `known_sigma²` if given, else RSS/(m − n). Fails on a rank-deficient J.
pub fn confidence_intervals(jacobian: &DMatrix<f64>, residuals: &[f64], known_sigma: Option<f64>) -> Result<Vec<f64>> {
    let (m, n) = jacobian.shape();
    let s2 = match known_sigma {
        Some(s) => s * s,
        None if m > n => residuals.iter().map(|r| r * r).sum::<f64>() / (m - n) as f64,
        None => return Err(Error::Fit(format!("{m} points cannot give intervals for {n} parameters"))),
    };
    // Unit-free rank test: equilibrate columns first.
    let norms: Vec<f64> = jacobian.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&d| d == 0.0) {
        return Err(Error::Fit("rank-deficient Jacobian".into()));
    }
    let mut scaled = jacobian.clone();
    for (mut c, d) in scaled.column_iter_mut().zip(&norms) {
        c /= *d;
    }
    let svd = scaled.svd(false, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s < RANK_TOL * smax) {
        return Err(Error::Fit("rank-deficient Jacobian".into()));
    }
    let v_t = svd.v_t.expect("requested");
    Ok((0..n)
        .map(|j| {
            let var: f64 = (0..n).map(|k| (v_t[(k, j)] / svd.singular_values[k]).powi(2)).sum::<f64>() * s2;
            Z95 * var.sqrt() / norms[j]
        })
        .collect())
}

/// A weighted least-squares problem: minimize Σ((model(x)_i − data_i)/σ_i)².
pub(crate) struct Problem<'a> {
    pub names: &'a [&'a str],
    pub model: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub data: &'a [f64],
    pub sigma: &'a [f64],
    pub bounds: &'a [(f64, f64)],
    pub scale: &'a [f64],
}

impl Problem<'_> {
    fn weighted(&self, data: &[f64]) -> impl Fn(&[f64]) -> Vec<f64> + Sync + '_ {
        let data = data.to_vec();
        move |x: &[f64]| {
            (self.model)(x).iter().zip(&data).zip(self.sigma).map(|((m, d), s)| (m - d) / s).collect()
        }
    }

    fn run(&self, data: &[f64], x0: &[f64], lm: &LmOptions) -> LmSolution {
        let f = self.weighted(data);
        minimize(&Residuals { f: &f, bounds: self.bounds, scale: self.scale }, x0, lm)
    }

    /// Starting points: the guess plus log-uniform jitter by up to ×/÷2 (additive for
    /// parameters near zero), clamped to the bounds.
    fn starts(&self, guess: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![guess.to_vec()];
        for _ in 1..count.max(1) {
            let x: Vec<f64> = guess
                .iter()
                .zip(self.scale)
                .zip(self.bounds)
                .map(|((&g, &s), &(lo, hi))| {
                    let v = if g.abs() > 0.1 * s {
                        g * 2f64.powf(rng.random_range(-1.0..1.0))
                    } else {
                        g + s * rng.random_range(-0.5..0.5)
                    };
                    v.clamp(lo, hi)
                })
                .collect();
            out.push(x);
        }
        out
    }

    pub fn solve(&self, guess: &[f64], opts: &FitOptions) -> FitResult {
        let best = self
            .starts(guess, opts.starts, opts.seed)
            .par_iter()
            .map(|x0| self.run(self.data, x0, &opts.lm))
            .reduce_with(|a, b| {
                // prefer converged, then lower cost; ties keep the earlier start
                let key = |s: &LmSolution| (!s.converged, s.cost);
                if key(&b).partial_cmp(&key(&a)) == Some(std::cmp::Ordering::Less) {
                    b
                } else {
                    a
                }
            })
            .expect("at least one start");
        self.finish(best, opts)
    }

    fn finish(&self, sol: LmSolution, opts: &FitOptions) -> FitResult {
        let n = sol.x.len();
        let mut flags = Vec::new();
        let sensitivity: Vec<f64> = (0..n).map(|j| sol.jacobian.column(j).norm() * self.scale[j]).collect();
        let strongest = sensitivity.iter().copied().fold(0.0, f64::max);
        let dead: Vec<bool> = sensitivity.iter().map(|&s| s <= SENSITIVITY_TOL * strongest).collect();
        let mut method = opts.ci;
        let mut half = vec![f64::NAN; n];
        if sol.converged {
            let linear = confidence_intervals(&sol.jacobian, &sol.residuals, opts.known_sigma);
            half = match (opts.ci, linear) {
                (CiMethod::Linearized, Ok(h)) => h,
                (CiMethod::Linearized, Err(_)) => {
                    flags.push("rank-deficient Jacobian: bootstrap intervals".into());
                    method = CiMethod::Bootstrap { reps: 200, seed: opts.seed };
                    self.bootstrap(&sol, 200, opts.seed, &opts.lm)
                }
                (CiMethod::Bootstrap { reps, seed }, _) => self.bootstrap(&sol, reps, seed, &opts.lm),
            };
        } else {
            flags.push("did not converge".into());
        }
        for j in 0..n {
            if dead[j] {
                half[j] = f64::INFINITY;
            }
            let spans = !(half[j] <= sol.x[j].abs().max(self.scale[j]));
            if sol.converged && spans {
                flags.push(format!("unidentifiable: {}", self.names[j]));
            }
        }
        FitResult {
            names: self.names.iter().map(|s| s.to_string()).collect(),
            values: sol.x.clone(),
            ci_half_widths: half,
            residual_norm: (2.0 * sol.cost).sqrt(),
            residuals: sol.residuals.clone(),
            converged: sol.converged,
            iterations: sol.iterations,
            ci_method: method,
            flags,
        }
    }

    /// Z95 × standard deviation of refits to fitted + resampled weighted residuals.
    fn bootstrap(&self, sol: &LmSolution, reps: usize, seed: u64, lm: &LmOptions) -> Vec<f64> {
        let fitted = (self.model)(&sol.x);
        let m = sol.residuals.len();
        let estimates: Vec<Vec<f64>> = (0..reps as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = crate::noise::stream(seed, k);
                let data: Vec<f64> =
                    (0..m).map(|i| fitted[i] - sol.residuals[rng.random_range(0..m)] * self.sigma[i]).collect();
                self.run(&data, &sol.x, lm).x
            })
            .collect();
        (0..sol.x.len())
            .map(|j| {
                let mean = estimates.iter().map(|e| e[j]).sum::<f64>() / reps as f64;
                let var = estimates.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / (reps.max(2) - 1) as f64;
                Z95 * var.sqrt()
            })
            .collect()
    }
}
