//! Phenomenological single-shot spin-blockade readout.
//!
//! A blockade outcome maps to a Gaussian sensor-current sample whose mean depends on
//! the outcome and on the readout mode. Latching only enlarges the separation; its
//! imperfection is a single success probability.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Singlet,
    Triplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Standard,
    Latched,
}

/// Mean sensor currents (pA) of the two outcomes in one readout mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLevels {
    pub mu_singlet: f64,
    pub mu_triplet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorParams {
    pub standard: ModeLevels,
    pub latched: ModeLevels,
    /// Gaussian current noise, pA.
    pub sigma_current: f64,
    /// Probability that a triplet is latched; otherwise it reads like a singlet.
    pub latch_success: f64,
    /// Probability that a nominal singlet was prepared as a triplet.
    pub prep_error: f64,
}

/// Separation d/σ at which an equal-σ, midpoint-threshold readout reaches `visibility`.
pub fn separation_for_visibility(visibility: f64) -> f64 {
    2.0 * std_normal().inverse_cdf(0.5 * (1.0 + visibility))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

impl Default for SensorParams {
    /// Calibrated to 70% (standard) and 98% (latched) visibility.
    fn default() -> Self {
        let sigma = 10.0;
        SensorParams {
            standard: ModeLevels { mu_singlet: 0.0, mu_triplet: sigma * separation_for_visibility(0.70) },
            latched: ModeLevels { mu_singlet: 0.0, mu_triplet: sigma * separation_for_visibility(0.98) },
            sigma_current: sigma,
            latch_success: 1.0,
            prep_error: 0.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_current > 0.0) || !self.sigma_current.is_finite() {
            return Err(Error::param("sigma_current", "must be positive and finite"));
        }
        for (name, p) in [("latch_success", self.latch_success), ("prep_error", self.prep_error)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        for (name, m) in [("standard", self.standard), ("latched", self.latched)] {
            if !m.mu_singlet.is_finite() || !m.mu_triplet.is_finite() {
                return Err(Error::param(name, "means must be finite"));
            }
        }
        Ok(())
    }

    pub fn levels(&self, mode: Mode) -> ModeLevels {
        match mode {
            Mode::Standard => self.standard,
            Mode::Latched => self.latched,
        }
    }
}

/// One simulated single-shot measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub true_outcome: Outcome,
    pub current: f64,
    pub classified: Outcome,
}

/// Draws a sensor current for a blockade outcome.
pub fn sample_current<R: Rng + ?Sized>(outcome: Outcome, mode: Mode, sensor: &SensorParams, rng: &mut R) -> f64 {
    // fixed draw order keeps streams aligned across outcomes
    let u_prep: f64 = rng.random();
    let u_latch: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    let mut reads_as = outcome;
    if outcome == Outcome::Singlet && u_prep < sensor.prep_error {
        reads_as = Outcome::Triplet;
    }
    if mode == Mode::Latched && reads_as == Outcome::Triplet && u_latch >= sensor.latch_success {
        reads_as = Outcome::Singlet;
    }
    let lv = sensor.levels(mode);
    let mean = match reads_as {
        Outcome::Singlet => lv.mu_singlet,
        Outcome::Triplet => lv.mu_triplet,
    };
    mean + sensor.sigma_current * z
}

/// Equal-width histogram over [min, max].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV table `bin_center_pA,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center_pA,count\n");
        for (c, n) in self.centers().iter().zip(&self.counts) {
            out.push_str(&format!("{c},{n}\n"));
        }
        out
    }
}

pub fn histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InvalidInput("histogram of an empty sample".into()));
    }
    if n_bins < 2 {
        return Err(Error::InvalidInput("histogram needs at least two bins".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("histogram input contains non-finite values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Decision threshold and closed-form fidelities for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub threshold: f64,
    /// P(classified singlet | singlet).
    pub fidelity_singlet: f64,
    /// P(classified triplet | triplet), latch failures included.
    pub fidelity_triplet: f64,
    /// 1 − mean misclassification.
    pub f_m: f64,
    pub warning: Option<String>,
}

/// Crossing point of two weighted Gaussian densities lying between their means.
pub fn gaussian_threshold(mu0: f64, s0: f64, mu1: f64, s1: f64) -> f64 {
    if (s0 - s1).abs() <= 1e-12 * s0.max(s1) {
        return 0.5 * (mu0 + mu1);
    }
    // ln N(x; mu0, s0) = ln N(x; mu1, s1) → a x² + b x + c = 0
    let a = 1.0 / (2.0 * s1 * s1) - 1.0 / (2.0 * s0 * s0);
    let b = mu0 / (s0 * s0) - mu1 / (s1 * s1);
    let c = mu1 * mu1 / (2.0 * s1 * s1) - mu0 * mu0 / (2.0 * s0 * s0) + (s1 / s0).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
    let (lo, hi) = (mu0.min(mu1), mu0.max(mu1));
    roots
        .into_iter()
        .find(|r| (lo..=hi).contains(r))
        .unwrap_or(0.5 * (mu0 + mu1))
}

pub fn optimal_threshold(sensor: &SensorParams, mode: Mode) -> ThresholdReport {
    let lv = sensor.levels(mode);
    let s = sensor.sigma_current;
    if lv.mu_singlet == lv.mu_triplet {
        return ThresholdReport {
            threshold: lv.mu_singlet,
            fidelity_singlet: 0.5,
            fidelity_triplet: 0.5,
            f_m: 0.5,
            warning: Some("singlet and triplet current distributions coincide".into()),
        };
    }
    let threshold = gaussian_threshold(lv.mu_singlet, s, lv.mu_triplet, s);
    let (f_s, f_t_latched) = gaussian_fidelities(lv, s, threshold);
    let f_t = match mode {
        Mode::Standard => f_t_latched,
        Mode::Latched => sensor.latch_success * f_t_latched + (1.0 - sensor.latch_success) * (1.0 - f_s),
    };
    ThresholdReport {
        threshold,
        fidelity_singlet: f_s,
        fidelity_triplet: f_t,
        f_m: 0.5 * (f_s + f_t),
        warning: None,
    }
}

fn gaussian_fidelities(lv: ModeLevels, sigma: f64, threshold: f64) -> (f64, f64) {
    let n = std_normal();
    let sign = (lv.mu_triplet - lv.mu_singlet).signum();
    let f_s = n.cdf(sign * (threshold - lv.mu_singlet) / sigma);
    let f_t = n.cdf(sign * (lv.mu_triplet - threshold) / sigma);
    (f_s, f_t)
}

/// Expected (false-triplet, false-singlet) rates, preparation errors included.
pub fn expected_error_rates(sensor: &SensorParams, mode: Mode) -> (f64, f64) {
    let r = optimal_threshold(sensor, mode);
    let false_singlet = 1.0 - r.fidelity_triplet;
    let p = sensor.prep_error;
    let false_triplet = (1.0 - p) * (1.0 - r.fidelity_singlet) + p * r.fidelity_triplet;
    (false_triplet, false_singlet)
}

pub fn classify(current: f64, threshold: f64, lv: ModeLevels) -> Outcome {
    let triplet_above = lv.mu_triplet > lv.mu_singlet;
    if (current > threshold) == triplet_above {
        Outcome::Triplet
    } else {
        Outcome::Singlet
    }
}

/// Simulates and classifies a sequence of shots with the optimal threshold.
pub fn simulate_shots<R: Rng + ?Sized>(
    outcomes: impl IntoIterator<Item = Outcome>,
    mode: Mode,
    sensor: &SensorParams,
    rng: &mut R,
) -> Vec<ShotRecord> {
    let thr = optimal_threshold(sensor, mode).threshold;
    let lv = sensor.levels(mode);
    outcomes
        .into_iter()
        .map(|o| {
            let current = sample_current(o, mode, sensor, rng);
            ShotRecord { true_outcome: o, current, classified: classify(current, thr, lv) }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityReport {
    pub visibility: f64,
    /// Fraction of true triplets read as singlet.
    pub false_singlet_rate: f64,
    /// Fraction of true singlets read as triplet.
    pub false_triplet_rate: f64,
    pub n_singlet: usize,
    pub n_triplet: usize,
}

impl VisibilityReport {
    /// Mean misidentification rate.
    pub fn mean_error(&self) -> f64 {
        0.5 * (self.false_singlet_rate + self.false_triplet_rate)
    }
}

pub fn visibility(shots: &[ShotRecord]) -> Result<VisibilityReport> {
    let count = |t: Outcome, c: Outcome| {
        shots.iter().filter(|s| s.true_outcome == t && s.classified == c).count()
    };
    let n_s = shots.iter().filter(|s| s.true_outcome == Outcome::Singlet).count();
    let n_t = shots.len() - n_s;
    if n_s == 0 || n_t == 0 {
        return Err(Error::InvalidInput("visibility needs both singlet and triplet shots".into()));
    }
    let fs = count(Outcome::Triplet, Outcome::Singlet) as f64 / n_t as f64;
    let ft = count(Outcome::Singlet, Outcome::Triplet) as f64 / n_s as f64;
    Ok(VisibilityReport {
        visibility: 1.0 - (fs + ft),
        false_singlet_rate: fs,
        false_triplet_rate: ft,
        n_singlet: n_s,
        n_triplet: n_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alternating(n: usize) -> impl Iterator<Item = Outcome> {
        (0..n).map(|i| if i % 2 == 0 { Outcome::Singlet } else { Outcome::Triplet })
    }

    #[test]
    fn separations_from_visibility() {
        assert!((separation_for_visibility(0.98) - 4.6527).abs() < 1e-4);
        assert!((separation_for_visibility(0.70) - 2.0729).abs() < 1e-4);
    }

    #[test]
    fn noiseless_sensor_hits_means() {
        let s = SensorParams { sigma_current: 1e-12, ..SensorParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mode in [Mode::Standard, Mode::Latched] {
            let lv = s.levels(mode);
            assert!((sample_current(Outcome::Singlet, mode, &s, &mut rng) - lv.mu_singlet).abs() < 1e-9);
            assert!((sample_current(Outcome::Triplet, mode, &s, &mut rng) - lv.mu_triplet).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_calibration() {
        let s = SensorParams::default();
        let lat = optimal_threshold(&s, Mode::Latched);
        assert!((lat.threshold - 0.5 * s.latched.mu_triplet).abs() < 1e-12);
        assert!((lat.f_m - 0.99).abs() < 1e-9);
        let std = optimal_threshold(&s, Mode::Standard);
        assert!((std.f_m - 0.85).abs() < 1e-9);
        let ratio = (1.0 - std.f_m) / (1.0 - lat.f_m);
        assert!((ratio - 15.0).abs() < 1e-6);
    }

    #[test]
    fn unequal_widths_threshold_balances_densities() {
        let (m0, s0, m1, s1) = (0.0, 1.0, 5.0, 2.0);
        let t = gaussian_threshold(m0, s0, m1, s1);
        let pdf = |x: f64, m: f64, s: f64| (-(x - m).powi(2) / (2.0 * s * s)).exp() / s;
        assert!(t > m0 && t < m1);
        assert!((pdf(t, m0, s0) - pdf(t, m1, s1)).abs() < 1e-12);
    }

    #[test]
    fn identical_distributions_warn() {
        let mut s = SensorParams::default();
        s.standard.mu_triplet = s.standard.mu_singlet;
        let r = optimal_threshold(&s, Mode::Standard);
        assert_eq!(r.f_m, 0.5);
        assert!(r.warning.is_some());
    }

    #[test]
    fn histogram_contract() {
        let h = histogram(&[3.0; 10], 4).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        let mut v = vec![0.0; 300];
        v.extend(vec![10.0; 700]);
        let h = histogram(&v, 10).unwrap();
        assert_eq!(h.counts[0], 300);
        assert_eq!(h.counts[9], 700);
        assert_eq!(h.total(), 1000);
        assert!(histogram(&[], 4).is_err());
        assert!(histogram(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn gaussian_histogram_chi_square() {
        let s = SensorParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..10_000).map(|_| sample_current(Outcome::Singlet, Mode::Standard, &s, &mut rng)).collect();
        let h = histogram(&v, 30).unwrap();
        let n = std_normal();
        let sig = s.sigma_current;
        let (mut chi2, mut dof) = (0.0, 0usize);
        for k in 0..30 {
            let p = n.cdf(h.edges[k + 1] / sig) - n.cdf(h.edges[k] / sig);
            let e = p * v.len() as f64;
            if e >= 5.0 {
                chi2 += (h.counts[k] as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        let crit = statrs::distribution::ChiSquared::new((dof - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < crit, "chi2 {chi2} vs {crit}");
    }

    #[test]
    fn visibility_limits() {
        let perfect: Vec<ShotRecord> = alternating(100)
            .map(|o| ShotRecord { true_outcome: o, current: 0.0, classified: o })
            .collect();
        assert_eq!(visibility(&perfect).unwrap().visibility, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let random: Vec<ShotRecord> = alternating(20_000)
            .map(|o| {
                let c = if rng.random::<bool>() { Outcome::Singlet } else { Outcome::Triplet };
                ShotRecord { true_outcome: o, current: 0.0, classified: c }
            })
            .collect();
        assert!(visibility(&random).unwrap().visibility.abs() < 0.03);

        let one_class = vec![perfect[0]; 4];
        assert!(visibility(&one_class).is_err());
    }

    #[test]
    fn preparation_error_channel() {
        let ideal = SensorParams { sigma_current: 1e-9, prep_error: 0.008, ..SensorParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shots = simulate_shots(alternating(200_000), Mode::Latched, &ideal, &mut rng);
        let v = visibility(&shots).unwrap();
        assert!((v.visibility - 0.992).abs() < 3.0 * (0.008f64 * 0.992 / 100_000.0).sqrt());
        let (ft, fs) = expected_error_rates(&ideal, Mode::Latched);
        assert!((1.0 - ft - fs - 0.992).abs() < 1e-9);
    }

    #[test]
    fn latching_beats_standard() {
        let s = SensorParams { latch_success: 0.97, ..SensorParams::default() };
        let a = optimal_threshold(&s, Mode::Standard);
        let b = optimal_threshold(&s, Mode::Latched);
        assert!(1.0 - b.f_m < 1.0 - a.f_m);
    }
}
