//! Dominant oscillation frequency of a uniformly sampled trace.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Zero-padding factor; refines the bin grid without changing the resolution.
const PAD: usize = 8;
/// A peak must beat the median magnitude by this factor to count.
const FLOOR_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// GHz when `dt` is in ns.
    pub frequency: f64,
    /// One unpadded bin width, 1/(N·dt).
    pub uncertainty: f64,
    pub magnitude: f64,
}

/// Strongest nonzero-frequency component of the mean-subtracted series, refined by a
/// parabola through the three padded bins around the maximum. `None` when nothing
/// stands out of the noise floor.
pub fn fft_peak(series: &[f64], dt: f64) -> Result<Option<SpectralPeak>> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InvalidInput(format!("{n} samples; at least 8 needed")));
    }
    if !(dt > 0.0 && dt.is_finite()) || series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series and dt must be finite with dt > 0".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let len = n * PAD;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..=len / 2].iter().map(|c| c.norm()).collect();

    // below one true bin the padded spectrum is the leakage of the removed mean
    let first = PAD;
    let Some((k, &peak)) = mag.iter().enumerate().skip(first).max_by(|a, b| a.1.total_cmp(b.1)) else {
        return Ok(None);
    };
    // a series that is constant up to rounding has nothing to find
    let spread = series.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs() || spread == 0.0 {
        return Ok(None);
    }
    let mut sorted = mag[first..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if peak <= FLOOR_RATIO * median {
        return Ok(None);
    }
    let offset = if k > first && k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], peak, mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(Some(SpectralPeak {
        frequency: (k as f64 + offset) / (len as f64 * dt),
        uncertainty: 1.0 / (n as f64 * dt),
        magnitude: peak,
    }))
}
