//! Image-quality metrics and the binary quality label.
//!
//! Entropy power is `exp(2h) / (2πe)`, with the differential entropy `h`
//! estimated from a 256-bin histogram over the image's intensity range.
//! Spectral flatness is the Wiener entropy of the 2-D power spectrum with the
//! DC bin left out. Both grow as an image becomes more noise-like; the label
//! calls an image good when its combined score sits below the cohort median.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicom::PixelSlab;

pub const HISTOGRAM_BINS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("image has no samples")]
    EmptyImage,
    #[error("image is {rows}x{cols}; spectral flatness needs at least 2x2")]
    TooSmall { rows: u16, cols: u16 },
    #[error("need at least two images to label, got {0}")]
    TooFewImages(usize),
    #[error("{0} is constant across the cohort")]
    DegenerateDistribution(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub entropy_power: f64,
    pub spectral_flatness: f64,
}

/// Combined badness score in [0, 1] and the derived class (1 = good).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityLabel {
    pub score: f64,
    pub class: u8,
}

/// Entropy power of the intensity distribution. A constant image gives 0.
pub fn entropy_power(pixels: &PixelSlab) -> Result<f64, QualityError> {
    if pixels.samples.is_empty() {
        return Err(QualityError::EmptyImage);
    }
    let (min, max) = pixels
        .samples
        .iter()
        .fold((u16::MAX, u16::MIN), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if min == max {
        return Ok(0.0);
    }
    let (lo, span) = (min as f64, (max - min) as f64);
    let width = span / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &s in &pixels.samples {
        let bin = ((s as f64 - lo) / width) as usize;
        counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let n = pixels.samples.len() as f64;
    let shannon: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    let h = shannon + width.ln();
    Ok((2.0 * h).exp() / (2.0 * std::f64::consts::PI * std::f64::consts::E))
}

/// Power spectrum of the mean-removed image, row-major, DC at index 0.
fn power_spectrum(pixels: &PixelSlab) -> Vec<f64> {
    let (rows, cols) = (pixels.rows as usize, pixels.cols as usize);
    let mean = pixels.samples.iter().map(|&s| s as f64).sum::<f64>() / pixels.len() as f64;
    let mut buf: Vec<Complex<f64>> = pixels
        .samples
        .iter()
        .map(|&s| Complex::new(s as f64 - mean, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(cols).process(&mut buf);

    // transpose so the column transforms run over contiguous memory
    let mut t = vec![Complex::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = buf[r * cols + c];
        }
    }
    planner.plan_fft_forward(rows).process(&mut t);
    t.iter().map(|z| z.norm_sqr()).collect()
}

/// Wiener entropy (geometric over arithmetic mean) of the 2-D power
/// spectrum, DC bin excluded. A constant image gives 0.
pub fn spectral_flatness(pixels: &PixelSlab) -> Result<f64, QualityError> {
    if pixels.samples.is_empty() {
        return Err(QualityError::EmptyImage);
    }
    if pixels.rows < 2 || pixels.cols < 2 {
        return Err(QualityError::TooSmall {
            rows: pixels.rows,
            cols: pixels.cols,
        });
    }
    let first = pixels.samples[0];
    if pixels.samples.iter().all(|&s| s == first) {
        return Ok(0.0);
    }
    let power = power_spectrum(pixels);
    let rest = &power[1..];
    let m = rest.len() as f64;
    let arithmetic = rest.iter().sum::<f64>() / m;
    if arithmetic <= 0.0 {
        return Ok(0.0);
    }
    let log_mean = rest.iter().map(|p| p.ln()).sum::<f64>() / m;
    let geometric = log_mean.exp();
    Ok((geometric / arithmetic).clamp(0.0, 1.0))
}

pub fn quality_metrics(pixels: &PixelSlab) -> Result<QualityMetrics, QualityError> {
    Ok(QualityMetrics {
        entropy_power: entropy_power(pixels)?,
        spectral_flatness: spectral_flatness(pixels)?,
    })
}

fn min_max_normalize(values: &[f64], name: &'static str) -> Result<Vec<f64>, QualityError> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(QualityError::DegenerateDistribution(name));
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Combine the two metrics into a score and split at the median.
///
/// Each metric is min-max normalized over the cohort, the score is their
/// mean, and an image is good (class 1) when its score is strictly below the
/// median score. Scores equal to the median are bad.
pub fn combine_and_label(metrics: &[QualityMetrics]) -> Result<Vec<QualityLabel>, QualityError> {
    if metrics.len() < 2 {
        return Err(QualityError::TooFewImages(metrics.len()));
    }
    let ep: Vec<f64> = metrics.iter().map(|m| m.entropy_power).collect();
    let sf: Vec<f64> = metrics.iter().map(|m| m.spectral_flatness).collect();
    let ep = min_max_normalize(&ep, "entropy power")?;
    let sf = min_max_normalize(&sf, "spectral flatness")?;
    let scores: Vec<f64> = ep.iter().zip(&sf).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(label_scores(&scores))
}

/// Median split of precomputed scores.
pub fn label_scores(scores: &[f64]) -> Vec<QualityLabel> {
    let med = median(scores);
    scores
        .iter()
        .map(|&score| QualityLabel {
            score,
            class: u8::from(score < med),
        })
        .collect()
}
