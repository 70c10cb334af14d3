//! Synthetic cohorts with planted acquisition-parameter effects.
//!
//! Each record's parameters set a relative SNR through the usual
//! proportionalities: voxel volume, the square root of the averaged
//! phase-encode lines, and a single-T1 saturation factor for TR. The image is
//! a smooth phantom plus Gaussian noise whose amplitude is inversely
//! proportional to that SNR, so the quality label comes out of the real pixel
//! metrics rather than being assigned.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::canonical_columns;
use crate::dicom::{MetaRecord, PixelSlab, Plane, Sex, Weighting};
use crate::quality::median;
use crate::rng::{derive_seed, rng_for, stream::SYNTH};
use crate::shap::{Direction, TrendSummary};

pub const MIN_COHORT: usize = 50;
/// Structured phantom amplitude; noise sigma is this over the SNR.
pub const PHANTOM_AMPLITUDE: f64 = 1200.0;
const PHANTOM_FLOOR: f64 = 500.0;
const BITS_STORED: u8 = 12;
/// Matrix sizes are drawn as multiples of this within their range.
const MATRIX_STEP: u16 = 16;

const DECOYS: [&str; 4] = ["age_years", "weight_kg", "sex", "slice_location_mm"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    BadConfig(String),
    #[error("{field} = {value} is missing or outside the configured range")]
    OutOfRange { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn contains(&self, v: f64) -> bool {
        let tol = 1e-9 * self.hi.abs().max(1.0);
        v >= self.lo - tol && v <= self.hi + tol
    }

    fn check(&self, name: &str) -> Result<(), SynthError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi) {
            return Err(SynthError::BadConfig(format!(
                "{name} range [{}, {}] must be positive and ordered",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Uniform draw rounded to one decimal, which survives a DS round trip.
    fn draw_decimal(&self, rng: &mut ChaCha8Rng) -> f64 {
        let v = if self.hi > self.lo { rng.random_range(self.lo..=self.hi) } else { self.lo };
        round_to(v, 1).clamp(round_up(self.lo), round_down(self.hi))
    }

    fn draw_integer(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = (self.lo.ceil() as i64, self.hi.floor() as i64);
        rng.random_range(lo..=hi) as f64
    }

    fn draw_matrix(&self, rng: &mut ChaCha8Rng) -> u16 {
        let step = MATRIX_STEP as f64;
        let (lo, hi) = ((self.lo / step).ceil() as u16, (self.hi / step).floor() as u16);
        rng.random_range(lo..=hi) * MATRIX_STEP
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}

fn round_up(v: f64) -> f64 {
    (v * 10.0).ceil() / 10.0
}

fn round_down(v: f64) -> f64 {
    (v * 10.0).floor() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    /// Tissue T1 for the TR saturation factor.
    pub t1_ms: f64,
    pub snr_scale: f64,
    /// Fraction of images whose noise level is mirrored across the cohort
    /// median SNR, flipping their class.
    pub label_noise: f64,
    pub tr_ms: Range,
    /// Sampled as integers.
    pub nex: Range,
    pub percent_sampling: Range,
    pub percent_phase_fov: Range,
    pub fov_mm: Range,
    pub slice_thickness_mm: Range,
    /// Sampled as multiples of 16.
    pub rows: Range,
    pub cols: Range,
    pub te_ms: Range,
    /// How many of age, weight, sex and slice location vary (in that order).
    /// The rest are held at a constant.
    pub decoys: usize,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            t1_ms: 900.0,
            snr_scale: 1.0,
            label_noise: 0.1,
            tr_ms: Range::new(300.0, 1200.0),
            nex: Range::new(1.0, 4.0),
            percent_sampling: Range::new(60.0, 100.0),
            percent_phase_fov: Range::new(60.0, 100.0),
            fov_mm: Range::new(200.0, 300.0),
            slice_thickness_mm: Range::new(3.0, 5.0),
            rows: Range::new(192.0, 320.0),
            cols: Range::new(256.0, 384.0),
            te_ms: Range::new(8.0, 20.0),
            decoys: DECOYS.len(),
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadConfig(m));
        if !(self.t1_ms.is_finite() && self.t1_ms > 0.0) {
            return bad(format!("t1_ms must be positive, got {}", self.t1_ms));
        }
        if !(self.snr_scale.is_finite() && self.snr_scale > 0.0) {
            return bad(format!("snr_scale must be positive, got {}", self.snr_scale));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return bad(format!("label_noise must lie in [0, 0.5), got {}", self.label_noise));
        }
        for (name, r) in self.ranges() {
            r.check(name)?;
        }
        for (name, r) in [("percent_sampling", self.percent_sampling), ("percent_phase_fov", self.percent_phase_fov)] {
            if r.hi > 100.0 {
                return bad(format!("{name} cannot exceed 100"));
            }
        }
        if self.nex.lo.ceil() > self.nex.hi.floor() {
            return bad("nex range holds no integer".into());
        }
        for (name, r) in [("rows", self.rows), ("cols", self.cols)] {
            let step = MATRIX_STEP as f64;
            if (r.lo / step).ceil() > (r.hi / step).floor() || r.hi > u16::MAX as f64 {
                return bad(format!("{name} range holds no multiple of {MATRIX_STEP}"));
            }
        }
        for (name, r) in self.ranges() {
            if name != "nex" && name != "rows" && name != "cols" && round_up(r.lo) > round_down(r.hi) {
                return bad(format!("{name} range holds no one-decimal value"));
            }
        }
        if self.decoys > DECOYS.len() {
            return bad(format!("at most {} decoys, got {}", DECOYS.len(), self.decoys));
        }
        Ok(())
    }

    fn ranges(&self) -> [(&'static str, Range); 9] {
        [
            ("tr_ms", self.tr_ms),
            ("nex", self.nex),
            ("percent_sampling", self.percent_sampling),
            ("percent_phase_fov", self.percent_phase_fov),
            ("fov_mm", self.fov_mm),
            ("slice_thickness_mm", self.slice_thickness_mm),
            ("rows", self.rows),
            ("cols", self.cols),
            ("te_ms", self.te_ms),
        ]
    }
}

/// The parameters the SNR model reads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub tr_ms: f64,
    pub nex: f64,
    pub percent_sampling: f64,
    pub percent_phase_fov: f64,
    pub fov_mm: f64,
    pub slice_thickness_mm: f64,
    pub rows: f64,
    pub cols: f64,
}

impl Acquisition {
    pub fn voxel_volume(&self) -> f64 {
        (self.fov_mm / self.cols) * (self.fov_mm * self.percent_phase_fov / 100.0 / self.rows) * self.slice_thickness_mm
    }

    pub fn phase_steps(&self) -> f64 {
        self.rows * self.percent_phase_fov / 100.0
    }

    pub fn snr(&self, t1_ms: f64, snr_scale: f64) -> f64 {
        snr_scale
            * self.voxel_volume()
            * (self.nex * self.phase_steps() * self.percent_sampling / 100.0).sqrt()
            * (1.0 - (-self.tr_ms / t1_ms).exp())
    }
}

/// Relative SNR of a record; every parameter must be present and inside the
/// configured range.
pub fn snr_model(record: &MetaRecord, config: &PhysicsConfig) -> Result<f64, SynthError> {
    let field = |name: &'static str, v: Option<f64>, r: Range| match v {
        Some(v) if v.is_finite() && r.contains(v) => Ok(v),
        other => Err(SynthError::OutOfRange {
            field: name,
            value: other.unwrap_or(f64::NAN),
        }),
    };
    let acq = Acquisition {
        tr_ms: field("tr_ms", record.tr_ms, config.tr_ms)?,
        nex: field("nex", record.nex, config.nex)?,
        percent_sampling: field("percent_sampling", record.percent_sampling, config.percent_sampling)?,
        percent_phase_fov: field("percent_phase_fov", record.percent_phase_fov, config.percent_phase_fov)?,
        fov_mm: field("fov_mm", record.fov_mm, config.fov_mm)?,
        slice_thickness_mm: field("slice_thickness_mm", record.slice_thickness_mm, config.slice_thickness_mm)?,
        rows: field("rows", Some(record.rows as f64), config.rows)?,
        cols: field("cols", Some(record.cols as f64), config.cols)?,
    };
    Ok(acq.snr(config.t1_ms, config.snr_scale))
}

/// Planted direction of every feature column on the probability of a good
/// image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub directions: BTreeMap<String, Direction>,
}

impl GroundTruth {
    pub fn standard() -> Self {
        let planted = [
            ("tr_ms", Direction::Direct),
            ("nex", Direction::Direct),
            ("percent_sampling", Direction::Direct),
            ("percent_phase_fov", Direction::Direct),
            ("fov_mm", Direction::Direct),
            ("slice_thickness_mm", Direction::Direct),
            ("rows", Direction::Inverse),
            ("cols", Direction::Inverse),
        ];
        let mut directions: BTreeMap<String, Direction> =
            canonical_columns().into_iter().map(|c| (c.name, Direction::None)).collect();
        for (name, d) in planted {
            directions.insert(name.to_string(), d);
        }
        GroundTruth { directions }
    }

    pub fn direction(&self, feature: &str) -> Option<Direction> {
        self.directions.get(feature).copied()
    }

    pub fn planted(&self) -> Vec<&str> {
        self.directions
            .iter()
            .filter(|(_, d)| **d != Direction::None)
            .map(|(f, _)| f.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub records: Vec<MetaRecord>,
    pub pixels: Vec<PixelSlab>,
    pub truth: GroundTruth,
    /// SNR implied by each record's parameters.
    pub snr: Vec<f64>,
    /// Images whose noise level was mirrored.
    pub flipped: Vec<bool>,
}

fn uid(seed: u64, i: usize) -> String {
    format!("2.25.{}", derive_seed(seed, &[SYNTH, 3, i as u64]))
}

fn sample_record(seed: u64, i: usize, config: &PhysicsConfig) -> MetaRecord {
    let mut rng = rng_for(seed, &[SYNTH, 0, i as u64]);
    let tr_ms = config.tr_ms.draw_decimal(&mut rng);
    let te_ms = config.te_ms.draw_decimal(&mut rng);
    let nex = config.nex.draw_integer(&mut rng);
    let percent_sampling = config.percent_sampling.draw_decimal(&mut rng);
    let percent_phase_fov = config.percent_phase_fov.draw_decimal(&mut rng);
    let fov_mm = config.fov_mm.draw_decimal(&mut rng);
    let slice_thickness_mm = config.slice_thickness_mm.draw_decimal(&mut rng);
    let rows = config.rows.draw_matrix(&mut rng);
    let cols = config.cols.draw_matrix(&mut rng);

    // decoys are drawn unconditionally so the decoy count never shifts the
    // acquisition stream
    let age = rng.random_range(20..=80) as f64;
    let weight = round_to(rng.random_range(50.0..=100.0), 1);
    let sex = if rng.random_bool(0.5) { Sex::F } else { Sex::M };
    let location = round_to(rng.random_range(-20.0..=20.0), 1);
    let k = config.decoys;

    let study = uid(seed, i);
    MetaRecord {
        series_id: format!("{study}.1"),
        study_id: study,
        instance_number: 1,
        protocol_name: "SAG T1".into(),
        body_part: "LSPINE".into(),
        coil: "SPINE".into(),
        plane: Plane::Sagittal,
        weighting: Weighting::T1,
        tr_ms: Some(tr_ms),
        te_ms: Some(te_ms),
        nex: Some(nex),
        percent_sampling: Some(percent_sampling),
        percent_phase_fov: Some(percent_phase_fov),
        fov_mm: Some(fov_mm),
        slice_thickness_mm: Some(slice_thickness_mm),
        slice_location_mm: Some(if k > 3 { location } else { 0.0 }),
        rows,
        cols,
        pixel_spacing_mm: Some((round_to(fov_mm / rows as f64, 4), round_to(fov_mm / cols as f64, 4))),
        age_years: Some(if k > 0 { age } else { 50.0 }),
        weight_kg: Some(if k > 1 { weight } else { 70.0 }),
        sex: if k > 2 { sex } else { Sex::F },
    }
}

/// Smooth sagittal-spine-like phantom value at normalized coordinates.
fn phantom(u: f64, v: f64) -> f64 {
    let column = (-((u - 0.55) / 0.08).powi(2)).exp() * (0.6 + 0.4 * (2.0 * std::f64::consts::PI * 7.0 * v).cos());
    let body = (-((u - 0.3).powi(2) + (v - 0.5).powi(2)) / 0.05).exp();
    0.75 * column + 0.45 * body
}

fn synthesize(rows: u16, cols: u16, sigma: f64, rng: &mut ChaCha8Rng) -> PixelSlab {
    let gain = PHANTOM_AMPLITUDE;
    let noise = Normal::new(0.0, sigma).expect("finite positive sigma");
    let max = ((1u32 << BITS_STORED) - 1) as f64;
    let mut samples = Vec::with_capacity(rows as usize * cols as usize);
    for r in 0..rows {
        let v = (r as f64 + 0.5) / rows as f64;
        for c in 0..cols {
            let u = (c as f64 + 0.5) / cols as f64;
            let s = PHANTOM_FLOOR + gain * phantom(u, v) + noise.sample(rng);
            samples.push(s.round().clamp(0.0, max) as u16);
        }
    }
    PixelSlab {
        rows,
        cols,
        bits_stored: BITS_STORED,
        samples,
    }
}

/// Generate `n` single-slice series. Parameters are sampled independently;
/// the noise of a `label_noise` fraction of images is set from their SNR
/// mirrored (in log space) about the cohort median, which moves them to the
/// other side of the median split.
pub fn gen_cohort(n: usize, seed: u64, config: &PhysicsConfig) -> Result<SynthCohort, SynthError> {
    config.validate()?;
    if n < MIN_COHORT {
        return Err(SynthError::BadConfig(format!("need at least {MIN_COHORT} images, got {n}")));
    }
    let records: Vec<MetaRecord> = (0..n).map(|i| sample_record(seed, i, config)).collect();
    let snr = records
        .iter()
        .map(|r| snr_model(r, config))
        .collect::<Result<Vec<f64>, _>>()?;

    let logs: Vec<f64> = snr.iter().map(|s| s.ln()).collect();
    let centre = median(&logs);
    let n_flip = (config.label_noise * n as f64).round() as usize;
    let mut flipped = vec![false; n];
    for i in sample(&mut rng_for(seed, &[SYNTH, 2]), n, n_flip) {
        flipped[i] = true;
    }

    let pixels: Vec<PixelSlab> = (0..n)
        .into_par_iter()
        .map(|i| {
            let effective = if flipped[i] { (2.0 * centre - logs[i]).exp() } else { snr[i] };
            let mut rng = rng_for(seed, &[SYNTH, 1, i as u64]);
            synthesize(records[i].rows, records[i].cols, PHANTOM_AMPLITUDE / effective, &mut rng)
        })
        .collect();

    Ok(SynthCohort {
        records,
        pixels,
        truth: GroundTruth::standard(),
        snr,
        flipped,
    })
}

/// Fraction of planted features (restricted to `features` when nonempty)
/// for which at least two models report the planted direction.
pub fn check_recovery(summary: &TrendSummary, truth: &GroundTruth, features: &[&str]) -> f64 {
    let planted: Vec<(&str, Direction)> = truth
        .directions
        .iter()
        .filter(|(f, d)| **d != Direction::None && (features.is_empty() || features.contains(&f.as_str())))
        .map(|(f, d)| (f.as_str(), *d))
        .collect();
    if planted.is_empty() || summary.models.is_empty() {
        return 0.0;
    }
    let recovered = planted.iter().filter(|(f, d)| summary.agreement(f, *d) >= 2).count();
    recovered as f64 / planted.len() as f64
}
