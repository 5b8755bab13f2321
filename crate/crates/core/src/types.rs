//! Shared domain types.
//!
//! Units throughout: positions in degrees of visual angle (dva), times in
//! milliseconds, rates in Hz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::stats::{linear_fit, LinearFit};

/// Raw channel data for a recording, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingParts<T> {
    pub recording_id: String,
    pub nominal_rate_hz: T,
    pub timestamps_ms: Vec<T>,
    pub gaze_x: Vec<T>,
    pub gaze_y: Vec<T>,
    pub tgt_x: Vec<T>,
    pub tgt_y: Vec<T>,
    /// Per-sample missing flag. `None` derives it from NaN gaze values.
    pub missing: Option<Vec<bool>>,
}

/// A validated, timestamped gaze + target trace.
///
/// Missing gaze samples carry `missing[i] == true` and NaN in both gaze
/// channels. Target channels and timestamps are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeRecording<T> {
    recording_id: String,
    nominal_rate_hz: T,
    timestamps_ms: Vec<T>,
    gaze_x: Vec<T>,
    gaze_y: Vec<T>,
    tgt_x: Vec<T>,
    tgt_y: Vec<T>,
    missing: Vec<bool>,
}

/// Checks every recording invariant and builds the immutable recording.
pub fn validate_recording<T: Scalar>(parts: RecordingParts<T>) -> Result<GazeRecording<T>> {
    let RecordingParts {
        recording_id,
        nominal_rate_hz,
        timestamps_ms,
        mut gaze_x,
        mut gaze_y,
        tgt_x,
        tgt_y,
        missing,
    } = parts;

    if !(nominal_rate_hz > T::zero()) || !nominal_rate_hz.is_finite() {
        return Err(Error::InvalidRate(nominal_rate_hz.to_f64().unwrap_or(f64::NAN)));
    }
    let n = timestamps_ms.len();
    let lens = [
        ("gaze_x", gaze_x.len()),
        ("gaze_y", gaze_y.len()),
        ("tgt_x", tgt_x.len()),
        ("tgt_y", tgt_y.len()),
    ];
    for (channel, found) in lens {
        if found != n {
            return Err(Error::LengthMismatch {
                channel,
                expected: n,
                found,
            });
        }
    }
    if let Some(m) = &missing {
        if m.len() != n {
            return Err(Error::LengthMismatch {
                channel: "missing",
                expected: n,
                found: m.len(),
            });
        }
    }
    if n < 2 {
        return Err(Error::TooShort { found: n, needed: 2 });
    }
    for (i, t) in timestamps_ms.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFinite {
                channel: "t_ms",
                index: i,
            });
        }
        if i > 0 && *t <= timestamps_ms[i - 1] {
            return Err(Error::NonMonotone { index: i });
        }
    }
    for (channel, values) in [("tgt_x", &tgt_x), ("tgt_y", &tgt_y)] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel, index });
        }
    }
    let mut flags = missing.unwrap_or_else(|| vec![false; n]);
    for i in 0..n {
        if gaze_x[i].is_infinite() || gaze_y[i].is_infinite() {
            return Err(Error::NonFinite {
                channel: "gaze",
                index: i,
            });
        }
        if gaze_x[i].is_nan() || gaze_y[i].is_nan() {
            flags[i] = true;
        }
        if flags[i] {
            gaze_x[i] = T::nan();
            gaze_y[i] = T::nan();
        }
    }

    Ok(GazeRecording {
        recording_id,
        nominal_rate_hz,
        timestamps_ms,
        gaze_x,
        gaze_y,
        tgt_x,
        tgt_y,
        missing: flags,
    })
}

impl<T: Scalar> GazeRecording<T> {
    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn nominal_rate_hz(&self) -> T {
        self.nominal_rate_hz
    }

    /// Nominal inter-sample interval in ms.
    pub fn nominal_period_ms(&self) -> T {
        lit::<T>(1000.0) / self.nominal_rate_hz
    }

    pub fn len(&self) -> usize {
        self.timestamps_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ms.is_empty()
    }

    pub fn timestamps_ms(&self) -> &[T] {
        &self.timestamps_ms
    }

    pub fn gaze_x(&self) -> &[T] {
        &self.gaze_x
    }

    pub fn gaze_y(&self) -> &[T] {
        &self.gaze_y
    }

    pub fn tgt_x(&self) -> &[T] {
        &self.tgt_x
    }

    pub fn tgt_y(&self) -> &[T] {
        &self.tgt_y
    }

    pub fn missing(&self) -> &[bool] {
        &self.missing
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing[i]
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn start_ms(&self) -> T {
        self.timestamps_ms[0]
    }

    pub fn end_ms(&self) -> T {
        self.timestamps_ms[self.len() - 1]
    }

    pub fn span_ms(&self) -> T {
        self.end_ms() - self.start_ms()
    }

    /// Re-checks all invariants. Always succeeds on a constructed value.
    pub fn validate(&self) -> Result<()> {
        validate_recording(self.to_parts()).map(|_| ())
    }

    pub fn to_parts(&self) -> RecordingParts<T> {
        RecordingParts {
            recording_id: self.recording_id.clone(),
            nominal_rate_hz: self.nominal_rate_hz,
            timestamps_ms: self.timestamps_ms.clone(),
            gaze_x: self.gaze_x.clone(),
            gaze_y: self.gaze_y.clone(),
            tgt_x: self.tgt_x.clone(),
            tgt_y: self.tgt_y.clone(),
            missing: Some(self.missing.clone()),
        }
    }

    pub fn into_parts(self) -> RecordingParts<T> {
        RecordingParts {
            recording_id: self.recording_id,
            nominal_rate_hz: self.nominal_rate_hz,
            timestamps_ms: self.timestamps_ms,
            gaze_x: self.gaze_x,
            gaze_y: self.gaze_y,
            tgt_x: self.tgt_x,
            tgt_y: self.tgt_y,
            missing: Some(self.missing),
        }
    }

    /// Same recording with new gaze channels. Missing flags are kept.
    pub fn with_gaze(&self, gaze_x: Vec<T>, gaze_y: Vec<T>) -> Result<Self> {
        let mut parts = self.to_parts();
        parts.gaze_x = gaze_x;
        parts.gaze_y = gaze_y;
        validate_recording(parts)
    }
}

/// One candidate fixation extracted from a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationWindow<T> {
    pub recording_id: String,
    /// First sample of the window.
    pub sample_start: usize,
    /// One past the last sample of the window.
    pub sample_end: usize,
    pub tgt_x: T,
    pub tgt_y: T,
    /// Latency-adjusted fixation onset (target transition + latency), ms.
    pub onset_ms: T,
    /// Per-sample outlier flag, `sample_end - sample_start` long.
    pub outlier_mask: Vec<bool>,
}

impl<T> FixationWindow<T> {
    pub fn len(&self) -> usize {
        self.sample_end - self.sample_start
    }

    pub fn is_empty(&self) -> bool {
        self.sample_end == self.sample_start
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.sample_start..self.sample_end
    }

    /// Recording indices of samples not flagged as outliers.
    pub fn kept(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices()
            .zip(&self.outlier_mask)
            .filter(|(_, &out)| !out)
            .map(|(i, _)| i)
    }

    pub fn n_outliers(&self) -> usize {
        self.outlier_mask.iter().filter(|&&m| m).count()
    }
}

/// Names of the seven per-recording quality features, in column order.
pub const FEATURE_NAMES: [&str; 7] = [
    "acc_h",
    "acc_v",
    "acc_c",
    "prec_h",
    "prec_v",
    "prec_c",
    "temporal_prec_ms",
];

/// Per-recording signal quality summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityVector<T> {
    pub acc_h: T,
    pub acc_v: T,
    pub acc_c: T,
    pub prec_h: T,
    pub prec_v: T,
    pub prec_c: T,
    pub temporal_prec_ms: T,
    pub n_fixations_used: usize,
}

impl<T: Scalar> QualityVector<T> {
    pub fn features(&self) -> [T; 7] {
        [
            self.acc_h,
            self.acc_v,
            self.acc_c,
            self.prec_h,
            self.prec_v,
            self.prec_c,
            self.temporal_prec_ms,
        ]
    }

    pub fn feature(&self, name: &str) -> Option<T> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.features()[i])
    }
}

/// Optional eccentricity weighting of the additive noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EccentricityWeighting<T> {
    pub sigma_s: T,
    pub r_max: T,
}

impl<T: Scalar> EccentricityWeighting<T> {
    /// Variance scale `exp(-(r - r_max)^2 / (2 sigma_s^2))` at `(x, y)`.
    pub fn alpha(&self, x: T, y: T) -> T {
        let r = (x * x + y * y).sqrt();
        let d = r - self.r_max;
        (-(d * d) / (lit::<T>(2.0) * self.sigma_s * self.sigma_s)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseOrder {
    /// Noise injected before low-pass filtering and resampling.
    #[default]
    Pre,
    /// Noise injected after resampling.
    Post,
}

/// Per-recording transform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct DegradationPlan<T> {
    pub target_rate_hz: T,
    /// Additive noise variance, dva^2.
    pub sigma0_sq: T,
    pub acc_offset_h: T,
    pub acc_offset_v: T,
    pub jitter_sigma_ms: T,
    pub rng_seed: u64,
    #[serde(default)]
    pub eccentricity_weighting: Option<EccentricityWeighting<T>>,
    #[serde(default)]
    pub noise_order: NoiseOrder,
    /// Divide the jitter std by sqrt(2) so the resulting ISI std matches it.
    #[serde(default)]
    pub jitter_correction: bool,
}

impl<T: Scalar> DegradationPlan<T> {
    /// Plan with only a target rate and noise level.
    pub fn benchmark(target_rate_hz: T, sigma0_sq: T, rng_seed: u64) -> Self {
        Self {
            target_rate_hz,
            sigma0_sq,
            acc_offset_h: T::zero(),
            acc_offset_v: T::zero(),
            jitter_sigma_ms: T::zero(),
            rng_seed,
            eccentricity_weighting: None,
            noise_order: NoiseOrder::Pre,
            jitter_correction: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        let nonneg = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        if !(self.target_rate_hz > T::zero()) {
            return Err(Error::InvalidRate(self.target_rate_hz.to_f64().unwrap_or(f64::NAN)));
        }
        nonneg("sigma0_sq", self.sigma0_sq)?;
        nonneg("acc_offset_h", self.acc_offset_h)?;
        nonneg("acc_offset_v", self.acc_offset_v)?;
        nonneg("jitter_sigma_ms", self.jitter_sigma_ms)?;
        if let Some(w) = &self.eccentricity_weighting {
            if !(w.sigma_s > T::zero()) || !(w.r_max >= T::zero()) {
                return Err(Error::param("eccentricity weighting needs sigma_s > 0, r_max >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint<T> {
    pub sigma0_sq: T,
    pub mad_h: T,
}

/// Fitted map from additive-noise variance to post-pipeline horizontal precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve<T> {
    pub samples: Vec<CalibrationPoint<T>>,
    pub slope: T,
    pub intercept: T,
    pub max_residual: T,
}

impl<T: Scalar> CalibrationCurve<T> {
    /// Least-squares line through the sweep points.
    pub fn fit(samples: Vec<CalibrationPoint<T>>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Insufficient(format!(
                "calibration needs at least 3 points, got {}",
                samples.len()
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].sigma0_sq <= w[0].sigma0_sq {
                return Err(Error::NonMonotone { index: i + 1 });
            }
        }
        let xs: Vec<T> = samples.iter().map(|p| p.sigma0_sq).collect();
        let ys: Vec<T> = samples.iter().map(|p| p.mad_h).collect();
        let LinearFit {
            slope,
            intercept,
            max_residual,
        } = linear_fit(&xs, &ys)?;
        Ok(Self {
            samples,
            slope,
            intercept,
            max_residual,
        })
    }

    pub fn eval(&self, sigma0_sq: T) -> T {
        self.slope * sigma0_sq + self.intercept
    }

    pub fn max_sigma0_sq(&self) -> T {
        self.samples[self.samples.len() - 1].sigma0_sq
    }

    /// True when the raw sweep values never decrease along the grid.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].mad_h >= w[0].mad_h)
    }
}
