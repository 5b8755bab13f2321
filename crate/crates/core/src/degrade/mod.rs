//! Synthetic degradation of high-quality recordings toward a lower-quality
//! target device.
//!
//! Two pipelines are provided:
//!
//! * [`degrade_benchmark`]: additive white noise, zero-phase Butterworth
//!   low-pass at 0.8 of the target Nyquist, linear resampling onto the
//!   nominal target grid.
//! * [`degrade_modified`]: per-fixation signed accuracy offsets, then the
//!   same noise / low-pass stages, then resampling onto a jittered grid.
//!
//! Each pipeline is a pure function of the recording and its
//! [`DegradationPlan`]; all randomness comes from one generator seeded with
//! `plan.rng_seed`. Draw order in the modified pipeline is: offset
//! magnitudes, offset signs, precision noise, timestamp jitter.

mod accuracy;
mod filter;
mod noise;
mod plan;
mod resample;

pub use accuracy::{build_accuracy_signal, AccuracyStep, AccuracyStepSignal, MAGNITUDE_SPREAD};
pub use filter::{lowpass_zero_phase, Biquad, Butterworth, FilterSpec};
pub use noise::{add_precision_noise, jitter_timestamps, JITTER_CLAMP_FRACTION};
pub use plan::{
    benchmark_sigma0_sq, plan_modified, InverseMethod, PercentileMatcher, PlanDiagnostics, PlanOptions,
    PlannedDegradation,
};
pub use resample::{nominal_target_timestamps, resample_spline};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{estimate_latency, extract_fixations, LatencyEstimate, MetricsConfig};
use crate::scalar::{lit, Scalar};
use crate::seed::rng_from_seed;
use crate::types::{DegradationPlan, GazeRecording, NoiseOrder};

/// Fixed stage settings shared by both pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PipelineConfig<T: Scalar> {
    /// Butterworth order per pass.
    pub filter_order: usize,
    /// Low-pass cutoff as a fraction of the target Nyquist frequency.
    pub cutoff_fraction: T,
    /// Used by the modified pipeline to locate fixations.
    pub metrics: MetricsConfig<T>,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            filter_order: 2,
            cutoff_fraction: lit(0.8),
            metrics: MetricsConfig::default(),
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn filter_for(&self, target_rate_hz: T) -> FilterSpec<T> {
        FilterSpec {
            cutoff_hz: self.cutoff_fraction * target_rate_hz / lit(2.0),
            order: self.filter_order,
            zero_phase: true,
        }
    }
}

fn check_rates<T: Scalar>(rec: &GazeRecording<T>, plan: &DegradationPlan<T>) -> Result<()> {
    plan.check()?;
    if !(plan.target_rate_hz < rec.nominal_rate_hz()) {
        return Err(Error::param(format!(
            "target rate {} Hz must be below source rate {} Hz",
            plan.target_rate_hz,
            rec.nominal_rate_hz()
        )));
    }
    Ok(())
}

/// Benchmark model. Accuracy offsets and jitter in `plan` are ignored.
pub fn degrade_benchmark<T: Scalar>(
    rec: &GazeRecording<T>,
    plan: &DegradationPlan<T>,
    cfg: &PipelineConfig<T>,
) -> Result<GazeRecording<T>> {
    check_rates(rec, plan)?;
    let mut rng = rng_from_seed(plan.rng_seed);
    let spec = cfg.filter_for(plan.target_rate_hz);
    let grid = nominal_target_timestamps(rec.start_ms(), rec.span_ms(), plan.target_rate_hz)?;
    let weighting = plan.eccentricity_weighting.as_ref();
    match plan.noise_order {
        NoiseOrder::Pre => {
            let noisy = add_precision_noise(rec, plan.sigma0_sq, &mut rng, weighting)?;
            let filtered = lowpass_zero_phase(&noisy, &spec)?;
            resample_spline(&filtered, &grid, plan.target_rate_hz)
        }
        NoiseOrder::Post => {
            let filtered = lowpass_zero_phase(rec, &spec)?;
            let resampled = resample_spline(&filtered, &grid, plan.target_rate_hz)?;
            add_precision_noise(&resampled, plan.sigma0_sq, &mut rng, weighting)
        }
    }
}

/// Output of [`degrade_modified_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedDegradation<T> {
    pub recording: GazeRecording<T>,
    pub latency: LatencyEstimate<T>,
    pub accuracy_signal: AccuracyStepSignal<T>,
}

/// Modified model with its intermediate alignment and offset signal.
pub fn degrade_modified_detailed<T: Scalar>(
    rec: &GazeRecording<T>,
    plan: &DegradationPlan<T>,
    cfg: &PipelineConfig<T>,
) -> Result<ModifiedDegradation<T>> {
    check_rates(rec, plan)?;
    let mut rng = rng_from_seed(plan.rng_seed);
    let latency = estimate_latency(rec, &cfg.metrics.latency)?;
    let windows = extract_fixations(rec, &latency, &cfg.metrics.fixation)?;
    let accuracy_signal = build_accuracy_signal(&windows, plan.acc_offset_h, plan.acc_offset_v, &mut rng)?;
    let offset = accuracy_signal.apply(rec)?;

    let spec = cfg.filter_for(plan.target_rate_hz);
    let grid = nominal_target_timestamps(rec.start_ms(), rec.span_ms(), plan.target_rate_hz)?;
    let weighting = plan.eccentricity_weighting.as_ref();
    let (start, end) = (rec.start_ms(), rec.end_ms());
    let clamp_to_span = |stamps: Vec<T>| -> Vec<T> { stamps.into_iter().map(|t| t.max(start).min(end)).collect() };

    let recording = match plan.noise_order {
        NoiseOrder::Pre => {
            let noisy = add_precision_noise(&offset, plan.sigma0_sq, &mut rng, weighting)?;
            let filtered = lowpass_zero_phase(&noisy, &spec)?;
            let stamps = jitter_timestamps(&grid, plan.jitter_sigma_ms, &mut rng, plan.jitter_correction)?;
            resample_spline(&filtered, &clamp_to_span(stamps), plan.target_rate_hz)?
        }
        NoiseOrder::Post => {
            // keep the documented draw order: noise before jitter
            let draws: Vec<T> = (0..2 * grid.len()).map(|_| T::standard_normal(&mut rng)).collect();
            let filtered = lowpass_zero_phase(&offset, &spec)?;
            let stamps = jitter_timestamps(&grid, plan.jitter_sigma_ms, &mut rng, plan.jitter_correction)?;
            let resampled = resample_spline(&filtered, &clamp_to_span(stamps), plan.target_rate_hz)?;
            let mut it = draws.into_iter();
            noise::add_noise_with(&resampled, plan.sigma0_sq, weighting, || {
                it.next().expect("one draw pair per grid sample")
            })?
        }
    };
    Ok(ModifiedDegradation {
        recording,
        latency,
        accuracy_signal,
    })
}

/// Modified model: accuracy step signal, additive noise, low-pass,
/// resampling onto jittered target timestamps.
pub fn degrade_modified<T: Scalar>(
    rec: &GazeRecording<T>,
    plan: &DegradationPlan<T>,
    cfg: &PipelineConfig<T>,
) -> Result<GazeRecording<T>> {
    degrade_modified_detailed(rec, plan, cfg).map(|d| d.recording)
}
