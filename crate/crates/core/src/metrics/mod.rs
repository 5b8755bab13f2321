//! Signal quality metrics: latency alignment, fixation partitioning,
//! outlier rejection, spatial accuracy and precision, temporal precision.

mod fixation;
mod latency;
mod measures;

pub use fixation::{
    extract_fixations, reject_outliers, target_dwells, window_centroid, Dwell, FixationConfig,
    OutlierConfig,
};
pub use latency::{estimate_latency, mean_distance_at_shift, LatencyEstimate, LatencySearch};
pub use measures::{fixation_accuracy, fixation_precision, temporal_precision, ChannelTriple};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};
use crate::stats::median;
use crate::types::{FixationWindow, GazeRecording, QualityVector};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MetricsConfig<T: Scalar> {
    pub latency: LatencySearch<T>,
    pub fixation: FixationConfig<T>,
    pub outliers: OutlierConfig<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationMetrics<T> {
    pub window: FixationWindow<T>,
    pub accuracy: ChannelTriple<T>,
    pub precision: ChannelTriple<T>,
}

/// A window that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedWindow {
    pub sample_start: usize,
    pub reason: String,
}

/// Full intermediate results of [`recording_quality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAnalysis<T> {
    pub latency: LatencyEstimate<T>,
    pub fixations: Vec<FixationMetrics<T>>,
    pub dropped: Vec<DroppedWindow>,
    pub quality: QualityVector<T>,
}

/// Mean accuracy and median precision across fixations; combined precision
/// is recomputed from the aggregated channels.
pub fn aggregate<T: Scalar>(fixations: &[FixationMetrics<T>], temporal_prec_ms: T) -> Result<QualityVector<T>> {
    if fixations.is_empty() {
        return Err(Error::Empty("fixations"));
    }
    let n = count::<T>(fixations.len());
    let acc_h = fixations.iter().map(|f| f.accuracy.h).sum::<T>() / n;
    let acc_v = fixations.iter().map(|f| f.accuracy.v).sum::<T>() / n;
    let acc_c = fixations.iter().map(|f| f.accuracy.c).sum::<T>() / n;
    let ph: Vec<T> = fixations.iter().map(|f| f.precision.h).collect();
    let pv: Vec<T> = fixations.iter().map(|f| f.precision.v).collect();
    let prec_h = median(&ph)?;
    let prec_v = median(&pv)?;
    Ok(QualityVector {
        acc_h,
        acc_v,
        acc_c,
        prec_h,
        prec_v,
        prec_c: (prec_h * prec_h + prec_v * prec_v).sqrt(),
        temporal_prec_ms,
        n_fixations_used: fixations.len(),
    })
}

/// Latency estimate, partition, outlier rejection, per-fixation metrics and
/// aggregation for one recording.
pub fn analyze_recording<T: Scalar>(
    rec: &GazeRecording<T>,
    cfg: &MetricsConfig<T>,
) -> Result<QualityAnalysis<T>> {
    let latency = estimate_latency(rec, &cfg.latency)?;
    let windows = extract_fixations(rec, &latency, &cfg.fixation)?;
    let mut fixations = Vec::with_capacity(windows.len());
    let mut dropped = Vec::new();
    for win in windows {
        let scored = reject_outliers(&win, rec, &cfg.outliers).and_then(|window| {
            let accuracy = fixation_accuracy(&window, rec)?;
            let precision = fixation_precision(&window, rec)?;
            Ok(FixationMetrics {
                window,
                accuracy,
                precision,
            })
        });
        match scored {
            Ok(f) => fixations.push(f),
            Err(e) => {
                log::warn!("{}: dropped window at sample {}: {e}", rec.recording_id(), win.sample_start);
                dropped.push(DroppedWindow {
                    sample_start: win.sample_start,
                    reason: e.to_string(),
                });
            }
        }
    }
    if fixations.is_empty() {
        return Err(Error::NoUsableFixations(rec.recording_id().to_owned()));
    }
    let temporal = temporal_precision(rec.timestamps_ms())?;
    let quality = aggregate(&fixations, temporal)?;
    Ok(QualityAnalysis {
        latency,
        fixations,
        dropped,
        quality,
    })
}

pub fn recording_quality<T: Scalar>(rec: &GazeRecording<T>, cfg: &MetricsConfig<T>) -> Result<QualityVector<T>> {
    analyze_recording(rec, cfg).map(|a| a.quality)
}

/// [`recording_quality`] over a corpus, evaluated in parallel. Output order
/// follows input order.
pub fn corpus_quality<T: Scalar>(
    recs: &[GazeRecording<T>],
    cfg: &MetricsConfig<T>,
) -> Vec<Result<QualityVector<T>>> {
    recs.par_iter().map(|r| recording_quality(r, cfg)).collect()
}
