//! Candidate fixation extraction and outlier rejection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::latency::LatencyEstimate;
use crate::scalar::{lit, Scalar};
use crate::stats::SortedSample;
use crate::types::{FixationWindow, GazeRecording};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationConfig<T> {
    /// Time discarded after the latency-adjusted onset.
    pub discard_ms: T,
    /// Length of the retained window.
    pub keep_ms: T,
}

impl<T: Scalar> Default for FixationConfig<T> {
    fn default() -> Self {
        Self {
            discard_ms: lit(400.0),
            keep_ms: lit(500.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig<T> {
    pub max_dist_dva: T,
    pub fence_k: T,
}

impl<T: Scalar> Default for OutlierConfig<T> {
    fn default() -> Self {
        Self {
            max_dist_dva: lit(2.0),
            fence_k: lit(1.5),
        }
    }
}

/// A stationary-target segment of the stimulus trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dwell<T> {
    pub onset_index: usize,
    pub onset_ms: T,
    pub tgt_x: T,
    pub tgt_y: T,
}

/// Splits the target trace into stationary dwells. The first sample always
/// opens a dwell.
pub fn target_dwells<T: Scalar>(rec: &GazeRecording<T>) -> Vec<Dwell<T>> {
    let (tx, ty, ts) = (rec.tgt_x(), rec.tgt_y(), rec.timestamps_ms());
    let mut dwells = vec![Dwell {
        onset_index: 0,
        onset_ms: ts[0],
        tgt_x: tx[0],
        tgt_y: ty[0],
    }];
    for i in 1..rec.len() {
        if tx[i] != tx[i - 1] || ty[i] != ty[i - 1] {
            dwells.push(Dwell {
                onset_index: i,
                onset_ms: ts[i],
                tgt_x: tx[i],
                tgt_y: ty[i],
            });
        }
    }
    dwells
}

/// One window per dwell long enough to hold `discard_ms + keep_ms` of gaze
/// after the latency-adjusted onset.
///
/// Window bounds are `[onset + latency + discard, onset + latency + discard + keep)`
/// in recording time. Short dwells are skipped. The mask starts out equal
/// to the missing-sample flags.
pub fn extract_fixations<T: Scalar>(
    rec: &GazeRecording<T>,
    latency: &LatencyEstimate<T>,
    cfg: &FixationConfig<T>,
) -> Result<Vec<FixationWindow<T>>> {
    let dwells = target_dwells(rec);
    if dwells.len() < 2 {
        return Err(Error::NoTransitions);
    }
    let ts = rec.timestamps_ms();
    let data_end = rec.end_ms() + rec.nominal_period_ms();
    let need = cfg.discard_ms + cfg.keep_ms;

    let mut windows = Vec::new();
    for (k, d) in dwells.iter().enumerate() {
        let onset = d.onset_ms + latency.shift_ms;
        let dwell_end = match dwells.get(k + 1) {
            Some(next) => (next.onset_ms + latency.shift_ms).min(data_end),
            None => data_end,
        };
        if dwell_end - onset < need {
            continue;
        }
        let start_ms = onset + cfg.discard_ms;
        let end_ms = start_ms + cfg.keep_ms;
        let start = ts.partition_point(|&t| t < start_ms);
        let end = ts.partition_point(|&t| t < end_ms);
        if end <= start {
            continue;
        }
        windows.push(FixationWindow {
            recording_id: rec.recording_id().to_owned(),
            sample_start: start,
            sample_end: end,
            tgt_x: d.tgt_x,
            tgt_y: d.tgt_y,
            onset_ms: onset,
            outlier_mask: rec.missing()[start..end].to_vec(),
        });
    }
    Ok(windows)
}

/// Per-channel median of the non-missing samples of a window.
pub fn window_centroid<T: Scalar>(win: &FixationWindow<T>, rec: &GazeRecording<T>) -> Option<(T, T)> {
    let usable: Vec<usize> = win.indices().filter(|&i| !rec.is_missing(i)).collect();
    if usable.is_empty() {
        return None;
    }
    let xs: Vec<T> = usable.iter().map(|&i| rec.gaze_x()[i]).collect();
    let ys: Vec<T> = usable.iter().map(|&i| rec.gaze_y()[i]).collect();
    Some((
        SortedSample::new(xs).ok()?.median(),
        SortedSample::new(ys).ok()?.median(),
    ))
}

/// Marks samples whose distance to the window centroid falls outside
/// Tukey's fences or exceeds `max_dist_dva`. Missing samples are always
/// masked. Quartiles use linear interpolation.
pub fn reject_outliers<T: Scalar>(
    win: &FixationWindow<T>,
    rec: &GazeRecording<T>,
    cfg: &OutlierConfig<T>,
) -> Result<FixationWindow<T>> {
    let usable: Vec<usize> = win.indices().filter(|&i| !rec.is_missing(i)).collect();
    if usable.len() < 4 {
        return Err(Error::Insufficient(format!(
            "window at sample {} has {} usable samples, need 4",
            win.sample_start,
            usable.len()
        )));
    }
    let (cx, cy) = window_centroid(win, rec).expect("usable samples exist");
    let dist = |i: usize| {
        let dx = rec.gaze_x()[i] - cx;
        let dy = rec.gaze_y()[i] - cy;
        (dx * dx + dy * dy).sqrt()
    };
    let sorted = SortedSample::new(usable.iter().map(|&i| dist(i)).collect())?;
    let q1 = sorted.quantile(lit(0.25))?;
    let q3 = sorted.quantile(lit(0.75))?;
    let iqr = q3 - q1;
    let upper = q3 + cfg.fence_k * iqr;
    let lower = q1 - cfg.fence_k * iqr;

    let outlier_mask = win
        .indices()
        .map(|i| {
            if rec.is_missing(i) {
                return true;
            }
            let d = dist(i);
            d > upper || d < lower || d > cfg.max_dist_dva
        })
        .collect();
    Ok(FixationWindow {
        outlier_mask,
        ..win.clone()
    })
}
