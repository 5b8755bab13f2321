use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};
use crate::types::GazeRecording;

/// Shift grid for the latency search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySearch<T> {
    pub min_ms: T,
    pub max_ms: T,
    /// Grid step; `None` means one nominal sample period.
    pub step_ms: Option<T>,
}

impl<T: Scalar> Default for LatencySearch<T> {
    fn default() -> Self {
        Self {
            min_ms: T::zero(),
            max_ms: lit(400.0),
            step_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyEstimate<T> {
    pub shift_ms: T,
    /// Mean Euclidean gaze-target distance at `shift_ms`, dva.
    pub distance_at_shift: T,
}

/// Mean gaze-target Euclidean distance with gaze read `shift` samples later
/// than the target. `None` when no valid pair overlaps.
pub fn mean_distance_at_shift<T: Scalar>(rec: &GazeRecording<T>, shift: usize) -> Option<T> {
    let n = rec.len();
    if shift >= n {
        return None;
    }
    let (gx, gy) = (rec.gaze_x(), rec.gaze_y());
    let (tx, ty) = (rec.tgt_x(), rec.tgt_y());
    let missing = rec.missing();
    let mut sum = T::zero();
    let mut used = 0usize;
    for i in 0..n - shift {
        let j = i + shift;
        if missing[j] {
            continue;
        }
        let dx = gx[j] - tx[i];
        let dy = gy[j] - ty[i];
        sum += (dx * dx + dy * dy).sqrt();
        used += 1;
    }
    (used > 0).then(|| sum / count(used))
}

/// Grid search for the gaze delay that best aligns gaze with the target.
///
/// Shifts are taken in whole samples of the nominal period; ties resolve to
/// the smallest shift. Missing samples are excluded from every mean.
pub fn estimate_latency<T: Scalar>(
    rec: &GazeRecording<T>,
    search: &LatencySearch<T>,
) -> Result<LatencyEstimate<T>> {
    if !(search.min_ms >= T::zero()) || !(search.max_ms <= lit(500.0)) || search.min_ms > search.max_ms {
        return Err(Error::param(format!(
            "latency search range [{}, {}] ms must lie within [0, 500]",
            search.min_ms, search.max_ms
        )));
    }
    if rec.n_missing() == rec.len() {
        return Err(Error::AllMissing);
    }
    let period = rec.nominal_period_ms();
    let step = match search.step_ms {
        Some(s) if s > T::zero() => (s / period).round().max(T::one()),
        Some(s) => return Err(Error::param(format!("latency step {s} ms must be positive"))),
        None => T::one(),
    };
    let step = step.to_usize().unwrap_or(1);
    let first = (search.min_ms / period).ceil().to_usize().unwrap_or(0);
    let last = (search.max_ms / period + lit(1e-9)).floor().to_usize().unwrap_or(0);
    if first > last {
        return Err(Error::param("latency search range contains no grid point"));
    }

    let mut best: Option<(usize, T)> = None;
    for shift in (first..=last).step_by(step) {
        if let Some(d) = mean_distance_at_shift(rec, shift) {
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((shift, d));
            }
        }
    }
    let (shift, distance_at_shift) =
        best.ok_or_else(|| Error::Insufficient("no overlap at any latency shift".into()))?;
    Ok(LatencyEstimate {
        shift_ms: count::<T>(shift) * period,
        distance_at_shift,
    })
}
