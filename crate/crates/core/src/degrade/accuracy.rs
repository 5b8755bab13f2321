//! Per-fixation signed accuracy offsets applied as a step signal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::types::{FixationWindow, GazeRecording};

/// Relative spread of the drawn offset magnitude: 3 sigma equals 20% of
/// the requested offset.
pub const MAGNITUDE_SPREAD: f64 = 0.2 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStep<T> {
    pub window: FixationWindow<T>,
    pub offset_x: T,
    pub offset_y: T,
}

/// Staircase offset signal: each step starts at its fixation's
/// latency-adjusted onset and holds until the next one. Zero before the
/// first onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStepSignal<T> {
    pub steps: Vec<AccuracyStep<T>>,
}

impl<T: Scalar> AccuracyStepSignal<T> {
    /// Offset in effect at time `t_ms`.
    pub fn offset_at(&self, t_ms: T) -> (T, T) {
        let k = self.steps.partition_point(|s| s.window.onset_ms <= t_ms);
        match k {
            0 => (T::zero(), T::zero()),
            _ => {
                let s = &self.steps[k - 1];
                (s.offset_x, s.offset_y)
            }
        }
    }

    /// Adds the step signal to the gaze channels.
    pub fn apply(&self, rec: &GazeRecording<T>) -> Result<GazeRecording<T>> {
        let mut gx = rec.gaze_x().to_vec();
        let mut gy = rec.gaze_y().to_vec();
        for (i, &t) in rec.timestamps_ms().iter().enumerate() {
            let (ox, oy) = self.offset_at(t);
            gx[i] += ox;
            gy[i] += oy;
        }
        rec.with_gaze(gx, gy)
    }
}

/// Draws one signed offset per fixation and channel.
///
/// Magnitudes come from `N(m, (0.2 m / 3)^2)` with `m` the channel's
/// requested offset, then signs are drawn uniformly from {+1, -1}. All
/// magnitudes (x then y per fixation) are drawn before any sign.
pub fn build_accuracy_signal<T: Scalar, R: Rng + ?Sized>(
    windows: &[FixationWindow<T>],
    offset_h: T,
    offset_v: T,
    rng: &mut R,
) -> Result<AccuracyStepSignal<T>> {
    if windows.is_empty() {
        return Err(Error::Empty("fixations"));
    }
    let spread = lit::<T>(MAGNITUDE_SPREAD);
    let magnitudes: Vec<(T, T)> = windows
        .iter()
        .map(|_| {
            let dx = offset_h + spread * offset_h * T::standard_normal(rng);
            let dy = offset_v + spread * offset_v * T::standard_normal(rng);
            (dx, dy)
        })
        .collect();
    let sign = |r: &mut R| if r.random::<bool>() { T::one() } else { -T::one() };
    let signs: Vec<(T, T)> = windows.iter().map(|_| (sign(rng), sign(rng))).collect();

    let mut steps: Vec<AccuracyStep<T>> = windows
        .iter()
        .zip(magnitudes.into_iter().zip(signs))
        .map(|(w, ((dx, dy), (sx, sy)))| AccuracyStep {
            window: w.clone(),
            offset_x: sx * dx,
            offset_y: sy * dy,
        })
        .collect();
    steps.sort_by(|a, b| {
        a.window
            .onset_ms
            .partial_cmp(&b.window.onset_ms)
            .expect("finite onsets")
    });
    Ok(AccuracyStepSignal { steps })
}
