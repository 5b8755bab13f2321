use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};
use crate::stats::{mad, population_std};
use crate::types::{FixationWindow, GazeRecording};

/// Per-channel and combined values of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelTriple<T> {
    pub h: T,
    pub v: T,
    pub c: T,
}

/// Mean absolute gaze-target offset over the unmasked window samples.
pub fn fixation_accuracy<T: Scalar>(
    win: &FixationWindow<T>,
    rec: &GazeRecording<T>,
) -> Result<ChannelTriple<T>> {
    let (mut h, mut v, mut c) = (T::zero(), T::zero(), T::zero());
    let mut n = 0usize;
    for i in win.kept() {
        let dx = rec.gaze_x()[i] - win.tgt_x;
        let dy = rec.gaze_y()[i] - win.tgt_y;
        h += dx.abs();
        v += dy.abs();
        c += (dx * dx + dy * dy).sqrt();
        n += 1;
    }
    if n == 0 {
        return Err(Error::Insufficient("window has no unmasked samples".into()));
    }
    let n = count::<T>(n);
    Ok(ChannelTriple {
        h: h / n,
        v: v / n,
        c: c / n,
    })
}

/// Median absolute deviation per channel; combined is their root sum of squares.
pub fn fixation_precision<T: Scalar>(
    win: &FixationWindow<T>,
    rec: &GazeRecording<T>,
) -> Result<ChannelTriple<T>> {
    let xs: Vec<T> = win.kept().map(|i| rec.gaze_x()[i]).collect();
    let ys: Vec<T> = win.kept().map(|i| rec.gaze_y()[i]).collect();
    if xs.is_empty() {
        return Err(Error::Insufficient("window has no unmasked samples".into()));
    }
    let h = mad(&xs)?;
    let v = mad(&ys)?;
    Ok(ChannelTriple {
        h,
        v,
        c: (h * h + v * v).sqrt(),
    })
}

/// Population std of consecutive timestamp differences, ms.
pub fn temporal_precision<T: Scalar>(timestamps_ms: &[T]) -> Result<T> {
    if timestamps_ms.len() < 3 {
        return Err(Error::TooShort {
            found: timestamps_ms.len(),
            needed: 3,
        });
    }
    let diffs: Vec<T> = timestamps_ms.windows(2).map(|w| w[1] - w[0]).collect();
    population_std(&diffs)
}
