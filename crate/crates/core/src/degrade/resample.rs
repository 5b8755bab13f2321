use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};
use crate::types::{validate_recording, GazeRecording, RecordingParts};

/// Uniform grid from `start_ms` covering `span_ms` at `rate_hz`.
pub fn nominal_target_timestamps<T: Scalar>(start_ms: T, span_ms: T, rate_hz: T) -> Result<Vec<T>> {
    if !(rate_hz > T::zero()) {
        return Err(Error::InvalidRate(rate_hz.to_f64().unwrap_or(f64::NAN)));
    }
    let period = lit::<T>(1000.0) / rate_hz;
    if !(span_ms >= period) {
        return Err(Error::param(format!(
            "span {span_ms} ms shorter than one target period ({period} ms)"
        )));
    }
    // tolerate representation error in span / period
    let steps = (span_ms / period + lit(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=steps).map(|k| start_ms + count::<T>(k) * period).collect())
}

/// First-order spline (linear) interpolation of the gaze channels onto
/// `new_timestamps_ms`.
///
/// The piecewise-constant target channels are carried by zero-order hold so
/// that resampling never invents intermediate stimulus positions. An output
/// sample is missing when either bracketing input sample is missing.
pub fn resample_spline<T: Scalar>(
    rec: &GazeRecording<T>,
    new_timestamps_ms: &[T],
    nominal_rate_hz: T,
) -> Result<GazeRecording<T>> {
    let ts = rec.timestamps_ms();
    let (start, end) = (rec.start_ms(), rec.end_ms());
    let n = new_timestamps_ms.len();
    let mut parts = RecordingParts {
        recording_id: rec.recording_id().to_owned(),
        nominal_rate_hz,
        timestamps_ms: new_timestamps_ms.to_vec(),
        gaze_x: Vec::with_capacity(n),
        gaze_y: Vec::with_capacity(n),
        tgt_x: Vec::with_capacity(n),
        tgt_y: Vec::with_capacity(n),
        missing: Some(Vec::with_capacity(n)),
    };
    let missing_out = parts.missing.as_mut().expect("allocated above");
    for &t in new_timestamps_ms {
        if !(t >= start && t <= end) {
            return Err(Error::OutOfSpan {
                t: t.to_f64().unwrap_or(f64::NAN),
                start: start.to_f64().unwrap_or(f64::NAN),
                end: end.to_f64().unwrap_or(f64::NAN),
            });
        }
        // last index with ts[i] <= t
        let i0 = ts.partition_point(|&s| s <= t) - 1;
        parts.tgt_x.push(rec.tgt_x()[i0]);
        parts.tgt_y.push(rec.tgt_y()[i0]);
        if ts[i0] == t {
            parts.gaze_x.push(rec.gaze_x()[i0]);
            parts.gaze_y.push(rec.gaze_y()[i0]);
            missing_out.push(rec.is_missing(i0));
            continue;
        }
        let i1 = i0 + 1;
        if rec.is_missing(i0) || rec.is_missing(i1) {
            parts.gaze_x.push(T::nan());
            parts.gaze_y.push(T::nan());
            missing_out.push(true);
            continue;
        }
        let w = (t - ts[i0]) / (ts[i1] - ts[i0]);
        let lerp = |a: T, b: T| a + w * (b - a);
        parts.gaze_x.push(lerp(rec.gaze_x()[i0], rec.gaze_x()[i1]));
        parts.gaze_y.push(lerp(rec.gaze_y()[i0], rec.gaze_y()[i1]));
        missing_out.push(false);
    }
    validate_recording(parts)
}
