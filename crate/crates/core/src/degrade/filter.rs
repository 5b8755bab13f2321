//! Butterworth low-pass design (bilinear transform) and forward-backward filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};
use crate::types::GazeRecording;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec<T> {
    pub cutoff_hz: T,
    pub order: usize,
    pub zero_phase: bool,
}

/// One second-order section, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b0: T,
    pub b1: T,
    pub b2: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Scalar> Biquad<T> {
    /// Transposed direct form II over `x`, states primed for a constant
    /// input equal to `x[0]` (sections have unit DC gain).
    fn run(&self, x: &mut [T]) {
        let Some(&x0) = x.first() else { return };
        let mut s2 = (self.b2 - self.a2) * x0;
        let mut s1 = (self.b1 - self.a1) * x0 + s2;
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * y + s2;
            s2 = self.b2 * input - self.a2 * y;
            *v = y;
        }
    }
}

/// Cascaded-section Butterworth low-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth<T> {
    pub sections: Vec<Biquad<T>>,
    pub order: usize,
    pub cutoff_hz: T,
    pub sample_rate_hz: T,
}

impl<T: Scalar> Butterworth<T> {
    pub fn lowpass(order: usize, cutoff_hz: T, sample_rate_hz: T) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("filter order must be >= 1"));
        }
        let nyquist = sample_rate_hz / lit(2.0);
        if !(cutoff_hz > T::zero() && cutoff_hz < nyquist) {
            return Err(Error::param(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
            )));
        }
        // prewarped analog cutoff, unit-normalised prototype
        let k = (T::PI() * cutoff_hz / sample_rate_hz).tan();
        let k2 = k * k;
        let two = lit::<T>(2.0);
        let n = count::<T>(order);
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // conjugate pole pair: s^2 + 2 sin(theta) s + 1
            let theta = T::PI() * count::<T>(2 * i + 1) / (two * n);
            let damp = two * theta.sin();
            let a0 = T::one() + damp * k + k2;
            let g = k2 / a0;
            sections.push(Biquad {
                b0: g,
                b1: two * g,
                b2: g,
                a1: two * (k2 - T::one()) / a0,
                a2: (T::one() - damp * k + k2) / a0,
            });
        }
        if order % 2 == 1 {
            let g = k / (T::one() + k);
            sections.push(Biquad {
                b0: g,
                b1: g,
                b2: T::zero(),
                a1: (k - T::one()) / (k + T::one()),
                a2: T::zero(),
            });
        }
        Ok(Self {
            sections,
            order,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    /// Samples needed for the impulse response to settle.
    pub fn warmup_len(&self) -> usize {
        let per = (self.sample_rate_hz / self.cutoff_hz).ceil().to_usize().unwrap_or(1);
        self.order * per.max(1)
    }

    /// Edge padding used by [`Butterworth::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * self.warmup_len()
    }

    /// Causal single pass.
    pub fn filter(&self, x: &mut [T]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Zero-phase forward-backward filtering with odd reflective padding.
    pub fn filtfilt(&self, x: &[T]) -> Result<Vec<T>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::TooShort {
                found: n,
                needed: pad + 1,
            });
        }
        let two = lit::<T>(2.0);
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| two * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| two * last - x[n - 1 - i]));

        self.filter(&mut ext);
        ext.reverse();
        self.filter(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Fills missing samples by linear interpolation between valid neighbours,
/// holding the nearest valid value at the edges.
pub(crate) fn fill_missing<T: Scalar>(values: &[T], missing: &[bool]) -> Result<Vec<T>> {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !missing[i]).collect();
    let (&first, &last) = match (valid.first(), valid.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::AllMissing),
    };
    let mut out = values.to_vec();
    for v in out.iter_mut().take(first) {
        *v = values[first];
    }
    for v in out.iter_mut().skip(last + 1) {
        *v = values[last];
    }
    for pair in valid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a > 1 {
            let span = count::<T>(b - a);
            for (k, v) in out[a + 1..b].iter_mut().enumerate() {
                let w = count::<T>(k + 1) / span;
                *v = values[a] + w * (values[b] - values[a]);
            }
        }
    }
    Ok(out)
}

/// Low-pass filters both gaze channels. Missing samples are bridged for
/// filtering only and stay missing in the output; target channels and
/// timestamps are untouched.
pub fn lowpass_zero_phase<T: Scalar>(rec: &GazeRecording<T>, spec: &FilterSpec<T>) -> Result<GazeRecording<T>> {
    let bw = Butterworth::lowpass(spec.order, spec.cutoff_hz, rec.nominal_rate_hz())?;
    let run = |ch: &[T]| -> Result<Vec<T>> {
        let mut filled = fill_missing(ch, rec.missing())?;
        let mut out = if spec.zero_phase {
            bw.filtfilt(&filled)?
        } else {
            if filled.len() <= bw.pad_len() {
                return Err(Error::TooShort {
                    found: filled.len(),
                    needed: bw.pad_len() + 1,
                });
            }
            bw.filter(&mut filled);
            filled
        };
        for (v, &m) in out.iter_mut().zip(rec.missing()) {
            if m {
                *v = T::nan();
            }
        }
        Ok(out)
    };
    let gx = run(rec.gaze_x())?;
    let gy = run(rec.gaze_y())?;
    rec.with_gaze(gx, gy)
}
