use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::types::{EccentricityWeighting, GazeRecording};

/// Largest timestamp perturbation as a fraction of the nominal period.
pub const JITTER_CLAMP_FRACTION: f64 = 0.45;

/// Adds independent Gaussian noise to both gaze channels.
///
/// Variance is `sigma0_sq`, scaled by the eccentricity weight at the source
/// position when one is given. Two normals (x then y) are drawn for every
/// sample, missing or not, so the stream does not depend on the missing
/// pattern.
pub fn add_precision_noise<T: Scalar, R: Rng + ?Sized>(
    rec: &GazeRecording<T>,
    sigma0_sq: T,
    rng: &mut R,
    weighting: Option<&EccentricityWeighting<T>>,
) -> Result<GazeRecording<T>> {
    add_noise_with(rec, sigma0_sq, weighting, || T::standard_normal(rng))
}

/// [`add_precision_noise`] with the standard normals supplied by
/// `next_normal`, two per sample.
pub(crate) fn add_noise_with<T: Scalar>(
    rec: &GazeRecording<T>,
    sigma0_sq: T,
    weighting: Option<&EccentricityWeighting<T>>,
    mut next_normal: impl FnMut() -> T,
) -> Result<GazeRecording<T>> {
    if !(sigma0_sq >= T::zero()) || !sigma0_sq.is_finite() {
        return Err(Error::param(format!("sigma0_sq must be >= 0, got {sigma0_sq}")));
    }
    let mut gx = rec.gaze_x().to_vec();
    let mut gy = rec.gaze_y().to_vec();
    for i in 0..rec.len() {
        let nx = next_normal();
        let ny = next_normal();
        if rec.is_missing(i) {
            continue;
        }
        let var = match weighting {
            Some(w) => sigma0_sq * w.alpha(gx[i], gy[i]),
            None => sigma0_sq,
        };
        let sd = var.sqrt();
        gx[i] += sd * nx;
        gy[i] += sd * ny;
    }
    rec.with_gaze(gx, gy)
}

/// Perturbs each stamp of a uniform grid with independent Gaussian noise.
///
/// The std is `jitter_sigma_ms`, or `jitter_sigma_ms / sqrt(2)` when
/// `correction` is set so that the inter-sample intervals end up with std
/// `jitter_sigma_ms`. Each perturbation is clamped to ±0.45 of the period,
/// which keeps the output strictly increasing.
pub fn jitter_timestamps<T: Scalar, R: Rng + ?Sized>(
    timestamps_ms: &[T],
    jitter_sigma_ms: T,
    rng: &mut R,
    correction: bool,
) -> Result<Vec<T>> {
    if timestamps_ms.len() < 2 {
        return Err(Error::TooShort {
            found: timestamps_ms.len(),
            needed: 2,
        });
    }
    let period = timestamps_ms[1] - timestamps_ms[0];
    let limit = lit::<T>(JITTER_CLAMP_FRACTION) * period;
    if !(jitter_sigma_ms >= T::zero()) || jitter_sigma_ms >= limit {
        return Err(Error::param(format!(
            "jitter sigma {jitter_sigma_ms} ms must be >= 0 and below {limit} ms"
        )));
    }
    let sd = if correction {
        jitter_sigma_ms / lit::<T>(2.0).sqrt()
    } else {
        jitter_sigma_ms
    };
    Ok(timestamps_ms
        .iter()
        .map(|&t| {
            let e = (sd * T::standard_normal(rng)).max(-limit).min(limit);
            t + e
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::temporal_precision;
    use crate::types::{validate_recording, RecordingParts};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat(n: usize, x: f64, y: f64) -> GazeRecording<f64> {
        validate_recording(RecordingParts {
            recording_id: "flat".into(),
            nominal_rate_hz: 1000.0,
            timestamps_ms: (0..n).map(|i| i as f64).collect(),
            gaze_x: vec![x; n],
            gaze_y: vec![y; n],
            tgt_x: vec![x; n],
            tgt_y: vec![y; n],
            missing: None,
        })
        .unwrap()
    }

    fn var(s: &[f64]) -> f64 {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() - 1) as f64
    }

    #[test]
    fn zero_variance_is_identity() {
        let rec = flat(100, 1.0, -2.0);
        let out = add_precision_noise(&rec, 0.0, &mut ChaCha8Rng::seed_from_u64(1), None).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn sample_variance_matches_sigma0_sq() {
        let rec = flat(100_000, 0.0, 0.0);
        let out = add_precision_noise(&rec, 0.04, &mut ChaCha8Rng::seed_from_u64(2), None).unwrap();
        for ch in [out.gaze_x(), out.gaze_y()] {
            let v = var(ch);
            assert!((v / 0.04 - 1.0).abs() < 0.03, "{v}");
        }
        assert_eq!(out.tgt_x(), rec.tgt_x());
    }

    #[test]
    fn weighting_scales_variance_at_center() {
        let rec = flat(100_000, 0.0, 0.0);
        let w = EccentricityWeighting {
            sigma_s: 10.0,
            r_max: 20.0,
        };
        let out = add_precision_noise(&rec, 1.0, &mut ChaCha8Rng::seed_from_u64(3), Some(&w)).unwrap();
        let ratio = var(out.gaze_x());
        assert!((ratio / (-2.0f64).exp() - 1.0).abs() < 0.03, "{ratio}");
    }

    #[test]
    fn missing_samples_stay_missing() {
        let mut p = flat(10, 0.0, 0.0).into_parts();
        p.gaze_y[3] = f64::NAN;
        let rec = validate_recording(p).unwrap();
        let out = add_precision_noise(&rec, 0.5, &mut ChaCha8Rng::seed_from_u64(4), None).unwrap();
        assert_eq!(out.missing(), rec.missing());
        assert!(out.gaze_x()[3].is_nan());
    }

    fn grid(n: usize, period: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * period).collect()
    }

    #[test]
    fn zero_jitter_is_identity() {
        let g = grid(100, 4.0);
        let out = jitter_timestamps(&g, 0.0, &mut ChaCha8Rng::seed_from_u64(5), false).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn isi_std_follows_difference_law() {
        let g = grid(100_000, 4.0);
        let raw = jitter_timestamps(&g, 0.5, &mut ChaCha8Rng::seed_from_u64(6), false).unwrap();
        let s = temporal_precision(&raw).unwrap();
        assert!((s / (2f64.sqrt() * 0.5) - 1.0).abs() < 0.05, "{s}");
        let corrected = jitter_timestamps(&g, 0.5, &mut ChaCha8Rng::seed_from_u64(6), true).unwrap();
        let s = temporal_precision(&corrected).unwrap();
        assert!((s / 0.5 - 1.0).abs() < 0.05, "{s}");
        assert!(raw.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn large_jitter_is_rejected() {
        let g = grid(10, 4.0);
        assert!(jitter_timestamps(&g, 1.8, &mut ChaCha8Rng::seed_from_u64(7), false).is_err());
        assert!(jitter_timestamps(&g, -0.1, &mut ChaCha8Rng::seed_from_u64(7), false).is_err());
    }
}
