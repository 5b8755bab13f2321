//! Noise-variance calibration: sweep the benchmark model over a grid of
//! `sigma0_sq` values, record the corpus-median horizontal precision, fit a
//! line, and invert it.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degrade::{degrade_benchmark, InverseMethod, PipelineConfig};
use crate::error::{Error, Result};
use crate::metrics::recording_quality;
use crate::scalar::{count, Scalar};
use crate::seed::derive_seed;
use crate::stats::median;
use crate::types::{CalibrationCurve, CalibrationPoint, DegradationPlan, GazeRecording, NoiseOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClampSide {
    Below,
    Above,
}

impl fmt::Display for ClampSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClampSide::Below => "below curve range",
            ClampSide::Above => "above curve range",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion<T> {
    pub sigma0_sq: T,
    pub clamped: Option<ClampSide>,
}

fn clamp_to_grid<T: Scalar>(calib: &CalibrationCurve<T>, s: T) -> Inversion<T> {
    let hi = calib.max_sigma0_sq();
    if s < T::zero() {
        Inversion {
            sigma0_sq: T::zero(),
            clamped: Some(ClampSide::Below),
        }
    } else if s > hi {
        Inversion {
            sigma0_sq: hi,
            clamped: Some(ClampSide::Above),
        }
    } else {
        Inversion {
            sigma0_sq: s,
            clamped: None,
        }
    }
}

/// `(desired - intercept) / slope`, clamped to `[0, max grid value]`.
pub fn invert_curve<T: Scalar>(calib: &CalibrationCurve<T>, desired_mad_h: T) -> Result<Inversion<T>> {
    if !(calib.slope > T::zero()) {
        return Err(Error::NonPositiveSlope(calib.slope.to_f64().unwrap_or(f64::NAN)));
    }
    if !(desired_mad_h >= T::zero()) {
        return Err(Error::param(format!("desired MAD_h must be >= 0, got {desired_mad_h}")));
    }
    Ok(clamp_to_grid(calib, (desired_mad_h - calib.intercept) / calib.slope))
}

/// Inverse of the piecewise-linear interpolant through the raw sweep
/// points, made monotone by a running maximum. Below the first point the
/// first rising segment is extrapolated.
pub fn invert_curve_interpolated<T: Scalar>(calib: &CalibrationCurve<T>, desired_mad_h: T) -> Result<Inversion<T>> {
    if !(desired_mad_h >= T::zero()) {
        return Err(Error::param(format!("desired MAD_h must be >= 0, got {desired_mad_h}")));
    }
    let (xs, ys) = monotone_points(calib)?;
    let last = ys.len() - 1;
    if desired_mad_h > ys[last] {
        return Ok(Inversion {
            sigma0_sq: xs[last],
            clamped: Some(ClampSide::Above),
        });
    }
    let seg = if desired_mad_h <= ys[0] {
        (0..last).find(|&i| ys[i + 1] > ys[i]).expect("curve rises somewhere")
    } else {
        (0..last)
            .find(|&i| ys[i + 1] >= desired_mad_h && ys[i + 1] > ys[i])
            .expect("desired within curve range")
    };
    let (x0, x1, y0, y1) = (xs[seg], xs[seg + 1], ys[seg], ys[seg + 1]);
    let s = x0 + (desired_mad_h - y0) * (x1 - x0) / (y1 - y0);
    Ok(clamp_to_grid(calib, s))
}

pub fn invert<T: Scalar>(calib: &CalibrationCurve<T>, desired_mad_h: T, method: InverseMethod) -> Result<Inversion<T>> {
    match method {
        InverseMethod::Linear => invert_curve(calib, desired_mad_h),
        InverseMethod::Interpolated => invert_curve_interpolated(calib, desired_mad_h),
    }
}

/// Sweep points with MAD_h replaced by its running maximum.
fn monotone_points<T: Scalar>(calib: &CalibrationCurve<T>) -> Result<(Vec<T>, Vec<T>)> {
    let xs: Vec<T> = calib.samples.iter().map(|p| p.sigma0_sq).collect();
    let mut ys: Vec<T> = calib.samples.iter().map(|p| p.mad_h).collect();
    for i in 1..ys.len() {
        ys[i] = ys[i].max(ys[i - 1]);
    }
    if !(ys[ys.len() - 1] > ys[0]) {
        return Err(Error::NonPositiveSlope(0.0));
    }
    Ok((xs, ys))
}

/// MAD_h of the monotone interpolant at `sigma0_sq = 0`: the precision the
/// pipeline leaves when it adds no noise.
pub fn interpolated_floor<T: Scalar>(calib: &CalibrationCurve<T>) -> Result<T> {
    let (xs, ys) = monotone_points(calib)?;
    if xs[0] <= T::zero() {
        return Ok(ys[0]);
    }
    let seg = (0..ys.len() - 1).find(|&i| ys[i + 1] > ys[i]).expect("curve rises somewhere");
    let slope = (ys[seg + 1] - ys[seg]) / (xs[seg + 1] - xs[seg]);
    Ok((ys[seg] - slope * (xs[seg] - T::zero())).max(T::zero()))
}

/// Noise variance that adds `marginal_mad_h` on top of what a recording
/// already has.
///
/// The sweep measures total precision, floor included, so the interpolated
/// inverse is evaluated at `sqrt(marginal² + floor²)`. The linear inverse is
/// applied to `marginal_mad_h` as is.
pub fn invert_marginal<T: Scalar>(
    calib: &CalibrationCurve<T>,
    marginal_mad_h: T,
    method: InverseMethod,
) -> Result<Inversion<T>> {
    match method {
        InverseMethod::Linear => invert_curve(calib, marginal_mad_h),
        InverseMethod::Interpolated => {
            let floor = interpolated_floor(calib)?;
            invert_curve_interpolated(calib, (marginal_mad_h * marginal_mad_h + floor * floor).sqrt())
        }
    }
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ..., <= b`.
pub fn parse_grid<T: Scalar>(spec: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::param(format!("grid `{spec}` must be a:b:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<T>()
            .map_err(|e| Error::param(format!("grid `{spec}`: {e}")))
    };
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if !(step > T::zero()) || b < a || a < T::zero() {
        return Err(Error::param(format!("grid `{spec}` needs 0 <= a <= b and step > 0")));
    }
    let n = ((b - a) / step + T::from_f64(1e-9).expect("small constant"))
        .floor()
        .to_usize()
        .unwrap_or(0);
    Ok((0..=n).map(|k| a + count::<T>(k) * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepConfig<T: Scalar> {
    pub pipeline: PipelineConfig<T>,
    pub noise_order: NoiseOrder,
}

impl<T: Scalar> Default for SweepConfig<T> {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            noise_order: NoiseOrder::Pre,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome<T> {
    pub curve: CalibrationCurve<T>,
    /// Recordings that yielded a precision value at each grid point.
    pub recordings_used: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Runs the benchmark model over `corpus` at every grid value and fits the
/// corpus-median horizontal precision against `sigma0_sq`.
///
/// Each recording uses the same seed at every grid point, so the sweep
/// differs between points only through the noise scale.
pub fn sweep_sigma<T: Scalar>(
    corpus: &[GazeRecording<T>],
    grid: &[T],
    target_rate_hz: T,
    seed: u64,
    cfg: &SweepConfig<T>,
) -> Result<SweepOutcome<T>> {
    if corpus.is_empty() {
        return Err(Error::Empty("calibration corpus"));
    }
    if grid.len() < 3 {
        return Err(Error::Insufficient(format!(
            "calibration grid needs at least 3 points, got {}",
            grid.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut samples = Vec::with_capacity(grid.len());
    let mut recordings_used = Vec::with_capacity(grid.len());
    for &sigma0_sq in grid {
        let values: Vec<Result<T>> = corpus
            .par_iter()
            .map(|rec| {
                let mut plan = DegradationPlan::benchmark(
                    target_rate_hz,
                    sigma0_sq,
                    derive_seed(seed, &[rec.recording_id(), "calibrate"]),
                );
                plan.noise_order = cfg.noise_order;
                let out = degrade_benchmark(rec, &plan, &cfg.pipeline)?;
                Ok(recording_quality(&out, &cfg.pipeline.metrics)?.prec_h)
            })
            .collect();
        let mut ok = Vec::with_capacity(values.len());
        for (rec, v) in corpus.iter().zip(values) {
            match v {
                Ok(v) => ok.push(v),
                Err(e) => warnings.push(format!(
                    "sigma0_sq {sigma0_sq}: recording `{}` skipped: {e}",
                    rec.recording_id()
                )),
            }
        }
        if ok.is_empty() {
            return Err(Error::Insufficient(format!(
                "no recording produced a precision value at sigma0_sq {sigma0_sq}"
            )));
        }
        recordings_used.push(ok.len());
        samples.push(CalibrationPoint {
            sigma0_sq,
            mad_h: median(&ok)?,
        });
    }
    let curve = CalibrationCurve::fit(samples)?;
    if !curve.is_monotone() {
        let msg = "calibration sweep is not monotone in sigma0_sq".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SweepOutcome {
        curve,
        recordings_used,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_curve() -> CalibrationCurve<f64> {
        let pts = (0..=6)
            .map(|i| {
                let s = i as f64 * 0.05;
                CalibrationPoint {
                    sigma0_sq: s,
                    mad_h: 0.27 * s.sqrt(),
                }
            })
            .collect();
        CalibrationCurve::fit(pts).unwrap()
    }

    #[test]
    fn linear_inverse_examples() {
        let c = sqrt_curve();
        let at_intercept = invert_curve(&c, c.intercept.max(0.0)).unwrap();
        assert!(at_intercept.sigma0_sq.abs() < 1e-12);

        let s = 0.15;
        let inv = invert_curve(&c, c.eval(s)).unwrap();
        assert!((inv.sigma0_sq - s).abs() < 1e-12);

        let above = invert_curve(&c, 10.0).unwrap();
        assert_eq!(above.sigma0_sq, c.max_sigma0_sq());
        assert_eq!(above.clamped, Some(ClampSide::Above));
        assert!(invert_curve(&c, -1.0).is_err());
    }

    #[test]
    fn linear_inverse_round_trips_grid_points_within_residual() {
        let c = sqrt_curve();
        for p in &c.samples[1..c.samples.len() - 1] {
            let inv = invert_curve(&c, p.mad_h).unwrap();
            let back = c.eval(inv.sigma0_sq);
            assert!((back - p.mad_h).abs() <= 2.0 * c.max_residual + 1e-12);
        }
    }

    #[test]
    fn non_positive_slope_is_an_error() {
        let pts = vec![
            CalibrationPoint { sigma0_sq: 0.0, mad_h: 0.3 },
            CalibrationPoint { sigma0_sq: 0.1, mad_h: 0.2 },
            CalibrationPoint { sigma0_sq: 0.2, mad_h: 0.1 },
        ];
        let c = CalibrationCurve::fit(pts).unwrap();
        assert!(matches!(invert_curve(&c, 0.2), Err(Error::NonPositiveSlope(_))));
        assert!(invert_curve_interpolated(&c, 0.2).is_err());
    }

    #[test]
    fn interpolated_inverse_hits_grid_points_exactly() {
        let c = sqrt_curve();
        for p in &c.samples {
            let inv = invert_curve_interpolated(&c, p.mad_h).unwrap();
            assert!((inv.sigma0_sq - p.sigma0_sq).abs() < 1e-12);
        }
        let mid = invert_curve_interpolated(&c, 0.5 * (c.samples[2].mad_h + c.samples[3].mad_h)).unwrap();
        assert!((mid.sigma0_sq - 0.125).abs() < 1e-12);
        assert_eq!(invert_curve_interpolated(&c, 1.0).unwrap().clamped, Some(ClampSide::Above));
    }

    #[test]
    fn interpolated_inverse_skips_flat_and_dipping_segments() {
        let pts = vec![
            CalibrationPoint { sigma0_sq: 0.0f64, mad_h: 0.0 },
            CalibrationPoint { sigma0_sq: 0.1, mad_h: 0.1 },
            CalibrationPoint { sigma0_sq: 0.2, mad_h: 0.09 },
            CalibrationPoint { sigma0_sq: 0.3, mad_h: 0.2 },
        ];
        let c = CalibrationCurve::fit(pts).unwrap();
        let inv = invert_curve_interpolated(&c, 0.15).unwrap();
        assert!((inv.sigma0_sq - 0.25).abs() < 1e-12);
    }

    #[test]
    fn marginal_inverse_removes_the_floor() {
        // total MAD_h = sqrt(0.01² + 0.05 s), i.e. a floor plus a quadrature term
        let pts = (0..=8)
            .map(|i| {
                let s = i as f64 * 0.05;
                CalibrationPoint {
                    sigma0_sq: s,
                    mad_h: (0.01f64.powi(2) + 0.05 * s).sqrt(),
                }
            })
            .collect();
        let c = CalibrationCurve::fit(pts).unwrap();
        assert!((interpolated_floor(&c).unwrap() - 0.01).abs() < 1e-15);
        for s in [0.1, 0.2, 0.35] {
            let marginal = (0.05f64 * s).sqrt();
            let inv = invert_marginal(&c, marginal, InverseMethod::Interpolated).unwrap();
            assert!((inv.sigma0_sq - s).abs() < 1e-12, "{s}: {}", inv.sigma0_sq);
        }
        assert_eq!(
            invert_marginal(&c, 0.1, InverseMethod::Linear).unwrap(),
            invert_curve(&c, 0.1).unwrap()
        );
    }

    #[test]
    fn floor_extrapolates_when_grid_starts_above_zero() {
        let pts = vec![
            CalibrationPoint { sigma0_sq: 0.1f64, mad_h: 0.03 },
            CalibrationPoint { sigma0_sq: 0.2, mad_h: 0.05 },
            CalibrationPoint { sigma0_sq: 0.3, mad_h: 0.06 },
        ];
        let c = CalibrationCurve::fit(pts).unwrap();
        assert!((interpolated_floor(&c).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn grid_parsing() {
        let g: Vec<f64> = parse_grid("0:0.3:0.1").unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[3] - 0.3).abs() < 1e-12);
        assert_eq!(parse_grid::<f64>("0.05:0.15:0.05").unwrap().len(), 3);
        assert!(parse_grid::<f64>("0:1").is_err());
        assert!(parse_grid::<f64>("1:0:0.1").is_err());
        assert!(parse_grid::<f64>("0:1:0").is_err());
    }
}
