//! Percentile-matched parameter planning for the modified model.

use serde::{Deserialize, Serialize};

use crate::calibrate::{invert, invert_marginal, Inversion};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::stats::SortedSample;
use crate::types::{CalibrationCurve, DegradationPlan, NoiseOrder, QualityVector};

/// How a desired horizontal precision is turned into a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseMethod {
    /// Invert the least-squares line.
    Linear,
    /// Invert the monotone piecewise-linear interpolant of the sweep points.
    #[default]
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanOptions {
    pub inverse: InverseMethod,
    pub noise_order: NoiseOrder,
    pub jitter_correction: bool,
}

/// Intermediate values behind one plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics<T> {
    pub precision_rank: T,
    pub target_prec_c: T,
    /// Combined dispersion to add, by quadrature.
    pub marginal_prec_c: T,
    /// Per-channel share of `marginal_prec_c` passed to the calibration inverse.
    pub desired_mad_h: T,
    pub acc_rank_h: T,
    pub acc_rank_v: T,
    pub target_acc_h: T,
    pub target_acc_v: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedDegradation<T> {
    pub plan: DegradationPlan<T>,
    pub diagnostics: PlanDiagnostics<T>,
    pub warnings: Vec<String>,
}

/// Sorted source and target feature distributions, built once per corpus pair.
#[derive(Debug, Clone)]
pub struct PercentileMatcher<T> {
    source_prec_c: SortedSample<T>,
    source_acc_h: SortedSample<T>,
    source_acc_v: SortedSample<T>,
    target_prec_c: SortedSample<T>,
    target_acc_h: SortedSample<T>,
    target_acc_v: SortedSample<T>,
    jitter_sigma_ms: T,
}

impl<T: Scalar> PercentileMatcher<T> {
    pub fn new(source_corpus: &[QualityVector<T>], target_corpus: &[QualityVector<T>]) -> Result<Self> {
        if source_corpus.is_empty() {
            return Err(Error::Empty("source corpus"));
        }
        if target_corpus.is_empty() {
            return Err(Error::Empty("target corpus"));
        }
        let col = |c: &[QualityVector<T>], f: fn(&QualityVector<T>) -> T| {
            SortedSample::new(c.iter().map(f).collect())
        };
        Ok(Self {
            source_prec_c: col(source_corpus, |q| q.prec_c)?,
            source_acc_h: col(source_corpus, |q| q.acc_h)?,
            source_acc_v: col(source_corpus, |q| q.acc_v)?,
            target_prec_c: col(target_corpus, |q| q.prec_c)?,
            target_acc_h: col(target_corpus, |q| q.acc_h)?,
            target_acc_v: col(target_corpus, |q| q.acc_v)?,
            jitter_sigma_ms: col(target_corpus, |q| q.temporal_prec_ms)?.median(),
        })
    }

    /// Jitter std taken from the target corpus: its median temporal precision.
    pub fn jitter_sigma_ms(&self) -> T {
        self.jitter_sigma_ms
    }

    /// Plan for one source recording.
    ///
    /// `source` holds the recording's own metrics; `source_post_pipeline`
    /// its metrics after a zero-noise benchmark pass.
    pub fn plan(
        &self,
        source: &QualityVector<T>,
        source_post_pipeline: &QualityVector<T>,
        calib: &CalibrationCurve<T>,
        target_rate_hz: T,
        rng_seed: u64,
        opts: &PlanOptions,
    ) -> Result<PlannedDegradation<T>> {
        let mut warnings = Vec::new();

        let precision_rank = self.source_prec_c.percentile_rank(source.prec_c);
        let target_prec_c = self.target_prec_c.quantile(precision_rank)?;
        let post = source_post_pipeline.prec_c;
        let marginal_prec_c = (target_prec_c * target_prec_c - post * post).max(T::zero()).sqrt();
        // noise is added identically to both channels, so each carries 1/sqrt(2) of the combined value
        let desired_mad_h = marginal_prec_c / lit::<T>(2.0).sqrt();
        let Inversion { sigma0_sq, clamped } = invert_marginal(calib, desired_mad_h, opts.inverse)?;
        if let Some(side) = clamped {
            warnings.push(format!(
                "calibration inverse clamped ({side}) for desired MAD_h {desired_mad_h}; sigma0_sq = {sigma0_sq}"
            ));
        }

        let acc_rank_h = self.source_acc_h.percentile_rank(source.acc_h);
        let acc_rank_v = self.source_acc_v.percentile_rank(source.acc_v);
        let target_acc_h = self.target_acc_h.quantile(acc_rank_h)?;
        let target_acc_v = self.target_acc_v.quantile(acc_rank_v)?;

        let plan = DegradationPlan {
            target_rate_hz,
            sigma0_sq: sigma0_sq.max(T::zero()),
            acc_offset_h: (target_acc_h - source.acc_h).max(T::zero()),
            acc_offset_v: (target_acc_v - source.acc_v).max(T::zero()),
            jitter_sigma_ms: self.jitter_sigma_ms,
            rng_seed,
            eccentricity_weighting: None,
            noise_order: opts.noise_order,
            jitter_correction: opts.jitter_correction,
        };
        plan.check()?;
        Ok(PlannedDegradation {
            plan,
            diagnostics: PlanDiagnostics {
                precision_rank,
                target_prec_c,
                marginal_prec_c,
                desired_mad_h,
                acc_rank_h,
                acc_rank_v,
                target_acc_h,
                target_acc_v,
            },
            warnings,
        })
    }
}

/// One-shot percentile-matched plan. Prefer [`PercentileMatcher`] when
/// planning a whole corpus.
#[allow(clippy::too_many_arguments)]
pub fn plan_modified<T: Scalar>(
    source: &QualityVector<T>,
    source_post_pipeline: &QualityVector<T>,
    source_corpus: &[QualityVector<T>],
    target_corpus: &[QualityVector<T>],
    calib: &CalibrationCurve<T>,
    target_rate_hz: T,
    rng_seed: u64,
    opts: &PlanOptions,
) -> Result<PlannedDegradation<T>> {
    PercentileMatcher::new(source_corpus, target_corpus)?.plan(
        source,
        source_post_pipeline,
        calib,
        target_rate_hz,
        rng_seed,
        opts,
    )
}

/// Single corpus-wide noise variance for the benchmark model: the
/// calibration inverse of the target corpus median horizontal precision.
pub fn benchmark_sigma0_sq<T: Scalar>(
    target_corpus: &[QualityVector<T>],
    calib: &CalibrationCurve<T>,
    method: InverseMethod,
) -> Result<Inversion<T>> {
    let prec_h: Vec<T> = target_corpus.iter().map(|q| q.prec_h).collect();
    let median = SortedSample::new(prec_h)?.median();
    invert(calib, median, method)
}
