//! Realism assessment: per-feature distribution summaries and the
//! leave-one-out 1-NN two-sample test.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{mean, SortedSample};
use crate::types::{QualityVector, FEATURE_NAMES};

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let ncols = rows.first().map(Vec::len).ok_or(Error::Empty("feature matrix"))?;
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::LengthMismatch {
                    channel: "feature row",
                    expected: ncols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { ncols, data })
    }

    pub fn from_quality(qvs: &[QualityVector<T>]) -> Result<Self> {
        if qvs.is_empty() {
            return Err(Error::Empty("quality vectors"));
        }
        Ok(Self {
            ncols: FEATURE_NAMES.len(),
            data: qvs.iter().flat_map(|q| q.features()).collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.data.len() / self.ncols
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.data.iter().skip(j).step_by(self.ncols).copied()
    }

    fn stack(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.ncols {
            return Err(Error::LengthMismatch {
                channel: "feature columns",
                expected: self.ncols,
                found: other.ncols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { ncols: self.ncols, data })
    }

    fn split_at_row(self, n: usize) -> (Self, Self) {
        let mut data = self.data;
        let tail = data.split_off(n * self.ncols);
        (
            Self { ncols: self.ncols, data },
            Self { ncols: self.ncols, data: tail },
        )
    }
}

/// Per-column z-scoring with population statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
    /// Columns with zero variance; centred but not scaled.
    pub constant_columns: Vec<usize>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(m: &FeatureMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        if n < 2 {
            return Err(Error::Insufficient(format!("standardizer needs at least 2 rows, got {n}")));
        }
        let nn = count::<T>(n);
        let mut means = Vec::with_capacity(m.ncols());
        let mut scales = Vec::with_capacity(m.ncols());
        let mut constant_columns = Vec::new();
        for j in 0..m.ncols() {
            let mu = m.column(j).sum::<T>() / nn;
            let var = m.column(j).map(|v| (v - mu) * (v - mu)).sum::<T>() / nn;
            let sd = var.sqrt();
            if sd > lit::<T>(1e-12) * (T::one() + mu.abs()) {
                scales.push(sd);
            } else {
                log::warn!("feature column {j} has zero variance; left unscaled");
                constant_columns.push(j);
                scales.push(T::one());
            }
            means.push(mu);
        }
        Ok(Self {
            means,
            scales,
            constant_columns,
        })
    }

    pub fn transform(&self, m: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        if m.ncols() != self.means.len() {
            return Err(Error::LengthMismatch {
                channel: "feature columns",
                expected: self.means.len(),
                found: m.ncols(),
            });
        }
        let data = m
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k % m.ncols;
                (v - self.means[j]) / self.scales[j]
            })
            .collect();
        Ok(FeatureMatrix { ncols: m.ncols, data })
    }
}

/// Standardized feature matrix for `qvs`, using `standardizer` if given or
/// one fitted on `qvs` otherwise.
pub fn feature_matrix<T: Scalar>(
    qvs: &[QualityVector<T>],
    standardizer: Option<&Standardizer<T>>,
) -> Result<(FeatureMatrix<T>, Standardizer<T>)> {
    let raw = FeatureMatrix::from_quality(qvs)?;
    let st = match standardizer {
        Some(s) => s.clone(),
        None => Standardizer::fit(&raw)?,
    };
    Ok((st.transform(&raw)?, st))
}

/// Standardizes two sets with statistics of their union.
pub fn standardize_pooled<T: Scalar>(
    real: &FeatureMatrix<T>,
    synth: &FeatureMatrix<T>,
) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>)> {
    let pooled = real.stack(synth)?;
    let st = Standardizer::fit(&pooled)?;
    Ok(st.transform(&pooled)?.split_at_row(real.nrows()))
}

/// Accuracies of one 1-NN run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub seed: u64,
    pub combined_accuracy: f64,
    pub real_accuracy: f64,
    pub synthetic_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Result<Self> {
        let s = SortedSample::from_slice(values)?;
        Ok(Self {
            median: s.median(),
            min: s.min(),
            max: s.max(),
            range: s.max() - s.min(),
        })
    }
}

/// Result of a (possibly repeated) two-sample test. Accuracies are
/// fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub combined_accuracy: f64,
    pub real_accuracy: f64,
    pub synthetic_accuracy: f64,
    pub combined: Spread,
    pub real: Spread,
    pub synthetic: Spread,
    pub per_repeat: Vec<RepeatOutcome>,
    pub n_per_class: usize,
    pub n_real_available: usize,
    pub seed: u64,
}

impl TwoSampleResult {
    fn from_repeats(per_repeat: Vec<RepeatOutcome>, n_per_class: usize, n_real_available: usize, seed: u64) -> Result<Self> {
        let col = |f: fn(&RepeatOutcome) -> f64| per_repeat.iter().map(f).collect::<Vec<_>>();
        let combined = Spread::of(&col(|r| r.combined_accuracy))?;
        let real = Spread::of(&col(|r| r.real_accuracy))?;
        let synthetic = Spread::of(&col(|r| r.synthetic_accuracy))?;
        Ok(Self {
            combined_accuracy: combined.median,
            real_accuracy: real.median,
            synthetic_accuracy: synthetic.median,
            combined,
            real,
            synthetic,
            per_repeat,
            n_per_class,
            n_real_available,
            seed,
        })
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Leave-one-out 1-NN classification of the pooled rows (real first, then
/// synthetic). Ties go to the lowest pooled index.
fn one_nn_core<T: Scalar>(real: &FeatureMatrix<T>, synth: &FeatureMatrix<T>) -> Result<(f64, f64, f64)> {
    let n = real.nrows();
    if n != synth.nrows() {
        return Err(Error::param(format!(
            "1-NN test needs equal class sizes, got {n} real and {} synthetic",
            synth.nrows()
        )));
    }
    if n < 2 {
        return Err(Error::Insufficient(format!("1-NN test needs at least 2 rows per class, got {n}")));
    }
    let pooled = real.stack(synth)?;
    let correct: Vec<bool> = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let xi = pooled.row(i);
            let mut best = usize::MAX;
            let mut best_d = T::infinity();
            for j in (0..2 * n).filter(|&j| j != i) {
                let d = sq_dist(xi, pooled.row(j));
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            (best < n) == (i < n)
        })
        .collect();
    let real_ok = correct[..n].iter().filter(|&&c| c).count();
    let synth_ok = correct[n..].iter().filter(|&&c| c).count();
    let nf = n as f64;
    Ok((
        (real_ok + synth_ok) as f64 / (2.0 * nf),
        real_ok as f64 / nf,
        synth_ok as f64 / nf,
    ))
}

/// Single leave-one-out 1-NN two-sample test on already-standardized
/// matrices with equal row counts.
pub fn one_nn_two_sample<T: Scalar>(real: &FeatureMatrix<T>, synth: &FeatureMatrix<T>, seed: u64) -> Result<TwoSampleResult> {
    let (combined, r, s) = one_nn_core(real, synth)?;
    let outcome = RepeatOutcome {
        repeat: 0,
        seed,
        combined_accuracy: combined,
        real_accuracy: r,
        synthetic_accuracy: s,
    };
    TwoSampleResult::from_repeats(vec![outcome], real.nrows(), real.nrows(), seed)
}

/// Repeats the 1-NN test on random real subsets of the synthetic set's
/// size, with pooled standardization per repeat.
pub fn repeated_assessment<T: Scalar>(
    real_qvs: &[QualityVector<T>],
    synth_qvs: &[QualityVector<T>],
    repeats: usize,
    seed: u64,
) -> Result<TwoSampleResult> {
    if repeats < 1 {
        return Err(Error::param("repeats must be at least 1"));
    }
    let n = synth_qvs.len();
    if n < 2 {
        return Err(Error::Insufficient(format!("need at least 2 synthetic vectors, got {n}")));
    }
    if real_qvs.len() < n {
        return Err(Error::Insufficient(format!(
            "real set ({}) is smaller than synthetic set ({n})",
            real_qvs.len()
        )));
    }
    let real_all = FeatureMatrix::from_quality(real_qvs)?;
    let synth = FeatureMatrix::from_quality(synth_qvs)?;
    let per_repeat = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let rseed = derive_seed(seed, &["repeat", &r.to_string()]);
            let real = if real_qvs.len() == n {
                real_all.clone()
            } else {
                let mut idx = sample(&mut rng_from_seed(rseed), real_qvs.len(), n).into_vec();
                idx.sort_unstable();
                let rows: Vec<Vec<T>> = idx.iter().map(|&i| real_all.row(i).to_vec()).collect();
                FeatureMatrix::from_rows(&rows)?
            };
            let (zr, zs) = standardize_pooled(&real, &synth)?;
            let (combined, ra, sa) = one_nn_core(&zr, &zs)?;
            Ok(RepeatOutcome {
                repeat: r,
                seed: rseed,
                combined_accuracy: combined,
                real_accuracy: ra,
                synthetic_accuracy: sa,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TwoSampleResult::from_repeats(per_repeat, n, real_qvs.len(), seed)
}

/// Summary points of one feature's distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary<T> {
    pub feature: String,
    pub min: T,
    /// d10 through d90.
    pub deciles: [T; 9],
    pub median: T,
    pub mean: T,
    pub max: T,
}

impl<T: Scalar> FeatureSummary<T> {
    pub fn of(feature: &str, values: &[T]) -> Result<Self> {
        let s = SortedSample::from_slice(values)?;
        let mut deciles = [T::zero(); 9];
        for (k, d) in deciles.iter_mut().enumerate() {
            *d = s.quantile(count::<T>(k + 1) / lit(10.0))?;
        }
        Ok(Self {
            feature: feature.to_string(),
            min: s.min(),
            deciles,
            median: s.median(),
            mean: mean(values)?,
            max: s.max(),
        })
    }
}

/// Column names of the summary table, after the `feature` column.
pub const SUMMARY_COLUMNS: [&str; 12] = [
    "min", "d10", "d20", "d30", "d40", "d50", "d60", "d70", "d80", "d90", "median", "mean",
];

/// Per-feature min, deciles, median, mean and max over `qvs`.
pub fn distribution_summary<T: Scalar>(qvs: &[QualityVector<T>]) -> Result<Vec<FeatureSummary<T>>> {
    if qvs.is_empty() {
        return Err(Error::Empty("quality vectors"));
    }
    FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<T> = qvs.iter().map(|q| q.features()[j]).collect();
            FeatureSummary::of(name, &col)
        })
        .collect()
}

/// Largest absolute decile gap between two samples, as a fraction of the
/// reference sample's interquartile range.
pub fn decile_gap_over_iqr<T: Scalar>(values: &[T], reference: &[T]) -> Result<T> {
    let a = SortedSample::from_slice(values)?;
    let b = SortedSample::from_slice(reference)?;
    let iqr = b.quantile(lit(0.75))? - b.quantile(lit(0.25))?;
    if !(iqr > T::zero()) {
        return Err(Error::param("reference sample has zero interquartile range"));
    }
    let mut worst = T::zero();
    for k in 1..=9 {
        let p = count::<T>(k) / lit(10.0);
        worst = worst.max((a.quantile(p)? - b.quantile(p)?).abs());
    }
    Ok(worst / iqr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_rows(n: usize, d: usize, shift: f64, seed: u64) -> FeatureMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| shift + f64::standard_normal(&mut rng)).collect())
            .collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    fn qv_from(f: [f64; 7]) -> QualityVector<f64> {
        QualityVector {
            acc_h: f[0],
            acc_v: f[1],
            acc_c: f[2],
            prec_h: f[3],
            prec_v: f[4],
            prec_c: f[5],
            temporal_prec_ms: f[6],
            n_fixations_used: 1,
        }
    }

    #[test]
    fn separated_clusters_are_fully_separable() {
        let real = FeatureMatrix::from_rows(&vec![vec![0.0; 7]; 5]).unwrap();
        let synth = FeatureMatrix::from_rows(&vec![vec![10.0; 7]; 5]).unwrap();
        let r = one_nn_two_sample(&real, &synth, 0).unwrap();
        assert_eq!(r.combined_accuracy, 1.0);
        assert_eq!(r.real_accuracy, 1.0);
        assert_eq!(r.synthetic_accuracy, 1.0);
    }

    #[test]
    fn duplicated_sets_score_zero() {
        let real = gaussian_rows(30, 7, 0.0, 4);
        let r = one_nn_two_sample(&real, &real.clone(), 0).unwrap();
        assert_eq!(r.combined_accuracy, 0.0);
    }

    #[test]
    fn tie_break_prefers_lowest_pooled_index() {
        // every point is equidistant from all others, so each picks index 0 or 1
        let real = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        let synth = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        let r = one_nn_two_sample(&real, &synth, 0).unwrap();
        assert_eq!(r.real_accuracy, 1.0);
        assert_eq!(r.synthetic_accuracy, 0.0);
        assert_eq!(r.combined_accuracy, 0.5);
    }

    #[test]
    fn iid_samples_are_near_chance() {
        let mut inside = 0;
        for s in 0..5 {
            let a = gaussian_rows(200, 7, 0.0, 100 + s);
            let b = gaussian_rows(200, 7, 0.0, 200 + s);
            let (za, zb) = standardize_pooled(&a, &b).unwrap();
            let r = one_nn_two_sample(&za, &zb, s).unwrap();
            if (0.4..=0.6).contains(&r.combined_accuracy) {
                inside += 1;
            }
        }
        assert!(inside >= 4, "{inside} of 5 runs near chance");
    }

    #[test]
    fn unequal_sizes_are_rejected() {
        let a = gaussian_rows(5, 2, 0.0, 1);
        let b = gaussian_rows(4, 2, 0.0, 2);
        assert!(one_nn_two_sample(&a, &b, 0).is_err());
    }

    #[test]
    fn combined_is_mean_of_class_accuracies() {
        let a = gaussian_rows(40, 3, 0.0, 1);
        let b = gaussian_rows(40, 3, 0.7, 2);
        let r = one_nn_two_sample(&a, &b, 0).unwrap();
        assert!((r.combined_accuracy - 0.5 * (r.real_accuracy + r.synthetic_accuracy)).abs() < 1e-15);
    }

    #[test]
    fn standardizer_needs_two_rows() {
        let one = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(Standardizer::fit(&one).is_err());
    }

    #[test]
    fn identical_rows_standardize_to_zero() {
        let q = qv_from([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let (m, st) = feature_matrix(&[q, q], None).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
        assert_eq!(st.constant_columns.len(), 7);
    }

    #[test]
    fn pooled_standardization_centres_the_union() {
        let a = gaussian_rows(13, 4, 1.0, 5);
        let b = gaussian_rows(21, 4, -2.0, 6);
        let (za, zb) = standardize_pooled(&a, &b).unwrap();
        for j in 0..4 {
            let s: f64 = za.column(j).chain(zb.column(j)).sum();
            assert!(s.abs() / 34.0 < 1e-12);
        }
    }

    #[test]
    fn standardization_absorbs_affine_rescaling() {
        let a = gaussian_rows(10, 3, 0.0, 7);
        let b = gaussian_rows(10, 3, 0.5, 8);
        let scale = |m: &FeatureMatrix<f64>| FeatureMatrix {
            ncols: m.ncols,
            data: m.data.iter().enumerate().map(|(k, v)| (k % 3 + 2) as f64 * v + 5.0).collect(),
        };
        let (za, zb) = standardize_pooled(&a, &b).unwrap();
        let (sa, sb) = standardize_pooled(&scale(&a), &scale(&b)).unwrap();
        for (x, y) in za.data.iter().chain(&zb.data).zip(sa.data.iter().chain(&sb.data)) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_assessment_identity_subsample() {
        let mut rng = rng_from_seed(9);
        let qvs: Vec<_> = (0..20)
            .map(|_| qv_from(std::array::from_fn(|_| rng.random::<f64>())))
            .collect();
        let r = repeated_assessment(&qvs, &qvs, 5, 3).unwrap();
        assert_eq!(r.per_repeat.len(), 5);
        assert_eq!(r.combined.range, 0.0);
        assert_eq!(r.combined_accuracy, 0.0);
        assert_eq!(r, repeated_assessment(&qvs, &qvs, 5, 3).unwrap());
    }

    #[test]
    fn repeated_assessment_subsamples_larger_real_set() {
        let mut rng = rng_from_seed(10);
        let real: Vec<_> = (0..60)
            .map(|_| qv_from(std::array::from_fn(|_| rng.random::<f64>())))
            .collect();
        let synth: Vec<_> = (0..20)
            .map(|_| qv_from(std::array::from_fn(|_| 3.0 + rng.random::<f64>())))
            .collect();
        let r = repeated_assessment(&real, &synth, 5, 11).unwrap();
        assert_eq!(r.n_per_class, 20);
        assert_eq!(r.combined_accuracy, 1.0);
        assert!(repeated_assessment(&synth, &real, 5, 11).is_err());
        assert!(repeated_assessment(&real, &synth, 0, 11).is_err());
    }

    #[test]
    fn summary_of_one_to_ten() {
        let qvs: Vec<_> = (1..=10).map(|i| qv_from([i as f64; 7])).collect();
        let s = distribution_summary(&qvs).unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s[0].median, 5.5);
        assert_eq!(s[0].min, 1.0);
        assert_eq!(s[0].max, 10.0);
        // h = 9 p
        assert!((s[0].deciles[0] - 1.9).abs() < 1e-12);
        assert!((s[0].deciles[8] - 9.1).abs() < 1e-12);
        assert_eq!(s[0].mean, 5.5);
    }

    #[test]
    fn summary_of_constant_feature() {
        let qvs = vec![qv_from([2.0; 7]); 4];
        let s = &distribution_summary(&qvs).unwrap()[3];
        assert!(s.deciles.iter().all(|&d| d == 2.0));
        assert_eq!((s.min, s.median, s.mean, s.max), (2.0, 2.0, 2.0, 2.0));
    }

    #[test]
    fn decile_gap_is_zero_for_same_sample() {
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(decile_gap_over_iqr(&v, &v).unwrap(), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 2.45).collect();
        assert!((decile_gap_over_iqr(&shifted, &v).unwrap() - 0.1).abs() < 1e-12);
    }
}
