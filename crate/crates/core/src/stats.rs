//! Order statistics and small descriptive helpers.
//!
//! Quantiles use linear interpolation between closest ranks: for a sorted
//! sample `s` of length `n`, `quantile(p)` sits at fractional index
//! `(n - 1) * p`. [`SortedSample::percentile_rank`] is its inverse on the
//! sample's support. Every quantile reported anywhere in the crate goes
//! through this one implementation.

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};

/// Name of the quantile convention, emitted in run metadata.
pub const QUANTILE_CONVENTION: &str = "linear interpolation between closest ranks, h = (n-1)p";

/// A non-empty sample sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample<T> {
    values: Vec<T>,
}

impl<T: Scalar> SortedSample<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::param(format!("NaN in sample at index {i}")));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
        Ok(Self { values })
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::param(format!("quantile level {p} outside [0, 1]")));
        }
        let n = self.values.len();
        if n == 1 {
            return Ok(self.values[0]);
        }
        let h = count::<T>(n - 1) * p;
        let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
        if lo == n - 1 {
            return Ok(self.values[n - 1]);
        }
        let frac = h - count::<T>(lo);
        let (a, b) = (self.values[lo], self.values[lo + 1]);
        Ok(a + frac * (b - a))
    }

    pub fn median(&self) -> T {
        self.quantile(lit(0.5)).expect("0.5 is a valid level")
    }

    /// Fractional rank of `value` in `[0, 1]`; values outside the sample
    /// range clamp to 0 or 1. A run of tied values maps to its midpoint.
    pub fn percentile_rank(&self, value: T) -> T {
        let s = &self.values;
        let n = s.len();
        if value < s[0] {
            return T::zero();
        }
        if value > s[n - 1] {
            return T::one();
        }
        if n == 1 {
            return lit(0.5);
        }
        let denom = count::<T>(n - 1);
        // first index with s[i] >= value, and first with s[i] > value
        let lo = s.partition_point(|&x| x < value);
        let hi = s.partition_point(|&x| x <= value);
        if hi > lo {
            let mid = (count::<T>(lo) + count::<T>(hi - 1)) / lit(2.0);
            return mid / denom;
        }
        // s[lo - 1] < value < s[lo]
        let k = lo - 1;
        let frac = (value - s[k]) / (s[k + 1] - s[k]);
        (count::<T>(k) + frac) / denom
    }
}

pub fn quantile<T: Scalar>(sample: &[T], p: T) -> Result<T> {
    SortedSample::from_slice(sample)?.quantile(p)
}

pub fn percentile_rank<T: Scalar>(value: T, sample: &[T]) -> Result<T> {
    Ok(SortedSample::from_slice(sample)?.percentile_rank(value))
}

pub fn median<T: Scalar>(sample: &[T]) -> Result<T> {
    Ok(SortedSample::from_slice(sample)?.median())
}

pub fn mean<T: Scalar>(sample: &[T]) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    Ok(sample.iter().copied().sum::<T>() / count(sample.len()))
}

/// Population standard deviation.
pub fn population_std<T: Scalar>(sample: &[T]) -> Result<T> {
    let m = mean(sample)?;
    let var = sample.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / count(sample.len());
    Ok(var.sqrt())
}

/// Median absolute deviation about the median (unscaled).
pub fn mad<T: Scalar>(sample: &[T]) -> Result<T> {
    let m = median(sample)?;
    let dev: Vec<T> = sample.iter().map(|&x| (x - m).abs()).collect();
    median(&dev)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Largest absolute residual over the fitted points.
    pub max_residual: T,
}

impl<T: Scalar> LinearFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.slope * x + self.intercept
    }
}

pub fn linear_fit<T: Scalar>(xs: &[T], ys: &[T]) -> Result<LinearFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            channel: "y",
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Insufficient("linear fit needs at least 2 points".into()));
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxx = xs.iter().map(|&x| (x - mx) * (x - mx)).sum::<T>();
    if sxx <= T::zero() {
        return Err(Error::Insufficient("linear fit needs distinct x values".into()));
    }
    let sxy = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - mx) * (y - my))
        .sum::<T>();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - (slope * x + intercept)).abs())
        .fold(T::zero(), T::max);
    Ok(LinearFit {
        slope,
        intercept,
        max_residual,
    })
}
