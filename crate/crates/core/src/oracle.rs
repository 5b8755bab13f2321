//! Random-saccade recording generator with known quality parameters.
//!
//! Targets jump between uniform random positions and stay put for a dwell
//! period. Gaze follows the target after a fixed latency, with a constant
//! per-fixation bias and white noise added. Every drawn value is returned in
//! [`GroundTruth`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degrade::jitter_timestamps;
use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};
use crate::seed::{derive_seed, rng_from_seed};
use crate::types::{validate_recording, GazeRecording, RecordingParts};

/// MAD of a standard normal variable, Φ⁻¹(0.75).
pub const GAUSSIAN_MAD: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DwellSpec<T> {
    Fixed { ms: T },
    Uniform { min_ms: T, max_ms: T },
}

impl<T: Scalar> DwellSpec<T> {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            DwellSpec::Fixed { ms } => ms > T::zero(),
            DwellSpec::Uniform { min_ms, max_ms } => min_ms > T::zero() && max_ms >= min_ms,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid dwell {self:?}")))
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            DwellSpec::Fixed { ms } => ms,
            DwellSpec::Uniform { min_ms, max_ms } => min_ms + (max_ms - min_ms) * T::unit_uniform(rng),
        }
    }
}

/// Parameters of one generated recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec<T> {
    pub recording_id: String,
    pub n_targets: usize,
    pub dwell_ms: DwellSpec<T>,
    /// Half-widths of the target area, (x, y) dva.
    pub target_extent_dva: (T, T),
    pub rate_hz: T,
    pub latency_ms: T,
    /// Std of the per-fixation bias, each channel.
    pub bias_sigma_dva: T,
    /// Constant bias added on top of the random one.
    pub bias_offset_dva: (T, T),
    pub noise_sigma_dva: T,
    /// Std of the per-stamp timestamp perturbation.
    pub isi_jitter_ms: T,
    pub seed: u64,
}

impl<T: Scalar> OracleSpec<T> {
    /// Noise-free 1000 Hz spec with 10 one-second dwells.
    pub fn new(recording_id: impl Into<String>, seed: u64) -> Self {
        Self {
            recording_id: recording_id.into(),
            n_targets: 10,
            dwell_ms: DwellSpec::Fixed { ms: lit(1000.0) },
            target_extent_dva: (lit(15.0), lit(10.0)),
            rate_hz: lit(1000.0),
            latency_ms: T::zero(),
            bias_sigma_dva: T::zero(),
            bias_offset_dva: (T::zero(), T::zero()),
            noise_sigma_dva: T::zero(),
            isi_jitter_ms: T::zero(),
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_targets == 0 {
            return Err(Error::param("n_targets must be at least 1"));
        }
        self.dwell_ms.check()?;
        if !(self.rate_hz > T::zero()) || !self.rate_hz.is_finite() {
            return Err(Error::InvalidRate(self.rate_hz.to_f64().unwrap_or(f64::NAN)));
        }
        let non_negative = [
            ("latency_ms", self.latency_ms),
            ("bias_sigma_dva", self.bias_sigma_dva),
            ("noise_sigma_dva", self.noise_sigma_dva),
            ("isi_jitter_ms", self.isi_jitter_ms),
            ("target_extent_dva.x", self.target_extent_dva.0),
            ("target_extent_dva.y", self.target_extent_dva.1),
        ];
        for (name, v) in non_negative {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Everything drawn while generating one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth<T> {
    pub spec: OracleSpec<T>,
    pub targets: Vec<(T, T)>,
    pub onsets_ms: Vec<T>,
    pub dwells_ms: Vec<T>,
    /// Total bias per fixation, offset included.
    pub biases: Vec<(T, T)>,
    pub duration_ms: T,
}

impl<T: Scalar> GroundTruth<T> {
    /// Expected horizontal (or vertical) precision: MAD of the white noise.
    pub fn expected_prec_h(&self) -> T {
        lit::<T>(GAUSSIAN_MAD) * self.spec.noise_sigma_dva
    }

    /// Mean absolute bias per channel.
    pub fn mean_abs_bias(&self) -> (T, T) {
        let n = count::<T>(self.biases.len());
        let h = self.biases.iter().map(|b| b.0.abs()).sum::<T>() / n;
        let v = self.biases.iter().map(|b| b.1.abs()).sum::<T>() / n;
        (h, v)
    }
}

fn dwell_index<T: Scalar>(onsets: &[T], t: T) -> usize {
    onsets.partition_point(|&o| o <= t).saturating_sub(1)
}

/// Generates one recording. Draw order: target positions, dwells, biases,
/// per-sample noise (x then y), timestamp jitter.
pub fn generate_recording<T: Scalar>(spec: &OracleSpec<T>) -> Result<(GazeRecording<T>, GroundTruth<T>)> {
    spec.check()?;
    let mut rng = rng_from_seed(spec.seed);
    let two = lit::<T>(2.0);
    let uniform_sym = |rng: &mut rand_chacha::ChaCha8Rng, half: T| half * (two * T::unit_uniform(rng) - T::one());

    let targets: Vec<(T, T)> = (0..spec.n_targets)
        .map(|_| {
            let x = uniform_sym(&mut rng, spec.target_extent_dva.0);
            let y = uniform_sym(&mut rng, spec.target_extent_dva.1);
            (x, y)
        })
        .collect();
    let dwells_ms: Vec<T> = (0..spec.n_targets).map(|_| spec.dwell_ms.draw(&mut rng)).collect();
    let biases: Vec<(T, T)> = (0..spec.n_targets)
        .map(|_| {
            let bx = spec.bias_offset_dva.0 + spec.bias_sigma_dva * T::standard_normal(&mut rng);
            let by = spec.bias_offset_dva.1 + spec.bias_sigma_dva * T::standard_normal(&mut rng);
            (bx, by)
        })
        .collect();
    let mut onsets_ms = Vec::with_capacity(spec.n_targets);
    let mut acc = T::zero();
    for &d in &dwells_ms {
        onsets_ms.push(acc);
        acc += d;
    }
    let duration_ms = acc + spec.latency_ms;

    let period = lit::<T>(1000.0) / spec.rate_hz;
    let n = (duration_ms / period).floor().to_usize().unwrap_or(0);
    if n < 3 {
        return Err(Error::TooShort { found: n, needed: 3 });
    }
    let noise: Vec<(T, T)> = (0..n)
        .map(|_| {
            let nx = spec.noise_sigma_dva * T::standard_normal(&mut rng);
            let ny = spec.noise_sigma_dva * T::standard_normal(&mut rng);
            (nx, ny)
        })
        .collect();
    let grid: Vec<T> = (0..n).map(|i| count::<T>(i) * period).collect();
    let timestamps_ms = if spec.isi_jitter_ms > T::zero() {
        jitter_timestamps(&grid, spec.isi_jitter_ms, &mut rng, false)?
    } else {
        grid
    };

    let mut gaze_x = Vec::with_capacity(n);
    let mut gaze_y = Vec::with_capacity(n);
    let mut tgt_x = Vec::with_capacity(n);
    let mut tgt_y = Vec::with_capacity(n);
    for (&t, &(nx, ny)) in timestamps_ms.iter().zip(&noise) {
        let (tx, ty) = targets[dwell_index(&onsets_ms, t)];
        tgt_x.push(tx);
        tgt_y.push(ty);
        let k = dwell_index(&onsets_ms, t - spec.latency_ms);
        let (gx, gy) = targets[k];
        let (bx, by) = biases[k];
        gaze_x.push(gx + bx + nx);
        gaze_y.push(gy + by + ny);
    }

    let rec = validate_recording(RecordingParts {
        recording_id: spec.recording_id.clone(),
        nominal_rate_hz: spec.rate_hz,
        timestamps_ms,
        gaze_x,
        gaze_y,
        tgt_x,
        tgt_y,
        missing: None,
    })?;
    Ok((
        rec,
        GroundTruth {
            spec: spec.clone(),
            targets,
            onsets_ms,
            dwells_ms,
            biases,
            duration_ms,
        },
    ))
}

/// Distribution of one per-recording parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum ParamDist<T> {
    Fixed { value: T },
    Uniform { min: T, max: T },
    /// exp(N(ln median, sigma_log²)).
    LogNormal { median: T, sigma_log: T },
}

impl<T: Scalar> ParamDist<T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            ParamDist::Fixed { value } => value,
            ParamDist::Uniform { min, max } => min + (max - min) * T::unit_uniform(rng),
            ParamDist::LogNormal { median, sigma_log } => median * (sigma_log * T::standard_normal(rng)).exp(),
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        let ok = match *self {
            ParamDist::Fixed { value } => value >= T::zero(),
            ParamDist::Uniform { min, max } => min >= T::zero() && max >= min,
            ParamDist::LogNormal { median, sigma_log } => median > T::zero() && sigma_log >= T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid distribution for {name}: {self:?}")))
        }
    }
}

/// Corpus-level generator settings; per-recording values are drawn from
/// the `ParamDist` fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec<T> {
    pub id_prefix: String,
    pub n_targets: usize,
    pub dwell_ms: DwellSpec<T>,
    pub target_extent_dva: (T, T),
    pub rate_hz: T,
    pub latency_ms: ParamDist<T>,
    pub bias_sigma_dva: ParamDist<T>,
    pub bias_offset_dva: (T, T),
    pub noise_sigma_dva: ParamDist<T>,
    pub isi_jitter_ms: ParamDist<T>,
}

impl<T: Scalar> CorpusSpec<T> {
    /// 1000 Hz, fixed 1 s dwells, low noise, no jitter.
    pub fn eyelink_like() -> Self {
        Self {
            id_prefix: "el".into(),
            n_targets: 30,
            dwell_ms: DwellSpec::Fixed { ms: lit(1000.0) },
            target_extent_dva: (lit(15.0), lit(9.0)),
            rate_hz: lit(1000.0),
            latency_ms: ParamDist::Uniform {
                min: lit(150.0),
                max: lit(250.0),
            },
            bias_sigma_dva: ParamDist::Uniform {
                min: lit(0.1),
                max: lit(0.3),
            },
            bias_offset_dva: (T::zero(), T::zero()),
            noise_sigma_dva: ParamDist::Uniform {
                min: lit(0.02),
                max: lit(0.05),
            },
            isi_jitter_ms: ParamDist::Fixed { value: T::zero() },
        }
    }

    /// 250 Hz, 1.0-1.5 s dwells, higher noise, timestamp jitter.
    pub fn vr_like() -> Self {
        Self {
            id_prefix: "vr".into(),
            n_targets: 30,
            dwell_ms: DwellSpec::Uniform {
                min_ms: lit(1000.0),
                max_ms: lit(1500.0),
            },
            target_extent_dva: (lit(10.0), lit(10.0)),
            rate_hz: lit(250.0),
            latency_ms: ParamDist::Uniform {
                min: lit(150.0),
                max: lit(250.0),
            },
            bias_sigma_dva: ParamDist::Uniform {
                min: lit(0.3),
                max: lit(0.9),
            },
            bias_offset_dva: (T::zero(), T::zero()),
            noise_sigma_dva: ParamDist::Uniform {
                min: lit(0.08),
                max: lit(0.2),
            },
            isi_jitter_ms: ParamDist::Uniform {
                min: lit(0.3),
                max: lit(0.7),
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "eyelink-like" => Ok(Self::eyelink_like()),
            "vr-like" => Ok(Self::vr_like()),
            other => Err(Error::param(format!("unknown preset `{other}`"))),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.latency_ms.check("latency_ms")?;
        self.bias_sigma_dva.check("bias_sigma_dva")?;
        self.noise_sigma_dva.check("noise_sigma_dva")?;
        self.isi_jitter_ms.check("isi_jitter_ms")
    }

    /// Draws the parameters of recording `index`.
    pub fn recording_spec(&self, index: usize, seed: u64) -> OracleSpec<T> {
        let recording_id = format!("{}{index:04}", self.id_prefix);
        let mut rng = rng_from_seed(derive_seed(seed, &[&recording_id, "params"]));
        let latency_ms = self.latency_ms.sample(&mut rng);
        let bias_sigma_dva = self.bias_sigma_dva.sample(&mut rng);
        let noise_sigma_dva = self.noise_sigma_dva.sample(&mut rng);
        let isi_jitter_ms = self.isi_jitter_ms.sample(&mut rng);
        OracleSpec {
            seed: derive_seed(seed, &[&recording_id, "generate"]),
            recording_id,
            n_targets: self.n_targets,
            dwell_ms: self.dwell_ms,
            target_extent_dva: self.target_extent_dva,
            rate_hz: self.rate_hz,
            latency_ms,
            bias_sigma_dva,
            bias_offset_dva: self.bias_offset_dva,
            noise_sigma_dva,
            isi_jitter_ms,
        }
    }
}

/// Generates `n` recordings in parallel; output order is by index.
pub fn generate_corpus<T: Scalar>(
    spec: &CorpusSpec<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<(GazeRecording<T>, GroundTruth<T>)>> {
    if n == 0 {
        return Err(Error::param("corpus size must be at least 1"));
    }
    spec.check()?;
    (0..n)
        .into_par_iter()
        .map(|i| generate_recording(&spec.recording_spec(i, seed)))
        .collect()
}
