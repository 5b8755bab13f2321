//! Eye-tracking signal quality toolkit.
//!
//! * [`metrics`]: latency, fixation windows, spatial accuracy and precision,
//!   temporal precision.
//! * [`degrade`]: benchmark and modified degradation models that turn a
//!   high-quality recording into one resembling a lower-quality device.
//! * [`calibrate`]: noise variance to precision sweep and its inverse.
//! * [`assess`]: distribution summaries and the 1-NN two-sample test.
//! * [`oracle`]: generator of recordings with known quality parameters.
//! * [`io`]: CSV and JSON formats.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assess;
pub mod calibrate;
pub mod degrade;
pub mod error;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use types::{
    validate_recording, CalibrationCurve, CalibrationPoint, DegradationPlan, EccentricityWeighting, FixationWindow,
    GazeRecording, NoiseOrder, QualityVector, RecordingParts, FEATURE_NAMES,
};

pub type Recording = GazeRecording<f64>;
pub type Parts = RecordingParts<f64>;
pub type Quality = QualityVector<f64>;
pub type Plan = DegradationPlan<f64>;
pub type Curve = CalibrationCurve<f64>;
pub type Window = FixationWindow<f64>;
pub type Oracle = oracle::OracleSpec<f64>;
pub type Corpus = oracle::CorpusSpec<f64>;
pub type Truth = oracle::GroundTruth<f64>;
pub type Metrics = metrics::MetricsConfig<f64>;
pub type Pipeline = degrade::PipelineConfig<f64>;
