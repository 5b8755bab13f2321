//! Command implementations for the `gazedeg` binary.
//!
//! Every command writes its outputs atomically and records a run manifest
//! (arguments, master seed, input hashes, tool version) next to them. The
//! manifest carries no timestamps, so reruns with the same inputs and seed
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gazedeg::assess::{distribution_summary, repeated_assessment, TwoSampleResult};
use gazedeg::calibrate::{parse_grid, sweep_sigma, SweepConfig};
use gazedeg::degrade::{
    benchmark_sigma0_sq, degrade_benchmark, degrade_modified, InverseMethod, PercentileMatcher, PlanDiagnostics,
    PlanOptions,
};
use gazedeg::io::{
    ground_truth_to_csv, read_entry, read_json, read_quality_table, summaries_to_csv, write_atomic, write_json,
    write_quality_table, write_recording, CorpusManifest, FormatTag, ManifestEntry,
};
use gazedeg::metrics::analyze_recording;
use gazedeg::oracle::{generate_corpus, CorpusSpec};
use gazedeg::seed::{content_hash, derive_seed};
use gazedeg::{Curve, Metrics, NoiseOrder, Pipeline, Plan, Quality, Recording};

#[derive(Debug, Parser, Serialize)]
#[command(name = "gazedeg", version, about = "Eye-tracking signal quality metrics and degradation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Compute a quality table for every recording in a manifest.
    Metrics(MetricsArgs),
    /// Sweep the benchmark noise variance and fit the precision curve.
    Calibrate(CalibrateArgs),
    /// Degrade a corpus with the benchmark or modified model.
    Degrade(DegradeArgs),
    /// 1-NN two-sample test between a real and a synthetic quality table.
    Assess(AssessArgs),
    /// Generate an oracle corpus.
    Synth(SynthArgs),
    /// Per-feature distribution summaries of quality tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Baseline,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseOrderArg {
    Pre,
    Post,
}

impl From<NoiseOrderArg> for NoiseOrder {
    fn from(v: NoiseOrderArg) -> Self {
        match v {
            NoiseOrderArg::Pre => NoiseOrder::Pre,
            NoiseOrderArg::Post => NoiseOrder::Post,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseArg {
    Interpolated,
    Linear,
}

impl From<InverseArg> for InverseMethod {
    fn from(v: InverseArg) -> Self {
        match v {
            InverseArg::Interpolated => InverseMethod::Interpolated,
            InverseArg::Linear => InverseMethod::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    EyelinkLike,
    VrLike,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Quality table CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Skip unreadable or unusable recordings instead of failing.
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub rate_hz: f64,
    /// Noise variance grid, `start:stop:step` (dva^2).
    #[arg(long, default_value = "0:0.4:0.025")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseOrderArg::Pre)]
    pub noise_order: NoiseOrderArg,
    #[arg(long)]
    pub skip_bad: bool,
    /// Calibration JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DegradeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub rate_hz: f64,
    /// Corpus-wide noise variance for the baseline model.
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Quality table of the target device.
    #[arg(long)]
    pub target_metrics: Option<PathBuf>,
    /// Calibration JSON from `calibrate`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseOrderArg::Pre)]
    pub noise_order: NoiseOrderArg,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub jitter_correction: Switch,
    /// Calibration inverse used to turn a precision into a noise variance.
    #[arg(long, value_enum, default_value_t = InverseArg::Interpolated)]
    pub inverse: InverseArg,
    #[arg(long)]
    pub skip_bad: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AssessArgs {
    /// Quality table of the real (target device) corpus.
    #[arg(long)]
    pub real: PathBuf,
    /// Quality table of the synthetic corpus.
    #[arg(long)]
    pub synth: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Assessment report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<Preset>,
    /// JSON corpus spec, as an alternative to a preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Quality tables; each is labelled by its file stem.
    #[arg(required = true)]
    pub tables: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Contents of a calibration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub target_rate_hz: f64,
    pub noise_order: NoiseOrder,
    pub seed: u64,
    pub recordings_used: Vec<usize>,
    pub warnings: Vec<String>,
    pub curve: Curve,
}

/// Per-recording plan file written by `degrade`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub recording_id: String,
    pub model: String,
    pub plan: Plan,
    pub diagnostics: Option<PlanDiagnostics<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct InputRecord {
    path: PathBuf,
    sha256: String,
}

/// Metric conventions in effect for a run.
#[derive(Debug, Serialize)]
struct Conventions {
    quartiles: &'static str,
    accuracy_aggregate: &'static str,
    precision_aggregate: &'static str,
    metrics: Metrics,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            quartiles: "linear interpolation between order statistics",
            accuracy_aggregate: "mean over fixations",
            precision_aggregate: "median over fixations",
            metrics: Metrics::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    conventions: Conventions,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

fn hash_inputs(paths: &[&Path]) -> Result<Vec<InputRecord>> {
    paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(InputRecord {
                path: p.to_path_buf(),
                sha256: content_hash(&bytes),
            })
        })
        .collect()
}

fn write_run_manifest(path: &Path, command: &Command, inputs: Vec<InputRecord>, outputs: Vec<String>) -> Result<()> {
    let run = RunManifest {
        tool: "gazedeg",
        version: env!("CARGO_PKG_VERSION"),
        command,
        conventions: Conventions::default(),
        inputs,
        outputs,
    };
    write_json(&run, path)?;
    Ok(())
}

/// `quality.csv` → `quality.csv.run.json`.
fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn manifest_inputs(manifest: &Path, m: &CorpusManifest) -> Result<Vec<InputRecord>> {
    let mut paths: Vec<&Path> = vec![manifest];
    paths.extend(m.entries.iter().map(|e| e.path.as_path()));
    hash_inputs(&paths)
}

/// Reads every manifest entry. With `skip_bad`, unreadable files are logged
/// and left out; otherwise the first failure is returned.
pub fn load_corpus(manifest: &CorpusManifest, skip_bad: bool) -> Result<Vec<Recording>> {
    if manifest.is_empty() {
        bail!("manifest is empty");
    }
    let loaded: Vec<_> = manifest.entries.par_iter().map(read_entry::<f64>).collect();
    let mut out = Vec::with_capacity(loaded.len());
    for (entry, r) in manifest.entries.iter().zip(loaded) {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) if skip_bad => log::warn!("skipping `{}`: {e}", entry.recording_id),
            Err(e) => return Err(e).with_context(|| format!("reading `{}`", entry.path.display())),
        }
    }
    if out.is_empty() {
        bail!("no readable recordings");
    }
    Ok(out)
}

/// Quality vectors for `recs`, dropping (with `skip_bad`) or failing on
/// recordings without usable fixations.
pub fn corpus_metrics(recs: &[Recording], cfg: &Metrics, skip_bad: bool) -> Result<Vec<(String, Quality)>> {
    let results: Vec<_> = recs.par_iter().map(|r| analyze_recording(r, cfg)).collect();
    let mut out = Vec::with_capacity(recs.len());
    for (rec, r) in recs.iter().zip(results) {
        match r {
            Ok(a) => out.push((rec.recording_id().to_string(), a.quality)),
            Err(e) if skip_bad => log::warn!("skipping `{}`: {e}", rec.recording_id()),
            Err(e) => return Err(e).with_context(|| format!("metrics for `{}`", rec.recording_id())),
        }
    }
    if out.is_empty() {
        bail!("no recording produced metrics");
    }
    Ok(out)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Metrics(a) => cmd_metrics(a, &cli.command),
        Command::Calibrate(a) => cmd_calibrate(a, &cli.command),
        Command::Degrade(a) => cmd_degrade(a, &cli.command),
        Command::Assess(a) => cmd_assess(a, &cli.command),
        Command::Synth(a) => cmd_synth(a, &cli.command),
        Command::Report(a) => cmd_report(a, &cli.command),
    }
}

/// Parses and runs one command line, as the binary does.
pub fn run_args<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(&cli)
}

fn cmd_metrics(a: &MetricsArgs, command: &Command) -> Result<()> {
    let manifest = CorpusManifest::read(&a.manifest)?;
    let recs = load_corpus(&manifest, a.skip_bad)?;
    let rows = corpus_metrics(&recs, &Metrics::default(), a.skip_bad)?;
    write_quality_table(&rows, &a.out)?;
    write_run_manifest(
        &sidecar(&a.out),
        command,
        manifest_inputs(&a.manifest, &manifest)?,
        vec![a.out.display().to_string()],
    )?;
    log::info!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs, command: &Command) -> Result<()> {
    let manifest = CorpusManifest::read(&a.manifest)?;
    let recs = load_corpus(&manifest, a.skip_bad)?;
    let grid: Vec<f64> = parse_grid(&a.grid)?;
    let cfg = SweepConfig {
        pipeline: Pipeline::default(),
        noise_order: a.noise_order.into(),
    };
    let sweep = sweep_sigma(&recs, &grid, a.rate_hz, a.seed, &cfg)?;
    let c = &sweep.curve;
    println!(
        "MAD_h = {:.6} * sigma0_sq + {:.6}  (max residual {:.6}, {} points)",
        c.slope,
        c.intercept,
        c.max_residual,
        c.samples.len()
    );
    for p in &c.samples {
        println!("  sigma0_sq {:>8.4}  MAD_h {:.6}", p.sigma0_sq, p.mad_h);
    }
    let file = CalibrationFile {
        target_rate_hz: a.rate_hz,
        noise_order: cfg.noise_order,
        seed: a.seed,
        recordings_used: sweep.recordings_used,
        warnings: sweep.warnings,
        curve: sweep.curve,
    };
    write_json(&file, &a.out)?;
    write_run_manifest(
        &sidecar(&a.out),
        command,
        manifest_inputs(&a.manifest, &manifest)?,
        vec![a.out.display().to_string()],
    )?;
    Ok(())
}

fn read_calibration(path: &Path, rate_hz: f64) -> Result<CalibrationFile> {
    let file: CalibrationFile =
        read_json(path).with_context(|| format!("reading calibration {}", path.display()))?;
    if (file.target_rate_hz - rate_hz).abs() > 1e-9 {
        log::warn!(
            "calibration was fitted at {} Hz but degrading to {} Hz",
            file.target_rate_hz,
            rate_hz
        );
    }
    Ok(file)
}

fn cmd_degrade(a: &DegradeArgs, command: &Command) -> Result<()> {
    let manifest = CorpusManifest::read(&a.manifest)?;
    let mut input_paths: Vec<&Path> = vec![&a.manifest];
    input_paths.extend(manifest.entries.iter().map(|e| e.path.as_path()));
    if let Some(p) = &a.target_metrics {
        input_paths.push(p);
    }
    if let Some(p) = &a.calibration {
        input_paths.push(p);
    }
    let inputs = hash_inputs(&input_paths)?;

    let opts = PlanOptions {
        inverse: a.inverse.into(),
        noise_order: a.noise_order.into(),
        jitter_correction: a.jitter_correction == Switch::On,
    };
    let pipeline = Pipeline::default();
    let model_name = match a.model {
        Model::Baseline => "baseline",
        Model::Modified => "modified",
    };

    let recs = load_corpus(&manifest, a.skip_bad)?;
    let target = a
        .target_metrics
        .as_deref()
        .map(read_quality_table::<f64>)
        .transpose()?
        .map(|rows| rows.into_iter().map(|(_, q)| q).collect::<Vec<_>>());
    let calib = a.calibration.as_deref().map(|p| read_calibration(p, a.rate_hz)).transpose()?;

    let records: Vec<(Recording, PlanRecord)> = match a.model {
        Model::Baseline => {
            let sigma0_sq = match (a.sigma0_sq, &target, &calib) {
                (Some(s), _, _) => s,
                (None, Some(t), Some(c)) => {
                    let inv = benchmark_sigma0_sq(t, &c.curve, opts.inverse)?;
                    if let Some(side) = inv.clamped {
                        log::warn!("benchmark noise variance clamped ({side})");
                    }
                    inv.sigma0_sq
                }
                _ => bail!("baseline model needs --sigma0-sq, or --target-metrics with --calibration"),
            };
            log::info!("baseline sigma0_sq = {sigma0_sq}");
            let out: Vec<Result<_>> = recs
                .par_iter()
                .map(|rec| {
                    let mut plan = Plan::benchmark(
                        a.rate_hz,
                        sigma0_sq,
                        derive_seed(a.seed, &[rec.recording_id(), "degrade"]),
                    );
                    plan.noise_order = opts.noise_order;
                    let degraded = degrade_benchmark(rec, &plan, &pipeline)?;
                    Ok((
                        degraded,
                        PlanRecord {
                            recording_id: rec.recording_id().to_string(),
                            model: model_name.into(),
                            plan,
                            diagnostics: None,
                            warnings: Vec::new(),
                        },
                    ))
                })
                .collect();
            collect_skipping(&recs, out, a.skip_bad)?
        }
        Model::Modified => {
            let target = target.ok_or_else(|| anyhow!("modified model needs --target-metrics"))?;
            let calib = calib.ok_or_else(|| anyhow!("modified model needs --calibration"))?;
            ensure!(a.sigma0_sq.is_none(), "--sigma0-sq applies to the baseline model only");

            // each source recording's own metrics and its metrics after a noise-free pass
            let paired: Vec<Result<(Quality, Quality)>> = recs
                .par_iter()
                .map(|rec| {
                    let src = analyze_recording(rec, &pipeline.metrics)?.quality;
                    let clean = degrade_benchmark(rec, &Plan::benchmark(a.rate_hz, 0.0, 0), &pipeline)?;
                    let post = analyze_recording(&clean, &pipeline.metrics)?.quality;
                    Ok((src, post))
                })
                .collect();
            let mut usable = Vec::new();
            for (rec, r) in recs.iter().zip(paired) {
                match r {
                    Ok(p) => usable.push((rec, p)),
                    Err(e) if a.skip_bad => log::warn!("skipping `{}`: {e}", rec.recording_id()),
                    Err(e) => return Err(e).with_context(|| format!("source metrics for `{}`", rec.recording_id())),
                }
            }
            ensure!(!usable.is_empty(), "no source recording produced metrics");
            let source_q: Vec<Quality> = usable.iter().map(|(_, (s, _))| *s).collect();
            let matcher = PercentileMatcher::new(&source_q, &target)?;
            let out: Vec<Result<_>> = usable
                .par_iter()
                .map(|(rec, (src, post))| {
                    let seed = derive_seed(a.seed, &[rec.recording_id(), "degrade"]);
                    let planned = matcher.plan(src, post, &calib.curve, a.rate_hz, seed, &opts)?;
                    for w in &planned.warnings {
                        log::warn!("`{}`: {w}", rec.recording_id());
                    }
                    let degraded = degrade_modified(rec, &planned.plan, &pipeline)?;
                    Ok((
                        degraded,
                        PlanRecord {
                            recording_id: rec.recording_id().to_string(),
                            model: model_name.into(),
                            plan: planned.plan,
                            diagnostics: Some(planned.diagnostics),
                            warnings: planned.warnings,
                        },
                    ))
                })
                .collect();
            let used: Vec<Recording> = usable.iter().map(|(r, _)| (*r).clone()).collect();
            collect_skipping(&used, out, a.skip_bad)?
        }
    };

    let plans_dir = a.out.join("plans");
    fs::create_dir_all(&plans_dir).with_context(|| format!("creating {}", plans_dir.display()))?;
    records.par_iter().try_for_each(|(rec, plan)| -> Result<()> {
        write_recording(rec, &a.out.join(format!("{}.csv", rec.recording_id())))?;
        write_json(plan, &plans_dir.join(format!("{}.json", rec.recording_id())))?;
        Ok(())
    })?;
    let entries = records
        .iter()
        .map(|(rec, _)| ManifestEntry {
            recording_id: rec.recording_id().to_string(),
            path: a.out.join(format!("{}.csv", rec.recording_id())),
            format_tag: FormatTag::Canonical,
            rate_hz: a.rate_hz,
        })
        .collect();
    CorpusManifest::new(entries)?.write(&a.out.join("manifest.csv"), &a.out)?;
    let mut outputs: Vec<String> = records
        .iter()
        .flat_map(|(rec, _)| {
            let id = rec.recording_id();
            [format!("{id}.csv"), format!("plans/{id}.json")]
        })
        .collect();
    outputs.push("manifest.csv".into());
    write_run_manifest(&a.out.join("run.json"), command, inputs, outputs)?;
    log::info!("degraded {} recordings into {}", records.len(), a.out.display());
    Ok(())
}

fn collect_skipping<V>(recs: &[Recording], results: Vec<Result<V>>, skip_bad: bool) -> Result<Vec<V>> {
    let mut out = Vec::with_capacity(results.len());
    for (rec, r) in recs.iter().zip(results) {
        match r {
            Ok(v) => out.push(v),
            Err(e) if skip_bad => log::warn!("skipping `{}`: {e}", rec.recording_id()),
            Err(e) => return Err(e).with_context(|| format!("degrading `{}`", rec.recording_id())),
        }
    }
    ensure!(!out.is_empty(), "no recording could be degraded");
    Ok(out)
}

/// Assessment report written by `assess`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub real_table: PathBuf,
    pub synth_table: PathBuf,
    pub repeats: usize,
    pub result: TwoSampleResult,
}

fn cmd_assess(a: &AssessArgs, command: &Command) -> Result<()> {
    let real: Vec<Quality> = read_quality_table(&a.real)?.into_iter().map(|(_, q)| q).collect();
    let synth: Vec<Quality> = read_quality_table(&a.synth)?.into_iter().map(|(_, q)| q).collect();
    let result = repeated_assessment(&real, &synth, a.repeats, a.seed)?;
    let pct = |v: f64| 100.0 * v;
    println!(
        "combined {:.1} ± {:.1}%   real {:.1} ± {:.1}%   synthetic {:.1} ± {:.1}%   (n = {} per class, {} repeats)",
        pct(result.combined.median),
        pct(result.combined.range) / 2.0,
        pct(result.real.median),
        pct(result.real.range) / 2.0,
        pct(result.synthetic.median),
        pct(result.synthetic.range) / 2.0,
        result.n_per_class,
        a.repeats
    );
    let report = AssessmentReport {
        real_table: a.real.clone(),
        synth_table: a.synth.clone(),
        repeats: a.repeats,
        result,
    };
    write_json(&report, &a.out)?;
    write_run_manifest(
        &sidecar(&a.out),
        command,
        hash_inputs(&[&a.real, &a.synth])?,
        vec![a.out.display().to_string()],
    )?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs, command: &Command) -> Result<()> {
    let (spec, inputs) = match (&a.preset, &a.spec) {
        (Some(Preset::EyelinkLike), None) => (CorpusSpec::eyelink_like(), Vec::new()),
        (Some(Preset::VrLike), None) => (CorpusSpec::vr_like(), Vec::new()),
        (None, Some(p)) => (
            read_json::<CorpusSpec<f64>>(p).with_context(|| format!("reading spec {}", p.display()))?,
            hash_inputs(&[p])?,
        ),
        _ => bail!("give exactly one of --preset or --spec"),
    };
    let corpus = generate_corpus(&spec, a.n, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    corpus
        .par_iter()
        .try_for_each(|(rec, _)| write_recording(rec, &a.out.join(format!("{}.csv", rec.recording_id()))))?;
    let truths: Vec<_> = corpus.iter().map(|(_, gt)| gt.clone()).collect();
    write_atomic(&a.out.join("ground_truth.csv"), ground_truth_to_csv(&truths).as_bytes())?;
    let entries = corpus
        .iter()
        .map(|(rec, _)| ManifestEntry {
            recording_id: rec.recording_id().to_string(),
            path: a.out.join(format!("{}.csv", rec.recording_id())),
            format_tag: FormatTag::Canonical,
            rate_hz: spec.rate_hz,
        })
        .collect();
    CorpusManifest::new(entries)?.write(&a.out.join("manifest.csv"), &a.out)?;
    write_json(&spec, &a.out.join("spec.json"))?;
    let mut outputs: Vec<String> = corpus.iter().map(|(r, _)| format!("{}.csv", r.recording_id())).collect();
    outputs.extend(["ground_truth.csv", "manifest.csv", "spec.json"].map(String::from));
    write_run_manifest(&a.out.join("run.json"), command, inputs, outputs)?;
    Ok(())
}

fn cmd_report(a: &ReportArgs, command: &Command) -> Result<()> {
    let mut tables = Vec::with_capacity(a.tables.len());
    for p in &a.tables {
        let qvs: Vec<Quality> = read_quality_table(p)?.into_iter().map(|(_, q)| q).collect();
        let label = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        tables.push((label, distribution_summary(&qvs)?));
    }
    write_atomic(&a.out, summaries_to_csv(&tables).as_bytes())?;
    let inputs: Vec<&Path> = a.tables.iter().map(PathBuf::as_path).collect();
    write_run_manifest(
        &sidecar(&a.out),
        command,
        hash_inputs(&inputs)?,
        vec![a.out.display().to_string()],
    )?;
    Ok(())
}
