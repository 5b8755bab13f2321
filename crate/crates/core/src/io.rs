//! File formats: recordings, manifests, quality tables, summaries and JSON
//! artifacts. Every writer goes through [`write_atomic`].

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::assess::{FeatureSummary, SUMMARY_COLUMNS};
use crate::error::{Error, Result};
use crate::oracle::GroundTruth;
use crate::scalar::{lit, Scalar};
use crate::types::{validate_recording, GazeRecording, QualityVector, RecordingParts, FEATURE_NAMES};

pub const CANONICAL_HEADER: [&str; 5] = ["t_ms", "gaze_x_dva", "gaze_y_dva", "tgt_x_dva", "tgt_y_dva"];
pub const QUALITY_HEADER: [&str; 9] = [
    "recording_id",
    "acc_h",
    "acc_v",
    "acc_c",
    "prec_h",
    "prec_v",
    "prec_c",
    "temporal_prec_ms",
    "n_fixations_used",
];
pub const MANIFEST_HEADER: [&str; 4] = ["recording_id", "path", "format_tag", "rate_hz"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatTag {
    /// `t_ms,gaze_x_dva,gaze_y_dva,tgt_x_dva,tgt_y_dva`
    Canonical,
    /// `n,x,y,val,xT,yT`; `val != 0` marks an invalid sample.
    EyelinkExport,
    /// `n,lx,ly,xT,yT` (left-eye gaze).
    VrExport,
}

impl FromStr for FormatTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "canonical" => Ok(Self::Canonical),
            "eyelink-export" => Ok(Self::EyelinkExport),
            "vr-export" => Ok(Self::VrExport),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Canonical => "canonical",
            Self::EyelinkExport => "eyelink-export",
            Self::VrExport => "vr-export",
        })
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Column positions looked up by header name.
struct Columns<'a> {
    path: &'a Path,
    names: Vec<String>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, rdr: &mut csv::Reader<&[u8]>) -> Result<Self> {
        let headers = rdr.headers().map_err(|e| malformed(path, 1, e.to_string()))?;
        Ok(Self {
            path,
            names: headers.iter().map(|h| h.trim_start_matches('\u{feff}').to_string()).collect(),
        })
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.find(name)
            .ok_or_else(|| malformed(self.path, 1, format!("missing column `{name}`")))
    }
}

/// Parses a numeric cell; empty and NaN cells read as NaN.
fn parse_cell<T: Scalar>(path: &Path, line: u64, column: &str, cell: &str) -> Result<T> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Ok(T::nan());
    }
    cell.parse::<T>()
        .map_err(|e| malformed(path, line, format!("column `{column}`: `{cell}`: {e}")))
}

fn parse_required<T: Scalar>(path: &Path, line: u64, column: &str, cell: &str) -> Result<T> {
    let v = parse_cell::<T>(path, line, column, cell)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(malformed(path, line, format!("column `{column}` needs a finite value, got `{cell}`")))
    }
}

fn default_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads a recording, naming it after the file stem.
pub fn read_recording<T: Scalar>(path: &Path, format: FormatTag, nominal_rate_hz: T) -> Result<GazeRecording<T>> {
    read_recording_as(&default_id(path), path, format, nominal_rate_hz)
}

/// Reads a recording in any supported layout into the canonical form.
///
/// Samples are kept in file order. Gaze cells that are empty, `NaN`, or
/// marked invalid by the layout become missing samples.
pub fn read_recording_as<T: Scalar>(
    recording_id: &str,
    path: &Path,
    format: FormatTag,
    nominal_rate_hz: T,
) -> Result<GazeRecording<T>> {
    let text = read_to_string(path)?;
    let mut rdr = csv_reader(&text);
    let cols = Columns::new(path, &mut rdr)?;
    let (t_name, gx_name, gy_name, tx_name, ty_name) = match format {
        FormatTag::Canonical => ("t_ms", "gaze_x_dva", "gaze_y_dva", "tgt_x_dva", "tgt_y_dva"),
        FormatTag::EyelinkExport => ("n", "x", "y", "xT", "yT"),
        FormatTag::VrExport => ("n", "lx", "ly", "xT", "yT"),
    };
    let t_col = match format {
        FormatTag::Canonical => Some(cols.require(t_name)?),
        _ => cols.find(t_name),
    };
    let gx = cols.require(gx_name)?;
    let gy = cols.require(gy_name)?;
    let tx = cols.require(tx_name)?;
    let ty = cols.require(ty_name)?;
    let val = match format {
        FormatTag::EyelinkExport => cols.find("val"),
        _ => None,
    };

    let period = lit::<T>(1000.0) / nominal_rate_hz;
    let mut parts = RecordingParts {
        recording_id: recording_id.to_string(),
        nominal_rate_hz,
        timestamps_ms: Vec::new(),
        gaze_x: Vec::new(),
        gaze_y: Vec::new(),
        tgt_x: Vec::new(),
        tgt_y: Vec::new(),
        missing: None,
    };
    let mut missing = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| malformed(path, line, e.to_string()))?;
        let cell = |k: usize| row.get(k).unwrap_or("");
        let t = match t_col {
            Some(k) => parse_required(path, line, t_name, cell(k))?,
            None => T::from_usize(i).expect("row index fits in a float") * period,
        };
        let x = parse_cell::<T>(path, line, gx_name, cell(gx))?;
        let y = parse_cell::<T>(path, line, gy_name, cell(gy))?;
        let invalid = match val {
            Some(k) => parse_cell::<f64>(path, line, "val", cell(k))? != 0.0,
            None => false,
        };
        parts.timestamps_ms.push(t);
        parts.gaze_x.push(x);
        parts.gaze_y.push(y);
        parts.tgt_x.push(parse_required(path, line, tx_name, cell(tx))?);
        parts.tgt_y.push(parse_required(path, line, ty_name, cell(ty))?);
        missing.push(invalid || !x.is_finite() || !y.is_finite());
    }
    if missing.is_empty() {
        return Err(Error::Empty("recording has no samples"));
    }
    if missing.iter().all(|&m| m) {
        return Err(Error::AllMissing);
    }
    parts.missing = Some(missing);
    validate_recording(parts)
}

/// Formats a recording as canonical CSV. Missing gaze is an empty cell.
pub fn recording_to_csv<T: Scalar>(rec: &GazeRecording<T>) -> String {
    let mut out = String::with_capacity(rec.len() * 48);
    out.push_str(&CANONICAL_HEADER.join(","));
    out.push('\n');
    for i in 0..rec.len() {
        let t = rec.timestamps_ms()[i];
        if rec.is_missing(i) {
            let _ = writeln!(out, "{t},,,{},{}", rec.tgt_x()[i], rec.tgt_y()[i]);
        } else {
            let _ = writeln!(
                out,
                "{t},{},{},{},{}",
                rec.gaze_x()[i],
                rec.gaze_y()[i],
                rec.tgt_x()[i],
                rec.tgt_y()[i]
            );
        }
    }
    out
}

pub fn write_recording<T: Scalar>(rec: &GazeRecording<T>, path: &Path) -> Result<()> {
    write_atomic(path, recording_to_csv(rec).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub path: PathBuf,
    pub format_tag: FormatTag,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.recording_id.as_str()) {
                return Err(Error::DuplicateId(e.recording_id.clone()));
            }
            if !(e.rate_hz > 0.0) || !e.rate_hz.is_finite() {
                return Err(Error::InvalidRate(e.rate_hz));
            }
        }
        Ok(Self { entries })
    }

    /// Reads a manifest; relative paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut rdr = csv_reader(&text);
        let cols = Columns::new(path, &mut rdr)?;
        let idx: Vec<usize> = MANIFEST_HEADER
            .iter()
            .map(|c| cols.require(c))
            .collect::<Result<_>>()?;
        let mut entries = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| malformed(path, line, e.to_string()))?;
            let cell = |k: usize| row.get(idx[k]).unwrap_or("");
            let format_tag = cell(2)
                .parse::<FormatTag>()
                .map_err(|e| malformed(path, line, e.to_string()))?;
            let rel = PathBuf::from(cell(1));
            entries.push(ManifestEntry {
                recording_id: cell(0).to_string(),
                path: if rel.is_absolute() { rel } else { base.join(rel) },
                format_tag,
                rate_hz: parse_required(path, line, "rate_hz", cell(3))?,
            });
        }
        Self::new(entries)
    }

    /// Writes the manifest with paths relative to `base` where possible.
    pub fn write(&self, path: &Path, base: &Path) -> Result<()> {
        let mut out = MANIFEST_HEADER.join(",");
        out.push('\n');
        for e in &self.entries {
            let p = e.path.strip_prefix(base).unwrap_or(&e.path);
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.recording_id,
                p.display(),
                e.format_tag,
                e.rate_hz
            );
        }
        write_atomic(path, out.as_bytes())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn read_entry<T: Scalar>(entry: &ManifestEntry) -> Result<GazeRecording<T>> {
    let rate = T::from_f64(entry.rate_hz).ok_or(Error::InvalidRate(entry.rate_hz))?;
    read_recording_as(&entry.recording_id, &entry.path, entry.format_tag, rate)
}

/// Formats a quality table sorted by recording id.
pub fn quality_table_to_csv<T: Scalar>(rows: &[(String, QualityVector<T>)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty("quality table"));
    }
    let mut sorted: BTreeMap<&str, &QualityVector<T>> = BTreeMap::new();
    for (id, q) in rows {
        if sorted.insert(id.as_str(), q).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut out = QUALITY_HEADER.join(",");
    out.push('\n');
    for (id, q) in sorted {
        out.push_str(id);
        for v in q.features() {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", q.n_fixations_used);
    }
    Ok(out)
}

pub fn write_quality_table<T: Scalar>(rows: &[(String, QualityVector<T>)], path: &Path) -> Result<()> {
    write_atomic(path, quality_table_to_csv(rows)?.as_bytes())
}

pub fn read_quality_table<T: Scalar>(path: &Path) -> Result<Vec<(String, QualityVector<T>)>> {
    let text = read_to_string(path)?;
    let mut rdr = csv_reader(&text);
    let cols = Columns::new(path, &mut rdr)?;
    let idx: Vec<usize> = QUALITY_HEADER.iter().map(|c| cols.require(c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| malformed(path, line, e.to_string()))?;
        let cell = |k: usize| row.get(idx[k]).unwrap_or("");
        let id = cell(0).to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let mut f = [T::zero(); 7];
        for (k, v) in f.iter_mut().enumerate() {
            *v = parse_required(path, line, FEATURE_NAMES[k], cell(k + 1))?;
        }
        let n_fixations_used = cell(8)
            .parse::<usize>()
            .map_err(|e| malformed(path, line, format!("column `n_fixations_used`: {e}")))?;
        rows.push((
            id,
            QualityVector {
                acc_h: f[0],
                acc_v: f[1],
                acc_c: f[2],
                prec_h: f[3],
                prec_v: f[4],
                prec_c: f[5],
                temporal_prec_ms: f[6],
                n_fixations_used,
            },
        ));
    }
    if rows.is_empty() {
        return Err(Error::Empty("quality table"));
    }
    Ok(rows)
}

/// Summary rows for several labelled tables, under a leading `table` column.
pub fn summaries_to_csv<T: Scalar>(tables: &[(String, Vec<FeatureSummary<T>>)]) -> String {
    let mut out = String::from("table,feature,");
    out.push_str(&SUMMARY_COLUMNS.join(","));
    out.push_str(",max\n");
    for (label, rows) in tables {
        for s in rows {
            let _ = write!(out, "{label},{},{}", s.feature, s.min);
            for d in s.deciles {
                let _ = write!(out, ",{d}");
            }
            let _ = writeln!(out, ",{},{},{}", s.median, s.mean, s.max);
        }
    }
    out
}

pub const GROUND_TRUTH_HEADER: [&str; 12] = [
    "recording_id",
    "seed",
    "rate_hz",
    "latency_ms",
    "noise_sigma",
    "bias_sigma",
    "isi_jitter_ms",
    "n_targets",
    "duration_ms",
    "expected_prec_h",
    "mean_abs_bias_h",
    "mean_abs_bias_v",
];

pub fn ground_truth_to_csv<T: Scalar>(truths: &[GroundTruth<T>]) -> String {
    let mut out = GROUND_TRUTH_HEADER.join(",");
    out.push('\n');
    for g in truths {
        let s = &g.spec;
        let (bh, bv) = g.mean_abs_bias();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.recording_id,
            s.seed,
            s.rate_hz,
            s.latency_ms,
            s.noise_sigma_dva,
            s.bias_sigma_dva,
            s.isi_jitter_ms,
            s.n_targets,
            g.duration_ms,
            g.expected_prec_h(),
            bh,
            bv
        );
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<V: Serialize + ?Sized>(value: &V) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<V: Serialize + ?Sized>(value: &V, path: &Path) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}
