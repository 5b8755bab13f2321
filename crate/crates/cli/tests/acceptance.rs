//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.
//!
//! Criteria 5, 7 and 8 drive the command-line pipeline in-process through
//! `gazedeg_cli::run_args`; the rest call the library directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gazedeg::assess::{decile_gap_over_iqr, one_nn_two_sample, standardize_pooled, FeatureMatrix};
use gazedeg::degrade::jitter_timestamps;
use gazedeg::io::{read_json, read_quality_table, write_json};
use gazedeg::metrics::{analyze_recording, estimate_latency, temporal_precision, LatencySearch};
use gazedeg::oracle::{generate_recording, CorpusSpec, ParamDist, GAUSSIAN_MAD};
use gazedeg::seed::{content_hash, derive_seed, rng_from_seed};
use gazedeg::stats::median;
use gazedeg::{Metrics, Oracle, Quality, Scalar};
use gazedeg_cli::{run_args, AssessmentReport};

struct Outcome {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cli(args: &[&str]) {
    let mut full = vec!["gazedeg"];
    full.extend_from_slice(args);
    if let Err(e) = run_args(full) {
        panic!("gazedeg {}: {e:#}", args.join(" "));
    }
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn table(path: &Path) -> Vec<Quality> {
    read_quality_table(path).unwrap().into_iter().map(|(_, q)| q).collect()
}

fn prec_c(qs: &[Quality]) -> Vec<f64> {
    qs.iter().map(|q| q.prec_c).collect()
}

/// Designated high-noise target: the vr-like preset recorded on one device
/// clock, so every file shares the same timestamp jitter.
fn designated_target() -> CorpusSpec<f64> {
    let mut spec = CorpusSpec::vr_like();
    spec.id_prefix = "tg".into();
    spec.isi_jitter_ms = ParamDist::Fixed { value: 0.5 };
    spec
}

fn c1_calibration_anchor(root: &Path) -> Outcome {
    let t0 = Instant::now();
    let mut spec = CorpusSpec::eyelink_like();
    spec.id_prefix = "quiet".into();
    spec.noise_sigma_dva = ParamDist::Fixed { value: 0.005 };
    let spec_path = root.join("quiet_spec.json");
    write_json(&spec, &spec_path).unwrap();
    let corpus = root.join("quiet");
    let out = root.join("quiet_deg");
    let q = root.join("quiet_deg.csv");
    cli(&["synth", "--spec", p(&spec_path), "--n", "50", "--seed", "11", "--out", p(&corpus)]);
    cli(&[
        "degrade", "--manifest", p(&corpus.join("manifest.csv")), "--model", "baseline", "--sigma0-sq", "0.13",
        "--rate-hz", "250", "--noise-order", "pre", "--seed", "12", "--out", p(&out),
    ]);
    cli(&["metrics", "--manifest", p(&out.join("manifest.csv")), "--out", p(&q)]);
    let prec_h: Vec<f64> = table(&q).iter().map(|q| q.prec_h).collect();
    let m = median(&prec_h).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "calibration anchor",
        pass: (0.08..=0.12).contains(&m) && prec_h.len() == 50 && secs < 60.0,
        detail: format!("median prec_h {m:.4} dva over {} files (want [0.08, 0.12]); {secs:.1} s (want < 60 s)", prec_h.len()),
    }
}

fn fixation_samples(a: &gazedeg::metrics::QualityAnalysis<f64>) -> usize {
    a.fixations.iter().map(|f| f.window.kept().count()).sum()
}

fn c2_metric_oracle(all: &mut Vec<Quality>) -> Outcome {
    let cfg = Metrics::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, sigma) in [0.05, 0.1, 0.2].into_iter().enumerate() {
        let mut spec = Oracle::new(format!("noise{k}"), 200 + k as u64);
        spec.n_targets = 20;
        spec.noise_sigma_dva = sigma;
        let (rec, _) = generate_recording(&spec).unwrap();
        let a = analyze_recording(&rec, &cfg).unwrap();
        let want = GAUSSIAN_MAD * sigma;
        let rel = a.quality.prec_h / want - 1.0;
        let n = fixation_samples(&a);
        pass &= rel.abs() <= 0.10 && n >= 5000;
        notes.push(format!("σ={sigma}: prec_h {:.4}/{want:.4} ({:+.1}%, n={n})", a.quality.prec_h, 100.0 * rel));
        all.push(a.quality);
    }
    for (k, b) in [0.2, 0.5].into_iter().enumerate() {
        let mut spec = Oracle::new(format!("bias{k}"), 300 + k as u64);
        spec.n_targets = 20;
        spec.noise_sigma_dva = 0.02;
        spec.bias_offset_dva = (b, 0.0);
        let (rec, _) = generate_recording(&spec).unwrap();
        let a = analyze_recording(&rec, &cfg).unwrap();
        let rel = a.quality.acc_h / b - 1.0;
        let n = fixation_samples(&a);
        pass &= rel.abs() <= 0.10 && n >= 5000;
        notes.push(format!("b={b}: acc_h {:.4} ({:+.1}%, n={n})", a.quality.acc_h, 100.0 * rel));
        all.push(a.quality);
    }
    Outcome {
        id: 2,
        name: "metric oracle equivalence",
        pass,
        detail: notes.join("; "),
    }
}

fn c3_identities(all: &[Quality]) -> Outcome {
    let cfg = Metrics::default();
    let mut fixations = 0usize;
    let mut triangle_bad = 0usize;
    let mut seed = 0u64;
    while fixations < 1000 {
        let mut rng = rng_from_seed(derive_seed(400, &["fuzz", &seed.to_string()]));
        let mut spec = Oracle::new(format!("fuzz{seed}"), seed);
        spec.n_targets = 25;
        spec.rate_hz = if seed.is_multiple_of(2) { 1000.0 } else { 250.0 };
        spec.noise_sigma_dva = 0.3 * f64::unit_uniform(&mut rng);
        spec.bias_sigma_dva = f64::unit_uniform(&mut rng);
        spec.bias_offset_dva = (f64::standard_normal(&mut rng) * 0.3, f64::standard_normal(&mut rng) * 0.3);
        spec.latency_ms = 300.0 * f64::unit_uniform(&mut rng);
        let (rec, _) = generate_recording(&spec).unwrap();
        let a = analyze_recording(&rec, &cfg).unwrap();
        for f in &a.fixations {
            let acc = f.accuracy;
            let eps = 1e-12 * (1.0 + acc.h + acc.v);
            if acc.c + eps < acc.h.max(acc.v) || acc.c > acc.h + acc.v + eps {
                triangle_bad += 1;
            }
            fixations += 1;
        }
        seed += 1;
    }
    let mut worst = 0.0f64;
    for q in all {
        let lhs = q.prec_c * q.prec_c;
        let rhs = q.prec_h * q.prec_h + q.prec_v * q.prec_v;
        if lhs > 0.0 || rhs > 0.0 {
            worst = worst.max((lhs - rhs).abs() / lhs.max(rhs));
        }
    }
    Outcome {
        id: 3,
        name: "exact identities",
        pass: worst <= 1e-12 && triangle_bad == 0,
        detail: format!(
            "prec_c² vs h²+v² worst rel err {worst:.1e} over {} vectors; accuracy triangle violations {triangle_bad}/{fixations} fixations",
            all.len()
        ),
    }
}

fn c4_jitter_law() -> Outcome {
    let grid: Vec<f64> = (0..100_000).map(|i| 4.0 * i as f64).collect();
    let sigma = 0.5;
    let off = temporal_precision(&jitter_timestamps(&grid, sigma, &mut rng_from_seed(41), false).unwrap()).unwrap();
    let on = temporal_precision(&jitter_timestamps(&grid, sigma, &mut rng_from_seed(42), true).unwrap()).unwrap();
    let rel_off = off / (2f64.sqrt() * sigma) - 1.0;
    let rel_on = on / sigma - 1.0;
    Outcome {
        id: 4,
        name: "temporal jitter law",
        pass: rel_off.abs() <= 0.05 && rel_on.abs() <= 0.05,
        detail: format!(
            "correction off: ISI std {off:.4} ms ({:+.2}% vs √2·σ); on: {on:.4} ms ({:+.2}% vs σ)",
            100.0 * rel_off,
            100.0 * rel_on
        ),
    }
}

/// Outputs of the shared source/target experiment.
struct Experiment {
    target: Vec<Quality>,
    modified: Vec<Quality>,
    baseline: Vec<Quality>,
    source: Vec<Quality>,
    modified_acc: f64,
    baseline_acc: f64,
    sensitivity: Vec<String>,
}

/// Median combined accuracy from an assessment report.
fn combined(path: &Path) -> f64 {
    let r: AssessmentReport = read_json(path).unwrap();
    r.result.combined_accuracy
}

/// Runs the whole pipeline (synth, metrics, calibrate, degrade both models,
/// metrics, assess) below `root`. Corpora and calibration already present
/// are reused. Returns the target, baseline and modified quality tables.
fn pipeline(root: &Path, target_spec: &Path, jitter_correction: &str, tag: &str) -> (PathBuf, PathBuf, PathBuf) {
    let src = root.join("source");
    let tgt = root.join("target");
    if !src.join("manifest.csv").exists() {
        cli(&["synth", "--preset", "eyelink-like", "--n", "100", "--seed", "51", "--out", p(&src)]);
        cli(&["metrics", "--manifest", p(&src.join("manifest.csv")), "--out", p(&root.join("source_q.csv"))]);
        cli(&[
            "calibrate", "--manifest", p(&src.join("manifest.csv")), "--rate-hz", "250", "--grid", "0:0.4:0.025",
            "--seed", "53", "--noise-order", "pre", "--out", p(&root.join("calibration.json")),
        ]);
    }
    if !tgt.join("manifest.csv").exists() {
        cli(&["synth", "--spec", p(target_spec), "--n", "150", "--seed", "52", "--out", p(&tgt)]);
        cli(&["metrics", "--manifest", p(&tgt.join("manifest.csv")), "--out", p(&root.join("target_q.csv"))]);
    }
    let mut tables = Vec::new();
    for model in ["baseline", "modified"] {
        let out = root.join(format!("{model}_{tag}"));
        let q = root.join(format!("{model}_{tag}_q.csv"));
        let report = root.join(format!("{model}_{tag}_assess.json"));
        cli(&[
            "degrade", "--manifest", p(&src.join("manifest.csv")), "--model", model, "--target-metrics",
            p(&root.join("target_q.csv")), "--calibration", p(&root.join("calibration.json")), "--rate-hz", "250",
            "--seed", "54", "--noise-order", "pre", "--jitter-correction", jitter_correction, "--out", p(&out),
        ]);
        cli(&["metrics", "--manifest", p(&out.join("manifest.csv")), "--out", p(&q)]);
        cli(&[
            "assess", "--real", p(&root.join("target_q.csv")), "--synth", p(&q), "--repeats", "5", "--seed", "55",
            "--out", p(&report),
        ]);
        tables.push(q);
    }
    let modified = tables.pop().unwrap();
    let baseline = tables.pop().unwrap();
    (root.join("target_q.csv"), baseline, modified)
}

fn run_experiment(root: &Path) -> Experiment {
    let designated = root.join("designated");
    fs::create_dir_all(&designated).unwrap();
    let spec_path = designated.join("target_spec.json");
    write_json(&designated_target(), &spec_path).unwrap();
    let (tq, bq, mq) = pipeline(&designated, &spec_path, "on", "main");
    let exp = Experiment {
        target: table(&tq),
        baseline: table(&bq),
        modified: table(&mq),
        source: table(&designated.join("source_q.csv")),
        baseline_acc: combined(&designated.join("baseline_main_assess.json")),
        modified_acc: combined(&designated.join("modified_main_assess.json")),
        sensitivity: Vec::new(),
    };

    // informational: uncorrected jitter, and the vr-like preset's per-file jitter spread
    let mut sensitivity = Vec::new();
    pipeline(&designated, &spec_path, "off", "faithful");
    sensitivity.push(format!(
        "designated target, correction off: baseline {:.1}% / modified {:.1}%",
        100.0 * combined(&designated.join("baseline_faithful_assess.json")),
        100.0 * combined(&designated.join("modified_faithful_assess.json"))
    ));
    let preset = root.join("preset");
    fs::create_dir_all(&preset).unwrap();
    let preset_spec = preset.join("target_spec.json");
    let mut vr = CorpusSpec::<f64>::vr_like();
    vr.id_prefix = "tg".into();
    write_json(&vr, &preset_spec).unwrap();
    fs::create_dir_all(preset.join("source")).unwrap();
    copy_dir(&designated.join("source"), &preset.join("source"));
    for f in ["source_q.csv", "calibration.json"] {
        fs::copy(designated.join(f), preset.join(f)).unwrap();
    }
    for c in ["off", "on"] {
        pipeline(&preset, &preset_spec, c, c);
        sensitivity.push(format!(
            "vr-like preset target (per-file jitter 0.3-0.7 ms), correction {c}: baseline {:.1}% / modified {:.1}%",
            100.0 * combined(&preset.join(format!("baseline_{c}_assess.json"))),
            100.0 * combined(&preset.join(format!("modified_{c}_assess.json")))
        ));
    }
    Experiment { sensitivity, ..exp }
}

fn copy_dir(from: &Path, to: &Path) {
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

fn c5_percentile_matching(exp: &Experiment) -> Outcome {
    let t = prec_c(&exp.target);
    let gap_mod = decile_gap_over_iqr(&prec_c(&exp.modified), &t).unwrap();
    let gap_base = decile_gap_over_iqr(&prec_c(&exp.baseline), &t).unwrap();
    Outcome {
        id: 5,
        name: "percentile matching",
        pass: gap_mod <= 0.10 && gap_base > 0.10 && exp.modified.len() == 100 && exp.target.len() == 150,
        detail: format!(
            "worst prec_c decile gap / target IQR: modified {:.1}% (want ≤ 10%), baseline {:.1}% (want > 10%); n = {} → {}",
            100.0 * gap_mod,
            100.0 * gap_base,
            exp.modified.len(),
            exp.target.len()
        ),
    }
}

fn gaussian_matrix(n: usize, d: usize, seed: u64, shift: f64) -> FeatureMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| shift + f64::standard_normal(&mut rng)).collect())
        .collect();
    FeatureMatrix::from_rows(&rows).unwrap()
}

fn c6_one_nn_properties() -> Outcome {
    let zeros = FeatureMatrix::from_rows(&vec![vec![0.0; 7]; 5]).unwrap();
    let tens = FeatureMatrix::from_rows(&vec![vec![10.0; 7]; 5]).unwrap();
    let separated = one_nn_two_sample(&zeros, &tens, 0).unwrap().combined_accuracy;

    let real = gaussian_matrix(50, 7, 61, 0.0);
    let duplicated = one_nn_two_sample(&real, &real.clone(), 0).unwrap().combined_accuracy;

    let iid: Vec<f64> = (0..5)
        .map(|r| {
            let a = gaussian_matrix(200, 7, derive_seed(62, &["real", &r.to_string()]), 0.0);
            let b = gaussian_matrix(200, 7, derive_seed(62, &["synth", &r.to_string()]), 0.0);
            let (za, zb) = standardize_pooled(&a, &b).unwrap();
            one_nn_two_sample(&za, &zb, r).unwrap().combined_accuracy
        })
        .collect();
    let iid_median = median(&iid).unwrap();
    Outcome {
        id: 6,
        name: "1-NN harness properties",
        pass: separated == 1.0 && duplicated == 0.0 && (0.4..=0.6).contains(&iid_median),
        detail: format!(
            "separated {:.0}%, duplicated {:.0}%, iid n=200 median {:.1}% over 5 repeats (want 100 / 0 / [40, 60])",
            100.0 * separated,
            100.0 * duplicated,
            100.0 * iid_median
        ),
    }
}

fn c7_table1_direction(exp: &Experiment) -> Outcome {
    let drop = 100.0 * (exp.baseline_acc - exp.modified_acc);
    Outcome {
        id: 7,
        name: "end-to-end 1-NN direction",
        pass: drop >= 20.0,
        detail: format!(
            "baseline {:.1}% → modified {:.1}% (drop {drop:.1} points, want ≥ 20); sensitivity: {}",
            100.0 * exp.baseline_acc,
            100.0 * exp.modified_acc,
            exp.sensitivity.join("; ")
        ),
    }
}

fn hash_tree(dir: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, content_hash(&fs::read(&path).unwrap()));
            }
        }
    }
    out
}

/// Every command, both models and both noise orders, on a small corpus.
fn small_pipeline(root: &Path) {
    let j = |s: &str| root.join(s);
    cli(&["synth", "--preset", "eyelink-like", "--n", "6", "--seed", "81", "--out", p(&j("src"))]);
    cli(&["synth", "--preset", "vr-like", "--n", "8", "--seed", "82", "--out", p(&j("tgt"))]);
    cli(&["metrics", "--manifest", p(&j("src/manifest.csv")), "--out", p(&j("src_q.csv"))]);
    cli(&["metrics", "--manifest", p(&j("tgt/manifest.csv")), "--out", p(&j("tgt_q.csv"))]);
    cli(&[
        "calibrate", "--manifest", p(&j("src/manifest.csv")), "--rate-hz", "250", "--grid", "0:0.3:0.1", "--seed",
        "83", "--out", p(&j("calib.json")),
    ]);
    cli(&[
        "degrade", "--manifest", p(&j("src/manifest.csv")), "--model", "baseline", "--sigma0-sq", "0.13",
        "--rate-hz", "250", "--noise-order", "post", "--seed", "84", "--out", p(&j("base")),
    ]);
    cli(&[
        "degrade", "--manifest", p(&j("src/manifest.csv")), "--model", "modified", "--target-metrics",
        p(&j("tgt_q.csv")), "--calibration", p(&j("calib.json")), "--rate-hz", "250", "--seed", "84",
        "--jitter-correction", "off", "--out", p(&j("mod")),
    ]);
    cli(&["metrics", "--manifest", p(&j("mod/manifest.csv")), "--out", p(&j("mod_q.csv"))]);
    cli(&[
        "assess", "--real", p(&j("tgt_q.csv")), "--synth", p(&j("mod_q.csv")), "--repeats", "5", "--seed", "85",
        "--out", p(&j("assess.json")),
    ]);
    cli(&["report", p(&j("tgt_q.csv")), p(&j("mod_q.csv")), "--out", p(&j("report.csv"))]);
}

fn c8_determinism(root: &Path, experiment_root: &Path) -> Outcome {
    small_pipeline(root);
    let first = hash_tree(root);
    small_pipeline(root);
    let second = hash_tree(root);
    let differing = first.iter().filter(|(k, v)| second.get(*k) != Some(v)).count() + second.len() - first.len();

    // the full experiment's modified run, repeated into a fresh directory
    let d = experiment_root.join("designated");
    let rerun = experiment_root.join("rerun");
    cli(&[
        "degrade", "--manifest", p(&d.join("source/manifest.csv")), "--model", "modified", "--target-metrics",
        p(&d.join("target_q.csv")), "--calibration", p(&d.join("calibration.json")), "--rate-hz", "250", "--seed",
        "54", "--noise-order", "pre", "--jitter-correction", "on", "--out", p(&rerun),
    ]);
    let a = hash_tree(&d.join("modified_main"));
    let b = hash_tree(&rerun);
    let data_differs = a
        .iter()
        .filter(|(k, _)| k.as_path() != Path::new("run.json"))
        .filter(|(k, v)| b.get(*k) != Some(v))
        .count();
    Outcome {
        id: 8,
        name: "determinism",
        pass: differing == 0 && data_differs == 0 && first.len() > 40 && a.len() > 200,
        detail: format!(
            "in-place rerun: {differing}/{} files differ; fresh-directory rerun of the modified run: {data_differs}/{} data files differ",
            first.len(),
            a.len() - 1
        ),
    }
}

fn c9_latency_recovery() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for latency in [120.0, 200.0, 320.0] {
        for i in 0..20 {
            let mut spec = Oracle::new(format!("lat{latency}_{i}"), derive_seed(90, &[&latency.to_string(), &i.to_string()]));
            spec.latency_ms = latency;
            spec.noise_sigma_dva = 0.1;
            spec.bias_sigma_dva = 0.2;
            spec.rate_hz = if i % 2 == 0 { 1000.0 } else { 250.0 };
            let (rec, _) = generate_recording(&spec).unwrap();
            let est = estimate_latency(&rec, &LatencySearch::default()).unwrap();
            let err = (est.shift_ms - latency).abs();
            worst = worst.max(err);
            if err > 10.0 {
                failures += 1;
            }
        }
    }
    Outcome {
        id: 9,
        name: "latency recovery",
        pass: failures == 0,
        detail: format!("60 recordings at 120/200/320 ms: worst error {worst:.1} ms, {failures} outside ±10 ms"),
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let t0 = Instant::now();
    let mut outcomes = Vec::new();
    let mut vectors = Vec::new();

    outcomes.push(c1_calibration_anchor(root));
    outcomes.push(c2_metric_oracle(&mut vectors));
    outcomes.push(c4_jitter_law());

    let exp_root = root.join("experiment");
    let exp = run_experiment(&exp_root);
    outcomes.push(c5_percentile_matching(&exp));
    outcomes.push(c6_one_nn_properties());
    outcomes.push(c7_table1_direction(&exp));
    outcomes.push(c8_determinism(&root.join("determinism"), &exp_root));
    outcomes.push(c9_latency_recovery());

    for qs in [&exp.target, &exp.modified, &exp.baseline, &exp.source] {
        vectors.extend(qs.iter().copied());
    }
    vectors.extend(table(&root.join("quiet_deg.csv")));
    outcomes.push(c3_identities(&vectors));
    outcomes.sort_by_key(|o| o.id);

    println!();
    for o in &outcomes {
        println!(
            "[{}] criterion {} ({}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {}/{} criteria passed in {:.0} s",
        outcomes.len() - failed,
        outcomes.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
