//! Acceptance suite. Every test writes one `criterion N` line with its
//! measured values to stderr before asserting; the line bypasses output
//! capture, so a plain `cargo test` shows the report. All tolerances are
//! pinned below.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raypet::config::RunConfig;
use raypet_classifiers::fixtures::separable_toy;
use raypet_classifiers::neural::{build_network, sample_tensor};
use raypet_classifiers::{train, ClassifierConfig, ClassifierKind, Gamma};
use raypet_core::preprocess::{
    aggregate_frames, dbscan_denoise, make_windows, voxelize, window_count, AxisRange, VoxelBounds,
};
use raypet_core::radar::range_resolution;
use raypet_core::synth::{
    background_seed, synthesize_background, synthesize_clip, synthesize_dataset, AnimalModel, DatasetSpec, NoiseModel,
    SceneConfig,
};
use raypet_core::{
    run_pipeline, ActivityLabel, Clip, Dataset, Frame, PipelineConfig, Point, RadarConfig, VoxelDims, VoxelGrid,
};
use raypet_eval::{
    compare_pipelines, sessions_of_clips, split_sessions, window_sweep, Split, SplitSpec, PUBLISHED_SWEEP,
};
use raypet_learn::{check_layer, check_model, Activation, Layer, Objective, SeqOutput, Sequential, Tensor};
use serde_json::Value;
use sha2::{Digest, Sha256};

const RANGE_RESOLUTION_M: f64 = 0.061438;
const RANGE_RESOLUTION_TOL: f64 = 1e-6;
const DBSCAN_FRAMES: usize = 200;
const COUNTING_CASES: usize = 1000;
const GRADIENT_TOL: f64 = 1e-4;
const TOY_ACCURACY: f64 = 0.99;
const END_TO_END_ACCURACY: f64 = 0.80;
const END_TO_END_CLIPS_PER_CLASS: usize = 20;
const END_TO_END_EPOCHS: usize = 12;
const COMPARISON_SEEDS: u64 = 5;
const COMPARISON_CLIPS_PER_CLASS: usize = 10;

fn verdict(n: u8, title: &str, pass: bool, detail: &str) {
    let line = format!("criterion {n} ({title}): {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    // Written to the raw handle so the test harness does not capture it.
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn reduced_pipeline(window: usize, slide: usize) -> PipelineConfig {
    PipelineConfig { voxel_dims: VoxelDims::new(4, 8, 8), ..PipelineConfig::default() }.with_window(window, slide)
}

fn synthetic(per_class: usize, noise: &NoiseModel, seed: u64) -> (Vec<Clip>, Clip) {
    let radar = RadarConfig::default();
    let scene = SceneConfig::default();
    let spec = DatasetSpec::uniform(per_class);
    let clips = synthesize_dataset(&spec, &scene, &AnimalModel::default(), noise, &radar, seed).unwrap();
    let bg_scene = SceneConfig { seed: background_seed(seed), ..scene };
    let bg = synthesize_background(spec.background_duration, &bg_scene, noise, &radar).unwrap();
    (clips, bg)
}

#[test]
fn criterion_1_range_resolution() {
    let dr = range_resolution(&RadarConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = raypet(dir.path(), &["inspect"]);
    let reported = events(&out, "inspect")[0]["range_resolution_m"].as_f64().unwrap();
    let pass = (dr - RANGE_RESOLUTION_M).abs() <= RANGE_RESOLUTION_TOL
        && (reported - RANGE_RESOLUTION_M).abs() <= RANGE_RESOLUTION_TOL;
    verdict(
        1,
        "range resolution",
        pass,
        &format!("library {dr:.7} m, inspect {reported:.7} m, want {RANGE_RESOLUTION_M} +- {RANGE_RESOLUTION_TOL}"),
    );
}

/// Quadratic reference: a point is noise iff it is not core and no core
/// point lies within `eps`.
fn brute_force_noise(points: &[Point], eps: f64, min_points: usize) -> Vec<bool> {
    let near = |i: usize, j: usize| points[i].distance_sq(&points[j]) <= eps * eps;
    let n = points.len();
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_points).collect();
    (0..n).map(|i| !core[i] && !(0..n).any(|j| core[j] && near(i, j))).collect()
}

/// Up to 200 points: a few Gaussian-ish blobs plus uniform scatter.
fn random_frame(r: &mut ChaCha8Rng) -> Vec<Point> {
    let n = r.random_range(0..=200);
    let blobs: Vec<Point> = (0..r.random_range(1..5))
        .map(|_| Point::at(r.random_range(-2.0..2.0), r.random_range(0.5..3.0), r.random_range(-0.5..0.5)))
        .collect();
    (0..n)
        .map(|_| {
            if r.random_bool(0.7) {
                let c = blobs[r.random_range(0..blobs.len())];
                let s = 0.3;
                Point::at(c.x + r.random_range(-s..s), c.y + r.random_range(-s..s), c.z + r.random_range(-s..s))
            } else {
                Point::at(r.random_range(-3.0..3.0), r.random_range(0.0..4.0), r.random_range(-1.0..1.0))
            }
        })
        .collect()
}

#[test]
fn criterion_2_dbscan_matches_brute_force() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut removed) = (0, 0);
    for i in 0..DBSCAN_FRAMES {
        let points = random_frame(&mut r);
        let eps = r.random_range(0.1..=1.0);
        let min_points = r.random_range(1..=5);
        let noise = brute_force_noise(&points, eps, min_points);
        let expected: Vec<Point> = points.iter().zip(&noise).filter(|(_, &n)| !n).map(|(p, _)| *p).collect();
        removed += noise.iter().filter(|&&n| n).count();
        let kept = dbscan_denoise(&Frame::new(i, 0.0, points), eps, min_points).points;
        if kept != expected {
            mismatches += 1;
        }
    }
    verdict(
        2,
        "dbscan oracle",
        mismatches == 0 && removed > 0,
        &format!("{DBSCAN_FRAMES} frames, {mismatches} mismatched, {removed} noise points removed"),
    );
}

#[test]
fn criterion_3_counting_invariants() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let bounds =
        VoxelBounds { x: AxisRange::new(-1.0, 1.0), y: AxisRange::new(0.3, 2.3), z: AxisRange::new(-0.6, 0.4) };
    let mut failures = Vec::new();
    for case in 0..COUNTING_CASES {
        let n_frames = r.random_range(0..80);
        let k = r.random_range(1..6);
        let w = r.random_range(1..40);
        let sw = r.random_range(1..=w);
        let dims = VoxelDims::new(r.random_range(1..6), r.random_range(1..12), r.random_range(1..12));
        let frames: Vec<Frame> = (0..n_frames)
            .map(|i| {
                let pts = (0..r.random_range(0..30))
                    .map(|_| Point::at(r.random_range(-1.5..1.5), r.random_range(0.0..3.0), r.random_range(-1.0..1.0)))
                    .collect();
                Frame::new(i, i as f64 * 0.0333, pts)
            })
            .collect();
        let aggregated = aggregate_frames(&frames, k);
        if aggregated.len() != n_frames / k {
            failures.push(format!("case {case}: aggregation {} != {n_frames}/{k}", aggregated.len()));
        }
        let grids: Vec<VoxelGrid> = aggregated.iter().map(|f| voxelize(f, dims, &bounds)).collect();
        for (f, g) in aggregated.iter().zip(&grids) {
            let inside = f.points.iter().filter(|p| bounds.contains(p)).count() as u64;
            if g.total() != inside {
                failures.push(format!("case {case}: voxel sum {} != {inside}", g.total()));
            }
        }
        let want = if grids.len() < w { 0 } else { (grids.len() - w) / sw + 1 };
        let windows = make_windows(&grids, ActivityLabel::Eating, "s", w, sw);
        if windows.len() != want || window_count(grids.len(), w, sw) != want {
            failures.push(format!("case {case}: {} windows, want {want}", windows.len()));
        }
    }
    let radar = RadarConfig::default();
    let scene = SceneConfig { seed: 30, ..SceneConfig::default() };
    let noise = NoiseModel::moderate(&scene, &radar);
    let clip = synthesize_clip(ActivityLabel::Sitting, 10.0, &scene, &AnimalModel::default(), &noise, &radar).unwrap();
    let bg = synthesize_background(1.0, &SceneConfig { seed: background_seed(30), ..scene.clone() }, &noise, &radar)
        .unwrap();
    let default_windows = run_pipeline(&clip, Some(&bg), &PipelineConfig::default()).unwrap().len();
    let pass = failures.is_empty() && clip.frames.len() == 300 && default_windows == 13;
    let detail = format!(
        "{COUNTING_CASES} cases, {} violations{}; default clip {} frames -> {default_windows} windows (want 13)",
        failures.len(),
        failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
        clip.frames.len()
    );
    verdict(3, "counting invariants", pass, &detail);
}

fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tensor::zeros(shape);
    t.data.iter_mut().for_each(|v| *v = r.random_range(-1.0..1.0));
    t
}

#[test]
fn criterion_4_gradient_checks() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    let mut record = |name: String, rep: raypet_learn::GradCheckReport| {
        worst = worst.max(rep.max_rel_error);
        if !rep.passes(GRADIENT_TOL) {
            failed.push(format!("{name}: {rep:?}"));
        }
    };
    let inner = Sequential::new(vec![Layer::conv3d(1, 2, Activation::Tanh, &mut r), Layer::MaxPool3d, Layer::Flatten]);
    let layers: Vec<(Layer, Vec<usize>)> = vec![
        (Layer::dense(5, 4, Activation::Linear, &mut r), vec![5]),
        (Layer::dense(5, 4, Activation::Relu, &mut r), vec![5]),
        (Layer::dense(5, 4, Activation::Tanh, &mut r), vec![5]),
        (Layer::conv3d(2, 3, Activation::Tanh, &mut r), vec![2, 3, 4, 4]),
        (Layer::conv3d(1, 2, Activation::Relu, &mut r), vec![1, 2, 3, 3]),
        (Layer::MaxPool3d, vec![2, 3, 4, 5]),
        (Layer::Flatten, vec![2, 3, 2]),
        (Layer::lstm(3, 4, SeqOutput::All, &mut r), vec![5, 3]),
        (Layer::lstm(3, 4, SeqOutput::Last, &mut r), vec![5, 3]),
        (Layer::bidirectional(3, 4, SeqOutput::All, &mut r), vec![5, 3]),
        (Layer::bidirectional(3, 4, SeqOutput::Last, &mut r), vec![5, 3]),
        (Layer::TimeDistributed(inner), vec![3, 1, 2, 4, 4]),
        (Layer::Softmax, vec![6]),
    ];
    for (i, (layer, shape)) in layers.iter().enumerate() {
        let rep = check_layer(layer, &random_tensor(shape, 40 + i as u64), 40, i as u64).unwrap();
        record(format!("{} {shape:?}", layer.name()), rep);
    }
    let dims = VoxelDims::new(2, 3, 3);
    let window = 3;
    let mut config = ClassifierConfig::default();
    config.mlp.hidden = vec![10, 8, 6];
    config.bilstm.hidden = 5;
    config.tdcnn.conv_channels = [2, 3];
    config.tdcnn.embedding = 5;
    config.tdcnn.hidden = 4;
    let toy = separable_toy(1, dims, window, 44);
    for kind in [ClassifierKind::Mlp, ClassifierKind::BiLstm, ClassifierKind::TdCnnBiLstm] {
        let net = build_network(kind, &config, dims, window, 45);
        for sample in &toy {
            let x = sample_tensor(kind, dims, window, sample);
            let rep = check_model(&net, &x, Objective::CrossEntropy(sample.label.index()), 15, 46).unwrap();
            record(format!("{kind} model, class {}", sample.label), rep);
        }
    }
    let detail = format!(
        "{} layer kinds and 3 models checked, worst relative error {worst:.2e} (tol {GRADIENT_TOL:e}){}",
        layers.len(),
        failed.first().map(|f| format!("; {f}")).unwrap_or_default()
    );
    verdict(4, "gradient checks", failed.is_empty(), &detail);
}

#[test]
fn criterion_5_separable_toy() {
    let dims = VoxelDims::new(2, 4, 4);
    let data = separable_toy(20, dims, 5, 11);
    let mut config = ClassifierConfig::default();
    config.mlp.hidden = vec![32, 16, 8];
    config.bilstm.hidden = 16;
    config.tdcnn.conv_channels = [4, 8];
    config.tdcnn.embedding = 16;
    config.tdcnn.hidden = 16;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in ClassifierKind::ALL {
        let cfg = config.with_kind(kind);
        let a = train(&data, &cfg, 5).unwrap();
        let b = train(&data, &cfg, 5).unwrap();
        let acc = a.accuracy(&data).unwrap();
        let same = a.to_json() == b.to_json();
        pass &= acc >= TOY_ACCURACY && same;
        parts.push(format!("{kind} {acc:.3}{}", if same { "" } else { " (not reproducible)" }));
    }
    verdict(
        5,
        "separable toy",
        pass,
        &format!("training accuracy {} (min {TOY_ACCURACY}), same seed gives identical models", parts.join(", ")),
    );
}

#[test]
fn criterion_6_synthetic_end_to_end() {
    let seed = 0;
    let (radar, scene) = (RadarConfig::default(), SceneConfig::default());
    let (clips, bg) = synthetic(END_TO_END_CLIPS_PER_CLASS, &NoiseModel::moderate(&scene, &radar), seed);
    let pipeline = reduced_pipeline(10, 5);
    let data = Dataset::build(&clips, Some(&bg), &pipeline).unwrap();
    let spec = SplitSpec { test_fraction: 0.3, seed };
    let test_sessions = split_sessions(&sessions_of_clips(&clips).unwrap(), &spec).unwrap();
    let split = Split::by_sessions(&data.samples, &test_sessions);
    let config = ClassifierConfig::default().with_kind(ClassifierKind::TdCnnBiLstm).with_epochs(END_TO_END_EPOCHS);
    let model = train(&split.train_samples(&data.samples), &config, seed).unwrap();
    let acc = model.accuracy(&split.test_samples(&data.samples)).unwrap();
    let detail = format!(
        "td_cnn_bi_lstm, moderate noise, W=10 SW=5, 4x8x8, {END_TO_END_CLIPS_PER_CLASS} clips/class, {} test sessions: test accuracy {acc:.4} (min {END_TO_END_ACCURACY})",
        test_sessions.len()
    );
    verdict(6, "synthetic end-to-end", acc >= END_TO_END_ACCURACY, &detail);
}

#[test]
fn criterion_7_comparison_direction() {
    let (radar, scene) = (RadarConfig::default(), SceneConfig::default());
    let noise = NoiseModel::high(&scene, &radar);
    assert!(noise.outlier_rate >= 5.0 && noise.static_clutter_points.len() >= 10);
    let pipeline = reduced_pipeline(10, 10);
    let mut classifier = ClassifierConfig::default().with_kind(ClassifierKind::SvmPca);
    classifier.svm.c_grid = vec![1.0, 10.0];
    classifier.svm.gamma_grid = vec![Gamma::INVERSE_DIM];
    let mut deltas = Vec::new();
    let mut parts = Vec::new();
    for seed in 0..COMPARISON_SEEDS {
        let (clips, bg) = synthetic(COMPARISON_CLIPS_PER_CLASS, &noise, seed);
        let r =
            compare_pipelines(&clips, Some(&bg), &pipeline, &classifier, &SplitSpec { test_fraction: 0.3, seed }, seed)
                .unwrap();
        parts.push(format!(
            "seed {seed}: full {:.3} baseline {:.3}",
            r.full.report.accuracy, r.baseline.report.accuracy
        ));
        deltas.push(r.delta);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let not_worse = deltas.iter().filter(|&&d| d >= 0.0).count();
    let detail = format!(
        "high noise, svm_pca; {}; mean delta {mean:+.4}, full >= baseline on {not_worse}/{COMPARISON_SEEDS} seeds",
        parts.join("; ")
    );
    verdict(7, "comparison direction", mean > 0.0 && not_worse == deltas.len(), &detail);
}

#[test]
fn criterion_8_window_sweep_shape() {
    let (radar, scene) = (RadarConfig::default(), SceneConfig::default());
    let (clips, bg) = synthetic(4, &NoiseModel::moderate(&scene, &radar), 8);
    let mut classifier = ClassifierConfig::default().with_kind(ClassifierKind::SvmPca);
    classifier.svm.c_grid = vec![1.0];
    classifier.svm.gamma_grid = vec![Gamma::INVERSE_DIM];
    let split = SplitSpec { test_fraction: 0.3, seed: 8 };
    let r =
        window_sweep(&clips, Some(&bg), &reduced_pipeline(30, 10), &PUBLISHED_SWEEP, &classifier, &split, 8).unwrap();
    let counts: Vec<usize> = r.entries.iter().map(|e| e.train_samples).collect();
    let pass = counts.len() == PUBLISHED_SWEEP.len()
        && counts.windows(2).all(|w| w[0] > w[1])
        && counts.iter().all(|&c| c > 0);
    let pairs: Vec<String> =
        r.entries.iter().map(|e| format!("({},{})={}", e.window, e.slide, e.train_samples)).collect();
    verdict(8, "window sweep shape", pass, &format!("training samples {}", pairs.join(" ")));
}

struct Output {
    stdout: String,
}

fn raypet(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_raypet"))
        .current_dir(dir)
        .args(args)
        .env_remove("RAYPET_SEED")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "raypet {args:?}:\n{}", String::from_utf8_lossy(&out.stderr));
    Output { stdout: String::from_utf8(out.stdout).unwrap() }
}

fn events(out: &Output, name: &str) -> Vec<Value> {
    out.stdout.lines().filter_map(|l| serde_json::from_str::<Value>(l).ok()).filter(|v| v["event"] == name).collect()
}

const SMALL_RUN: &str = r#"
seed = 19

[noise]
level = "high"

[dataset]
clip_duration = 3.0
walking_duration = 2.0

[dataset.clips_per_label]
eating = 3
lying = 3
sitting = 3
standing = 3
walking = 3

[pipeline]
window_size = 5
slide = 5

[pipeline.voxel_dims]
m = 2
n = 4
p = 4

[classifier]
kind = "mlp"

[classifier.mlp]
hidden = [16, 8, 8]

[classifier.mlp.training]
epochs = 3

[classifier.svm]
c_grid = [1.0]
gamma_grid = ["inverse_dim"]
"#;

/// gen, preprocess, train, eval and compare in `dir` with `config.toml`.
fn full_run(dir: &Path) {
    let cfg = ["--config", "config.toml"];
    for cmd in [
        &["gen"][..],
        &["preprocess", "--manifest", "out/manifest.json"],
        &["train", "--dataset", "out/dataset.rpds"],
        &["eval", "--dataset", "out/dataset.rpds", "--model", "out/model.json"],
        &["compare", "--manifest", "out/manifest.json"],
    ] {
        raypet(dir, &[&cfg[..], cmd].concat());
    }
}

/// Paths of every file under `dir/out`, relative to it and sorted.
fn files(dir: &Path) -> Vec<String> {
    fn walk(root: &Path, sub: &Path, acc: &mut Vec<String>) {
        for e in std::fs::read_dir(root.join(sub)).unwrap() {
            let rel = sub.join(e.unwrap().file_name());
            if root.join(&rel).is_dir() {
                walk(root, &rel, acc);
            } else {
                acc.push(rel.to_string_lossy().into_owned());
            }
        }
    }
    let mut names = Vec::new();
    walk(&dir.join("out"), Path::new(""), &mut names);
    names.sort();
    names
}

fn sha256(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn without_wall_time(log: &str) -> Vec<Value> {
    log.lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_s");
            v
        })
        .collect()
}

/// Writes the run config embedded in a provenance record as a config file.
fn config_from_provenance(provenance: &Value, dir: &Path) {
    let cfg: RunConfig = serde_json::from_value(provenance["run_config"].clone()).unwrap();
    std::fs::write(dir.join("config.toml"), toml::to_string(&cfg).unwrap()).unwrap();
}

#[test]
fn criterion_9_determinism_and_provenance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        std::fs::write(d.path().join("config.toml"), SMALL_RUN).unwrap();
        full_run(d.path());
    }
    let mut problems = Vec::new();
    let names = files(a.path());
    if names != files(b.path()) {
        problems.push("different output file sets".to_string());
    }
    let mut identical = 0;
    for name in &names {
        let (pa, pb) = (a.path().join("out").join(name), b.path().join("out").join(name));
        if name == "train_log.jsonl" {
            let (la, lb) = (std::fs::read_to_string(&pa).unwrap(), std::fs::read_to_string(&pb).unwrap());
            if without_wall_time(&la) != without_wall_time(&lb) {
                problems.push("training logs differ beyond wall time".into());
            }
        } else if std::fs::read(&pa).unwrap() != std::fs::read(&pb).unwrap() {
            problems.push(format!("{name} differs"));
        } else {
            identical += 1;
        }
    }

    let out = a.path().join("out");
    let manifest = read_json(&out.join("manifest.json"));
    let dataset = Dataset::read_file(&out.join("dataset.rpds")).unwrap();
    let model = read_json(&out.join("model.json"));
    let eval = read_json(&out.join("eval.json"));
    let comparison = read_json(&out.join("comparison.json"));
    let hashes = [
        (&dataset.provenance["manifest_sha256"], "manifest.json"),
        (&model["provenance"]["dataset_sha256"], "dataset.rpds"),
        (&eval["provenance"]["dataset_sha256"], "dataset.rpds"),
        (&eval["provenance"]["model_sha256"], "model.json"),
        (&comparison["provenance"]["manifest_sha256"], "manifest.json"),
    ];
    for (recorded, file) in hashes {
        if recorded.as_str() != Some(sha256(&out.join(file)).as_str()) {
            problems.push(format!("recorded hash of {file} does not match"));
        }
    }
    for p in ["clips", "background"] {
        if manifest[p].is_null() {
            problems.push(format!("manifest lacks {p}"));
        }
    }

    // Re-derive each artifact in a fresh directory from nothing but the
    // configuration recorded alongside it.
    let steps: [(&Value, &[&str], &str); 4] = [
        (&manifest["config"], &["gen"], "manifest.json"),
        (&dataset.provenance, &["gen", "preprocess --manifest out/manifest.json"], "dataset.rpds"),
        (
            &model["provenance"],
            &["gen", "preprocess --manifest out/manifest.json", "train --dataset out/dataset.rpds"],
            "model.json",
        ),
        (&comparison["provenance"], &["gen", "compare --manifest out/manifest.json"], "comparison.json"),
    ];
    for (record, commands, file) in steps {
        let fresh = tempfile::tempdir().unwrap();
        let source = if file == "manifest.json" { serde_json::json!({ "run_config": record }) } else { record.clone() };
        config_from_provenance(&source, fresh.path());
        for c in commands {
            let args: Vec<&str> = ["--config", "config.toml"].into_iter().chain(c.split(' ')).collect();
            raypet(fresh.path(), &args);
        }
        if std::fs::read(fresh.path().join("out").join(file)).unwrap() != std::fs::read(out.join(file)).unwrap() {
            problems.push(format!("{file} not re-derived from its provenance"));
        }
    }
    let fresh = tempfile::tempdir().unwrap();
    config_from_provenance(&eval["config"], fresh.path());
    full_run(fresh.path());
    if read_json(&fresh.path().join("out/eval.json")) != eval {
        problems.push("eval.json not re-derived from its echoed config".into());
    }

    let detail = format!(
        "{} outputs, {identical} byte-identical across reruns (training log equal up to wall time), 5 recorded hashes and 5 re-derivations checked{}",
        names.len(),
        if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join(", ")) }
    );
    verdict(9, "determinism and provenance", problems.is_empty(), &detail);
}
