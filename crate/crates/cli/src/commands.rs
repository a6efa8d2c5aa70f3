//! Subcommand bodies.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use raypet_classifiers::{train_with_log, ModelBody, TrainedModel};
use raypet_core::clipio::CLIP_EXTENSION;
use raypet_core::preprocess::window_count;
use raypet_core::radar::{frames_per_clip, range_resolution};
use raypet_core::synth::{
    background_seed, clip_seed, synthesize_background, synthesize_dataset, SceneConfig, GENERATOR_VERSION,
};
use raypet_core::{write_clip, ActivityLabel, Clip, Dataset};
use raypet_eval::{compare_pipelines, evaluate, split_dataset, window_sweep, Split};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{load_clips, Manifest, ManifestEntry, MANIFEST_FILE, MANIFEST_FORMAT, MANIFEST_VERSION};
use crate::output::{check_parent, log, say, sha256_file, sha256_hex, write_atomic, write_json};

/// Range resolution published for the sensor setup, kept for comparison
/// with the value computed from the chirp bandwidth.
pub const PUBLISHED_RANGE_RESOLUTION: f64 = 0.05;

fn out_path(cfg: &RunConfig, explicit: Option<&Path>, default_name: &str) -> Result<PathBuf, CliError> {
    let p = explicit.map_or_else(|| cfg.out_dir.join(default_name), Path::to_path_buf);
    check_parent(&p)?;
    Ok(p)
}

fn with_provenance(report: &impl serde::Serialize, provenance: Value) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    if let Value::Object(o) = &mut v {
        o.insert("provenance".into(), provenance);
    }
    v
}

fn synth_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(vec![e.to_string()])
}

fn clip_bytes(clip: &Clip) -> Vec<u8> {
    let mut buf = Vec::new();
    write_clip(clip, &mut buf).expect("writing to memory");
    buf
}

pub fn gen(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let dir = out.unwrap_or(&cfg.out_dir);
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(CliError::io(parent, "parent of the output directory does not exist"));
        }
    }
    let clip_dir = dir.join("clips");
    std::fs::create_dir_all(&clip_dir).map_err(|e| CliError::io(&clip_dir, e))?;

    let noise = cfg.noise_model();
    let clips =
        synthesize_dataset(&cfg.dataset, &cfg.scene, &cfg.animal, &noise, &cfg.radar, cfg.seed).map_err(synth_err)?;
    let bg_scene = SceneConfig { seed: background_seed(cfg.seed), ..cfg.scene.clone() };
    let background =
        synthesize_background(cfg.dataset.background_duration, &bg_scene, &noise, &cfg.radar).map_err(synth_err)?;

    let write = |clip: &Clip, seed: u64| -> Result<ManifestEntry, CliError> {
        let file = format!("clips/{}.{CLIP_EXTENSION}", clip.session_id);
        let bytes = clip_bytes(clip);
        write_atomic(&dir.join(&file), &bytes)?;
        Ok(ManifestEntry {
            file,
            session_id: clip.session_id.clone(),
            label: clip.label_str().to_owned(),
            seed,
            frames: clip.frames.len(),
            sha256: sha256_hex(&bytes),
        })
    };
    let entries: Vec<ManifestEntry> = clips
        .par_iter()
        .enumerate()
        .map(|(ordinal, c)| write(c, clip_seed(cfg.seed, ordinal)))
        .collect::<Result<_, _>>()?;
    let bg_entry = write(&background, bg_scene.seed)?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        generator: GENERATOR_VERSION.into(),
        seed: cfg.seed,
        config: cfg.to_json(),
        clips: entries,
        background: Some(bg_entry),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    log("gen", json!({ "clips": clips.len(), "background": 1, "manifest": manifest_path.display().to_string() }));
    say(&format!("wrote {} clips and 1 background clip; manifest {}", clips.len(), manifest_path.display()));
    Ok(())
}

pub fn preprocess(
    cfg: &RunConfig,
    manifest: &Path,
    background: Option<&Path>,
    disable: &[String],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut pipeline = cfg.pipeline.clone();
    for stage in disable.iter().flat_map(|d| d.split(',')).filter(|s| !s.trim().is_empty()) {
        pipeline.stages.disable(stage)?;
    }
    pipeline.validate()?;
    let out = out_path(cfg, out, "dataset.rpds")?;
    let loaded = load_clips(manifest, background)?;
    if loaded.background.is_none() && pipeline.stages.background_filter {
        say("note: no background clip; background filtering is skipped");
    }
    let mut data = Dataset::build(&loaded.clips, loaded.background.as_ref(), &pipeline)?;
    let mut per_clip: BTreeMap<&str, usize> = loaded.clips.iter().map(|c| (c.session_id.as_str(), 0)).collect();
    for s in &data.samples {
        *per_clip.get_mut(s.session_id.as_str()).expect("sample of a loaded clip") += 1;
    }
    for c in &loaded.clips {
        log(
            "clip",
            json!({
                "session_id": c.session_id,
                "label": c.label_str(),
                "frames": c.frames.len(),
                "windows": per_clip[c.session_id.as_str()],
            }),
        );
    }
    data.provenance = json!({
        "manifest": manifest.display().to_string(),
        "manifest_sha256": loaded.manifest_sha256,
        "generator": loaded.manifest.generator,
        "generation_seed": loaded.manifest.seed,
        "background": background.map(|p| p.display().to_string()),
        "disabled_stages": disable,
        "run_config": cfg.to_json(),
    });
    data.write_file(&out)?;
    let counts = data.class_counts();
    log("preprocess", json!({ "samples": data.len(), "class_counts": counts, "out": out.display().to_string() }));
    say(&format!("{} windows from {} clips -> {}", data.len(), loaded.clips.len(), out.display()));
    if data.is_empty() {
        say("warning: no clip is long enough for a single window");
    }
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let data = Dataset::read_file(path)?;
    if data.is_empty() {
        return Err(CliError::Usage(format!("{}: dataset has no samples", path.display())));
    }
    Ok(data)
}

pub fn train(cfg: &RunConfig, dataset: &Path, out: Option<&Path>, log_path: Option<&Path>) -> Result<(), CliError> {
    let model_path = out_path(cfg, out, "model.json")?;
    let log_path = out_path(cfg, log_path, "train_log.jsonl")?;
    let data = read_dataset(dataset)?;
    let split = split_dataset(&data.samples, &cfg.split)?;
    let train_set = split.train_samples(&data.samples);
    let started = Instant::now();
    let mut lines = String::new();
    let mut on_epoch = |e: &raypet_classifiers::EpochStats| {
        let rec = json!({
            "epoch": e.epoch,
            "train_loss": e.train_loss,
            "validation_loss": e.validation_loss,
            "wall_time_s": started.elapsed().as_secs_f64(),
        });
        log("epoch", rec.clone());
        lines.push_str(&rec.to_string());
        lines.push('\n');
    };
    let result = train_with_log(&train_set, &cfg.classifier, cfg.seed, &mut on_epoch);
    write_atomic(&log_path, lines.as_bytes())?;
    let mut model = result?;
    model.provenance = json!({
        "dataset": dataset.display().to_string(),
        "dataset_sha256": sha256_file(dataset)?,
        "dataset_provenance": data.provenance,
        "split": cfg.split,
        "test_sessions": split.test_sessions,
        "run_config": cfg.to_json(),
    });
    write_atomic(&model_path, model.to_json().as_bytes())?;
    let best = match &model.body {
        ModelBody::Neural { best_epoch, .. } => json!(best_epoch),
        ModelBody::Svm(m) => json!({ "c": m.c, "gamma": m.gamma }),
    };
    log(
        "train",
        json!({
            "kind": model.kind,
            "train_samples": train_set.len(),
            "best": best,
            "model": model_path.display().to_string(),
            "log": log_path.display().to_string(),
        }),
    );
    say(&format!(
        "trained {} on {} windows ({} held-out sessions); model {}",
        model.kind,
        train_set.len(),
        split.test_sessions.len(),
        model_path.display()
    ));
    Ok(())
}

pub fn eval(cfg: &RunConfig, dataset: &Path, model_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let out = out_path(cfg, out, "eval.json")?;
    let model = TrainedModel::load(model_path)?;
    let data = read_dataset(dataset)?;
    let stored: Option<BTreeSet<String>> =
        model.provenance.get("test_sessions").and_then(|v| serde_json::from_value(v.clone()).ok());
    let split = match stored {
        Some(sessions) => Split::by_sessions(&data.samples, &sessions),
        None => split_dataset(&data.samples, &cfg.split)?,
    };
    let test = split.test_samples(&data.samples);
    let echo = json!({
        "run_config": cfg.to_json(),
        "model": {
            "path": model_path.display().to_string(),
            "kind": model.kind,
            "seed": model.seed,
            "config": model.config,
        },
        "dataset": dataset.display().to_string(),
        "test_sessions": split.test_sessions,
    });
    let report = evaluate(&model, &test, echo)?;
    let provenance = json!({ "dataset_sha256": sha256_file(dataset)?, "model_sha256": sha256_file(model_path)? });
    write_json(&out, &with_provenance(&report, provenance))?;
    let csv = out.with_extension("csv");
    write_atomic(&csv, report.confusion_csv().as_bytes())?;
    log(
        "eval",
        json!({
            "accuracy": report.accuracy,
            "macro_f1": report.macro_f1,
            "test_samples": report.test_samples,
            "out": out.display().to_string(),
            "confusion_csv": csv.display().to_string(),
        }),
    );
    say(&report.table());
    Ok(())
}

pub fn compare(
    cfg: &RunConfig,
    manifest: &Path,
    background: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let out = out_path(cfg, out, "comparison.json")?;
    let loaded = load_clips(manifest, background)?;
    let report = compare_pipelines(
        &loaded.clips,
        loaded.background.as_ref(),
        &cfg.pipeline,
        &cfg.classifier,
        &cfg.split,
        cfg.seed,
    )?;
    let provenance = json!({
        "manifest": manifest.display().to_string(),
        "manifest_sha256": loaded.manifest_sha256,
        "run_config": cfg.to_json(),
    });
    write_json(&out, &with_provenance(&report, provenance))?;
    for (arm, r) in [("full", &report.full), ("baseline", &report.baseline)] {
        write_atomic(&out.with_extension(format!("{arm}.csv")), r.report.confusion_csv().as_bytes())?;
    }
    log(
        "compare",
        json!({
            "full": report.full.report.accuracy,
            "baseline": report.baseline.report.accuracy,
            "delta": report.delta,
            "out": out.display().to_string(),
        }),
    );
    say(&report.table());
    Ok(())
}

/// Parses `20:4,25:5`.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let (w, s) = p.split_once(':').ok_or_else(|| CliError::Usage(format!("window pair {p:?} is not W:SW")))?;
            let num = |v: &str| {
                v.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("window pair {p:?} is not W:SW")))
            };
            Ok((num(w)?, num(s)?))
        })
        .collect()
}

pub fn sweep(
    cfg: &RunConfig,
    manifest: &Path,
    background: Option<&Path>,
    pairs: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let out = out_path(cfg, out, "sweep.json")?;
    let pairs = match pairs {
        Some(p) => parse_pairs(p)?,
        None => cfg.sweep.pairs.clone(),
    };
    let loaded = load_clips(manifest, background)?;
    let report = window_sweep(
        &loaded.clips,
        loaded.background.as_ref(),
        &cfg.pipeline,
        &pairs,
        &cfg.classifier,
        &cfg.split,
        cfg.seed,
    )?;
    let provenance = json!({
        "manifest": manifest.display().to_string(),
        "manifest_sha256": loaded.manifest_sha256,
        "run_config": cfg.to_json(),
    });
    write_json(&out, &with_provenance(&report, provenance))?;
    for e in &report.entries {
        log(
            "sweep_entry",
            json!({
                "window": e.window,
                "slide": e.slide,
                "samples": e.total_samples,
                "train_samples": e.train_samples,
                "test_samples": e.test_samples,
                "accuracy": e.report.as_ref().map(|r| r.accuracy),
                "empty": e.is_empty(),
            }),
        );
    }
    say(&report.table());
    Ok(())
}

pub fn inspect(cfg: &RunConfig, manifest: Option<&Path>, dataset: Option<&Path>) -> Result<(), CliError> {
    let violations = cfg.violations();
    let dr = range_resolution(&cfg.radar).ok();
    let frames = |d: f64| frames_per_clip(d, &cfg.radar).ok();
    let k = cfg.pipeline.effective_k().max(1);
    let windows =
        |d: f64| frames(d).map(|f| window_count(f / k, cfg.pipeline.window_size.max(1), cfg.pipeline.slide.max(1)));
    let mut info = json!({
        "range_resolution_m": dr,
        "published_range_resolution_m": PUBLISHED_RANGE_RESOLUTION,
        "max_frequency_hz": cfg.radar.max_frequency(),
        "frames_per_clip": frames(cfg.dataset.clip_duration),
        "frames_per_walking_clip": frames(cfg.dataset.walking_duration),
        "frames_per_background_clip": frames(cfg.dataset.background_duration),
        "windows_per_clip": windows(cfg.dataset.clip_duration),
        "windows_per_walking_clip": windows(cfg.dataset.walking_duration),
        "violations": violations,
    });
    let mut text = String::new();
    match dr {
        Some(dr) => text.push_str(&format!(
            "range resolution: {dr:.6} m (published nominal {PUBLISHED_RANGE_RESOLUTION} m does not follow from the bandwidth)\n"
        )),
        None => text.push_str("range resolution: undefined for this bandwidth\n"),
    }
    text.push_str(&format!(
        "chirp band: {:.4} - {:.4} GHz\n",
        cfg.radar.start_frequency / 1e9,
        cfg.radar.max_frequency() / 1e9
    ));
    if let (Some(f), Some(w)) = (frames(cfg.dataset.clip_duration), windows(cfg.dataset.clip_duration)) {
        text.push_str(&format!(
            "frames per {} s clip: {f}; after aggregation x{k}: {}; windows (W={}, SW={}): {w}\n",
            cfg.dataset.clip_duration,
            f / k,
            cfg.pipeline.window_size,
            cfg.pipeline.slide
        ));
    }
    if let Some(path) = manifest {
        let m = Manifest::read(path)?;
        let mut per_label: BTreeMap<String, usize> = BTreeMap::new();
        for e in &m.clips {
            *per_label.entry(e.label.clone()).or_default() += 1;
        }
        text.push_str(&format!("manifest: {} clips {:?}, seed {}\n", m.clips.len(), per_label, m.seed));
        info["manifest"] =
            json!({ "clips": m.clips.len(), "per_label": per_label, "seed": m.seed, "generator": m.generator });
    }
    if let Some(path) = dataset {
        let d = Dataset::read_file(path)?;
        let counts: BTreeMap<&str, usize> =
            ActivityLabel::ALL.iter().map(|l| l.as_str()).zip(d.class_counts()).collect();
        text.push_str(&format!("dataset: {} windows {:?}, dims {:?}, W {}\n", d.len(), counts, d.dims(), d.window()));
        info["dataset"] =
            json!({ "samples": d.len(), "class_counts": counts, "pipeline": d.pipeline, "provenance": d.provenance });
    }
    if violations.is_empty() {
        text.push_str("validation: ok\n");
    } else {
        text.push_str("validation: failed\n");
        for v in &violations {
            text.push_str(&format!("  {v}\n"));
        }
    }
    log("inspect", info);
    say(&text);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(violations))
    }
}
