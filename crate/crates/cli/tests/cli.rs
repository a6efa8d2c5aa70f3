use std::path::{Path, PathBuf};
use std::process::Command;

use raypet::config::{ConfigSources, RunConfig};
use raypet_core::Dataset;
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn events(&self, name: &str) -> Vec<Value> {
        self.stdout
            .lines()
            .filter_map(|l| serde_json::from_str::<Value>(l).ok())
            .filter(|v| v["event"] == name)
            .collect()
    }

    fn ok(self) -> Self {
        assert_eq!(self.code, 0, "stderr:\n{}", self.stderr);
        self
    }
}

fn raypet_with_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_raypet"));
    cmd.current_dir(dir).args(args).env_remove("RAYPET_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn raypet(dir: &Path, args: &[&str]) -> Run {
    raypet_with_env(dir, args, &[])
}

/// Three 2 s clips per class, 2x4x4 grids, W = SW = 5, one-cell SVM grid.
const TINY: &str = r#"
seed = 3

[dataset]
clip_duration = 2.0
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
kind = "svm_pca"

[classifier.svm]
c_grid = [1.0]
gamma_grid = ["inverse_dim"]
"#;

fn tiny_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

fn gen_tiny(dir: &Path) -> PathBuf {
    raypet(dir, &["--config", "tiny.toml", "gen"]).ok();
    dir.join("out/manifest.json")
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&read(path)).unwrap()
}

#[test]
fn shipped_default_config_matches_compiled_defaults() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let text = std::fs::read_to_string(&file).unwrap();
    let parsed: RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed, RunConfig::default());
    let loaded = RunConfig::load(&ConfigSources { file: Some(&file), ..Default::default() }).unwrap();
    assert_eq!(loaded, RunConfig::default());
    assert!(loaded.violations().is_empty());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(raypet(dir.path(), &["frobnicate"]).code, 2);
    assert_eq!(raypet(dir.path(), &["train"]).code, 2);
    assert_eq!(raypet(dir.path(), &["--help"]).code, 0);
}

#[test]
fn missing_output_parent_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = raypet(dir.path(), &["gen", "--out", "no/such/place"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("no/such"), "{}", r.stderr);
    assert!(!dir.path().join("no").exists());
}

#[test]
fn empty_manifest_is_a_usage_error() {
    let dir = tiny_dir();
    let manifest = gen_tiny(dir.path());
    let mut m = json(&manifest);
    m["clips"] = Value::Array(Vec::new());
    std::fs::write(&manifest, serde_json::to_vec(&m).unwrap()).unwrap();
    let r = raypet(dir.path(), &["--config", "tiny.toml", "preprocess", "--manifest", "out/manifest.json"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("no clips"));
}

#[test]
fn invalid_config_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let r = raypet(dir.path(), &["--set", "radar.bandwidth_hz=-1", "--set", "pipeline.dbscan_eps=0", "gen"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("bandwidth") && r.stderr.contains("dbscan_eps"), "{}", r.stderr);
    let r = raypet(dir.path(), &["--set", "pipeline.no_such_key=1", "gen"]);
    assert_eq!(r.code, 2);
    let r = raypet(dir.path(), &["--set", "radar.bandwidth_hz=-1", "inspect"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("validation: failed"));
}

#[test]
fn overrides_and_seed_sources_reach_the_config() {
    let dir = tiny_dir();
    let r = raypet(
        dir.path(),
        &["--config", "tiny.toml", "--set", "pipeline.window_size=7", "--set", "noise.level=\"high\"", "inspect"],
    )
    .ok();
    let cfg = &r.events("config")[0]["config"];
    assert_eq!(cfg["pipeline"]["window_size"], 7);
    assert_eq!(cfg["pipeline"]["slide"], 5);
    assert_eq!(cfg["noise"]["level"], "high");
    assert_eq!(cfg["seed"], 3);

    let r = raypet_with_env(dir.path(), &["--config", "tiny.toml", "inspect"], &[("RAYPET_SEED", "42")]).ok();
    assert_eq!(r.events("config")[0]["config"]["seed"], 42);
    assert_eq!(r.events("config")[0]["config"]["split"]["seed"], 42);
    let r = raypet_with_env(dir.path(), &["--config", "tiny.toml", "--seed", "7", "inspect"], &[("RAYPET_SEED", "42")])
        .ok();
    assert_eq!(r.events("config")[0]["config"]["seed"], 7);
}

#[test]
fn inspect_reports_the_range_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let r = raypet(dir.path(), &["inspect"]).ok();
    let info = &r.events("inspect")[0];
    assert!((info["range_resolution_m"].as_f64().unwrap() - 0.061438).abs() <= 1e-6);
    assert_eq!(info["published_range_resolution_m"], 0.05);
    assert_eq!(info["frames_per_clip"], 300);
    assert_eq!(info["windows_per_clip"], 13);
    assert!(r.stderr.contains("0.061438"));
    assert!(r.stderr.contains("validation: ok"));
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tiny_dir();
    raypet(dir.path(), &["--config", "tiny.toml", "gen", "--out", "a"]).ok();
    raypet(dir.path(), &["--config", "tiny.toml", "gen", "--out", "b"]).ok();
    let m = json(dir.path().join("a/manifest.json"));
    let files: Vec<String> = m["clips"]
        .as_array()
        .unwrap()
        .iter()
        .chain(std::iter::once(&m["background"]))
        .map(|e| e["file"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(files.len(), 16);
    for f in files.iter().map(String::as_str).chain(["manifest.json"]) {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let r = raypet(dir.path(), &["--config", "tiny.toml", "--seed", "4", "gen", "--out", "c"]).ok();
    assert_eq!(r.events("gen")[0]["clips"], 15);
    assert_ne!(
        read(dir.path().join("a/clips/eating-000.clip.jsonl")),
        read(dir.path().join("c/clips/eating-000.clip.jsonl"))
    );
}

#[test]
fn tampered_clip_fails_its_checksum() {
    let dir = tiny_dir();
    gen_tiny(dir.path());
    let clip = dir.path().join("out/clips/lying-001.clip.jsonl");
    let mut bytes = read(&clip);
    bytes.push(b'\n');
    std::fs::write(&clip, bytes).unwrap();
    let r = raypet(dir.path(), &["--config", "tiny.toml", "preprocess", "--manifest", "out/manifest.json"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("lying-001") && r.stderr.contains("checksum"), "{}", r.stderr);
}

#[test]
fn default_clips_give_thirteen_windows() {
    let dir = tempfile::tempdir().unwrap();
    let one = "dataset.clips_per_label={eating=1,lying=1,sitting=1,standing=1,walking=1}";
    raypet(dir.path(), &["--set", one, "gen"]).ok();
    let r = raypet(dir.path(), &["--set", one, "preprocess", "--manifest", "out/manifest.json"]).ok();
    for e in r.events("clip") {
        let expected = if e["label"] == "walking" { 5 } else { 13 };
        assert_eq!(e["frames"], if e["label"] == "walking" { 150 } else { 300 });
        assert_eq!(e["windows"], expected, "{e}");
    }
    assert_eq!(r.events("preprocess")[0]["samples"], 4 * 13 + 5);
}

#[test]
fn disabling_stages_gives_the_baseline_dataset() {
    let dir = tiny_dir();
    gen_tiny(dir.path());
    let base = ["--config", "tiny.toml", "preprocess", "--manifest", "out/manifest.json"];
    let full = raypet(dir.path(), &[&base[..], &["--out", "out/full.rpds"]].concat()).ok();
    let plain = raypet(
        dir.path(),
        &[&base[..], &["--disable", "noise_removal,aggregation", "--out", "out/plain.rpds"]].concat(),
    )
    .ok();
    assert_eq!(full.events("preprocess")[0]["samples"], 15 * 6);
    assert_eq!(plain.events("preprocess")[0]["samples"], 15 * 12);
    let via_set = raypet(
        dir.path(),
        &[
            &base[..],
            &[
                "--set",
                "pipeline.stages={background_filter=false,static_clutter=false,dbscan=false,aggregation=false}",
                "--out",
                "out/set.rpds",
            ],
        ]
        .concat(),
    )
    .ok();
    assert_eq!(via_set.events("preprocess")[0]["samples"], 15 * 12);
    let samples = |f: &str| Dataset::read_file(&dir.path().join(f)).unwrap().samples;
    assert_eq!(samples("out/plain.rpds"), samples("out/set.rpds"));
    assert_ne!(raypet(dir.path(), &[&base[..], &["--disable", "nonsense"]].concat()).code, 0);
}

#[test]
fn train_eval_compare_and_sweep_end_to_end() {
    let dir = tiny_dir();
    gen_tiny(dir.path());
    let cfg = ["--config", "tiny.toml"];
    raypet(dir.path(), &[&cfg[..], &["preprocess", "--manifest", "out/manifest.json"]].concat()).ok();

    let mlp = ["--set", "classifier.kind=\"mlp\"", "--set", "classifier.mlp.training.epochs=4"];
    raypet(dir.path(), &[&cfg[..], &mlp[..], &["train", "--dataset", "out/dataset.rpds"]].concat()).ok();
    let log = std::fs::read_to_string(dir.path().join("out/train_log.jsonl")).unwrap();
    let lines: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty() && lines.len() <= 4);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["epoch"], i + 1);
        for k in ["train_loss", "validation_loss", "wall_time_s"] {
            assert!(l[k].as_f64().unwrap().is_finite(), "{k} in {l}");
        }
    }
    let model = json(dir.path().join("out/model.json"));
    assert_eq!(model["kind"], "mlp");
    assert_eq!(model["provenance"]["test_sessions"].as_array().unwrap().len(), 5);

    let eval = raypet(
        dir.path(),
        &[&cfg[..], &["eval", "--dataset", "out/dataset.rpds", "--model", "out/model.json"]].concat(),
    )
    .ok();
    let report = json(dir.path().join("out/eval.json"));
    assert_eq!(report["test_samples"], 5 * 6);
    assert_eq!(eval.events("eval")[0]["accuracy"], report["accuracy"]);
    let csv = std::fs::read_to_string(dir.path().join("out/eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("true\\predicted,eating,lying,sitting,standing,walking"));

    let r = raypet(dir.path(), &[&cfg[..], &["compare", "--manifest", "out/manifest.json"]].concat()).ok();
    let cmp = json(dir.path().join("out/comparison.json"));
    assert_eq!(cmp["full"]["total_samples"], 15 * 6);
    assert_eq!(cmp["baseline"]["total_samples"], 15 * 12);
    assert_eq!(cmp["full"]["pipeline"]["stages"]["dbscan"], true);
    assert_eq!(cmp["baseline"]["pipeline"]["stages"]["dbscan"], false);
    assert_eq!(r.events("compare")[0]["delta"], cmp["delta"]);
    assert!(dir.path().join("out/comparison.full.csv").exists());
    assert!(dir.path().join("out/comparison.baseline.csv").exists());
    assert!(cmp["published"]["note"].as_str().unwrap().contains("not reproducible"));

    let r = raypet(
        dir.path(),
        &[&cfg[..], &["sweep", "--manifest", "out/manifest.json", "--pairs", "5:5,10:5,40:5"]].concat(),
    )
    .ok();
    let entries = r.events("sweep_entry");
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[0]["samples"], 15 * 6);
    assert_eq!(entries[1]["samples"], 15 * 5);
    assert_eq!(entries[2]["empty"], true);
    assert_eq!(
        raypet(dir.path(), &[&cfg[..], &["sweep", "--manifest", "out/manifest.json", "--pairs", "5"]].concat()).code,
        2
    );
}

#[test]
fn divergent_training_exits_with_its_own_code() {
    let dir = tiny_dir();
    gen_tiny(dir.path());
    let cfg = ["--config", "tiny.toml"];
    raypet(dir.path(), &[&cfg[..], &["preprocess", "--manifest", "out/manifest.json"]].concat()).ok();
    let r = raypet(
        dir.path(),
        &[
            &cfg[..],
            &[
                "--set",
                "classifier.kind=\"mlp\"",
                "--set",
                "classifier.mlp.training.learning_rate=1e307",
                "--set",
                "classifier.mlp.training.epochs=30",
                "train",
                "--dataset",
                "out/dataset.rpds",
            ],
        ]
        .concat(),
    );
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(!dir.path().join("out/model.json").exists());
}
