use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relnet_cli::manifest::load_manifest;
use serde_json::{json, Value};

fn relnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relnet"))
        .args(args)
        .env_remove("RELNET_OUT")
        .output()
        .expect("binary runs")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny_parametric() -> Value {
    json!({
        "experiment": "parametric-similarity",
        "name": "tiny",
        "master_seed": 3,
        "stimuli": { "grid": 4, "canvas": 16, "eval_pairs": 16 },
        "model": { "hidden_dims": [8], "embedding_dim": 4, "head_hidden_dims": [8] },
        "train": { "replicates": 1, "epochs": 2, "batch_size": 16, "eval_interval": 2 }
    })
}

fn tiny_oddball() -> Value {
    json!({
        "experiment": "oddball",
        "name": "tiny-oddball",
        "stimuli": { "canvas": 16, "train_trials": 40, "eval_trials_per_category": 20 },
        "model": { "hidden_dims": [16], "embedding_dim": 8, "projection_hidden_dims": [8], "projection_dim": 8 },
        "train": { "epochs": 1, "batch_size": 8, "eval_interval": 5, "probe_trials": 8 },
        "analysis": { "decoding": { "n_folds": 5, "max_components": 6, "classifier_steps": 20 } }
    })
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn shipped_configs_validate() {
    for name in ["parametric.json", "oddball.json", "categorical.json"] {
        let o = relnet(&["validate", configs_dir().join(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn validate_reports_every_violation_with_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_parametric();
    cfg["stimuli"]["grid"] = json!(2);
    cfg["train"]["batch_size"] = json!(0);
    cfg["arms"] = json!(["relational", "contrastive"]);
    let p = write_json(tmp.path(), "bad.json", &cfg);
    let o = relnet(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("stimuli.grid") && err.contains("grid >= 4"), "{err}");
    assert!(err.contains("train.batch_size"), "{err}");
    assert!(err.contains("arms"), "{err}");
}

#[test]
fn validate_rejects_unknown_keys_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_parametric();
    cfg["train"]["optimizer"] = json!({ "learning_rte": 0.01 });
    let p = write_json(tmp.path(), "typo.json", &cfg);
    let o = relnet(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train.optimizer.learning_rte: unknown key"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_wrong_types_and_missing_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_parametric();
    cfg["train"]["epochs"] = json!(2.5);
    let p = write_json(tmp.path(), "float.json", &cfg);
    let o = relnet(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train.epochs: expected an integer"), "{}", stderr(&o));

    let p = write_json(tmp.path(), "nokind.json", &json!({ "name": "x" }));
    let o = relnet(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment: required"));
}

#[test]
fn run_writes_manifest_and_rerun_is_a_no_op() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "tiny.json", &tiny_parametric());
    let out = tmp.path().join("run");
    let args = ["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = relnet(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let m = load_manifest(&out.join("manifest.json")).unwrap();
    assert!(m.is_complete());
    m.verify(&out).unwrap();
    assert_eq!(m.arms.len(), 2);
    for arm in ["relational", "feedforward"] {
        let rec = m.arms.iter().find(|a| a.arm == arm).unwrap();
        assert_eq!(rec.checkpoints, vec![format!("{arm}/r0/model.ckpt")]);
        assert_eq!(rec.trace, format!("{arm}/r0/trace.csv"));
        assert_eq!(m.artifacts.iter().filter(|a| a.role == "pca" && a.path.starts_with(arm)).count(), 1);
    }
    assert_eq!(m.artifact("checkpoint").count(), 2);
    assert_eq!(m.artifact("trace").count(), 2);
    // Every default is materialized in the recorded config.
    assert_eq!(m.config["train"]["optimizer"]["learning_rate"], json!(0.001));

    let before = fs::read(out.join("manifest.json")).unwrap();
    let o = relnet(&args);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("up to date"));
    assert_eq!(fs::read(out.join("manifest.json")).unwrap(), before);
}

#[test]
fn different_config_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let a = write_json(tmp.path(), "a.json", &tiny_parametric());
    let mut changed = tiny_parametric();
    changed["train"]["epochs"] = json!(1);
    changed["train"]["eval_interval"] = json!(1);
    let b = write_json(tmp.path(), "b.json", &changed);
    assert!(relnet(&["run", a.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());

    let o = relnet(&["run", b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));

    let o = relnet(&["run", b.to_str().unwrap(), "--out", out.to_str().unwrap(), "--force"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = load_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(m.config["train"]["epochs"], json!(1));
    m.verify(&out).unwrap();
}

#[test]
fn seed_override_changes_seeds_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "tiny.json", &tiny_parametric());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(relnet(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    let o = relnet(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed-override", "99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ma = load_manifest(&a.join("manifest.json")).unwrap();
    let mb = load_manifest(&b.join("manifest.json")).unwrap();
    assert_eq!(ma.config["master_seed"], json!(3));
    assert_eq!(mb.config["master_seed"], json!(99));
    assert_ne!(ma.arms[0].seed, mb.arms[0].seed);
    assert_ne!(read(&a, "relational/r0/trace.csv"), read(&b, "relational/r0/trace.csv"));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "tiny.json", &tiny_parametric());
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_relnet"))
        .args(["run", cfg.to_str().unwrap()])
        .env("RELNET_OUT", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("tiny").join("manifest.json").is_file());
}

#[test]
fn report_is_pure_and_checks_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "tiny.json", &tiny_parametric());
    let out = tmp.path().join("run");
    assert!(relnet(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());

    let manifest = out.join("manifest.json");
    let o = relnet(&["report", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(read(&out, "report/summary.txt")).unwrap();
    for needle in ["relational", "feedforward", "Steps to threshold", "angle"] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }
    let first: Vec<Vec<u8>> = ["summary.txt", "runs.csv", "ood_comparison.csv"]
        .iter()
        .map(|f| read(&out, &format!("report/{f}")))
        .collect();
    assert!(relnet(&["report", out.to_str().unwrap()]).status.success());
    for (f, bytes) in ["summary.txt", "runs.csv", "ood_comparison.csv"].iter().zip(&first) {
        assert_eq!(&read(&out, &format!("report/{f}")), bytes, "{f} changed");
    }
    load_manifest(&manifest).unwrap().verify(&out).unwrap();

    let trace = out.join("feedforward/r0/trace.csv");
    let mut bytes = fs::read(&trace).unwrap();
    bytes.extend_from_slice(b"tampered\n");
    fs::write(&trace, bytes).unwrap();
    let o = relnet(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    assert!(err.contains("checksum mismatch") && err.contains("trace.csv"), "{err}");

    fs::remove_file(&trace).unwrap();
    let o = relnet(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn corrupt_run_is_rebuilt_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "tiny.json", &tiny_parametric());
    let out = tmp.path().join("run");
    let args = ["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert!(relnet(&args).status.success());
    let good = read(&out, "relational/r0/trace.csv");
    fs::write(out.join("relational/r0/trace.csv"), "x").unwrap();
    let o = relnet(&args);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("completed"));
    assert_eq!(read(&out, "relational/r0/trace.csv"), good);
}

#[test]
fn divergence_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_parametric();
    cfg["train"]["optimizer"] = json!({ "learning_rate": 1e300 });
    let p = write_json(tmp.path(), "boom.json", &cfg);
    let o = relnet(&["run", p.to_str().unwrap(), "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    assert!(!tmp.path().join("run/manifest.json").exists());
}

#[test]
fn oddball_run_reports_category_table_and_slope_sign() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("profile.csv"),
        "category,error_rate\nsquare,0.05\nrectangle,0.1\nrhombus,0.15\nkite,0.3\nirregular,0.4\n",
    )
    .unwrap();
    let mut cfg = tiny_oddball();
    cfg["analysis"]["external_profiles"] = json!([{ "name": "reference", "path": "profile.csv" }]);
    let p = write_json(tmp.path(), "odd.json", &cfg);
    let out = tmp.path().join("run");
    let o = relnet(&["run", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = load_manifest(&out.join("manifest.json")).unwrap();
    // Three fractional checkpoints plus the final model per arm.
    assert_eq!(m.artifact("checkpoint").count(), 8);
    assert_eq!(m.artifact("regularity").count(), 6);
    assert_eq!(m.artifact("scatter").count(), 2);
    let scatter = String::from_utf8(read(&out, "relational/scatter.csv")).unwrap();
    assert!(scatter.starts_with("pc1,pc2,label\n"));
    assert_eq!(scatter.lines().count(), 1 + 20 * 10 * 5);

    assert!(relnet(&["report", out.to_str().unwrap()]).status.success());
    let text = String::from_utf8(read(&out, "report/summary.txt")).unwrap();
    assert!(text.contains("error rate by category"));
    assert!(text.contains("square"));
    assert!(text.contains("slope") && (text.contains("(positive)") || text.contains("(negative)") || text.contains("(zero)")));
    assert!(text.contains("profile reference"));
    let table = String::from_utf8(read(&out, "report/error_rates.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 3 * 10);
}

#[test]
fn missing_profile_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny_oddball();
    cfg["analysis"]["external_profiles"] = json!([{ "name": "x", "path": "nowhere.csv" }]);
    let p = write_json(tmp.path(), "odd.json", &cfg);
    let o = relnet(&["run", p.to_str().unwrap(), "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn gen_stimuli_exports_each_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let param = write_json(tmp.path(), "p.json", &tiny_parametric());
    let o = relnet(&["gen-stimuli", param.to_str().unwrap(), "--out", tmp.path().join("p").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("p/stimuli.csv")).unwrap();
    assert!(csv.starts_with("id,size,luminosity,split,image_path\n"));
    assert!(tmp.path().join("p/images/stim_0000.pgm").is_file());

    let odd = write_json(tmp.path(), "o.json", &tiny_oddball());
    assert!(relnet(&["gen-stimuli", odd.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]).status.success());
    let trials = fs::read_to_string(tmp.path().join("o/trials.csv")).unwrap();
    // Evaluation trials: 20 per category over the 10 catalog shapes.
    assert_eq!(trials.lines().count(), 1 + 200 * 6);

    let cat = configs_dir().join("categorical.json");
    assert!(relnet(&["gen-stimuli", cat.to_str().unwrap(), "--out", tmp.path().join("c").to_str().unwrap()]).status.success());
    let stimuli = fs::read_to_string(tmp.path().join("c/stimuli.csv")).unwrap();
    assert_eq!(stimuli.lines().count(), 1 + 900);
    assert_eq!(stimuli.lines().filter(|l| l.ends_with(",train")).count(), 30);
}

#[test]
fn defaults_round_trip_through_validate() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["parametric-similarity", "oddball", "categorical"] {
        let o = relnet(&["defaults", kind]);
        assert!(o.status.success());
        let p = tmp.path().join(format!("{kind}.json"));
        fs::write(&p, &o.stdout).unwrap();
        let o = relnet(&["validate", p.to_str().unwrap()]);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
    }
}
