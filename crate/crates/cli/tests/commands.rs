use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn cgpt(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_cgpt")).args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "cgpt {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// A standard dictionary built once and shared by the tests.
fn shared_dict() -> &'static PathBuf {
    static DICT: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DICT
        .get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            cgpt(&["build-dict", "--out", "dict.json"], dir.path());
            let path = dir.path().join("dict.json");
            (dir, path)
        })
        .1
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn build_dict_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    cgpt(&["build-dict", "--out", "again.json"], dir.path());
    let text = read(&dir.path().join("again.json"));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let ids: Vec<&str> = json["entries"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b", "5a", "5b"]);
    assert_eq!(text, read(shared_dict()));
}

#[test]
fn noiseless_experiment_is_certain() {
    let dir = tempfile::tempdir().unwrap();
    let dict = shared_dict().to_str().unwrap();
    let out = cgpt(
        &["experiment", "--dict", dict, "--shapes", "1a,4b", "--sigma", "0", "--desk", "--out", "f.csv"],
        dir.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("identification probability 1").count(), 2, "{stdout}");
    let csv = read(&dir.path().join("f.csv"));
    assert!(csv.starts_with("true_id,sigma0,selected_id,frequency"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn experiment_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let dict = shared_dict().to_str().unwrap();
    let run = |seed: &str, name: &str| {
        cgpt(
            &["experiment", "--dict", dict, "--sigma", "0.3", "--trials", "40", "--seed", seed, "--desk", "--out", name],
            dir.path(),
        );
        read(&dir.path().join(name))
    };
    assert_eq!(run("3", "a.csv"), run("3", "b.csv"));
    assert_eq!(run("3", "c.csv"), {
        let threads = Command::new(env!("CARGO_BIN_EXE_cgpt"))
            .args(["experiment", "--dict", dict, "--sigma", "0.3", "--trials", "40", "--seed", "3", "--desk", "--out", "d.csv"])
            .env("CGPT_THREADS", "1")
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(threads.status.success());
        read(&dir.path().join("d.csv"))
    });
}

#[test]
fn low_noise_identification_at_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let dict = shared_dict().to_str().unwrap();
    let out = cgpt(
        &["experiment", "--dict", dict, "--target", "1a", "--sigma", "0.1", "--trials", "500", "--out", "f.csv"],
        dir.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let p: f64 = stdout.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(p >= 0.95, "{stdout}");
}

#[test]
fn robustness_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let dict = shared_dict().to_str().unwrap();
    let run = |name: &str| {
        cgpt(&["robustness", "--dict", dict, "--trials", "20", "--seed", "2", "--desk", "--out", name], dir.path());
        read(&dir.path().join(name))
    };
    let first = run("r1.csv");
    assert_eq!(first, run("r2.csv"));
    assert!(first.starts_with("order,relative_error,sigma0,trials"));
    assert_eq!(first.lines().count(), 11);
}

#[test]
fn simulate_reconstruct_match_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let dict = shared_dict().to_str().unwrap();
    cgpt(&["simulate", "--dict", dict, "--shapes", "3b", "--desk", "--out", "m.csv"], dir.path());
    assert!(dir.path().join("m.json").exists());
    cgpt(&["reconstruct", "--msr", "m.csv", "--out", "rec.json"], dir.path());
    let out = cgpt(&["match", "--dict", dict, "--cgpt", "rec.json"], dir.path());
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let best = result["best"].as_u64().unwrap() as usize;
    assert_eq!(result["ids"][best], "3b");
}

#[test]
fn cgpt_command_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = cgpt(&["cgpt", "--shapes", "2a", "--order", "3"], dir.path());
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["cgpt"]["order"], 3);
    assert_eq!(record["descriptors"]["I2"][0][0], 1.0);
}

#[test]
fn missing_dictionary_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cgpt"))
        .args(["experiment", "--dict", "nope.json", "--desk"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("build-dict"), "{stderr}");
}
