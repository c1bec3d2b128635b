use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmwald(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmwald"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_field(text: &str, name: &str) -> f64 {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    row[k].parse().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn equilibrium_csv_and_json() {
    let csv = stdout(&mmwald(&["equilibrium"]));
    assert!((csv_field(&csv, "gamma_star") - 0.536357).abs() < 1e-4);
    assert!((csv_field(&csv, "delta_star") - 2.19613).abs() < 1e-3);
    let json: serde_json::Value = serde_json::from_str(&stdout(&mmwald(&["equilibrium", "--format", "json"]))).unwrap();
    assert_eq!(json["result"]["eta"], 1.0);
    assert!(json["metadata"]["version"].is_string());
}

#[test]
fn progress_goes_to_stderr_only() {
    let out = mmwald(&["profile", "--reps", "50"]);
    let text = stdout(&out);
    assert!(text.starts_with("gap,mean_regret,"));
    assert!(!text.contains("profile:"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("profile: 11/11"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "# cost of 2 and unequal sds\n[analytics]\nc = 2.0\nsigma1 = 1.5\nsigma0 = 0.5\n",
    );
    let csv = stdout(&mmwald(&["equilibrium", "--config", &cfg]));
    assert!((csv_field(&csv, "eta") - 2f64.cbrt()).abs() < 1e-12);

    let cfg = write_config(dir.path(), "[campaign]\nreps = 7\nseed = 5\ngrid = [1.0]\n");
    let out = stdout(&mmwald(&[
        "profile", "--config", &cfg, "--seed", "9", "--format", "json",
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["metadata"]["seed"], 9);
    assert_eq!(json["metadata"]["spec"]["reps"], 7);
}

#[test]
fn profile_files_are_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2", "8"] {
        let path = dir.path().join(format!("p{threads}.csv"));
        let p = path.to_str().unwrap();
        let out = mmwald(&[
            "profile",
            "--n",
            "500",
            "--reps",
            "300",
            "--seed",
            "3",
            "--threads",
            threads,
            "--out",
            p,
        ]);
        assert!(out.status.success());
        outputs.push((
            fs::read(&path).unwrap(),
            fs::read(dir.path().join(format!("p{threads}.reference.csv"))).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn scalar_reports() {
    let gain = stdout(&mmwald(&["gain", "--reps", "2000"]));
    assert!((csv_field(&gain, "ratio") - 0.6).abs() < 0.005);
    let general = stdout(&mmwald(&["general-cost"]));
    assert!((csv_field(&general, "gamma_star") - csv_field(&general, "constant_cost_gamma_star")).abs() < 1e-5);
    let lfp = stdout(&mmwald(&["lfp", "--reps", "500"]));
    assert!(lfp.lines().nth(1).unwrap().starts_with("pooled,"));
    let bai = stdout(&mmwald(&["bai", "--reps", "200", "--dt", "0.01"]));
    assert_eq!(bai.lines().count(), 12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        mmwald(&["equilibrium", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );

    let bad_key = write_config(dir.path(), "[analytics]\ncost = 1.0\n");
    assert_eq!(mmwald(&["equilibrium", "--config", &bad_key]).status.code(), Some(2));

    let bad_value = write_config(dir.path(), "[analytics]\nc = -1.0\n");
    assert_eq!(mmwald(&["equilibrium", "--config", &bad_value]).status.code(), Some(2));

    assert_eq!(mmwald(&["profile", "--reps", "0"]).status.code(), Some(2));
    assert_eq!(mmwald(&["nonsense"]).status.code(), Some(2));

    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("out.csv");
    assert_eq!(
        mmwald(&["equilibrium", "--out", out.to_str().unwrap()]).status.code(),
        Some(4)
    );
}
