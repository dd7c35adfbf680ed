use std::path::Path;
use std::process::{Command, Output};

fn wavesheet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavesheet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("case.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const FLAT: &str = "n_points = 32\ninit_amplitude = 0.0\ndt = 0.01\nt_end = 2.0\n";

#[test]
fn flat_run_succeeds_with_vanishing_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let out_dir = dir.path().join("out");
    let o = wavesheet(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let csv = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..6], ["t", "L", "min_a", "chord_arc", "closure_defect", "E_total"]);
    let cols: Vec<usize> = ["residual_theta", "residual_u", "residual_as"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 201);
    for row in &rows[1..200] {
        for &c in &cols {
            assert!(row[c] <= 1e-10, "column {} = {}", header[c], row[c]);
        }
    }
    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.jsonl")).unwrap();
    assert_eq!(trajectory.lines().count(), 21);
}

#[test]
fn identical_inputs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_points = 32\ninit_amplitude = 0.01\ndt = 0.01\nt_end = 0.3\n");
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let o = wavesheet(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(out_dir.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn steep_wave_with_strict_chord_arc_floor_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_points = 64\ninit_amplitude = 0.8\nchord_arc_floor = 0.99\n");
    let o = wavesheet(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("chord-arc"), "{stderr}");
    assert!(stderr.contains("t = 0.000000"), "{stderr}");
}

#[test]
fn bad_configuration_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_points = 64\ntime_step = 0.1\n");
    let o = wavesheet(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = wavesheet(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = wavesheet(&["run", "--n", "33", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = wavesheet(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_injected_defect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = wavesheet(&["verify", "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("verify.json")).unwrap();
    assert!(report.contains("\"pass\": true"));

    let o = wavesheet(&["verify", "--out", out, "--n", "32", "--seed", "5", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));

    let o = wavesheet(&["verify", "--out", out, "--mutate", "flip-hilbert-sign", "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("\"name\": \"hilbert\""));
}

#[test]
fn audit_accepts_runs_and_rejects_corrupt_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let out = dir.path().to_str().unwrap();
    assert_eq!(wavesheet(&["run", "--config", &cfg, "--out", out, "--quiet"]).status.code(), Some(0));

    let o = wavesheet(&["audit", "--config", &cfg, "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("audit.json")).unwrap();
    assert!(report.contains("\"pass\": true"));
    assert!(dir.path().join("audit.csv").exists());

    let traj = dir.path().join("trajectory.jsonl");
    let text = std::fs::read_to_string(&traj).unwrap();
    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, &text[..text.len() - 40]).unwrap();
    let o = wavesheet(&["audit", "--config", &cfg, "--out", out, corrupt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&corrupt, text.replacen("\"theta\":[", "\"theta\":[1.0,", 1)).unwrap();
    let o = wavesheet(&["audit", "--config", &cfg, "--out", out, corrupt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let short: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    std::fs::write(&corrupt, short).unwrap();
    let o = wavesheet(&["audit", "--config", &cfg, "--out", out, corrupt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = wavesheet(&["audit", "--config", &cfg, "--out", out, "/nonexistent/trajectory.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_can_start_from_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), "n_points = 32\ninit_amplitude = 0.01\nt_end = 0.0\n");
    assert_eq!(wavesheet(&["run", "--config", &cfg, "--out", out, "--quiet"]).status.code(), Some(0));
    let line = std::fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    std::fs::write(dir.path().join("start.json"), line.trim()).unwrap();

    let cfg = write_config(
        dir.path(),
        "n_points = 32\ninit_snapshot = \"start.json\"\nt_end = 0.1\nsnapshot_path = \"resumed.jsonl\"\n",
    );
    let o = wavesheet(&["run", "--config", &cfg, "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let resumed = std::fs::read_to_string(dir.path().join("resumed.jsonl")).unwrap();
    assert_eq!(resumed.lines().count(), 2);
}
