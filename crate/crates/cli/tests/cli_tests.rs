//! End-to-end checks of the shipped binary: exit codes, artifact sets, and
//! the render path down to exact PGM bytes. Every case runs the real
//! executable in a scratch directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_args(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_latticewave"));
    for a in args {
        cmd.arg(a.as_ref());
    }
    cmd.output().unwrap()
}

fn run_config(dir: &Path, config: serde_json::Value) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let out = dir.join("artifacts");
    run_args(&[&"run", &path, &"--out", &out])
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process was signalled")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn square_eigen_config() -> serde_json::Value {
    json!({
        "geometry": {"kind": "square", "n": 5, "spacing": 1.0},
        "task": {"name": "eigen", "count": 3}
    })
}

#[test]
fn eigen_run_writes_the_artifact_set() {
    let dir = scratch("cli_eigen");
    let out = run_config(&dir, square_eigen_config());
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let artifacts = dir.join("artifacts");
    for name in ["graph.json", "eigen.json", "mode_000.csv", "mode_001.csv", "mode_002.csv"] {
        assert!(artifacts.join(name).exists(), "missing {name}");
    }
    let eigen: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(artifacts.join("eigen.json")).unwrap()).unwrap();
    let modes = eigen.as_array().expect("mode array");
    assert_eq!(modes.len(), 3);
    assert!(modes[0]["k"].as_f64().unwrap() > 0.0);

    let csv = fs::read_to_string(artifacts.join("mode_000.csv")).unwrap();
    assert!(csv.starts_with("id,x,y,value\n"));
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = scratch("cli_unknown_keys");
    let mut with_extra = square_eigen_config();
    with_extra["comment"] = json!("drop me");
    assert_eq!(code(&run_config(&dir, with_extra)), 2);

    let mut task_extra = square_eigen_config();
    task_extra["task"]["tolerance"] = json!(1e-8);
    assert_eq!(code(&run_config(&dir, task_extra)), 2);

    let mut bad_task = square_eigen_config();
    bad_task["task"] = json!({"name": "diagonalize", "count": 3});
    assert_eq!(code(&run_config(&dir, bad_task)), 2);

    let mut bad_kind = square_eigen_config();
    bad_kind["geometry"]["kind"] = json!("hexagonal");
    assert_eq!(code(&run_config(&dir, bad_kind)), 2);
}

#[test]
fn unreadable_or_invalid_configs_exit_2() {
    let dir = scratch("cli_bad_config");
    let missing = run_args(&[&"run", &dir.join("nope.json")]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("config"));

    let garbled = dir.join("garbled.json");
    fs::write(&garbled, "{\"geometry\": ").unwrap();
    assert_eq!(code(&run_args(&[&"run", &garbled])), 2);
}

#[test]
fn incomplete_geometries_exit_2() {
    let dir = scratch("cli_incomplete");
    let mut no_n = square_eigen_config();
    no_n["geometry"].as_object_mut().unwrap().remove("n");
    assert_eq!(code(&run_config(&dir, no_n)), 2);

    let sinai_without_disc = json!({
        "geometry": {"kind": "sinai", "n": 9, "spacing": 1.0},
        "task": {"name": "eigen", "count": 1}
    });
    assert_eq!(code(&run_config(&dir, sinai_without_disc)), 2);

    let scatter_without_leads = json!({
        "geometry": {"kind": "square", "n": 5, "spacing": 1.0},
        "task": {"name": "scatter", "k": 0.9}
    });
    assert_eq!(code(&run_config(&dir, scatter_without_leads)), 2);
}

#[test]
fn sweep_bounds_are_validated() {
    let dir = scratch("cli_sweep_bounds");
    let backwards = json!({
        "geometry": {
            "kind": "square", "n": 5, "spacing": 1.0,
            "leads": [
                {"at": [1, 1], "direction": "incoming"},
                {"at": [3, 3], "direction": "outgoing"}
            ]
        },
        "task": {"name": "sweep", "k_min": 2.0, "k_max": 1.0, "samples": 10}
    });
    assert_eq!(code(&run_config(&dir, backwards)), 2);
}

#[test]
fn singular_momentum_exits_3() {
    let dir = scratch("cli_singular");
    let config = json!({
        "geometry": {
            "kind": "chain", "n": 8, "spacing": 1.0,
            "leads": [
                {"at": [2], "direction": "incoming"},
                {"at": [5], "direction": "outgoing"}
            ]
        },
        "task": {"name": "scatter", "k": std::f64::consts::PI}
    });
    let out = run_config(&dir, config);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn eigen_count_beyond_the_spectrum_exits_3() {
    let dir = scratch("cli_eigen_overflow");
    let mut config = square_eigen_config();
    config["task"]["count"] = json!(66);
    assert_eq!(code(&run_config(&dir, config)), 3);
}

#[test]
fn workers_flag_leaves_artifacts_bitwise_identical() {
    let base = scratch("cli_workers");
    let config_path = base.join("config.json");
    fs::write(
        &config_path,
        serde_json::to_string(&square_eigen_config()).unwrap(),
    )
    .unwrap();
    let solo = base.join("solo");
    let pool = base.join("pool");
    assert_eq!(code(&run_args(&[&"run", &config_path, &"--out", &solo])), 0);
    let out = run_args(&[
        &"run",
        &config_path,
        &"--out",
        &pool,
        &"--workers",
        &"2",
    ]);
    assert_eq!(code(&out), 0);
    for name in ["graph.json", "eigen.json", "mode_000.csv"] {
        assert_eq!(
            fs::read(solo.join(name)).unwrap(),
            fs::read(pool.join(name)).unwrap(),
            "{name} differs under --workers"
        );
    }
}

#[test]
fn render_produces_exact_pgm_bytes() {
    let dir = scratch("cli_render_exact");
    let csv = dir.join("field.csv");
    fs::write(
        &csv,
        "x,y,psi2\n0.0,0.0,0.0\n1.0,0.0,0.5\n0.0,1.0,0.75\n1.0,1.0,1.0\n",
    )
    .unwrap();
    let pgm = dir.join("field.pgm");
    let out = run_args(&[&"render", &csv, &pgm]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    // top raster row carries the maximum y
    let mut expected = b"P5\n2 2\n255\n".to_vec();
    expected.extend_from_slice(&[191, 255, 0, 128]);
    assert_eq!(fs::read(&pgm).unwrap(), expected);
}

#[test]
fn render_fills_holes_with_zero() {
    let dir = scratch("cli_render_holes");
    let run = run_config(&dir, square_eigen_config());
    assert_eq!(code(&run), 0);
    let pgm = dir.join("mode.pgm");
    let out = run_args(&[&"render", &dir.join("artifacts/mode_000.csv"), &pgm]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let bytes = fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n5 5\n255\n"));
    assert_eq!(bytes.len(), b"P5\n5 5\n255\n".len() + 25);
    // the four lattice corners are absent from the CSV; they must render
    // exactly like the zero-valued wall cells next to them, while the
    // interior peak must not
    let pixels = &bytes[b"P5\n5 5\n255\n".len()..];
    for corner in [0usize, 4, 20, 24] {
        assert_eq!(pixels[corner], pixels[2], "corner pixel {corner}");
    }
    assert_ne!(pixels[12], pixels[0], "center vs boundary");
}

#[test]
fn render_rejects_ragged_and_nonfinite_grids() {
    let dir = scratch("cli_render_bad");

    let duplicate = dir.join("duplicate.csv");
    fs::write(
        &duplicate,
        "x,y,psi2\n0.0,0.0,0.1\n1.0,0.0,0.2\n0.0,1.0,0.3\n0.0,0.0,0.4\n",
    )
    .unwrap();
    let out = run_args(&[&"render", &duplicate, &dir.join("duplicate.pgm")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("ragged"));

    let nonfinite = dir.join("nonfinite.csv");
    fs::write(&nonfinite, "x,y,psi2\n0.0,0.0,nan\n1.0,0.0,0.2\n").unwrap();
    assert_eq!(
        code(&run_args(&[&"render", &nonfinite, &dir.join("nonfinite.pgm")])),
        3
    );

    let no_column = dir.join("no_column.csv");
    fs::write(&no_column, "x,y,flux\n0.0,0.0,0.1\n1.0,0.0,0.2\n").unwrap();
    let out = run_args(&[&"render", &no_column, &dir.join("no_column.pgm")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("column"));
}
