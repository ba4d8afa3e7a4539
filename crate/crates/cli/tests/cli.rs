//! CLI contract: exit codes, artifact round-trips, report schema.
//!
//! These are the criterion-8 acceptance checks; each prints a pass line.

use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn ksurf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksurf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn demo_config_json(dir: &Path) -> String {
    format!(
        r#"{{
        "timescale1": {{"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20}},
        "timescale2": {{"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20}},
        "lambda": 1.0,
        "seed": "vacuum",
        "darboux": [{{"kappa": 1.0, "phases": [0.25, 2.5]}}],
        "outputs": {{
            "obj": "{obj}",
            "report": "{report}",
            "fields": "{fields}"
        }}
    }}"#,
        obj = dir.join("net.obj").display(),
        report = dir.join("report.json").display(),
        fields = dir.join("field.json").display()
    )
}

#[test]
fn criterion_8_demo_exits_zero_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let out = ksurf(
        &[
            "demo",
            "--out",
            dir.path().join("demo").to_str().unwrap(),
            "--quiet",
        ],
        dir.path(),
    );
    let elapsed = started.elapsed();
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "[FAIL] demo took {elapsed:?} (>= 10 s)"
    );
    assert!(dir.path().join("demo/report.json").exists());
    assert!(dir.path().join("demo/pseudosphere_cantor.obj").exists());
    println!("[PASS] criterion 8a: demo exits 0 in {elapsed:?} (< 10 s)");
}

#[test]
fn criterion_8_exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();

    // malformed config -> 2
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = ksurf(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);

    // lambda = 0 -> 2, message names the field
    let zero = dir.path().join("zero.json");
    std::fs::write(
        &zero,
        r#"{"timescale1": {"kind":"uniform","t0":0,"step":0.1,"n":5},
           "timescale2": {"kind":"uniform","t0":0,"step":0.1,"n":5},
           "lambda": 0.0}"#,
    )
    .unwrap();
    let out = ksurf(&["run", "--config", zero.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("lambda"),
        "stderr must name the offending field"
    );

    // healthy run -> 0, report written
    let good = dir.path().join("good.json");
    std::fs::write(&good, demo_config_json(dir.path())).unwrap();
    let out = ksurf(
        &["run", "--config", good.to_str().unwrap(), "--quiet"],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // hand-corrupted field file -> verify exits 1 and still writes the report
    let field_path = dir.path().join("field.json");
    let mut field: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&field_path).unwrap()).unwrap();
    field["a"][10][10] = serde_json::json!(1.25);
    let corrupted = dir.path().join("corrupted_field.json");
    std::fs::write(&corrupted, serde_json::to_string(&field).unwrap()).unwrap();
    let verify_cfg = dir.path().join("verify.json");
    std::fs::write(
        &verify_cfg,
        format!(
            r#"{{
            "timescale1": {{"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20}},
            "timescale2": {{"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20}},
            "lambda": 1.0,
            "seed": {{"file": "{}"}},
            "outputs": {{"report": "{}"}}
        }}"#,
            corrupted.display(),
            dir.path().join("verify_report.json").display()
        ),
    )
    .unwrap();
    let out = ksurf(
        &[
            "verify",
            "--config",
            verify_cfg.to_str().unwrap(),
            "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        1,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["pass"], serde_json::json!(false));

    // unwritable output path -> 3
    let io_cfg = dir.path().join("io.json");
    std::fs::write(
        &io_cfg,
        r#"{"timescale1": {"kind":"uniform","t0":0,"step":0.1,"n":5},
           "timescale2": {"kind":"uniform","t0":0,"step":0.1,"n":5},
           "lambda": 1.0,
           "outputs": {"obj": "/nonexistent-dir-xyz/out.obj"}}"#,
    )
    .unwrap();
    let out = ksurf(
        &["export", "--config", io_cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&out), 3);

    println!("[PASS] criterion 8b: exit codes 0/1/2/3 as contracted");
}

#[test]
fn criterion_8_report_schema_and_obj_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, demo_config_json(dir.path())).unwrap();
    let out = ksurf(
        &["run", "--config", cfg.to_str().unwrap(), "--quiet"],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // schema: required keys with the right shapes
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["pass"].is_boolean());
    assert!(report["lambda"].is_number());
    for key in ["n1", "n2", "dense_steps", "max_graininess"] {
        assert!(!report["grid"][key].is_null(), "grid.{key} missing");
    }
    for key in [
        "compatibility_seed",
        "path_independence",
        "red1",
        "red2",
        "psi_lambda_fd_rel",
    ] {
        assert!(report["lax"][key].is_number(), "lax.{key} missing");
    }
    let surfaces = report["surfaces"].as_array().unwrap();
    assert_eq!(surfaces.len(), 2);
    for s in surfaces {
        for key in [
            "K_expected",
            "K_max_abs_err",
            "asym",
            "cheb",
            "tet_vs_dot_max_rel",
            "degenerate_nodes",
        ] {
            assert!(!s[key].is_null(), "surface key {key} missing");
        }
        assert_eq!(s["asym"].as_array().unwrap().len(), 2);
        assert_eq!(s["cheb"].as_array().unwrap().len(), 2);
    }
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        assert!(c["name"].is_string());
        assert!(c["value"].is_number());
        assert!(c["tolerance"].is_number());
        assert!(c["pass"].is_boolean());
    }

    // OBJ round-trip at 1e-8
    let text = std::fs::read_to_string(dir.path().join("net.obj")).unwrap();
    let (verts, faces) = ksurf::obj::import_obj(&mut BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(verts.len(), 400);
    assert!(!faces.is_empty());
    // regenerate in-process and compare coordinates
    let config = ksurf::pipeline::PipelineConfig::from_json(&demo_config_json(dir.path())).unwrap();
    let t1 = ksurf::timescale::construct_timescale(&config.timescale1).unwrap();
    let t2 = ksurf::timescale::construct_timescale(&config.timescale2).unwrap();
    let domain = std::sync::Arc::new(ksurf::timescale::GridDomain::new(t1, t2));
    let cf = ksurf::laxpair::CoefficientField::vacuum(std::sync::Arc::clone(&domain));
    let steps = config.darboux_params().unwrap();
    let chain = ksurf::backlund::run_chain(&cf, &steps, config.lambda).unwrap();
    let net = chain.surfaces.last().unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let got = verts[i * 20 + j];
            let want = net.r.get(i, j);
            worst = worst.max((got - want).norm() / (1.0 + want.norm()));
        }
    }
    assert!(worst <= 1e-8, "[FAIL] OBJ round-trip error {worst:.3e}");
    println!("[PASS] criterion 8c: report schema valid, OBJ round-trip error {worst:.2e} <= 1e-8");
}

#[test]
fn build_ts_prints_cantor_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = ksurf(
        &["build-ts", r#"{"kind":"cantor","level":2,"a":0,"b":1}"#],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let points: Vec<f64> = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(points.len(), 8);
    let expect = [
        0.0,
        1.0 / 9.0,
        2.0 / 9.0,
        1.0 / 3.0,
        2.0 / 3.0,
        7.0 / 9.0,
        8.0 / 9.0,
        1.0,
    ];
    for (p, e) in points.iter().zip(expect) {
        assert!((p - e).abs() < 1e-12);
    }
    // invalid spec -> 2
    let out = ksurf(
        &["build-ts", r#"{"kind":"uniform","t0":0,"step":0,"n":5}"#],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn determinism_identical_config_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, demo_config_json(dir.path())).unwrap();
    let run = |threads: &str| {
        let out = ksurf(
            &[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--quiet",
                "--threads",
                threads,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
        (
            std::fs::read_to_string(dir.path().join("report.json")).unwrap(),
            std::fs::read_to_string(dir.path().join("net.obj")).unwrap(),
        )
    };
    let (report_a, obj_a) = run("1");
    let (report_b, obj_b) = run("1");
    assert_eq!(
        report_a, report_b,
        "single-threaded reports must be bit-identical"
    );
    assert_eq!(obj_a, obj_b);
    let (report_c, obj_c) = run("4");
    assert_eq!(obj_a, obj_c, "mesh must not depend on thread count");
    assert_eq!(
        report_a, report_c,
        "report values must not depend on thread count"
    );
}
