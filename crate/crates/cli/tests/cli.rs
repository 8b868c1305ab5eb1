//! End-to-end CLI behavior: values, determinism, exit codes, config files,
//! and schema conformance of the JSON reports.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dreadlock"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn land_reports_the_repelling_fixed_point() {
    let out = run(&["land", "--map", "exp:-2", "--address", "(0)", "--tol", "1e-10"]);
    let v = stdout_json(&out);
    let rec = &v["results"][0];
    assert_eq!(rec["status"], "Landed");
    assert_eq!(rec["classification"], "Repelling");
    let z = rec["landing_point"].as_array().unwrap();
    assert!((z[0].as_f64().unwrap() - 1.146193).abs() < 1e-6);
    assert!(z[1].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn duplicate_addresses_give_identical_records() {
    let out = run(&["land", "--map", "exp:-2", "--address", "(0)", "--address", "(0)"]);
    let v = stdout_json(&out);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0], results[1]);
}

#[test]
fn land_output_is_deterministic() {
    let a = run(&["land", "--map", "exp:-2", "--address", "(0)", "--address", "(1)"]);
    let b = run(&["land", "--map", "exp:-2", "--address", "(0)", "--address", "(1)"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    // no map at all
    let out = run(&["land", "--address", "(0)"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag (clap)
    let out = run(&["land", "--map", "exp:-2", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    // malformed window
    let out = run(&["scan-periodic", "--map", "exp:-2", "--window", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    // nonpositive tolerance
    let out = run(&["land", "--map", "exp:-2", "--address", "(0)", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_1() {
    // base point inside the cosine branch-point radius: pullback must fail
    let out = run(&[
        "land",
        "--map",
        "cos:1,0,1,0",
        "--address",
        "(0)",
        "--base",
        "0.5,0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("structured diagnostic on stderr");
    assert!(err["error"].as_str().unwrap().contains("depth"));
}

#[test]
fn trace_ray_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("ray.csv");
    let out = run(&[
        "trace-ray",
        "--map",
        "exp:-2",
        "--address",
        "(0)",
        "--n-pull",
        "6",
        "--samples-per-unit",
        "4",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["command"], "trace-ray");
    let t_values = v["ray"]["t_values"].as_array().unwrap();
    assert_eq!(t_values.first().unwrap().as_f64().unwrap(), -6.0);
    assert_eq!(t_values.last().unwrap().as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,re,im,gap\n"));
    assert_eq!(csv.lines().count(), t_values.len() + 1);
}

#[test]
fn land_orbit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("orbit.csv");
    let out = run(&[
        "land",
        "--map",
        "exp:-2",
        "--address",
        "(0)",
        "--orbit-csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,re,im,gap\n"));
    assert!(csv.lines().count() > 10);
    // two addresses with --orbit-csv is a usage error
    let out = run(&[
        "land",
        "--map",
        "exp:-2",
        "--address",
        "(0)",
        "--address",
        "(1)",
        "--orbit-csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_finds_the_attracting_and_repelling_fixed_points() {
    let out = run(&[
        "scan-periodic",
        "--map",
        "exp:-2",
        "--period",
        "1",
        "--window",
        "-5,5,-8,8",
        "--grid",
        "24x24",
    ]);
    let v = stdout_json(&out);
    let points = v["points"].as_array().unwrap();
    assert!(points.len() >= 4);
    let classes: Vec<&str> = points
        .iter()
        .map(|p| p["classification"].as_str().unwrap())
        .collect();
    assert!(classes.contains(&"Attracting"));
    assert!(classes.contains(&"Repelling"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("exp.toml");
    std::fs::write(
        &toml_path,
        "map = \"exp:-2\"\naddresses = [\"(0)\"]\ntol = 1e-8\n",
    )
    .unwrap();
    let out = run(&["land", "--config", toml_path.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["map"], "exp:-2");
    assert_eq!(v["tol"].as_f64().unwrap(), 1e-8);

    // flag overrides the config tolerance
    let out = run(&[
        "land",
        "--config",
        toml_path.to_str().unwrap(),
        "--tol",
        "1e-12",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["tol"].as_f64().unwrap(), 1e-12);

    // the same config as JSON
    let json_path = dir.path().join("exp.json");
    std::fs::write(
        &json_path,
        "{\"map\": \"exp:-2\", \"addresses\": [\"(0)\"], \"tol\": 1e-8}",
    )
    .unwrap();
    let out = run(&["land", "--config", json_path.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["tol"].as_f64().unwrap(), 1e-8);
}

#[test]
fn render_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("flat.ppm");
    // 2x2 window deep in the fast-escape region: all four pixels identical
    let out = run(&[
        "render",
        "--map",
        "exp:-2",
        "--window",
        "200,201,-0.5,0.5",
        "--width",
        "2",
        "--height",
        "2",
        "--ppm",
        ppm.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let bytes = std::fs::read(&ppm).unwrap();
    let body = &bytes[bytes.len() - 12..];
    assert_eq!(&body[0..3], &body[3..6]);
    assert_eq!(&body[0..3], &body[6..9]);
    assert_eq!(&body[0..3], &body[9..12]);

    // an overlay entirely outside the window changes nothing
    let plain = dir.path().join("plain.ppm");
    let with_overlay = dir.path().join("overlay.ppm");
    let args_base = [
        "render",
        "--map",
        "exp:-2",
        "--window",
        "-4,-3,3,4",
        "--width",
        "32",
        "--height",
        "32",
    ];
    let out = bin()
        .args(args_base)
        .args(["--ppm", plain.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(args_base)
        .args([
            "--overlay-address",
            "(0)",
            "--overlay-n-pull",
            "4",
            "--ppm",
            with_overlay.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&plain).unwrap(),
        std::fs::read(&with_overlay).unwrap()
    );

    // resolution cap
    let out = run(&[
        "render",
        "--map",
        "exp:-2",
        "--width",
        "5000",
        "--height",
        "5000",
        "--ppm",
        dir.path().join("big.ppm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ray_overlay_stays_on_the_real_axis() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("axis.ppm");
    let out = run(&[
        "render",
        "--map",
        "exp:-2",
        "--window",
        "-5,5,-5,5",
        "--width",
        "128",
        "--height",
        "128",
        "--overlay-address",
        "(0)",
        "--ppm",
        ppm.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let bytes = std::fs::read(&ppm).unwrap();
    let header_end = {
        let mut newlines = 0;
        bytes
            .iter()
            .position(|&b| {
                if b == b'\n' {
                    newlines += 1;
                }
                newlines == 3
            })
            .unwrap()
            + 1
    };
    let (w, h) = (128usize, 128usize);
    let mut overlay_rows = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = header_end + 3 * (y * w + x);
            if bytes[i] == 255 && bytes[i + 1] == 255 && bytes[i + 2] == 255 {
                overlay_rows.push(y);
            }
        }
    }
    assert!(!overlay_rows.is_empty(), "overlay not drawn");
    // the real axis sits between rows 63 and 64 in a 128-row window
    for y in overlay_rows {
        assert!((63..=64).contains(&y), "overlay pixel off the axis: row {y}");
    }
}

#[test]
fn reports_match_the_checked_in_schema() {
    let schema_text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/reports.json"),
    )
    .unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();

    let check = |v: &serde_json::Value, name: &str| {
        let required = schema[name]["required"].as_object().unwrap();
        for (field, ty) in required {
            let got = &v[field];
            let ok = match ty.as_str().unwrap() {
                "string" => got.is_string(),
                "number" => got.is_number(),
                "array" => got.is_array(),
                "object" => got.is_object(),
                "boolean" => got.is_boolean(),
                other => panic!("unknown schema type {other}"),
            };
            assert!(ok, "{name}: field '{field}' missing or not {ty}: {got}");
        }
    };

    let out = run(&["land", "--map", "exp:-2", "--address", "(0)"]);
    let v = stdout_json(&out);
    check(&v, "land");
    let item_schema = schema["land"]["results_item"].as_object().unwrap();
    for (field, _) in item_schema {
        assert!(!v["results"][0][field].is_null(), "land result missing {field}");
    }

    let out = run(&[
        "scan-periodic",
        "--map",
        "exp:-2",
        "--period",
        "1",
        "--grid",
        "12x12",
    ]);
    check(&stdout_json(&out), "scan-periodic");

    let out = run(&["portrait", "--map", "exp:-2", "--period", "1", "--K", "2"]);
    check(&stdout_json(&out), "portrait");

    let out = run(&[
        "trace-ray",
        "--map",
        "exp:-2",
        "--address",
        "(0)",
        "--n-pull",
        "4",
    ]);
    check(&stdout_json(&out), "trace-ray");

    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("x.ppm");
    let out = run(&[
        "render",
        "--map",
        "exp:-2",
        "--width",
        "8",
        "--height",
        "8",
        "--ppm",
        ppm.to_str().unwrap(),
    ]);
    check(&stdout_json(&out), "render");

    let out = run(&[
        "hyperbolic",
        "--map",
        "exp:-2",
        "--period",
        "1",
        "--K",
        "2",
        "--grid",
        "16x16",
    ]);
    check(&stdout_json(&out), "hyperbolic");
}

#[test]
fn portrait_table_goes_to_stderr() {
    let out = run(&[
        "portrait",
        "--map",
        "exp:-2",
        "--period",
        "1",
        "--K",
        "2",
        "--table",
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("address"));
    // stdout stays pure JSON
    let _: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
}
