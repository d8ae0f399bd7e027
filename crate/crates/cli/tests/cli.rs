use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tmethod"));
    c.env_remove("TMETHOD_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(name: &str, doc: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{doc:#}");
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"))
}

/// Data rows of a CSV written by the tool, after checking its two header lines.
fn csv_rows(path: &Path, format: &str, columns: &str) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(format!("# format: {format}").as_str()));
    assert_eq!(lines.next(), Some(columns));
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn gumbel_maxima(dir: &TempDir) -> PathBuf {
    // Deterministic Gumbel quantiles at the Hazen positions.
    let m = 200;
    let mut text = String::from("maximum\n");
    for i in 0..m {
        let u = (i as f64 + 0.5) / m as f64;
        text.push_str(&format!("{}\n", 5.0 + 1.5 * -(-u.ln()).ln()));
    }
    let path = dir.path().join("maxima.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_power_writes_parameters() {
    let dir = TempDir::new().unwrap();
    let input = gumbel_maxima(&dir);
    let out = dir.path().join("fit.json");
    let qq = dir.path().join("qq.csv");
    let status = run(&[
        "fit",
        "--family",
        "power",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--qq",
        qq.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let fit = json_file(&out);
    assert_valid("fit", &fit);
    for key in ["beta", "a", "b", "loglik", "converged"] {
        assert!(fit.get(key).is_some(), "missing {key}");
    }
    assert_eq!(fit["converged"], true);
    assert_eq!(fit["family"], "power");
    assert!(fit["beta"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["quantiles"].as_array().unwrap().len(), 5);

    let rows = csv_rows(
        &qq,
        "tmethod.qq/1",
        "method,empirical,model,plotting_position,exceedance",
    );
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][0], "tmethod");
    assert_eq!(rows[199][3].parse::<f64>().unwrap(), 0.9975);
}

#[test]
fn gev_fit_on_gumbel_quantiles_is_near_gumbel() {
    let dir = TempDir::new().unwrap();
    let input = gumbel_maxima(&dir);
    let out = run(&["fit", "--family", "gev", "--input", input.to_str().unwrap()]);
    assert!(out.status.success());
    let fit: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid("fit", &fit);
    assert_eq!(fit["model"], "classical");
    assert!(fit["gamma"].as_f64().unwrap().abs() < 0.05);
    assert!((fit["a"].as_f64().unwrap() / 1.5 - 1.0).abs() < 0.05);
    assert!((fit["b"].as_f64().unwrap() - 5.0).abs() < 0.1);
}

#[test]
fn auto_family_records_candidates() {
    let out = run(&["fit", "--dist", "normal", "--family", "auto"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid("fit", &fit);
    assert_eq!(fit["suggestion"]["diagnosis"], "power-above-one");
    assert_eq!(fit["family"], "power");
    assert_eq!(fit["candidates"].as_array().unwrap().len(), 1);
}

#[test]
fn experiment_output_is_reproducible_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut summaries = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let summary = dir.path().join(format!("summary{i}.json"));
        let runs = dir.path().join(format!("runs{i}.csv"));
        let out = run(&[
            "experiment",
            "--preset",
            "fig2-normal",
            "--runs",
            "100",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            summary.to_str().unwrap(),
            "--runs-csv",
            runs.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        summaries.push((fs::read(&summary).unwrap(), fs::read(&runs).unwrap()));
    }
    assert_eq!(summaries[0], summaries[1]);

    let doc: Value = serde_json::from_slice(&summaries[0].0).unwrap();
    assert_valid("mc-summary", &doc);
    assert_eq!(doc["master_seed"], 7);
    assert_eq!(doc["mc_runs"], 100);
    let rows = csv_rows(
        &dir.path().join("runs0.csv"),
        "tmethod.mc-runs/1",
        "run_id,method,level,quantile",
    );
    assert_eq!(rows.len(), 2 * 5 * 100);
    assert_eq!(rows[0][..3], ["0", "classical", "0.01"]);
}

#[test]
fn seed_comes_from_environment() {
    let args = [
        "fit",
        "--dist",
        "exponential",
        "--m",
        "100",
        "--family",
        "identity",
    ];
    let flag = run(&[&args[..], &["--seed", "99"]].concat());
    let env = bin().args(args).env("TMETHOD_SEED", "99").output().unwrap();
    let default = run(&args);
    assert!(flag.status.success() && env.status.success() && default.status.success());
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(flag.stdout, default.stdout);
    let explicit_default = run(&[&args[..], &["--seed", "2024"]].concat());
    assert_eq!(default.stdout, explicit_default.stdout);
}

#[test]
fn typical_run_qq_table() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("qq.csv");
    let out = run(&[
        "experiment",
        "--dist",
        "exponential",
        "--family",
        "power",
        "--runs",
        "5",
        "--m",
        "100",
        "--table-csv",
        table.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(
        &table,
        "tmethod.qq/1",
        "method,empirical,model,plotting_position,exceedance",
    );
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][0], "classical");
    assert_eq!(rows[100][0], "tmethod");
}

#[test]
fn disk_preset() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("disk.csv");
    let out = run(&[
        "experiment",
        "--preset",
        "fig1-disks",
        "--table-csv",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid("disk-report", &doc);
    let rows = csv_rows(
        &table,
        "tmethod.disk-points/1",
        "radius,exact,radius_fit,area_fit",
    );
    let probe = rows
        .iter()
        .find(|r| r[0] == "1.91")
        .expect("1.91 on the grid");
    let exact: f64 = probe[1].parse().unwrap();
    assert!((exact.log10() + 4.0).abs() < 0.05);

    let bad = run(&["experiment", "--preset", "fig1-disks", "--dist", "normal"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(stderr_json(&bad)["kind"], "usage");
}

#[test]
fn convergence_table_for_exponential() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("conv.csv");
    let out = run(&[
        "convergence",
        "--dist",
        "exponential",
        "--n",
        "10,100,1000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = csv_rows(
        &csv,
        "tmethod.convergence/1",
        "n,a_n,b_n,w_n,d_n,closed_form_a_n,closed_form_b_n,closed_form_w_n",
    );
    for (row, expected) in rows.iter().zip([0.05, 0.005, 0.0005]) {
        let w: f64 = row[3].parse().unwrap();
        assert!((w / expected - 1.0).abs() < 0.05, "{row:?}");
    }

    let json = run(&[
        "convergence",
        "--dist",
        "gamma:3",
        "--n",
        "2,1000",
        "--format",
        "json",
    ]);
    assert!(json.status.success());
    let doc: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_valid("convergence", &doc);
    // Closed forms need n > Γ(k); at n = 2 with k = 3 they are absent.
    assert!(doc["rows"][0]["closed_form_w_n"].is_null());
    assert!(doc["rows"][1]["closed_form_w_n"].is_number());
}

#[test]
fn malformed_input_is_reported_with_rows() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x\n1.0\nabc\n2\ninf\n").unwrap();
    let out = run(&["fit", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = stderr_json(&out);
    assert_valid("error", &err);
    assert_eq!(err["kind"], "parse");
    let rows: Vec<u64> = err["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["row"].as_u64().unwrap())
        .collect();
    assert_eq!(rows, [3, 5]);

    let missing = run(&[
        "fit",
        "--input",
        dir.path().join("nope.csv").to_str().unwrap(),
    ]);
    assert_eq!(stderr_json(&missing)["kind"], "io");
    let usage = run(&["fit"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_valid("error", &stderr_json(&usage));
}

#[test]
fn non_convergence_emits_best_so_far() {
    let dir = TempDir::new().unwrap();
    let input = gumbel_maxima(&dir);
    let out_path = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--max-iterations",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "not-converged");
    let best = json_file(&out_path);
    assert_valid("fit", &best);
    assert_eq!(best["converged"], false);
}

#[test]
fn fit_config_file_and_flags() {
    let dir = TempDir::new().unwrap();
    let input = gumbel_maxima(&dir);
    let config = dir.path().join("fit-config.json");
    fs::write(&config, r#"{"restarts": 2, "max_iterations": 3}"#).unwrap();
    let base = [
        "fit",
        "--family",
        "gumbel",
        "--input",
        input.to_str().unwrap(),
    ];
    let from_file = run(&[&base[..], &["--fit-config", config.to_str().unwrap()]].concat());
    assert_eq!(from_file.status.code(), Some(3));
    let overridden = run(&[
        &base[..],
        &[
            "--fit-config",
            config.to_str().unwrap(),
            "--max-iterations",
            "5000",
        ],
    ]
    .concat());
    assert!(overridden.status.success());
    let fit: Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(fit["n_restarts_used"], 2);
}

#[test]
fn suggest_reports_diagnosis() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("s.json");
    let out = run(&[
        "suggest",
        "--dist",
        "exponential",
        "--n",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc = json_file(&out_path);
    assert_valid("suggestion", &doc);
    assert_eq!(doc["sample_size"], 1000);

    let small = run(&["suggest", "--dist", "normal", "--m", "10"]);
    assert_eq!(stderr_json(&small)["kind"], "insufficient-data");
}
