use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linear_treeshap::fixtures::{rain_json, RAIN_BASE, RAIN_PHI, RAIN_PREDICTION};
use linear_treeshap::synth::{random_instance, random_tree, rng, RandomTreeConfig};
use linear_treeshap::Ensemble;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linear-treeshap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn explain(model: &Path, data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["explain", "--model", s(model), "--data", s(data), "--output", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn parse_output(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn explain_worked_example() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let data = write(&dir, "d.csv", "20,0,6\n");
    let out = dir.path().join("o.csv");
    let o = explain(&model, &data, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = parse_output(&out);
    assert_eq!(
        header,
        ["phi_temperature", "phi_cloudy", "phi_wind_speed", "base_value", "prediction"]
    );
    let row = &rows[0];
    for (got, want) in row.iter().zip(RAIN_PHI) {
        assert!((got - want).abs() <= 1e-10);
    }
    assert!((row[3] - RAIN_BASE).abs() <= 1e-10);
    assert!((row[4] - RAIN_PREDICTION).abs() <= 1e-10);
}

#[test]
fn explain_accepts_matching_header_and_rejects_other() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let out = dir.path().join("o.csv");
    let good = write(&dir, "g.csv", "temperature,cloudy,wind_speed\n20,0,6\n");
    assert_eq!(explain(&model, &good, &out, &[]).status.code(), Some(0));
    assert_eq!(parse_output(&out).1.len(), 1);

    let bad = write(&dir, "b.csv", "temp,cloudy,wind\n20,0,6\n");
    let o = explain(&model, &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("header"));
}

#[test]
fn explain_empty_data_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let data = write(&dir, "d.csv", "");
    let out = dir.path().join("o.csv");
    assert_eq!(explain(&model, &data, &out, &[]).status.code(), Some(0));
    let (header, rows) = parse_output(&out);
    assert_eq!(header.len(), 5);
    assert!(rows.is_empty());
}

#[test]
fn explain_bad_rows_are_numbered_and_keep_alignment() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let data = write(&dir, "d.csv", "20,0,6\n1,2\n20,,6\n20,1,9\n");
    let out = dir.path().join("o.csv");
    let o = explain(&model, &data, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2"), "{err}");
    assert!(err.contains("row 3"), "{err}");
    assert!(!err.contains("row 1 "), "{err}");
    let (_, rows) = parse_output(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows[0].iter().all(|v| v.is_finite()));
    assert!(rows[1].iter().all(|v| v.is_nan()));
    assert!(rows[2].iter().all(|v| v.is_nan()));
    assert_eq!(rows[3][4], 0.7);
}

#[test]
fn explain_output_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut r = rng(21);
    let cfg = RandomTreeConfig { num_features: 6, max_depth: 7, ..Default::default() };
    let trees = (0..4).map(|_| random_tree(&cfg, &mut r)).collect();
    let ensemble = Ensemble::new(6, trees).unwrap().with_bias(0.25);
    let model = write(&dir, "m.json", &ensemble.to_json());
    let data: String = (0..300)
        .map(|_| {
            let x = random_instance(6, &mut r);
            let fields: Vec<String> = x.values().iter().map(|v| format!("{v:e}")).collect();
            fields.join(",") + "\n"
        })
        .collect();
    let data = write(&dir, "d.csv", &data);
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    assert_eq!(explain(&model, &data, &one, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(explain(&model, &data, &four, &["--threads", "4"]).status.code(), Some(0));
    let a = std::fs::read(&one).unwrap();
    assert_eq!(a, std::fs::read(&four).unwrap());
    let (header, rows) = parse_output(&one);
    assert_eq!(header[0], "phi_0");
    assert_eq!(rows.len(), 300);
}

#[test]
fn explain_invalid_model_is_validation_error() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json().replace("0.4, \"right_weight\": 0.6", "1.0, \"right_weight\": 0.0"));
    let data = write(&dir, "d.csv", "20,0,6\n");
    let out = dir.path().join("o.csv");
    let o = explain(&model, &data, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(explain(&model, &data, &out, &["--lenient-weights"]).status.code(), Some(0));
}

#[test]
fn explain_missing_file_and_zero_threads() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let data = write(&dir, "d.csv", "20,0,6\n");
    let out = dir.path().join("o.csv");
    assert_eq!(explain(&dir.path().join("nope.json"), &data, &out, &[]).status.code(), Some(2));
    assert_eq!(explain(&model, &data, &out, &["--threads", "0"]).status.code(), Some(1));
}

#[test]
fn check_worked_example_lists_all_implementations() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", &rain_json());
    let o = run(&["check", "--model", s(&model), "--tolerance", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["linear_shap", "bruteforce", "per_rule", "coefficient_reference"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("max deviation"));
}

#[test]
fn check_random_trees() {
    let o = run(&["check", "--random-trees", "100", "--max-depth", "6", "--tolerance", "1e-8", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("models: 100"));
}

#[test]
fn check_usage_errors() {
    assert_eq!(run(&["check", "--random-trees", "3", "--max-depth", "3", "--tolerance", "0"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--random-trees", "3", "--max-depth", "3", "--tolerance", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--random-trees", "3"]).status.code(), Some(1));
    assert_eq!(run(&["check"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn check_failure_exit_code() {
    // tighter than one ulp of relative agreement on any nontrivial run
    let o = run(&["check", "--random-trees", "50", "--max-depth", "8", "--tolerance", "1e-300"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn bench_single_depth_single_rep() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.csv");
    let o = run(&["bench", "--depths", "4", "--leaves", "16", "--reps", "1", "--samples", "3", "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("depth,leaves"));
    assert!(lines[1].starts_with("4,16,"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("speedup"));
}

#[test]
fn bench_rejects_zero_reps() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.csv");
    assert_eq!(run(&["bench", "--reps", "0", "--output", s(&out)]).status.code(), Some(1));
    assert_eq!(run(&["bench", "--depths", "0,4", "--output", s(&out)]).status.code(), Some(1));
}
