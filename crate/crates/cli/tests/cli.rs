use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wellsplit"));
    c.env("RUST_LOG", "warn");
    c
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            headers
                .iter()
                .zip(rec.unwrap().iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn num(v: &str) -> f64 {
    v.parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
  "schema_version": 1,
  "state_a": [{"n": 2, "re": 1.0}],
  "state_b": [{"n": 1, "re": 1.0}, {"n": 2, "re": 1.0}],
  "insertion_point": 0.5,
  "n_cut": 200,
  "signal": {"kind": "binary_detector", "false_positive": 0.1, "false_negative": 0.1}
}"#;

#[test]
fn baseline_run_reports_costs() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run"], &bundled("paper_baseline"), out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cost = read_csv(&out.path().join("cost.csv"));
    assert_eq!(cost.len(), 1);
    assert!((num(&cost[0]["helstrom_baseline"]) - 0.1464466).abs() < 1e-7);
    assert!((num(&cost[0]["combined_cost"]) - 0.0472307431).abs() < 1e-9);
    assert_eq!(cost[0]["nodal_a"], "true");
    assert_eq!(cost[0]["nodal_b"], "false");
    for name in ["coefficients", "insertion_report", "energy_partial_sums", "cost", "posterior", "density_state_a"] {
        let rows = read_csv(&out.path().join(format!("{name}.csv")));
        assert!(!rows.is_empty(), "{name}");
        if !name.starts_with("density") {
            for col in ["n_cut", "tolerance", "truncation_residual"] {
                assert!(rows[0].contains_key(col), "{name} lacks {col}");
            }
        }
    }
    let status: serde_json::Value =
        serde_json::from_slice(&fs::read(out.path().join("run_status.json")).unwrap()).unwrap();
    assert_eq!(status["status"], "ok");
    assert_eq!(status["partial"], false);
}

#[test]
fn nodal_only_conserves_energy() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run"], &bundled("nodal_only"), out.path());
    assert!(o.status.success());
    let report = read_csv(&out.path().join("insertion_report.csv"));
    assert_eq!(report.len(), 1);
    assert_eq!(report[0]["nodal"], "true");
    assert_eq!(report[0]["divergence_class"], "convergent");
    let (pre, post) = (num(&report[0]["pre_energy"]), num(&report[0]["post_energy"]));
    assert!((pre - post).abs() <= 1e-7 * pre);
    assert!(!out.path().join("cost.csv").exists());
}

#[test]
fn nonnodal_ground_is_flagged_divergent() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run"], &bundled("nonnodal_ground"), out.path());
    assert!(o.status.success());
    let report = read_csv(&out.path().join("insertion_report.csv"));
    assert_eq!(report[0]["divergence_class"], "linear-divergent");
    assert!(!report[0]["caveat"].is_empty());
    let density = read_csv(&out.path().join("density_state_a.csv"));
    assert_eq!(density[0].len(), 3);
    assert!(density[0].contains_key("t") && density[0].contains_key("x") && density[0].contains_key("density"));
}

#[test]
fn sweep_subcommand_orders_rows_by_grid() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["sweep"], &bundled("baseline_sweep"), out.path());
    assert!(o.status.success());
    let rows = read_csv(&out.path().join("sweep.csv"));
    assert_eq!(rows.len(), 19 * 11);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(num(&r["prior_index"]) as usize, k / 11);
        assert_eq!(num(&r["error_index"]) as usize, k % 11);
        assert!(num(&r["combined_cost"]) <= num(&r["helstrom_baseline"]) + 1e-12);
    }
    assert!(!out.path().join("cost.csv").exists());
}

#[test]
fn empty_sweep_grid_gives_single_scenario_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("\"n_cut\": 200,", "\"n_cut\": 200, \"sweep\": {\"priors\": [], \"detector_errors\": [0.1]},");
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let o = run(&["run"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("cost.csv").exists());
    assert!(!out.join("sweep.csv").exists());
}

#[test]
fn json_format_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (csv_out, json_out) = (dir.path().join("csv"), dir.path().join("json"));
    assert!(run(&["run"], &cfg, &csv_out).status.success());
    assert!(run(&["run", "--format", "json"], &cfg, &json_out).status.success());
    let csv_rows = read_csv(&csv_out.join("cost.csv"));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(json_out.join("cost.json")).unwrap()).unwrap();
    let a = num(&csv_rows[0]["combined_cost"]);
    let b = json[0]["combined_cost"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-8 * b);
    assert_eq!(json[0]["nodal_a"], serde_json::Value::Bool(true));
}

#[test]
fn csv_uses_lf_line_endings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert!(run(&["run"], &cfg, &out).status.success());
    let bytes = fs::read(out.join("posterior.csv")).unwrap();
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.ends_with(b"\n"));
}

#[test]
fn validate_names_the_nodal_state() {
    let o = bin().args(["validate", "--config"]).arg(bundled("paper_baseline")).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("nodal state = state_a"), "{text}");
}

#[test]
fn validate_rejects_boundary_insertion_and_bad_prior() {
    let dir = tempfile::tempdir().unwrap();
    for (from, to, needle) in [
        ("\"insertion_point\": 0.5", "\"insertion_point\": 0.0", "boundary insertion"),
        ("\"n_cut\": 200,", "\"n_cut\": 200, \"prior\": 1.5,", "prior out of range"),
    ] {
        let cfg = write_config(dir.path(), &SMALL.replace(from, to));
        let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn unreadable_or_malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = bin().args(["validate", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), &SMALL.replace("\"n_cut\": 200", "\"n_cut\": \"many\""));
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_cut") && err.contains("line 6"), "{err}");

    let cfg = write_config(dir.path(), &SMALL.replace("\"n_cut\"", "\"n_cutoff\""));
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn density_subcommand_requires_a_density_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["density"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));

    let out = tempfile::tempdir().unwrap();
    let o = run(&["density"], &bundled("nonnodal_ground"), out.path());
    assert!(o.status.success());
    assert!(out.path().join("density_state_a.csv").exists());
    assert!(!out.path().join("coefficients.csv").exists());
}

#[test]
fn threads_flag_does_not_change_results() {
    let out1 = tempfile::tempdir().unwrap();
    let out4 = tempfile::tempdir().unwrap();
    assert!(run(&["sweep", "--threads", "1"], &bundled("baseline_sweep"), out1.path()).status.success());
    assert!(run(&["sweep", "--threads", "4"], &bundled("baseline_sweep"), out4.path()).status.success());
    assert_eq!(
        fs::read(out1.path().join("sweep.csv")).unwrap(),
        fs::read(out4.path().join("sweep.csv")).unwrap()
    );
}
