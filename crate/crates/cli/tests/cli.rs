use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use serde_json::Value;
use tempfile::TempDir;
use uev_cli::{run, Cli, CliError, RunOutput};

fn uev(args: &[&str], out: &Path) -> Result<RunOutput, CliError> {
    let mut argv = vec!["uev"];
    argv.extend_from_slice(args);
    argv.extend(["--out", out.to_str().unwrap()]);
    run(Cli::try_parse_from(argv).unwrap())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a result CSV, skipping the two comment lines and the header.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(3)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn field(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn gaussian_panels_report_closed_forms() {
    let dir = TempDir::new().unwrap();
    for (panel, expected) in [
        ("left", [(1.9174, 0.9614), (1.4785, 0.7222), (1.9174, 0.2873)]),
        ("right", [(1.9802, 0.7018), (1.9608, 0.7001), (1.9802, 0.4975)]),
    ] {
        let out = dir.path().join(panel);
        uev(&["gaussian", "--panel", panel], &out).unwrap();
        let rows = csv_rows(&out.join("summary.csv"));
        assert_eq!(rows.len(), 3);
        for (row, (mean, sd)) in rows.iter().zip(expected) {
            assert!((field(row, 1) - mean).abs() < 1e-4, "{panel} {row:?}");
            assert!((field(row, 2) - sd).abs() < 1.5e-4, "{panel} {row:?}");
        }
        assert_eq!(csv_rows(&out.join("kl.csv")).len(), 3);
        let density = fs::read_to_string(out.join("density.csv")).unwrap();
        assert!(density.lines().nth(2).unwrap() == "x,jeffrey,virtual,distributional");
    }
}

#[test]
fn single_method_gives_single_row() {
    let dir = TempDir::new().unwrap();
    uev(&["gaussian", "--method", "jeffrey"], dir.path()).unwrap();
    let rows = csv_rows(&dir.path().join("summary.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "jeffrey");
    assert!(csv_rows(&dir.path().join("kl.csv")).is_empty());
}

#[test]
fn explicit_flags_override_panel() {
    let dir = TempDir::new().unwrap();
    uev(&["gaussian", "--panel", "right", "--mu-x", "1", "--sigma-x", "1", "--sigma-yx", "0.3", "--sigma-q", "1"], dir.path())
        .unwrap();
    let rows = csv_rows(&dir.path().join("summary.csv"));
    assert!((field(&rows[0], 1) - 1.9174).abs() < 1e-4);
}

#[test]
fn monte_carlo_columns_are_appended() {
    let dir = TempDir::new().unwrap();
    uev(&["gaussian", "--mc-check", "--n", "20000", "--seed", "3"], dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().nth(2).unwrap(), "method,mean,sd,ess,n,seed,mc_mean,mc_sd,mc_se");
    for row in csv_rows(&dir.path().join("summary.csv")) {
        let (closed, mc, se) = (field(&row, 1), field(&row, 6), field(&row, 8));
        assert!((closed - mc).abs() < 4.0 * se, "{row:?}");
        assert_eq!(row[5], "3");
    }
}

fn strip_timestamps(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated_unix") && !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_are_byte_identical_apart_from_timestamps() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["ball-drop", "--n", "4000", "--n-e", "16", "--seed", "9"];
    let files = uev(&args, a.path()).unwrap().files;
    uev(&args, b.path()).unwrap();
    for f in files {
        let name = f.file_name().unwrap();
        let x = fs::read_to_string(a.path().join(name)).unwrap();
        let y = fs::read_to_string(b.path().join(name)).unwrap();
        assert_eq!(strip_timestamps(&x), strip_timestamps(&y), "{name:?}");
        assert!(x.starts_with("# generated_unix: ") || x.lines().nth(1).unwrap().contains("generated_at"));
    }
}

#[test]
fn ball_drop_defaults_tell_the_story() {
    let dir = TempDir::new().unwrap();
    uev(&["ball-drop", "--n", "50000"], dir.path()).unwrap();
    let rows = csv_rows(&dir.path().join("summary.csv"));
    let by = |m: &str| rows.iter().find(|r| r[0] == m).unwrap().clone();
    let (j, v, d) = (by("jeffrey"), by("virtual"), by("distributional"));
    assert!(field(&j, 6).abs() < 1.5 && (field(&j, 2) - 1.5).abs() < 0.3);
    assert!(field(&v, 6).abs() < 1.5);
    assert!(field(&d, 6) >= 3.0 && (field(&d, 1) - 10.82).abs() / 10.82 < 0.02);
    assert!((field(&d, 2) - 0.25).abs() < 0.05);
    let sidecar = json(&dir.path().join("consistency.json"));
    assert_eq!(sidecar["report"]["verdict"], "pass");
    assert!(dir.path().join("draws_distributional.csv").exists());
}

#[test]
fn point_mass_prior_reports_predictive_time() {
    let dir = TempDir::new().unwrap();
    uev(&["ball-drop", "--prior-sd", "0", "--method", "virtual", "--n", "100"], dir.path()).unwrap();
    let run = json(&dir.path().join("run.json"));
    assert!((run["predictive_time"].as_f64().unwrap() - 0.4515).abs() < 1e-4);
    assert!((run["posteriors"][0]["mean"].as_f64().unwrap() - 9.81).abs() < 1e-12);
}

fn discrete_rows(args: &[&str]) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let dir = TempDir::new().unwrap();
    uev(args, dir.path()).unwrap();
    (
        csv_rows(&dir.path().join("posteriors.csv")),
        csv_rows(&dir.path().join("commutativity.csv")),
    )
}

#[test]
fn discrete_running_example() {
    let (_, order) = discrete_rows(&["discrete", "--q", "0.1,0.9", "--q-b", "0.9,0.1"]);
    assert!((field(&order[0], 2) - 0.26).abs() < 1e-12);
    assert!((field(&order[1], 2) - 0.74).abs() < 1e-12);
    assert!((field(&order[2], 2) - field(&order[3], 2)).abs() < 1e-12);

    let (post, _) = discrete_rows(&["discrete", "--lambda", "1,1"]);
    assert!((field(&post[2], 1) - 0.5).abs() < 1e-12 && (field(&post[2], 2) - 0.5).abs() < 1e-12);

    let (post, _) = discrete_rows(&["discrete", "--lambda", "1,2", "--q", "0.3333333333333333,0.6666666666666667"]);
    assert!((field(&post[1], 2) - 0.6).abs() < 1e-12);
    assert!((field(&post[2], 2) - 0.6).abs() < 1e-12);
}

#[test]
fn discrete_reads_table_files() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("t.json");
    fs::write(&table, r#"{"x_values":[0,1,2],"y_values":[0,1],"probs":[[0.1,0.2,0.2],[0.3,0.1,0.1]]}"#).unwrap();
    uev(&["discrete", "--table", table.to_str().unwrap(), "--q", "0.5,0.5"], &dir.path().join("o")).unwrap();
    let rows = csv_rows(&dir.path().join("o/posteriors.csv"));
    assert_eq!(rows[0].len(), 4);
}

#[test]
fn consistency_gaussian_left_passes_with_witness() {
    let dir = TempDir::new().unwrap();
    uev(&["check-consistency"], dir.path()).unwrap();
    let r = json(&dir.path().join("consistency.json"));
    assert_eq!(r["report"]["verdict"], "pass");
    assert!((r["witness"]["sigma_zeta_sq"].as_f64().unwrap() - 0.09).abs() < 1e-12);
    assert!(r["report"]["condition1_note"].as_str().unwrap().contains("not checked"));
    assert_eq!(r["report"]["structure_check"]["applicable"], false);
}

#[test]
fn consistency_wide_evidence_fails() {
    let dir = TempDir::new().unwrap();
    uev(&["check-consistency", "--sigma-q", "2"], dir.path()).unwrap();
    let r = json(&dir.path().join("consistency.json"));
    assert_eq!(r["report"]["verdict"], "fail");
    assert_eq!(r["witness"]["exists"], false);
}

#[test]
fn consistency_ball_drop_reports_both_variances() {
    let dir = TempDir::new().unwrap();
    uev(&["check-consistency", "--experiment", "ball-drop"], dir.path()).unwrap();
    let c = &json(&dir.path().join("consistency.json"))["report"]["scalar_checks"][0];
    assert_eq!(c["verdict"], "pass");
    assert!((c["expected_cond_var"].as_f64().unwrap() - 9e-4).abs() < 5e-5);
    assert!(c["var_y"].as_f64().unwrap() > 2e-3);
}

fn exit_code(args: &[&str]) -> i32 {
    let dir = TempDir::new().unwrap();
    Command::new(env!("CARGO_BIN_EXE_uev"))
        .args(args)
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["gaussian"]), 0);
    assert_eq!(exit_code(&["gaussian", "--sigma-x", "-1"]), 2);
    assert_eq!(exit_code(&["gaussian", "--n", "0", "--mc-check"]), 2);
    assert_eq!(exit_code(&["discrete"]), 2);
    assert_eq!(exit_code(&["check-consistency", "--sigma-q", "2", "--strict"]), 4);
    assert_eq!(exit_code(&["check-consistency", "--strict"]), 0);

    let dir = TempDir::new().unwrap();
    let table = dir.path().join("t.json");
    fs::write(&table, r#"{"x_values":[0,1],"y_values":[0,1],"probs":[[0.5,0.5],[0,0]]}"#).unwrap();
    assert_eq!(exit_code(&["discrete", "--table", table.to_str().unwrap(), "--lambda", "0,1"]), 3);
}
