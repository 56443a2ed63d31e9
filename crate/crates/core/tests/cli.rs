use std::io::Write;
use std::process::{Command, Output, Stdio};

fn seqlof(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_seqlof"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

#[test]
fn out_file_matches_stdout_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("size.csv");
    let args = ["size", "--n", "100", "--reps", "200", "--seed", "5"];
    let stdout = seqlof(&args, "");
    assert!(stdout.status.success());
    let mut with_out = args.to_vec();
    let csv_arg = csv.to_str().unwrap();
    with_out.extend(["--out", csv_arg]);
    let filed = seqlof(&with_out, "");
    assert!(filed.status.success());
    assert!(filed.stdout.is_empty());
    assert_eq!(std::fs::read(&csv).unwrap(), stdout.stdout);

    let manifest = std::fs::read_to_string(dir.path().join("size.manifest.toml")).unwrap();
    let parsed: toml::Table = manifest.parse().unwrap();
    assert_eq!(parsed["subcommand"].as_str(), Some("size"));
    assert_eq!(parsed["csv"].as_str(), Some("size.csv"));
    assert_eq!(parsed["config"]["seed"].as_integer(), Some(5));
    // rerunning rewrites an identical manifest
    seqlof(&with_out, "");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("size.manifest.toml")).unwrap(),
        manifest
    );
}

#[test]
fn drift_reports_grid_and_closed_form() {
    let out = seqlof(
        &[
            "drift", "--q", "0.5", "--c0", "1", "--c1", "0", "--n", "100", "--reps", "50",
            "--grid", "4", "--seed", "1",
        ],
        "",
    );
    assert!(out.status.success());
    let body = text(&out.stdout);
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows[0], "z,mean,stderr,h_closed_form");
    assert_eq!(rows.len(), 6);
    assert!(rows[5].starts_with("1,"));
    assert!(rows[5].ends_with(",-0.34657359027997264"));
}

#[test]
fn monitor_rejects_on_a_falling_series() {
    let input = "0.0 1\n0.25 1.2\n0.5 -2\n0.75 -4\n";
    let out = seqlof(&["monitor", "--n", "4"], input);
    assert!(out.status.success());
    let body = text(&out.stdout);
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows[0], "index,t,y,residual,statistic,threshold,crossed");
    assert_eq!(rows.len(), 4);
    assert!(rows[3].ends_with(",true"));
    assert!(text(&out.stderr).starts_with("reject"));
}

#[test]
fn monitor_refuses_extra_observations() {
    let out = seqlof(&["monitor", "--n", "2"], "0 1\n0.5 2\n1 3\n");
    assert!(!out.status.success());
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let bad_alpha = seqlof(
        &[
            "size", "--alpha", "1.5", "--n", "50", "--reps", "10", "--seed", "1",
        ],
        "",
    );
    assert_eq!(bad_alpha.status.code(), Some(2));
    let bad_design = seqlof(
        &[
            "size", "--n", "50", "--reps", "10", "--seed", "1", "--design", "wobbly",
        ],
        "",
    );
    assert_eq!(bad_design.status.code(), Some(2));
    let infeasible = seqlof(
        &[
            "power",
            "--scenario",
            "step",
            "--t0",
            "0.5",
            "--c0",
            "1",
            "--c1",
            "0",
            "--design",
            "clustered:0.3:0.3",
            "--n",
            "100",
            "--reps",
            "10",
            "--seed",
            "1",
        ],
        "",
    );
    assert_eq!(infeasible.status.code(), Some(2));
    assert!(text(&infeasible.stderr).contains("infeasible"));
}

#[test]
fn rising_jump_warns() {
    let out = seqlof(
        &[
            "power",
            "--scenario",
            "step",
            "--t0",
            "0.5",
            "--c0",
            "0",
            "--c1",
            "1",
            "--n",
            "50",
            "--reps",
            "20",
            "--seed",
            "1",
        ],
        "",
    );
    assert!(out.status.success());
    assert!(text(&out.stderr).contains("warning"));
}

#[test]
fn design_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.txt");
    let points: String = (0..40).map(|i| format!("{}\n", i as f64 / 39.0)).collect();
    std::fs::write(&path, points).unwrap();
    let spec = format!("file:{}", path.display());
    let out = seqlof(
        &[
            "size", "--n", "40", "--reps", "50", "--seed", "2", "--design", &spec,
        ],
        "",
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let short = seqlof(
        &[
            "size", "--n", "41", "--reps", "50", "--seed", "2", "--design", &spec,
        ],
        "",
    );
    assert!(!short.status.success());
}

#[test]
fn elaw_and_dominance_verdicts() {
    let elaw = text(&seqlof(&["elaw", "--qgrid", "0.4,0.6,0.8"], "").stdout);
    assert_eq!(elaw.lines().count(), 4);
    assert!(elaw.lines().skip(1).all(|l| l.contains(",dominates,")));
    let below = text(&seqlof(&["dominance", "--q1", "0.1", "--q2", "0.2"], "").stdout);
    assert!(below.lines().nth(1).unwrap().ends_with(",incomparable"));
}
