//! Exercises the compiled binary: flags, exit codes, formats, plots, and
//! determinism, against the committed fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causebound"))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("..").join("..")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("causebound-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn version_and_help() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(stdout_of(&out).contains(env!("CARGO_PKG_VERSION")));
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    for sub in ["bounds", "decompose", "decide", "simulate", "oracle"] {
        assert!(stdout_of(&out).contains(sub), "help must list `{sub}`");
    }
}

#[test]
fn bounds_agree_between_methods_on_bow_data() {
    let out = bin()
        .args(["bounds", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let bounds = v["bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), 2);
    assert_eq!(bounds[0]["method"], "closed_form");
    assert_eq!(bounds[1]["method"], "lp");
    let gap_lo =
        (bounds[0]["lower"].as_f64().unwrap() - bounds[1]["lower"].as_f64().unwrap()).abs();
    let gap_hi =
        (bounds[0]["upper"].as_f64().unwrap() - bounds[1]["upper"].as_f64().unwrap()).abs();
    assert!(gap_lo < 1e-9 && gap_hi < 1e-9);
}

#[test]
fn markovian_bounds_have_zero_width() {
    let out = bin()
        .args(["bounds", "--graph"])
        .arg(fixtures().join("two_confounder.json"))
        .arg("--data")
        .arg(fixtures().join("two_confounder_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let lp = &v["bounds"][0];
    let width = lp["upper"].as_f64().unwrap() - lp["lower"].as_f64().unwrap();
    assert!(width.abs() <= 1e-8, "width {width}");
}

#[test]
fn malformed_csv_exits_two() {
    let dir = tmp_dir("badcsv");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "X,Y\n0,potato\n").unwrap();
    let out = bin()
        .args(["bounds", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(&bad)
        .args(["--treatment", "X", "--outcome", "Y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn graph_data_mismatch_exits_three() {
    let dir = tmp_dir("mismatch");
    let csv = dir.join("stray.csv");
    std::fs::write(&csv, "X,Q\n0,1\n1,0\n").unwrap();
    let out = bin()
        .args(["bounds", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(&csv)
        .args(["--treatment", "X", "--outcome", "Y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn incompatible_distribution_exits_four() {
    // Data violating the instrumental inequality cannot come from the
    // instrument graph, so the exact bound solve reports infeasibility.
    let dir = tmp_dir("infeasible");
    let graph = dir.join("iv.json");
    std::fs::write(
        &graph,
        r#"{"nodes":[{"name":"I"},{"name":"X"},{"name":"Y"}],
            "edges":[["I","X"],["X","Y"]],"bidirected":[["X","Y"]]}"#,
    )
    .unwrap();
    let mut csv = String::from("I,X,Y\n");
    for k in 0..200 {
        // P(x1,y1|i0) and P(x1,y0|i1) both near 0.9.
        let (i, x, y) = if k % 2 == 0 {
            (0, 1, if k % 20 == 0 { 0 } else { 1 })
        } else {
            (1, 1, if k % 20 == 1 { 1 } else { 0 })
        };
        csv.push_str(&format!("{i},{x},{y}\n"));
    }
    let data = dir.join("bad_iv.csv");
    std::fs::write(&data, csv).unwrap();
    let out = bin()
        .args(["bounds", "--graph"])
        .arg(&graph)
        .arg("--data")
        .arg(&data)
        .args(["--treatment", "X", "--outcome", "Y"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_spec_file_exits_two() {
    let out = bin()
        .args(["simulate", "--spec", "/nonexistent/spec.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decide_exit_code_encodes_the_move() {
    let out = bin()
        .args(["decide", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args([
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--gamma",
            "0.6",
            "--net-samples",
            "80",
            "--seed",
            "4",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    // Strong confounding plus a threshold inside the inner region: observe.
    assert_eq!(out.status.code(), Some(11), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["decision"]["kind"], "observe");

    // Threshold far below every candidate's lower bound: conclusive.
    let out = bin()
        .args(["decide", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args([
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--gamma",
            "0.05",
            "--net-samples",
            "80",
            "--seed",
            "4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(10));
}

#[test]
fn decide_ate_mode_collects_on_the_small_markovian_effect() {
    let out = bin()
        .args(["decide", "--graph"])
        .arg(fixtures().join("two_confounder.json"))
        .arg("--data")
        .arg(fixtures().join("two_confounder_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--ate", "--net-samples", "80", "--seed", "2", "--format", "json"])
        .output()
        .unwrap();
    // True effect 0.06 with 800 rows: the band straddles zero but there is
    // no non-id core, so the verdict is to collect.
    assert_eq!(out.status.code(), Some(12), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["decision"]["kind"], "collect");
    assert!(v["gamma"].is_null(), "ATE mode has no threshold report");
}

#[test]
fn gamma_override_beats_config_file() {
    let dir = tmp_dir("config");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "treatment = \"X\"\noutcome = \"Y\"\ngamma = 0.6\nnet_samples = 60\nseed = 4\n",
    )
    .unwrap();
    let run = |extra: &[&str]| -> serde_json::Value {
        let mut cmd = bin();
        cmd.args(["decompose", "--graph"])
            .arg(fixtures().join("bow.json"))
            .arg("--data")
            .arg(fixtures().join("bow_data.csv"))
            .arg("--config")
            .arg(&cfg)
            .args(["--format", "json"])
            .args(extra);
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_str(&stdout_of(&out)).unwrap()
    };
    let from_file = run(&[]);
    assert_eq!(from_file["gamma"]["source"], "fixed");
    assert_eq!(from_file["gamma"]["value"], 0.6);
    let overridden = run(&["--gamma", "empirical"]);
    assert_eq!(overridden["gamma"]["source"], "empirical");
}

#[test]
fn json_reports_match_the_shipped_schema() {
    let schema_text =
        std::fs::read_to_string(repo_root().join("schemas").join("report.schema.json")).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();
    let out = bin()
        .args(["decompose", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--net-samples", "60", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    for key in schema["required"].as_array().unwrap() {
        assert!(
            !report[key.as_str().unwrap()].is_null() || key == "gamma",
            "missing required key {key}"
        );
        assert!(
            report.get(key.as_str().unwrap()).is_some(),
            "missing required key {key}"
        );
    }
    let action_required = schema["properties"]["actions"]["items"]["required"].as_array().unwrap();
    for action in report["actions"].as_array().unwrap() {
        for key in action_required {
            assert!(
                action.get(key.as_str().unwrap()).is_some(),
                "action missing required key {key}"
            );
        }
    }
    let kind = report["decision"]["kind"].as_str().unwrap();
    assert!(["return", "observe", "collect"].contains(&kind));
}

#[test]
fn plot_writes_structured_svg() {
    let dir = tmp_dir("plot");
    let svg_path = dir.join("out.svg");
    let out = bin()
        .args(["decompose", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--net-samples", "60"])
        .arg("--plot")
        .arg(&svg_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    // One group per action (two treatment arms on the bow).
    assert_eq!(svg.matches("<g id=\"action-").count(), 2);
}

#[test]
fn report_matches_the_committed_golden_file() {
    let out = bin()
        .args(["decompose", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args([
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--seed",
            "12",
            "--net-samples",
            "80",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let golden = std::fs::read_to_string(fixtures().join("golden_bow_report.json")).unwrap();
    assert_eq!(stdout_of(&out), golden, "report drifted from the golden fixture");
}

#[test]
fn seeded_runs_are_byte_identical() {
    let run = || -> String {
        let out = bin()
            .args(["decompose", "--graph"])
            .arg(fixtures().join("bow.json"))
            .arg("--data")
            .arg(fixtures().join("bow_data.csv"))
            .args([
                "--treatment",
                "X",
                "--outcome",
                "Y",
                "--seed",
                "12",
                "--net-samples",
                "80",
                "--format",
                "json",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        stdout_of(&out)
    };
    assert_eq!(run(), run());
}

#[test]
fn dump_net_flag_writes_candidate_audit() {
    let dir = tmp_dir("dumpnet");
    let path = dir.join("net.json");
    let out = bin()
        .args(["decompose", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--net-samples", "40", "--seed", "6"])
        .arg("--dump-net")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let dump: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(dump["seed"], 6);
    assert!(!dump["candidates"].as_array().unwrap().is_empty());
}

#[test]
fn out_flag_writes_the_json_report() {
    let dir = tmp_dir("out");
    let path = dir.join("report.json");
    let out = bin()
        .args(["decompose", "--graph"])
        .arg(fixtures().join("bow.json"))
        .arg("--data")
        .arg(fixtures().join("bow_data.csv"))
        .args(["--treatment", "X", "--outcome", "Y", "--net-samples", "60", "--format", "json"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let printed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(file, printed);
}

#[test]
fn simulate_runs_the_markovian_schedule() {
    let dir = tmp_dir("simulate");
    let spec = dir.join("spec.toml");
    let out_dir = dir.join("runs");
    std::fs::write(
        &spec,
        format!(
            r#"name = "cli-markovian"
graph = "specs/two_confounder.json"
scm = "specs/scm2.json"
schedule = [400, 900]
solver = "lp"
net_samples = 60
out_dir = "{}"

[query]
Ate = {{ treatment = "X", outcome = "Y" }}

[seeds]
scm = 1
data = 3
net = 5
"#,
            out_dir.display()
        ),
    )
    .unwrap();
    let run = || {
        let out = bin()
            .args(["simulate", "--spec"])
            .arg(&spec)
            .arg("--base-dir")
            .arg(repo_root())
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        stdout_of(&out)
    };
    let first = run();
    assert!(first.starts_with("setup,n,action,"));
    assert_eq!(first.lines().count(), 3);
    // Determinism across repeated invocations of the same spec.
    assert_eq!(first, run());
    assert!(Path::new(&out_dir).join("summary.csv").exists());
    assert!(Path::new(&out_dir).join("report_n400_400.json").exists());
}

#[test]
fn oracle_agrees_with_lp_on_the_two_instrument_joint() {
    let out = bin()
        .args(["oracle", "--graph"])
        .arg(fixtures().join("two_instrument.json"))
        .arg("--joint")
        .arg(fixtures().join("two_instrument_joint.json"))
        .args([
            "--treatment",
            "X",
            "--outcome",
            "Y",
            "--budget",
            "40000",
            "--tolerance",
            "0.02",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["agree"], true, "oracle gap {}", v["max_gap"]);
    assert_eq!(v["oracle"]["method"], "feasible_walk");
}
