use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cumcal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cumcal"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("CUMCAL_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// 400 rows of a deterministic, roughly calibrated dataset.
fn sample_csv() -> String {
    let mut s = String::from("p,y\n");
    let mut state: u64 = 12345;
    for i in 0..400 {
        let p = 0.05 + 0.9 * (i as f64 + 0.5) / 400.0;
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        s.push_str(&format!("{p},{}\n", u8::from(u < p)));
    }
    s
}

#[test]
fn two_point_report() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "two.csv", "p,y\n0.2,0\n0.6,1\n");
    let stdout = ok(&cumcal(dir.path(), &["test", "two.csv", "--groups", "0"]));
    assert!(stdout.contains("report:"));
    let r = json(dir.path().join("two.report.json"));
    assert_eq!(r["schema"], 1);
    assert_eq!(r["dataset"]["n"], 2);
    // T = 0.16 + 0.24 = 0.4; S_n = (−0.2 + 0.4) / √0.4
    let s_n = r["bb"]["s_n"].as_f64().unwrap();
    assert!((s_n - 0.2 / 0.4_f64.sqrt()).abs() < 1e-12);
    // t_1 = 0.4, S_1 = −0.2/√0.4, bridged value S_1 − 0.4 S_n
    let b_star = r["bb"]["b_star"].as_f64().unwrap();
    assert!((b_star - 0.28 / 0.4_f64.sqrt()).abs() < 1e-12);
    assert!(r.get("hosmer_lemeshow").is_none());
    assert_eq!(r["timestamp"], "2023-11-14T22:13:20Z");
    for ext in ["bm.svg", "bb.svg"] {
        assert!(dir.path().join(format!("two.{ext}")).exists());
    }
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "one.csv", "p,y\n0.2,0\n1.0,1\n");
    write_csv(dir.path(), "outcome.csv", "p,y\n0.2,0\n0.3,3\n");
    write_csv(dir.path(), "column.csv", "risk,y\n0.2,0\n");
    for args in [
        vec!["test", "one.csv"],
        vec!["test", "outcome.csv"],
        vec!["test", "column.csv"],
        vec!["test", "missing.csv"],
        vec!["test", "one.csv", "--bogus"],
        vec!["simulate", "null", "--n", "100", "--beta0", ""],
        vec!["simulate", "power", "--b", "1", "--a", "0", "--n", "0", "--reps", "10"],
    ] {
        let out = cumcal(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn clamping_accepts_boundary_predictions() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "edge.csv", "p,y\n0,0\n0.5,1\n1,1\n0.3,0\n");
    ok(&cumcal(dir.path(), &["test", "edge.csv", "--clamp", "1e-6", "--no-plots", "--groups", "0"]));
    assert!(dir.path().join("edge.report.json").exists());
    assert!(!dir.path().join("edge.bm.svg").exists());
}

#[test]
fn monte_carlo_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "d.csv", &sample_csv());
    let run = |out: &str| {
        ok(&cumcal(
            dir.path(),
            &["test", "d.csv", "--mc", "10000", "--seed", "7", "--out-dir", out, "--no-plots"],
        ));
        std::fs::read(dir.path().join(out).join("d.report.json")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let r: Value = serde_json::from_slice(&a).unwrap();
    let mc = &r["monte_carlo"];
    assert_eq!(mc["bm"]["replications"], 10000);
    assert_eq!(mc["bm"]["seed"], 7);
    // simulated and asymptotic p-values tell the same story
    let sim = mc["bb"]["p_value"].as_f64().unwrap();
    let asym = r["bb"]["p_unified"].as_f64().unwrap();
    assert!((sim - asym).abs() < 0.1, "{sim} vs {asym}");
}

#[test]
fn null_simulation_is_near_nominal() {
    let dir = tempfile::tempdir().unwrap();
    ok(&cumcal(
        dir.path(),
        &["simulate", "null", "--beta0", "-1", "--n", "1000", "--reps", "1000", "--seed", "1"],
    ));
    let doc = json(dir.path().join("null_study.json"));
    let cells = doc["study"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0]["scenario"]["seed"], 1);
    for t in cells[0]["tests"].as_array().unwrap() {
        let p = t["proportion"].as_f64().unwrap();
        assert!((0.03..=0.07).contains(&p), "{}: {p}", t["test"]);
    }
    assert!(dir.path().join("null_study.svg").exists());
}

#[test]
fn calibrated_power_cell_is_near_nominal() {
    let dir = tempfile::tempdir().unwrap();
    ok(&cumcal(
        dir.path(),
        &[
            "simulate", "power", "--family", "logit-linear", "--a", "0", "--b", "1", "--n", "250",
            "--reps", "500", "--seed", "3",
        ],
    ));
    let doc = json(dir.path().join("power_logit_linear.json"));
    let tests = doc["study"]["cells"][0]["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 4);
    for t in tests {
        let p = t["proportion"].as_f64().unwrap();
        assert!((p - 0.05).abs() <= 0.03, "{}: {p}", t["test"]);
    }
}

#[test]
fn config_file_supplies_the_grid_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "grid.cfg", "# small grid\nbeta0 = -2, 0\nn = 60\nreps = 20\nseed = 5\n");
    ok(&cumcal(dir.path(), &["simulate", "null", "--config", "grid.cfg", "--reps", "30"]));
    let doc = json(dir.path().join("null_study.json"));
    assert_eq!(doc["study"]["replications"], 30);
    assert_eq!(doc["study"]["seed"], 5);
    assert_eq!(doc["study"]["cells"].as_array().unwrap().len(), 2);

    write_csv(dir.path(), "typo.cfg", "betaO = 1\n");
    let out = cumcal(dir.path(), &["simulate", "null", "--config", "typo.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_rerenders_reports_and_studies() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), "d.csv", &sample_csv());
    ok(&cumcal(dir.path(), &["test", "d.csv", "--out-dir", "first"]));
    ok(&cumcal(
        dir.path(),
        &["plot", "--report", "first/d.report.json", "--data", "d.csv", "--out-dir", "second"],
    ));
    for ext in ["bm.svg", "bb.svg", "binned.svg"] {
        let a = std::fs::read(dir.path().join("first").join(format!("d.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join("second").join(format!("d.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }

    // a report paired with the wrong data is refused
    let shifted: String = sample_csv().replace(",1\n", ",0\n");
    write_csv(dir.path(), "other.csv", &shifted);
    let out = cumcal(
        dir.path(),
        &["plot", "--report", "first/d.report.json", "--data", "other.csv", "--out-dir", "third"],
    );
    assert_eq!(out.status.code(), Some(2));

    ok(&cumcal(dir.path(), &["simulate", "null", "--beta0", "0", "--n", "50", "--reps", "20", "--out-dir", "s"]));
    ok(&cumcal(dir.path(), &["plot", "--study", "s/null_study.json", "--out-dir", "s2"]));
    let a = std::fs::read(dir.path().join("s/null_study.svg")).unwrap();
    let b = std::fs::read(dir.path().join("s2/null_study.svg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn case_study_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "casestudy",
            "--development-size",
            "4000",
            "--holdout-size",
            "3000",
            "--out-dir",
            out,
        ]
    };
    ok(&cumcal(dir.path(), &args("a")));
    ok(&cumcal(dir.path(), &args("b")));
    for model in ["full", "small"] {
        let name = format!("casestudy_{model}.report.json");
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(&name)).unwrap());
        let r: Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(r["dataset"]["n"], 3000);
        // the BB figure legend carries the reported statistics
        let svg = std::fs::read_to_string(dir.path().join("a").join(format!("casestudy_{model}.bb.svg")))
            .unwrap();
        let s_n = r["bb"]["s_n"].as_f64().unwrap();
        let b_star = r["bb"]["b_star"].as_f64().unwrap();
        assert!(svg.contains(&format!("S_n = {s_n:.4}")), "{model}");
        assert!(svg.contains(&format!("B* = {b_star:.4}")), "{model}");
        for ext in ["bm.svg", "binned.svg"] {
            assert!(dir.path().join("a").join(format!("casestudy_{model}.{ext}")).exists());
        }
    }
}

#[test]
fn help_documents_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let top = ok(&cumcal(dir.path(), &["--help"]));
    for sub in ["test", "simulate", "plot", "casestudy"] {
        assert!(top.contains(sub), "{sub}");
    }
    let test = ok(&cumcal(dir.path(), &["test", "--help"]));
    for flag in ["--groups", "--df-rule", "--mc", "--seed", "--clamp", "--out-dir", "--no-plots"] {
        assert!(test.contains(flag), "{flag}");
    }
    let power = ok(&cumcal(dir.path(), &["simulate", "power", "--help"]));
    for flag in ["--family", "--a", "--b", "--n", "--reps", "--config", "--sequential"] {
        assert!(power.contains(flag), "{flag}");
    }
    // no arguments prints usage and fails
    let out = cumcal(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}
