use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn multijet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multijet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_run(command: &str, file: &str, extra: &[&str]) -> (Value, i32) {
    let path = problem(file);
    let mut args = vec![command, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = multijet(&args);
    let v: Value = serde_json::from_slice(&out.stdout).expect("json report");
    (v, out.status.code().unwrap())
}

#[test]
fn example_branches() {
    let (r, code) = json_run("check-integrability", "example_2_3.prob", &[]);
    assert_eq!(code, 1);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["confidence"], "proven");
    assert_eq!(r["verdict"], "IntegrableOnSubmanifold");
    let kids = r["result"]["tree"]["root"]["children"].as_array().unwrap();
    let mut seen: Vec<(String, String)> = kids
        .iter()
        .map(|k| (k["verdict"].as_str().unwrap().to_string(), k["constraints"].to_string()))
        .collect();
    seen.sort();
    assert_eq!(seen[0].0, "IntegrableOnSubmanifold");
    assert!(seen[0].1.contains("x1 + x2 - y1 + 1"), "{}", seen[0].1);
    assert_eq!(seen[1].0, "NoSolution");
    let bad = kids.iter().find(|k| k["verdict"] == "NoSolution").unwrap();
    assert_eq!(bad["witness"], "2");
}

#[test]
fn quadratic_has_three_free_functions() {
    let (r, code) = json_run("euler-lagrange", "quadratic.prob", &["--pivot", "diag"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["family"]["free_count"], 3);
    assert_eq!(r["result"]["family"]["pivots"], json!(["G0_0_0"]));
    assert_eq!(r["result"]["equations"][0], "3*y^2 - G0_0_0 - G0_1_1");
    let (r, _) = json_run("euler-lagrange", "quadratic.prob", &["--pivot", "diag-last"]);
    assert_eq!(r["result"]["family"]["pivots"], json!(["G0_1_1"]));
}

#[test]
fn input_errors_exit_64() {
    let (r, code) = json_run("check-integrability", "empty_multivector.prob", &[]);
    assert_eq!(code, 64);
    assert_eq!(r["error"]["kind"], "InputError");
    assert_eq!(r["error"]["line"], 3);

    let (r, code) = json_run("check-integrability", "bad_syntax.prob", &[]);
    assert_eq!(code, 64);
    assert_eq!(r["error"]["line"], 4);

    let (r, code) = json_run("euler-lagrange", "example_2_3.prob", &[]);
    assert_eq!(code, 64);
    assert!(r["error"]["message"].as_str().unwrap().contains("`lagrangian`"));

    let (_, code) = json_run("check-integrability", "does_not_exist.prob", &[]);
    assert_eq!(code, 64);
    assert_eq!(multijet(&["frobnicate", "x.prob"]).status.code(), Some(64));
    assert_eq!(
        multijet(&["singular", "x.prob", "--pivot", "sideways"]).status.code(),
        Some(64)
    );
}

#[test]
fn reads_standard_input() {
    use std::io::Write;
    use std::process::Stdio;
    let text = std::fs::read_to_string(problem("example_2_3.prob")).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_multijet"))
        .args(["check-integrability", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["file"], "-");
    assert_eq!(v["verdict"], "IntegrableOnSubmanifold");
}

#[test]
fn verdict_exit_codes() {
    for (cmd, file, code, verdict) in [
        ("singular", "singular_linear.prob", 1, "NoSolution"),
        ("singular", "singular_potential.prob", 0, "FinalSubmanifold"),
        ("noether", "free_scalar_noether.prob", 0, "Symmetry"),
        ("noether", "potential_noether.prob", 1, "NotSymmetry"),
        ("curvature", "flat_connection.prob", 0, "Flat"),
        ("curvature", "curved_connection.prob", 1, "Curved"),
        ("sopde-check", "sopde_field.prob", 0, "Sopde"),
        ("sopde-check", "not_sopde.prob", 1, "NotSopde"),
        ("euler-lagrange", "quadratic_conditions.prob", 0, "Solved"),
    ] {
        let (r, c) = json_run(cmd, file, &[]);
        assert_eq!((c, r["verdict"].as_str().unwrap()), (code, verdict), "{cmd} {file}");
    }
}

#[test]
fn singular_potential_constraints() {
    let (r, _) = json_run("singular", "singular_potential.prob", &[]);
    let cons = r["result"]["constraints"].to_string();
    for c in ["\"y\"", "\"vy_0\"", "\"vy_1\""] {
        assert!(cons.contains(c), "{cons}");
    }
}

#[test]
fn noether_current_and_defect_override() {
    let (r, _) = json_run("noether", "free_scalar_noether.prob", &[]);
    assert_eq!(r["result"]["closed_on_section"], true);
    assert_eq!(r["result"]["closedness_residual"], "0");
    let (r, code) = json_run("noether", "potential_noether.prob", &[]);
    assert_eq!(code, 1);
    assert!(r["result"].get("current").is_none());
    let (r, code) = json_run("noether", "potential_noether.prob", &["--acknowledge-defect"]);
    assert_eq!(code, 1);
    assert!(r["result"].get("current").is_some());
}

#[test]
fn numeric_commands() {
    let dir = std::env::temp_dir().join(format!("multijet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("branch_b.csv");
    let (r, code) = json_run("integrate", "branch_b_flow.prob", &["--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["confidence"], "numeric");
    assert!(r["result"]["max_error"].as_f64().unwrap() <= 1e-6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x1,x2,y1,y2\n"));
    assert_eq!(text.lines().count(), 1 + 121);

    let (r, code) = json_run("residual", "harmonic.prob", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["confidence"], "numeric");
    assert!(r["result"]["max_residual"].as_f64().unwrap() <= 1e-6);
    let (_, code) = json_run("residual", "harmonic.prob", &["--tolerance", "1e-14"]);
    assert_eq!(code, 1);

    // A section read back from disk gives the same residual as the sampled one.
    let c = multijet_core::geometry::ChartSpec::new(["x0", "x1"], ["y"])
        .unwrap()
        .with_jet()
        .unwrap();
    let c = std::sync::Arc::new(c);
    let phi = multijet_core::jet::Section::new(&c, vec![c.parse("x0^3 - 3*x0*x1^2").unwrap()]).unwrap();
    let grid = multijet_core::numeric::BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 101).unwrap();
    let sec = multijet_core::numeric::NumericSection::sample(&phi, &grid).unwrap();
    let harmonic_csv = dir.join("harmonic.csv");
    std::fs::write(&harmonic_csv, sec.to_csv().unwrap()).unwrap();
    let (from_file, code) = json_run("residual", "harmonic.prob", &["--csv", harmonic_csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(from_file["result"]["max_residual"], r["result"]["max_residual"]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reports_are_byte_stable() {
    for (cmd, file) in [
        ("check-integrability", "example_2_3.prob"),
        ("euler-lagrange", "quadratic.prob"),
        ("singular", "singular_potential.prob"),
        ("integrate", "branch_b_flow.prob"),
    ] {
        let path = problem(file);
        let a = multijet(&[cmd, path.to_str().unwrap(), "--seed", "7"]);
        let b = multijet(&[cmd, path.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(a.stdout, b.stdout, "{cmd} {file}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn batch_preserves_order_and_takes_the_worst_code() {
    let files = ["quadratic.prob", "singular_linear.prob", "harmonic.prob"];
    let paths: Vec<String> = files.iter().map(|f| problem(f).to_str().unwrap().to_string()).collect();
    let mut args = vec!["singular", "--jobs", "3"];
    args.extend(paths.iter().map(String::as_str));
    let out = multijet(&args);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    for (r, p) in arr.iter().zip(&paths) {
        assert_eq!(r["file"], p.as_str());
    }
    args.push("/nonexistent.prob");
    assert_eq!(multijet(&args).status.code(), Some(64));
}

#[test]
fn text_output_names_the_verdict() {
    let path = problem("example_2_3.prob");
    let out = multijet(&["check-integrability", path.to_str().unwrap(), "--output", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("verdict: IntegrableOnSubmanifold (exit 1, confidence proven)"),
        "{text}"
    );
    assert!(text.contains("witness 2"));
}
