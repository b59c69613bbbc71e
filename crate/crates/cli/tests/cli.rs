use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MODEL: &str = "edges + nodematch(Grade) + gwesp(0.2, fixed = TRUE)";

fn example(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/example")
        .join(file)
}

fn ergm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(output: Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn model_args() -> Vec<String> {
    vec![
        "--network".into(),
        example("school.edges").display().to_string(),
        "--attrs".into(),
        example("school.attrs").display().to_string(),
        "--model".into(),
        MODEL.into(),
    ]
}

fn fit(out: &Path, threads: &str) -> String {
    let mut args = vec!["--threads", threads, "fit"];
    let model = model_args();
    args.extend(model.iter().map(String::as_str));
    args.extend([
        "--burn-in",
        "5",
        "--main-iters",
        "20",
        "--aux-iters",
        "2000",
    ]);
    ok(ergm(out, &args))
}

#[test]
fn help_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let help = ergm(tmp.path(), &["--help"]);
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("calibrate"));
    let bad = ergm(tmp.path(), &["fit", "--no-such-flag"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fit_writes_draws_summary_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    let stdout = fit(&out, "2");
    assert!(stdout.contains("theta2 (nodematch.Grade)"));
    assert!(stdout.contains("Acceptance rate:"));

    let draws = fs::read_to_string(out.join("draws.tsv")).unwrap();
    let mut lines = draws.lines();
    assert_eq!(lines.next(), Some("chain\titer\ttheta_1\ttheta_2\ttheta_3"));
    assert_eq!(lines.count(), 6 * 20);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["program"], "ergm");
    assert!(meta.to_string().contains("main_iters"));
    for file in ["summary.txt", "trace.svg", "density.svg"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    fit(&tmp.path().join("one"), "1");
    fit(&tmp.path().join("four"), "4");
    let read = |d: &str| fs::read(tmp.path().join(d).join("draws.tsv")).unwrap();
    assert_eq!(read("one"), read("four"));
}

#[test]
fn summary_of_existing_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let draws = tmp.path().join("draws.tsv");
    let mut text = String::from("chain\titer\ttheta_1\ttheta_2\n");
    for c in 1..=3 {
        for t in 1..=4 {
            text.push_str(&format!("{c}\t{t}\t{}\t-1\n", c * t));
        }
    }
    fs::write(&draws, text).unwrap();
    let d = draws.to_str().unwrap();

    let plain = ok(ergm(tmp.path(), &["summary", "--draws", d]));
    assert!(plain.contains("theta1 "));
    assert!(!plain.contains("Acceptance rate"));

    let named = ok(ergm(
        tmp.path(),
        &["summary", "--draws", d, "--model", "edges + triangle"],
    ));
    assert!(named.contains("theta2 (triangle)"));

    let mismatch = ergm(tmp.path(), &["summary", "--draws", d, "--model", "edges"]);
    assert_eq!(mismatch.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("2 columns"));
}

#[test]
fn simulate_writes_requested_networks() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["--seed", "4", "simulate"];
    let model = model_args();
    args.extend(model.iter().map(String::as_str));
    args.extend([
        "--theta=-4.5,2.2,1",
        "--nsim",
        "3",
        "--aux-iters",
        "1000",
        "--thin",
        "100",
    ]);
    ok(ergm(tmp.path(), &args));
    let stats = fs::read_to_string(tmp.path().join("stats.tsv")).unwrap();
    assert!(stats.starts_with("sim\tedges\tnodematch.Grade\tgwesp.fixed.0.2\n"));
    assert_eq!(stats.lines().count(), 4);
    for k in 1..=3 {
        let net = tmp.path().join(format!("networks/sim_{k:04}.edges"));
        assert!(fs::read_to_string(net).unwrap().contains("n 60 undirected"));
    }
}

#[test]
fn import_with_vertex_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("edges.csv");
    let vertices = tmp.path().join("vertices.csv");
    fs::write(&edges, "from,to\nA,B\nB,C\nC,A\nA,B\n").unwrap();
    fs::write(
        &vertices,
        ",name,Grade,Sex\n1,A,7,F\n2,B,8,M\n3,C,7,F\n4,D,9,M\n",
    )
    .unwrap();
    let stdout = ok(ergm(
        tmp.path(),
        &[
            "import",
            "--edges",
            edges.to_str().unwrap(),
            "--vertices",
            vertices.to_str().unwrap(),
            "--id-column",
            "name",
            "--name",
            "tiny",
        ],
    ));
    assert!(stdout.starts_with("4 nodes, 3 edges"));
    let attrs = fs::read_to_string(tmp.path().join("tiny.attrs")).unwrap();
    assert_eq!(attrs, "Grade\tSex\n7\tF\n8\tM\n7\tF\n9\tM\n");
    let net = fs::read_to_string(tmp.path().join("tiny.edges")).unwrap();
    assert!(net.contains("0 1\n0 2\n1 2\n"));

    let unknown = tmp.path().join("bad.csv");
    fs::write(&unknown, "A,B\nA,Z\n").unwrap();
    let failed = ergm(
        tmp.path(),
        &[
            "import",
            "--edges",
            unknown.to_str().unwrap(),
            "--vertices",
            vertices.to_str().unwrap(),
            "--id-column",
            "name",
        ],
    );
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("line 2"));
}

#[test]
fn bad_formula_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ergm(
        tmp.path(),
        &[
            "fit",
            "--network",
            example("school.edges").to_str().unwrap(),
            "--model",
            "edges + nodematch(",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn exact_log_normalizer_of_three_nodes() {
    // Three dyads, independent at theta = 0.3: log z = 3 log(1 + e^0.3).
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(ergm(
        tmp.path(),
        &[
            "dev",
            "exact-logz",
            "--nodes",
            "3",
            "--model",
            "edges",
            "--theta",
            "0.3",
        ],
    ));
    let value: f64 = stdout.trim().parse().unwrap();
    assert!((value - 3.0 * (1.0 + 0.3f64.exp()).ln()).abs() < 1e-12);
}
