use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gausslin"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn gausslin")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const GAUSS: &str = r#"{"type":"gaussian","mean":[0],"cov":[[1.0]]}"#;
const COSINE: &str = r#"{"type":"cosine","a":0.5,"rho":1,"theta":0,"omega":"1.7320508075688772"}"#;

#[test]
fn estimate_gaussian_is_half_y() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", GAUSS);
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--prior",
            "g.json",
            "--p",
            "2",
            "--k",
            "2",
            "--y-range",
            "-2:2:1",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("f.csv"));
    assert_eq!(header, ["y", "f"]);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!((r[1] - 0.5 * r[0]).abs() <= 1e-12);
    }
}

#[test]
fn estimate_point_mass_is_zero() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "a.json",
        r#"{"type":"atomic","atoms":[[0]],"probs":[1]}"#,
    );
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--prior",
            "a.json",
            "--p",
            "1.5",
            "--y-range",
            "-3:3:0.5",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let (_, rows) = read_csv(&dir.path().join("f.csv"));
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn estimate_cosine_prior_at_p4() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", COSINE);
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--prior",
            "c.json",
            "--p",
            "4",
            "--y-range",
            "-3:3:0.5",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let (_, rows) = read_csv(&dir.path().join("f.csv"));
    for r in rows {
        assert!((r[1] - 0.5 * r[0]).abs() <= 1e-4, "{r:?}");
    }
}

#[test]
fn verify_pass_and_fail_exit_codes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", GAUSS);
    let base = [
        "verify",
        "--prior",
        "g.json",
        "--p",
        "1.5",
        "--k",
        "1.5",
        "--y-range",
        "-4:4:0.5",
    ];
    let mut pass = base.to_vec();
    pass.extend(["--A", "0.5", "--out", "r.csv"]);
    let out = run(dir.path(), &pass);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with("max_norm=") && stdout.trim_end().ends_with("pass=true"),
        "{stdout}"
    );
    let (header, rows) = read_csv(&dir.path().join("r.csv"));
    assert_eq!(header, ["y", "residual_norm"]);
    assert_eq!(rows.len(), 17);

    let mut fail = base.to_vec();
    fail.extend(["--A", "0.3"]);
    let out = run(dir.path(), &fail);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.trim_end().ends_with("pass=false"));
}

#[test]
fn verify_cosine_prior_passes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", COSINE);
    let out = run(
        dir.path(),
        &[
            "verify",
            "--prior",
            "c.json",
            "--p",
            "4",
            "--A",
            "0.5",
            "--y-range",
            "-4:4:0.5",
            "--format",
            "json",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let json_end = text.rfind('}').unwrap() + 1;
    let v: serde_json::Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["max_norm"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn verify_rejects_bad_matrix() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", GAUSS);
    for a in ["-0.5", "abc", "0.5,0.1;0.1,0.5"] {
        let out = run(
            dir.path(),
            &[
                "verify",
                "--prior",
                "g.json",
                "--p",
                "2",
                "--A",
                a,
                "--y-range",
                "0:1:1",
            ],
        );
        assert_eq!(code(&out), 2, "A = {a}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.json", r#"{"type":"gaussian","mean":[0]}"#);
    write(dir.path(), "g.json", GAUSS);
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "estimate",
            "--prior",
            "bad.json",
            "--p",
            "2",
            "--y-range",
            "0:1:1",
        ],
        vec![
            "estimate",
            "--prior",
            "missing.json",
            "--p",
            "2",
            "--y-range",
            "0:1:1",
        ],
        vec![
            "estimate",
            "--prior",
            "g.json",
            "--p",
            "x",
            "--y-range",
            "0:1:1",
        ],
        vec![
            "estimate",
            "--prior",
            "g.json",
            "--p",
            "2",
            "--y-range",
            "0:1:0",
        ],
        vec![
            "estimate",
            "--prior",
            "g.json",
            "--p",
            "2",
            "--y-range",
            "0:1:1",
            "--format",
            "xml",
        ],
        vec!["estimate", "--prior", "g.json", "--p", "2"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = run(dir.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "a.json",
        r#"{"type":"atomic","atoms":[[0]],"probs":[1]}"#,
    );
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--prior",
            "a.json",
            "--p",
            "2",
            "--y-range",
            "1000:1000:1",
        ],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn construct_prior_for_p4() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &[
            "construct-prior",
            "--p",
            "4",
            "--a",
            "0.5",
            "--rho",
            "1",
            "--theta",
            "0",
            "--out",
            "c.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let listing = String::from_utf8(out.stdout).unwrap();
    let omegas: Vec<(f64, bool)> = listing
        .lines()
        .map(|l| {
            let (w, s) = l.split_once(' ').unwrap();
            (
                w.trim_start_matches("omega=").parse().unwrap(),
                s == "selected=true",
            )
        })
        .collect();
    let root3 = 3f64.sqrt();
    assert_eq!(omegas.len(), 3);
    for ((w, _), want) in omegas.iter().zip([-root3, 0.0, root3]) {
        assert!((w - want).abs() <= 1e-12);
    }
    assert_eq!(omegas.iter().filter(|(_, s)| *s).count(), 1);
    let text = std::fs::read_to_string(dir.path().join("c.json")).unwrap();
    let prior = gausslin::Prior::from_json(&text).unwrap();
    assert_eq!(prior.kind(), "cosine");
    let (header, rows) = read_csv(&dir.path().join("c.density.csv"));
    assert_eq!(header, ["x", "density"]);
    assert!(rows.iter().all(|r| r[1] >= 0.0));
}

#[test]
fn construct_prior_rho_zero_is_gaussian() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &[
            "construct-prior",
            "--p",
            "4",
            "--a",
            "0.3",
            "--rho",
            "0",
            "--out",
            "c.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let (_, rows) = read_csv(&dir.path().join("c.density.csv"));
    let var = 0.3 / 0.7;
    for r in rows {
        let g = (-0.5 * r[0] * r[0] / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        assert!((r[1] - g).abs() <= 1e-14, "{r:?}");
    }
}

#[test]
fn construct_prior_p3_and_impossible_cases() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["construct-prior", "--p", "3", "--out", "c.json"],
    );
    assert_eq!(code(&out), 0);
    let listing = String::from_utf8(out.stdout).unwrap();
    assert!(listing.lines().any(|l| l.starts_with("omega=2")));
    for p in ["2", "1.5"] {
        let out = run(
            dir.path(),
            &["construct-prior", "--p", p, "--out", "x.json"],
        );
        assert_eq!(code(&out), 4, "p = {p}");
        assert!(!dir.path().join("x.json").exists());
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[test]
fn fig1_columns_are_normalized_densities() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["fig1", "--out", "fig1.csv"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&dir.path().join("fig1.csv"));
    assert_eq!(header.len(), 3);
    assert_eq!(header[0], "x");
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    for j in 1..3 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        assert!(col.iter().all(|v| *v >= 0.0));
        let mass = trapezoid(&xs, &col);
        assert!((mass - 1.0).abs() <= 1e-8, "{}: {mass}", header[j]);
    }

    let out = run(dir.path(), &["fig1", "--rho", "0", "--out", "g.csv"]);
    assert_eq!(code(&out), 0);
    let (header, _) = read_csv(&dir.path().join("g.csv"));
    assert_eq!(header, ["x", "density"]);
}

#[test]
fn scan_linearity_verdicts() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", GAUSS);
    write(dir.path(), "c.json", COSINE);
    let verdict = |prior: &str, p: &str| {
        let out = run(
            dir.path(),
            &[
                "scan-linearity",
                "--prior",
                prior,
                "--p",
                p,
                "--y-range",
                "-4:4:0.5",
                "--format",
                "json",
            ],
        );
        assert_eq!(code(&out), 0);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        (
            v["verdict"].as_str().unwrap().to_string(),
            v["a_star"][0][0].as_f64().unwrap(),
        )
    };
    let (v, a) = verdict("g.json", "1.5");
    assert_eq!(v, "linear");
    assert!((a - 0.5).abs() <= 1e-6);
    assert_eq!(verdict("c.json", "1.5").0, "nonlinear");
    let (v, a) = verdict("c.json", "4");
    assert_eq!(v, "linear");
    assert!((a - 0.5).abs() <= 1e-4);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", COSINE);
    let args = |out: &'static str| {
        vec![
            "estimate",
            "--prior",
            "c.json",
            "--p",
            "1.5",
            "--y-range",
            "-2:2:0.25",
            "--seed",
            "7",
            "--out",
            out,
        ]
    };
    assert_eq!(code(&run(dir.path(), &args("one.csv"))), 0);
    assert_eq!(code(&run(dir.path(), &args("two.csv"))), 0);
    assert_eq!(
        std::fs::read(dir.path().join("one.csv")).unwrap(),
        std::fs::read(dir.path().join("two.csv")).unwrap()
    );
}

#[test]
fn two_dimensional_estimate_layout() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "g2.json",
        r#"{"type":"gaussian","mean":[0,0],"cov":[[1,0],[0,1]]}"#,
    );
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--prior",
            "g2.json",
            "--p",
            "2",
            "--y-range",
            "-1:1:1",
            "--nodes",
            "101",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&dir.path().join("f.csv"));
    assert_eq!(header, ["y1", "y2", "f1", "f2"]);
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!((r[2] - 0.5 * r[0]).abs() <= 1e-10 && (r[3] - 0.5 * r[1]).abs() <= 1e-10);
    }
}
