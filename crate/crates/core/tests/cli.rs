use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entroscope::cli::{run, EXIT_CHECK, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("entroscope").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_uniform_samples(dir: &Path, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let text: String = (0..n).map(|_| format!("{}\n", rng.random::<f64>())).collect();
    let path = dir.join("samples.txt");
    std::fs::write(&path, format!("# iid uniform points\n{text}")).unwrap();
    path.display().to_string()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["estimate", "only-one-arg"]).0, EXIT_USAGE);
    assert_eq!(call(&["bench", "x.json", "--resume"]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn missing_files_exit_with_two() {
    let (code, _, err) = call(&["estimate", "/nonexistent/samples.txt", &config("estimator.json")]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("error:"));
    assert_eq!(call(&["rate", "/nonexistent.csv"]).0, EXIT_DATA);
    assert_eq!(call(&["lb", "/nonexistent.json"]).0, EXIT_DATA);
}

#[test]
fn estimate_prints_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let samples = write_uniform_samples(dir.path(), 3000);
    let (code, out, err) = call(&["estimate", &samples, &config("estimator.json")]);
    assert_eq!(code, EXIT_OK, "{err}");
    let h: f64 = out.lines().find_map(|l| l.strip_prefix("entropy=")).unwrap().parse().unwrap();
    assert!(out.contains("k=1\n"));
    assert!(h.abs() < 0.05, "{h}");

    let (code, periodic, _) = call(&["estimate", &samples, &config("estimator.json"), "--boundary", "periodic"]);
    assert_eq!(code, EXIT_OK);
    assert_ne!(periodic, out);
    assert_eq!(call(&["estimate", &samples, &config("estimator.json"), "--kernel", "gauss"]).0, EXIT_USAGE);
}

#[test]
fn malformed_samples_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0.1\n0.2 0.3\n").unwrap();
    assert_eq!(call(&["estimate", path.to_str().unwrap(), &config("estimator.json")]).0, EXIT_DATA);
    std::fs::write(&path, "0.1\nNaN\n").unwrap();
    assert_eq!(call(&["estimate", path.to_str().unwrap(), &config("estimator.json")]).0, EXIT_DATA);
}

#[test]
fn bench_then_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    std::fs::write(
        &cfg,
        r#"{"densities": [{"kind": "cosine_bump", "amplitude": 0.5, "d": 1}],
            "class": {"s": 2, "p": 2, "d": 1, "L": 1},
            "estimators": ["plugin"], "n_grid": [500, 1000, 2000], "replicates": 20, "seed": 3}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let (code, out, err) = call(&["bench", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("wrote 60 records"));

    let (code, again, _) = call(&["bench", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(again.as_bytes(), std::fs::read(&csv).unwrap().as_slice());

    let (code, out, err) = call(&["rate", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("plugin") && out.contains("500;1000;2000"), "{out}");
}

#[test]
fn lower_bound_and_selfcheck_pass() {
    let (code, out, err) = call(&["lb", &config("lb.json")]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(!out.contains("FAIL"));
    let (code, out, _) = call(&["selfcheck"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    assert_ne!(EXIT_CHECK, EXIT_OK);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_entroscope");
    assert_eq!(Command::new(bin).output().unwrap().status.code(), Some(EXIT_USAGE));
    let missing = Command::new(bin).args(["rate", "/nonexistent.csv"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}
