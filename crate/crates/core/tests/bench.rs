use entroscope::bench::{
    bias_summary, cell_seed, fit_rate, read_records, run_bench, run_bench_resume, write_records, BenchConfig,
    ExperimentRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn small_config(reps: usize) -> BenchConfig {
    BenchConfig::from_json(&format!(
        r#"{{
            "densities": [{{ "kind": "beta_product", "alpha": 2.0, "beta": 2.0, "d": 1 }}],
            "class": {{ "s": 2.0, "p": 2.0, "d": 1, "L": 1.0 }},
            "estimators": ["optimal", "plugin"],
            "n_grid": [1000],
            "replicates": {reps},
            "seed": 99
        }}"#
    ))
    .unwrap()
}

fn csv_bytes(records: &[ExperimentRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_records(records, &mut out).unwrap();
    out
}

fn synthetic(estimator: &str, n_grid: &[usize], reps: usize, error: impl Fn(usize, usize) -> f64) -> Vec<ExperimentRecord> {
    let mut rows = Vec::new();
    for &n in n_grid {
        for r in 0..reps {
            let e = error(n, r);
            rows.push(ExperimentRecord {
                estimator: estimator.into(),
                density: "synthetic".into(),
                n,
                replicate: r,
                seed: 0,
                estimate: e,
                truth: 0.0,
                error: e,
                wall_time_ms: 0.0,
            });
        }
    }
    rows
}

#[test]
fn one_cell_per_estimator_and_replicate() {
    let records = run_bench(&small_config(2)).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        assert_eq!(r.n, 1000);
        assert_eq!(r.seed, cell_seed(99, &r.density, 1000, r.replicate));
        assert!((r.error - (r.estimate - r.truth)).abs() < 1e-15);
        assert_eq!(r.wall_time_ms, 0.0);
    }
    // Estimators on the same cell see the same sample.
    assert_eq!(records[0].seed, records[1].seed);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small_config(2);
    assert_eq!(csv_bytes(&run_bench(&cfg).unwrap()), csv_bytes(&run_bench(&cfg).unwrap()));
}

#[test]
fn csv_round_trips() {
    let records = run_bench(&small_config(1)).unwrap();
    let bytes = csv_bytes(&records);
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.starts_with(b"estimator,density,n,replicate,seed,estimate,truth,error,wall_time_ms\n"));
    assert_eq!(read_records(bytes.as_slice()).unwrap(), records);
    assert!(read_records(b"a,b,c\n1,2,3\n".as_slice()).is_err());
}

#[test]
fn resume_fills_only_missing_cells() {
    let cfg = small_config(3);
    let full = run_bench(&cfg).unwrap();
    let mut partial: Vec<ExperimentRecord> = full.iter().filter(|r| r.replicate != 1).cloned().collect();
    // A marker proves kept rows are reused rather than recomputed.
    partial[0].wall_time_ms = 123.0;
    let resumed = run_bench_resume(&cfg, &partial).unwrap();
    assert_eq!(resumed.len(), full.len());
    assert_eq!(resumed[0].wall_time_ms, 123.0);
    let mut expected = full.clone();
    expected[0].wall_time_ms = 123.0;
    assert_eq!(resumed, expected);
}

#[test]
fn root_n_noise_recovers_slope_minus_half() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = [1000, 4000, 16000, 64000];
    let mut draws = Vec::new();
    for _ in grid {
        draws.push((0..40).map(|_| normal.sample(&mut rng)).collect::<Vec<f64>>());
    }
    let records = synthetic("fake", &grid, 40, |n, r| {
        let i = grid.iter().position(|&g| g == n).unwrap();
        draws[i][r] / (n as f64).sqrt()
    });
    let fit = fit_rate(&records, "fake", "synthetic", 1).unwrap();
    assert!(fit.ci_low <= -0.5 && -0.5 <= fit.ci_high, "{fit:?}");
    assert!(fit.r_squared > 0.9);
}

#[test]
fn constant_errors_have_zero_slope() {
    let records = synthetic("flat", &[100, 200, 400], 20, |_, _| 0.25);
    let fit = fit_rate(&records, "flat", "synthetic", 0).unwrap();
    assert!(fit.slope.abs() < 1e-12);
    assert!(fit.ci_low <= 0.0 && 0.0 <= fit.ci_high);
}

#[test]
fn rate_fit_demands_enough_data() {
    let records = synthetic("few", &[100, 200, 400], 5, |_, _| 0.1);
    assert!(fit_rate(&records, "few", "synthetic", 0).is_err());
    let records = synthetic("short", &[100, 200], 30, |_, _| 0.1);
    assert!(fit_rate(&records, "short", "synthetic", 0).is_err());
}

#[test]
fn bias_interval_follows_the_sign() {
    let records = synthetic("biased", &[500], 30, |_, r| 0.1 + 0.001 * (r as f64 - 14.5));
    let b = bias_summary(&records, "biased", "synthetic", 500, 2).unwrap();
    assert!(!b.contains_zero() && b.ci_low > 0.0);
    assert_eq!(b.replicates, 30);
}

#[test]
fn config_errors_are_reported() {
    let bad_estimator = r#"{"densities": [{"kind": "uniform_cube", "d": 1}], "class": {"s": 1, "p": 2, "d": 1, "L": 1},
        "estimators": ["oracle"], "n_grid": [100]}"#;
    assert!(BenchConfig::from_json(bad_estimator).is_err());
    let empty_grid = r#"{"densities": [{"kind": "uniform_cube", "d": 1}], "class": {"s": 1, "p": 2, "d": 1, "L": 1},
        "estimators": ["plugin"], "n_grid": []}"#;
    assert!(BenchConfig::from_json(empty_grid).is_err());
}

#[test]
fn seeds_depend_on_every_coordinate() {
    let base = cell_seed(1, "a", 10, 0);
    assert_ne!(base, cell_seed(2, "a", 10, 0));
    assert_ne!(base, cell_seed(1, "b", 10, 0));
    assert_ne!(base, cell_seed(1, "a", 11, 0));
    assert_ne!(base, cell_seed(1, "a", 10, 1));
}
