//! Small Monte Carlo grid followed by a log-log rate fit.
use entroscope::bench::{cell_rmse, fit_rate, run_bench, BenchConfig};

fn main() -> entroscope::Result<()> {
    let cfg = BenchConfig::from_json(
        r#"{"densities": [{"kind": "beta_product", "alpha": 2.0, "beta": 2.0, "d": 1}],
            "class": {"s": 2, "p": 2, "d": 1, "L": 1},
            "estimators": ["optimal", "plugin"],
            "n_grid": [1000, 4000, 16000], "replicates": 20, "seed": 11}"#,
    )?;
    let records = run_bench(&cfg)?;
    let density = cfg.densities[0].id();
    for id in &cfg.estimators {
        let fit = fit_rate(&records, id.as_str(), &density, 0)?;
        let cells: Vec<String> = cell_rmse(&records, id.as_str(), &density).iter().map(|(n, r)| format!("{n}:{r:.4}")).collect();
        println!(
            "{:<8} slope {:+.3} [{:+.3}, {:+.3}]  r2 {:.3}  rmse {}",
            id.as_str(),
            fit.slope,
            fit.ci_low,
            fit.ci_high,
            fit.r_squared,
            cells.join(" ")
        );
    }
    Ok(())
}
