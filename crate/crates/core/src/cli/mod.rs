//! Command-line front end. [`run`] takes the argument vector and two sinks
//! and returns the process exit code: 0 success, 1 usage, 2 data or
//! configuration error, 3 failed check.

mod selfcheck;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::bench::{fit_rate, read_records, run_bench_resume, write_records, write_rate_csv, BenchConfig, RateFit};
use crate::densities::PointSet;
use crate::error::{Error, Result};
use crate::estimator::{estimate_entropy, estimate_entropy_unbounded, EstimatorConfig, OrliczTail};
use crate::kernels::{BoundaryMode, KernelKind};
use crate::lower_bound::{entropy_gap, lipschitz_membership_check, poisson_mixture_tv, tv_bound, LowerBoundConfig};

pub use selfcheck::{run_selfcheck, CheckLine};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

/// Residual gate shared by `lb` and `selfcheck`.
const MOMENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "entroscope", version, about = "Differential entropy estimation over Lipschitz balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the entropy of a sample file.
    Estimate {
        /// One point per line, whitespace-separated coordinates, `#` comments.
        samples: PathBuf,
        /// Estimator configuration (JSON).
        config: PathBuf,
        /// `box` or `triangle_product`.
        #[arg(long, value_parser = parse_name::<KernelKind>)]
        kernel: Option<KernelKind>,
        /// Overrides the rate-optimal bandwidth.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// `zero_extension` or `periodic`.
        #[arg(long, value_parser = parse_name::<BoundaryMode>)]
        boundary: Option<BoundaryMode>,
        /// Treat the sample as unbounded with this Orlicz tail exponent.
        #[arg(long = "tail-q")]
        tail_q: Option<f64>,
    },
    /// Run a Monte Carlo grid and write experiment records as CSV.
    Bench {
        config: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep rows already present in `--out` and run only the rest.
        #[arg(long, requires = "out")]
        resume: bool,
    },
    /// Fit log-log convergence rates to a records CSV.
    Rate {
        csv: PathBuf,
        /// Bootstrap seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the fits as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the moment-matched priors of the lower-bound construction.
    Lb {
        config: PathBuf,
        /// Write the CSV report here instead of after the summary.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in oracle suite.
    Selfcheck,
}

/// Parses `args` (program name first) and executes the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Estimate { samples, config, kernel, bandwidth, boundary, tail_q } => {
            cmd_estimate(&samples, &config, kernel, bandwidth, boundary, tail_q, out)
        }
        Command::Bench { config, out: path, resume } => cmd_bench(&config, path.as_deref(), resume, out),
        Command::Rate { csv, seed, out: path } => cmd_rate(&csv, seed, path.as_deref(), out, err),
        Command::Lb { config, csv } => cmd_lb(&config, csv.as_deref(), out),
        Command::Selfcheck => cmd_selfcheck(out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parses a snake_case enum name through its serde representation.
/// Flag values use the same spelling as the JSON configs.
fn parse_name<T: DeserializeOwned>(value: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(value.to_string())).map_err(|_| format!("unknown value `{value}`"))
}

/// One point per line; blank lines and `#` comments are skipped. All rows
/// must have the same number of coordinates.
pub fn parse_samples(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Data(format!("line {}: `{t}` is not a number", lineno + 1))))
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Data(format!("line {}: {} coordinates, expected {d}", lineno + 1, row.len())));
            }
            _ => {}
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("line {}: non-finite coordinate {v}", lineno + 1)));
        }
        coords.extend(row);
    }
    let d = dim.ok_or_else(|| Error::Data("sample file contains no points".into()))?;
    PointSet::new(d, coords)
}

fn cmd_estimate(
    samples: &Path,
    config: &Path,
    kernel: Option<KernelKind>,
    bandwidth: Option<f64>,
    boundary: Option<BoundaryMode>,
    tail_q: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32> {
    let points = parse_samples(&read_text(samples)?)?;
    let mut cfg: EstimatorConfig = read_json(config)?;
    if let Some(k) = kernel {
        cfg.kernel = k;
    }
    if let Some(b) = boundary {
        cfg.boundary = b;
    }
    if let Some(h) = bandwidth {
        cfg.bandwidth_override = Some(h);
    }
    if points.dim() != cfg.class.d {
        return Err(Error::Data(format!("samples have d = {}, config has d = {}", points.dim(), cfg.class.d)));
    }
    let result = match tail_q {
        Some(q) => estimate_entropy_unbounded(&points, &cfg, &OrliczTail::new(q)?)?,
        None => estimate_entropy(&points, &cfg)?,
    };
    out.write_all(result.to_record().as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_bench(config: &Path, path: Option<&Path>, resume: bool, out: &mut dyn Write) -> Result<i32> {
    let cfg = BenchConfig::from_json(&read_text(config)?)?;
    let existing = match path {
        Some(p) if resume && p.exists() => read_records(File::open(p)?)?,
        _ => Vec::new(),
    };
    let records = run_bench_resume(&cfg, &existing)?;
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_records(&records, &mut w)?;
            w.flush()?;
            writeln!(out, "wrote {} records to {}", records.len(), p.display())?;
        }
        None => write_records(&records, out)?,
    }
    Ok(EXIT_OK)
}

fn cmd_rate(csv: &Path, seed: u64, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let records = read_records(File::open(csv).map_err(|e| Error::Data(format!("{}: {e}", csv.display())))?)?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for r in &records {
        let key = (r.estimator.clone(), r.density.clone());
        if !pairs.contains(&key) {
            pairs.push(key);
        }
    }
    let mut fits: Vec<RateFit> = Vec::new();
    for (e, d) in &pairs {
        match fit_rate(&records, e, d, seed) {
            Ok(f) => fits.push(f),
            Err(x) => writeln!(err, "skipped {e} on {d}: {x}")?,
        }
    }
    if fits.is_empty() {
        return Err(Error::InsufficientData("no (estimator, density) pair has enough data for a rate fit".into()));
    }
    writeln!(out, "{:<14} {:<28} {:>9} {:>9} {:>9} {:>7}  n_grid", "estimator", "density", "slope", "ci_low", "ci_high", "r2")?;
    for f in &fits {
        let grid: Vec<String> = f.n_grid.iter().map(|n| n.to_string()).collect();
        writeln!(
            out,
            "{:<14} {:<28} {:>9.4} {:>9.4} {:>9.4} {:>7.4}  {}",
            f.estimator,
            f.density,
            f.slope,
            f.ci_low,
            f.ci_high,
            f.r_squared,
            grid.join(";")
        )?;
    }
    if let Some(p) = path {
        write_rate_csv(&fits, BufWriter::new(File::create(p)?))?;
    }
    Ok(EXIT_OK)
}

fn cmd_lb(config: &Path, csv: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let cfg: LowerBoundConfig = read_json(config)?;
    let priors = cfg.build()?;
    let n = cfg.n;
    let nf = n as f64;
    let delta = entropy_gap(&priors);
    let tv = poisson_mixture_tv(&priors, n, None);
    let bound = tv_bound(n, priors.q, priors.k, cfg.d3);
    let membership = lipschitz_membership_check(
        &priors,
        &cfg.class,
        cfg.cells(),
        cfg.bandwidth(),
        n,
        cfg.draws,
        cfg.seed,
    )?;
    let residual = priors.base_residual().max(priors.tilted_residual());
    let checks = [
        ("moment residuals", residual <= MOMENT_TOLERANCE),
        ("entropy gap positive", delta > 0.0),
        ("tv under bound", tv <= bound),
    ];

    writeln!(out, "lower-bound priors: n = {n}, q = {}, k = {}, eta = {:e}", priors.q, priors.k, priors.eta)?;
    writeln!(out, "  LP objective          {:e}", priors.objective)?;
    writeln!(out, "  moment residual       {residual:e} (base {:e}, tilted {:e})", priors.base_residual(), priors.tilted_residual())?;
    writeln!(out, "  entropy gap           {delta:e} (x n ln n = {:.6})", delta * nf * nf.ln())?;
    writeln!(out, "  TV(gamma0, gamma1)    {tv:e}")?;
    writeln!(out, "  TV bound              {bound:e}")?;
    writeln!(
        out,
        "  membership ({} cells, {} draws): moment {:?}, mass {:?}, joint {:?}",
        membership.cells, membership.draws, membership.moment_pass_rate, membership.mass_pass_rate, membership.joint_pass_rate
    )?;
    for (name, ok) in &checks {
        writeln!(out, "{} {name}", if *ok { "PASS" } else { "FAIL" })?;
    }

    let rows: Vec<(&str, String)> = vec![
        ("n", n.to_string()),
        ("q", priors.q.to_string()),
        ("k", priors.k.to_string()),
        ("eta", priors.eta.to_string()),
        ("dilation", priors.dilation.to_string()),
        ("objective", priors.objective.to_string()),
        ("base_residual", priors.base_residual().to_string()),
        ("tilted_residual", priors.tilted_residual().to_string()),
        ("entropy_gap", delta.to_string()),
        ("tv", tv.to_string()),
        ("tv_bound", bound.to_string()),
        ("cells", membership.cells.to_string()),
        ("moment_pass_rate_0", membership.moment_pass_rate[0].to_string()),
        ("moment_pass_rate_1", membership.moment_pass_rate[1].to_string()),
        ("mass_pass_rate_0", membership.mass_pass_rate[0].to_string()),
        ("mass_pass_rate_1", membership.mass_pass_rate[1].to_string()),
    ];
    let write_csv = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        c.write_record(["quantity", "value"])?;
        for (k, v) in &rows {
            c.write_record([*k, v.as_str()])?;
        }
        c.flush()?;
        Ok(())
    };
    match csv {
        Some(p) => write_csv(&mut BufWriter::new(File::create(p)?))?,
        None => {
            writeln!(out)?;
            write_csv(out)?;
        }
    }
    Ok(if checks.iter().all(|c| c.1) { EXIT_OK } else { EXIT_CHECK })
}

fn cmd_selfcheck(out: &mut dyn Write) -> Result<i32> {
    let lines = run_selfcheck()?;
    for l in &lines {
        writeln!(out, "{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail)?;
    }
    Ok(if lines.iter().all(|l| l.passed) { EXIT_OK } else { EXIT_CHECK })
}
