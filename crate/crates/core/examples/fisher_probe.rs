//! Fisher information against second-derivative norms on a few densities.
use entroscope::densities::{make_density, DensitySpec};
use entroscope::oracle::{fisher_probe, ProbeSubject};

fn main() -> entroscope::Result<()> {
    let mut subjects: Vec<ProbeSubject> = (2..=6).map(|e| ProbeSubject::shrinking_bump(2f64.powi(-e))).collect();
    for spec in [
        DensitySpec::CosineBump { amplitude: 0.5, d: 1 },
        DensitySpec::UniformCube { d: 1 },
        DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 },
    ] {
        subjects.push(ProbeSubject::from_model(make_density(&spec)?));
    }
    let report = fisher_probe(&subjects, 2.0, 1 << 14)?;
    for row in &report.rows {
        let note = row.excluded.as_deref().unwrap_or("");
        println!("{:<28} J {:>12.4e}  ratio {:>10.4}  {note}", row.name, row.fisher, row.ratio);
    }
    println!("max ratio {:.4}, all finite {}", report.max_ratio, report.all_finite);
    Ok(())
}
