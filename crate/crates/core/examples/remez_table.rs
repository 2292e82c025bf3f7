//! Best uniform polynomial approximations of -t ln t on [0, 1].
use entroscope::poly_approx::{remez_minimax, write_coefficients_csv};

fn main() -> entroscope::Result<()> {
    let mut polys = Vec::new();
    println!("{:>3} {:>12} {:>12} {:>5}", "k", "error", "k*error", "iter");
    for k in [1, 2, 4, 8, 16, 24] {
        let p = remez_minimax(1.0, k)?;
        println!("{k:>3} {:>12.4e} {:>12.6} {:>5}", p.sup_error(), k as f64 * p.sup_error(), p.iterations());
        polys.push(p);
    }
    // k·error levels off: the error decays like 1/k, not geometrically.
    println!();
    write_coefficients_csv(&polys[..3], std::io::stdout().lock())
}
