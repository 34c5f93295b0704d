// Spatially independent solution of Fisher-KPP against the logistic curve.

use entire_fronts::model::make_fisher;
use entire_fronts::sis::{compute_gamma, verify_gamma};
use entire_fronts::spectral::compute_cstar;
use entire_fronts::Result;

/// Returns the largest deviation from `e^t / (1 + e^t)`.
pub fn run_example() -> Result<f64> {
    let m = make_fisher(1.0, 1.0)?;
    let s = compute_cstar(&m)?;
    let g = compute_gamma(&m, &s, 1e-10)?;
    let report = verify_gamma(&m, &g);
    let err = (0..g.len())
        .map(|i| {
            let t = g.t(i);
            (g.values[[i, 0]] - 1.0 / (1.0 + (-t).exp())).abs()
        })
        .fold(0.0, f64::max);
    for t in [-10.0, -2.0, 0.0, 2.0, 10.0] {
        println!("Gamma({t:>5}) = {:.8}   logistic = {:.8}", g.eval(t)[0], 1.0 / (1.0 + (-t).exp()));
    }
    println!("max error {err:.2e}, verification passed: {}", report.passed());
    Ok(err)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
