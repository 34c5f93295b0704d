// Traveling front of Fisher-KPP at the speed with a closed-form profile.

use entire_fronts::front::{compute_front, fisher_exact_front, normalize_phase, verify_front};
use entire_fronts::model::make_fisher;
use entire_fronts::spectral::compute_cstar;
use entire_fronts::Result;

/// Largest deviation from `(1 + a e^{-xi/sqrt 6})^{-2}` after matching phases.
pub fn run_example() -> Result<f64> {
    let m = make_fisher(1.0, 1.0)?;
    let s = compute_cstar(&m)?;
    let c = 5.0 / 6f64.sqrt();
    let front = normalize_phase(&compute_front(&m, &s, c, 1e-10)?)?;
    let exact = normalize_phase(&fisher_exact_front(-80.0, 80.0, 0.001))?;
    let report = verify_front(&m, &front);
    let p = &front.profile;
    let err = (0..p.len())
        .filter(|&i| p.t(i).abs() <= 30.0)
        .map(|i| (p.values[[i, 0]] - exact.profile.eval(p.t(i))[0]).abs())
        .fold(0.0, f64::max);
    println!("c = {c:.6}, lambda1 = {:.6}, lambda2 = {:.6}", front.lambda1, front.lambda2);
    println!("max |Phi - exact| on [-30, 30]: {err:.2e}; verification passed: {}", report.passed());
    Ok(err)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
