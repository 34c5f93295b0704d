// Critical speeds of the bundled models.

use entire_fronts::model::{make_buffered, make_epidemic, make_fisher, make_population, GKind};
use entire_fronts::spectral::{compute_cstar, compute_lambda1};
use entire_fronts::Result;

pub fn run_example() -> Result<Vec<(String, f64)>> {
    let models = [
        make_fisher(1.0, 1.0)?,
        make_buffered(1.0, 1.0, 1.0, 0.5, 1.0)?,
        make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0)?,
        make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0)?,
    ];
    let mut out = Vec::new();
    println!("{:<12} {:>12} {:>12} {:>12} {:>14}", "model", "c*", "lambda*", "s(f'(0))", "lambda1(1.2c*)");
    for m in &models {
        let s = compute_cstar(m)?;
        let l1 = compute_lambda1(&s, 1.2 * s.c_star)?;
        println!(
            "{:<12} {:>12.8} {:>12.8} {:>12.8} {:>14.8}",
            m.name, s.c_star, s.lambda_star, s.growth_rate, l1
        );
        out.push((m.name.clone(), s.c_star));
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
