// Three-way comparison `u- <= u <= u+` for the population model and its envelopes.

use entire_fronts::model::{build_envelopes, make_population};
use entire_fronts::pde::{compare_three, Boundary, Field, Grid};
use entire_fronts::Result;

pub fn run_example() -> Result<f64> {
    let m = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0)?;
    let env = build_envelopes(&m)?;
    let grid = |k: &[f64]| Grid::symmetric(30.0, 0.1, Boundary::Constant(vec![0.0; 2]), Boundary::Constant(k.to_vec()));
    let ramp = |k: Vec<f64>, scale: f64| {
        move |x: f64, out: &mut [f64]| {
            let s = scale / (1.0 + (-x).exp());
            for (o, kk) in out.iter_mut().zip(&k) {
                *o = s * kk;
            }
        }
    };
    let gm = grid(env.k_minus())?;
    let g = grid(&m.k)?;
    let gp = grid(env.k_plus())?;
    let lower = Field::from_fn(&gm, 2, 0.0, ramp(env.k_minus().to_vec(), 1.0));
    let mid = Field::from_fn(&g, 2, 0.0, ramp(m.k.clone(), 1.0));
    let upper = Field::from_fn(&gp, 2, 0.0, ramp(env.k_plus().to_vec(), 1.0));
    println!("K- = {:?}, K = {:?}, K+ = {:?}", env.k_minus(), m.k, env.k_plus());
    let report = compare_three(&lower, &mid, &upper, &m, &env, [&gm, &g, &gp], 5.0, 2e-3)?;
    println!(
        "{} steps, worst excess {:.3e}, ordered {}",
        report.steps_checked, report.worst_excess, report.ordered
    );
    Ok(report.worst_excess)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
