// Non-cooperative population model: envelope systems and an entire solution
// squeezed between the lower envelope's sub-solution and `K+`.

use entire_fronts::entire::{construct, verify_qualitative, EntireConfig, EntireProfiles, Mode, Wave};
use entire_fronts::model::{build_envelopes, make_population};
use entire_fronts::spectral::compute_cstar;
use entire_fronts::Result;

pub fn run_example() -> Result<f64> {
    let m = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0)?;
    let env = build_envelopes(&m)?;
    let s = compute_cstar(&m)?;
    println!("K- = {:?}\nK  = {:?}\nK+ = {:?}", env.k_minus(), m.k, env.k_plus());
    let mut cfg = EntireConfig::new(vec![Wave { c: 2.5, h: 0.0, nu: 1 }], vec![1, 1], 0.0, Mode::Noncooperative);
    cfg.n_schedule = vec![2.0, 4.0];
    cfg.t_end = 4.0;
    cfg.dt = 5e-4;
    let profiles = EntireProfiles::compute(&cfg, &env.lower, &s, 1e-8, 1e-10)?;
    let run = construct(&cfg, &m, Some(&env), &profiles, &s)?;
    let q = verify_qualitative(&run, &cfg, &s);
    println!(
        "lower margin {:.3e}, margin to K+ {:.3e}, min U {:.3e}",
        run.report.lower_margin.value, run.report.upper_margin.value, q.min_value
    );
    Ok(run.report.lower_margin.value)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
