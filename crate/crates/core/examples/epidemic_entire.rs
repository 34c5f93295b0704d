// Entire solution of the epidemic model made of a front from the left and
// the spatially independent solution.

use entire_fronts::entire::{construct, verify_qualitative, EntireConfig, EntireProfiles, Mode, Wave};
use entire_fronts::model::{make_epidemic, GKind};
use entire_fronts::spectral::compute_cstar;
use entire_fronts::Result;

pub fn run_example() -> Result<f64> {
    let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0)?;
    let s = compute_cstar(&m)?;
    let mut cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 0.0, nu: 1 }], vec![1, 1], -4.0, Mode::Cooperative);
    cfg.n_schedule = vec![2.0, 4.0];
    cfg.t_end = 5.0;
    let profiles = EntireProfiles::compute(&cfg, &m, &s, 1e-8, 1e-10)?;
    let run = construct(&cfg, &m, None, &profiles, &s)?;
    let q = verify_qualitative(&run, &cfg, &s);
    let r = &run.report;
    println!("c* = {:.6}; window {:?}", s.c_star, r.window);
    println!("lower margin {:.3e}, upper margin {:.3e}", r.lower_margin.value, r.upper_margin.value);
    for (n, inc) in &r.n_increments {
        println!("n = {n}: sup |U^n - U^prev| = {inc:.3e}");
    }
    println!(
        "0 < U < K: {} / {}, increasing in t: {}, sup|U - K| at t_end = {:.3e}",
        q.positive_ok, q.below_k_ok, q.monotone_in_t_ok, q.final_distance_to_k
    );
    Ok(r.lower_margin.value.min(r.upper_margin.value))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
