// Qualitative properties of constructed entire solutions beyond the
// acceptance runs: large-time limit, monotonicity in shifts, refinement.

use entire_fronts::entire::{
    construct, construct_unchecked, monotone_in_h, translation_fit, verify_qualitative, EntireConfig,
    EntireProfiles, Mode, Wave,
};
use entire_fronts::model::{make_epidemic, GKind, ModelSpec};
use entire_fronts::spectral::compute_cstar;

fn e1() -> ModelSpec {
    make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap()
}

fn small(h_last: f64) -> EntireConfig {
    let mut cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 0.0, nu: 1 }], vec![1, 1], h_last, Mode::Cooperative);
    cfg.n_schedule = vec![2.0, 4.0];
    cfg.t_end = 3.0;
    cfg
}

#[test]
fn converges_to_k_for_large_time() {
    let m = e1();
    let s = compute_cstar(&m).unwrap();
    let mut cfg = small(2.0);
    cfg.t_end = 15.0;
    let p = EntireProfiles::compute(&cfg, &m, &s, 1e-8, 1e-10).unwrap();
    let run = construct(&cfg, &m, None, &p, &s).unwrap();
    let q = verify_qualitative(&run, &cfg, &s);
    assert!(q.positive_ok && q.below_k_ok);
    assert!(q.final_distance_to_k < 1e-2, "{}", q.final_distance_to_k);
    // sup |U - K| over the window is nonincreasing once the SIS part has grown
    let tr = &run.trajectory;
    let dist = |t: f64| {
        let snap = tr.at(t).unwrap();
        run.window_nodes()
            .flat_map(|j| (0..2).map(move |c| (j, c)))
            .map(|(j, c)| (snap.values[[j, c]] - run.k[c]).abs())
            .fold(0.0, f64::max)
    };
    let d: Vec<f64> = [5.0, 10.0, 15.0].iter().map(|&t| dist(t)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn monotone_in_front_and_sis_shifts() {
    let m = e1();
    let s = compute_cstar(&m).unwrap();
    let cfg = small(-2.0);
    let p = EntireProfiles::compute(&cfg, &m, &s, 1e-8, 1e-10).unwrap();
    for index in [0, 1] {
        let r = monotone_in_h(&cfg, &m, None, &p, &s, index, 0.5).unwrap();
        assert!(r.ok, "{r:?}");
    }
    assert!(monotone_in_h(&cfg, &m, None, &p, &s, 2, 0.5).is_err());
}

#[test]
fn sandwich_deficit_shrinks_under_refinement() {
    let m = e1();
    let s = compute_cstar(&m).unwrap();
    let mut coarse = small(-2.0);
    coarse.dx = 0.1;
    coarse.dt = 4e-3;
    let mut fine = coarse.clone();
    fine.dx = 0.05;
    fine.dt = 1e-3;
    let p = EntireProfiles::compute(&coarse, &m, &s, 1e-8, 1e-10).unwrap();
    let a = construct_unchecked(&coarse, &m, None, &p, &s).unwrap();
    let b = construct_unchecked(&fine, &m, None, &p, &s).unwrap();
    let (la, lb) = (a.report.lower_margin.value, b.report.lower_margin.value);
    assert!(lb >= -1e-3 && lb > la, "coarse {la:e}, fine {lb:e}");
}

#[test]
fn common_shift_of_both_fronts_is_a_time_translation() {
    // chi = (1, 1, 0) with equal speeds: raising both h by c * tau translates
    // the entire solution by tau in time.
    let m = e1();
    let s = compute_cstar(&m).unwrap();
    let c = 1.5;
    let mut cfg = EntireConfig::new(
        vec![Wave { c, h: 0.0, nu: 1 }, Wave { c, h: 0.0, nu: -1 }],
        vec![1, 1, 0],
        0.0,
        Mode::Cooperative,
    );
    cfg.n_schedule = vec![2.0, 4.0, 6.0];
    cfg.t_end = 3.0;
    let p = EntireProfiles::compute(&cfg, &m, &s, 1e-8, 1e-10).unwrap();
    let a = construct_unchecked(&cfg, &m, None, &p, &s).unwrap();
    let tau = 0.5;
    let shifted = cfg.with_h(0, c * tau).with_h(1, c * tau);
    let b = construct_unchecked(&shifted, &m, None, &p, &s).unwrap();
    let fit = translation_fit(&b, &a, 20, 1);
    assert!(fit.x0.abs() < 1e-12 && (fit.t0 + tau).abs() < 1e-12, "{fit:?}");
    let mut unshifted = 0.0f64;
    for sa in &a.trajectory.snapshots {
        let sb = b.trajectory.at(sa.t).unwrap();
        for j in a.window_nodes() {
            for k in 0..2 {
                unshifted = unshifted.max((sa.values[[j, k]] - sb.values[[j, k]]).abs());
            }
        }
    }
    assert!(fit.residual < 0.25 * unshifted, "{fit:?} vs {unshifted}");
}
