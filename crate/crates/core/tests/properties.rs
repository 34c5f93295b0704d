// Property tests for invariants that hold for any admissible input.

use entire_fronts::cache::{decode, encode, CachedProfile};
use entire_fronts::config::{parse_config, ExperimentConfig, ModelConfig};
use entire_fronts::entire::{EntireConfig, EntireProfiles, LowerSolution, Mode, PiBound, Wave};
use entire_fronts::model::{make_epidemic, make_population, GKind};
use entire_fronts::sis::{DecayMeta, Profile};
use entire_fronts::spectral::compute_cstar;
use ndarray::Array2;
use proptest::prelude::*;
use std::sync::OnceLock;

struct E1Setup {
    cfg: EntireConfig,
    lower: LowerSolution,
    pi: PiBound,
    k: Vec<f64>,
}

fn e1_setup() -> &'static E1Setup {
    static S: OnceLock<E1Setup> = OnceLock::new();
    S.get_or_init(|| {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        let cfg = EntireConfig::new(
            vec![Wave { c: 1.5, h: 0.5, nu: 1 }, Wave { c: 2.0, h: -1.0, nu: -1 }],
            vec![1, 1, 1],
            -2.0,
            Mode::Cooperative,
        );
        let profiles = EntireProfiles::compute(&cfg, &m, &s, 1e-8, 1e-10).unwrap();
        E1Setup {
            lower: LowerSolution::new(&cfg, &profiles).unwrap(),
            pi: PiBound::new(&cfg, &s).unwrap(),
            k: m.k.clone(),
            cfg,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    // The lower function never exceeds min{K, Pi}.
    #[test]
    fn lower_solution_below_upper_estimate(x in -60.0f64..60.0, t in -20.0f64..5.0) {
        let s = e1_setup();
        let u = s.lower.eval(x, t);
        let p = s.pi.eval(x, t);
        for c in 0..2 {
            let bound = p[c].min(s.k[c]);
            prop_assert!(u[c] <= bound * (1.0 + 1e-6) + 1e-12, "x={x} t={t} c={c}: {} > {}", u[c], bound);
            prop_assert!(u[c] >= 0.0);
        }
        let _ = &s.cfg;
    }

    #[test]
    fn cache_round_trip_is_bitwise(
        rows in 1usize..40,
        cols in 1usize..4,
        seed in any::<u64>(),
        t0 in -50.0f64..0.0,
        dt in 1e-4f64..1.0,
    ) {
        let mut state = seed | 1;
        let values = Array2::from_shape_fn((rows, cols), |_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            f64::from_bits(state >> 2)
        });
        let p = CachedProfile::Gamma(Profile {
            t0,
            dt,
            values,
            decay: DecayMeta { rate: dt.sqrt(), amplitude: vec![t0.exp(); cols] },
        });
        let back = decode(&encode(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn config_round_trip(
        d1 in 0.1f64..4.0,
        r1 in 1.1f64..3.0,
        delta in 0.1f64..5.0,
        seed in any::<u64>(),
        c in 1.0f64..5.0,
        h in -5.0f64..5.0,
    ) {
        let cfg = ExperimentConfig {
            seed,
            out: Some("o".into()),
            model: ModelConfig::Population { d1, d2: d1 / 2.0, r1, r2: 1.0, alpha: 1.0, delta },
            spectral: Default::default(),
            sis: Default::default(),
            front: Default::default(),
            checker: Default::default(),
            entire: Some(EntireConfig::new(vec![Wave { c, h, nu: -1 }], vec![1, 0], h, Mode::Noncooperative)),
        };
        let text = cfg.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }

    // c* is the minimum of M(lambda) / lambda.
    #[test]
    fn c_star_minimizes_speed_function(d1 in 0.2f64..3.0, r1 in 1.2f64..4.0, lam in 0.05f64..6.0) {
        let m = make_population(d1, d1, r1, 1.0, 1.0, 2.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        prop_assert!(s.m(lam) / lam >= s.c_star - 1e-9 * s.c_star);
        // closed form for the block-triangular population linearization
        prop_assert!((s.c_star - 2.0 * (d1 * (r1 - 1.0)).sqrt()).abs() < 1e-8);
    }
}
