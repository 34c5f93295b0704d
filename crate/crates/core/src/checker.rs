//! Runtime checks of the structural hypotheses: equilibria, linearization,
//! cooperativity, sub-homogeneity, envelope ordering and the model-specific
//! sufficient inequalities of the builtin models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{EnvelopePair, GKind, ModelKind, ModelSpec};
use crate::sampling::Halton;
use crate::spectral::{compute_cstar, SpectralData, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// No violation found by sampling a statement sampling cannot decide.
    HeuristicPass,
    /// Informational entry that does not gate a run.
    Info,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Counterexample {
    pub point: Vec<f64>,
    pub inequality: String,
    /// Amount by which the inequality fails (positive).
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AssumptionReport {
    pub name: String,
    pub status: Status,
    pub counterexample: Option<Counterexample>,
    pub samples_used: usize,
    pub note: String,
}

impl AssumptionReport {
    fn pass(name: &str, status: Status, samples: usize, note: impl Into<String>) -> Self {
        AssumptionReport {
            name: name.into(),
            status,
            counterexample: None,
            samples_used: samples,
            note: note.into(),
        }
    }

    fn fail(name: &str, cx: Counterexample, samples: usize, note: impl Into<String>) -> Self {
        AssumptionReport {
            name: name.into(),
            status: Status::Fail,
            counterexample: Some(cx),
            samples_used: samples,
            note: note.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

pub const DEFAULT_SAMPLES: usize = 10_000;
const FD_STEP: f64 = 1e-6;
const COOP_TOL: f64 = 1e-8;
const SUBHOMOG_TOL: f64 = 1e-9;

/// Central-difference `d f_i / d u_j` with a magnitude-scaled step.
pub fn partial(model: &ModelSpec, u: &[f64], i: usize, j: usize) -> f64 {
    let h = FD_STEP * u[j].abs().max(1.0);
    let mut up = u.to_vec();
    let mut dn = u.to_vec();
    up[j] += h;
    dn[j] -= h;
    (model.f(&up)[i] - model.f(&dn)[i]) / (2.0 * h)
}

/// Most negative off-diagonal partial at `u`, with its `(i, j)`.
pub fn cooperative_margin(model: &ModelSpec, u: &[f64]) -> (f64, usize, usize) {
    let m = model.m();
    let mut worst = (f64::INFINITY, 0, 0);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let d = partial(model, u, i, j);
                if d < worst.0 {
                    worst = (d, i, j);
                }
            }
        }
    }
    worst
}

/// Off-diagonal partials `>= -1e-8` at Halton points of `[0, upper]`.
pub fn check_cooperative(
    model: &ModelSpec,
    upper: &[f64],
    samples: usize,
    seed: u64,
) -> AssumptionReport {
    let name = "cooperative";
    let m = model.m();
    if m == 1 {
        return AssumptionReport::pass(name, Status::Pass, 0, "scalar equation");
    }
    let h = Halton::new(m, seed);
    for s in 0..samples {
        let u = h.point_in_box(s, upper);
        let (d, i, j) = cooperative_margin(model, &u);
        if d < -COOP_TOL {
            return AssumptionReport::fail(
                name,
                Counterexample {
                    point: u,
                    inequality: format!("d f_{} / d u_{} >= 0", i + 1, j + 1),
                    margin: -d,
                },
                s + 1,
                format!("{} is not cooperative on the box", model.name),
            );
        }
    }
    AssumptionReport::pass(name, Status::Pass, samples, "all sampled off-diagonal partials >= -1e-8")
}

/// `f(min{K, z}) - f'(0) z`, maximized over components; positive means violation.
pub fn subhomog_margin(model: &ModelSpec, k_upper: &[f64], z: &[f64]) -> (f64, usize) {
    let u: Vec<f64> = z.iter().zip(k_upper).map(|(a, b)| a.min(*b)).collect();
    let f = model.f(&u);
    let lin = &model.jacobian0 * DVector::from_column_slice(z);
    let mut worst = (f64::NEG_INFINITY, 0);
    for i in 0..z.len() {
        let scale = 1.0f64.max(lin[i].abs());
        let e = (f[i] - lin[i]) / scale;
        if e > worst.0 {
            worst = (e, i);
        }
    }
    worst
}

/// Sub-homogeneity `f(min{K, sum rho_j v(lambda_j)}) <= f'(0) sum rho_j v(lambda_j)`
/// for `k <= k_max` terms, `rho` log-spaced on `[1e-8, 1] * rho_max` with
/// `rho_max = 10 |K|_inf`, and `lambda in [0, lambda_*]`.
pub fn check_subhomog(
    model: &ModelSpec,
    spectral: &SpectralData,
    k_upper: &[f64],
    k_max: usize,
    samples: usize,
    seed: u64,
) -> AssumptionReport {
    let name = "sub-homogeneity";
    let m = model.m();
    let rho_max = 10.0 * k_upper.iter().fold(0.0f64, |a, &x| a.max(x));
    let lam_max = spectral.lambda_star;
    // v(lambda) on a fine table keeps the scan cheap; table nodes are exact eigenvectors
    let table: Vec<Vec<f64>> = (0..=512)
        .map(|i| spectral.v(lam_max * i as f64 / 512.0))
        .collect();
    let mut used = 0;
    for k in 1..=k_max.min(8) {
        let h = Halton::new(2 * k, seed.wrapping_add(k as u64));
        for s in 0..samples {
            let p = h.point(s);
            let mut z = vec![0.0; m];
            for t in 0..k {
                let rho = rho_max * 10f64.powf(-8.0 * (1.0 - p[2 * t]));
                let v = &table[(p[2 * t + 1] * 512.0).round() as usize];
                for c in 0..m {
                    z[c] += rho * v[c];
                }
            }
            used += 1;
            let (e, i) = subhomog_margin(model, k_upper, &z);
            if e > SUBHOMOG_TOL {
                return AssumptionReport::fail(
                    name,
                    Counterexample {
                        point: z,
                        inequality: format!("f_{}(min{{K, z}}) <= (f'(0) z)_{}", i + 1, i + 1),
                        margin: e,
                    },
                    used,
                    format!("k = {k}"),
                );
            }
        }
    }
    AssumptionReport::pass(
        name,
        Status::HeuristicPass,
        used,
        format!("k <= {k_max}, rho <= {rho_max:.3}, lambda in [0, {lam_max:.4}]; sampled, not proved"),
    )
}

/// `f-(u) <= f(u) <= f+(u)` margin at `u`; positive means violation.
pub fn envelope_margin(model: &ModelSpec, env: &EnvelopePair, u: &[f64]) -> (f64, usize, &'static str) {
    let f = model.f(u);
    let lo = env.lower.f(u);
    let hi = env.upper.f(u);
    let mut worst = (f64::NEG_INFINITY, 0, "");
    for i in 0..f.len() {
        let scale = 1.0f64.max(f[i].abs());
        let a = (lo[i] - f[i]) / scale;
        let b = (f[i] - hi[i]) / scale;
        if a > worst.0 {
            worst = (a, i, "f- <= f");
        }
        if b > worst.0 {
            worst = (b, i, "f <= f+");
        }
    }
    worst
}

pub fn check_envelope_order(
    model: &ModelSpec,
    env: &EnvelopePair,
    samples: usize,
    seed: u64,
) -> AssumptionReport {
    let name = "envelope-order";
    let km = env.k_minus();
    let kp = env.k_plus();
    for c in 0..model.m() {
        let ok = km[c] > 0.0 && km[c] <= model.k[c] + 1e-12 && model.k[c] <= kp[c] + 1e-12;
        if !ok {
            return AssumptionReport::fail(
                name,
                Counterexample {
                    point: vec![km[c], model.k[c], kp[c]],
                    inequality: format!("0 < K-_{0} <= K_{0} <= K+_{0}", c + 1),
                    margin: (km[c] - model.k[c]).max(model.k[c] - kp[c]).max(-km[c]),
                },
                0,
                "equilibria out of order",
            );
        }
    }
    let h = Halton::new(model.m(), seed);
    for s in 0..samples {
        let u = h.point_in_box(s, kp);
        let (e, i, which) = envelope_margin(model, env, &u);
        if e > 1e-12 {
            return AssumptionReport::fail(
                name,
                Counterexample {
                    point: u,
                    inequality: format!("{which} (component {})", i + 1),
                    margin: e,
                },
                s + 1,
                "envelope ordering broken",
            );
        }
    }
    AssumptionReport::pass(name, Status::Pass, samples, "f- <= f <= f+ on [0, K+] and 0 << K- <= K <= K+")
}

fn newton_equilibrium(model: &ModelSpec, start: &[f64]) -> Option<Vec<f64>> {
    let mut u = DVector::from_column_slice(start);
    for _ in 0..40 {
        let f = DVector::from_vec(model.f(u.as_slice()));
        if f.amax() < 1e-13 {
            return Some(u.as_slice().to_vec());
        }
        let j = model.jacobian_fd(u.as_slice());
        let step = j.lu().solve(&f)?;
        u -= step;
        if u.iter().any(|x| !x.is_finite()) {
            return None;
        }
    }
    let f = model.f(u.as_slice());
    (f.iter().fold(0.0f64, |a, x| a.max(x.abs())) < 1e-10).then(|| u.as_slice().to_vec())
}

/// No positive equilibrium other than `K` in `[0, K]`: along random rays from
/// 0 the point of smallest `|f|` is polished by Newton; a converged root
/// strictly inside the box and away from 0 and K is a witness.
pub fn check_no_other_equilibrium(model: &ModelSpec, rays: usize, seed: u64) -> AssumptionReport {
    let name = "no-other-equilibrium";
    let m = model.m();
    let k = &model.k;
    let h = Halton::new(m, seed);
    let scale = k.iter().fold(0.0f64, |a, &x| a.max(x));
    for r in 0..rays {
        let dir = h.point_in_box(r, k);
        // stretch to the box boundary
        let t_max = dir
            .iter()
            .zip(k)
            .map(|(d, kk)| kk / d.max(1e-300))
            .fold(f64::INFINITY, f64::min);
        let mut best = (f64::INFINITY, vec![0.0; m]);
        for s in 1..=200 {
            let u: Vec<f64> = dir.iter().map(|d| d * t_max * s as f64 / 200.0).collect();
            let norm = model.f(&u).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let dist0 = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let dist_k = u.iter().zip(k).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            if dist0 > 1e-2 * scale && dist_k > 1e-2 * scale && norm < best.0 {
                best = (norm, u);
            }
        }
        if !best.0.is_finite() {
            continue;
        }
        if let Some(root) = newton_equilibrium(model, &best.1) {
            let inside = root
                .iter()
                .zip(k)
                .all(|(x, kk)| *x > 1e-6 * scale && *x <= kk * (1.0 + 1e-9));
            let far0 = root.iter().fold(0.0f64, |a, x| a.max(x.abs())) > 1e-6 * scale;
            let far_k = root.iter().zip(k).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) > 1e-6 * scale;
            if inside && far0 && far_k {
                return AssumptionReport::fail(
                    name,
                    Counterexample {
                        point: root,
                        inequality: "f(u) != 0 for 0 < u < K, u != K".into(),
                        margin: 0.0,
                    },
                    r + 1,
                    "interior equilibrium found",
                );
            }
        }
    }
    AssumptionReport::pass(name, Status::HeuristicPass, rays, format!("{rays} rays scanned; sampled, not proved"))
}

/// Equilibria, smoothness sample and `f(0) = f(K) = 0`.
pub fn check_a0(model: &ModelSpec, rays: usize, seed: u64) -> AssumptionReport {
    let fk = model.f(&model.k);
    let f0 = model.f(&vec![0.0; model.m()]);
    let res = fk.iter().chain(&f0).fold(0.0f64, |a, x| a.max(x.abs()));
    if res > 1e-10 || model.k.iter().any(|&x| !(x > 0.0)) {
        return AssumptionReport::fail(
            "A0",
            Counterexample {
                point: model.k.clone(),
                inequality: "f(0) = f(K) = 0 with K >> 0".into(),
                margin: res,
            },
            0,
            "equilibrium residual",
        );
    }
    let mut rep = check_no_other_equilibrium(model, rays, seed);
    rep.name = "A0".into();
    rep
}

/// Linearization: cooperative irreducible with `s(f'(0)) > 0`, or block
/// lower triangular with a strictly dominant first block on the scan grid.
pub fn check_a1(model: &ModelSpec) -> (AssumptionReport, Option<SpectralData>) {
    match compute_cstar(model) {
        Ok(s) => {
            let form = match s.structure {
                Structure::IrreducibleCooperative => "(a) cooperative irreducible",
                Structure::BlockLowerTriangular => "(b) block lower triangular",
            };
            let note = format!(
                "{form}; M(0) = {:.6}, c* = {:.6}, lambda_* = {:.6}; eigenvector positivity checked on the scan grid",
                s.growth_rate, s.c_star, s.lambda_star
            );
            (AssumptionReport::pass("A1", Status::Pass, s.scan_trace.len(), note), Some(s))
        }
        Err(e) => (
            AssumptionReport::fail(
                "A1",
                Counterexample {
                    point: vec![],
                    inequality: "principal eigenpair of D lambda^2 + f'(0)".into(),
                    margin: match e {
                        Error::Monostability(s) => -s,
                        _ => f64::NAN,
                    },
                },
                0,
                e.to_string(),
            ),
            None,
        ),
    }
}

/// `f'(u) <= f'(0)` entrywise on `[0, K]` (extra hypothesis of the
/// difference bound between nested entire solutions).
pub fn check_jacobian_bound(model: &ModelSpec, samples: usize, seed: u64) -> AssumptionReport {
    let name = "jacobian-bound";
    let m = model.m();
    let h = Halton::new(m, seed);
    let j0 = &model.jacobian0;
    for s in 0..samples {
        let u = h.point_in_box(s, &model.k);
        let j = model.jacobian_fd(&u);
        for a in 0..m {
            for b in 0..m {
                let e = j[(a, b)] - j0[(a, b)];
                if e > 1e-6 * (1.0 + j0[(a, b)].abs()) {
                    return AssumptionReport::fail(
                        name,
                        Counterexample {
                            point: u,
                            inequality: format!("d f_{} / d u_{} (u) <= d f_{} / d u_{} (0)", a + 1, b + 1, a + 1, b + 1),
                            margin: e,
                        },
                        s + 1,
                        "",
                    );
                }
            }
        }
    }
    AssumptionReport::pass(name, Status::Pass, samples, "f'(u) <= f'(0) at all samples")
}

/// Envelope Jacobians at 0 agree with `f'(0)` (one-sided differences).
pub fn check_same_linearization(model: &ModelSpec, env: &EnvelopePair) -> AssumptionReport {
    let name = "same-linearization";
    let m = model.m();
    let h = 1e-7;
    let zero = vec![0.0; m];
    for (label, spec) in [("f-", &env.lower), ("f+", &env.upper)] {
        for j in 0..m {
            let mut e = zero.clone();
            e[j] = h;
            let a = spec.f(&e);
            let b = model.f(&e);
            for i in 0..m {
                let d = ((a[i] - b[i]) / h).abs();
                if d > 1e-5 {
                    return AssumptionReport::fail(
                        name,
                        Counterexample {
                            point: e,
                            inequality: format!("{label}'(0) = f'(0) entry ({}, {})", i + 1, j + 1),
                            margin: d,
                        },
                        0,
                        "",
                    );
                }
            }
        }
    }
    AssumptionReport::pass(name, Status::Pass, 2 * m * m, "one-sided difference quotients agree at 0")
}

/// Epidemic incidence hypotheses: `g(u) > beta/gamma u` on `(0, k)`,
/// `g(u) <= g'(0) u` on `[0, k]` and monotone or unimodal shape.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IncidenceReport {
    pub h1: AssumptionReport,
    pub h2: AssumptionReport,
    /// `Some(true)` when `k <= u_max` (cooperative regime); `None` for monotone g.
    pub k_le_umax: Option<bool>,
    /// Empirical `argmax g` on the sampled range, if interior.
    pub u_max_sampled: Option<f64>,
    /// `g'(u) <= g'(0)` on `[0, k]`.
    pub slope_bound: bool,
}

pub fn check_h1_h2(model: &ModelSpec, samples: usize) -> Result<IncidenceReport, Error> {
    let ModelKind::Epidemic {
        gamma,
        beta,
        g,
        omega,
        nu,
        k,
        u_max,
        ..
    } = model.kind.clone()
    else {
        return Err(Error::Domain(format!("{} is not an epidemic model", model.name)));
    };
    let gf = |u: f64| g.eval(omega, nu, u);
    let g0 = omega;
    let mut h1 = AssumptionReport::pass("H1", Status::Pass, samples, "g(u) > beta/gamma u on (0,k), g(u) <= g'(0) u on [0,k]");
    for s in 1..samples {
        let u = k * s as f64 / samples as f64;
        let gu = gf(u);
        if !(gu > beta / gamma * u) {
            h1 = AssumptionReport::fail(
                "H1",
                Counterexample {
                    point: vec![u],
                    inequality: "g(u) > beta/gamma u".into(),
                    margin: beta / gamma * u - gu,
                },
                s,
                "",
            );
            break;
        }
        if gu > g0 * u * (1.0 + 1e-12) {
            h1 = AssumptionReport::fail(
                "H1",
                Counterexample {
                    point: vec![u],
                    inequality: "g(u) <= g'(0) u".into(),
                    margin: gu - g0 * u,
                },
                s,
                "",
            );
            break;
        }
    }
    // shape over [0, 4 max(k, 1/sqrt(nu))]
    let top = 4.0 * k.max(1.0 / nu.sqrt());
    let vals: Vec<(f64, f64)> = (0..=samples).map(|s| {
        let u = top * s as f64 / samples as f64;
        (u, gf(u))
    }).collect();
    let peak = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &(_, v))| if v > acc.1 { (i, v) } else { acc });
    let increasing_before = vals[..=peak.0].windows(2).all(|w| w[1].1 > w[0].1);
    let decreasing_after = vals[peak.0..].windows(2).all(|w| w[1].1 < w[0].1);
    let interior_peak = peak.0 < samples;
    let u_max_sampled = interior_peak.then(|| vals[peak.0].0);
    let h2 = if !increasing_before || !decreasing_after {
        AssumptionReport::fail(
            "H2",
            Counterexample {
                point: vec![vals[peak.0].0],
                inequality: "g increasing, or increasing then decreasing".into(),
                margin: 0.0,
            },
            samples,
            "",
        )
    } else if interior_peak {
        AssumptionReport::pass("H2", Status::Pass, samples, format!("(b) unimodal, sampled u_max = {:.4}", vals[peak.0].0))
    } else {
        AssumptionReport::pass("H2", Status::Pass, samples, "(a) increasing")
    };
    let k_le_umax = match (g, u_max) {
        (GKind::G2, Some(um)) => Some(k <= um),
        _ => None,
    };
    let dg = |u: f64| {
        let h = 1e-6 * u.max(1.0);
        (gf(u + h) - gf((u - h).max(0.0))) / (u + h - (u - h).max(0.0))
    };
    let slope_bound = (0..=samples).all(|s| dg(k * s as f64 / samples as f64) <= g0 * (1.0 + 1e-6));
    Ok(IncidenceReport {
        h1,
        h2,
        k_le_umax,
        u_max_sampled,
        slope_bound,
    })
}

/// Model-specific sufficient inequalities for sub-homogeneity, evaluated at
/// sampled `z = sum rho_j v(lambda_j)`:
/// buffered `z1 >= k2 z2`; population `delta z1 >= r1 z2` and
/// `e^{z1}(z1 + z2^2) >= z1 (1 + z2)`, plus `e (z1 + z2^2) >= 1 + z2` for
/// `z1 > 1` in the non-cooperative case.
pub fn check_model_inequalities(
    model: &ModelSpec,
    spectral: &SpectralData,
    samples: usize,
    seed: u64,
) -> Vec<AssumptionReport> {
    if !matches!(model.kind, ModelKind::Buffered { .. } | ModelKind::Population { .. }) {
        return Vec::new();
    }
    let lam_max = spectral.lambda_star;
    let table: Vec<Vec<f64>> = (0..=256).map(|i| spectral.v(lam_max * i as f64 / 256.0)).collect();
    let h = Halton::new(4, seed);
    let zs: Vec<(f64, f64)> = (0..samples)
        .map(|s| {
            let p = h.point(s);
            let mut z = (0.0, 0.0);
            for t in 0..2 {
                let rho = 10f64.powf(6.0 * p[2 * t] - 4.0);
                let v = &table[(p[2 * t + 1] * 256.0).round() as usize];
                z.0 += rho * v[0];
                z.1 += rho * v[1];
            }
            z
        })
        .collect();
    let run = |name: &str, ineq: &str, f: &dyn Fn(f64, f64) -> f64| -> AssumptionReport {
        for (i, &(z1, z2)) in zs.iter().enumerate() {
            let m = f(z1, z2);
            if m < -1e-12 * (1.0 + z1.abs() + z2.abs()) {
                return AssumptionReport::fail(
                    name,
                    Counterexample {
                        point: vec![z1, z2],
                        inequality: ineq.into(),
                        margin: -m,
                    },
                    i + 1,
                    "",
                );
            }
        }
        AssumptionReport::pass(name, Status::HeuristicPass, zs.len(), ineq.to_string())
    };
    let mut out = Vec::new();
    match model.kind.clone() {
        ModelKind::Buffered { d1, d2, k1, k2, b } => {
            let params_ok = d1 >= d2 && 1.0 > k2 * b && k1 >= k2;
            out.push(if params_ok {
                AssumptionReport::pass("buffered-parameters", Status::Pass, 1, "d1 >= d2, 1 > k2 b, k1 >= k2")
            } else {
                AssumptionReport::fail(
                    "buffered-parameters",
                    Counterexample {
                        point: vec![d1, d2, k1, k2, b],
                        inequality: "d1 >= d2, 1 > k2 b, k1 >= k2".into(),
                        margin: (d2 - d1).max(k2 * b - 1.0).max(k2 - k1),
                    },
                    1,
                    "",
                )
            });
            out.push(run("buffered-z-ratio", "z1 >= k2 z2", &|z1, z2| z1 - k2 * z2));
        }
        ModelKind::Population {
            d1,
            d2,
            r1,
            r2,
            alpha,
            delta,
            k1: kk1,
        } => {
            let bound = r1 * r2 / (r1 + r2 - alpha);
            let params_ok = r1 > alpha && d1 >= d2 && delta >= bound;
            out.push(if params_ok {
                AssumptionReport::pass(
                    "population-parameters",
                    Status::Pass,
                    1,
                    "r1 > alpha, d1 >= d2, delta >= r1 r2 / (r1 + r2 - alpha)",
                )
            } else {
                AssumptionReport::fail(
                    "population-parameters",
                    Counterexample {
                        point: vec![d1, d2, r1, r2, alpha, delta],
                        inequality: "r1 > alpha, d1 >= d2, delta >= r1 r2 / (r1 + r2 - alpha)".into(),
                        margin: (alpha - r1).max(d2 - d1).max(bound - delta),
                    },
                    1,
                    "",
                )
            });
            out.push(run("population-linear", "delta z1 >= r1 z2", &|z1, z2| delta * z1 - r1 * z2));
            out.push(run(
                "population-ricker",
                "e^{z1} (z1 + z2^2) >= z1 (1 + z2)",
                &|z1, z2| z1.exp() * (z1 + z2 * z2) - z1 * (1.0 + z2),
            ));
            if kk1 > 1.0 {
                out.push(run(
                    "population-upper-envelope",
                    "e (z1 + z2^2) >= 1 + z2 for z1 > 1",
                    &|z1, z2| if z1 > 1.0 { std::f64::consts::E * (z1 + z2 * z2) - (1.0 + z2) } else { 0.0 },
                ));
            }
        }
        _ => {}
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AssumptionSuite {
    pub model: String,
    pub cooperative: bool,
    pub reports: Vec<AssumptionReport>,
    pub incidence: Option<IncidenceReport>,
}

impl AssumptionSuite {
    pub fn hard_failures(&self) -> Vec<&AssumptionReport> {
        self.reports.iter().filter(|r| r.failed()).collect()
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    /// Plain-text table.
    pub fn table(&self) -> String {
        let mut s = format!(
            "model {} ({})\n{:<28} {:<15} {:>8}  note\n",
            self.model,
            if self.cooperative { "cooperative" } else { "non-cooperative" },
            "check",
            "status",
            "samples"
        );
        for r in &self.reports {
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::HeuristicPass => "heuristic-pass",
                Status::Info => "info",
            };
            s += &format!("{:<28} {:<15} {:>8}  {}\n", r.name, status, r.samples_used, r.note);
            if let Some(cx) = &r.counterexample {
                s += &format!("{:<28} witness {:?}: {} (margin {:.3e})\n", "", cx.point, cx.inequality, cx.margin);
            }
        }
        s
    }
}

fn renamed(mut r: AssumptionReport, name: &str) -> AssumptionReport {
    r.name = name.into();
    r
}

/// Runs the applicable hypothesis set: A0-A3 for cooperative models; for
/// non-cooperative ones A0, A1 and the envelope conditions A2'-A5'.
pub fn verify_assumptions(
    model: &ModelSpec,
    envelopes: Option<&EnvelopePair>,
    samples: usize,
    seed: u64,
) -> AssumptionSuite {
    let mut reports = vec![check_a0(model, 1000, seed)];
    let (a1, spectral) = check_a1(model);
    reports.push(a1);
    if model.cooperative {
        reports.push(renamed(check_cooperative(model, &model.k, samples, seed), "A2"));
        if let Some(s) = &spectral {
            reports.push(renamed(check_subhomog(model, s, &model.k, 4, samples, seed), "A3"));
        }
    } else {
        let mut info = check_cooperative(model, &model.k, samples, seed);
        info.name = "A2".into();
        if info.failed() {
            info.status = Status::Info;
            info.note = "non-cooperative on [0, K]; envelope conditions apply".into();
        }
        reports.push(info);
        match envelopes {
            Some(env) => {
                reports.push(renamed(check_envelope_order(model, env, samples, seed), "A2'"));
                let mut a3 = check_same_linearization(model, env);
                for spec in [&env.lower, &env.upper] {
                    let r = check_no_other_equilibrium(spec, 1000, seed);
                    if r.failed() {
                        a3 = r;
                        break;
                    }
                }
                reports.push(renamed(a3, "A3'"));
                let lo = check_cooperative(&env.lower, env.k_plus(), samples, seed);
                let hi = check_cooperative(&env.upper, env.k_plus(), samples, seed);
                reports.push(renamed(if lo.failed() { lo } else { hi }, "A4'"));
                if let Some(s) = &spectral {
                    reports.push(renamed(check_subhomog(&env.upper, s, env.k_plus(), 4, samples, seed), "A5'"));
                }
            }
            None => reports.push(AssumptionReport::fail(
                "A2'",
                Counterexample {
                    point: vec![],
                    inequality: "envelopes f- <= f <= f+ exist".into(),
                    margin: f64::NAN,
                },
                0,
                "no envelope construction available",
            )),
        }
    }
    if let Some(s) = &spectral {
        reports.extend(check_model_inequalities(model, s, samples, seed));
    }
    let incidence = check_h1_h2(model, samples.min(4000)).ok();
    if let Some(inc) = &incidence {
        reports.push(inc.h1.clone());
        reports.push(inc.h2.clone());
    }
    AssumptionSuite {
        model: model.name.clone(),
        cooperative: model.cooperative,
        reports,
        incidence,
    }
}

/// Swapped-envelope pair, used to exercise the ordering check.
pub fn swapped(env: &EnvelopePair) -> EnvelopePair {
    EnvelopePair {
        lower: env.upper.clone(),
        upper: env.lower.clone(),
        breakpoint: env.breakpoint,
    }
}

/// Dense `f'(u)` helper re-exported for reports.
pub fn jacobian_at(model: &ModelSpec, u: &[f64]) -> DMatrix<f64> {
    model.jacobian_fd(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_envelopes, make_buffered, make_epidemic, make_fisher, make_population};

    #[test]
    fn buffered_passes_a0_to_a3() {
        let m = make_buffered(1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let suite = verify_assumptions(&m, None, 2000, 7);
        assert!(suite.passed(), "{}", suite.table());
        for n in ["A0", "A1", "A2", "A3"] {
            assert!(suite.get(n).is_some(), "{n}");
        }
        assert_eq!(suite.get("A3").unwrap().status, Status::HeuristicPass);
    }

    #[test]
    fn kpp_subhomogeneous() {
        let m = make_fisher(1.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        let r = check_subhomog(&m, &s, &m.k, 4, 2000, 1);
        assert_eq!(r.status, Status::HeuristicPass);
    }

    #[test]
    fn buffered_with_k1_below_k2_fails_ratio_inequality() {
        // k1 < k2: the sufficient condition is no longer implied
        let m = make_buffered(1.0, 1.0, 0.2, 0.9, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        let reps = check_model_inequalities(&m, &s, 2000, 3);
        assert!(reps[0].failed());
    }

    #[test]
    fn population_noncoop_witness_above_one() {
        let p = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let r = check_cooperative(&p, &p.k, 2000, 5);
        assert!(r.failed());
        let cx = r.counterexample.unwrap();
        assert!(cx.point[0] > 1.0);
        // replay
        assert!(cooperative_margin(&p, &cx.point).0 < -COOP_TOL);
    }

    #[test]
    fn population_suite_passes_envelope_checks() {
        let p = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let env = build_envelopes(&p).unwrap();
        let suite = verify_assumptions(&p, Some(&env), 2000, 11);
        assert!(suite.passed(), "{}", suite.table());
        for n in ["A2'", "A3'", "A4'", "A5'", "population-linear", "population-ricker", "population-upper-envelope"] {
            assert!(suite.get(n).is_some_and(|r| !r.failed()), "{n}");
        }
        assert_eq!(suite.get("A2").unwrap().status, Status::Info);
    }

    #[test]
    fn epidemic_g2_envelopes() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 1.0).unwrap();
        assert!(!m.cooperative);
        let env = build_envelopes(&m).unwrap();
        let rep = check_envelope_order(&m, &env, 10_000, 2);
        assert_eq!(rep.status, Status::Pass);
        let bad = check_envelope_order(&m, &swapped(&env), 2000, 2);
        assert!(bad.failed());
        let cx = bad.counterexample.unwrap();
        assert!(envelope_margin(&m, &swapped(&env), &cx.point).0 > 0.0 || cx.point.len() == 3);
        assert!(check_cooperative(&env.lower, env.k_plus(), 2000, 1).status == Status::Pass);
        assert!(check_cooperative(&env.upper, env.k_plus(), 2000, 1).status == Status::Pass);
        let suite = verify_assumptions(&m, Some(&env), 2000, 4);
        assert!(suite.passed(), "{}", suite.table());
        assert!(suite.get("A2").unwrap().status == Status::Info);
    }

    #[test]
    fn incidence_hypotheses() {
        let g1 = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        let r = check_h1_h2(&g1, 2000).unwrap();
        assert_eq!(r.h1.status, Status::Pass);
        assert_eq!(r.h2.note, "(a) increasing");
        assert!(r.slope_bound);
        let g2 = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 4.0).unwrap();
        let r = check_h1_h2(&g2, 4000).unwrap();
        assert_eq!(r.h1.status, Status::Pass);
        assert!((r.u_max_sampled.unwrap() - 0.5).abs() < 1e-2);
        // omega gamma <= 2 beta gives k <= u_max
        let g2c = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 1.8, 1.0).unwrap();
        assert_eq!(check_h1_h2(&g2c, 1000).unwrap().k_le_umax, Some(true));
        assert_eq!(r.k_le_umax, Some(false));
    }

    #[test]
    fn jacobian_bound_holds_for_e1() {
        let g1 = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        assert_eq!(check_jacobian_bound(&g1, 2000, 0).status, Status::Pass);
    }

    #[test]
    fn verdicts_deterministic() {
        let m = make_buffered(1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let a = verify_assumptions(&m, None, 500, 9);
        let b = verify_assumptions(&m, None, 500, 9);
        assert_eq!(a, b);
    }
}
