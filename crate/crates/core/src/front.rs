//! Monostable traveling fronts `Phi_c` in the co-moving variable
//! `xi = x + c t`, solving `D Phi'' - c Phi' + f(Phi) = 0`, `Phi(-inf) = 0`,
//! `Phi(+inf) = K`, normalized so that `Phi(xi) e^{-lambda1 xi} -> v(lambda1)`.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::roots::scan_root;
use crate::sis::{DecayMeta, Profile};
use crate::spectral::SpectralData;
use crate::tridiag::Tridiag;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrontOptions {
    /// Moved further left when `v e^{lambda1 xi_left}` would exceed 1e-8.
    pub xi_left: f64,
    pub xi_right: f64,
    pub dxi: f64,
    /// Stationary residual target.
    pub tol: f64,
    pub max_steps: usize,
    /// Lower end of the tail-fit window in `Phi_1`.
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            xi_left: -80.0,
            xi_right: 80.0,
            dxi: 0.02,
            tol: 1e-8,
            max_steps: 200_000,
            fit_lo: 1e-8,
            fit_hi: 1e-4,
        }
    }
}

/// Result of the tail fit used for phase normalization.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TailFit {
    /// Fitted amplitude `a` in `Phi_1 ~ a v_1 e^{lambda1 xi}` before the shift.
    pub amplitude: f64,
    /// Applied shift `ln(a) / lambda1`.
    pub shift: f64,
    /// Rate of the correction term `e^{kappa xi}`; 0 when a one-term fit was used.
    pub kappa: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RelaxMeta {
    pub steps: usize,
    pub residual: f64,
    pub plateaued: bool,
    pub dtau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontProfile {
    pub profile: Profile,
    pub c: f64,
    pub lambda1: f64,
    pub v1: Vec<f64>,
    /// Second root of `M(lambda) = c lambda`.
    pub lambda2: f64,
    pub fit: Option<TailFit>,
    pub relax: Option<RelaxMeta>,
}

impl FrontProfile {
    pub fn eval(&self, xi: f64) -> Vec<f64> {
        self.profile.eval(xi)
    }

    pub fn eval_into(&self, xi: f64, out: &mut [f64]) {
        self.profile.eval_into(xi, out)
    }

    /// `v(lambda1) e^{lambda1 xi}`.
    pub fn tail_bound(&self, xi: f64) -> Vec<f64> {
        let e = (self.lambda1 * xi).exp();
        self.v1.iter().map(|v| v * e).collect()
    }
}

/// Per-component diffusion coefficients for which `v e^{lambda1 xi}` solves
/// the discrete linearized equation exactly, so the computed tail decays at
/// exactly `lambda1`.
pub fn fitted_diffusion(diffusion: &[f64], c: f64, lambda1: f64, h: f64) -> Vec<f64> {
    let lh = lambda1 * h;
    let s2 = 2.0 * (lh.cosh() - 1.0) / (h * h);
    let s1 = lh.sinh() / h;
    diffusion
        .iter()
        .map(|&d| (d * lambda1 * lambda1 - c * lambda1 + c * s1) / s2)
        .collect()
}

fn second_root(spectral: &SpectralData, c: f64) -> Result<f64> {
    scan_root(
        |l| spectral.m(l) - c * l,
        spectral.lambda_star,
        1e3,
        1e-13,
    )
}

struct Stencil {
    d: Vec<f64>,
    c: f64,
    h: f64,
}

impl Stencil {
    /// Sup-norm of `D phi'' - c phi' + f(phi)` over interior nodes.
    fn residual(&self, model: &ModelSpec, phi: &Array2<f64>) -> (f64, usize) {
        let (n, m) = phi.dim();
        let mut f = vec![0.0; m];
        let mut row = vec![0.0; m];
        let mut worst = (0.0f64, 0usize);
        let h2 = self.h * self.h;
        for j in 1..n - 1 {
            for c in 0..m {
                row[c] = phi[[j, c]];
            }
            model.eval(&row, &mut f);
            for c in 0..m {
                let lap = (phi[[j + 1, c]] - 2.0 * phi[[j, c]] + phi[[j - 1, c]]) / h2;
                let adv = (phi[[j + 1, c]] - phi[[j - 1, c]]) / (2.0 * self.h);
                let r = (self.d[c] * lap - self.c * adv + f[c]).abs();
                if r > worst.0 {
                    worst = (r, j);
                }
            }
        }
        worst
    }
}

/// Default-option entry point.
pub fn compute_front(
    model: &ModelSpec,
    spectral: &SpectralData,
    c: f64,
    tol: f64,
) -> Result<FrontProfile> {
    compute_front_with(
        model,
        spectral,
        c,
        &FrontOptions {
            tol,
            ..FrontOptions::default()
        },
    )
}

pub fn compute_front_with(
    model: &ModelSpec,
    spectral: &SpectralData,
    c: f64,
    opts: &FrontOptions,
) -> Result<FrontProfile> {
    if !model.cooperative {
        return Err(Error::AssumptionViolation(format!(
            "{} is not cooperative; relax the lower envelope instead",
            model.name
        )));
    }
    let lambda1 = spectral.lambda1(c)?;
    let lambda2 = second_root(spectral, c)?;
    let v1 = spectral.v(lambda1);
    let m = model.m();
    let h = opts.dxi;
    // slow tails need a longer left side so the boundary value stays tiny
    let vmax = v1.iter().fold(0.0f64, |a, &x| a.max(x));
    let needed = (1e-8 / vmax).ln() / lambda1;
    let xi_left = if needed < opts.xi_left {
        opts.xi_right - ((opts.xi_right - needed) / h).ceil() * h
    } else {
        opts.xi_left
    };
    let n = ((opts.xi_right - xi_left) / h).round() as usize + 1;
    if n < 5 {
        return Err(Error::Domain("front grid needs at least 5 nodes".into()));
    }
    let d = fitted_diffusion(&model.diffusion, c, lambda1, h);
    for (i, &di) in d.iter().enumerate() {
        if h > 2.0 * di / c {
            return Err(Error::Domain(format!(
                "dxi = {h} too coarse for component {i}: centered convection needs dxi <= 2d/c = {}",
                2.0 * di / c
            )));
        }
    }
    let dtau = 1.0 / (2.0 * model.lipschitz);
    let xi = |j: usize| xi_left + j as f64 * h;
    let left: Vec<f64> = v1.iter().map(|v| v * (lambda1 * xi_left).exp()).collect();

    let mut phi = Array2::zeros((n, m));
    for j in 0..n {
        let e = (lambda1 * xi(j)).exp();
        for c_ in 0..m {
            phi[[j, c_]] = model.k[c_].min(v1[c_] * e);
        }
    }
    for c_ in 0..m {
        phi[[0, c_]] = left[c_];
        phi[[n - 1, c_]] = model.k[c_];
    }

    let h2 = h * h;
    let solvers: Vec<Tridiag> = d
        .iter()
        .map(|&di| {
            let lo = -dtau * (di / h2 + c / (2.0 * h));
            let up = -dtau * (di / h2 - c / (2.0 * h));
            Tridiag::new(lo, 1.0 + 2.0 * dtau * di / h2, up, n - 2)
        })
        .collect();
    let stencil = Stencil {
        d: d.clone(),
        c,
        h,
    };

    let kscale = model.k.iter().fold(1.0f64, |a, &x| a.max(x));
    let round = 1e-13 * kscale;
    let mut fvals = Array2::zeros((n, m));
    let mut f = vec![0.0; m];
    let mut row = vec![0.0; m];
    let mut rhs = vec![0.0; n - 2];
    let mut residual = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut best_step = 0;
    let mut plateaued = false;
    let mut steps = 0;
    let transient = (50.0 / dtau).ceil() as usize;
    while steps < opts.max_steps {
        for j in 1..n - 1 {
            for c_ in 0..m {
                row[c_] = phi[[j, c_]];
            }
            model.eval(&row, &mut f);
            for c_ in 0..m {
                fvals[[j, c_]] = f[c_];
            }
        }
        for (c_, solver) in solvers.iter().enumerate() {
            for j in 1..n - 1 {
                rhs[j - 1] = phi[[j, c_]] + dtau * fvals[[j, c_]];
            }
            rhs[0] -= solver.lower() * phi[[0, c_]];
            rhs[n - 3] -= solver.upper() * phi[[n - 1, c_]];
            solver.solve(&mut rhs);
            for j in 1..n - 1 {
                let new = rhs[j - 1];
                if new > phi[[j, c_]] + round {
                    return Err(Error::SchemeMonotonicity {
                        node: j,
                        component: c_,
                        time: steps as f64 * dtau,
                        excess: new - phi[[j, c_]],
                    });
                }
                phi[[j, c_]] = new;
            }
        }
        steps += 1;
        if steps % 20 == 0 || steps == opts.max_steps {
            residual = stencil.residual(model, &phi).0;
            if residual <= opts.tol {
                break;
            }
            if residual < 0.99 * best {
                best = residual;
                best_step = steps;
            } else if steps - best_step > 5000 {
                plateaued = true;
                break;
            }
            if steps >= transient {
                let sup_right = (n / 2..n)
                    .flat_map(|j| (0..m).map(move |c_| (j, c_)))
                    .map(|(j, c_)| phi[[j, c_]] / model.k[c_])
                    .fold(0.0f64, f64::max);
                if sup_right < 0.1 {
                    return Err(Error::DegenerateLimit(format!(
                        "sup of Phi/K over the right half fell to {sup_right:.3e}"
                    )));
                }
            }
        }
    }
    if residual > opts.tol && !(plateaued && residual <= 1e3 * opts.tol) {
        return Err(Error::Convergence {
            what: "front relaxation".into(),
            iterations: steps,
            residual,
        });
    }
    if plateaued {
        log::warn!("front relaxation plateaued at residual {residual:.3e} after {steps} steps");
    }

    let raw = FrontProfile {
        profile: Profile {
            t0: xi_left,
            dt: h,
            values: phi,
            decay: DecayMeta {
                rate: lambda1,
                amplitude: v1.clone(),
            },
        },
        c,
        lambda1,
        v1,
        lambda2,
        fit: None,
        relax: Some(RelaxMeta {
            steps,
            residual,
            plateaued,
            dtau,
        }),
    };
    normalize_phase_with(&raw, opts.fit_lo, opts.fit_hi)
}

pub fn normalize_phase(front: &FrontProfile) -> Result<FrontProfile> {
    normalize_phase_with(front, 1e-8, 1e-4)
}

/// Least-squares fit of `Phi_1 e^{-lambda1 xi} / v_1 = a + b e^{kappa xi} + b2 e^{2 kappa xi}` over
/// the window where `Phi_1` lies in `[lo, hi]`, then a shift of the grid by
/// `ln(a) / lambda1`. The correction rate `kappa` is the gap to the next tail
/// mode, `min(lambda2 - lambda1, lambda1)`; when it is too small to separate
/// from a constant across the window the fit is one-term.
pub fn normalize_phase_with(front: &FrontProfile, lo: f64, hi: f64) -> Result<FrontProfile> {
    let p = &front.profile;
    let lam = front.lambda1;
    let v = front.v1[0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..p.len() {
        let y = p.values[[j, 0]];
        if y >= lo && y <= hi {
            let x = p.t(j);
            xs.push(x);
            ys.push(y * (-lam * x).exp() / v);
        }
    }
    if xs.len() < 3 {
        return Err(Error::ExtendGrid(format!(
            "tail window Phi_1 in [{lo:e}, {hi:e}] holds {} nodes",
            xs.len()
        )));
    }
    let (x_min, x_max) = (xs[0], xs[xs.len() - 1]);
    let kappa = (front.lambda2 - lam).min(lam);
    let multi_term = kappa * (x_max - x_min) >= 0.5;
    let a = if multi_term {
        // basis (1, e, e^2) with e = e^{kappa (x - x_max)} in [0, 1]
        let rows = xs.len();
        let mut basis = DMatrix::zeros(rows, 3);
        for (r, x) in xs.iter().enumerate() {
            let e = (kappa * (x - x_max)).exp();
            basis[(r, 0)] = 1.0;
            basis[(r, 1)] = e;
            basis[(r, 2)] = e * e;
        }
        let rhs = DVector::from_vec(ys.clone());
        let coef = basis
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::ExtendGrid(format!("tail fit failed: {e}")))?;
        coef[0]
    } else {
        (ys.iter().map(|y| y.ln()).sum::<f64>() / ys.len() as f64).exp()
    };
    if !(a > 0.0) {
        return Err(Error::ExtendGrid(format!("tail fit gave amplitude {a}")));
    }
    let shift = a.ln() / lam;
    let mut out = front.clone();
    out.profile.t0 += shift;
    out.fit = Some(TailFit {
        amplitude: a,
        shift,
        kappa: if multi_term { kappa } else { 0.0 },
        window: (x_min, x_max),
        points: xs.len(),
    });
    Ok(out)
}

/// Free-slope fit of `ln Phi_1` over the same window; compare with `lambda1`.
pub fn measured_tail_slope(front: &FrontProfile, lo: f64, hi: f64) -> Option<f64> {
    let p = &front.profile;
    let pts: Vec<(f64, f64)> = (0..p.len())
        .filter(|&j| p.values[[j, 0]] >= lo && p.values[[j, 0]] <= hi)
        .map(|j| (p.t(j), p.values[[j, 0]].ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrontReport {
    pub residual_max: f64,
    pub residual_xi: f64,
    pub residual_ok: bool,
    pub min_forward_difference: f64,
    pub monotone_ok: bool,
    pub positive_ok: bool,
    pub bound_excess: f64,
    pub bound_ok: bool,
    pub tail_ratio_range: (f64, f64),
    pub tail_ok: bool,
    pub left_value: f64,
    pub right_error: f64,
    pub limits_ok: bool,
}

impl FrontReport {
    pub fn passed(&self) -> bool {
        self.residual_ok
            && self.monotone_ok
            && self.positive_ok
            && self.bound_ok
            && self.tail_ok
            && self.limits_ok
    }
}

/// Relative slack on `Phi <= v e^{lambda1 xi}`: the accuracy of the window
/// fit that fixes the phase.
pub const BOUND_REL_TOL: f64 = 1e-6;

/// Centered residual tolerance; covers the `O(dxi^2)` truncation error of
/// smooth exact fronts at the default spacing.
pub const FRONT_RESIDUAL_TOL: f64 = 1e-4;

/// Residual (same stencil as the relaxation), monotonicity, interior
/// positivity, `Phi <= v e^{lambda1 xi}`, tail ratio on the fit window and
/// the limits at both ends.
pub fn verify_front(model: &ModelSpec, front: &FrontProfile) -> FrontReport {
    let p = &front.profile;
    let n = p.len();
    let m = p.m();
    let stencil = Stencil {
        d: fitted_diffusion(&model.diffusion, front.c, front.lambda1, p.dt),
        c: front.c,
        h: p.dt,
    };
    let (residual_max, rj) = stencil.residual(model, &p.values);
    let kscale = model.k.iter().fold(1.0f64, |a, &x| a.max(x));
    let mut min_diff = f64::INFINITY;
    let mut positive = true;
    let mut bound_excess = f64::NEG_INFINITY;
    let mut ratio = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..n {
        let xi = p.t(j);
        let e = (front.lambda1 * xi).exp();
        for c in 0..m {
            let u = p.values[[j, c]];
            if j + 1 < n {
                min_diff = min_diff.min(p.values[[j + 1, c]] - u);
            }
            if j > 0 && j + 1 < n && !(u > 0.0) {
                positive = false;
            }
            let b = front.v1[c] * e;
            bound_excess = bound_excess.max((u - b) / b.max(1e-300));
        }
        let y = p.values[[j, 0]];
        if (1e-8..=1e-4).contains(&y) {
            let r = y / (front.v1[0] * e);
            ratio = (ratio.0.min(r), ratio.1.max(r));
        }
    }
    let left_value = p.row(0).into_iter().fold(0.0f64, f64::max);
    let right_error = (0..m)
        .map(|c| (p.values[[n - 1, c]] - model.k[c]).abs())
        .fold(0.0f64, f64::max);
    FrontReport {
        residual_max,
        residual_xi: p.t(rj),
        residual_ok: residual_max <= FRONT_RESIDUAL_TOL,
        min_forward_difference: min_diff,
        monotone_ok: min_diff >= -1e-12 * kscale,
        positive_ok: positive,
        bound_excess,
        bound_ok: bound_excess <= BOUND_REL_TOL,
        tail_ratio_range: ratio,
        tail_ok: ratio.0 >= 0.98 && ratio.1 <= 1.02,
        left_value,
        right_error,
        limits_ok: left_value <= 1e-6 && right_error <= 1e-4,
    }
}

/// Exact Fisher-KPP front `(1 + e^{-xi/sqrt 6})^{-2}` at `c = 5/sqrt 6`
/// (`d = r = 1`), sampled on a grid; already decay-normalized.
pub fn fisher_exact_front(xi_left: f64, xi_right: f64, dxi: f64) -> FrontProfile {
    let s6 = 6f64.sqrt();
    let n = ((xi_right - xi_left) / dxi).round() as usize + 1;
    let values = Array2::from_shape_fn((n, 1), |(j, _)| {
        let xi = xi_left + j as f64 * dxi;
        (1.0 + (-xi / s6).exp()).powi(-2)
    });
    FrontProfile {
        profile: Profile {
            t0: xi_left,
            dt: dxi,
            values,
            decay: DecayMeta {
                rate: 2.0 / s6,
                amplitude: vec![1.0],
            },
        },
        c: 5.0 / s6,
        lambda1: 2.0 / s6,
        v1: vec![1.0],
        lambda2: 3.0 / s6,
        fit: None,
        relax: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_envelopes_population, make_epidemic, make_fisher, make_population, GKind};
    use crate::spectral::compute_cstar;

    fn fisher() -> (ModelSpec, SpectralData) {
        let m = make_fisher(1.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        (m, s)
    }

    #[test]
    fn exact_fisher_front_solves_ode() {
        // closed form residual, checked analytically via derivatives
        let s6 = 6f64.sqrt();
        let c = 5.0 / s6;
        for k in -200..200 {
            let xi = k as f64 * 0.1;
            let e = (-xi / s6).exp();
            let p = (1.0 + e).powi(-2);
            let p1 = 2.0 / s6 * e * (1.0 + e).powi(-3);
            let p2 = (6.0 * e * e * (1.0 + e).powi(-4) - 2.0 * e * (1.0 + e).powi(-3)) / 6.0;
            assert!((p2 - c * p1 + p * (1.0 - p)).abs() < 1e-10);
        }
        let (m, _) = fisher();
        let rep = verify_front(&m, &fisher_exact_front(-80.0, 80.0, 0.02));
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn fitted_diffusion_makes_tail_exact() {
        let (d, c, l, h) = (1.3, 2.0, 0.6, 0.05);
        let dh = fitted_diffusion(&[d], c, l, h)[0];
        let e = |x: f64| (l * x).exp();
        let x = 0.7;
        let disc = dh * (e(x + h) - 2.0 * e(x) + e(x - h)) / (h * h) - c * (e(x + h) - e(x - h)) / (2.0 * h);
        assert!((disc - (d * l * l - c * l) * e(x)).abs() < 1e-12);
        assert!((dh - d).abs() < 1e-3);
    }

    #[test]
    fn fisher_front_matches_closed_form() {
        let (m, s) = fisher();
        let c = 5.0 / 6f64.sqrt();
        let f = compute_front(&m, &s, c, 1e-8).unwrap();
        assert!((f.lambda1 - 2.0 / 6f64.sqrt()).abs() < 1e-12);
        assert!((f.lambda2 - 3.0 / 6f64.sqrt()).abs() < 1e-10);
        let s6 = 6f64.sqrt();
        let mut err = 0.0f64;
        for k in -600..600 {
            let xi = k as f64 * 0.05;
            let exact = (1.0 + (-xi / s6).exp()).powi(-2);
            err = err.max((f.eval(xi)[0] - exact).abs());
        }
        assert!(err <= 1e-3, "distance to closed form {err}");
        let rep = verify_front(&m, &f);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.residual_max <= 1e-8);
    }

    #[test]
    fn normalization_idempotent_and_equivariant() {
        let (m, s) = fisher();
        let f = compute_front(&m, &s, 2.5, 1e-8).unwrap();
        let again = normalize_phase(&f).unwrap();
        assert!(again.fit.as_ref().unwrap().shift.abs() <= f.profile.dt);
        let mut moved = f.clone();
        moved.profile.t0 += 3.0;
        let back = normalize_phase(&moved).unwrap();
        assert!((back.fit.as_ref().unwrap().shift + 3.0).abs() <= 2.0 * f.profile.dt);
        let tail = verify_front(&m, &f).tail_ratio_range;
        assert!(tail.0 >= 0.98 && tail.1 <= 1.02);
    }

    #[test]
    fn tail_slope_matches_lambda1() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        for mult in [1.1, 1.5, 2.0] {
            let f = compute_front(&m, &s, mult * s.c_star, 1e-8).unwrap();
            let slope = measured_tail_slope(&f, 1e-8, 1e-4).unwrap();
            assert!((slope / f.lambda1 - 1.0).abs() < 0.01, "c = {mult} c*: slope {slope}");
            let rep = verify_front(&m, &f);
            assert!(rep.passed(), "{rep:?}");
            if mult == 1.1 {
                assert!(rep.residual_max <= 1e-6);
            }
        }
    }

    #[test]
    fn speed_below_critical_rejected() {
        let (m, s) = fisher();
        assert!(matches!(
            compute_front(&m, &s, 1.9, 1e-8),
            Err(Error::SpeedBelowCritical { .. })
        ));
    }

    #[test]
    fn injected_non_monotone_profile_fails() {
        let (m, _) = fisher();
        let mut f = fisher_exact_front(-80.0, 80.0, 0.02);
        let j = f.profile.len() / 2;
        f.profile.values[[j, 0]] -= 0.05;
        assert!(!verify_front(&m, &f).monotone_ok);
    }

    #[test]
    fn envelope_front_reaches_k_minus() {
        let p = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let env = build_envelopes_population(&p).unwrap();
        let s = compute_cstar(&env.lower).unwrap();
        let f = compute_front(&env.lower, &s, 2.5, 1e-8).unwrap();
        let last = f.profile.row(f.profile.len() - 1);
        for c in 0..2 {
            assert!((last[c] - env.k_minus()[c]).abs() <= 1e-4);
        }
        let rep = verify_front(&env.lower, &f);
        assert!(rep.passed(), "{rep:?}");
    }
}
