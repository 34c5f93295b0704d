//! Spatially independent solution `Gamma(t)`: the heteroclinic of
//! `u' = f(u)` from 0 to K, built by monotone iteration between an explicit
//! sub/supersolution pair.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::spectral::SpectralData;

/// Analytic left tail `amplitude * exp(rate * t)` used before the first node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayMeta {
    pub rate: f64,
    pub amplitude: Vec<f64>,
}

/// Uniformly sampled vector-valued function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub t0: f64,
    pub dt: f64,
    /// `n x m` samples.
    pub values: Array2<f64>,
    pub decay: DecayMeta,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).to_vec()
    }

    /// Linear interpolation inside the grid, analytic tail to the left and the
    /// last sample to the right.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let n = self.len();
        if t < self.t0 {
            let e = (self.decay.rate * t).exp();
            for (o, a) in out.iter_mut().zip(&self.decay.amplitude) {
                *o = a * e;
            }
            return;
        }
        let s = (t - self.t0) / self.dt;
        if s >= (n - 1) as f64 {
            for (c, o) in out.iter_mut().enumerate() {
                *o = self.values[[n - 1, c]];
            }
            return;
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        for (c, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.values[[i, c]] + w * self.values[[i + 1, c]];
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.eval_into(t, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// `u <- F(u)` with every node of the new iterate computed from the old one.
    Jacobi,
    /// Same map, but each node uses the freshly updated left neighbour.
    GaussSeidel,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SisOptions {
    pub t_left: f64,
    /// Right end of the grid; `None` picks it from the decay rate at K.
    pub t_right: Option<f64>,
    pub dt: f64,
    pub tol: f64,
    pub epsilon: f64,
    pub q0: f64,
    pub q_max: f64,
    pub max_sweeps: usize,
    pub sweep: Sweep,
}

impl Default for SisOptions {
    fn default() -> Self {
        SisOptions {
            t_left: -40.0,
            t_right: None,
            dt: 0.002,
            tol: 1e-10,
            epsilon: 1.5,
            q0: 2.0,
            q_max: 1024.0,
            max_sweeps: 10_000,
            sweep: Sweep::GaussSeidel,
        }
    }
}

/// Run metadata of the monotone iteration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SisMeta {
    pub q: f64,
    pub sweeps: usize,
    pub last_increment: f64,
    pub t_right: f64,
    pub lipschitz: f64,
}

fn grid_len(t0: f64, t1: f64, dt: f64) -> usize {
    ((t1 - t0) / dt).round() as usize + 1
}

/// `phi_bar = min{K, v* e^{lambda t}}` and
/// `phi_under = max{0, v* e^{lambda t} - q v* e^{eps lambda t}}` on the grid.
pub fn sub_super_pair(
    spectral: &SpectralData,
    k: &[f64],
    epsilon: f64,
    q: f64,
    t0: f64,
    dt: f64,
    n: usize,
) -> Result<(Profile, Profile)> {
    if !(epsilon > 1.0 && epsilon < 2.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (1, 2)")));
    }
    if !(q > 1.0) {
        return Err(Error::Domain(format!("q = {q} must exceed 1")));
    }
    let m = k.len();
    let lam = spectral.growth_rate;
    let v = &spectral.v_star;
    let mut upper = Array2::zeros((n, m));
    let mut lower = Array2::zeros((n, m));
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let e1 = (lam * t).exp();
        let e2 = (epsilon * lam * t).exp();
        for c in 0..m {
            upper[[i, c]] = k[c].min(v[c] * e1);
            lower[[i, c]] = (v[c] * e1 - q * v[c] * e2).max(0.0);
        }
    }
    let decay = DecayMeta {
        rate: lam,
        amplitude: v.clone(),
    };
    Ok((
        Profile {
            t0,
            dt,
            values: lower,
            decay: decay.clone(),
        },
        Profile {
            t0,
            dt,
            values: upper,
            decay,
        },
    ))
}

/// Two-point quadrature of `int_0^h e^{-L(h-s)} Q(s) ds` exact for
/// constants and for `e^{lambda s}`.
fn fitted_weights(lam: f64, l: f64, h: f64) -> (f64, f64, f64) {
    let decay = (-l * h).exp();
    let i0 = -(-l * h).exp_m1() / l;
    let i1 = ((lam * h).exp() - decay) / (lam + l);
    let w1 = (i1 - i0) / (lam * h).exp_m1();
    (decay, i0 - w1, w1)
}

struct Integrator<'a> {
    model: &'a ModelSpec,
    l: f64,
    decay: f64,
    w0: f64,
    w1: f64,
    left: Vec<f64>,
}

impl Integrator<'_> {
    fn q(&self, u: &[f64], out: &mut [f64]) {
        self.model.eval(u, out);
        for (o, x) in out.iter_mut().zip(u) {
            *o += self.l * x;
        }
    }

    /// One application of `F`; returns the sup-norm change.
    fn apply(&self, u: &Array2<f64>, out: &mut Array2<f64>, sweep: Sweep) -> f64 {
        let (n, m) = u.dim();
        let mut q_prev = vec![0.0; m];
        let mut q_next = vec![0.0; m];
        let mut row = vec![0.0; m];
        for c in 0..m {
            out[[0, c]] = self.left[c];
        }
        let mut change = 0.0f64;
        for c in 0..m {
            change = change.max((out[[0, c]] - u[[0, c]]).abs());
        }
        for c in 0..m {
            row[c] = match sweep {
                Sweep::Jacobi => u[[0, c]],
                Sweep::GaussSeidel => out[[0, c]],
            };
        }
        self.q(&row, &mut q_prev);
        for j in 0..n - 1 {
            for c in 0..m {
                row[c] = u[[j + 1, c]];
            }
            self.q(&row, &mut q_next);
            for c in 0..m {
                let g = self.decay * out[[j, c]] + self.w0 * q_prev[c] + self.w1 * q_next[c];
                out[[j + 1, c]] = g;
                change = change.max((g - u[[j + 1, c]]).abs());
            }
            match sweep {
                Sweep::Jacobi => q_prev.copy_from_slice(&q_next),
                Sweep::GaussSeidel => {
                    for c in 0..m {
                        row[c] = out[[j + 1, c]];
                    }
                    self.q(&row, &mut q_prev);
                }
            }
        }
        change
    }
}

fn decay_rate_at_k(model: &ModelSpec) -> f64 {
    let j = model.jacobian_fd(&model.k);
    let s = j
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    (-s).max(0.05)
}

fn auto_t_right(model: &ModelSpec, spectral: &SpectralData, opts: &SisOptions) -> f64 {
    let lam = spectral.growth_rate;
    let t_cross = model
        .k
        .iter()
        .zip(&spectral.v_star)
        .map(|(k, v)| (k / v).ln() / lam)
        .fold(0.0f64, f64::max);
    let knorm = model.k.iter().fold(0.0f64, |a, &x| a.max(x));
    let mu = decay_rate_at_k(model);
    let span = t_cross + (100.0 * knorm / opts.tol).ln() / mu + 5.0;
    let t = span.max(40.0);
    // snap to the grid spacing
    opts.t_left + ((t - opts.t_left) / opts.dt).ceil() * opts.dt
}

/// Default-option entry point.
pub fn compute_gamma(model: &ModelSpec, spectral: &SpectralData, tol: f64) -> Result<Profile> {
    let opts = SisOptions {
        tol,
        ..SisOptions::default()
    };
    Ok(compute_gamma_with(model, spectral, &opts)?.0)
}

pub fn compute_gamma_with(
    model: &ModelSpec,
    spectral: &SpectralData,
    opts: &SisOptions,
) -> Result<(Profile, SisMeta)> {
    if !model.cooperative {
        return Err(Error::AssumptionViolation(format!(
            "{} is not cooperative; use its lower envelope",
            model.name
        )));
    }
    let t_right = opts.t_right.unwrap_or_else(|| auto_t_right(model, spectral, opts));
    let n = grid_len(opts.t_left, t_right, opts.dt);
    if n < 3 {
        return Err(Error::Domain("SIS grid needs at least 3 nodes".into()));
    }
    let m = model.m();
    let lam = spectral.growth_rate;
    let l = model.lipschitz;
    let (decay, w0, w1) = fitted_weights(lam, l, opts.dt);
    let left: Vec<f64> = spectral
        .v_star
        .iter()
        .map(|v| v * (lam * opts.t_left).exp())
        .collect();
    let integ = Integrator {
        model,
        l,
        decay,
        w0,
        w1,
        left,
    };
    let scale = model.k.iter().fold(1.0f64, |a, &x| a.max(x));
    let round = 1e-13 * scale;

    // find q with F(phi_under) >= phi_under on the grid
    let mut q = opts.q0;
    let (lower, upper) = loop {
        let (lo, up) = sub_super_pair(spectral, &model.k, opts.epsilon, q, opts.t_left, opts.dt, n)?;
        let mut img = Array2::zeros((n, m));
        integ.apply(&lo.values, &mut img, Sweep::Jacobi);
        let ok = img
            .iter()
            .zip(lo.values.iter())
            .all(|(f, u)| *f >= u - round);
        if ok {
            break (lo, up);
        }
        q *= 2.0;
        if q > opts.q_max {
            return Err(Error::Convergence {
                what: "subsolution search (q doubling)".into(),
                iterations: (opts.q_max / opts.q0).log2() as usize,
                residual: q,
            });
        }
    };

    let mut u = upper.values.clone();
    let mut next = Array2::zeros((n, m));
    let mut sweeps = 0;
    let mut inc = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        inc = integ.apply(&u, &mut next, opts.sweep);
        sweeps += 1;
        for ((j, c), x) in next.indexed_iter_mut() {
            if *x > u[[j, c]] + round {
                return Err(Error::SchemeMonotonicity {
                    node: j,
                    component: c,
                    time: opts.t_left + j as f64 * opts.dt,
                    excess: *x - u[[j, c]],
                });
            }
            // roundoff-level rises would let the iterate creep above phi_bar
            *x = x.min(u[[j, c]]);
        }
        std::mem::swap(&mut u, &mut next);
        if inc < opts.tol {
            break;
        }
    }
    if inc >= opts.tol {
        return Err(Error::Convergence {
            what: "SIS monotone iteration".into(),
            iterations: sweeps,
            residual: inc,
        });
    }
    for ((j, c), &x) in u.indexed_iter() {
        if x < lower.values[[j, c]] - round || x > upper.values[[j, c]] + round {
            return Err(Error::SchemeMonotonicity {
                node: j,
                component: c,
                time: opts.t_left + j as f64 * opts.dt,
                excess: (lower.values[[j, c]] - x).max(x - upper.values[[j, c]]),
            });
        }
    }
    let end_err = (0..m)
        .map(|c| (u[[n - 1, c]] - model.k[c]).abs())
        .fold(0.0f64, f64::max);
    if end_err > 10.0 * opts.tol {
        return Err(Error::DomainTooShort(format!(
            "|Gamma({t_right}) - K| = {end_err:.3e} exceeds {:.1e}; extend t_right",
            10.0 * opts.tol
        )));
    }
    let profile = Profile {
        t0: opts.t_left,
        dt: opts.dt,
        values: u,
        decay: DecayMeta {
            rate: lam,
            amplitude: spectral.v_star.clone(),
        },
    };
    Ok((
        profile,
        SisMeta {
            q,
            sweeps,
            last_increment: inc,
            t_right,
            lipschitz: l,
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GammaReport {
    pub residual_max: f64,
    pub residual_node: usize,
    pub residual_ok: bool,
    pub min_forward_difference: f64,
    pub monotone_ok: bool,
    pub bound_excess: f64,
    pub bound_ok: bool,
    pub tail_ratio_deviation: f64,
    pub tail_ok: bool,
    pub left_value: Vec<f64>,
    pub right_error: f64,
}

impl GammaReport {
    pub fn passed(&self) -> bool {
        self.residual_ok && self.monotone_ok && self.bound_ok && self.tail_ok
    }
}

/// Loose enough for Lipschitz envelope reactions, whose kinks leave an
/// `O(dt)` centered-difference residual.
pub const RESIDUAL_TOL: f64 = 1e-4;
/// Width of the left window used for the tail ratio.
pub const TAIL_WINDOW: f64 = 10.0;
pub const TAIL_TOL: f64 = 0.02;

/// ODE residual, strict monotonicity, the bound `Gamma <= v* e^{lambda t}`
/// and the tail ratio `Gamma / (v* e^{lambda t})` over the leftmost window. Monotonicity is only required where
/// `Gamma < K (1 - 1e-12)`; closer to K the differences are roundoff.
pub fn verify_gamma(model: &ModelSpec, profile: &Profile) -> GammaReport {
    let n = profile.len();
    let m = profile.m();
    let lam = profile.decay.rate;
    let v = &profile.decay.amplitude;
    let mut f = vec![0.0; m];
    let mut residual_max = 0.0f64;
    let mut residual_node = 0;
    for j in 1..n - 1 {
        model.eval(&profile.row(j), &mut f);
        for c in 0..m {
            let d = (profile.values[[j + 1, c]] - profile.values[[j - 1, c]]) / (2.0 * profile.dt);
            let r = (d - f[c]).abs();
            if r > residual_max {
                residual_max = r;
                residual_node = j;
            }
        }
    }
    let mut min_diff = f64::INFINITY;
    for j in 0..n - 1 {
        for c in 0..m {
            if profile.values[[j + 1, c]] < model.k[c] * (1.0 - 1e-12) {
                min_diff = min_diff.min(profile.values[[j + 1, c]] - profile.values[[j, c]]);
            }
        }
    }
    let mut bound_excess = f64::NEG_INFINITY;
    let mut tail_dev = 0.0f64;
    for j in 0..n {
        let t = profile.t(j);
        let e = (lam * t).exp();
        for c in 0..m {
            let b = v[c] * e;
            bound_excess = bound_excess.max((profile.values[[j, c]] - b) / b.max(1e-300));
            if t <= profile.t0 + TAIL_WINDOW {
                tail_dev = tail_dev.max((profile.values[[j, c]] / b - 1.0).abs());
            }
        }
    }
    let right_error = (0..m)
        .map(|c| (profile.values[[n - 1, c]] - model.k[c]).abs())
        .fold(0.0f64, f64::max);
    GammaReport {
        residual_max,
        residual_node,
        residual_ok: residual_max <= RESIDUAL_TOL,
        min_forward_difference: min_diff,
        monotone_ok: min_diff > 0.0,
        bound_excess,
        bound_ok: bound_excess <= 1e-10,
        tail_ratio_deviation: tail_dev,
        tail_ok: tail_dev <= TAIL_TOL,
        left_value: profile.row(0),
        right_error,
    }
}
