//! Reaction-diffusion model specifications, the builtin application models
//! and the cooperative envelopes of the non-cooperative builtins.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect, scan_root, ROOT_TOL};

pub type ReactionFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Residual allowed in `f(K)` after root solves.
pub const EQ_TOL: f64 = 1e-10;
const LIPSCHITZ_SAFETY: f64 = 1.25;
const LIPSCHITZ_POINTS_PER_DIM: usize = 64;
const LIPSCHITZ_MAX_POINTS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GKind {
    G1,
    G2,
}

impl GKind {
    pub fn eval(self, omega: f64, nu: f64, u: f64) -> f64 {
        match self {
            GKind::G1 => omega * u / (1.0 + nu * u),
            GKind::G2 => omega * u / (1.0 + nu * u * u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Buffered {
        d1: f64,
        d2: f64,
        k1: f64,
        k2: f64,
        b: f64,
    },
    Epidemic {
        d1: f64,
        d2: f64,
        gamma: f64,
        beta: f64,
        g: GKind,
        omega: f64,
        nu: f64,
        k: f64,
        u_max: Option<f64>,
    },
    Population {
        d1: f64,
        d2: f64,
        r1: f64,
        r2: f64,
        alpha: f64,
        delta: f64,
        k1: f64,
    },
    Custom {
        name: String,
    },
}

/// Which member of an envelope family a spec represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Exact,
    Lower,
    Upper,
}

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub role: Role,
    pub diffusion: Vec<f64>,
    pub reaction: ReactionFn,
    pub jacobian0: DMatrix<f64>,
    pub k: Vec<f64>,
    pub state_box_upper: Vec<f64>,
    pub lipschitz: f64,
    pub cooperative: bool,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("role", &self.role)
            .field("diffusion", &self.diffusion)
            .field("k", &self.k)
            .field("state_box_upper", &self.state_box_upper)
            .field("lipschitz", &self.lipschitz)
            .field("cooperative", &self.cooperative)
            .finish()
    }
}

impl ModelSpec {
    pub fn m(&self) -> usize {
        self.diffusion.len()
    }

    pub fn eval(&self, u: &[f64], out: &mut [f64]) {
        (self.reaction)(u, out)
    }

    pub fn f(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        (self.reaction)(u, &mut out);
        out
    }

    /// Central finite-difference Jacobian at `u`.
    pub fn jacobian_fd(&self, u: &[f64]) -> DMatrix<f64> {
        jacobian_fd(&self.reaction, u)
    }

    /// Stable textual identity used for hashing and caching.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{:?}",
            self.name, self.kind, self.role, self.diffusion, self.k, self.state_box_upper
        )
    }

    /// A user-supplied model. `jacobian0` falls back to central differences and
    /// `state_box_upper` to `k`.
    pub fn custom(
        name: &str,
        diffusion: Vec<f64>,
        reaction: ReactionFn,
        k: Vec<f64>,
        jacobian0: Option<DMatrix<f64>>,
        state_box_upper: Option<Vec<f64>>,
    ) -> Result<Self> {
        let m = diffusion.len();
        if m == 0 || k.len() != m {
            return Err(Error::Domain(format!(
                "component count mismatch: {} diffusion, {} equilibrium",
                m,
                k.len()
            )));
        }
        let zero = vec![0.0; m];
        let jac = jacobian0.unwrap_or_else(|| jacobian_fd(&reaction, &zero));
        let upper = state_box_upper.unwrap_or_else(|| k.clone());
        let cooperative = sampled_cooperative(&reaction, &upper, 256);
        ModelSpec::assemble(
            name,
            ModelKind::Custom {
                name: name.to_string(),
            },
            Role::Exact,
            diffusion,
            reaction,
            jac,
            k,
            upper,
            cooperative,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        kind: ModelKind,
        role: Role,
        diffusion: Vec<f64>,
        reaction: ReactionFn,
        jacobian0: DMatrix<f64>,
        k: Vec<f64>,
        state_box_upper: Vec<f64>,
        cooperative: bool,
    ) -> Result<Self> {
        for (i, &d) in diffusion.iter().enumerate() {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter {
                    name: format!("d{}", i + 1),
                    value: d,
                    reason: "diffusion must be positive".into(),
                });
            }
        }
        if k.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::NoPositiveEquilibrium(format!("K = {k:?}")));
        }
        let m = diffusion.len();
        let mut out = vec![0.0; m];
        reaction(&vec![0.0; m], &mut out);
        if out.iter().any(|&x| x != 0.0) {
            return Err(Error::Domain(format!("f(0) = {out:?} is not zero")));
        }
        reaction(&k, &mut out);
        let res = out.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if res > EQ_TOL {
            return Err(Error::Domain(format!("|f(K)| = {res:.3e} exceeds {EQ_TOL:e}")));
        }
        let lipschitz = estimate_lipschitz(&reaction, &state_box_upper);
        Ok(ModelSpec {
            name: name.to_string(),
            kind,
            role,
            diffusion,
            reaction,
            jacobian0,
            k,
            state_box_upper,
            lipschitz,
            cooperative,
        })
    }

    /// Same model with a different admissible box (Lipschitz constant redone).
    pub fn with_state_box(&self, upper: Vec<f64>) -> Self {
        let mut out = self.clone();
        out.lipschitz = estimate_lipschitz(&out.reaction, &upper);
        out.state_box_upper = upper;
        out
    }
}

pub fn jacobian_fd(reaction: &ReactionFn, u: &[f64]) -> DMatrix<f64> {
    let m = u.len();
    let mut jac = DMatrix::zeros(m, m);
    let mut up = u.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for j in 0..m {
        let h = 1e-6 * u[j].abs().max(1.0);
        up[j] = u[j] + h;
        reaction(&up, &mut fp);
        up[j] = u[j] - h;
        reaction(&up, &mut fm);
        up[j] = u[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn partial_fd(reaction: &ReactionFn, u: &[f64], i: usize, j: usize) -> f64 {
    let m = u.len();
    let h = 1e-6 * u[j].abs().max(1.0);
    let mut up = u.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    up[j] = u[j] + h;
    reaction(&up, &mut fp);
    up[j] = u[j] - h;
    reaction(&up, &mut fm);
    (fp[i] - fm[i]) / (2.0 * h)
}

fn sampled_cooperative(reaction: &ReactionFn, upper: &[f64], n: usize) -> bool {
    let m = upper.len();
    let h = crate::sampling::Halton::new(m, 0);
    (0..n).all(|s| {
        let u = h.point_in_box(s, upper);
        (0..m).all(|i| (0..m).all(|j| i == j || partial_fd(reaction, &u, i, j) >= -1e-8))
    })
}

/// `1.25 * max |d f_i / d u_i|` over a tensor grid of `[0, upper]`.
pub fn estimate_lipschitz(reaction: &ReactionFn, upper: &[f64]) -> f64 {
    let m = upper.len();
    let mut per_dim = LIPSCHITZ_POINTS_PER_DIM;
    while per_dim > 2 && per_dim.pow(m as u32) > LIPSCHITZ_MAX_POINTS {
        per_dim -= 1;
    }
    let total = per_dim.pow(m as u32);
    let mut u = vec![0.0; m];
    let mut best = 0.0f64;
    for idx in 0..total {
        let mut r = idx;
        for (c, x) in u.iter_mut().enumerate() {
            let a = r % per_dim;
            r /= per_dim;
            *x = upper[c] * a as f64 / (per_dim - 1) as f64;
        }
        for i in 0..m {
            best = best.max(partial_fd(reaction, &u, i, i).abs());
        }
    }
    (LIPSCHITZ_SAFETY * best).max(1e-3)
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.to_string(),
            value,
            reason: "must be positive".into(),
        })
    }
}

/// Scalar KPP/Fisher equation `u_t = d u_xx + r u (1 - u)`.
pub fn make_fisher(d: f64, r: f64) -> Result<ModelSpec> {
    positive("d", d)?;
    positive("r", r)?;
    let reaction: ReactionFn = Arc::new(move |u: &[f64], out: &mut [f64]| {
        out[0] = r * u[0] * (1.0 - u[0]);
    });
    ModelSpec::assemble(
        "fisher",
        ModelKind::Custom {
            name: "fisher".into(),
        },
        Role::Exact,
        vec![d],
        reaction,
        DMatrix::from_element(1, 1, r),
        vec![1.0],
        vec![1.0],
        true,
    )
}

/// Buffered system after the change of variables: cooperative on `[0, K]`.
pub fn make_buffered(d1: f64, d2: f64, k1: f64, k2: f64, b: f64) -> Result<ModelSpec> {
    for (n, v) in [("d1", d1), ("d2", d2), ("k1", k1), ("k2", k2), ("b", b)] {
        positive(n, v)?;
    }
    let reaction: ReactionFn = Arc::new(move |w: &[f64], out: &mut [f64]| {
        let bound = k2 * w[0] * (b - w[1]);
        out[0] = w[0] * (1.0 - w[0]) + k1 * w[1] - bound;
        out[1] = -k1 * w[1] + bound;
    });
    let jac = DMatrix::from_row_slice(2, 2, &[1.0 - k2 * b, k1, k2 * b, -k1]);
    let k = vec![1.0, k2 * b / (k2 + k1)];
    ModelSpec::assemble(
        "buffered",
        ModelKind::Buffered { d1, d2, k1, k2, b },
        Role::Exact,
        vec![d1, d2],
        reaction,
        jac,
        k.clone(),
        k,
        true,
    )
}

fn epidemic_reaction(gamma: f64, beta: f64, g: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> ReactionFn {
    Arc::new(move |u: &[f64], out: &mut [f64]| {
        out[0] = -u[0] + gamma * u[1];
        out[1] = -beta * u[1] + g(u[0]);
    })
}

/// Epidemic model with incidence `g1 = w u / (1 + nu u)` or `g2 = w u / (1 + nu u^2)`.
pub fn make_epidemic(
    d1: f64,
    d2: f64,
    gamma: f64,
    beta: f64,
    g: GKind,
    omega: f64,
    nu: f64,
) -> Result<ModelSpec> {
    for (n, v) in [
        ("d1", d1),
        ("d2", d2),
        ("gamma", gamma),
        ("beta", beta),
        ("omega", omega),
        ("nu", nu),
    ] {
        positive(n, v)?;
    }
    if omega * gamma <= beta {
        return Err(Error::NoPositiveEquilibrium(format!(
            "omega*gamma = {} <= beta = {}",
            omega * gamma,
            beta
        )));
    }
    let ratio = (omega * gamma - beta) / (beta * nu);
    let (k, u_max) = match g {
        GKind::G1 => (ratio, None),
        GKind::G2 => (ratio.sqrt(), Some(1.0 / nu.sqrt())),
    };
    let gfun = move |u: f64| g.eval(omega, nu, u);
    let kvec = vec![k, gfun(k) / beta];
    let cooperative = u_max.is_none_or(|um| k <= um);
    let upper = match u_max {
        Some(um) if !cooperative => vec![gamma / beta * gfun(um), gfun(um) / beta],
        _ => kvec.clone(),
    };
    let jac = DMatrix::from_row_slice(2, 2, &[-1.0, gamma, omega, -beta]);
    let name = match g {
        GKind::G1 => "epidemic-g1",
        GKind::G2 => "epidemic-g2",
    };
    ModelSpec::assemble(
        name,
        ModelKind::Epidemic {
            d1,
            d2,
            gamma,
            beta,
            g,
            omega,
            nu,
            k,
            u_max,
        },
        Role::Exact,
        vec![d1, d2],
        epidemic_reaction(gamma, beta, Arc::new(gfun)),
        jac,
        kvec,
        upper,
        cooperative,
    )
}

fn ricker(w: f64) -> f64 {
    w * (-w).exp()
}

fn population_reaction(
    r1: f64,
    r2: f64,
    alpha: f64,
    delta: f64,
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
) -> ReactionFn {
    Arc::new(move |w: &[f64], out: &mut [f64]| {
        out[0] = w[0] * (r1 - alpha - delta * w[0] + r1 * w[1]);
        out[1] = r2 * (1.0 + w[1]) * (-w[1] + h(w[0]));
    })
}

/// Positive root of `r1 K e^{-K} = delta K + alpha - r1`.
fn population_k1(r1: f64, alpha: f64, delta: f64) -> Result<f64> {
    scan_root(
        |x| r1 * ricker(x) - (delta * x + alpha - r1),
        1e-8,
        1e6,
        ROOT_TOL,
    )
}

/// Population model with Ricker recruitment in the shifted variables.
pub fn make_population(
    d1: f64,
    d2: f64,
    r1: f64,
    r2: f64,
    alpha: f64,
    delta: f64,
) -> Result<ModelSpec> {
    for (n, v) in [
        ("d1", d1),
        ("d2", d2),
        ("r1", r1),
        ("r2", r2),
        ("alpha", alpha),
        ("delta", delta),
    ] {
        positive(n, v)?;
    }
    if r1 <= alpha {
        return Err(Error::AssumptionViolation(format!(
            "r1 > alpha fails: r1 = {r1}, alpha = {alpha}"
        )));
    }
    if d1 < d2 {
        return Err(Error::AssumptionViolation(format!(
            "d1 >= d2 fails: d1 = {d1}, d2 = {d2}"
        )));
    }
    let delta_min = r1 * r2 / (r1 + r2 - alpha);
    if delta < delta_min {
        return Err(Error::AssumptionViolation(format!(
            "delta >= r1 r2 / (r1 + r2 - alpha) fails: delta = {delta} < {delta_min}"
        )));
    }
    let k1 = population_k1(r1, alpha, delta)?;
    let k = vec![k1, ricker(k1)];
    let cooperative = k1 <= 1.0;
    let upper = if cooperative {
        k.clone()
    } else {
        let (kp, _, _) = population_envelope_roots(r1, alpha, delta, k1)?;
        vec![kp, (-1f64).exp()]
    };
    let jac = DMatrix::from_row_slice(2, 2, &[r1 - alpha, 0.0, r2, -r2]);
    ModelSpec::assemble(
        "population",
        ModelKind::Population {
            d1,
            d2,
            r1,
            r2,
            alpha,
            delta,
            k1,
        },
        Role::Exact,
        vec![d1, d2],
        population_reaction(r1, r2, alpha, delta, Arc::new(ricker)),
        jac,
        k,
        upper,
        cooperative,
    )
}

/// Returns `(K1+, h0, K1-)` for the population envelopes.
fn population_envelope_roots(r1: f64, alpha: f64, delta: f64, k1: f64) -> Result<(f64, f64, f64)> {
    let h_plus = |w: f64| if w <= 1.0 { ricker(w) } else { (-1f64).exp() };
    let phi_plus = |x: f64| delta * x + alpha - r1 - r1 * h_plus(x);
    let s = scan_root(|s| phi_plus(k1 + s), 1e-8, 1e6, ROOT_TOL)?;
    let kp = k1 + s;
    let target = ricker(kp);
    let h0 = scan_root(|h| ricker(h) - target, 1e-8, 1.0, ROOT_TOL)?;
    let h_minus = |w: f64| if w <= h0 { ricker(w) } else { target };
    let km = bisect(
        |x| delta * x + alpha - r1 - r1 * h_minus(x),
        1e-8,
        k1,
        ROOT_TOL,
    )?;
    Ok((kp, h0, km))
}

/// Cooperative sub- and super-systems `f- <= f <= f+` with equilibria `K-` and `K+`.
#[derive(Debug, Clone)]
pub struct EnvelopePair {
    pub lower: ModelSpec,
    pub upper: ModelSpec,
    /// Envelope breakpoints: `u_min` for the epidemic model, `h0` for the population model.
    pub breakpoint: f64,
}

impl EnvelopePair {
    pub fn k_minus(&self) -> &[f64] {
        &self.lower.k
    }

    pub fn k_plus(&self) -> &[f64] {
        &self.upper.k
    }

    pub fn f_minus(&self, u: &[f64]) -> Vec<f64> {
        self.lower.f(u)
    }

    pub fn f_plus(&self, u: &[f64]) -> Vec<f64> {
        self.upper.f(u)
    }

    /// The degenerate pair `f- = f = f+` of a cooperative model.
    pub fn trivial(model: &ModelSpec) -> Self {
        EnvelopePair {
            lower: model.clone(),
            upper: model.clone(),
            breakpoint: f64::NAN,
        }
    }
}

pub fn build_envelopes_epidemic(model: &ModelSpec) -> Result<EnvelopePair> {
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
    let um = match u_max {
        Some(um) if k > um => um,
        _ => {
            return Err(Error::EnvelopeNotNeeded(format!(
                "{} is cooperative on [0, K] (k = {k})",
                model.name
            )))
        }
    };
    let gf = move |u: f64| g.eval(omega, nu, u);
    let g_max = gf(um);
    let k1_plus = gamma / beta * g_max;
    let target = gf(k1_plus);
    let u_min = scan_root(|u| gf(u) - target, 1e-8, um, ROOT_TOL)?;
    let g_min = gf(u_min);
    let g_plus = move |u: f64| if u <= um { gf(u) } else { g_max };
    let g_minus = move |u: f64| if u <= u_min { gf(u) } else { g_min };
    let k_plus = vec![k1_plus, g_max / beta];
    let k_minus = vec![gamma / beta * g_min, g_min / beta];
    let lower = ModelSpec::assemble(
        &format!("{}-lower", model.name),
        model.kind.clone(),
        Role::Lower,
        model.diffusion.clone(),
        epidemic_reaction(gamma, beta, Arc::new(g_minus)),
        model.jacobian0.clone(),
        k_minus,
        k_plus.clone(),
        true,
    )?;
    let upper = ModelSpec::assemble(
        &format!("{}-upper", model.name),
        model.kind.clone(),
        Role::Upper,
        model.diffusion.clone(),
        epidemic_reaction(gamma, beta, Arc::new(g_plus)),
        model.jacobian0.clone(),
        k_plus.clone(),
        k_plus,
        true,
    )?;
    Ok(EnvelopePair {
        lower,
        upper,
        breakpoint: u_min,
    })
}

pub fn build_envelopes_population(model: &ModelSpec) -> Result<EnvelopePair> {
    let ModelKind::Population {
        r1,
        r2,
        alpha,
        delta,
        k1,
        ..
    } = model.kind.clone()
    else {
        return Err(Error::Domain(format!("{} is not a population model", model.name)));
    };
    if k1 <= 1.0 {
        return Err(Error::EnvelopeNotNeeded(format!(
            "population model is cooperative on [0, K] (K1 = {k1})"
        )));
    }
    let (kp, h0, km) = population_envelope_roots(r1, alpha, delta, k1)?;
    let frozen = ricker(kp);
    let h_plus = |w: f64| if w <= 1.0 { ricker(w) } else { (-1f64).exp() };
    let h_minus = move |w: f64| if w <= h0 { ricker(w) } else { frozen };
    let k_plus = vec![kp, h_plus(kp)];
    let k_minus = vec![km, h_minus(km)];
    let lower = ModelSpec::assemble(
        "population-lower",
        model.kind.clone(),
        Role::Lower,
        model.diffusion.clone(),
        population_reaction(r1, r2, alpha, delta, Arc::new(h_minus)),
        model.jacobian0.clone(),
        k_minus,
        k_plus.clone(),
        true,
    )?;
    let upper = ModelSpec::assemble(
        "population-upper",
        model.kind.clone(),
        Role::Upper,
        model.diffusion.clone(),
        population_reaction(r1, r2, alpha, delta, Arc::new(h_plus)),
        model.jacobian0.clone(),
        k_plus.clone(),
        k_plus,
        true,
    )?;
    Ok(EnvelopePair {
        lower,
        upper,
        breakpoint: h0,
    })
}

/// Envelopes for any builtin; cooperative models get the trivial pair.
pub fn build_envelopes(model: &ModelSpec) -> Result<EnvelopePair> {
    if model.cooperative {
        return Ok(EnvelopePair::trivial(model));
    }
    match model.kind {
        ModelKind::Epidemic { .. } => build_envelopes_epidemic(model),
        ModelKind::Population { .. } => build_envelopes_population(model),
        _ => Err(Error::AssumptionViolation(format!(
            "{} is non-cooperative and has no envelope construction",
            model.name
        ))),
    }
}

/// The linear system `u_t = D u_xx + A u`. It has no positive equilibrium, so
/// `k` is set to the box corner and only the box is meaningful.
pub fn make_linear(diffusion: Vec<f64>, a: DMatrix<f64>, box_upper: Vec<f64>) -> Result<ModelSpec> {
    let m = diffusion.len();
    if a.nrows() != m || a.ncols() != m || box_upper.len() != m {
        return Err(Error::Domain("linear model dimension mismatch".into()));
    }
    let mat = a.clone();
    let reaction: ReactionFn = Arc::new(move |u: &[f64], out: &mut [f64]| {
        for i in 0..u.len() {
            out[i] = (0..u.len()).map(|j| mat[(i, j)] * u[j]).sum();
        }
    });
    let lipschitz = (0..m).fold(0.0f64, |acc, i| acc.max(a[(i, i)].abs())) * LIPSCHITZ_SAFETY;
    let cooperative = (0..m).all(|i| (0..m).all(|j| i == j || a[(i, j)] >= 0.0));
    Ok(ModelSpec {
        name: "linear".into(),
        kind: ModelKind::Custom {
            name: "linear".into(),
        },
        role: Role::Exact,
        diffusion,
        reaction,
        jacobian0: a,
        k: box_upper.clone(),
        state_box_upper: box_upper,
        lipschitz: lipschitz.max(1e-3),
        cooperative,
    })
}

/// Named models compiled into the binary for `kind = "custom"` configs.
pub fn custom_registry(name: &str) -> Option<ModelSpec> {
    match name {
        "fisher" | "logistic" | "kpp" => make_fisher(1.0, 1.0).ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inf_norm(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    #[test]
    fn buffered_equilibrium_and_jacobian() {
        let m = make_buffered(1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(m.k[0], 1.0);
        assert_relative_eq!(m.k[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.jacobian0, DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.5, -1.0]));
        assert_eq!(m.f(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert!(inf_norm(&m.f(&m.k)) <= 1e-12);
        assert!(m.cooperative);
    }

    #[test]
    fn buffered_rejects_nonpositive() {
        assert!(matches!(
            make_buffered(1.0, 0.0, 1.0, 0.5, 1.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn epidemic_g1_equilibrium() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        assert_relative_eq!(m.k[0], 1.0);
        assert_relative_eq!(m.k[1], 1.0);
        assert!(m.cooperative);
        assert_eq!(m.f(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn epidemic_g2_noncooperative() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 1.0).unwrap();
        assert_relative_eq!(m.k[0], 2f64.sqrt(), epsilon = 1e-15);
        let ModelKind::Epidemic { u_max, .. } = m.kind else {
            panic!()
        };
        assert_eq!(u_max, Some(1.0));
        assert!(!m.cooperative);
        assert_eq!(m.state_box_upper, vec![1.5, 1.5]);
    }

    #[test]
    fn epidemic_requires_positive_equilibrium() {
        assert!(matches!(
            make_epidemic(1.0, 1.0, 1.0, 2.0, GKind::G1, 2.0, 1.0),
            Err(Error::NoPositiveEquilibrium(_))
        ));
    }

    #[test]
    fn epidemic_g2_cooperative_when_small_contact() {
        // omega * gamma <= 2 beta gives k <= u_max
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 1.8, 1.0).unwrap();
        assert!(m.cooperative);
    }

    #[test]
    fn population_roots_match_bisection_oracle() {
        // independent oracle: plain bisection of the scalar equilibrium equation
        let oracle = |r1: f64, alpha: f64, delta: f64| {
            let g = |x: f64| r1 * x * (-x).exp() - (delta * x + alpha - r1);
            let (mut a, mut b) = (1e-9, 20.0);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if g(c) > 0.0 {
                    a = c
                } else {
                    b = c
                }
            }
            0.5 * (a + b)
        };
        let coop = make_population(1.0, 1.0, 2.0, 1.0, 1.8, 2.0).unwrap();
        assert_relative_eq!(coop.k[0], oracle(2.0, 1.8, 2.0), epsilon = 1e-10);
        assert_relative_eq!(coop.k[0], 0.3437598198, epsilon = 1e-9);
        assert!(coop.cooperative);
        let nc = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(nc.k[0], oracle(2.0, 1.0, 1.0), epsilon = 1e-10);
        assert_relative_eq!(nc.k[0], 1.6369990313, epsilon = 1e-9);
        assert!(!nc.cooperative);
        for m in [&coop, &nc] {
            assert!(inf_norm(&m.f(&m.k)) <= 1e-12);
            assert_eq!(m.f(&[0.0, 0.0]), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn population_condition_violations_are_named() {
        let e = make_population(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("r1 > alpha"));
        let e = make_population(1.0, 2.0, 2.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("d1 >= d2"));
        let e = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 0.5).unwrap_err();
        assert!(e.to_string().contains("delta"));
    }

    #[test]
    fn epidemic_envelopes() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 1.0).unwrap();
        let env = build_envelopes_epidemic(&m).unwrap();
        assert_eq!(env.k_plus(), &[1.5, 1.5]);
        // g2(u) = g2(1/u) for nu = 1, so u_min = 1 / 1.5 exactly
        assert_relative_eq!(env.breakpoint, 2.0 / 3.0, epsilon = 1e-11);
        // quadratic oracle 1.3846 u^2 - 3 u + 1.3846 = 0
        let a: f64 = 18.0 / 13.0;
        let q = (3.0 - (9.0 - 4.0 * a * a).sqrt()) / (2.0 * a);
        assert_relative_eq!(env.breakpoint, q, epsilon = 1e-11);
        assert_relative_eq!(env.k_minus()[0], 18.0 / 13.0, epsilon = 1e-11);
        assert!(inf_norm(&env.f_plus(env.k_plus())) <= 1e-12);
        assert!(inf_norm(&env.f_minus(env.k_minus())) <= 1e-10);
        let coop = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        assert!(matches!(
            build_envelopes_epidemic(&coop),
            Err(Error::EnvelopeNotNeeded(_))
        ));
    }

    #[test]
    fn population_envelopes() {
        let m = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let env = build_envelopes_population(&m).unwrap();
        let kp = 1.0 + 2.0 * (-1f64).exp();
        assert_relative_eq!(env.k_plus()[0], kp, epsilon = 1e-11);
        // residual of the K1+ equation
        let res = kp + 1.0 - 2.0 - 2.0 * (-1f64).exp();
        assert!(res.abs() < 1e-12);
        assert_relative_eq!(env.breakpoint, 0.5089928410, epsilon = 1e-9);
        assert_relative_eq!(env.k_minus()[0], 1.6119118836, epsilon = 1e-9);
        for i in 0..2 {
            assert!(env.k_minus()[i] <= m.k[i] && m.k[i] <= env.k_plus()[i]);
        }
        assert!(inf_norm(&env.f_plus(env.k_plus())) <= 1e-12);
        assert!(inf_norm(&env.f_minus(env.k_minus())) <= 1e-12);
        let coop = make_population(1.0, 1.0, 2.0, 1.0, 1.8, 2.0).unwrap();
        assert!(build_envelopes_population(&coop).is_err());
    }

    #[test]
    fn jacobian0_matches_finite_differences() {
        let models = [
            make_buffered(1.0, 1.0, 1.0, 0.5, 1.0).unwrap(),
            make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap(),
            make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 1.0).unwrap(),
            make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap(),
        ];
        for m in &models {
            let fd = m.jacobian_fd(&vec![0.0; m.m()]);
            let scale = m.jacobian0.amax().max(1.0);
            assert!((fd - &m.jacobian0).amax() / scale < 1e-6, "{}", m.name);
        }
    }

    #[test]
    fn lipschitz_dominates_random_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let models = [
            make_buffered(1.0, 1.0, 1.0, 0.5, 1.0).unwrap(),
            make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G2, 3.0, 1.0).unwrap(),
            make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap(),
        ];
        for m in &models {
            for _ in 0..2000 {
                let u: Vec<f64> = m
                    .state_box_upper
                    .iter()
                    .map(|&b| rng.random::<f64>() * b)
                    .collect();
                let j = m.jacobian_fd(&u);
                for i in 0..m.m() {
                    assert!(j[(i, i)].abs() <= m.lipschitz, "{}", m.name);
                }
            }
        }
    }

    #[test]
    fn registry_lookup() {
        assert!(custom_registry("fisher").is_some());
        assert!(custom_registry("nope").is_none());
    }
}
