//! Entire solutions as the increasing-in-n limit of initial-value problems
//! started at `t = -n` from the max of shifted fronts and the spatially
//! independent solution, with sandwich, qualitative and difference-bound
//! verification.

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::checker::{check_jacobian_bound, AssumptionReport};
use crate::error::{Error, Result};
use crate::front::{compute_front, normalize_phase, FrontProfile};
use crate::model::{EnvelopePair, ModelSpec};
use crate::pde::{solve_ivp, Boundary, Field, Grid, Stepper, Trajectory};
use crate::sis::{compute_gamma, Profile};
use crate::spectral::SpectralData;

/// Speeds must exceed `MIN_SPEED_RATIO * c*`.
pub const MIN_SPEED_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    pub c: f64,
    #[serde(default)]
    pub h: f64,
    /// Direction, `+1` or `-1`.
    #[serde(default = "default_nu")]
    pub nu: i8,
}

fn default_nu() -> i8 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cooperative,
    Noncooperative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntireConfig {
    pub waves: Vec<Wave>,
    /// `l + 1` flags; the last one switches the spatially independent term.
    pub chi: Vec<u8>,
    #[serde(default)]
    pub h_last: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_schedule")]
    pub n_schedule: Vec<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_snapshot_step")]
    pub snapshot_step: f64,
    /// Sandwich tolerance (discretization level).
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Ordering tolerance (scheme level).
    #[serde(default = "default_tol_order")]
    pub tol_order: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

fn default_mode() -> Mode {
    Mode::Cooperative
}
fn default_schedule() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0]
}
fn default_t_end() -> f64 {
    15.0
}
fn default_dx() -> f64 {
    0.05
}
fn default_dt() -> f64 {
    1e-3
}
fn default_snapshot_step() -> f64 {
    0.5
}
fn default_tol() -> f64 {
    1e-3
}
fn default_tol_order() -> f64 {
    1e-8
}

impl EntireConfig {
    pub fn new(waves: Vec<Wave>, chi: Vec<u8>, h_last: f64, mode: Mode) -> Self {
        EntireConfig {
            waves,
            chi,
            h_last,
            mode,
            n_schedule: default_schedule(),
            t_end: default_t_end(),
            dx: default_dx(),
            dt: default_dt(),
            snapshot_step: default_snapshot_step(),
            tol: default_tol(),
            tol_order: default_tol_order(),
            half_width: None,
            window: None,
        }
    }

    pub fn l(&self) -> usize {
        self.waves.len()
    }

    pub fn sis_active(&self) -> bool {
        self.chi.last() == Some(&1)
    }

    pub fn active_waves(&self) -> impl Iterator<Item = (usize, &Wave)> {
        self.waves.iter().enumerate().filter(|(i, _)| self.chi[*i] == 1)
    }

    pub fn n_min(&self) -> f64 {
        self.n_schedule[0]
    }

    pub fn n_max(&self) -> f64 {
        *self.n_schedule.last().expect("validated schedule")
    }

    /// Over all waves, active or not, so that toggling `chi` keeps the grid.
    fn c_max(&self) -> f64 {
        self.waves.iter().map(|w| w.c).fold(0.0, f64::max)
    }

    /// `X = c_max (n_max + t_end) + 40` unless overridden.
    pub fn domain_half_width(&self) -> f64 {
        self.half_width
            .unwrap_or_else(|| self.c_max() * (self.n_max() + self.t_end) + 40.0)
    }

    /// Interior window: the domain minus a buffer `c_max t_end + 6 sqrt(d_max t_end)`.
    pub fn interior_window(&self, d_max: f64) -> (f64, f64) {
        if let Some(w) = self.window {
            return w;
        }
        let x = self.domain_half_width();
        let buffer = self.c_max() * self.t_end + 6.0 * (d_max * self.t_end).sqrt();
        (-x + buffer, x - buffer)
    }

    /// Structural checks that do not need the model.
    pub fn validate_shape(&self) -> Result<()> {
        let cfg = |s: String| Err(Error::Config(s));
        if self.chi.len() != self.waves.len() + 1 {
            return cfg(format!(
                "chi has {} flags, expected l + 1 = {}",
                self.chi.len(),
                self.waves.len() + 1
            ));
        }
        if self.chi.iter().any(|&c| c > 1) {
            return cfg("chi flags must be 0 or 1".into());
        }
        if self.chi.iter().all(|&c| c == 0) {
            return cfg("inactive configuration: all chi are 0".into());
        }
        if let Some(w) = self.waves.iter().find(|w| w.nu != 1 && w.nu != -1) {
            return cfg(format!("wave direction must be +1 or -1, got {}", w.nu));
        }
        if self.n_schedule.is_empty()
            || self.n_schedule.iter().any(|&n| !(n > 0.0))
            || self.n_schedule.windows(2).any(|p| p[1] <= p[0])
        {
            return cfg(format!(
                "n_schedule must be a nonempty increasing list of positive numbers, got {:?}",
                self.n_schedule
            ));
        }
        for (name, v) in [
            ("t_end", self.t_end),
            ("dx", self.dx),
            ("dt", self.dt),
            ("snapshot_step", self.snapshot_step),
            ("tol", self.tol),
            ("tol_order", self.tol_order),
        ] {
            if !(v.is_finite() && (v > 0.0 || name == "t_end")) {
                return cfg(format!("{name} = {v} is not admissible"));
            }
        }
        if self.t_end <= -self.n_min() {
            return cfg("t_end must lie after -n_min".into());
        }
        Ok(())
    }

    /// Full precondition check against a model and its spectral data.
    pub fn validate(&self, model: &ModelSpec, spectral: &SpectralData, allow_single: bool) -> Result<()> {
        self.validate_shape()?;
        let active = self.chi.iter().filter(|&&c| c == 1).count();
        match self.mode {
            Mode::Cooperative => {
                if !model.cooperative {
                    return Err(Error::HypothesisViolation(format!(
                        "{} is not cooperative; use mode = \"noncooperative\"",
                        model.name
                    )));
                }
                if active < 2 && !allow_single {
                    return Err(Error::Config(format!(
                        "cooperative construction needs at least two active terms, got {active}"
                    )));
                }
            }
            Mode::Noncooperative => {}
        }
        for (_, w) in self.active_waves() {
            if w.c < MIN_SPEED_RATIO * spectral.c_star {
                return Err(Error::SpeedBelowCritical {
                    c: w.c,
                    c_star: spectral.c_star,
                });
            }
        }
        Ok(())
    }

    /// Same configuration with one `h` changed; `index == l` targets `h_{l+1}`.
    pub fn with_h(&self, index: usize, h: f64) -> Self {
        let mut out = self.clone();
        if index == self.l() {
            out.h_last = h;
        } else {
            out.waves[index].h = h;
        }
        out
    }

    pub fn h(&self, index: usize) -> f64 {
        if index == self.l() {
            self.h_last
        } else {
            self.waves[index].h
        }
    }
}

/// Fronts (one per wave, `None` when inactive) and the spatially independent
/// solution of the system generating the lower bound.
#[derive(Debug, Clone)]
pub struct EntireProfiles {
    pub fronts: Vec<Option<FrontProfile>>,
    pub gamma: Option<Profile>,
}

impl EntireProfiles {
    /// Computes and phase-normalizes every active profile of `lower_model`
    /// (`f` itself in cooperative mode, `f-` otherwise).
    pub fn compute(
        config: &EntireConfig,
        lower_model: &ModelSpec,
        spectral: &SpectralData,
        front_tol: f64,
        sis_tol: f64,
    ) -> Result<Self> {
        config.validate_shape()?;
        let mut fronts = Vec::with_capacity(config.l());
        for (i, w) in config.waves.iter().enumerate() {
            if config.chi[i] == 1 {
                // identical speeds share one profile
                let reuse = config.waves[..i]
                    .iter()
                    .zip(&fronts)
                    .find(|(v, f): &(&Wave, &Option<FrontProfile>)| v.c == w.c && f.is_some())
                    .and_then(|(_, f)| f.clone());
                let front = match reuse {
                    Some(f) => f,
                    None => normalize_phase(&compute_front(lower_model, spectral, w.c, front_tol)?)?,
                };
                fronts.push(Some(front));
            } else {
                fronts.push(None);
            }
        }
        let gamma = if config.sis_active() {
            Some(compute_gamma(lower_model, spectral, sis_tol)?)
        } else {
            None
        };
        Ok(EntireProfiles { fronts, gamma })
    }

    fn check(&self, config: &EntireConfig) -> Result<()> {
        for (i, f) in self.fronts.iter().enumerate() {
            if config.chi.get(i) == Some(&1) {
                match f {
                    Some(f) if (f.c - config.waves[i].c).abs() <= 1e-12 * f.c.abs() => {}
                    _ => return Err(Error::Config(format!("missing front profile for wave {}", i + 1))),
                }
            }
        }
        if config.sis_active() && self.gamma.is_none() {
            return Err(Error::Config("missing spatially independent profile".into()));
        }
        Ok(())
    }
}

/// `u(x,t) = max{ max_i chi_i Phi_i(x nu_i + c_i t + h_i), chi_{l+1} Gamma(t + h_{l+1}) }`.
#[derive(Debug, Clone)]
pub struct LowerSolution {
    waves: Vec<(Wave, FrontProfile)>,
    gamma: Option<(f64, Profile)>,
    m: usize,
}

impl LowerSolution {
    pub fn new(config: &EntireConfig, profiles: &EntireProfiles) -> Result<Self> {
        profiles.check(config)?;
        let waves: Vec<(Wave, FrontProfile)> = config
            .active_waves()
            .map(|(i, w)| (*w, profiles.fronts[i].clone().expect("checked")))
            .collect();
        let gamma = profiles
            .gamma
            .clone()
            .filter(|_| config.sis_active())
            .map(|g| (config.h_last, g));
        let m = waves
            .first()
            .map(|(_, f)| f.profile.m())
            .or_else(|| gamma.as_ref().map(|(_, g)| g.m()))
            .expect("at least one active term");
        Ok(LowerSolution { waves, gamma, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eval_into(&self, x: f64, t: f64, out: &mut [f64]) {
        let mut buf = vec![0.0; self.m];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (w, f) in &self.waves {
            f.eval_into(x * w.nu as f64 + w.c * t + w.h, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o = o.max(*b);
            }
        }
        if let Some((h, g)) = &self.gamma {
            g.eval_into(t + h, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o = o.max(*b);
            }
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.eval_into(x, t, &mut out);
        out
    }
}

/// Exponential upper bound
/// `sum_i chi_i v(lambda1(c_i)) e^{lambda1(c_i)(x nu_i + c_i t + h_i)} + chi_{l+1} v* e^{s (t + h_{l+1})}`
/// with `s = s(f'(0))`.
#[derive(Debug, Clone)]
pub struct PiBound {
    terms: Vec<(f64, f64, f64, f64, Vec<f64>)>,
    sis: Option<(f64, f64, Vec<f64>)>,
    m: usize,
}

impl PiBound {
    pub fn new(config: &EntireConfig, spectral: &SpectralData) -> Result<Self> {
        let mut terms = Vec::new();
        for (_, w) in config.active_waves() {
            let l1 = spectral.lambda1(w.c)?;
            terms.push((l1, w.c, w.h, w.nu as f64, spectral.v(l1)));
        }
        let sis = config
            .sis_active()
            .then(|| (spectral.growth_rate, config.h_last, spectral.v_star.clone()));
        Ok(PiBound {
            terms,
            sis,
            m: spectral.v_star.len(),
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (l1, c, h, nu, v) in &self.terms {
            let e = (l1 * (x * nu + c * t + h)).exp();
            for (o, vi) in out.iter_mut().zip(v) {
                *o += vi * e;
            }
        }
        if let Some((s, h, v)) = &self.sis {
            let e = (s * (t + h)).exp();
            for (o, vi) in out.iter_mut().zip(v) {
                *o += vi * e;
            }
        }
        out
    }
}

/// `Pi(x, t)` for a configuration.
pub fn pi_bound(config: &EntireConfig, spectral: &SpectralData, x: f64, t: f64) -> Result<Vec<f64>> {
    Ok(PiBound::new(config, spectral)?.eval(x, t))
}

/// Initial data `phi^n` on `grid`, i.e. the lower solution at `t = -n`.
pub fn initial_data(config: &EntireConfig, profiles: &EntireProfiles, grid: &Grid, n: f64) -> Result<Field> {
    config.validate_shape()?;
    let lower = LowerSolution::new(config, profiles)?;
    Ok(Field::from_fn(grid, lower.m(), -n, |x, out| lower.eval_into(x, -n, out)))
}

/// Extremal value over the verification window with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub value: f64,
    pub x: f64,
    pub t: f64,
    pub component: usize,
    pub n: f64,
}

impl Margin {
    fn start() -> Self {
        Margin {
            value: f64::INFINITY,
            x: f64::NAN,
            t: f64::NAN,
            component: 0,
            n: f64::NAN,
        }
    }

    fn offer(&mut self, value: f64, x: f64, t: f64, component: usize, n: f64) {
        if value < self.value {
            *self = Margin {
                value,
                x,
                t,
                component,
                n,
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    pub x: f64,
    pub t_range: (f64, f64),
    pub expected: f64,
    /// One log-linear slope per component.
    pub fitted: Vec<f64>,
    pub worst_relative_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub mode: Mode,
    pub window: (f64, f64),
    pub tol: f64,
    pub tol_order: f64,
    /// `min (U - u)` over window, snapshots, components and every n.
    pub lower_margin: Margin,
    /// `min (min{K, Pi} - U)`; `K+` in non-cooperative mode.
    pub upper_margin: Margin,
    /// `(n, sup_window |U^n - U^{previous n}|)` over shared snapshots.
    pub n_increments: Vec<(f64, f64)>,
    pub increments_decreasing: bool,
    /// Largest `U^{n_k} - U^{n_{k+1}}` over all nodes of shared snapshots.
    pub monotone_in_n_excess: f64,
    pub monotone_in_n_ok: bool,
    /// Smallest forward time difference of the final run on the window,
    /// over nodes below `K (1 - 1e-12)`.
    pub min_time_difference: Margin,
    pub monotone_in_t_ok: bool,
    pub decay_diagnostics: Option<DecayDiagnostics>,
    /// `max |U^n(-n) - phi^n|`: gap between the propagated lower function and the exact one.
    pub discrete_lower_deviation: f64,
}

impl SandwichReport {
    pub fn sandwich_ok(&self) -> bool {
        self.lower_margin.value >= -self.tol && self.upper_margin.value >= -self.tol
    }

    /// Hard assertions: the sandwich, and monotonicity in n for cooperative runs.
    pub fn passed(&self) -> bool {
        self.sandwich_ok() && (self.mode == Mode::Noncooperative || self.monotone_in_n_ok)
    }

    /// Converts a failed hard assertion into an error.
    pub fn enforce(&self) -> Result<()> {
        for (what, m) in [("lower", &self.lower_margin), ("upper", &self.upper_margin)] {
            if m.value < -self.tol {
                return Err(Error::ConstructionFailure {
                    what: format!("{what} sandwich (n = {}, component {})", m.n, m.component),
                    margin: m.value,
                    x: m.x,
                    t: m.t,
                });
            }
        }
        if self.mode == Mode::Cooperative && !self.monotone_in_n_ok {
            return Err(Error::SchemeMonotonicity {
                node: 0,
                component: 0,
                time: f64::NAN,
                excess: self.monotone_in_n_excess,
            });
        }
        Ok(())
    }
}

/// Final-n trajectory together with its certificate.
#[derive(Debug, Clone)]
pub struct EntireRun {
    pub n: f64,
    pub trajectory: Trajectory,
    pub window: (f64, f64),
    /// Upper equilibrium of the bound (`K` or `K+`).
    pub k_upper: Vec<f64>,
    /// Equilibrium of the model.
    pub k: Vec<f64>,
    /// Equilibrium of the lower system (`K` or `K-`).
    pub k_lower: Vec<f64>,
    pub report: SandwichReport,
}

impl EntireRun {
    /// Node range inside the window.
    pub fn window_nodes(&self) -> std::ops::Range<usize> {
        window_nodes(&self.trajectory, self.window)
    }
}

fn window_nodes(tr: &Trajectory, window: (f64, f64)) -> std::ops::Range<usize> {
    let n = tr.snapshots.first().map_or(0, |s| s.values.nrows());
    let lo = ((window.0 - tr.x0) / tr.dx).ceil().max(0.0) as usize;
    let hi = (((window.1 - tr.x0) / tr.dx).floor() as isize + 1).clamp(0, n as isize) as usize;
    lo.min(hi)..hi
}

fn snapshot_times(config: &EntireConfig, n: f64) -> Vec<f64> {
    let step = config.snapshot_step;
    let anchor = -config.n_min();
    let k_lo = ((-n - anchor) / step - 1e-9).ceil() as i64;
    let k_hi = ((config.t_end - anchor) / step + 1e-9).floor() as i64;
    let mut out = vec![-n];
    out.extend((k_lo..=k_hi).map(|k| anchor + k as f64 * step));
    out.push(config.t_end);
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// The construction's model roles.
struct Systems<'a> {
    model: &'a ModelSpec,
    lower: &'a ModelSpec,
    k_upper: Vec<f64>,
}

fn systems<'a>(
    config: &EntireConfig,
    model: &'a ModelSpec,
    envelopes: Option<&'a EnvelopePair>,
) -> Result<Systems<'a>> {
    match config.mode {
        Mode::Cooperative => Ok(Systems {
            model,
            lower: model,
            k_upper: model.k.clone(),
        }),
        Mode::Noncooperative => {
            let env = envelopes.ok_or_else(|| {
                Error::Config("non-cooperative construction needs envelope systems".into())
            })?;
            Ok(Systems {
                model,
                lower: &env.lower,
                k_upper: env.k_plus().to_vec(),
            })
        }
    }
}

/// Propagates each active term of the lower solution with the scheme of the
/// lower system from `-n_max`, returning `max_i w_i(-n)` for every scheduled n.
/// Since the scheme is order-preserving, `max_i w_i` is a discrete
/// subsolution, which makes the runs exactly nondecreasing in n.
fn discrete_initial_data(
    config: &EntireConfig,
    lower: &LowerSolution,
    lower_model: &ModelSpec,
    grid: &Grid,
) -> Result<Vec<Field>> {
    let m = lower.m();
    let n_max = config.n_max();
    let times: Vec<f64> = config.n_schedule.iter().map(|n| -n).collect();
    let mut out: Vec<Field> = times
        .iter()
        .map(|&t| Field {
            values: Array2::zeros((grid.n_nodes, m)),
            time: t,
        })
        .collect();
    let merge = |out: &mut Vec<Field>, tr: &Trajectory| {
        for f in out.iter_mut() {
            let s = tr.at(f.time).expect("snapshot at every scheduled start");
            f.values.zip_mut_with(&s.values, |a, b| *a = a.max(*b));
        }
    };
    for (w, front) in &lower.waves {
        let single = LowerSolution {
            waves: vec![(*w, front.clone())],
            gamma: None,
            m,
        };
        let init = Field::from_fn(grid, m, -n_max, |x, o| single.eval_into(x, -n_max, o));
        let g = grid_with_boundaries(grid, Arc::new(single))?;
        let tr = solve_ivp(&init, lower_model, &g, -config.n_min(), config.dt, &times)?;
        merge(&mut out, &tr);
    }
    if let Some((h, gamma)) = &lower.gamma {
        // spatially constant: the scheme reduces to explicit Euler
        let mut u = gamma.eval(-n_max + h);
        let mut fu = vec![0.0; m];
        let mut t = -n_max;
        let mut k = 0usize;
        for (idx, &target) in times.iter().enumerate().rev() {
            let steps = crate::pde::steps_between(-n_max, target, config.dt)?;
            while k < steps {
                lower_model.eval(&u, &mut fu);
                for (a, b) in u.iter_mut().zip(&fu) {
                    *a += config.dt * b;
                }
                k += 1;
                t = -n_max + k as f64 * config.dt;
            }
            let _ = t;
            for mut row in out[idx].values.rows_mut() {
                for (a, b) in row.iter_mut().zip(&u) {
                    *a = a.max(*b);
                }
            }
        }
    }
    Ok(out)
}

fn grid_with_boundaries(grid: &Grid, lower: Arc<LowerSolution>) -> Result<Grid> {
    let (xl, xr) = (grid.x0, grid.x_end());
    let l = lower.clone();
    let r = lower;
    Grid::new(
        grid.x0,
        grid.dx,
        grid.n_nodes,
        Boundary::Func(Arc::new(move |t, o| l.eval_into(xl, t, o))),
        Boundary::Func(Arc::new(move |t, o| r.eval_into(xr, t, o))),
    )
}

/// Runs the n-schedule and returns the final run with its report; hard
/// assertion failures are returned as errors.
pub fn construct(
    config: &EntireConfig,
    model: &ModelSpec,
    envelopes: Option<&EnvelopePair>,
    profiles: &EntireProfiles,
    spectral: &SpectralData,
) -> Result<EntireRun> {
    let run = construct_unchecked(config, model, envelopes, profiles, spectral)?;
    run.report.enforce()?;
    Ok(run)
}

/// As [`construct`] but returns the report without enforcing it.
pub fn construct_unchecked(
    config: &EntireConfig,
    model: &ModelSpec,
    envelopes: Option<&EnvelopePair>,
    profiles: &EntireProfiles,
    spectral: &SpectralData,
) -> Result<EntireRun> {
    run_schedule(config, model, envelopes, profiles, spectral, false)
}

fn run_schedule(
    config: &EntireConfig,
    model: &ModelSpec,
    envelopes: Option<&EnvelopePair>,
    profiles: &EntireProfiles,
    spectral: &SpectralData,
    allow_single: bool,
) -> Result<EntireRun> {
    config.validate(model, spectral, allow_single)?;
    let sys = systems(config, model, envelopes)?;
    let lower = Arc::new(LowerSolution::new(config, profiles)?);
    let pi = PiBound::new(config, spectral)?;
    let m = model.m();
    let d_max = model.diffusion.iter().copied().fold(0.0, f64::max);
    let x_half = config.domain_half_width();
    let window = config.interior_window(d_max);
    let base = Grid::symmetric(
        x_half,
        config.dx,
        Boundary::Constant(vec![0.0; m]),
        Boundary::Constant(vec![0.0; m]),
    )?;
    let grid = grid_with_boundaries(&base, lower.clone())?;
    // reject bad timesteps before the long runs
    Stepper::new(sys.model, &grid, config.dt)?;
    Stepper::new(sys.lower, &grid, config.dt)?;

    // Propagated starts only matter for the exact monotone-in-n property of
    // cooperative runs; non-cooperative runs start from the exact lower solution.
    let inits = match config.mode {
        Mode::Cooperative => discrete_initial_data(config, &lower, sys.lower, &grid)?,
        Mode::Noncooperative => config
            .n_schedule
            .iter()
            .map(|&n| Field::from_fn(&grid, m, -n, |x, o| lower.eval_into(x, -n, o)))
            .collect(),
    };
    let mut deviation = 0.0f64;
    let mut lower_margin = Margin::start();
    let mut upper_margin = Margin::start();
    let mut increments = Vec::new();
    let mut mono_excess = f64::NEG_INFINITY;
    let mut prev: Option<(f64, Trajectory)> = None;
    let mut lo = vec![0.0; m];
    for (init, &n) in inits.iter().zip(&config.n_schedule) {
        let exact = Field::from_fn(&grid, m, -n, |x, o| lower.eval_into(x, -n, o));
        let dev = init
            .values
            .iter()
            .zip(exact.values.iter())
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        deviation = deviation.max(dev);
        let tr = solve_ivp(init, sys.model, &grid, config.t_end, config.dt, &snapshot_times(config, n))?;
        log::info!("entire: run n = {n} done ({} snapshots)", tr.snapshots.len());
        let nodes = window_nodes(&tr, window);
        for s in &tr.snapshots {
            for j in nodes.clone() {
                let x = grid.x(j);
                lower.eval_into(x, s.t, &mut lo);
                let up = pi.eval(x, s.t);
                for c in 0..m {
                    let u = s.values[[j, c]];
                    lower_margin.offer(u - lo[c], x, s.t, c, n);
                    upper_margin.offer(up[c].min(sys.k_upper[c]) - u, x, s.t, c, n);
                }
            }
        }
        if let Some((_, p)) = &prev {
            let mut inc = 0.0f64;
            for s in &tr.snapshots {
                let Some(q) = p.at(s.t) else { continue };
                for (((j, _), &a), &b) in s.values.indexed_iter().zip(q.values.iter()) {
                    mono_excess = mono_excess.max(b - a);
                    if nodes.contains(&j) {
                        inc = inc.max((a - b).abs());
                    }
                }
            }
            increments.push((n, inc));
        }
        prev = Some((n, tr));
    }
    let (n, trajectory) = prev.expect("nonempty schedule");
    let increments_decreasing = increments.windows(2).all(|w| w[1].1 <= w[0].1);
    let mono_excess = if increments.is_empty() { 0.0 } else { mono_excess };
    let min_time_difference = time_monotonicity(&trajectory, window, &model.k);
    let mut run = EntireRun {
        n,
        trajectory,
        window,
        k_upper: sys.k_upper.clone(),
        k: model.k.clone(),
        k_lower: sys.lower.k.clone(),
        report: SandwichReport {
            mode: config.mode,
            window,
            tol: config.tol,
            tol_order: config.tol_order,
            lower_margin,
            upper_margin,
            n_increments: increments,
            increments_decreasing,
            monotone_in_n_excess: mono_excess,
            monotone_in_n_ok: mono_excess <= config.tol_order,
            min_time_difference,
            monotone_in_t_ok: min_time_difference.value > 0.0,
            decay_diagnostics: None,
            discrete_lower_deviation: deviation,
        },
    };
    run.report.decay_diagnostics = decay_fit(&run, config, spectral, None).ok();
    Ok(run)
}

fn time_monotonicity(tr: &Trajectory, window: (f64, f64), k: &[f64]) -> Margin {
    let nodes = window_nodes(tr, window);
    let mut out = Margin::start();
    for pair in tr.snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for j in nodes.clone() {
            for (c, kc) in k.iter().enumerate() {
                if a.values[[j, c]] < kc * (1.0 - 1e-12) {
                    out.offer(b.values[[j, c]] - a.values[[j, c]], tr.x(j), a.t, c, f64::NAN);
                }
            }
        }
    }
    out
}

/// Expected early-time exponent: `s(f'(0))` with the spatially independent
/// term, else `min_i c_i lambda1(c_i)`.
pub fn expected_exponent(config: &EntireConfig, spectral: &SpectralData) -> Result<f64> {
    if config.sis_active() {
        return Ok(spectral.growth_rate);
    }
    let mut best = f64::INFINITY;
    for (_, w) in config.active_waves() {
        best = best.min(w.c * spectral.lambda1(w.c)?);
    }
    Ok(best)
}

/// Log-linear fit of `U(x, t)` over `t in [-n + 1, -n/2]`. Without an explicit
/// `x`: the window node where the fronts are smallest when the spatially
/// independent term is active, else the window node nearest 0.
pub fn decay_fit(
    run: &EntireRun,
    config: &EntireConfig,
    spectral: &SpectralData,
    x: Option<f64>,
) -> Result<DecayDiagnostics> {
    let tr = &run.trajectory;
    let nodes = run.window_nodes();
    if nodes.is_empty() {
        return Err(Error::Domain("empty verification window".into()));
    }
    let x_fit = match x {
        Some(x) => x,
        None if config.sis_active() => {
            let weight = |x: f64| -> f64 {
                config
                    .active_waves()
                    .map(|(_, w)| (w.nu as f64 * x).exp())
                    .sum()
            };
            let (a, b) = (tr.x(nodes.start), tr.x(nodes.end - 1));
            if weight(a) <= weight(b) {
                a
            } else {
                b
            }
        }
        None => 0.0f64.clamp(tr.x(nodes.start), tr.x(nodes.end - 1)),
    };
    let j = ((x_fit - tr.x0) / tr.dx).round() as usize;
    let (t_lo, t_hi) = (-run.n + 1.0, -run.n / 2.0);
    let pts: Vec<_> = tr
        .snapshots
        .iter()
        .filter(|s| s.t >= t_lo - 1e-9 && s.t <= t_hi + 1e-9)
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain(format!("fewer than two snapshots in [{t_lo}, {t_hi}]")));
    }
    let expected = expected_exponent(config, spectral)?;
    let m = tr.snapshots[0].values.ncols();
    let mut fitted = Vec::with_capacity(m);
    for c in 0..m {
        let data: Vec<(f64, f64)> = pts.iter().map(|s| (s.t, s.values[[j, c]].ln())).collect();
        let k = data.len() as f64;
        let mt = data.iter().map(|p| p.0).sum::<f64>() / k;
        let my = data.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = data.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = data.iter().map(|p| (p.0 - mt).powi(2)).sum();
        fitted.push(sxy / sxx);
    }
    let worst = fitted
        .iter()
        .map(|f| ((f - expected) / expected).abs())
        .fold(0.0, f64::max);
    Ok(DecayDiagnostics {
        x: tr.x(j),
        t_range: (t_lo, t_hi),
        expected,
        fitted,
        worst_relative_error: worst,
        ok: worst <= 0.05,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeReport {
    /// `min U` and `min (K - U)` on the window over all snapshots.
    pub min_value: f64,
    pub min_gap_to_k: f64,
    pub positive_ok: bool,
    pub below_k_ok: bool,
    pub min_time_difference: Margin,
    pub monotone_in_t_ok: bool,
    pub decay: Option<DecayDiagnostics>,
    /// `(t, sup_{|x| <= radius} |U|)` for the earliest snapshots.
    pub early_sup: Vec<(f64, f64)>,
    pub early_decreasing: bool,
    pub radius: f64,
    /// `sup_window |U(t_end) - K|`.
    pub final_distance_to_k: f64,
    /// `min_window (U(t_end) - K_lower)` componentwise minimum.
    pub final_excess_over_k_lower: f64,
}

/// Report-only checks of positivity, time monotonicity, early-time decay and
/// large-time behavior.
pub fn verify_qualitative(run: &EntireRun, config: &EntireConfig, spectral: &SpectralData) -> QualitativeReport {
    let tr = &run.trajectory;
    let nodes = run.window_nodes();
    let k = &run.k;
    let mut min_value = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for s in &tr.snapshots {
        for j in nodes.clone() {
            for (c, kc) in k.iter().enumerate() {
                min_value = min_value.min(s.values[[j, c]]);
                min_gap = min_gap.min(kc - s.values[[j, c]]);
            }
        }
    }
    let radius = 10.0;
    let early: Vec<(f64, f64)> = tr
        .snapshots
        .iter()
        .filter(|s| s.t <= -run.n / 2.0 + 1e-9)
        .map(|s| {
            let sup = nodes
                .clone()
                .filter(|&j| tr.x(j).abs() <= radius)
                .flat_map(|j| s.values.row(j).to_vec())
                .fold(0.0f64, |a, v| a.max(v.abs()));
            (s.t, sup)
        })
        .collect();
    let early_decreasing = early.windows(2).all(|w| w[0].1 < w[1].1);
    let last = tr.last();
    let mut dist = 0.0f64;
    let mut excess = f64::INFINITY;
    for j in nodes.clone() {
        for c in 0..k.len() {
            dist = dist.max((last.values[[j, c]] - k[c]).abs());
            excess = excess.min(last.values[[j, c]] - run.k_lower[c]);
        }
    }
    let mtd = time_monotonicity(tr, run.window, k);
    QualitativeReport {
        min_value,
        min_gap_to_k: min_gap,
        positive_ok: min_value > 0.0,
        below_k_ok: min_gap >= 0.0,
        min_time_difference: mtd,
        monotone_in_t_ok: mtd.value > 0.0,
        decay: decay_fit(run, config, spectral, None).ok(),
        early_sup: early,
        early_decreasing,
        radius,
        final_distance_to_k: dist,
        final_excess_over_k_lower: excess,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub index: usize,
    pub delta: f64,
    /// Largest `U(h) - U(h + delta)` over all shared snapshot nodes.
    pub worst_excess: f64,
    pub ok: bool,
}

/// Two constructions differing only in `h_index` by `delta`; checks
/// `U(h + delta) >= U(h) - tol_order`. `index == l` targets `h_{l+1}`.
pub fn monotone_in_h(
    config: &EntireConfig,
    model: &ModelSpec,
    envelopes: Option<&EnvelopePair>,
    profiles: &EntireProfiles,
    spectral: &SpectralData,
    index: usize,
    delta: f64,
) -> Result<MonotoneReport> {
    if index > config.l() {
        return Err(Error::Config(format!("h index {index} out of range")));
    }
    let base = construct_unchecked(config, model, envelopes, profiles, spectral)?;
    let shifted_cfg = config.with_h(index, config.h(index) + delta);
    let shifted = construct_unchecked(&shifted_cfg, model, envelopes, profiles, spectral)?;
    let worst = worst_excess(&base.trajectory, &shifted.trajectory, 0..usize::MAX);
    Ok(MonotoneReport {
        index,
        delta,
        worst_excess: worst,
        ok: worst <= config.tol_order,
    })
}

/// `max (a - b)` over shared snapshots and the given node range.
fn worst_excess(a: &Trajectory, b: &Trajectory, nodes: std::ops::Range<usize>) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for s in &a.snapshots {
        let Some(q) = b.at(s.t) else { continue };
        for (((j, _), &x), &y) in s.values.indexed_iter().zip(q.values.iter()) {
            if nodes.contains(&j) {
                worst = worst.max(x - y);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffBoundReport {
    pub h1: f64,
    /// `max (U_p1 - U_p0)`: must not exceed `tol_order`.
    pub lower_excess: f64,
    /// `max (U_p0 - U_p1 - v(lambda1) e^{lambda1(x nu1 + c1 t + h1)})` on the window.
    pub upper_excess: f64,
    /// `sup |U_p0 - U_p1|` over window nodes with `x nu1 <= 0`.
    pub sup_left: f64,
    pub ok: bool,
}

/// Checks `0 <= U_p0 - U_p1 <= v(lambda1(c1)) e^{lambda1(c1)(x nu1 + c1 t + h1)} + tol`
/// where `p1` is `p0` with `chi_1 = 0`.
pub fn diff_bound(
    config_p0: &EntireConfig,
    config_p1: &EntireConfig,
    run_p0: &EntireRun,
    run_p1: &EntireRun,
    spectral: &SpectralData,
) -> Result<DiffBoundReport> {
    let mut expect = config_p0.clone();
    expect.chi[0] = 0;
    if expect.chi != config_p1.chi
        || expect.h_last != config_p1.h_last
        || expect.waves.iter().skip(1).ne(config_p1.waves.iter().skip(1))
    {
        return Err(Error::Config("p1 must equal p0 with chi_1 set to 0".into()));
    }
    if config_p0.chi[0] != 1 {
        return Err(Error::Config("chi_1 must be active in p0".into()));
    }
    let (a, b) = (&run_p0.trajectory, &run_p1.trajectory);
    if a.x0 != b.x0 || a.dx != b.dx || a.snapshots[0].values.dim() != b.snapshots[0].values.dim() {
        return Err(Error::Config("paired runs must share the grid".into()));
    }
    let w = config_p0.waves[0];
    let l1 = spectral.lambda1(w.c)?;
    let v1 = spectral.v(l1);
    let nodes = run_p0.window_nodes();
    let lower_excess = worst_excess(b, a, 0..usize::MAX);
    let mut upper_excess = f64::NEG_INFINITY;
    let mut sup_left = 0.0f64;
    for s in &a.snapshots {
        let Some(q) = b.at(s.t) else { continue };
        for j in nodes.clone() {
            let x = a.x(j);
            let e = (l1 * (x * w.nu as f64 + w.c * s.t + w.h)).exp();
            for c in 0..v1.len() {
                let d = s.values[[j, c]] - q.values[[j, c]];
                upper_excess = upper_excess.max(d - v1[c] * e);
                if x * w.nu as f64 <= 0.0 {
                    sup_left = sup_left.max(d.abs());
                }
            }
        }
    }
    Ok(DiffBoundReport {
        h1: w.h,
        lower_excess,
        upper_excess,
        sup_left,
        ok: lower_excess <= config_p0.tol_order && upper_excess <= config_p0.tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffBoundSuite {
    pub hypothesis: AssumptionReport,
    pub reports: Vec<DiffBoundReport>,
    /// Successive ratios of `sup_left`.
    pub rates: Vec<f64>,
    pub sup_decreasing: bool,
}

impl DiffBoundSuite {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.ok) && self.sup_decreasing
    }
}

/// Paired runs with `chi_1` on and off for each `h1`; refuses models violating
/// `f'(u) <= f'(0)`. `h1_values` should be decreasing.
pub fn diff_bound_sweep(
    config: &EntireConfig,
    model: &ModelSpec,
    profiles: &EntireProfiles,
    spectral: &SpectralData,
    h1_values: &[f64],
    seed: u64,
) -> Result<DiffBoundSuite> {
    let hypothesis = check_jacobian_bound(model, 4000, seed);
    if hypothesis.failed() {
        let cx = hypothesis.counterexample.as_ref().expect("failure has a witness");
        return Err(Error::HypothesisViolation(format!(
            "{} at {:?}",
            cx.inequality, cx.point
        )));
    }
    let mut p1 = config.clone();
    p1.chi[0] = 0;
    let run_p1 = run_schedule(&p1, model, None, profiles, spectral, true)?;
    let mut reports = Vec::new();
    for &h1 in h1_values {
        let p0 = config.with_h(0, h1);
        let mut p1h = p1.clone();
        p1h.waves[0].h = h1;
        let run_p0 = run_schedule(&p0, model, None, profiles, spectral, true)?;
        reports.push(diff_bound(&p0, &p1h, &run_p0, &run_p1, spectral)?);
    }
    let rates = reports
        .windows(2)
        .map(|w| w[1].sup_left / w[0].sup_left)
        .collect();
    let sup_decreasing = reports.windows(2).all(|w| w[1].sup_left < w[0].sup_left);
    Ok(DiffBoundSuite {
        hypothesis,
        reports,
        rates,
        sup_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationFit {
    pub x0: f64,
    pub t0: f64,
    /// `sup |U_a(x + x0, t + t0) - U_b(x, t)|` over the overlap.
    pub residual: f64,
}

/// Best space-time translation on the node/snapshot lattice identifying two
/// runs; reported only.
pub fn translation_fit(a: &EntireRun, b: &EntireRun, max_shift_nodes: usize, stride: usize) -> TranslationFit {
    let (ta, tb) = (&a.trajectory, &b.trajectory);
    let nodes = b.window_nodes();
    let na = ta.snapshots[0].values.nrows() as isize;
    let step = ta.snapshots.get(1).map_or(1.0, |s| s.t - ta.snapshots[0].t);
    let mut best = TranslationFit {
        x0: 0.0,
        t0: 0.0,
        residual: f64::INFINITY,
    };
    let stride = stride.max(1);
    for dt_k in -4i32..=4 {
        let t0 = dt_k as f64 * step;
        for sx in (-(max_shift_nodes as isize)..=max_shift_nodes as isize).step_by(stride) {
            let mut res = 0.0f64;
            let mut used = false;
            for s in &tb.snapshots {
                let Some(q) = ta.at(s.t + t0) else { continue };
                for j in nodes.clone() {
                    let ja = j as isize + sx;
                    if ja < 0 || ja >= na {
                        continue;
                    }
                    used = true;
                    for c in 0..s.values.ncols() {
                        res = res.max((q.values[[ja as usize, c]] - s.values[[j, c]]).abs());
                    }
                }
            }
            if used && res < best.residual {
                best = TranslationFit {
                    x0: sx as f64 * ta.dx,
                    t0,
                    residual: res,
                };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_epidemic, make_fisher, GKind};
    use crate::spectral::compute_cstar;

    fn e1() -> (ModelSpec, SpectralData) {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        (m, s)
    }

    #[test]
    fn pi_bound_trivial_exponents() {
        let (_, s) = e1();
        let cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 0.0, nu: 1 }], vec![0, 1], 2.0, Mode::Cooperative);
        let p = pi_bound(&cfg, &s, 3.0, -2.0).unwrap();
        for (a, b) in p.iter().zip(&s.v_star) {
            assert!((a - b).abs() < 1e-14);
        }
        let cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 1.0, nu: -1 }], vec![1, 0], 0.0, Mode::Cooperative);
        // x nu + c t + h = 0 at x = 2.5, t = 1
        let p = pi_bound(&cfg, &s, 2.5, 1.0).unwrap();
        let v1 = s.v(s.lambda1(1.5).unwrap());
        for (a, b) in p.iter().zip(&v1) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pi_bound_e1_value() {
        let (_, s) = e1();
        let cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 0.0, nu: 1 }], vec![1, 1], 0.0, Mode::Cooperative);
        let p = pi_bound(&cfg, &s, 0.0, -5.0).unwrap();
        // independent oracle: lambda1 from the quadratic, v from f'(0) directly
        let a = 2f64.sqrt() - 1.0;
        let l1 = (1.5 - (2.25 - 4.0 * a).sqrt()) / 2.0;
        let s0 = a;
        // f'(0) = [[-1, 1], [2, -1]]; eigenvector of mu = sqrt2 - 1 is (1, sqrt2) scaled to max 1
        let v = [1.0 / 2f64.sqrt(), 1.0];
        for c in 0..2 {
            let want = v[c] * (-7.5 * l1).exp() + v[c] * (-5.0 * s0).exp();
            assert!((p[c] - want).abs() < 1e-9, "{} vs {}", p[c], want);
        }
    }

    #[test]
    fn config_validation() {
        let (m, s) = e1();
        let mut cfg = EntireConfig::new(vec![Wave { c: 1.5, h: 0.0, nu: 1 }], vec![0, 0], 0.0, Mode::Cooperative);
        assert!(matches!(cfg.validate_shape(), Err(Error::Config(_))));
        cfg.chi = vec![1, 0];
        assert!(matches!(cfg.validate(&m, &s, false), Err(Error::Config(_))));
        cfg.chi = vec![1, 1];
        cfg.waves[0].c = 1.3;
        assert!(matches!(cfg.validate(&m, &s, false), Err(Error::SpeedBelowCritical { .. })));
        cfg.waves[0].c = 1.5;
        cfg.n_schedule = vec![4.0, 2.0];
        assert!(cfg.validate_shape().is_err());
        cfg.n_schedule = vec![2.0, 4.0];
        cfg.validate(&m, &s, false).unwrap();
    }

    #[test]
    fn snapshot_lattice_shared() {
        let cfg = EntireConfig::new(vec![], vec![1], 0.0, Mode::Cooperative);
        let a = snapshot_times(&cfg, 2.0);
        let b = snapshot_times(&cfg, 8.0);
        assert_eq!(a.first(), Some(&-2.0));
        assert_eq!(b.first(), Some(&-8.0));
        assert_eq!(a.len(), 35);
        assert!(a.iter().all(|t| b.iter().any(|s| (s - t).abs() < 1e-12)));
    }

    fn fisher_profiles(cfg: &EntireConfig) -> (ModelSpec, SpectralData, EntireProfiles) {
        let m = make_fisher(1.0, 1.0).unwrap();
        let s = compute_cstar(&m).unwrap();
        let p = EntireProfiles::compute(cfg, &m, &s, 1e-8, 1e-10).unwrap();
        (m, s, p)
    }

    #[test]
    fn initial_data_single_term_and_far_left() {
        let cfg = EntireConfig::new(vec![Wave { c: 2.5, h: 0.0, nu: 1 }], vec![1, 1], 0.5, Mode::Cooperative);
        let (_, _, p) = fisher_profiles(&cfg);
        let grid = Grid::symmetric(60.0, 0.1, Boundary::Constant(vec![0.0]), Boundary::Constant(vec![0.0])).unwrap();
        let f = initial_data(&cfg, &p, &grid, 4.0).unwrap();
        let g = p.gamma.as_ref().unwrap().eval(-4.0 + 0.5)[0];
        assert_eq!(f.values[[0, 0]], g);
        let mut only_sis = cfg.clone();
        only_sis.chi = vec![0, 1];
        let f = initial_data(&only_sis, &p, &grid, 4.0).unwrap();
        assert!(f.values.iter().all(|&v| v == g));
        let mut none = cfg.clone();
        none.chi = vec![0, 0];
        assert!(initial_data(&none, &p, &grid, 4.0).is_err());
    }

    #[test]
    fn fisher_small_construction() {
        let mut cfg = EntireConfig::new(vec![Wave { c: 2.5, h: 0.0, nu: 1 }], vec![1, 1], -2.0, Mode::Cooperative);
        cfg.n_schedule = vec![1.0, 2.0, 3.0];
        cfg.t_end = 3.0;
        cfg.dx = 0.1;
        cfg.dt = 2e-3;
        let (m, s, p) = fisher_profiles(&cfg);
        let run = construct(&cfg, &m, None, &p, &s).unwrap();
        let r = &run.report;
        assert!(r.sandwich_ok(), "{r:?}");
        assert!(r.monotone_in_n_ok, "{}", r.monotone_in_n_excess);
        assert!(r.monotone_in_t_ok, "{:?}", r.min_time_difference);
        assert!(r.discrete_lower_deviation < 1e-2);
        let q = verify_qualitative(&run, &cfg, &s);
        assert!(q.positive_ok && q.below_k_ok);
        assert!(q.early_decreasing);
    }

    #[test]
    fn monotone_in_h_zero_delta_identical() {
        let mut cfg = EntireConfig::new(vec![Wave { c: 2.5, h: 0.0, nu: 1 }], vec![1, 1], 0.0, Mode::Cooperative);
        cfg.n_schedule = vec![2.0];
        cfg.t_end = 1.0;
        cfg.dx = 0.1;
        cfg.dt = 2e-3;
        let (m, s, p) = fisher_profiles(&cfg);
        let r = monotone_in_h(&cfg, &m, None, &p, &s, 0, 0.0).unwrap();
        assert_eq!(r.worst_excess, 0.0);
        let r = monotone_in_h(&cfg, &m, None, &p, &s, 1, 0.5).unwrap();
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn diff_bound_identical_configs_zero() {
        let mut cfg = EntireConfig::new(vec![Wave { c: 2.5, h: 0.0, nu: 1 }], vec![1, 1], 0.0, Mode::Cooperative);
        cfg.n_schedule = vec![2.0];
        cfg.t_end = 1.0;
        cfg.dx = 0.1;
        cfg.dt = 2e-3;
        let (m, s, p) = fisher_profiles(&cfg);
        let run = construct(&cfg, &m, None, &p, &s).unwrap();
        let mut p1 = cfg.clone();
        p1.chi[0] = 0;
        assert!(diff_bound(&cfg, &cfg, &run, &run, &s).is_err());
        let q = run_schedule(&p1, &m, None, &p, &s, true).unwrap();
        let r = diff_bound(&cfg, &p1, &run, &q, &s).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(worst_excess(&run.trajectory, &run.trajectory, 0..usize::MAX), 0.0);
    }
}
