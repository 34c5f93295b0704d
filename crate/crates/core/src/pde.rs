//! Order-preserving solver for `u_t = D u_xx + f(u)` on a 1-D interval:
//! backward-Euler diffusion, explicit reaction, Dirichlet data from callables.

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnvelopePair, ModelSpec};
use crate::tridiag::Tridiag;

pub type BoundaryFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Dirichlet data at one end.
#[derive(Clone)]
pub enum Boundary {
    Constant(Vec<f64>),
    Func(BoundaryFn),
}

impl Boundary {
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        match self {
            Boundary::Constant(v) => out.copy_from_slice(v),
            Boundary::Func(f) => f(t, out),
        }
    }
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Constant(v) => write!(f, "Constant({v:?})"),
            Boundary::Func(_) => write!(f, "Func(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n_nodes: usize,
    pub left: Boundary,
    pub right: Boundary,
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n_nodes: usize, left: Boundary, right: Boundary) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dx".into(),
                value: dx,
                reason: "must be positive".into(),
            });
        }
        if n_nodes < 3 {
            return Err(Error::InvalidParameter {
                name: "n_nodes".into(),
                value: n_nodes as f64,
                reason: "need at least 3 nodes".into(),
            });
        }
        Ok(Grid {
            x0,
            dx,
            n_nodes,
            left,
            right,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, dx: f64, left: Boundary, right: Boundary) -> Result<Self> {
        let cells = (2.0 * half_width / dx).round() as usize;
        Grid::new(-(cells as f64) * dx / 2.0, dx, cells + 1, left, right)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.n_nodes - 1)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.x(j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Array2<f64>,
    pub time: f64,
}

impl Field {
    pub fn from_fn(grid: &Grid, m: usize, time: f64, mut f: impl FnMut(f64, &mut [f64])) -> Self {
        let mut values = Array2::zeros((grid.n_nodes, m));
        let mut buf = vec![0.0; m];
        for j in 0..grid.n_nodes {
            f(grid.x(j), &mut buf);
            for c in 0..m {
                values[[j, c]] = buf[c];
            }
        }
        Field { values, time }
    }

    pub fn constant(grid: &Grid, value: &[f64], time: f64) -> Self {
        Field::from_fn(grid, value.len(), time, |_, out| out.copy_from_slice(value))
    }
}

/// Largest timestep for which `u -> u + dt f(u)` stays order-preserving with margin.
pub fn max_stable_dt(model: &ModelSpec) -> f64 {
    1.0 / (2.0 * model.lipschitz)
}

fn check_box(model: &ModelSpec, values: &Array2<f64>) -> Result<()> {
    for ((j, c), &u) in values.indexed_iter() {
        if !(u >= -1e-9 && u <= model.state_box_upper[c] + 1e-9) {
            return Err(Error::Stability {
                node: j,
                component: c,
                value: u,
            });
        }
    }
    Ok(())
}

/// Pre-factored stepper for one (model, grid, dt).
pub struct Stepper<'a> {
    model: &'a ModelSpec,
    grid: &'a Grid,
    dt: f64,
    solvers: Vec<Tridiag>,
    f: Vec<f64>,
    row: Vec<f64>,
    rhs: Vec<f64>,
    bl: Vec<f64>,
    br: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ModelSpec, grid: &'a Grid, dt: f64) -> Result<Self> {
        let bound = max_stable_dt(model);
        if !(dt > 0.0) || dt > bound {
            return Err(Error::Timestep { dt, bound });
        }
        let m = model.m();
        let r = dt / (grid.dx * grid.dx);
        let solvers = model
            .diffusion
            .iter()
            .map(|&d| Tridiag::new(-d * r, 1.0 + 2.0 * d * r, -d * r, grid.n_nodes - 2))
            .collect();
        Ok(Stepper {
            model,
            grid,
            dt,
            solvers,
            f: vec![0.0; m],
            row: vec![0.0; m],
            rhs: vec![0.0; grid.n_nodes - 2],
            bl: vec![0.0; m],
            br: vec![0.0; m],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `(I - dt D d_xx) u^{k+1} = u^k + dt f(u^k)`, boundaries from `t + dt`.
    pub fn step(&mut self, field: &mut Field) -> Result<()> {
        let n = self.grid.n_nodes;
        let m = self.model.m();
        let t_new = field.time + self.dt;
        for j in 1..n - 1 {
            for c in 0..m {
                self.row[c] = field.values[[j, c]];
            }
            self.model.eval(&self.row, &mut self.f);
            for c in 0..m {
                field.values[[j, c]] += self.dt * self.f[c];
            }
        }
        self.grid.left.eval(t_new, &mut self.bl);
        self.grid.right.eval(t_new, &mut self.br);
        for (c, solver) in self.solvers.iter().enumerate() {
            for j in 1..n - 1 {
                self.rhs[j - 1] = field.values[[j, c]];
            }
            self.rhs[0] -= solver.lower() * self.bl[c];
            self.rhs[n - 3] -= solver.upper() * self.br[c];
            solver.solve(&mut self.rhs);
            field.values[[0, c]] = self.bl[c];
            field.values[[n - 1, c]] = self.br[c];
            for j in 1..n - 1 {
                field.values[[j, c]] = self.rhs[j - 1];
            }
        }
        field.time = t_new;
        check_box(self.model, &field.values)
    }
}

/// Single step without a reusable stepper.
pub fn step(field: &Field, model: &ModelSpec, grid: &Grid, dt: f64) -> Result<Field> {
    let mut out = field.clone();
    Stepper::new(model, grid, dt)?.step(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x0: f64,
    pub dx: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() < 1e-9)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("non-empty trajectory")
    }
}

/// Number of `dt` steps from `t0` to `t`; errors unless `t` is on the step lattice.
pub fn steps_between(t0: f64, t: f64, dt: f64) -> Result<usize> {
    let k = ((t - t0) / dt).round();
    if k < 0.0 || ((t - t0) - k * dt).abs() > 1e-9 * (1.0 + t.abs()) {
        return Err(Error::Domain(format!(
            "time {t} is not on the dt = {dt} lattice starting at {t0}"
        )));
    }
    Ok(k as usize)
}

/// Runs from `initial.time` to `t_end`, storing a snapshot at each requested
/// time in `[initial.time, t_end]`; `visit` sees every step.
pub fn solve_ivp_with(
    initial: &Field,
    model: &ModelSpec,
    grid: &Grid,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    mut visit: impl FnMut(&Field) -> Result<()>,
) -> Result<Trajectory> {
    check_box(model, &initial.values)?;
    let total = steps_between(initial.time, t_end, dt)?;
    let mut marks: Vec<usize> = snapshot_times
        .iter()
        .filter(|&&t| t >= initial.time - 1e-9 && t <= t_end + 1e-9)
        .map(|&t| steps_between(initial.time, t, dt))
        .collect::<Result<_>>()?;
    marks.sort_unstable();
    marks.dedup();
    let mut stepper = Stepper::new(model, grid, dt)?;
    let mut field = initial.clone();
    let t0 = initial.time;
    let mut snaps = Vec::with_capacity(marks.len());
    let mut next = marks.iter().peekable();
    for k in 0..=total {
        if k > 0 {
            stepper.step(&mut field)?;
            // keep the clock on the lattice
            field.time = t0 + k as f64 * dt;
            visit(&field)?;
        }
        if next.peek() == Some(&&k) {
            next.next();
            snaps.push(Snapshot {
                t: field.time,
                values: field.values.clone(),
            });
        }
    }
    Ok(Trajectory {
        x0: grid.x0,
        dx: grid.dx,
        snapshots: snaps,
    })
}

pub fn solve_ivp(
    initial: &Field,
    model: &ModelSpec,
    grid: &Grid,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    solve_ivp_with(initial, model, grid, t_end, dt, snapshot_times, |_| Ok(()))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OrderReport {
    pub steps_checked: usize,
    /// Largest `lower - upper` seen over all checks (negative when strictly ordered).
    pub worst_excess: f64,
    pub ordered: bool,
}

pub const ORDER_TOL: f64 = 1e-8;

fn worst_pair(lo: &Array2<f64>, hi: &Array2<f64>) -> (f64, usize, usize) {
    let mut w = (f64::NEG_INFINITY, 0, 0);
    for ((j, c), &a) in lo.indexed_iter() {
        let e = a - hi[[j, c]];
        if e > w.0 {
            w = (e, j, c);
        }
    }
    w
}

/// Advances `u-` under `f-`, `u` under `f` and `u+` under `f+` with the
/// same grid and timestep, checking `u- <= u <= u+` after every step.
#[allow(clippy::too_many_arguments)]
pub fn compare_three(
    initial_minus: &Field,
    initial_mid: &Field,
    initial_plus: &Field,
    model: &ModelSpec,
    envelopes: &EnvelopePair,
    grids: [&Grid; 3],
    t_end: f64,
    dt: f64,
) -> Result<OrderReport> {
    let mut fields = [initial_minus.clone(), initial_mid.clone(), initial_plus.clone()];
    let models = [&envelopes.lower, model, &envelopes.upper];
    let mut steppers = Vec::with_capacity(3);
    for i in 0..3 {
        check_box(models[i], &fields[i].values)?;
        steppers.push(Stepper::new(models[i], grids[i], dt)?);
    }
    let total = steps_between(initial_mid.time, t_end, dt)?;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=total {
        if k > 0 {
            for (s, f) in steppers.iter_mut().zip(fields.iter_mut()) {
                s.step(f)?;
            }
        }
        for (lo, hi) in [(0, 1), (1, 2)] {
            let (e, j, c) = worst_pair(&fields[lo].values, &fields[hi].values);
            worst = worst.max(e);
            if e > ORDER_TOL {
                log::error!(
                    "ordering u{lo} <= u{hi} broken at step {k}, node {j}, component {c}: {:?} vs {:?}",
                    fields[lo].values.row(j),
                    fields[hi].values.row(j)
                );
                return Err(Error::SchemeMonotonicity {
                    node: j,
                    component: c,
                    time: fields[1].time,
                    excess: e,
                });
            }
        }
    }
    Ok(OrderReport {
        steps_checked: total + 1,
        worst_excess: worst,
        ordered: true,
    })
}

/// Pairwise version for a single cooperative model.
pub fn compare_pair(
    lower: &Field,
    upper: &Field,
    model: &ModelSpec,
    grids: [&Grid; 2],
    t_end: f64,
    dt: f64,
) -> Result<OrderReport> {
    let trivial = EnvelopePair::trivial(model);
    compare_three(lower, lower, upper, model, &trivial, [grids[0], grids[0], grids[1]], t_end, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::fisher_exact_front;
    use crate::model::{build_envelopes_population, make_epidemic, make_fisher, make_linear, make_population, GKind};
    use crate::sampling::Halton;
    use nalgebra::DMatrix;

    fn fisher_tracking_error(dx: f64, dt: f64) -> f64 {
        let m = make_fisher(1.0, 1.0).unwrap();
        let c = 5.0 / 6f64.sqrt();
        let front = Arc::new(fisher_exact_front(-200.0, 200.0, 0.001));
        let xl = -40.0;
        let xr = 40.0;
        let fl = front.clone();
        let fr = front.clone();
        let grid = Grid::new(
            xl,
            dx,
            ((xr - xl) / dx).round() as usize + 1,
            Boundary::Func(Arc::new(move |t, out| out[0] = exact(&fl, xl + c * t))),
            Boundary::Func(Arc::new(move |t, out| out[0] = exact(&fr, xr + c * t))),
        )
        .unwrap();
        let u0 = Field::from_fn(&grid, 1, 0.0, |x, out| out[0] = exact(&front, x));
        let traj = solve_ivp(&u0, &m, &grid, 5.0, dt, &[5.0]).unwrap();
        let snap = traj.at(5.0).unwrap();
        (0..grid.n_nodes)
            .map(|j| (snap.values[[j, 0]] - exact(&front, grid.x(j) + 5.0 * c)).abs())
            .fold(0.0, f64::max)
    }

    fn exact(_f: &crate::front::FrontProfile, xi: f64) -> f64 {
        (1.0 + (-xi / 6f64.sqrt()).exp()).powi(-2)
    }

    #[test]
    fn equilibria_are_fixed_points() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        for value in [vec![0.0, 0.0], m.k.clone()] {
            let grid = Grid::symmetric(10.0, 0.1, Boundary::Constant(value.clone()), Boundary::Constant(value.clone())).unwrap();
            let u0 = Field::constant(&grid, &value, 0.0);
            let traj = solve_ivp(&u0, &m, &grid, 1.0, 1e-2, &[1.0]).unwrap();
            let diff = (&traj.last().values - &u0.values).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(diff < 1e-14);
        }
    }

    #[test]
    fn fisher_front_tracking() {
        let err = fisher_tracking_error(0.02, 1e-3);
        assert!(err <= 5e-3, "tracking error {err}");
    }

    #[test]
    fn refinement_reduces_error() {
        // spatial error dominates at this base resolution
        let coarse = fisher_tracking_error(0.8, 1e-3);
        let fine = fisher_tracking_error(0.4, 5e-4);
        assert!(coarse / fine >= 3.0, "coarse {coarse}, fine {fine}");
    }

    #[test]
    fn timestep_bound_enforced() {
        let m = make_fisher(1.0, 1.0).unwrap();
        let grid = Grid::symmetric(5.0, 0.1, Boundary::Constant(vec![0.0]), Boundary::Constant(vec![1.0])).unwrap();
        let u0 = Field::constant(&grid, &[0.5], 0.0);
        assert!(matches!(step(&u0, &m, &grid, 1.0), Err(Error::Timestep { .. })));
    }

    #[test]
    fn leaving_box_is_an_error() {
        let m = make_fisher(1.0, 1.0).unwrap();
        let grid = Grid::symmetric(5.0, 0.1, Boundary::Constant(vec![0.0]), Boundary::Constant(vec![1.0])).unwrap();
        let u0 = Field::constant(&grid, &[1.5], 0.0);
        assert!(matches!(solve_ivp(&u0, &m, &grid, 0.1, 1e-2, &[]), Err(Error::Stability { .. })));
    }

    #[test]
    fn solutions_stay_in_box_and_ordered() {
        let m = make_epidemic(1.0, 1.0, 1.0, 1.0, GKind::G1, 2.0, 1.0).unwrap();
        let h = Halton::new(4, 3);
        let grid = Grid::symmetric(20.0, 0.1, Boundary::Constant(vec![0.0; 2]), Boundary::Constant(m.k.clone())).unwrap();
        let lower = Field::from_fn(&grid, 2, 0.0, |x, out| {
            let p = h.point(((x + 20.0) * 10.0).round() as usize);
            out[0] = p[0] * 0.5 * m.k[0];
            out[1] = p[1] * 0.5 * m.k[1];
        });
        let upper = Field::from_fn(&grid, 2, 0.0, |x, out| {
            let p = h.point(((x + 20.0) * 10.0).round() as usize);
            out[0] = (p[0] * 0.5 + p[2] * 0.5) * m.k[0];
            out[1] = (p[1] * 0.5 + p[3] * 0.5) * m.k[1];
        });
        let rep = compare_pair(&lower, &upper, &m, [&grid, &grid], 2.0, 1e-2).unwrap();
        assert!(rep.ordered && rep.worst_excess <= 0.0);
    }

    #[test]
    fn linear_system_comparison() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 0.3, 0.2, -0.4]);
        let m = make_linear(vec![1.0, 0.5], a, vec![10.0, 10.0]).unwrap();
        let grid = Grid::symmetric(10.0, 0.1, Boundary::Constant(vec![0.0; 2]), Boundary::Constant(vec![0.0; 2])).unwrap();
        let lo = Field::from_fn(&grid, 2, 0.0, |x, out| {
            out[0] = (-x * x).exp();
            out[1] = 0.0;
        });
        let hi = Field::from_fn(&grid, 2, 0.0, |x, out| {
            out[0] = (-x * x).exp() + 0.01;
            out[1] = 0.5 * (-x * x / 4.0).exp();
        });
        assert!(compare_pair(&lo, &hi, &m, [&grid, &grid], 3.0, 1e-2).unwrap().ordered);
    }

    #[test]
    fn three_system_degenerate_and_zero() {
        let p = make_population(1.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let env = build_envelopes_population(&p).unwrap();
        let zero = Boundary::Constant(vec![0.0; 2]);
        let grid = Grid::symmetric(10.0, 0.1, zero.clone(), zero.clone()).unwrap();
        let u = Field::from_fn(&grid, 2, 0.0, |x, out| {
            out[0] = 0.5 * (-x * x).exp();
            out[1] = 0.2 * (-x * x).exp();
        });
        let z = Field::constant(&grid, &[0.0, 0.0], 0.0);
        let rep = compare_three(&z, &u, &u, &p, &env, [&grid, &grid, &grid], 2.0, 1e-2).unwrap();
        assert!(rep.ordered);
        // identical models and data give identical trajectories
        let trivial = EnvelopePair::trivial(&p);
        let rep = compare_three(&u, &u, &u, &p, &trivial, [&grid, &grid, &grid], 2.0, 1e-2).unwrap();
        assert_eq!(rep.worst_excess, 0.0);
    }
}
