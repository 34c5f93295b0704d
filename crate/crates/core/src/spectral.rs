//! Principal eigenpairs of `A(lambda) = D lambda^2 + f'(0)`, the critical
//! speed `c*` and the decay rates `lambda_1(c)`.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::roots::{bisect, golden_min};

const EIG_TOL: f64 = 1e-13;
const MAX_ITER: usize = 100_000;
const POWER_WARMUP: usize = 30;
const BRACKET_LO: f64 = 1e-6;
const BRACKET_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    IrreducibleCooperative,
    BlockLowerTriangular,
}

/// Principal eigenvalue with positive right and left eigenvectors, `|v|_inf = 1`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
    pub left: DVector<f64>,
}

fn a_of(diffusion: &[f64], jac0: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut a = jac0.clone();
    for (i, d) in diffusion.iter().enumerate() {
        a[(i, i)] += d * lambda * lambda;
    }
    a
}

pub fn assemble_a(model: &ModelSpec, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be nonnegative")));
    }
    Ok(a_of(&model.diffusion, &model.jacobian0, lambda))
}

fn check_cooperative(a: &DMatrix<f64>) -> Result<()> {
    let m = a.nrows();
    for i in 0..m {
        for j in 0..m {
            if i != j && a[(i, j)] < 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "A is not cooperative: A[{i}][{j}] = {}",
                    a[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Strongly connected blocks in topological order of influence (`j -> i` when
/// component `i` depends on component `j`).
fn blocks(a: &DMatrix<f64>) -> (Vec<Vec<usize>>, DiGraph<(), ()>) {
    let m = a.nrows();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for i in 0..m {
        for j in 0..m {
            if i != j && a[(i, j)] != 0.0 {
                g.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sccs.reverse();
    (sccs, g)
}

pub fn detect_structure(a: &DMatrix<f64>) -> Result<Structure> {
    check_cooperative(a)?;
    let (b, _) = blocks(a);
    Ok(if b.len() == 1 {
        Structure::IrreducibleCooperative
    } else {
        Structure::BlockLowerTriangular
    })
}

fn cw_bounds(a: &DMatrix<f64>, v: &DVector<f64>) -> (f64, f64) {
    let av = a * v;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..v.len() {
        let r = av[i] / v[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn normalize_inf(v: &mut DVector<f64>) {
    let n = v.amax();
    if n > 0.0 {
        *v /= n;
    }
}

/// Perron root and vector of an irreducible cooperative matrix.
fn perron(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let m = a.nrows();
    if m == 1 {
        return Ok((a[(0, 0)], DVector::from_element(1, 1.0)));
    }
    let min_diag = (0..m).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min);
    let sigma = 1.0 + (-min_diag).max(0.0);
    let b = a + DMatrix::identity(m, m) * sigma;
    let mut v = DVector::from_element(m, 1.0);
    let mut gap = f64::INFINITY;
    for it in 0..MAX_ITER {
        let (lo, hi) = cw_bounds(a, &v);
        gap = hi - lo;
        if gap <= EIG_TOL * hi.abs().max(1.0) {
            return Ok((0.5 * (lo + hi), v));
        }
        let mut next = None;
        if it >= POWER_WARMUP {
            // shifted inverse step; mu > s(A) keeps (mu I - A)^{-1} positive
            let mu = hi + gap;
            let shifted = DMatrix::identity(m, m) * mu - a;
            if let Some(y) = shifted.lu().solve(&v) {
                if y.iter().all(|&x| x > 0.0 && x.is_finite()) {
                    next = Some(y);
                }
            }
        }
        v = next.unwrap_or_else(|| &b * &v);
        normalize_inf(&mut v);
        if v.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Convergence {
                what: "power iteration (lost positivity)".into(),
                iterations: it,
                residual: gap,
            });
        }
    }
    Err(Error::Convergence {
        what: "power iteration".into(),
        iterations: MAX_ITER,
        residual: gap,
    })
}

fn cross_check(a: &DMatrix<f64>, value: f64) -> Result<()> {
    if a.nrows() > 3 {
        return Ok(());
    }
    let dense = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if (dense - value).abs() > 1e-8 * value.abs().max(1.0) {
        return Err(Error::Convergence {
            what: format!("principal eigenvalue cross-check ({value} vs dense {dense})"),
            iterations: 0,
            residual: (dense - value).abs(),
        });
    }
    Ok(())
}

fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn principal_eigenpair(a: &DMatrix<f64>, structure: Structure) -> Result<Eigenpair> {
    check_cooperative(a)?;
    let m = a.nrows();
    let (bl, graph) = blocks(a);
    let ep = match structure {
        Structure::IrreducibleCooperative => {
            if bl.len() != 1 {
                return Err(Error::Domain(format!(
                    "matrix is reducible ({} blocks) but was declared irreducible",
                    bl.len()
                )));
            }
            let (value, vector) = perron(a)?;
            let (_, left) = perron(&a.transpose())?;
            Eigenpair {
                value,
                vector,
                left,
            }
        }
        Structure::BlockLowerTriangular => block_eigenpair(a, &bl, &graph)?,
    };
    if ep.vector.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::A1bViolation(format!(
            "principal eigenvector is not positive: {:?}",
            ep.vector.as_slice()
        )));
    }
    if m <= 3 {
        cross_check(a, ep.value)?;
    }
    Ok(ep)
}

fn block_eigenpair(
    a: &DMatrix<f64>,
    bl: &[Vec<usize>],
    graph: &DiGraph<(), ()>,
) -> Result<Eigenpair> {
    let m = a.nrows();
    let mut vals = Vec::with_capacity(bl.len());
    let mut vecs = Vec::with_capacity(bl.len());
    for b in bl {
        let sub = submatrix(a, b, b);
        let (val, vec) = perron(&sub)?;
        vals.push(val);
        vecs.push((vec, sub));
    }
    let (dom, &top) = vals
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("at least one block");
    for (i, &v) in vals.iter().enumerate() {
        if i != dom && v >= top - 1e-12 * top.abs().max(1.0) {
            return Err(Error::A1bViolation(format!(
                "block {:?} has principal eigenvalue {v} not below the dominant {top}",
                bl[i]
            )));
        }
    }
    if dom != 0 {
        return Err(Error::A1bViolation(format!(
            "dominant block {:?} is not upstream of every other block",
            bl[dom]
        )));
    }
    let src = petgraph::graph::NodeIndex::new(bl[0][0]);
    let mut reach = std::collections::HashSet::new();
    let mut dfs = petgraph::visit::Dfs::new(graph, src);
    while let Some(n) = dfs.next(graph) {
        reach.insert(n.index());
    }
    if reach.len() != m {
        return Err(Error::A1bViolation(format!(
            "components {:?} are not driven by the dominant block",
            (0..m).filter(|i| !reach.contains(i)).collect::<Vec<_>>()
        )));
    }
    let mut v = DVector::zeros(m);
    for (k, &i) in bl[0].iter().enumerate() {
        v[i] = vecs[0].0[k];
    }
    let mut done: Vec<usize> = bl[0].clone();
    for (bi, b) in bl.iter().enumerate().skip(1) {
        let rhs = submatrix(a, b, &done) * DVector::from_iterator(done.len(), done.iter().map(|&j| v[j]));
        let lhs = DMatrix::identity(b.len(), b.len()) * top - &vecs[bi].1;
        let sol = lhs.lu().solve(&rhs).ok_or_else(|| {
            Error::A1bViolation(format!("singular block solve for {:?}", b))
        })?;
        for (k, &i) in b.iter().enumerate() {
            v[i] = sol[k];
        }
        done.extend_from_slice(b);
    }
    normalize_inf(&mut v);
    let (_, w_dom) = perron(&vecs[0].1.transpose())?;
    let mut left = DVector::zeros(m);
    for (k, &i) in bl[0].iter().enumerate() {
        left[i] = w_dom[k];
    }
    Ok(Eigenpair {
        value: top,
        vector: v,
        left,
    })
}

/// Spectral data of the linearization at 0.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Minimizer of `M(lambda) / lambda`.
    pub lambda_star: f64,
    /// `M(0) = s(f'(0))`, the exponential rate of the spatially independent solution.
    pub growth_rate: f64,
    /// `v(0)`.
    pub v_star: Vec<f64>,
    pub c_star: f64,
    pub structure: Structure,
    /// `M(lambda) / lambda` has exactly one local minimum on the scan grid.
    pub scan_unimodal: bool,
    /// Probes `(lambda, M(lambda) / lambda)` from the bracket expansion.
    pub scan_trace: Vec<(f64, f64)>,
    diffusion: Vec<f64>,
    jacobian0: DMatrix<f64>,
}

impl SpectralData {
    pub fn a(&self, lambda: f64) -> DMatrix<f64> {
        a_of(&self.diffusion, &self.jacobian0, lambda)
    }

    pub fn eigen(&self, lambda: f64) -> Result<Eigenpair> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda = {lambda} must be nonnegative")));
        }
        principal_eigenpair(&self.a(lambda), self.structure)
    }

    /// `M(lambda)`. Panics only if the eigenpair fails at `lambda`, which the
    /// constructor rules out on `[0, 4 lambda*]`.
    pub fn m(&self, lambda: f64) -> f64 {
        self.eigen(lambda).expect("principal eigenpair").value
    }

    /// `v(lambda)` with `|v|_inf = 1`.
    pub fn v(&self, lambda: f64) -> Vec<f64> {
        self.eigen(lambda)
            .expect("principal eigenpair")
            .vector
            .iter()
            .copied()
            .collect()
    }

    /// `M'(lambda) = w^T (2 lambda D) v / w^T v`.
    pub fn dm(&self, lambda: f64) -> f64 {
        let ep = self.eigen(lambda).expect("principal eigenpair");
        let num: f64 = (0..self.diffusion.len())
            .map(|i| ep.left[i] * 2.0 * lambda * self.diffusion[i] * ep.vector[i])
            .sum();
        num / ep.left.dot(&ep.vector)
    }

    pub fn lambda1(&self, c: f64) -> Result<f64> {
        compute_lambda1(self, c)
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// Spectral data for an arbitrary `(D, f'(0))` pair.
    pub fn from_linearization(diffusion: &[f64], jacobian0: &DMatrix<f64>) -> Result<Self> {
        let structure = detect_structure(jacobian0)?;
        let ep0 = principal_eigenpair(jacobian0, structure)?;
        if ep0.value <= 0.0 {
            return Err(Error::Monostability(ep0.value));
        }
        let mut data = SpectralData {
            lambda_star: f64::NAN,
            growth_rate: ep0.value,
            v_star: ep0.vector.iter().copied().collect(),
            c_star: f64::NAN,
            structure,
            scan_unimodal: false,
            scan_trace: Vec::new(),
            diffusion: diffusion.to_vec(),
            jacobian0: jacobian0.clone(),
        };
        let ratio = |l: f64| -> Result<f64> { Ok(data.eigen(l)?.value / l) };
        let mut hi = 1.0;
        let mut prev = ratio(hi)?;
        let mut trace = vec![(hi, prev)];
        let mut increases = 0;
        while increases < 3 {
            let next = 2.0 * hi;
            if next > BRACKET_CAP {
                return Err(Error::ScanFailure(format!(
                    "no interior minimum of M/lambda on [{BRACKET_LO}, {BRACKET_CAP}]; probes {trace:?}"
                )));
            }
            let g = ratio(next)?;
            trace.push((next, g));
            increases = if g > prev { increases + 1 } else { 0 };
            prev = g;
            hi = next;
        }
        // check every block dominance condition and evaluate on the scan grid
        let n_scan = 200;
        let mut g_scan = Vec::with_capacity(n_scan);
        for k in 0..n_scan {
            let l = BRACKET_LO * (hi / BRACKET_LO).powf(k as f64 / (n_scan - 1) as f64);
            g_scan.push(ratio(l)?);
        }
        let local_min = (1..n_scan - 1)
            .filter(|&k| g_scan[k] <= g_scan[k - 1] && g_scan[k] <= g_scan[k + 1])
            .count();
        let (lg, _) = golden_min(|l| ratio(l).unwrap_or(f64::INFINITY), BRACKET_LO, hi, 1e-10);
        // polish on the first-order condition lambda M'(lambda) = M(lambda)
        let phi = |l: f64| l * data.dm(l) - data.m(l);
        let mut a = lg * (1.0 - 1e-4);
        let mut b = lg * (1.0 + 1e-4);
        let mut tries = 0;
        while phi(a) > 0.0 && tries < 60 {
            a *= 0.5;
            tries += 1;
        }
        while phi(b) < 0.0 && tries < 120 {
            b *= 2.0;
            tries += 1;
        }
        let ls = bisect(phi, a, b, 1e-15 * lg.max(1.0)).unwrap_or(lg);
        data.lambda_star = ls;
        data.c_star = data.m(ls) / ls;
        data.scan_unimodal = local_min == 1;
        data.scan_trace = trace;
        for k in 0..=64 {
            data.eigen(4.0 * ls * k as f64 / 64.0)?;
        }
        Ok(data)
    }
}

pub fn compute_cstar(model: &ModelSpec) -> Result<SpectralData> {
    SpectralData::from_linearization(&model.diffusion, &model.jacobian0)
}

/// The root of `M(lambda) = c lambda` on `(0, lambda*)`.
pub fn compute_lambda1(spec: &SpectralData, c: f64) -> Result<f64> {
    if !(c > spec.c_star) {
        return Err(Error::SpeedBelowCritical {
            c,
            c_star: spec.c_star,
        });
    }
    bisect(|l| spec.m(l) - c * l, 0.0, spec.lambda_star, 1e-15)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectralRow {
    pub lambda: f64,
    pub m: f64,
    pub v: Vec<f64>,
}

pub fn spectral_table(spec: &SpectralData, lambdas: &[f64]) -> Result<Vec<SpectralRow>> {
    lambdas
        .iter()
        .map(|&l| {
            let ep = spec.eigen(l)?;
            Ok(SpectralRow {
                lambda: l,
                m: ep.value,
                v: ep.vector.iter().copied().collect(),
            })
        })
        .collect()
}
