//! Pre-factored constant-coefficient tridiagonal solver (Thomas algorithm).

/// Interior system `lower * x[j-1] + diag * x[j] + upper * x[j+1] = r[j]`
/// for `j = 0..n`, with `x[-1]` and `x[n]` moved to the right-hand side by
/// the caller.
#[derive(Debug, Clone)]
pub struct Tridiag {
    lower: f64,
    upper: f64,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    pub fn new(lower: f64, diag: f64, upper: f64, n: usize) -> Self {
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev = 0.0;
        for j in 0..n {
            let den = diag - lower * prev;
            inv[j] = 1.0 / den;
            cp[j] = upper * inv[j];
            prev = cp[j];
        }
        Tridiag {
            lower,
            upper,
            cp,
            inv,
        }
    }

    pub fn len(&self) -> usize {
        self.cp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cp.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Solves in place.
    pub fn solve(&self, r: &mut [f64]) {
        let n = self.cp.len();
        debug_assert_eq!(r.len(), n);
        r[0] *= self.inv[0];
        for j in 1..n {
            r[j] = (r[j] - self.lower * r[j - 1]) * self.inv[j];
        }
        for j in (0..n - 1).rev() {
            r[j] -= self.cp[j] * r[j + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn matches_dense_solve() {
        let n = 7;
        let (a, b, c) = (-0.3, 2.1, -0.7);
        let t = Tridiag::new(a, b, c, n);
        let mut dense = DMatrix::zeros(n, n);
        for j in 0..n {
            dense[(j, j)] = b;
            if j > 0 {
                dense[(j, j - 1)] = a;
            }
            if j + 1 < n {
                dense[(j, j + 1)] = c;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|j| (j as f64).sin() + 1.0).collect();
        let mut x = rhs.clone();
        t.solve(&mut x);
        let exact = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for j in 0..n {
            assert!((x[j] - exact[j]).abs() < 1e-14);
        }
    }
}
