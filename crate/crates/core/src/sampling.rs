//! Low-discrepancy sample points for the assumption checkers.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    out
}

/// Halton sequence with a seeded Cranley-Patterson rotation.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension capped at {}", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Halton { shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The `i`-th point in `[0, 1)^dim`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES.iter())
            .map(|(s, &p)| (radical_inverse(i as u64 + 1, p) + s).fract())
            .collect()
    }

    /// The `i`-th point scaled into the box `[0, upper]`.
    pub fn point_in_box(&self, i: usize, upper: &[f64]) -> Vec<f64> {
        self.point(i)
            .into_iter()
            .zip(upper)
            .map(|(p, u)| p * u)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_are_in_unit_cube_and_deterministic() {
        let a = Halton::new(3, 11);
        let b = Halton::new(3, 11);
        for i in 0..500 {
            let p = a.point(i);
            assert_eq!(p, b.point(i));
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn sample_mean_is_near_half() {
        let h = Halton::new(2, 0);
        let n = 4096;
        let mut s = [0.0; 2];
        for i in 0..n {
            let p = h.point(i);
            s[0] += p[0];
            s[1] += p[1];
        }
        assert!((s[0] / n as f64 - 0.5).abs() < 2e-3);
        assert!((s[1] / n as f64 - 0.5).abs() < 2e-3);
    }
}
