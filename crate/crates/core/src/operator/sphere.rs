//! Direction samples on the unit sphere `S^{N-1}`.

use crate::numerics::norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

/// Number of seeded random directions added to every deterministic sample.
pub const RANDOM_DIRECTIONS: usize = 64;

/// Quasi-uniform directions: equally spaced angles in the plane, a
/// Fibonacci spiral in `R^3`, and normalised Gaussianised Halton points
/// above that.
pub fn quasi_uniform(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * k as f64;
                    vec![rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let normal = Normal::standard();
            let primes = first_primes(dim);
            (1..=count)
                .map(|k| {
                    let v: Vec<f64> = primes
                        .iter()
                        .map(|&p| normal.inverse_cdf(radical_inverse(k, p)))
                        .collect();
                    let n = norm(&v);
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// Uniform random directions from a seeded stream.
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// The full sample: at least `max(2N, count)` quasi-uniform directions
/// followed by [`RANDOM_DIRECTIONS`] random ones.
pub fn sphere_sample(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = quasi_uniform(dim, count.max(2 * dim));
    s.extend(random_directions(dim, RANDOM_DIRECTIONS, seed));
    s
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut x = 0.0;
    let mut f = 1.0 / base as f64;
    while k > 0 {
        x += (k % base) as f64 * f;
        k /= base;
        f /= base as f64;
    }
    x.clamp(1e-12, 1.0 - 1e-12)
}

fn first_primes(n: usize) -> Vec<usize> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2;
    while primes.len() < n {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unit_vectors() {
        for dim in 2..=5 {
            for v in sphere_sample(dim, 40, 7) {
                assert_eq!(v.len(), dim);
                assert!((norm(&v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minimum_size_is_enforced() {
        assert_eq!(sphere_sample(4, 1, 0).len(), 8 + RANDOM_DIRECTIONS);
    }

    #[test]
    fn seeded_and_reproducible() {
        assert_eq!(random_directions(3, 5, 11), random_directions(3, 5, 11));
        assert_ne!(random_directions(3, 5, 11), random_directions(3, 5, 12));
    }
}
