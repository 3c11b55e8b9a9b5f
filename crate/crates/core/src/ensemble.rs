//! Seeded ensembles of smooth, compactly supported test fields.
//!
//! A member is a random trigonometric polynomial (independent complex
//! Gaussian coefficients on every mode with `|k_a| <= bandwidth`, real part
//! taken) multiplied by the `C^infinity` bump `exp(1 - 1/(1 - |y|^2))`
//! supported in a ball inside the inner half of the box. Members are
//! generated on demand from per-member ChaCha streams, so any member can be
//! rebuilt from `(seed, index)` alone.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Spectrum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Largest mode index per axis; defaults to resolution / 8.
    pub bandwidth: Option<usize>,
    pub seed: u64,
    /// Bump radius as a fraction of the box half-width (at most 1/2).
    pub support_fraction: f64,
    /// Draw the bump centre and radius per member.
    pub random_support: bool,
}

impl EnsembleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        EnsembleSpec {
            count,
            bandwidth: None,
            seed,
            support_fraction: 0.5,
            random_support: false,
        }
    }

    pub fn with_random_support(mut self) -> Self {
        self.random_support = true;
        self
    }

    pub fn with_bandwidth(mut self, b: usize) -> Self {
        self.bandwidth = Some(b);
        self
    }
}

/// `exp(1 - 1/(1 - t^2))` for `t < 1`, else 0.
pub fn bump_profile(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestEnsemble {
    grid: Grid,
    value_dim: usize,
    spec: EnsembleSpec,
    bandwidth: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnsembleSummary {
    pub seed: u64,
    pub count: usize,
    pub bandwidth: usize,
    pub value_dim: usize,
    pub support_fraction: f64,
    pub random_support: bool,
}

impl TestEnsemble {
    pub fn new(grid: Grid, value_dim: usize, spec: EnsembleSpec) -> Result<Self> {
        if spec.count == 0 {
            return Err(Error::EmptySample("ensemble size is 0".into()));
        }
        if value_dim == 0 {
            return Err(Error::DimensionMismatch("ensemble fields need at least one component".into()));
        }
        if !(spec.support_fraction > 0.0 && spec.support_fraction <= 0.5) {
            return Err(Error::InvalidArgument("support fraction must lie in (0, 1/2]".into()));
        }
        let n_min = *grid.resolution().iter().min().unwrap();
        let bandwidth = spec.bandwidth.unwrap_or(n_min / 8).clamp(0, n_min / 2 - 1);
        Ok(TestEnsemble {
            grid,
            value_dim,
            spec,
            bandwidth,
        })
    }

    pub fn len(&self) -> usize {
        self.spec.count
    }

    pub fn is_empty(&self) -> bool {
        self.spec.count == 0
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            seed: self.spec.seed,
            count: self.spec.count,
            bandwidth: self.bandwidth,
            value_dim: self.value_dim,
            support_fraction: self.spec.support_fraction,
            random_support: self.spec.random_support,
        }
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(index as u64 + 1);
        rng
    }

    /// Bump centre and radius of member `index`.
    pub fn support(&self, index: usize) -> (Vec<f64>, f64) {
        let centre = self.grid.center();
        let w = self.grid.min_half_width();
        let r_max = self.spec.support_fraction * w;
        if !self.spec.random_support {
            return (centre, r_max);
        }
        let mut rng = self.rng(index);
        rng.set_word_pos(1 << 40);
        let r = r_max * (0.5 + 0.5 * rng.random::<f64>());
        let slack = 0.5 * w - r;
        let c = centre
            .iter()
            .map(|c| c + slack * (2.0 * rng.random::<f64>() - 1.0) / (centre.len() as f64).sqrt())
            .collect();
        (c, r)
    }

    /// Member `index` as a real-valued field.
    pub fn member(&self, index: usize) -> GridField {
        let mut rng = self.rng(index);
        let grid = &self.grid;
        let b = self.bandwidth;
        let mut spec = Spectrum::zeros(grid.clone(), self.value_dim);
        for comp in spec.data.iter_mut() {
            for (k, z) in comp.iter_mut().enumerate() {
                let idx = grid.unflatten(k);
                let inside = idx.iter().zip(grid.resolution()).all(|(&i, &n)| {
                    let m = if i <= n / 2 { i } else { n - i };
                    m <= b
                });
                if inside {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z = Complex64::new(re, im);
                }
            }
        }
        let wave = spec.to_field();
        let (centre, radius) = self.support(index);
        let scale = (grid.len() as f64).sqrt();
        let comps = wave
            .components()
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(k, z)| {
                        let x = grid.point(k);
                        let t = crate::numerics::distance(&x, &centre) / radius;
                        Complex64::new(z.re * scale * bump_profile(t), 0.0)
                    })
                    .collect()
            })
            .collect();
        GridField::new(grid.clone(), comps).expect("finite ensemble member")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_are_reproducible_and_compactly_supported() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let e = TestEnsemble::new(grid.clone(), 2, EnsembleSpec::new(4, 9).with_random_support()).unwrap();
        let a = e.member(2);
        assert_eq!(a, e.member(2));
        assert_ne!(a, e.member(3));
        for i in 0..4 {
            let m = e.member(i);
            for k in 0..grid.len() {
                let x = grid.point(k);
                if x.iter().any(|v| v.abs() > 0.5) {
                    assert_eq!(m.magnitude(k), 0.0);
                }
            }
            assert!(m.l2_norm() > 0.0);
        }
    }

    #[test]
    fn empty_ensemble_is_rejected() {
        let grid = Grid::cube(2, 1.0, 8).unwrap();
        assert!(matches!(TestEnsemble::new(grid, 1, EnsembleSpec::new(0, 0)), Err(Error::EmptySample(_))));
    }
}
