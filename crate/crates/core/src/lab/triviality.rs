//! The triviality dichotomy: a nonzero positive measure has infinite
//! `(m, p)`-energy for `1 < p <= N/(N-m)` and infinite weak energy for
//! `p = 1`. The check evaluates the lower bound
//! `I_m mu_l(x) >= mu_l(B_R) / (|x| + R)^{N-m}` (up to the Riesz constant)
//! on growing balls.

use crate::error::{Error, Result};
use crate::measures::VectorMeasure;
use crate::numerics::{unit_ball_volume, unit_sphere_area};
use crate::potentials::{energy, riesz_constant, weak_energy};
use crate::trend::Trend;
use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WeakLowerBound {
    /// Levels, decreasing a decade at a time.
    pub lambdas: Vec<f64>,
    /// `lambda |{M / (|x| + R)^{N-m} > lambda}|`.
    pub values: Vec<f64>,
    pub trend: Trend,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnergyCrossCheck {
    /// `(R', truncated energy)` from the potential module.
    pub energies: Vec<(f64, f64)>,
    pub energy_divergent: bool,
    /// Every energy is at least `gamma^{-p}` times the lower bound.
    pub lower_bound_respected: bool,
    /// Both routes reach the same verdict.
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrivialityReport {
    pub m: usize,
    pub p: f64,
    pub verdict: String,
    /// Radius of the ball whose mass drives the bound.
    pub ball_radius: f64,
    /// Largest real or imaginary part of `mu_l(B_R)` over components.
    pub ball_mass: f64,
    /// `(R', M^p int_{B_R'} (|x| + R)^{-(N-m)p} dx)` for `p > 1`.
    pub lower_bounds: Vec<(f64, f64)>,
    pub trend: Trend,
    pub divergent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakLowerBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_cross_check: Option<EnergyCrossCheck>,
    pub notes: Vec<String>,
}

/// `int_0^t r^{N-1} (r + R)^{-s} dr` by Simpson's rule on dyadic panels.
fn radial_integral(dim: usize, s: f64, big_r: f64, t: f64) -> f64 {
    let f = |r: f64| r.powi(dim as i32 - 1) * (r + big_r).powf(-s);
    let mut edges = vec![0.0];
    let mut e = big_r;
    while e < t {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(t);
    edges
        .windows(2)
        .map(|w| {
            let n = 64;
            let h = (w[1] - w[0]) / n as f64;
            let mut acc = f(w[0]) + f(w[1]);
            for i in 1..n {
                acc += f(w[0] + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        })
        .sum()
}

pub fn triviality_check(mu: &VectorMeasure, m: usize, p: f64, r_list: &[f64], cross_check: bool) -> Result<TrivialityReport> {
    let dim = mu.dim();
    let gamma = riesz_constant(dim, m)?;
    let p_max = dim as f64 / (dim - m) as f64;
    if !(p >= 1.0 && p <= p_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in [1, N/(N-m)] = [1, {p_max}]")));
    }
    if r_list.is_empty() || r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("outer radii must be positive".into()));
    }
    let big_r = mu.scale() * (dim as f64).sqrt();
    let s = (dim - m) as f64;
    let empty_trend = || Trend::assess(Vec::new(), Vec::new());
    if mu.is_zero() {
        return Ok(TrivialityReport {
            m,
            p,
            verdict: "zero measure".into(),
            ball_radius: big_r,
            ball_mass: 0.0,
            lower_bounds: Vec::new(),
            trend: empty_trend(),
            divergent: false,
            weak: None,
            energy_cross_check: None,
            notes: vec!["the dichotomy is vacuous for the zero measure".into()],
        });
    }
    let mass = mu
        .ball_mass(&vec![0.0; dim], big_r)
        .iter()
        .map(|z| z.re.max(z.im))
        .fold(0.0, f64::max);
    let mut notes = Vec::new();

    // Outer radii: the requested ones plus four decades ending at the largest.
    let top = r_list.iter().copied().fold(0.0, f64::max);
    let trend_radii: Vec<f64> = (0..4).rev().map(|j| top * 10f64.powi(-j)).collect();
    let bound = |t: f64| mass.powf(p) * unit_sphere_area(dim) * radial_integral(dim, s * p, big_r, t);

    let (lower_bounds, trend, weak) = if p > 1.0 {
        let mut radii: Vec<f64> = r_list.to_vec();
        radii.sort_by(f64::total_cmp);
        let lb = radii.iter().map(|&t| (t, bound(t))).collect();
        let trend = Trend::assess(trend_radii.clone(), trend_radii.iter().map(|&t| bound(t)).collect());
        (lb, trend, None)
    } else {
        // lambda |{M/(|x|+R)^s > lambda}| = lambda^{-m/s} |B(0, M^{1/s} - lambda^{1/s} R)|.
        let top_level = mass / big_r.powf(s);
        let lambdas: Vec<f64> = (1..=6).map(|j| top_level * 10f64.powi(-j)).collect();
        let values: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                let radius = mass.powf(1.0 / s) - l.powf(1.0 / s) * big_r;
                l * unit_ball_volume(dim) * (radius.max(0.0) / l.powf(1.0 / s)).powi(dim as i32)
            })
            .collect();
        let trend = Trend::assess(lambdas.clone(), values.clone());
        (Vec::new(), trend.clone(), Some(WeakLowerBound { lambdas, values, trend }))
    };
    let divergent = trend.divergent;

    let energy_cross_check = if cross_check && mu.grid().is_some() {
        if p > 1.0 {
            let report = energy(mu, m, p, r_list)?;
            let respected = report.truncated_energies.iter().all(|&(t, e)| {
                e >= (1.0 - 1e-2) * gamma.powf(-p) * bound(t)
            });
            Some(EnergyCrossCheck {
                energies: report.truncated_energies.clone(),
                energy_divergent: report.divergent,
                lower_bound_respected: respected,
                agree: report.divergent == divergent,
            })
        } else {
            let w = weak_energy(mu, m, 24, Some(top))?;
            Some(EnergyCrossCheck {
                energies: w.lambdas.iter().copied().zip(w.volumes.iter().copied()).collect(),
                energy_divergent: w.divergent,
                lower_bound_respected: true,
                agree: w.divergent == divergent,
            })
        }
    } else {
        if cross_check {
            notes.push("energy cross-check needs a gridded measure".into());
        }
        None
    };

    let verdict = if divergent {
        "nonzero measure with divergent energy lower bound: no L^p solution"
    } else {
        "lower bound did not show divergence on the sampled range"
    };
    Ok(TrivialityReport {
        m,
        p,
        verdict: verdict.into(),
        ball_radius: big_r,
        ball_mass: mass,
        lower_bounds,
        trend,
        divergent,
        weak,
        energy_cross_check,
        notes,
    })
}
