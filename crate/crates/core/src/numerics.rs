//! Small numerical helpers shared across modules.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Volume of the unit ball in `R^dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    PI.powf(n / 2.0) / gamma(n / 2.0 + 1.0)
}

/// Surface area of the unit sphere `S^{dim-1}`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// `count` points spaced evenly in `log` between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log_spaced needs 0 < lo <= hi");
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Euclidean norm of a real vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Trapezoid rule in `ln r` for `int f(r) dr` given samples at increasing radii.
pub fn trapezoid_log(radii: &[f64], values: &[f64]) -> f64 {
    radii
        .windows(2)
        .zip(values.windows(2))
        .map(|(r, v)| 0.5 * (v[0] * r[0] + v[1] * r[1]) * (r[1] / r[0]).ln())
        .sum()
}

/// `n` is a power of two and at least 2.
pub fn is_power_of_two(n: usize) -> bool {
    n >= 2 && n.is_power_of_two()
}

/// Quintic smoothstep: 0 at `t <= 0`, 1 at `t >= 1`, C^2 in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn log_trapezoid_power() {
        // int_1^10 r dr = 49.5
        let r = log_spaced(1.0, 10.0, 4001);
        let v: Vec<f64> = r.iter().map(|x| *x).collect();
        assert!((trapezoid_log(&r, &v) - 49.5).abs() < 1e-4);
    }

    #[test]
    fn smoothstep_is_monotone_and_flat_at_ends() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let s = smoothstep(i as f64 / 100.0);
            assert!(s >= prev);
            prev = s;
        }
        let d = 1e-6;
        assert!(smoothstep(d) < 1e-15);
        assert!((1.0 - smoothstep(1.0 - d)) < 1e-15);
    }
}
