//! Divergence trends.
//!
//! Finite-versus-infinite questions are answered by watching a functional as
//! its controlling parameter (a lower radius cutoff, an outer radius, a level)
//! moves one decade at a time towards the singular limit.

use serde::Serialize;

/// Minimum number of decades a trend must span before it can be called divergent.
pub const MIN_DECADES: usize = 3;
/// Per-decade growth ratio that marks power-law divergence.
pub const GROWTH_RATIO: f64 = 1.5;
/// Successive per-decade increments must stay above this fraction of the
/// previous one to count as logarithmic divergence.
pub const LOG_INCREMENT_PERSISTENCE: f64 = 0.7;
/// Increments below this fraction of the current value are treated as flat.
pub const NEGLIGIBLE_INCREMENT: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Trend {
    /// Controlling parameter, one entry per decade, ordered towards the limit.
    pub parameter: Vec<f64>,
    pub values: Vec<f64>,
    pub divergent: bool,
    /// Which signature fired, if any: `"power"` or `"log"`.
    pub signature: Option<&'static str>,
}

impl Trend {
    /// Classify a per-decade sequence.
    ///
    /// Divergent means: monotone growth over the last [`MIN_DECADES`] decades
    /// and either a ratio of at least [`GROWTH_RATIO`] per decade, or
    /// increments that do not decay (the signature of `int dr / r`).
    pub fn assess(parameter: Vec<f64>, values: Vec<f64>) -> Self {
        let signature = classify(&values);
        Trend {
            parameter,
            values,
            divergent: signature.is_some(),
            signature,
        }
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

fn classify(values: &[f64]) -> Option<&'static str> {
    if values.len() < MIN_DECADES + 1 || values.iter().any(|v| !v.is_finite()) {
        return if values.iter().any(|v| v.is_infinite() && *v > 0.0) {
            Some("power")
        } else {
            None
        };
    }
    let tail = &values[values.len() - MIN_DECADES - 1..];
    let increments: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = tail.last().unwrap().abs();
    if scale == 0.0 || increments.iter().any(|d| *d <= NEGLIGIBLE_INCREMENT * scale) {
        return None;
    }
    if tail
        .windows(2)
        .all(|w| w[0] > 0.0 && w[1] / w[0] >= GROWTH_RATIO)
    {
        return Some("power");
    }
    if increments
        .windows(2)
        .all(|d| d[1] >= LOG_INCREMENT_PERSISTENCE * d[0])
    {
        return Some("log");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decades(n: usize) -> Vec<f64> {
        (0..n).map(|k| 10f64.powi(-(k as i32))).collect()
    }

    #[test]
    fn power_growth_is_divergent() {
        let v: Vec<f64> = decades(5).iter().map(|r| 1.0 / r).collect();
        let t = Trend::assess(decades(5), v);
        assert!(t.divergent);
        assert_eq!(t.signature, Some("power"));
    }

    #[test]
    fn log_growth_is_divergent() {
        let v: Vec<f64> = decades(5).iter().map(|r| 2.0 * (1.0 / r).ln() + 1.0).collect();
        let t = Trend::assess(decades(5), v);
        assert!(t.divergent);
        assert_eq!(t.signature, Some("log"));
    }

    #[test]
    fn convergent_sequences_are_not() {
        // int_r^1 s^{-1/2} ds = 2 (1 - sqrt r): increments shrink by sqrt(10)
        let v: Vec<f64> = decades(6).iter().map(|r| 2.0 * (1.0 - r.sqrt())).collect();
        assert!(!Trend::assess(decades(6), v).divergent);
        let flat = vec![3.0; 6];
        assert!(!Trend::assess(decades(6), flat).divergent);
        assert!(!Trend::assess(decades(6), vec![0.0; 6]).divergent);
    }

    #[test]
    fn too_short_is_never_divergent() {
        assert!(!Trend::assess(decades(3), vec![1.0, 10.0, 100.0]).divergent);
    }
}
