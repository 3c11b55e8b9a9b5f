use serde::Serialize;

/// One ensemble member's two sides.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sample {
    /// `lhs / rhs`; `0/0` counts as 0 and `x/0` as infinite.
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `LHS / RHS` exceeded the predicted bound times the slack.
    Bound,
    /// A hypothesis of the inequality failed; no bound is predicted.
    Hypothesis,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RatioSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InequalityReport {
    pub id: String,
    pub ensemble_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Largest `LHS / RHS` over the ensemble.
    pub empirical_best_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_member: Option<usize>,
    pub ratios: RatioSummary,
    /// Bound built from measure functionals; absent when a hypothesis fails
    /// or the inequality has no closed-form constant.
    pub predicted_constant: Option<f64>,
    /// The measure functional the prediction scales with, before calibration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<f64>,
    pub slack: f64,
    pub violations: Vec<Violation>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn assemble(id: &str, samples: &[Sample], predicted: Option<f64>, slack: f64) -> Self {
        let ratios: Vec<f64> = samples.iter().map(Sample::ratio).collect();
        let mut argmax = None;
        let mut best = 0.0;
        for (i, &r) in ratios.iter().enumerate() {
            if argmax.is_none() || r > best {
                argmax = Some(i);
                best = r;
            }
        }
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let summary = if sorted.is_empty() {
            RatioSummary { min: 0.0, median: 0.0, max: 0.0 }
        } else {
            RatioSummary {
                min: sorted[0],
                median: sorted[sorted.len() / 2],
                max: sorted[sorted.len() - 1],
            }
        };
        let mut violations = Vec::new();
        for (i, (s, &r)) in samples.iter().zip(&ratios).enumerate() {
            let over = match predicted {
                Some(c) => r > c * slack,
                None => !r.is_finite(),
            };
            if over {
                violations.push(Violation {
                    kind: ViolationKind::Bound,
                    member: Some(i),
                    lhs: s.lhs,
                    rhs: s.rhs,
                    ratio: r,
                    detail: None,
                });
            }
        }
        let pass = violations.is_empty();
        InequalityReport {
            id: id.to_string(),
            ensemble_size: samples.len(),
            seed: None,
            empirical_best_constant: best,
            argmax_member: argmax,
            ratios: summary,
            predicted_constant: predicted,
            functional: None,
            calibration: None,
            slack,
            violations,
            pass,
            notes: Vec::new(),
        }
    }

    /// Record a failed hypothesis: the prediction is withdrawn and the
    /// report fails.
    pub fn hypothesis_failed(&mut self, functional: &str, value: f64) {
        self.predicted_constant = None;
        self.violations.retain(|v| v.kind == ViolationKind::Hypothesis);
        self.violations.push(Violation {
            kind: ViolationKind::Hypothesis,
            member: None,
            lhs: value,
            rhs: f64::NAN,
            ratio: f64::NAN,
            detail: Some(format!("hypotheses not met: {functional}")),
        });
        self.pass = false;
    }

    pub fn hypotheses_met(&self) -> bool {
        !self.violations.iter().any(|v| v.kind == ViolationKind::Hypothesis)
    }
}

/// A frozen calibration scalar for one inequality.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Calibration {
    pub inequality: String,
    pub scalar: f64,
    /// Measure functional of the calibration measure.
    pub functional: f64,
    pub members: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Calibration {
    /// `empirical / functional` of an uncalibrated run.
    pub fn fit(report: &InequalityReport) -> Option<Self> {
        let f = report.functional?;
        if !(f > 0.0 && f.is_finite() && report.empirical_best_constant.is_finite()) {
            return None;
        }
        Some(Calibration {
            inequality: report.id.clone(),
            scalar: report.empirical_best_constant / f,
            functional: f,
            members: report.ensemble_size,
            seed: report.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_no_violations() {
        let s = [Sample { lhs: 1.0, rhs: 2.0 }, Sample { lhs: 3.0, rhs: 2.0 }];
        let r = InequalityReport::assemble("x", &s, Some(1.0), 1.1);
        assert!(!r.pass);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].member, Some(1));
        assert_eq!(r.empirical_best_constant, 1.5);
        let r = InequalityReport::assemble("x", &s, Some(2.0), 1.0);
        assert!(r.pass && r.violations.is_empty());
        assert!(r.empirical_best_constant <= 2.0);
    }

    #[test]
    fn degenerate_ratios() {
        assert_eq!(Sample { lhs: 0.0, rhs: 0.0 }.ratio(), 0.0);
        assert!(Sample { lhs: 1.0, rhs: 0.0 }.ratio().is_infinite());
        let r = InequalityReport::assemble("x", &[Sample { lhs: 1.0, rhs: 0.0 }], None, 1.0);
        assert!(!r.pass);
    }

    #[test]
    fn hypothesis_failure_fails_the_report() {
        let mut r = InequalityReport::assemble("x", &[Sample { lhs: 1.0, rhs: 1.0 }], Some(2.0), 1.0);
        assert!(r.pass);
        r.hypothesis_failed("wolff bracket", f64::INFINITY);
        assert!(!r.pass && !r.hypotheses_met());
        assert!(r.predicted_constant.is_none());
    }
}
