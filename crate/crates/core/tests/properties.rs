use measolv::ensemble::{EnsembleSpec, TestEnsemble};
use measolv::grid::{Grid, GridField};
use measolv::lab::{self, CheckOptions, HardyProblem, InequalityReport, Sample, Scaled};
use measolv::measures::VectorMeasure;
use measolv::numerics::norm;
use measolv::operator::{apply_operator, catalog, certify};
use measolv::solver::solve_density;
use measolv::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn sample() -> impl Strategy<Value = Sample> {
    (0.0..10.0f64, prop_oneof![Just(0.0), 0.0..10.0f64]).prop_map(|(lhs, rhs)| Sample { lhs, rhs })
}

proptest! {
    #[test]
    fn pass_iff_no_violations(
        samples in prop::collection::vec(sample(), 1..40),
        predicted in prop::option::of(0.0..5.0f64),
        slack in 1.0..2.0f64,
    ) {
        let r = InequalityReport::assemble("p", &samples, predicted, slack);
        prop_assert_eq!(r.pass, r.violations.is_empty());
        let max = samples.iter().map(Sample::ratio).fold(0.0, f64::max);
        prop_assert_eq!(r.empirical_best_constant, max);
        prop_assert!(r.ratios.min <= r.ratios.median && r.ratios.median <= r.ratios.max);
        // Without a prediction only an infinite ratio is a violation.
        if predicted.is_none() {
            prop_assert_eq!(r.pass, samples.iter().all(|s| s.ratio().is_finite()));
        }
        for v in &r.violations {
            match predicted {
                Some(c) => prop_assert!(v.ratio > c * slack),
                None => prop_assert!(v.ratio.is_infinite()),
            }
        }
    }

    #[test]
    fn failed_hypotheses_never_pass(samples in prop::collection::vec(sample(), 1..10)) {
        let mut r = InequalityReport::assemble("p", &samples, Some(1e9), 1.0);
        r.hypothesis_failed("wolff", f64::INFINITY);
        prop_assert!(!r.pass);
        prop_assert!(r.predicted_constant.is_none());
        prop_assert!(!r.hypotheses_met());
    }

    #[test]
    fn certificates_survive_complex_scaling(re in -3.0..3.0f64, im in -3.0..3.0f64, which in 0usize..3) {
        prop_assume!(re.hypot(im) > 1e-2);
        let op = [catalog::gradient(2), catalog::laplacian(3), catalog::partial(2, 0)][which].clone();
        let scaled = op.scaled(Complex64::new(re, im)).unwrap();
        let a = certify(&op, 64, 1e-8, 3).unwrap();
        let b = certify(&scaled, 64, 1e-8, 3).unwrap();
        prop_assert_eq!(a.elliptic, b.elliptic);
        prop_assert_eq!(a.canceling, b.canceling);
        prop_assert_eq!(a.intersection_dim, b.intersection_dim);
    }

    #[test]
    fn ensembles_are_reproducible(seed in any::<u64>(), index in 0usize..5) {
        let grid = Grid::cube(2, 1.0, 16).unwrap();
        let e = TestEnsemble::new(grid.clone(), 1, EnsembleSpec::new(5, seed).with_random_support()).unwrap();
        let again = TestEnsemble::new(grid, 1, EnsembleSpec::new(5, seed).with_random_support()).unwrap();
        prop_assert_eq!(e.member(index), again.member(index));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solve_then_apply_recovers_the_source(seed in any::<u64>()) {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let rho = TestEnsemble::new(grid, 1, EnsembleSpec::new(1, seed)).unwrap().member(0);
        let op = catalog::gradient(2);
        let f = solve_density(&op, &rho).unwrap();
        let back = apply_operator(&op.formal_adjoint(), &f).unwrap();
        let target = rho.mean_removed();
        prop_assert!(back.sub(&target).unwrap().l2_norm() <= 1e-10 * target.l2_norm().max(1e-300));
    }

    #[test]
    fn fundamental_check_is_scale_invariant(seed in any::<u64>(), log_c in -4.0..4.0f64) {
        let nu = example();
        let grid = nu.grid().unwrap().clone();
        let e = TestEnsemble::new(grid, 1, EnsembleSpec::new(3, seed).with_random_support()).unwrap();
        let op = catalog::gradient(2);
        let opts = CheckOptions::default();
        let a = lab::fundamental_lemma_check(&op, nu, 1.0, 1, &e, &opts).unwrap().inequality;
        let s = Scaled { inner: &e, factor: 10f64.powf(log_c) };
        let b = lab::fundamental_lemma_check(&op, nu, 1.0, 1, &s, &opts).unwrap().inequality;
        let rel = (a.empirical_best_constant - b.empirical_best_constant).abs() / a.empirical_best_constant;
        prop_assert!(rel <= 1e-12, "relative change {rel:e}");
    }

    #[test]
    fn discrete_hardy_bound_is_exact(seed in any::<u64>(), q in 1.0..3.0f64) {
        let (grid, nu) = disc();
        let p = HardyProblem::new(|x| norm(x).powi(-2), |x| 1.0 / norm(x), nu, q, grid).unwrap();
        let c = p.condition(None).unwrap().constant;
        let e = TestEnsemble::new(grid.clone(), 1, EnsembleSpec::new(1, seed).with_random_support()).unwrap();
        let g = e.member(0).map(|z| Complex64::new(z.norm(), 0.0));
        let s = p.evaluate(&g).unwrap();
        prop_assert!(s.lhs <= c * s.rhs * (1.0 + 1e-12), "{} > {} * {}", s.lhs, c, s.rhs);
    }
}

fn example() -> &'static VectorMeasure {
    static NU: OnceLock<VectorMeasure> = OnceLock::new();
    NU.get_or_init(|| VectorMeasure::from_density_fn(Grid::cube(2, 1.0, 32).unwrap(), 4, |x| 1.0 / norm(x)).unwrap())
}

fn disc() -> &'static (Grid, VectorMeasure) {
    static DISC: OnceLock<(Grid, VectorMeasure)> = OnceLock::new();
    DISC.get_or_init(|| {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let nu = VectorMeasure::from_density_fn(grid.clone(), 2, |x| if norm(x) < 1.0 { 1.0 } else { 0.0 }).unwrap();
        (grid, nu)
    })
}

#[test]
fn zero_members_are_rejected_everywhere() {
    let nu = example();
    let empty: Vec<GridField> = Vec::new();
    let op = catalog::gradient(2);
    let opts = CheckOptions::default();
    assert!(lab::fundamental_lemma_check(&op, nu, 1.0, 1, &empty, &opts).is_err());
    assert!(lab::measure_duality_check(&op, nu, &empty, &opts).is_err());
    assert!(TestEnsemble::new(nu.grid().unwrap().clone(), 1, EnsembleSpec::new(0, 0)).is_err());
}
