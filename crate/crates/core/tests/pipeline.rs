//! Documents in, reports out.

use measolv::ensemble::EnsembleSpec;
use measolv::grid::Grid;
use measolv::io;
use measolv::measures::{parse_measure, MeasureDocument, VectorMeasure};
use measolv::operator::{catalog, certify, parse_operator, OperatorDocument};
use measolv::solver::{solve_measure, SolveOptions};
use measolv::Error;

const GRADIENT: &str = r#"{"N": 2, "m": 1, "dimE": 1, "dimF": 2,
  "terms": [{"alpha": [1, 0], "re": [[1], [0]]},
            {"alpha": [0, 1], "re": [[0], [1]], "im": [[0], [0]]}]}"#;

#[test]
fn operator_document_to_certificate() {
    let op = parse_operator(GRADIENT).unwrap();
    assert_eq!(op, catalog::gradient(2));
    let cert = certify(&op, 128, 1e-8, 0).unwrap();
    assert_eq!(cert.elliptic, Some(true));
    assert_eq!(cert.canceling, Some(true));
    let text = io::to_json(&cert).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["elliptic"], true);
}

#[test]
fn malformed_documents_are_input_errors() {
    for bad in [
        "{",
        r#"{"N": 2, "m": 1, "dimE": 1, "dimF": 2, "terms": [{"alpha": [2, 0], "re": [[1], [0]]}]}"#,
        r#"{"N": 2, "m": 1, "dimE": 1, "dimF": 2, "terms": [{"alpha": [1, 0], "re": [[1, 0], [0]]}]}"#,
    ] {
        let e = parse_operator(bad).unwrap_err();
        assert_eq!(e.class(), measolv::ErrorClass::Input, "{e}");
    }
    assert!(matches!(parse_measure(r#"{"kind": "gridded"}"#), Err(Error::Malformed(_))));
}

#[test]
fn measure_document_round_trip_and_solve() {
    let grid = Grid::cube(2, 1.0, 32).unwrap();
    let mu = VectorMeasure::from_density_fn(grid, 1, |x| (-10.0 * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
    let text = io::to_json(&MeasureDocument::from_measure(&mu)).unwrap();
    let back = parse_measure(&text).unwrap();
    assert_eq!(back.density().unwrap(), mu.density().unwrap());

    let op = parse_operator(&io::to_json(&OperatorDocument::from_operator(&catalog::gradient(2))).unwrap()).unwrap();
    let opts = SolveOptions { ensemble: EnsembleSpec::new(10, 1), ..SolveOptions::default() };
    let a = solve_measure(&op, &back, &[2.0], &opts).unwrap();
    let b = solve_measure(&op, &back, &[2.0], &opts).unwrap();
    assert!(a.weak_residual <= 1e-8);
    assert_eq!(io::to_json(&a).unwrap(), io::to_json(&b).unwrap());
}
