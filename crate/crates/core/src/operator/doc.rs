//! Operator description documents.
//!
//! ```json
//! {"N": 2, "m": 1, "dimE": 1, "dimF": 2,
//!  "terms": [{"alpha": [1, 0], "re": [[1], [0]]},
//!            {"alpha": [0, 1], "re": [[0], [1]], "im": [[0], [0]]}]}
//! ```
//!
//! `re` and `im` are `dimF x dimE` row-major nested arrays; `im` may be omitted.

use super::{HomogeneousOperator, MultiIndex};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    #[serde(rename = "N")]
    pub dim: usize,
    pub m: usize,
    #[serde(rename = "dimE")]
    pub dim_e: usize,
    #[serde(rename = "dimF")]
    pub dim_f: usize,
    pub terms: Vec<TermDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    pub alpha: Vec<u32>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

/// Parse a JSON operator description.
pub fn parse_operator(text: &str) -> Result<HomogeneousOperator> {
    let doc: OperatorDocument =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.to_operator()
}

impl OperatorDocument {
    pub fn to_operator(&self) -> Result<HomogeneousOperator> {
        if self.terms.is_empty() {
            return Err(Error::Malformed("operator has no terms".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let alpha = MultiIndex::new(t.alpha.clone())
                .map_err(|e| Error::Malformed(e.to_string()))?;
            let re = matrix(&t.re, self.dim_f, self.dim_e, &alpha)?;
            let im = match &t.im {
                Some(im) => matrix(im, self.dim_f, self.dim_e, &alpha)?,
                None => vec![0.0; self.dim_f * self.dim_e],
            };
            let m = CMatrix::from_row_iterator(
                self.dim_f,
                self.dim_e,
                re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)),
            );
            terms.push((alpha, m));
        }
        HomogeneousOperator::new(self.dim, self.m, self.dim_e, self.dim_f, terms)
    }

    pub fn from_operator(op: &HomogeneousOperator) -> Self {
        let terms = op
            .terms()
            .iter()
            .map(|(alpha, a)| {
                let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
                    (0..a.nrows())
                        .map(|r| (0..a.ncols()).map(|c| f(&a[(r, c)])).collect())
                        .collect()
                };
                let has_im = a.iter().any(|z| z.im != 0.0);
                TermDocument {
                    alpha: alpha.entries().to_vec(),
                    re: rows(|z| z.re),
                    im: if has_im { Some(rows(|z| z.im)) } else { None },
                }
            })
            .collect();
        OperatorDocument {
            dim: op.dim(),
            m: op.order(),
            dim_e: op.dim_e(),
            dim_f: op.dim_f(),
            terms,
        }
    }
}

fn matrix(rows: &[Vec<f64>], nr: usize, nc: usize, alpha: &MultiIndex) -> Result<Vec<f64>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch(format!(
            "coefficient of {alpha} is not a {nr}x{nc} matrix"
        )));
    }
    Ok(rows.iter().flatten().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::super::catalog;
    use super::*;

    #[test]
    fn gradient_document() {
        let text = r#"{"N":2,"m":1,"dimE":1,"dimF":2,
            "terms":[{"alpha":[1,0],"re":[[1],[0]]},{"alpha":[0,1],"re":[[0],[1]]}]}"#;
        assert_eq!(parse_operator(text).unwrap(), catalog::gradient(2));
    }

    #[test]
    fn laplacian_document() {
        let text = r#"{"N":2,"m":2,"dimE":1,"dimF":1,
            "terms":[{"alpha":[2,0],"re":[[1]]},{"alpha":[0,2],"re":[[1]]}]}"#;
        assert_eq!(parse_operator(text).unwrap(), catalog::laplacian(2));
    }

    #[test]
    fn errors() {
        let inhom = r#"{"N":2,"m":1,"dimE":1,"dimF":1,"terms":[{"alpha":[2,0],"re":[[1]]}]}"#;
        assert!(matches!(parse_operator(inhom), Err(Error::Inhomogeneous { .. })));
        let shape = r#"{"N":2,"m":1,"dimE":1,"dimF":2,"terms":[{"alpha":[1,0],"re":[[1]]}]}"#;
        assert!(matches!(parse_operator(shape), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_operator("{"), Err(Error::Malformed(_))));
        let zero = r#"{"N":2,"m":1,"dimE":1,"dimF":1,"terms":[{"alpha":[1,0],"re":[[0]]}]}"#;
        assert!(matches!(parse_operator(zero), Err(Error::TrivialSymbol)));
    }

    #[test]
    fn round_trip() {
        for name in catalog::NAMES {
            let op = catalog::by_name(name, 3).unwrap();
            let doc = OperatorDocument::from_operator(&op);
            let text = serde_json::to_string(&doc).unwrap();
            assert_eq!(parse_operator(&text).unwrap(), op);
        }
    }
}
