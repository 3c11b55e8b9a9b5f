//! Measure documents.
//!
//! Atomic:
//! ```json
//! {"kind": "atomic", "N": 2, "dimE": 1,
//!  "atoms": [{"point": [0, 0], "weight_re": [1], "weight_im": [0]}]}
//! ```
//! Gridded (densities flat, row-major, last axis fastest):
//! ```json
//! {"kind": "gridded", "N": 2, "dimE": 1, "box": [[-1, 1], [-1, 1]],
//!  "resolution": [64, 64], "density_re": [[...]], "density_im": [[...]]}
//! ```
//! `weight_im` and `density_im` may be omitted.

use super::{Atom, MeasureKind, VectorMeasure};
use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureDocument {
    Atomic {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "dimE")]
        dim_e: usize,
        atoms: Vec<AtomDocument>,
    },
    Gridded {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "dimE")]
        dim_e: usize,
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
        resolution: Vec<usize>,
        density_re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_im: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomDocument {
    pub point: Vec<f64>,
    pub weight_re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_im: Option<Vec<f64>>,
}

pub fn parse_measure(text: &str) -> Result<VectorMeasure> {
    let doc: MeasureDocument =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.to_measure()
}

fn combine(re: &[f64], im: Option<&Vec<f64>>, what: &str) -> Result<Vec<Complex64>> {
    match im {
        Some(im) if im.len() != re.len() => Err(Error::DimensionMismatch(format!(
            "{what}: {} real and {} imaginary entries",
            re.len(),
            im.len()
        ))),
        Some(im) => Ok(re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect()),
        None => Ok(re.iter().map(|a| Complex64::new(*a, 0.0)).collect()),
    }
}

impl MeasureDocument {
    pub fn to_measure(&self) -> Result<VectorMeasure> {
        match self {
            MeasureDocument::Atomic { dim, dim_e, atoms } => {
                let atoms = atoms
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        Ok(Atom {
                            point: a.point.clone(),
                            weight: combine(&a.weight_re, a.weight_im.as_ref(), &format!("atom {k}"))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                VectorMeasure::atomic(*dim, *dim_e, atoms)
            }
            MeasureDocument::Gridded {
                dim,
                dim_e,
                bounds,
                resolution,
                density_re,
                density_im,
            } => {
                if bounds.len() != *dim || resolution.len() != *dim {
                    return Err(Error::DimensionMismatch(format!(
                        "N = {dim} but box has {} axes and resolution {}",
                        bounds.len(),
                        resolution.len()
                    )));
                }
                if density_re.len() != *dim_e {
                    return Err(Error::DimensionMismatch(format!(
                        "dimE = {dim_e} but {} density components",
                        density_re.len()
                    )));
                }
                if let Some(im) = density_im {
                    if im.len() != *dim_e {
                        return Err(Error::DimensionMismatch("density_im has the wrong number of components".into()));
                    }
                }
                let grid = Grid::new(bounds.iter().map(|b| (b[0], b[1])).collect(), resolution.clone())?;
                let density = density_re
                    .iter()
                    .enumerate()
                    .map(|(c, re)| combine(re, density_im.as_ref().map(|im| &im[c]), "density"))
                    .collect::<Result<Vec<_>>>()?;
                VectorMeasure::gridded(grid, density)
            }
        }
    }

    pub fn from_measure(mu: &VectorMeasure) -> Self {
        let im_if_any = |v: Vec<Vec<f64>>| {
            if v.iter().flatten().any(|x| *x != 0.0) {
                Some(v)
            } else {
                None
            }
        };
        match mu.kind() {
            MeasureKind::Atomic(a) => MeasureDocument::Atomic {
                dim: mu.dim(),
                dim_e: mu.dim_e(),
                atoms: a
                    .atoms
                    .iter()
                    .map(|at| {
                        let im: Vec<f64> = at.weight.iter().map(|z| z.im).collect();
                        AtomDocument {
                            point: at.point.clone(),
                            weight_re: at.weight.iter().map(|z| z.re).collect(),
                            weight_im: if im.iter().any(|x| *x != 0.0) { Some(im) } else { None },
                        }
                    })
                    .collect(),
            },
            MeasureKind::Gridded(g) => MeasureDocument::Gridded {
                dim: mu.dim(),
                dim_e: mu.dim_e(),
                bounds: g.grid.bounds().iter().map(|b| [b.0, b.1]).collect(),
                resolution: g.grid.resolution().to_vec(),
                density_re: g.density.iter().map(|c| c.iter().map(|z| z.re).collect()).collect(),
                density_im: im_if_any(g.density.iter().map(|c| c.iter().map(|z| z.im).collect()).collect()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_document() {
        let mu = parse_measure(
            r#"{"kind":"atomic","N":2,"dimE":2,
                "atoms":[{"point":[0,0],"weight_re":[1,0],"weight_im":[1,0]}]}"#,
        )
        .unwrap();
        assert_eq!(mu.total_mass(), 2.0);
    }

    #[test]
    fn gridded_round_trip() {
        let text = r#"{"kind":"gridded","N":2,"dimE":1,"box":[[-1,1],[-1,1]],
            "resolution":[2,2],"density_re":[[1,2,3,4]]}"#;
        let mu = parse_measure(text).unwrap();
        assert_eq!(mu.total_mass(), 10.0);
        let back = MeasureDocument::from_measure(&mu).to_measure().unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn bad_documents() {
        assert!(matches!(parse_measure(r#"{"kind":"cloud"}"#), Err(Error::Malformed(_))));
        let short = r#"{"kind":"gridded","N":2,"dimE":1,"box":[[-1,1],[-1,1]],
            "resolution":[2,2],"density_re":[[1,2,3]]}"#;
        assert!(matches!(parse_measure(short), Err(Error::DimensionMismatch(_))));
        let negative = r#"{"kind":"atomic","N":2,"dimE":1,"atoms":[{"point":[0,0],"weight_re":[-1]}]}"#;
        assert!(matches!(parse_measure(negative), Err(Error::InvalidArgument(_))));
    }
}
