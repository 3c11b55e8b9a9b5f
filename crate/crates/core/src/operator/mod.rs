//! Homogeneous constant-coefficient operators `A(D) = sum_{|alpha| = m} a_alpha d^alpha`
//! with `a_alpha : E -> F`, their symbols, and spectral application.

pub mod catalog;
pub mod doc;
pub mod sphere;
pub mod structure;

pub use doc::{parse_operator, OperatorDocument};
pub use structure::{
    check_canceling, check_cocanceling, check_ellipticity, certify, verify_annihilator,
    AnnihilatorReport, StructureCertificate,
};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::CMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Multi-index `alpha` in `N >= 2` variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "multi-index needs N >= 2 entries, got {}",
                entries.len()
            )));
        }
        Ok(MultiIndex(entries))
    }

    /// `e_j` scaled by `k`: the index of `d_j^k`.
    pub fn axis(dim: usize, j: usize, k: u32) -> Self {
        let mut e = vec![0; dim];
        e[j] = k;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `xi^alpha`.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// Every multi-index of the given order in `dim` variables, in
    /// lexicographic order.
    pub fn all_of_order(dim: usize, order: usize) -> Vec<MultiIndex> {
        fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=left).rev() {
                prefix.push(a);
                rec(dim, left - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim, order as u32, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// The symbol `A(xi)` evaluated at a real point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub value: CMatrix,
    pub at_xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousOperator {
    dim: usize,
    order: usize,
    dim_e: usize,
    dim_f: usize,
    terms: BTreeMap<MultiIndex, CMatrix>,
}

impl HomogeneousOperator {
    /// Build from `(alpha, a_alpha)` terms; repeated indices are summed.
    pub fn new(
        dim: usize,
        order: usize,
        dim_e: usize,
        dim_f: usize,
        terms: Vec<(MultiIndex, CMatrix)>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("N = {dim}, need N >= 2")));
        }
        if order == 0 {
            return Err(Error::InvalidArgument("order m must be >= 1".into()));
        }
        if dim_e == 0 || dim_f == 0 {
            return Err(Error::DimensionMismatch("dimE and dimF must be positive".into()));
        }
        let mut map: BTreeMap<MultiIndex, CMatrix> = BTreeMap::new();
        for (alpha, a) in terms {
            if alpha.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "multi-index {alpha} has {} entries, N = {dim}",
                    alpha.dim()
                )));
            }
            if alpha.order() != order {
                return Err(Error::Inhomogeneous {
                    alpha: alpha.entries().to_vec(),
                    found: alpha.order(),
                    expected: order,
                });
            }
            if a.nrows() != dim_f || a.ncols() != dim_e {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient of {alpha} is {}x{}, expected dimF x dimE = {dim_f}x{dim_e}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Malformed(format!("coefficient of {alpha} is not finite")));
            }
            match map.get_mut(&alpha) {
                Some(existing) => *existing += a,
                None => {
                    map.insert(alpha, a);
                }
            }
        }
        map.retain(|_, a| a.iter().any(|z| z.norm() > 0.0));
        if map.is_empty() {
            return Err(Error::TrivialSymbol);
        }
        Ok(HomogeneousOperator {
            dim,
            order,
            dim_e,
            dim_f,
            terms: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn dim_f(&self) -> usize {
        self.dim_f
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, CMatrix> {
        &self.terms
    }

    /// Operators fed to potentials and the solver need `1 <= m < N`.
    pub fn require_subcritical(&self) -> Result<()> {
        if self.order >= self.dim {
            Err(Error::OrderOutOfRange {
                order: self.order,
                dim: self.dim,
            })
        } else {
            Ok(())
        }
    }

    /// `A(xi) = sum a_alpha xi^alpha`, shape `dimF x dimE`.
    pub fn symbol(&self, xi: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_f, self.dim_e);
        for (alpha, a) in &self.terms {
            let w = alpha.monomial(xi);
            if w != 0.0 {
                out += a * Complex64::new(w, 0.0);
            }
        }
        out
    }

    /// Conjugate transpose of [`Self::symbol`], shape `dimE x dimF`.
    pub fn adjoint_symbol(&self, xi: &[f64]) -> CMatrix {
        self.symbol(xi).adjoint()
    }

    /// Fourier multiplier of `A(D)`: `i^m A(xi)`.
    pub fn operator_symbol(&self, xi: &[f64]) -> CMatrix {
        self.symbol(xi) * i_pow(self.order as i64)
    }

    /// Fourier multiplier of the formal adjoint `A*(D)`: `(-i)^m A(xi)^H`.
    pub fn adjoint_operator_symbol(&self, xi: &[f64]) -> CMatrix {
        self.adjoint_symbol(xi) * i_pow(-(self.order as i64))
    }

    /// The formal `L^2` adjoint `A*(D) = sum (-1)^m a_alpha^H d^alpha`, from
    /// `F` to `E`.
    pub fn formal_adjoint(&self) -> HomogeneousOperator {
        let sign = if self.order % 2 == 0 { 1.0 } else { -1.0 };
        HomogeneousOperator {
            dim: self.dim,
            order: self.order,
            dim_e: self.dim_f,
            dim_f: self.dim_e,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| (k.clone(), a.adjoint() * Complex64::new(sign, 0.0)))
                .collect(),
        }
    }

    /// `c A(D)`.
    pub fn scaled(&self, c: Complex64) -> Result<HomogeneousOperator> {
        HomogeneousOperator::new(
            self.dim,
            self.order,
            self.dim_e,
            self.dim_f,
            self.terms.iter().map(|(k, a)| (k.clone(), a * c)).collect(),
        )
    }

    /// `sum_alpha ||a_alpha||` in the spectral norm.
    pub fn coefficient_norm_sum(&self) -> f64 {
        self.terms.values().map(crate::linalg::spectral_norm).sum()
    }
}

/// `i^k` for integer `k`.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Evaluate `A(xi)` and tag it with the point.
pub fn symbol_at(op: &HomogeneousOperator, xi: &[f64]) -> SymbolMatrix {
    SymbolMatrix {
        value: op.symbol(xi),
        at_xi: xi.to_vec(),
    }
}

/// `A(xi)^H` and the point.
pub fn adjoint_symbol_at(op: &HomogeneousOperator, xi: &[f64]) -> SymbolMatrix {
    SymbolMatrix {
        value: op.adjoint_symbol(xi),
        at_xi: xi.to_vec(),
    }
}

/// `A(D) u` by spectral differentiation on the periodic box.
pub fn apply_operator(op: &HomogeneousOperator, u: &GridField) -> Result<GridField> {
    if u.grid().dim() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "field lives in R^{}, operator in R^{}",
            u.grid().dim(),
            op.dim()
        )));
    }
    if u.value_dim() != op.dim_e() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} components, operator expects dimE = {}",
            u.value_dim(),
            op.dim_e()
        )));
    }
    Ok(apply_matrix_multiplier(u, op.dim_f(), |xi| op.operator_symbol(xi)))
}

/// Apply a matrix-valued Fourier multiplier mode by mode.
pub fn apply_matrix_multiplier(
    u: &GridField,
    out_dim: usize,
    multiplier: impl Fn(&[f64]) -> CMatrix + Sync,
) -> GridField {
    let spec = u.spectrum();
    spec.apply(out_dim, |xi, input, out| {
        let m = multiplier(xi);
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..input.len()).map(|c| m[(r, c)] * input[c]).sum();
        }
    })
    .to_field()
    .with_padding_factor(u.padding_factor())
}

#[cfg(test)]
mod tests {
    use super::catalog;
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn inhomogeneous_terms_are_rejected() {
        let err = HomogeneousOperator::new(
            2,
            1,
            1,
            1,
            vec![(MultiIndex::new(vec![2, 0]).unwrap(), CMatrix::identity(1, 1))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Inhomogeneous { found: 2, expected: 1, .. }));
    }

    #[test]
    fn symbol_examples() {
        let g = catalog::gradient(2);
        let s = g.symbol(&[0.0, 1.0]);
        assert_eq!(s[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(s[(1, 0)], Complex64::new(1.0, 0.0));
        let l = catalog::laplacian(2);
        assert_eq!(l.symbol(&[3.0, 4.0])[(0, 0)], Complex64::new(25.0, 0.0));
        let p = catalog::partial(2, 0);
        assert_eq!(p.symbol(&[0.0, 1.0])[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn complex_coefficients_are_conjugated_in_adjoint() {
        let op = HomogeneousOperator::new(
            2,
            1,
            1,
            1,
            vec![(MultiIndex::axis(2, 0, 1), CMatrix::from_element(1, 1, Complex64::new(0.0, 1.0)))],
        )
        .unwrap();
        let a = op.adjoint_symbol(&[2.0, 5.0]);
        assert_eq!(a[(0, 0)], Complex64::new(0.0, -2.0));
    }

    #[test]
    fn multi_indices_of_order() {
        let all = MultiIndex::all_of_order(3, 2);
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|a| a.order() == 2));
    }

    #[test]
    fn derivative_of_sine() {
        let grid = Grid::cube(2, PI, 16).unwrap();
        let u = GridField::from_real_fn(grid, |x| x[0].sin()).unwrap();
        let du = apply_operator(&catalog::partial(2, 0), &u).unwrap();
        for k in 0..u.grid().len() {
            let x = u.grid().point(k);
            assert!((du.component(0)[k] - Complex64::new(x[0].cos(), 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let grid = Grid::cube(2, 1.0, 8).unwrap();
        let u = GridField::from_real_fn(grid, |_| 3.0).unwrap();
        for op in [catalog::gradient(2), catalog::laplacian(2), catalog::total_derivative(2, 2)] {
            let du = apply_operator(&op, &u).unwrap();
            assert!(du.lp_norm(f64::INFINITY) < 1e-13);
        }
    }

    #[test]
    fn formal_adjoint_of_gradient_is_minus_divergence() {
        let g = catalog::gradient(3).formal_adjoint();
        let d = catalog::divergence(3);
        let xi = [0.3, -1.2, 0.7];
        assert!((g.symbol(&xi) + d.symbol(&xi)).norm() < 1e-15);
        assert!((catalog::gradient(3).adjoint_operator_symbol(&xi) - g.operator_symbol(&xi)).norm() < 1e-15);
    }
}
