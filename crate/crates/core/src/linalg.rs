//! Orthonormal bases for ranges, kernels and subspace intersections of
//! complex matrices.
//!
//! A basis is stored as the columns of a `DMatrix<Complex64>`; the trivial
//! subspace is a matrix with zero columns.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// The `k`-th largest singular value counting structural zeros, i.e. the
/// value that measures injectivity when `k = ncols`.
pub fn injectivity_modulus(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    if m.ncols() > s.len() {
        0.0
    } else {
        s.last().copied().unwrap_or(0.0)
    }
}

pub fn empty_basis(n: usize) -> CMatrix {
    CMatrix::zeros(n, 0)
}

/// Orthonormal basis of the column space, keeping singular values above
/// `cutoff` (absolute).
pub fn range_basis(m: &CMatrix, cutoff: f64) -> CMatrix {
    if m.ncols() == 0 {
        return empty_basis(m.nrows());
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cutoff)
        .collect();
    select_columns(&u, &keep)
}

/// Orthonormal basis of the kernel, treating singular values at or below
/// `cutoff` (absolute) as zero.
pub fn null_basis(m: &CMatrix, cutoff: f64) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return empty_basis(0);
    }
    // Pad with zero rows so the SVD returns a full n x n right factor.
    let rows = m.nrows().max(n);
    let mut padded = CMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let keep: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] <= cutoff)
        .collect();
    let v = v_t.adjoint();
    select_columns(&v, &keep)
}

/// Orthonormal basis of `span(a) ∩ span(b)` for orthonormal `a`, `b`.
///
/// Directions of `span(a)` whose principal angle to `span(b)` has sine at
/// most `sine_tol` are kept.
pub fn intersect(a: &CMatrix, b: &CMatrix, sine_tol: f64) -> CMatrix {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return empty_basis(n);
    }
    // Residual of a's columns after projection onto span(b); its singular
    // values are the sines of the principal angles.
    let residual = a - b * (b.adjoint() * a);
    let k = a.ncols();
    let rows = n.max(k);
    let mut padded = CMatrix::zeros(rows, k);
    padded.view_mut((0, 0), (n, k)).copy_from(&residual);
    let svd = padded.svd(false, true);
    let v = svd.v_t.expect("requested V^T").adjoint();
    let keep: Vec<usize> = (0..k)
        .filter(|&j| svd.singular_values[j] <= sine_tol)
        .collect();
    if keep.is_empty() {
        return empty_basis(n);
    }
    let raw = a * select_columns(&v, &keep);
    // Re-orthonormalise to wash out rounding.
    range_basis(&raw, 0.5)
}

/// Largest principal-angle sine between two subspaces of equal dimension,
/// or 1 when the dimensions differ.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    spectral_norm(&(a - b * (b.adjoint() * a)))
}

fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        out.set_column(j, &m.column(c));
    }
    out
}

/// Columns of a basis as plain vectors.
pub fn columns(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, v.iter().map(|x| c(*x)))
    }

    #[test]
    fn kernel_of_rank_one_row() {
        let m = real(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_basis(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((m * &k).norm() < 1e-14);
    }

    #[test]
    fn range_of_wide_matrix() {
        let m = real(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(range_basis(&m, 1e-12).ncols(), 1);
    }

    #[test]
    fn intersection_of_planes_in_r3() {
        // xy-plane and xz-plane meet in the x-axis.
        let a = real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = real(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let i = intersect(&a, &b, 1e-10);
        assert_eq!(i.ncols(), 1);
        assert!((i[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn transversal_lines_meet_trivially() {
        let a = real(2, 1, &[1.0, 0.0]);
        let b = real(2, 1, &[0.6, 0.8]);
        assert_eq!(intersect(&a, &b, 1e-10).ncols(), 0);
    }

    #[test]
    fn wide_input_has_zero_injectivity() {
        let m = real(1, 2, &[1.0, 0.0]);
        assert_eq!(injectivity_modulus(&m), 0.0);
        let t = real(2, 1, &[3.0, 4.0]);
        assert!((injectivity_modulus(&t) - 5.0).abs() < 1e-14);
    }
}
