//! Standard operators.

use super::{HomogeneousOperator, MultiIndex};
use crate::linalg::CMatrix;
use num_complex::Complex64;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `u -> (d_1 u, .., d_N u)`, scalar to `C^N`.
pub fn gradient(dim: usize) -> HomogeneousOperator {
    let terms = (0..dim)
        .map(|j| {
            let mut a = CMatrix::zeros(dim, 1);
            a[(j, 0)] = one();
            (MultiIndex::axis(dim, j, 1), a)
        })
        .collect();
    HomogeneousOperator::new(dim, 1, 1, dim, terms).expect("gradient is well formed")
}

/// `f -> sum_j d_j f_j`, `C^N` to scalar.
pub fn divergence(dim: usize) -> HomogeneousOperator {
    let terms = (0..dim)
        .map(|j| {
            let mut a = CMatrix::zeros(1, dim);
            a[(0, j)] = one();
            (MultiIndex::axis(dim, j, 1), a)
        })
        .collect();
    HomogeneousOperator::new(dim, 1, dim, 1, terms).expect("divergence is well formed")
}

/// Scalar Laplacian.
pub fn laplacian(dim: usize) -> HomogeneousOperator {
    let terms = (0..dim)
        .map(|j| (MultiIndex::axis(dim, j, 2), CMatrix::identity(1, 1)))
        .collect();
    HomogeneousOperator::new(dim, 2, 1, 1, terms).expect("laplacian is well formed")
}

/// Scalar `d_j`.
pub fn partial(dim: usize, j: usize) -> HomogeneousOperator {
    HomogeneousOperator::new(
        dim,
        1,
        1,
        1,
        vec![(MultiIndex::axis(dim, j, 1), CMatrix::identity(1, 1))],
    )
    .expect("partial derivative is well formed")
}

/// All `m`-th order partials of a scalar, indexed by ordered tuples
/// `(j_1, .., j_m)` so that `|D^m u|` is the tensor norm and the symbol is
/// `xi ⊗ .. ⊗ xi`.
pub fn total_derivative(dim: usize, order: usize) -> HomogeneousOperator {
    let count = dim.pow(order as u32);
    let mut terms: Vec<(MultiIndex, CMatrix)> = Vec::new();
    for row in 0..count {
        let mut alpha = vec![0u32; dim];
        let mut r = row;
        for _ in 0..order {
            alpha[r % dim] += 1;
            r /= dim;
        }
        let mut a = CMatrix::zeros(count, 1);
        a[(row, 0)] = one();
        terms.push((MultiIndex(alpha), a));
    }
    HomogeneousOperator::new(dim, order, 1, count, terms).expect("total derivative is well formed")
}

/// Antisymmetrised derivative `f -> (d_i f_j - d_j f_i)_{i<j}`, from `C^N`
/// to `C^{N(N-1)/2}`; its symbol is `f -> xi ∧ f`. In the plane this is the
/// scalar curl.
pub fn curl(dim: usize) -> HomogeneousOperator {
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .collect();
    let rows = pairs.len();
    let mut terms = Vec::new();
    for k in 0..dim {
        let mut a = CMatrix::zeros(rows, dim);
        for (r, &(i, j)) in pairs.iter().enumerate() {
            if k == i {
                a[(r, j)] += one();
            }
            if k == j {
                a[(r, i)] -= one();
            }
        }
        terms.push((MultiIndex::axis(dim, k, 1), a));
    }
    HomogeneousOperator::new(dim, 1, dim, rows, terms).expect("curl is well formed")
}

/// Look up a catalog operator by name: `gradient`, `divergence`,
/// `laplacian`, `partial1`, `hessian` (second total derivative), `curl`.
pub fn by_name(name: &str, dim: usize) -> Option<HomogeneousOperator> {
    if dim < 2 {
        return None;
    }
    Some(match name {
        "gradient" => gradient(dim),
        "divergence" => divergence(dim),
        "laplacian" => laplacian(dim),
        "partial1" => partial(dim, 0),
        "hessian" => total_derivative(dim, 2),
        "curl" => curl(dim),
        _ => return None,
    })
}

pub const NAMES: [&str; 6] = ["gradient", "divergence", "laplacian", "partial1", "hessian", "curl"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curl_kills_gradients() {
        for dim in 2..=4 {
            let c = curl(dim);
            let g = gradient(dim);
            let xi: Vec<f64> = (0..dim).map(|k| 0.3 + k as f64).collect();
            assert!((c.symbol(&xi) * g.symbol(&xi)).norm() < 1e-14);
        }
    }

    #[test]
    fn hessian_symbol_is_tensor_square() {
        let h = total_derivative(3, 2);
        let xi = [1.0, -2.0, 0.5];
        let s = h.symbol(&xi);
        for r in 0..9 {
            assert!((s[(r, 0)].re - xi[r % 3] * xi[r / 3]).abs() < 1e-15);
        }
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        assert!((s.norm() - n2).abs() < 1e-13);
    }
}
