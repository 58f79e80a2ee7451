//! Small dense linear-algebra helpers.
//!
//! Data lives in `ndarray` containers throughout the crate; decompositions are
//! delegated to `nalgebra` and converted back here.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub(crate) fn to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Thin singular value decomposition `a = u · diag(s) · vᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    /// n × r
    pub u: Array2<f64>,
    /// r, descending
    pub s: Array1<f64>,
    /// p × r (right singular vectors as columns)
    pub v: Array2<f64>,
}

/// Thin SVD with singular values sorted in descending order and a
/// deterministic sign convention: the largest-magnitude entry of every right
/// singular vector is positive (ties resolved by the lowest index).
pub(crate) fn thin_svd(a: ArrayView2<'_, f64>) -> Result<ThinSvd> {
    let m = to_nalgebra(a);
    let svd = SVD::try_new(m, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD returned no U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no Vᵀ".into()))?;
    let s = svd.singular_values;

    let r = s.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let n = u.nrows();
    let p = v_t.ncols();
    let mut uu = Array2::zeros((n, r));
    let mut vv = Array2::zeros((p, r));
    let mut ss = Array1::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        ss[dst] = s[src];
        let mut best = 0;
        for row in 0..p {
            if v_t[(src, row)].abs() > v_t[(src, best)].abs() {
                best = row;
            }
        }
        let sign = if v_t[(src, best)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..p {
            vv[[row, dst]] = sign * v_t[(src, row)];
        }
        for row in 0..n {
            uu[[row, dst]] = sign * u[(row, src)];
        }
    }
    Ok(ThinSvd { u: uu, s: ss, v: vv })
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
/// Returns `(values, vectors)` with eigenvectors as columns.
pub(crate) fn symmetric_eigen(m: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = SymmetricEigen::new(to_nalgebra(m));
    let k = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Array2::zeros((k, k));
    for (dst, &src) in order.iter().enumerate() {
        for row in 0..k {
            vectors[[row, dst]] = eig.eigenvectors[(row, src)];
        }
    }
    (values, vectors)
}

/// Moore-Penrose pseudo-inverse via SVD, cutting singular values below
/// `max(rows, cols) · ε · s_max`.
pub(crate) fn pinv(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let svd = thin_svd(a)?;
    let cutoff = svd.s.first().copied().unwrap_or(0.0)
        * f64::EPSILON
        * a.nrows().max(a.ncols()) as f64;
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for (r, &s) in svd.s.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let v = svd.v.column(r);
        let u = svd.u.column(r);
        for i in 0..a.ncols() {
            for j in 0..a.nrows() {
                out[[i, j]] += v[i] * u[j] / s;
            }
        }
    }
    Ok(out)
}

/// Index of the maximum entry; ties resolve to the lowest index.
pub fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_rows(m: ArrayView2<'_, f64>) -> Vec<usize> {
    m.axis_iter(Axis(0)).map(argmax).collect()
}

/// Numerically stable softmax of one logit vector.
pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|x| (x - max).exp());
    let total = exp.sum();
    exp / total
}

pub(crate) fn frobenius_sq(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let a = array![[3.0, 1.0, 0.5], [1.0, 2.0, 0.0], [0.0, 1.0, 4.0], [2.0, 2.0, 2.0]];
        let svd = thin_svd(a.view()).unwrap();
        assert!(svd.s.windows(2).into_iter().all(|w| w[0] >= w[1]));
        let rebuilt = (&svd.u * &svd.s).dot(&svd.v.t());
        for (x, y) in rebuilt.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pinv_of_invertible_matrix_is_inverse() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let inv = pinv(a.view()).unwrap();
        let id = a.dot(&inv);
        assert!((id[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(id[[0, 1]].abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(array![1.0, 3.0, 3.0].view()), 1);
        assert_eq!(argmax(array![0.0, 0.0].view()), 0);
    }

    #[test]
    fn eigen_descending() {
        let m = array![[2.0, 0.0], [0.0, 5.0]];
        let (vals, vecs) = symmetric_eigen(m.view());
        assert_eq!(vals[0], 5.0);
        assert!((vecs[[1, 0]].abs() - 1.0).abs() < 1e-12);
    }
}
