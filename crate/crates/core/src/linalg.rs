//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Least-squares fit of `y` (N×m) on `x` (N×k).
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// k×m coefficient matrix, one column per response.
    pub coef: DMatrix<f64>,
    /// N×m residual matrix.
    pub resid: DMatrix<f64>,
    /// (XᵀX)⁻¹, needed for coefficient standard errors.
    pub xtx_inv: DMatrix<f64>,
}

/// Relative pivot threshold below which a regressor matrix is declared collinear.
const COLLINEAR_TOL: f64 = 1e-12;

pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if y.nrows() != n {
        return Err(Error::InvalidArgument(format!(
            "regressor rows {} != response rows {}",
            n,
            y.nrows()
        )));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regressors"
        )));
    }
    // Column scaling keeps the Cholesky pivots comparable across regressors.
    let scale = DVector::from_iterator(
        k,
        x.column_iter().map(|c| {
            let s = c.norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }),
    );
    let xs = DMatrix::from_fn(n, k, |i, j| x[(i, j)] / scale[j]);
    let gram = xs.transpose() * &xs;
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::Degenerate("regressor matrix is rank deficient".to_string())
    })?;
    let l = chol.l_dirty();
    let dmax = (0..k).map(|i| l[(i, i)].abs()).fold(0.0, f64::max);
    let dmin = (0..k).map(|i| l[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if k > 0 && !(dmin * dmin > COLLINEAR_TOL * dmax * dmax) {
        return Err(Error::Degenerate(
            "collinear or zero-variance regressors".to_string(),
        ));
    }
    let xty = xs.transpose() * y;
    let coef_s = chol.solve(&xty);
    let coef = DMatrix::from_fn(k, y.ncols(), |i, j| coef_s[(i, j)] / scale[i]);
    let resid = y - x * &coef;
    let inv_s = chol.inverse();
    let xtx_inv = DMatrix::from_fn(k, k, |i, j| inv_s[(i, j)] / (scale[i] * scale[j]));
    Ok(LeastSquares {
        coef,
        resid,
        xtx_inv,
    })
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// (M Mᵀ)^{-1/2} M, the symmetric orthonormalisation used by FastICA.
pub fn sym_decorrelate(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen_desc(&(m * m.transpose()));
    if vals.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate("rows are linearly dependent".into()));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    Ok(&vecs * d * vecs.transpose() * m)
}

pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// Sample covariance with divisor `n - ddof`.
pub fn covariance(x: &DMatrix<f64>, ddof: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let centered = center_columns(x).0;
    (centered.transpose() * centered) / (n - ddof) as f64
}

/// Column-centered copy of `x` together with the column means.
pub fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    (centered, means)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Permutation matrix P with (P x)_k = x_{order[k]}.
pub fn permutation_matrix(order: &[usize]) -> DMatrix<f64> {
    let n = order.len();
    let mut p = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        p[(k, i)] = 1.0;
    }
    p
}

/// Row-major (de)serialisation of `DMatrix` as nested arrays.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use nalgebra::DMatrix;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
            ms.iter()
                .map(crate::linalg::to_rows)
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<DMatrix<f64>>, D::Error> {
            let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
            all.iter()
                .map(|rows| crate::linalg::from_rows(rows).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
