//! Whitening and symmetric FastICA.
//!
//! Data matrices are N×n with one observation per row. The demixing matrix is
//! reported in the original (unwhitened) coordinates so that
//! `s_t = W_ica (x_t − mean)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix, serde_vector, sym_decorrelate, sym_eigen_desc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenedData {
    #[serde(with = "serde_matrix")]
    pub z: DMatrix<f64>,
    /// V with z_t = V (x_t − mean).
    #[serde(with = "serde_matrix")]
    pub whitening: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    pub mean: DVector<f64>,
}

/// Relative eigenvalue floor below which the covariance counts as singular.
const RANK_TOL: f64 = 1e-12;

pub fn whiten(x: &DMatrix<f64>) -> Result<WhitenedData> {
    let (n_obs, n) = x.shape();
    if n_obs <= n {
        return Err(Error::InsufficientData(format!(
            "{n_obs} observations for {n} variables"
        )));
    }
    let (centered, mean) = linalg::center_columns(x);
    let cov = centered.transpose() * &centered / (n_obs - 1) as f64;
    let (vals, vecs) = sym_eigen_desc(&cov);
    let top = vals[0].max(0.0);
    if let Some(k) = (0..n).find(|&k| !(vals[k] > RANK_TOL * top) || top == 0.0) {
        let dir: Vec<String> = vecs.column(k).iter().map(|v| format!("{v:.4}")).collect();
        return Err(Error::Degenerate(format!(
            "covariance is rank deficient along direction [{}]",
            dir.join(", ")
        )));
    }
    let scale = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    let whitening = scale * vecs.transpose();
    let z = &centered * whitening.transpose();
    Ok(WhitenedData { z, whitening, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Tanh,
    Cube,
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" | "logcosh" => Ok(Nonlinearity::Tanh),
            "cube" => Ok(Nonlinearity::Cube),
            other => Err(Error::Config(format!("unknown nonlinearity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaConfig {
    pub nonlinearity: Nonlinearity,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        IcaConfig {
            nonlinearity: Nonlinearity::Tanh,
            max_iter: 1000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaResult {
    #[serde(with = "serde_matrix")]
    pub w_ica: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub a_est: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub components: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    pub mean: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn random_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    sym_decorrelate(&w)
}

/// One fixed-point update W⁺ = E[g(Wz) zᵀ] − diag(E[g′(Wz)]) W.
fn update(z: &DMatrix<f64>, w: &DMatrix<f64>, g: Nonlinearity) -> DMatrix<f64> {
    let n_obs = z.nrows() as f64;
    let mut proj = z * w.transpose();
    let n = w.nrows();
    let mut dmean = vec![0.0; n];
    for (j, mut col) in proj.column_iter_mut().enumerate() {
        let mut acc = 0.0;
        for v in col.iter_mut() {
            let (gv, dg) = match g {
                Nonlinearity::Tanh => {
                    let t = v.tanh();
                    (t, 1.0 - t * t)
                }
                Nonlinearity::Cube => (*v * *v * *v, 3.0 * *v * *v),
            };
            *v = gv;
            acc += dg;
        }
        dmean[j] = acc / n_obs;
    }
    let mut out = proj.transpose() * z / n_obs;
    for i in 0..n {
        for k in 0..n {
            out[(i, k)] -= dmean[i] * w[(i, k)];
        }
    }
    out
}

pub fn fastica(x: &DMatrix<f64>, config: &IcaConfig) -> Result<IcaResult> {
    let (n_obs, n) = x.shape();
    if n_obs < 10 * n {
        return Err(Error::InsufficientData(format!(
            "FastICA needs at least {} observations, got {n_obs}",
            10 * n
        )));
    }
    let white = whiten(x)?;
    let mut w = random_orthogonal(n, config.seed)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let w_new = sym_decorrelate(&update(&white.z, &w, config.nonlinearity))?;
        let overlap = &w_new * w.transpose();
        let min_diag = (0..n).map(|i| overlap[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        w = w_new;
        if min_diag > 1.0 - config.tol {
            converged = true;
            break;
        }
    }
    let w_ica = &w * &white.whitening;
    let a_est = linalg::inverse(&w_ica, "demixing matrix")?;
    let centered = linalg::center_columns(x).0;
    let components = centered * w_ica.transpose();
    Ok(IcaResult {
        w_ica,
        a_est,
        components,
        mean: white.mean,
        iterations,
        converged,
    })
}

/// Differential entropy of one column by histogram plug-in with ⌈√N⌉ bins.
fn histogram_entropy(x: &[f64]) -> f64 {
    let n = x.len();
    let bins = (n as f64).sqrt().ceil() as usize;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let nf = n as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum();
    h + width.ln()
}

/// Dependence score Σ_j Ĥ(z_j) − Ĥ(z), clamped at zero.
///
/// Marginals use histogram entropies; the joint entropy is replaced by the
/// Gaussian bound ½ ln det(2πe Σ̂), so the score is a diagnostic, not a
/// consistent mutual-information estimator.
pub fn mutual_information_estimate(components: &DMatrix<f64>) -> Result<f64> {
    let (n_obs, n) = components.shape();
    if n_obs < 100 {
        return Err(Error::InsufficientData(format!(
            "mutual information needs N >= 100, got {n_obs}"
        )));
    }
    let mut marginal = 0.0;
    for (j, col) in components.column_iter().enumerate() {
        let x: Vec<f64> = col.iter().copied().collect();
        let (m2, _, _) = crate::stats::central_moments(&x);
        if !(m2 > 0.0) {
            return Err(Error::Degenerate(format!("component {j} has zero variance")));
        }
        marginal += histogram_entropy(&x);
    }
    let cov = linalg::covariance(components, 0);
    let (vals, _) = sym_eigen_desc(&cov);
    let floor = f64::EPSILON * vals[0];
    let logdet: f64 = vals.iter().map(|&v| v.max(floor).ln()).sum();
    let joint = 0.5 * (n as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + logdet);
    Ok((marginal - joint).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whiten_diagonal_covariance() {
        // Columns with sample variance exactly 4 and 1, uncorrelated.
        let base = [1.0, -1.0, 1.0, -1.0];
        let other = [1.0, 1.0, -1.0, -1.0];
        let n = 400;
        let x = DMatrix::from_fn(n, 2, |i, j| {
            let s = (n as f64 - 1.0) / n as f64;
            let v = if j == 0 { 2.0 * base[i % 4] } else { other[i % 4] };
            v * s.sqrt()
        });
        let w = whiten(&x).unwrap();
        let v = w.whitening.map(f64::abs);
        assert!((v[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((v[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(v[(0, 1)] < 1e-12 && v[(1, 0)] < 1e-12);
        let cov = linalg::covariance(&w.z, 1);
        assert!((cov - DMatrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn duplicated_column_is_degenerate() {
        let x = DMatrix::from_fn(50, 2, |i, _| ((i * 31) % 7) as f64);
        assert!(matches!(whiten(&x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fastica_needs_enough_rows() {
        let x = DMatrix::from_fn(15, 2, |i, j| (i * (j + 1)) as f64);
        assert!(matches!(
            fastica(&x, &IcaConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn parse_nonlinearity() {
        assert_eq!("cube".parse::<Nonlinearity>().unwrap(), Nonlinearity::Cube);
        assert!("sigmoid".parse::<Nonlinearity>().is_err());
    }
}
