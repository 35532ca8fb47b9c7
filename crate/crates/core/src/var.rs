//! Reduced-form VAR(p) estimation by equation-wise least squares.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::linalg::{least_squares, serde_matrix, serde_vector};

/// y_t = γ + Π₁ y_{t−1} + … + Π_p y_{t−p} + ε_t
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub p: usize,
    pub names: Vec<String>,
    /// Dates of the residual rows (t = p+1..T).
    pub dates: Vec<NaiveDate>,
    #[serde(with = "serde_vector")]
    pub gamma: DVector<f64>,
    #[serde(with = "serde_matrix::vec")]
    pub pi: Vec<DMatrix<f64>>,
    #[serde(with = "serde_matrix")]
    pub residuals: DMatrix<f64>,
    /// Residual covariance with divisor T_eff.
    #[serde(with = "serde_matrix")]
    pub sigma: DMatrix<f64>,
    /// OLS standard errors laid out like `pi`.
    #[serde(with = "serde_matrix::vec")]
    pub pi_std_err: Vec<DMatrix<f64>>,
}

impl VarModel {
    pub fn nvars(&self) -> usize {
        self.gamma.len()
    }

    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    /// One-step prediction of row `t` of `y` (t ≥ p) without the residual.
    pub fn predict_row(&self, y: &DMatrix<f64>, t: usize) -> DVector<f64> {
        let mut out = self.gamma.clone();
        for (h, pi) in self.pi.iter().enumerate() {
            let lagged = y.row(t - h - 1).transpose();
            out += pi * lagged;
        }
        out
    }

    /// Fitted values for rows p..T of `y`.
    pub fn fitted(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.nvars();
        let t_eff = y.nrows() - self.p;
        let mut out = DMatrix::zeros(t_eff, n);
        for r in 0..t_eff {
            out.set_row(r, &self.predict_row(y, r + self.p).transpose());
        }
        out
    }

    /// Companion matrix of the lag polynomial (np × np).
    pub fn companion(&self) -> DMatrix<f64> {
        companion_matrix(&self.pi)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.pi)
    }
}

pub fn companion_matrix(pi: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = pi.len();
    let n = pi.first().map_or(0, |m| m.nrows());
    let mut c = DMatrix::zeros(n * p, n * p);
    for (h, m) in pi.iter().enumerate() {
        c.view_mut((0, h * n), (n, n)).copy_from(m);
    }
    for i in n..n * p {
        c[(i, i - n)] = 1.0;
    }
    c
}

/// Largest modulus among the companion eigenvalues.
pub fn spectral_radius(pi: &[DMatrix<f64>]) -> f64 {
    if pi.is_empty() {
        return 0.0;
    }
    companion_matrix(pi)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Regressor matrix [1, y_{t−1}, …, y_{t−p}] for rows t = start..T.
fn design(y: &DMatrix<f64>, p: usize, start: usize) -> DMatrix<f64> {
    let (t_all, n) = y.shape();
    DMatrix::from_fn(t_all - start, 1 + n * p, |r, c| {
        if c == 0 {
            1.0
        } else {
            let h = 1 + (c - 1) / n;
            let j = (c - 1) % n;
            y[(start + r - h, j)]
        }
    })
}

struct RawFit {
    gamma: DVector<f64>,
    pi: Vec<DMatrix<f64>>,
    pi_se: Vec<DMatrix<f64>>,
    resid: DMatrix<f64>,
}

fn fit_raw(y: &DMatrix<f64>, p: usize, start: usize) -> Result<RawFit> {
    let (t_all, n) = y.shape();
    let x = design(y, p, start);
    let resp = y.rows(start, t_all - start).clone_owned();
    let fit = least_squares(&x, &resp)?;
    let dof = (x.nrows() as f64 - x.ncols() as f64).max(1.0);
    let s2: Vec<f64> = fit
        .resid
        .column_iter()
        .map(|c| c.norm_squared() / dof)
        .collect();
    let gamma = fit.coef.row(0).transpose();
    let pi = (0..p)
        .map(|h| DMatrix::from_fn(n, n, |i, j| fit.coef[(1 + h * n + j, i)]))
        .collect();
    let pi_se = (0..p)
        .map(|h| {
            DMatrix::from_fn(n, n, |i, j| {
                let k = 1 + h * n + j;
                (s2[i] * fit.xtx_inv[(k, k)]).sqrt()
            })
        })
        .collect();
    Ok(RawFit {
        gamma,
        pi,
        pi_se,
        resid: fit.resid,
    })
}

fn check_estimable(t_all: usize, n: usize, p: usize, slack: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::InvalidArgument("VAR lag order must be at least 1".into()));
    }
    if t_all <= n * p + n + slack {
        return Err(Error::InsufficientData(format!(
            "{t_all} observations are too few for a {n}-variable VAR({p})"
        )));
    }
    Ok(())
}

pub fn fit_var(panel: &Panel, p: usize) -> Result<VarModel> {
    let (t_all, n) = panel.values.shape();
    check_estimable(t_all, n, p, 1)?;
    let raw = fit_raw(&panel.values, p, p)?;
    let t_eff = raw.resid.nrows() as f64;
    let sigma = raw.resid.transpose() * &raw.resid / t_eff;
    Ok(VarModel {
        p,
        names: panel.names.clone(),
        dates: panel.dates[p..].to_vec(),
        gamma: raw.gamma,
        pi: raw.pi,
        residuals: raw.resid,
        sigma,
        pi_std_err: raw.pi_se,
    })
}

/// SIC of every VAR(p), p = 1..=max_p, on the sample shared by all candidates.
pub fn var_sic_profile(panel: &Panel, max_p: usize) -> Result<Vec<f64>> {
    let (t_all, n) = panel.values.shape();
    check_estimable(t_all, n, max_p, 10)?;
    (1..=max_p)
        .map(|p| {
            let raw = fit_raw(&panel.values, p, max_p)?;
            let t_eff = raw.resid.nrows() as f64;
            let sigma = raw.resid.transpose() * &raw.resid / t_eff;
            let det = sigma.determinant();
            if !(det > 0.0) {
                return Err(Error::Degenerate(format!(
                    "residual covariance at lag {p} is singular"
                )));
            }
            Ok(det.ln() + (p * n * n) as f64 * t_eff.ln() / t_eff)
        })
        .collect()
}

pub fn select_var_lag_sic(panel: &Panel, max_p: usize) -> Result<usize> {
    let sic = var_sic_profile(panel, max_p)?;
    Ok(1 + sic
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0))
}
