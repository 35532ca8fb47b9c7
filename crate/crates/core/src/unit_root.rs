//! Augmented Dickey–Fuller tests.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdfSpec {
    Constant,
    Trend,
}

impl AdfSpec {
    fn deterministic_terms(self) -> usize {
        match self {
            AdfSpec::Constant => 1,
            AdfSpec::Trend => 2,
        }
    }

    /// Asymptotic critical values at 1%, 5% and 10% (MacKinnon 1991/2010
    /// response surfaces evaluated at T = ∞, rounded to two decimals).
    pub fn critical_values(self) -> CriticalValues {
        match self {
            AdfSpec::Constant => CriticalValues {
                one: -3.43,
                five: -2.86,
                ten: -2.57,
            },
            AdfSpec::Trend => CriticalValues {
                one: -3.96,
                five: -3.41,
                ten: -3.13,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    #[serde(rename = "1%")]
    pub one: f64,
    #[serde(rename = "5%")]
    pub five: f64,
    #[serde(rename = "10%")]
    pub ten: f64,
}

impl CriticalValues {
    /// Smallest significance level whose critical value exceeds `stat` (left-tailed).
    pub fn reject_at(&self, stat: f64) -> Option<f64> {
        [(0.01, self.one), (0.05, self.five), (0.10, self.ten)]
            .into_iter()
            .find(|&(_, cv)| stat < cv)
            .map(|(level, _)| level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfReport {
    pub variable: String,
    pub lag: usize,
    pub spec: AdfSpec,
    pub nobs: usize,
    pub statistic: f64,
    pub critical_values: CriticalValues,
    pub reject_at: Option<f64>,
}

struct AdfFit {
    statistic: f64,
    ssr: f64,
    nobs: usize,
    ncoef: usize,
}

/// Fits the ADF regression at `lag`, using differences from index `start` on
/// (so several lags can share one effective sample).
fn adf_regression(y: &[f64], lag: usize, start: usize, spec: AdfSpec) -> Result<AdfFit> {
    debug_assert!(start >= lag);
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    if dy.len() <= start {
        return Err(Error::InsufficientData(format!(
            "series of length {} too short for lag {lag}",
            y.len()
        )));
    }
    let nobs = dy.len() - start;
    let det = spec.deterministic_terms();
    let ncoef = det + 1 + lag;
    if nobs <= ncoef {
        return Err(Error::InsufficientData(format!(
            "{nobs} usable observations for {ncoef} coefficients"
        )));
    }
    let rho_col = det;
    let x = DMatrix::from_fn(nobs, ncoef, |r, c| {
        let t = start + r;
        match c {
            0 => 1.0,
            1 if spec == AdfSpec::Trend => (t + 1) as f64,
            c if c == rho_col => y[t],
            c => dy[t - (c - rho_col)],
        }
    });
    let resp = DMatrix::from_fn(nobs, 1, |r, _| dy[start + r]);
    let fit = least_squares(&x, &resp)?;
    let ssr = fit.resid.norm_squared();
    let s2 = ssr / (nobs - ncoef) as f64;
    let se = (s2 * fit.xtx_inv[(rho_col, rho_col)]).sqrt();
    if !(se > 0.0) {
        return Err(Error::Degenerate("zero residual variance in ADF regression".into()));
    }
    Ok(AdfFit {
        statistic: fit.coef[(rho_col, 0)] / se,
        ssr,
        nobs,
        ncoef,
    })
}

fn check_finite(y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Degenerate("series contains non-finite values".into()))
    }
}

/// Schwarz criterion of every candidate lag in `0..=max_lag`, all fitted on the
/// sample that starts after `max_lag` differences.
pub fn sic_profile(y: &[f64], max_lag: usize, spec: AdfSpec) -> Result<Vec<f64>> {
    check_finite(y)?;
    if y.len() <= max_lag + 10 {
        return Err(Error::InsufficientData(format!(
            "series of length {} needs more than {} observations for max lag {max_lag}",
            y.len(),
            max_lag + 10
        )));
    }
    (0..=max_lag)
        .map(|lag| {
            let fit = adf_regression(y, lag, max_lag, spec)?;
            let n = fit.nobs as f64;
            Ok((fit.ssr / n).ln() + fit.ncoef as f64 * n.ln() / n)
        })
        .collect()
}

pub fn select_lag_sic(y: &[f64], max_lag: usize, spec: AdfSpec) -> Result<usize> {
    let sic = sic_profile(y, max_lag, spec)?;
    Ok(sic
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0))
}

fn report(variable: &str, lag: usize, spec: AdfSpec, fit: AdfFit) -> AdfReport {
    let cv = spec.critical_values();
    AdfReport {
        variable: variable.to_string(),
        lag,
        spec,
        nobs: fit.nobs,
        statistic: fit.statistic,
        critical_values: cv,
        reject_at: cv.reject_at(fit.statistic),
    }
}

/// ADF test at a fixed lag on the largest sample that lag allows.
pub fn adf_test(variable: &str, y: &[f64], lag: usize, spec: AdfSpec) -> Result<AdfReport> {
    check_finite(y)?;
    let fit = adf_regression(y, lag, lag, spec)?;
    Ok(report(variable, lag, spec, fit))
}

/// ADF test at `lag` on the common sample used by lag selection up to `max_lag`.
pub fn adf_test_common_sample(
    variable: &str,
    y: &[f64],
    lag: usize,
    max_lag: usize,
    spec: AdfSpec,
) -> Result<AdfReport> {
    check_finite(y)?;
    if lag > max_lag {
        return Err(Error::InvalidArgument(format!("lag {lag} exceeds max lag {max_lag}")));
    }
    let fit = adf_regression(y, lag, max_lag, spec)?;
    Ok(report(variable, lag, spec, fit))
}

/// Selects the lag by SIC, then tests at that lag.
pub fn adf_auto(variable: &str, y: &[f64], max_lag: usize, spec: AdfSpec) -> Result<AdfReport> {
    let lag = select_lag_sic(y, max_lag, spec)?;
    adf_test(variable, y, lag, spec)
}
