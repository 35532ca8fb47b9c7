//! Normality and serial-correlation tests for residual series.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, chi2_sf, norm_ppf, norm_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn check_variance(x: &[f64], what: &str) -> Result<()> {
    let (m2, _, _) = stats::central_moments(x);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate(format!("{what}: zero variance")));
    }
    Ok(())
}

/// JB = N/6 · (S² + K²/4) with excess kurtosis K, referred to χ²(2).
pub fn jarque_bera(x: &[f64]) -> Result<TestResult> {
    if x.len() < 8 {
        return Err(Error::UnsupportedSize(format!(
            "Jarque-Bera needs N >= 8, got {}",
            x.len()
        )));
    }
    check_variance(x, "Jarque-Bera")?;
    let (s, k) = stats::skew_kurtosis(x);
    let statistic = x.len() as f64 / 6.0 * (s * s + k * k / 4.0);
    Ok(TestResult {
        statistic,
        p_value: chi2_sf(statistic, 2.0),
    })
}

pub const NORMALITY_MIN_N: usize = 12;
pub const NORMALITY_MAX_N: usize = 5000;

fn check_normality_size(n: usize, test: &str) -> Result<()> {
    if !(NORMALITY_MIN_N..=NORMALITY_MAX_N).contains(&n) {
        return Err(Error::UnsupportedSize(format!(
            "{test} supports {NORMALITY_MIN_N} <= N <= {NORMALITY_MAX_N}, got {n}"
        )));
    }
    Ok(())
}

/// Blom scores Φ⁻¹((i − 3/8)/(n + 1/4)), i = 1..n.
pub fn normal_scores(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| norm_ppf((i as f64 - 0.375) / (nf + 0.25)))
        .collect()
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro–Wilk W with Royston's (1995) coefficient and p-value approximations.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    check_normality_size(n, "Shapiro-Wilk")?;
    check_variance(x, "Shapiro-Wilk")?;
    let xs = stats::sorted(x);
    let m = normal_scores(n);
    let summ2: f64 = m.iter().map(|v| v * v).sum();
    let ssumm2 = summ2.sqrt();
    let u = 1.0 / (n as f64).sqrt();
    let an = -m[0] / ssumm2 + poly(&[0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056], u);
    let an1 =
        -m[1] / ssumm2 + poly(&[0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], u);
    let phi = (summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
        / (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
    let sphi = phi.sqrt();
    let mut a: Vec<f64> = m.iter().map(|v| v / sphi).collect();
    a[n - 1] = an;
    a[n - 2] = an1;
    a[0] = -an;
    a[1] = -an1;

    let mean = stats::mean(&xs);
    let ss: f64 = xs.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = a.iter().zip(&xs).map(|(ai, xi)| ai * xi).sum();
    let w = (num * num / ss).min(1.0);

    let ln_n = (n as f64).ln();
    let mu = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n);
    let sigma = poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp();
    let z = ((1.0 - w).ln() - mu) / sigma;
    Ok(TestResult {
        statistic: w,
        p_value: norm_sf(z),
    })
}

/// Shapiro–Francia W′ (squared correlation with normal scores), Royston (1993) p-value.
pub fn shapiro_francia(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    check_normality_size(n, "Shapiro-Francia")?;
    check_variance(x, "Shapiro-Francia")?;
    let xs = stats::sorted(x);
    let m = normal_scores(n);
    let mx = stats::mean(&xs);
    let mm = stats::mean(&m);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(&m) {
        let (dx, dy) = (a - mx, b - mm);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let w = (sxy * sxy / (sxx * syy)).min(1.0);
    let u = (n as f64).ln();
    let v = u.ln();
    let mu = -1.2725 + 1.0521 * (v - u);
    let sigma = 1.0308 - 0.26758 * (v + 2.0 / u);
    let z = ((1.0 - w).ln() - mu) / sigma;
    Ok(TestResult {
        statistic: w,
        p_value: norm_sf(z),
    })
}

/// Ljung–Box Q over lags 1..=h with `h - fitdf` degrees of freedom.
pub fn ljung_box(x: &[f64], h: usize, fitdf: usize) -> Result<TestResult> {
    let n = x.len();
    if h == 0 || n <= h + 1 {
        return Err(Error::InsufficientData(format!(
            "Ljung-Box with {h} lags needs more than {} observations",
            h + 1
        )));
    }
    if fitdf >= h {
        return Err(Error::InvalidArgument(format!(
            "fitdf {fitdf} leaves no degrees of freedom for {h} lags"
        )));
    }
    check_variance(x, "Ljung-Box")?;
    let nf = n as f64;
    let rho = stats::autocorrelations(x, h);
    let q = nf
        * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(k, r)| r * r / (nf - (k + 1) as f64))
            .sum::<f64>();
    Ok(TestResult {
        statistic: q,
        p_value: chi2_sf(q, (h - fitdf) as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostics {
    pub variable: String,
    /// Excess kurtosis.
    pub kurtosis: f64,
    /// `None` when N lies outside the supported range.
    pub shapiro_wilk_p: Option<f64>,
    pub shapiro_francia_p: Option<f64>,
    pub jarque_bera_p: f64,
    pub ljung_box_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub ljung_box_lag: usize,
    pub columns: Vec<ColumnDiagnostics>,
}

impl DiagnosticsReport {
    /// True when no column rejects normality at `level` by Jarque–Bera.
    pub fn all_gaussian(&self, level: f64) -> bool {
        self.columns.iter().all(|c| c.jarque_bera_p > level)
    }
}

fn optional(r: Result<TestResult>) -> Result<Option<f64>> {
    match r {
        Ok(t) => Ok(Some(t.p_value)),
        Err(Error::UnsupportedSize(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn diagnose(names: &[String], residuals: &DMatrix<f64>, lb_lag: usize) -> Result<DiagnosticsReport> {
    let columns = residuals
        .column_iter()
        .zip(names)
        .map(|(col, name)| {
            let x: Vec<f64> = col.iter().copied().collect();
            Ok(ColumnDiagnostics {
                variable: name.clone(),
                kurtosis: stats::skew_kurtosis(&x).1,
                shapiro_wilk_p: optional(shapiro_wilk(&x))?,
                shapiro_francia_p: optional(shapiro_francia(&x))?,
                jarque_bera_p: jarque_bera(&x)?.p_value,
                ljung_box_p: ljung_box(&x, lb_lag, 0)?.p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        ljung_box_lag: lb_lag,
        columns,
    })
}

/// Ordered sample paired with normal scores, one pair per row, for Q-Q plots.
pub fn qq_points(x: &[f64]) -> Vec<(f64, f64)> {
    normal_scores(x.len())
        .into_iter()
        .zip(stats::sorted(x))
        .collect()
}
