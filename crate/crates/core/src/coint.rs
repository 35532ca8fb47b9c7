//! Johansen trace and maximum-eigenvalue cointegration tests.
//!
//! The deterministic specification is an unrestricted constant in the VECM
//! (linear trends allowed in levels). The effective sample size is the number
//! of rows actually used, T − lag.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::linalg::{least_squares, sym_eigen_desc};

/// Trace critical values [10%, 5%, 1%] indexed by n − r − 1, unrestricted
/// constant case (MacKinnon–Haug–Michelis 1999 values as tabulated by
/// statsmodels; close to Osterwald-Lenum 1992 Table 1).
const TRACE_CV: [[f64; 3]; 12] = [
    [2.7055, 3.8415, 6.6349],
    [13.4294, 15.4943, 19.9349],
    [27.0669, 29.7961, 35.4628],
    [44.4929, 47.8545, 54.6815],
    [65.8202, 69.8189, 77.8202],
    [91.1090, 95.7542, 104.9637],
    [120.3673, 125.6185, 135.9825],
    [153.6341, 159.5290, 171.0905],
    [190.8714, 197.3772, 210.0366],
    [232.1030, 239.2468, 253.2526],
    [277.3740, 285.1402, 300.2821],
    [326.5354, 334.9795, 351.2150],
];

/// Maximum-eigenvalue critical values [10%, 5%, 1%], same layout.
const MAXEIG_CV: [[f64; 3]; 12] = [
    [2.7055, 3.8415, 6.6349],
    [12.2971, 14.2639, 18.5200],
    [18.8928, 21.1314, 25.8650],
    [25.1236, 27.5858, 32.7172],
    [31.2379, 33.8777, 39.3693],
    [37.2786, 40.0763, 45.8662],
    [43.2947, 46.2299, 52.3069],
    [49.2855, 52.3622, 58.6634],
    [55.2412, 58.4332, 64.9960],
    [61.2041, 64.5040, 71.2525],
    [67.1307, 70.5392, 77.4877],
    [73.0563, 76.5734, 83.7105],
];

pub const MAX_DIMENSION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deterministic {
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCritical {
    #[serde(rename = "10%")]
    pub ten: f64,
    #[serde(rename = "5%")]
    pub five: f64,
    #[serde(rename = "1%")]
    pub one: f64,
}

impl LevelCritical {
    fn from_row(r: [f64; 3]) -> Self {
        LevelCritical {
            ten: r[0],
            five: r[1],
            one: r[2],
        }
    }

    pub fn at(&self, level: f64) -> Result<f64> {
        match level {
            l if (l - 0.10).abs() < 1e-12 => Ok(self.ten),
            l if (l - 0.05).abs() < 1e-12 => Ok(self.five),
            l if (l - 0.01).abs() < 1e-12 => Ok(self.one),
            _ => Err(Error::InvalidArgument(format!(
                "significance level {level} not tabulated (use 0.10, 0.05 or 0.01)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointReport {
    pub names: Vec<String>,
    pub lag: usize,
    pub nobs: usize,
    pub det_spec: Deterministic,
    pub level: f64,
    pub eigenvalues: Vec<f64>,
    pub trace_stats: Vec<f64>,
    pub maxeig_stats: Vec<f64>,
    pub trace_critical: Vec<LevelCritical>,
    pub maxeig_critical: Vec<LevelCritical>,
    /// Rank chosen by the sequential trace test.
    pub selected_rank: usize,
    /// Rank chosen by the sequential maximum-eigenvalue test.
    pub maxeig_rank: usize,
}

/// Sequential rule: the smallest r whose null "rank <= r" is not rejected.
fn sequential_rank(stats: &[f64], crit: &[LevelCritical], level: f64) -> Result<usize> {
    for (r, (s, c)) in stats.iter().zip(crit).enumerate() {
        if *s <= c.at(level)? {
            return Ok(r);
        }
    }
    Ok(stats.len())
}

pub fn johansen_test(panel: &Panel, lag: usize, det_spec: Deterministic) -> Result<CointReport> {
    johansen_test_at(panel, lag, det_spec, 0.05)
}

/// Johansen test with the rank decided at `level` (0.10, 0.05 or 0.01).
pub fn johansen_test_at(
    panel: &Panel,
    lag: usize,
    det_spec: Deterministic,
    level: f64,
) -> Result<CointReport> {
    let (t_all, n) = panel.values.shape();
    if lag < 1 {
        return Err(Error::InvalidArgument("Johansen lag must be at least 1".into()));
    }
    if n > MAX_DIMENSION {
        return Err(Error::UnsupportedSize(format!(
            "{n} variables exceed the {MAX_DIMENSION}-variable critical-value table"
        )));
    }
    if t_all <= n * lag + n + 10 {
        return Err(Error::InsufficientData(format!(
            "{t_all} observations for {n} variables at lag {lag}"
        )));
    }
    let y = &panel.values;
    let t_eff = t_all - lag;
    let ndl = lag - 1;
    // Rows correspond to t = lag..t_all-1 (0-based).
    let z0 = DMatrix::from_fn(t_eff, n, |r, j| {
        let t = lag + r;
        y[(t, j)] - y[(t - 1, j)]
    });
    let z1 = DMatrix::from_fn(t_eff, n, |r, j| y[(lag + r - 1, j)]);
    let z2 = DMatrix::from_fn(t_eff, 1 + n * ndl, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let t = lag + r;
        let l = 1 + (c - 1) / n;
        let j = (c - 1) % n;
        y[(t - l, j)] - y[(t - l - 1, j)]
    });
    let r0 = least_squares(&z2, &z0)?.resid;
    let r1 = least_squares(&z2, &z1)?.resid;
    let tf = t_eff as f64;
    let s00 = r0.transpose() * &r0 / tf;
    let s01 = r0.transpose() * &r1 / tf;
    let s11 = r1.transpose() * &r1 / tf;

    let rank_err = |what: &str| Error::RankDeficient(format!("{what} is singular"));
    let s00_inv = s00
        .clone()
        .cholesky()
        .ok_or_else(|| rank_err("S00"))?
        .inverse();
    let l11 = s11.clone().cholesky().ok_or_else(|| rank_err("S11"))?.l();
    let l11_inv = l11
        .clone()
        .try_inverse()
        .ok_or_else(|| rank_err("S11 factor"))?;
    let m = &l11_inv * s01.transpose() * &s00_inv * &s01 * l11_inv.transpose();
    let (vals, _) = sym_eigen_desc(&m);
    let eigenvalues: Vec<f64> = vals.iter().map(|v| v.clamp(0.0, 1.0 - 1e-15)).collect();

    let log_terms: Vec<f64> = eigenvalues.iter().map(|l| -tf * (1.0 - l).ln()).collect();
    let maxeig_stats = log_terms.clone();
    let mut trace_stats = vec![0.0; n];
    let mut acc = 0.0;
    for r in (0..n).rev() {
        acc += log_terms[r];
        trace_stats[r] = acc;
    }
    let trace_critical: Vec<LevelCritical> = (0..n)
        .map(|r| LevelCritical::from_row(TRACE_CV[n - r - 1]))
        .collect();
    let maxeig_critical: Vec<LevelCritical> = (0..n)
        .map(|r| LevelCritical::from_row(MAXEIG_CV[n - r - 1]))
        .collect();
    Ok(CointReport {
        names: panel.names.clone(),
        lag,
        nobs: t_eff,
        det_spec,
        level,
        selected_rank: sequential_rank(&trace_stats, &trace_critical, level)?,
        maxeig_rank: sequential_rank(&maxeig_stats, &maxeig_critical, level)?,
        eigenvalues,
        trace_stats,
        maxeig_stats,
        trace_critical,
        maxeig_critical,
    })
}
