//! Structural impulse responses: theta_h = Φ_h (I − B₀)⁻¹ with Φ the MA
//! coefficients of the reduced-form VAR.

use std::io::Write;

use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_fits, percentile_interval, BootstrapConfig, ReplicateFit};
use crate::error::{Error, Result};
use crate::ingest::{slice_period, Panel};
use crate::linalg::{self, serde_matrix};
use crate::stats::sorted;
use crate::svar::{fit_svar_lingam, SvarConfig, SvarLingamModel};

/// Φ₀ = I, Φ_h = Σ_{j=1..min(h,p)} Π_j Φ_{h−j}.
pub fn ma_coefficients(pi: &[DMatrix<f64>], horizon: usize) -> Vec<DMatrix<f64>> {
    let n = pi.first().map_or(0, |m| m.nrows());
    let mut phi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    phi.push(DMatrix::identity(n, n));
    for h in 1..=horizon {
        let mut acc = DMatrix::zeros(n, n);
        for j in 1..=h.min(pi.len()) {
            acc += &pi[j - 1] * &phi[h - j];
        }
        phi.push(acc);
    }
    phi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShockScaling {
    /// One unit of the structural shock.
    #[default]
    Unit,
    /// One standard deviation of the structural shock.
    StdDev,
}

impl std::str::FromStr for ShockScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(ShockScaling::Unit),
            "sd" | "stddev" => Ok(ShockScaling::StdDev),
            other => Err(Error::Config(format!("unknown shock scaling '{other}' (unit|sd)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfBands {
    pub iterations: usize,
    pub dropped: usize,
    pub seed: u64,
    #[serde(with = "serde_matrix::vec")]
    pub lower: Vec<DMatrix<f64>>,
    #[serde(with = "serde_matrix::vec")]
    pub upper: Vec<DMatrix<f64>>,
    /// Bootstrap standard deviation per cell.
    #[serde(with = "serde_matrix::vec")]
    pub std_err: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub names: Vec<String>,
    pub horizon: usize,
    pub scaling: ShockScaling,
    /// Band coverage; meaningful only when `bands` is present.
    pub level: f64,
    /// theta[h][(i, j)]: response of variable i at horizon h to a shock in j.
    #[serde(with = "serde_matrix::vec")]
    pub theta: Vec<DMatrix<f64>>,
    pub bands: Option<IrfBands>,
}

impl IrfResult {
    /// Long format: horizon, shock, response, point, lower, upper.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["horizon", "shock", "response", "point", "lower", "upper"])?;
        let n = self.names.len();
        for (h, th) in self.theta.iter().enumerate() {
            for j in 0..n {
                for i in 0..n {
                    let (lo, hi) = match &self.bands {
                        Some(b) => (b.lower[h][(i, j)].to_string(), b.upper[h][(i, j)].to_string()),
                        None => (String::new(), String::new()),
                    };
                    wr.write_record([
                        h.to_string(),
                        self.names[j].clone(),
                        self.names[i].clone(),
                        th[(i, j)].to_string(),
                        lo,
                        hi,
                    ])?;
                }
            }
        }
        wr.flush().map_err(|e| Error::io("irf csv", e))?;
        Ok(())
    }
}

fn theta_from(
    pi: &[DMatrix<f64>],
    b0: &DMatrix<f64>,
    shock_sd: Option<&[f64]>,
    horizon: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let n = b0.nrows();
    let mut impact = linalg::inverse(&(DMatrix::identity(n, n) - b0), "I - B0")?;
    if let Some(sd) = shock_sd {
        for (j, s) in sd.iter().enumerate() {
            impact.column_mut(j).scale_mut(*s);
        }
    }
    Ok(ma_coefficients(pi, horizon)
        .iter()
        .enumerate()
        .map(|(h, phi)| if h == 0 { impact.clone() } else { phi * &impact })
        .collect())
}

fn replicate_theta(fit: &ReplicateFit, scaling: ShockScaling, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let sd: Vec<f64> = fit.shock_sd.iter().copied().collect();
    let sd = (scaling == ShockScaling::StdDev).then_some(sd.as_slice());
    theta_from(&fit.pi, &fit.b[0], sd, horizon)
}

/// Point IRF for unit structural shocks.
pub fn structural_irf(model: &SvarLingamModel, horizon: usize) -> Result<IrfResult> {
    structural_irf_scaled(model, horizon, ShockScaling::Unit)
}

pub fn structural_irf_scaled(model: &SvarLingamModel, horizon: usize, scaling: ShockScaling) -> Result<IrfResult> {
    let fit = ReplicateFit::of(model);
    Ok(IrfResult {
        names: model.names.clone(),
        horizon,
        scaling,
        level: 0.0,
        theta: replicate_theta(&fit, scaling, horizon)?,
        bands: None,
    })
}

/// Point IRF plus equal-tailed percentile bands from the residual bootstrap.
/// Bands are widened where needed so the point estimate lies inside them.
pub fn irf_bootstrap_bands(
    model: &SvarLingamModel,
    panel: &Panel,
    horizon: usize,
    level: f64,
    config: &BootstrapConfig,
    scaling: ShockScaling,
) -> Result<IrfResult> {
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("band level must lie in (0.5, 1), got {level}")));
    }
    let (fits, dropped) = bootstrap_fits(model, panel, config)?;
    irf_bands_from_fits(model, &fits, dropped, horizon, level, config, scaling)
}

/// Band construction from replicates already produced by [`bootstrap_fits`].
pub fn irf_bands_from_fits(
    model: &SvarLingamModel,
    fits: &[ReplicateFit],
    dropped: usize,
    horizon: usize,
    level: f64,
    config: &BootstrapConfig,
    scaling: ShockScaling,
) -> Result<IrfResult> {
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("band level must lie in (0.5, 1), got {level}")));
    }
    let mut point = structural_irf_scaled(model, horizon, scaling)?;
    let thetas: Vec<Vec<DMatrix<f64>>> = fits
        .iter()
        .filter_map(|f| replicate_theta(f, scaling, horizon).ok())
        .collect();
    let dropped = dropped + fits.len() - thetas.len();
    if thetas.is_empty() {
        return Err(Error::Reliability {
            dropped,
            total: config.iterations,
        });
    }
    let n = model.nvars();
    let mut lower = Vec::with_capacity(horizon + 1);
    let mut upper = Vec::with_capacity(horizon + 1);
    let mut std_err = Vec::with_capacity(horizon + 1);
    for h in 0..=horizon {
        let mut lo = DMatrix::zeros(n, n);
        let mut hi = DMatrix::zeros(n, n);
        let mut se = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let draws: Vec<f64> = thetas.iter().map(|t| t[h][(i, j)]).collect();
                let iv = percentile_interval(&sorted(&draws), level);
                let pt = point.theta[h][(i, j)];
                lo[(i, j)] = iv.lower.min(pt);
                hi[(i, j)] = iv.upper.max(pt);
                se[(i, j)] = if draws.len() > 1 {
                    crate::stats::sample_variance(&draws).max(0.0).sqrt()
                } else {
                    0.0
                };
            }
        }
        lower.push(lo);
        upper.push(hi);
        std_err.push(se);
    }
    point.level = level;
    point.bands = Some(IrfBands {
        iterations: config.iterations,
        dropped,
        seed: config.seed,
        lower,
        upper,
        std_err,
    });
    Ok(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrfConfig {
    pub svar: SvarConfig,
    pub scaling: ShockScaling,
    /// Bootstrap settings for bands; `None` gives point IRFs only.
    pub bootstrap: Option<BootstrapConfig>,
    pub level: f64,
}

impl Default for IrfConfig {
    fn default() -> Self {
        IrfConfig {
            svar: SvarConfig::default(),
            scaling: ShockScaling::Unit,
            bootstrap: None,
            level: 0.99,
        }
    }
}

fn irf_for(panel: &Panel, p: usize, horizon: usize, config: &IrfConfig) -> Result<IrfResult> {
    let model = fit_svar_lingam(panel, p, &config.svar)?;
    match &config.bootstrap {
        Some(b) => {
            let mut b = *b;
            b.svar = config.svar;
            irf_bootstrap_bands(&model, panel, horizon, config.level, &b, config.scaling)
        }
        None => structural_irf_scaled(&model, horizon, config.scaling),
    }
}

fn sub_panel(panel: &Panel, start: NaiveDate, end: NaiveDate, p: usize, label: &str) -> Result<Panel> {
    let insufficient = || {
        Error::InsufficientData(format!(
            "{label} subperiod {start}..{end} has too few observations for lag {p}"
        ))
    };
    if start > end {
        return Err(insufficient());
    }
    let sub = slice_period(panel, start, end).map_err(|_| insufficient())?;
    // Intercept plus p·n lag coefficients per equation, and some residual dof.
    if sub.nobs() < p * (sub.nvars() + 1) + sub.nvars() + 2 {
        return Err(insufficient());
    }
    Ok(sub)
}

/// IRFs for the whole sample, the first subperiod (up to and including
/// `split_date`) and the second subperiod (after it).
pub fn compare_subperiods(
    panel: &Panel,
    split_date: NaiveDate,
    p: usize,
    horizon: usize,
    config: &IrfConfig,
) -> Result<(IrfResult, IrfResult, IrfResult)> {
    let (Some(&first_date), Some(&last_date)) = (panel.dates.first(), panel.dates.last()) else {
        return Err(Error::EmptyInput("panel".into()));
    };
    let first = sub_panel(panel, first_date, split_date, p, "first")?;
    let second_start = split_date.checked_add_days(Days::new(1)).unwrap_or(split_date);
    let second = sub_panel(panel, second_start, last_date, p, "second")?;
    Ok((
        irf_for(panel, p, horizon, config)?,
        irf_for(&first, p, horizon, config)?,
        irf_for(&second, p, horizon, config)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_recursion() {
        let phi = ma_coefficients(&[DMatrix::identity(2, 2) * 0.5], 2);
        assert!((&phi[1] - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert!((&phi[2] - DMatrix::identity(2, 2) * 0.25).amax() < 1e-15);
        assert_eq!(ma_coefficients(&[DMatrix::identity(3, 3)], 0), vec![DMatrix::identity(3, 3)]);
    }

    #[test]
    fn impact_is_inverse() {
        let b0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let th = theta_from(&[DMatrix::identity(2, 2) * 0.9], &b0, None, 3).unwrap();
        assert_eq!(th[0], DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let scaled = theta_from(&[DMatrix::identity(2, 2) * 0.9], &b0, Some(&[2.0, 2.0]), 3).unwrap();
        for h in 0..=3 {
            assert!((&scaled[h] - &th[h] * 2.0).amax() < 1e-12);
        }
    }

    #[test]
    fn parse_scaling() {
        assert_eq!("sd".parse::<ShockScaling>().unwrap(), ShockScaling::StdDev);
        assert!("x".parse::<ShockScaling>().is_err());
    }
}
