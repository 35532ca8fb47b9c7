//! Residual-resampling bootstrap for SVAR-LiNGAM coefficients.
//!
//! Each replicate resamples VAR residual rows with replacement, rebuilds the
//! series recursively from the observed first p rows, and refits the pipeline.
//! Replicate `i` draws from its own ChaCha stream of the master seed, so the
//! result does not depend on scheduling.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::stats::{quantile_sorted, sorted};
use crate::svar::{fit_svar_lingam, fit_svar_with_order, SvarConfig, SvarLingamModel};

pub const MIN_ITERATIONS: usize = 100;
/// Share of failed replicates above which the bootstrap is rejected.
pub const MAX_DROP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Re-run ICA-LiNGAM in every replicate instead of holding the order fixed.
    pub rediscover_order: bool,
    pub svar: SvarConfig,
}

impl BootstrapConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        BootstrapConfig {
            iterations,
            seed,
            rediscover_order: false,
            svar: SvarConfig::default(),
        }
    }
}

/// Coefficients kept from one bootstrap refit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub b: Vec<DMatrix<f64>>,
    pub pi: Vec<DMatrix<f64>>,
    pub shock_sd: DVector<f64>,
}

impl ReplicateFit {
    fn from_model(m: &SvarLingamModel) -> Self {
        let n_obs = m.shocks.nrows() as f64;
        let shock_sd = DVector::from_iterator(
            m.nvars(),
            m.shocks.column_iter().map(|c| {
                let mean = c.sum() / n_obs;
                (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_obs).sqrt()
            }),
        );
        ReplicateFit {
            b: m.b.clone(),
            pi: m.var.pi.clone(),
            shock_sd,
        }
    }

    pub fn of(model: &SvarLingamModel) -> Self {
        Self::from_model(model)
    }
}

/// RNG for replicate `index`: the master seed with a per-replicate stream.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Rebuilds a panel from resampled residual rows of the model's VAR.
pub fn resample_panel<R: Rng + ?Sized>(model: &SvarLingamModel, panel: &Panel, rng: &mut R) -> Panel {
    let var = &model.var;
    let p = var.p;
    let (t_all, n) = panel.values.shape();
    let t_eff = var.residuals.nrows();
    let mut y = DMatrix::zeros(t_all, n);
    y.rows_mut(0, p).copy_from(&panel.values.rows(0, p));
    for t in p..t_all {
        let k = rng.random_range(0..t_eff);
        let row = var.predict_row(&y, t) + var.residuals.row(k).transpose();
        y.set_row(t, &row.transpose());
    }
    Panel {
        names: panel.names.clone(),
        dates: panel.dates.clone(),
        values: y,
    }
}

/// Runs all replicates; returns the successful fits and the number dropped.
pub fn bootstrap_fits(
    model: &SvarLingamModel,
    panel: &Panel,
    config: &BootstrapConfig,
) -> Result<(Vec<ReplicateFit>, usize)> {
    if config.iterations < MIN_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least {MIN_ITERATIONS} iterations, got {}",
            config.iterations
        )));
    }
    if panel.nobs() != model.var.residuals.nrows() + model.p || panel.nvars() != model.nvars() {
        return Err(Error::InvalidArgument("panel does not match the fitted model".into()));
    }
    let results: Vec<Option<ReplicateFit>> = (0..config.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(config.seed, i);
            let sample = resample_panel(model, panel, &mut rng);
            let fit = if config.rediscover_order {
                let mut svar = config.svar;
                svar.ica.seed = rng.random();
                fit_svar_lingam(&sample, model.p, &svar)
            } else {
                fit_svar_with_order(&sample, model.p, &model.order, &config.svar)
            };
            match fit {
                Ok(m) => Some(ReplicateFit::from_model(&m)),
                Err(e) => {
                    log::debug!("bootstrap replicate {i} dropped: {e}");
                    None
                }
            }
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count();
    if dropped as f64 > MAX_DROP_FRACTION * config.iterations as f64 {
        return Err(Error::Reliability {
            dropped,
            total: config.iterations,
        });
    }
    Ok((results.into_iter().flatten().collect(), dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Equal-tailed percentile interval at `level` from an ascending sample.
pub fn percentile_interval(sorted_draws: &[f64], level: f64) -> Interval {
    let alpha = 1.0 - level;
    Interval {
        lower: quantile_sorted(sorted_draws, alpha / 2.0),
        upper: quantile_sorted(sorted_draws, 1.0 - alpha / 2.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    /// Lag h (0 = instantaneous).
    pub lag: usize,
    /// Equation (effect) index i and regressor (cause) index j.
    pub row: usize,
    pub col: usize,
    pub estimate: f64,
    pub std_err: f64,
    pub ci90: Interval,
    pub ci95: Interval,
    pub ci99: Interval,
    pub stars: String,
}

impl CoefficientSummary {
    pub fn significant_at(&self, level: f64) -> bool {
        if level >= 0.10 - 1e-12 {
            self.ci90.excludes_zero()
        } else if level >= 0.05 - 1e-12 {
            self.ci95.excludes_zero()
        } else {
            self.ci99.excludes_zero()
        }
    }
}

pub fn stars(ci90: &Interval, ci95: &Interval, ci99: &Interval) -> String {
    if ci99.excludes_zero() {
        "***"
    } else if ci95.excludes_zero() {
        "**"
    } else if ci90.excludes_zero() {
        "*"
    } else {
        ""
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub iterations: usize,
    pub dropped: usize,
    pub seed: u64,
    pub rediscover_order: bool,
    pub names: Vec<String>,
    pub p: usize,
    pub coefficients: Vec<CoefficientSummary>,
}

impl BootstrapSummary {
    pub fn get(&self, lag: usize, row: usize, col: usize) -> Option<&CoefficientSummary> {
        let n = self.names.len();
        self.coefficients.get(lag * n * n + row * n + col)
    }

    /// Long-format table: one row per coefficient.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "matrix", "lag", "equation", "regressor", "estimate", "std_err", "lower90", "upper90",
            "lower95", "upper95", "lower99", "upper99", "stars",
        ])?;
        for c in &self.coefficients {
            wr.write_record([
                format!("B{}", c.lag),
                c.lag.to_string(),
                self.names[c.row].clone(),
                self.names[c.col].clone(),
                c.estimate.to_string(),
                c.std_err.to_string(),
                c.ci90.lower.to_string(),
                c.ci90.upper.to_string(),
                c.ci95.lower.to_string(),
                c.ci95.upper.to_string(),
                c.ci99.lower.to_string(),
                c.ci99.upper.to_string(),
                c.stars.clone(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("bootstrap csv", e))?;
        Ok(())
    }
}

fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    crate::stats::sample_variance(x).max(0.0).sqrt()
}

pub fn summarize(
    model: &SvarLingamModel,
    fits: &[ReplicateFit],
    dropped: usize,
    config: &BootstrapConfig,
) -> BootstrapSummary {
    let n = model.nvars();
    let mut coefficients = Vec::with_capacity((model.p + 1) * n * n);
    for lag in 0..=model.p {
        for row in 0..n {
            for col in 0..n {
                let draws: Vec<f64> = fits.iter().map(|f| f.b[lag][(row, col)]).collect();
                let s = sorted(&draws);
                let ci90 = percentile_interval(&s, 0.90);
                let ci95 = percentile_interval(&s, 0.95);
                let ci99 = percentile_interval(&s, 0.99);
                coefficients.push(CoefficientSummary {
                    lag,
                    row,
                    col,
                    estimate: model.b[lag][(row, col)],
                    std_err: std_dev(&draws),
                    stars: stars(&ci90, &ci95, &ci99),
                    ci90,
                    ci95,
                    ci99,
                });
            }
        }
    }
    BootstrapSummary {
        iterations: config.iterations,
        dropped,
        seed: config.seed,
        rediscover_order: config.rediscover_order,
        names: model.names.clone(),
        p: model.p,
        coefficients,
    }
}

/// Percentile intervals and stars for every B_h entry.
pub fn bootstrap_significance(
    model: &SvarLingamModel,
    panel: &Panel,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    let (fits, dropped) = bootstrap_fits(model, panel, config)?;
    Ok(summarize(model, &fits, dropped, config))
}
