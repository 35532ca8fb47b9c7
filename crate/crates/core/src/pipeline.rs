//! End-to-end run driven by a TOML config, producing a deterministic report
//! bundle on disk.
//!
//! Config schema (all keys optional unless noted):
//!
//! ```toml
//! panel_csv = "panel.csv"        # prepared panel, or:
//! [[series]]                     # one entry per variable, in column order
//! name = "SPT"
//! path = "eurusd.csv"            # a single price file, or
//! eur = "btc_eur.csv"            # an exchange rate built from two files
//! usd = "btc_usd.csv"
//! ```
//!
//! Remaining top-level keys: `start`, `end`, `date_column`, `value_column`,
//! `weekend_fill`, `log_transform`, `difference`, `lag` (fixed VAR lag; SIC
//! when absent), `max_lag`, `adf_max_lag`, `ljung_box_lag`,
//! `bootstrap_iterations` (0 skips the bootstrap), `rediscover_order`,
//! `significance_level`, `irf_horizon`, `irf_level`, `shock_scaling`,
//! `split_date`, `seed`, `nonlinearity`, `ica_max_iter`, `ica_tol`,
//! `b0_method`, `prune_threshold`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_fits, summarize, BootstrapConfig, BootstrapSummary};
use crate::coint::{johansen_test, CointReport, Deterministic, MAX_DIMENSION};
use crate::diagnostics::{diagnose, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::graph::{export_dot, to_causal_graph, CausalGraph};
use crate::ica::{IcaConfig, Nonlinearity};
use crate::ingest::{
    align_panel, compute_cer, load_price_csv, log_transform, summary_stats, weekend_fill, Panel,
    RawSeries, StatsTable,
};
use crate::irf::{compare_subperiods, irf_bands_from_fits, structural_irf_scaled, IrfConfig, IrfResult, ShockScaling};
use crate::report;
use crate::svar::{fit_svar_lingam, B0Method, SvarConfig, SvarLingamModel};
use crate::unit_root::{adf_auto, AdfReport, AdfSpec};
use crate::var::var_sic_profile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eur: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usd: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel_csv: Option<PathBuf>,
    pub date_column: String,
    pub value_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
    pub weekend_fill: bool,
    pub log_transform: bool,
    pub difference: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    pub max_lag: usize,
    pub adf_max_lag: usize,
    pub ljung_box_lag: usize,
    pub bootstrap_iterations: usize,
    pub rediscover_order: bool,
    pub significance_level: f64,
    pub irf_horizon: usize,
    pub irf_level: f64,
    pub shock_scaling: ShockScaling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_date: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub nonlinearity: Nonlinearity,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub b0_method: B0Method,
    pub prune_threshold: f64,
    pub series: Vec<SeriesSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ica = IcaConfig::default();
        PipelineConfig {
            panel_csv: None,
            date_column: "Date".into(),
            value_column: "Close".into(),
            start: None,
            end: None,
            weekend_fill: true,
            log_transform: true,
            difference: false,
            lag: None,
            max_lag: 8,
            adf_max_lag: 12,
            ljung_box_lag: 10,
            bootstrap_iterations: 1000,
            rediscover_order: false,
            significance_level: 0.05,
            irf_horizon: 20,
            irf_level: 0.99,
            shock_scaling: ShockScaling::Unit,
            split_date: None,
            seed: None,
            nonlinearity: ica.nonlinearity,
            ica_max_iter: ica.max_iter,
            ica_tol: ica.tol,
            b0_method: B0Method::Regression,
            prune_threshold: 0.0,
            series: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative input paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.panel_csv.as_mut() {
            fix(p);
        }
        for s in &mut self.series {
            for p in [&mut s.path, &mut s.eur, &mut s.usd].into_iter().flatten() {
                fix(p);
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.panel_csv.is_some() == !self.series.is_empty() {
            return bad("give exactly one of `panel_csv` or `series`".into());
        }
        for s in &self.series {
            let ok = matches!((&s.path, &s.eur, &s.usd), (Some(_), None, None) | (None, Some(_), Some(_)));
            if !ok {
                return bad(format!("series '{}' needs either `path` or both `eur` and `usd`", s.name));
            }
        }
        if self.lag == Some(0) || self.max_lag == 0 {
            return bad("VAR lag must be at least 1".into());
        }
        if self.bootstrap_iterations != 0 && self.bootstrap_iterations < crate::bootstrap::MIN_ITERATIONS {
            return bad(format!(
                "bootstrap_iterations must be 0 or at least {}",
                crate::bootstrap::MIN_ITERATIONS
            ));
        }
        if !(self.irf_level > 0.5 && self.irf_level < 1.0) {
            return bad(format!("irf_level must lie in (0.5, 1), got {}", self.irf_level));
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return bad(format!("significance_level must lie in (0, 1), got {}", self.significance_level));
        }
        Ok(())
    }

    /// Seed, generating one when the config has none.
    pub fn with_seed(mut self) -> Self {
        if self.seed.is_none() {
            self.seed = Some(rand::rng().random());
        }
        self
    }

    pub fn svar_config(&self) -> SvarConfig {
        SvarConfig {
            ica: IcaConfig {
                nonlinearity: self.nonlinearity,
                max_iter: self.ica_max_iter,
                tol: self.ica_tol,
                seed: self.seed.unwrap_or(0),
            },
            b0_method: self.b0_method,
            prune_threshold: self.prune_threshold,
            ..SvarConfig::default()
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            iterations: self.bootstrap_iterations,
            // Offset so replicate streams never coincide with the ICA seed stream.
            seed: self.seed.unwrap_or(0).wrapping_add(1),
            rediscover_order: self.rediscover_order,
            svar: self.svar_config(),
        }
    }
}

/// Builds the analysis panel from the configured inputs.
pub fn load_panel(cfg: &PipelineConfig) -> Result<Panel> {
    let mut panel = if let Some(p) = &cfg.panel_csv {
        Panel::read_csv_path(p)?
    } else {
        let mut series = Vec::with_capacity(cfg.series.len());
        for s in &cfg.series {
            let load = |p: &PathBuf| load_price_csv(p, &cfg.date_column, &cfg.value_column);
            let mut raw = match (&s.path, &s.eur, &s.usd) {
                (Some(p), _, _) => load(p)?,
                (None, Some(e), Some(u)) => compute_cer(&load(e)?, &load(u)?)?,
                _ => return Err(Error::Config(format!("series '{}' has no input", s.name))),
            };
            raw.name = s.name.clone();
            series.push(raw);
        }
        if cfg.weekend_fill {
            let start = cfg
                .start
                .unwrap_or_else(|| series.iter().map(first_date).max().expect("nonempty"));
            let end = cfg
                .end
                .unwrap_or_else(|| series.iter().map(last_date).max().expect("nonempty"));
            series = series
                .iter()
                .map(|s| weekend_fill(s, start, end))
                .collect::<Result<_>>()?;
        }
        if cfg.log_transform {
            series = series.iter().map(log_transform).collect::<Result<_>>()?;
        }
        align_panel(&series)?
    };
    if cfg.start.is_some() || cfg.end.is_some() {
        let start = cfg.start.unwrap_or(panel.dates[0]);
        let end = cfg.end.unwrap_or(*panel.dates.last().expect("nonempty"));
        panel = crate::ingest::slice_period(&panel, start, end)?;
    }
    Ok(panel)
}

fn first_date(s: &RawSeries) -> NaiveDate {
    s.points[0].0
}

fn last_date(s: &RawSeries) -> NaiveDate {
    s.points[s.points.len() - 1].0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubperiodIrfs {
    pub split_date: NaiveDate,
    pub first: IrfResult,
    pub second: IrfResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config: PipelineConfig,
    pub panel: Panel,
    pub stats: StatsTable,
    pub adf_levels: Vec<AdfReport>,
    pub adf_differences: Vec<AdfReport>,
    /// Absent when the panel has more variables than the critical-value tables cover.
    pub johansen: Option<CointReport>,
    pub var_lag: usize,
    pub var_sic: Vec<f64>,
    pub diagnostics: DiagnosticsReport,
    pub model: SvarLingamModel,
    pub bootstrap: Option<BootstrapSummary>,
    pub irf: IrfResult,
    pub subperiods: Option<SubperiodIrfs>,
    pub graph: CausalGraph,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

/// Runs every stage in memory. The config must carry a seed.
pub fn run(cfg: &PipelineConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    if cfg.seed.is_none() {
        return Err(Error::Config("pipeline run needs a seed".into()));
    }
    let raw = stage("ingest", load_panel(cfg))?;
    let stats = stage("stats", summary_stats(&raw))?;

    let adf_all = |p: &Panel| -> Result<Vec<AdfReport>> {
        (0..p.nvars())
            .map(|j| adf_auto(&p.names[j], &p.column(j), cfg.adf_max_lag, AdfSpec::Constant))
            .collect()
    };
    let adf_levels = stage("adf", adf_all(&raw))?;
    let adf_differences = stage("adf", raw.difference().and_then(|d| adf_all(&d)))?;

    let panel = if cfg.difference {
        stage("ingest", raw.difference())?
    } else {
        raw.clone()
    };

    let var_sic = stage("var", var_sic_profile(&panel, cfg.lag.unwrap_or(cfg.max_lag)))?;
    let var_lag = match cfg.lag {
        Some(p) => p,
        None => {
            var_sic
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i + 1)
                .expect("nonempty profile")
        }
    };

    let johansen = if raw.nvars() <= MAX_DIMENSION {
        Some(stage("johansen", johansen_test(&raw, var_lag, Deterministic::Constant))?)
    } else {
        log::warn!("johansen test skipped: more than {MAX_DIMENSION} variables");
        None
    };

    let svar_cfg = cfg.svar_config();
    let model = stage("svar", fit_svar_lingam(&panel, var_lag, &svar_cfg))?;
    let diagnostics = stage("diagnostics", diagnose(&model.names, &model.var.residuals, cfg.ljung_box_lag))?;

    let boot_cfg = cfg.bootstrap_config();
    let (bootstrap, irf) = if cfg.bootstrap_iterations > 0 {
        let (fits, dropped) = stage("bootstrap", bootstrap_fits(&model, &panel, &boot_cfg))?;
        let summary = summarize(&model, &fits, dropped, &boot_cfg);
        let irf = stage(
            "irf",
            irf_bands_from_fits(&model, &fits, dropped, cfg.irf_horizon, cfg.irf_level, &boot_cfg, cfg.shock_scaling),
        )?;
        (Some(summary), irf)
    } else {
        let irf = stage("irf", structural_irf_scaled(&model, cfg.irf_horizon, cfg.shock_scaling))?;
        (None, irf)
    };

    let subperiods = match cfg.split_date {
        Some(split) => {
            let irf_cfg = IrfConfig {
                svar: svar_cfg,
                scaling: cfg.shock_scaling,
                bootstrap: (cfg.bootstrap_iterations > 0).then_some(boot_cfg),
                level: cfg.irf_level,
            };
            let (_, first, second) =
                stage("irf", compare_subperiods(&panel, split, var_lag, cfg.irf_horizon, &irf_cfg))?;
            Some(SubperiodIrfs {
                split_date: split,
                first,
                second,
            })
        }
        None => None,
    };

    let graph = to_causal_graph(&model, bootstrap.as_ref(), cfg.significance_level);
    Ok(ReportBundle {
        config: cfg.clone(),
        panel,
        stats,
        adf_levels,
        adf_differences,
        johansen,
        var_lag,
        var_sic,
        diagnostics,
        model,
        bootstrap,
        irf,
        subperiods,
        graph,
    })
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Output files written by [`write_bundle`].
pub const BUNDLE_FILES: &[&str] = &[
    "config.toml",
    "bundle.json",
    "panel.csv",
    "stats.csv",
    "adf.csv",
    "johansen.csv",
    "var.csv",
    "diagnostics.csv",
    "svar.csv",
    "irf.csv",
    "irf_first.csv",
    "irf_second.csv",
    "graph.dot",
];

/// Writes one file per table into `dir`, which must exist.
pub fn write_bundle_files(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    write_file(dir, "config.toml", |b| {
        b.extend_from_slice(bundle.config.to_toml()?.as_bytes());
        Ok(())
    })?;
    write_file(dir, "bundle.json", |b| {
        serde_json::to_writer_pretty(&mut *b, bundle)?;
        b.push(b'\n');
        Ok(())
    })?;
    write_file(dir, "panel.csv", |b| bundle.panel.write_csv(b))?;
    write_file(dir, "stats.csv", |b| bundle.stats.write_csv(b))?;
    let adf_rows: Vec<(String, AdfReport)> = bundle
        .adf_levels
        .iter()
        .map(|r| ("level".to_string(), r.clone()))
        .chain(bundle.adf_differences.iter().map(|r| ("difference".to_string(), r.clone())))
        .collect();
    write_file(dir, "adf.csv", |b| report::write_adf_csv(&adf_rows, b))?;
    if let Some(j) = &bundle.johansen {
        write_file(dir, "johansen.csv", |b| report::write_johansen_csv(j, b))?;
    }
    write_file(dir, "var.csv", |b| report::write_var_csv(&bundle.model.var, b))?;
    write_file(dir, "diagnostics.csv", |b| report::write_diagnostics_csv(&bundle.diagnostics, b))?;
    match &bundle.bootstrap {
        Some(s) => write_file(dir, "svar.csv", |b| s.write_csv(b))?,
        None => write_file(dir, "svar.csv", |b| report::write_svar_point_csv(&bundle.model, b))?,
    }
    write_file(dir, "irf.csv", |b| bundle.irf.write_csv(b))?;
    if let Some(s) = &bundle.subperiods {
        write_file(dir, "irf_first.csv", |b| s.first.write_csv(b))?;
        write_file(dir, "irf_second.csv", |b| s.second.write_csv(b))?;
    }
    write_file(dir, "graph.dot", |b| {
        b.extend_from_slice(export_dot(&bundle.graph, true).as_bytes());
        Ok(())
    })?;
    Ok(())
}

/// Writes the bundle into `out` atomically: files go to a sibling staging
/// directory that replaces `out` only once every file is written. An existing
/// `out` is replaced only if it is empty or holds an earlier bundle.
pub fn write_bundle(bundle: &ReportBundle, out: &Path) -> Result<()> {
    if out.exists() {
        let is_empty = fs::read_dir(out)
            .map_err(|e| Error::io(out.display().to_string(), e))?
            .next()
            .is_none();
        if !is_empty && !out.join("bundle.json").exists() {
            return Err(Error::Config(format!(
                "output directory {} exists and does not hold a previous bundle",
                out.display()
            )));
        }
    }
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    let file_name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let staging = parent.join(format!(".{file_name}.partial-{}", std::process::id()));
    if staging.exists() {
        let _ = fs::remove_dir_all(&staging);
    }
    fs::create_dir(&staging).map_err(|e| Error::io(staging.display().to_string(), e))?;
    let result = write_bundle_files(bundle, &staging).and_then(|_| {
        if out.exists() {
            fs::remove_dir_all(out).map_err(|e| Error::io(out.display().to_string(), e))?;
        }
        fs::rename(&staging, out).map_err(|e| Error::io(out.display().to_string(), e))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

/// Loads nothing itself: runs `cfg` (seeding it if needed) and writes the bundle.
pub fn run_pipeline(cfg: PipelineConfig, out: &Path) -> Result<ReportBundle> {
    let cfg = cfg.with_seed();
    let bundle = run(&cfg)?;
    write_bundle(&bundle, out)?;
    Ok(bundle)
}
