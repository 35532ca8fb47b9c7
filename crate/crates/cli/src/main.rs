//! `svarlingam` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! or identification failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use svarlingam::bootstrap::{bootstrap_significance, BootstrapConfig, BootstrapSummary};
use svarlingam::coint::{johansen_test, Deterministic};
use svarlingam::diagnostics::diagnose;
use svarlingam::graph::{export_dot, to_causal_graph};
use svarlingam::ica::{fastica, IcaConfig, Nonlinearity};
use svarlingam::ingest::summary_stats;
use svarlingam::irf::{compare_subperiods, irf_bootstrap_bands, structural_irf_scaled, IrfConfig, ShockScaling};
use svarlingam::lingam::{brute_force_order, ica_lingam, Density};
use svarlingam::pipeline::{load_panel, run_pipeline, PipelineConfig};
use svarlingam::report;
use svarlingam::svar::{fit_svar_lingam, B0Method, SvarConfig, SvarLingamModel};
use svarlingam::synthetic::{generate_svar, preset, GroundTruthSpec, ShockDist, SimulationTruth};
use svarlingam::unit_root::{adf_auto, adf_test, AdfSpec};
use svarlingam::var::{fit_var, select_var_lag_sic};
use svarlingam::{Error, ErrorClass, Panel, Result};

#[derive(Parser)]
#[command(name = "svarlingam", version, about = "SVAR-LiNGAM causal discovery for multivariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the analysis panel from the inputs named in a config file.
    Ingest(IngestArgs),
    /// Descriptive statistics per variable.
    Stats(PanelOut),
    /// Augmented Dickey-Fuller tests with SIC lag selection.
    Adf(AdfArgs),
    /// Johansen cointegration test (trace and maximum eigenvalue).
    Johansen(JohansenArgs),
    /// Reduced-form VAR estimates.
    Var(VarArgs),
    /// Normality and serial-correlation tests on VAR residuals.
    Diagnose(DiagnoseArgs),
    /// Fit SVAR-LiNGAM and write the model as JSON.
    Fit(FitArgs),
    /// Bootstrap significance of the structural coefficients.
    Bootstrap(BootstrapArgs),
    /// Structural impulse responses, optionally with bootstrap bands.
    Irf(IrfArgs),
    /// Simulate data from a ground-truth SVAR-LiNGAM model.
    Simulate(SimulateArgs),
    /// Export the causal graph of a fitted model as Graphviz DOT.
    Graph(GraphArgs),
    /// Run the whole pipeline from a config file into an output directory.
    Run(RunArgs),
    /// FastICA on the columns of a panel (debugging aid).
    Ica(IcaArgs),
    /// Static ICA-LiNGAM on the columns of a panel (debugging aid).
    Lingam(LingamArgs),
}

#[derive(Args)]
struct PanelOut {
    /// Panel CSV with a leading "date" column.
    #[arg(long)]
    panel: PathBuf,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdfArgs {
    #[command(flatten)]
    io: PanelOut,
    #[arg(long, default_value_t = 12)]
    max_lag: usize,
    /// Fixed lag instead of SIC selection.
    #[arg(long)]
    lag: Option<usize>,
    /// Include a linear trend in the test regression.
    #[arg(long)]
    trend: bool,
    /// Test first differences instead of levels.
    #[arg(long)]
    difference: bool,
}

#[derive(Args)]
struct JohansenArgs {
    #[command(flatten)]
    io: PanelOut,
    /// VAR lag in levels.
    #[arg(long)]
    lag: usize,
}

#[derive(Args)]
struct LagArgs {
    /// Fixed VAR lag; SIC selection up to --max-lag when absent.
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long, default_value_t = 8)]
    max_lag: usize,
}

impl LagArgs {
    fn resolve(&self, panel: &Panel) -> Result<usize> {
        match self.lag {
            Some(p) => Ok(p),
            None => select_var_lag_sic(panel, self.max_lag),
        }
    }
}

#[derive(Args)]
struct VarArgs {
    #[command(flatten)]
    io: PanelOut,
    #[command(flatten)]
    lag: LagArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    io: PanelOut,
    #[command(flatten)]
    lag: LagArgs,
    #[arg(long, default_value_t = 10)]
    ljung_box_lag: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum NonlinearityArg {
    Tanh,
    Cube,
}

#[derive(Clone, Copy, ValueEnum)]
enum B0MethodArg {
    Regression,
    Ica,
}

#[derive(Args)]
struct SvarArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = NonlinearityArg::Tanh)]
    nonlinearity: NonlinearityArg,
    #[arg(long, value_enum, default_value_t = B0MethodArg::Regression)]
    b0_method: B0MethodArg,
    /// Zero |B0| entries below this threshold.
    #[arg(long, default_value_t = 0.0)]
    prune: f64,
}

impl SvarArgs {
    fn config(&self) -> SvarConfig {
        SvarConfig {
            ica: IcaConfig {
                nonlinearity: match self.nonlinearity {
                    NonlinearityArg::Tanh => Nonlinearity::Tanh,
                    NonlinearityArg::Cube => Nonlinearity::Cube,
                },
                seed: self.seed,
                ..IcaConfig::default()
            },
            b0_method: match self.b0_method {
                B0MethodArg::Regression => B0Method::Regression,
                B0MethodArg::Ica => B0Method::Ica,
            },
            prune_threshold: self.prune,
            ..SvarConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    panel: PathBuf,
    #[command(flatten)]
    lag: LagArgs,
    #[command(flatten)]
    svar: SvarArgs,
    /// Model JSON output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the coefficient table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long)]
    panel: PathBuf,
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Re-discover the causal order in every replicate.
    #[arg(long)]
    rediscover_order: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IrfArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = 0.99)]
    level: f64,
    /// Bootstrap replicates for bands (0 for point responses only).
    #[arg(long, default_value_t = 0)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shock size: `unit` or `sd`.
    #[arg(long, default_value = "unit")]
    scaling: ShockScaling,
    /// Also estimate both subperiods split after this date.
    #[arg(long)]
    split_date: Option<NaiveDate>,
    /// Output CSV (stdout when absent); subperiod files get _first/_second suffixes.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth spec JSON; alternatively use --preset.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// bivariate, chain or lingam3.
    #[arg(long)]
    preset: Option<String>,
    /// uniform, laplace, gaussian or t(df).
    #[arg(long, default_value = "uniform")]
    shocks: ShockDist,
    #[arg(long, default_value_t = 5000)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Panel CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Truth JSON output for later scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    model: PathBuf,
    /// Bootstrap summary JSON from `bootstrap --json`.
    #[arg(long)]
    bootstrap: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Omit lagged edges.
    #[arg(long)]
    instantaneous_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long)]
    bootstrap_iterations: Option<usize>,
    #[arg(long)]
    split_date: Option<NaiveDate>,
    #[arg(long)]
    irf_horizon: Option<usize>,
}

#[derive(Args)]
struct IcaArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = NonlinearityArg::Tanh)]
    nonlinearity: NonlinearityArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Laplace,
    Logistic,
}

#[derive(Args)]
struct LingamArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the likelihood-maximising order found by enumeration.
    #[arg(long, value_enum)]
    brute_force: Option<DensityArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => io::stdout().write_all(bytes).map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn io_err(p: &Path, e: io::Error) -> Error {
    Error::Io {
        path: p.display().to_string(),
        source: e,
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(v)?;
    buf.push(b'\n');
    Ok(buf)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let panel = load_panel(&PipelineConfig::load(&a.config)?)?;
            emit(a.out.as_deref(), &csv_bytes(|b| panel.write_csv(b))?)
        }
        Command::Stats(a) => {
            let t = summary_stats(&Panel::read_csv_path(&a.panel)?)?;
            let bytes = if a.json { json(&t)? } else { csv_bytes(|b| t.write_csv(b))? };
            emit(a.out.as_deref(), &bytes)
        }
        Command::Adf(a) => {
            let mut panel = Panel::read_csv_path(&a.io.panel)?;
            if a.difference {
                panel = panel.difference()?;
            }
            let spec = if a.trend { AdfSpec::Trend } else { AdfSpec::Constant };
            let form = if a.difference { "difference" } else { "level" };
            let rows = (0..panel.nvars())
                .map(|j| {
                    let (name, y) = (&panel.names[j], panel.column(j));
                    let r = match a.lag {
                        Some(l) => adf_test(name, &y, l, spec),
                        None => adf_auto(name, &y, a.max_lag, spec),
                    }?;
                    Ok((form.to_string(), r))
                })
                .collect::<Result<Vec<_>>>()?;
            let bytes = if a.io.json {
                json(&rows.iter().map(|r| &r.1).collect::<Vec<_>>())?
            } else {
                csv_bytes(|b| report::write_adf_csv(&rows, b))?
            };
            emit(a.io.out.as_deref(), &bytes)
        }
        Command::Johansen(a) => {
            let r = johansen_test(&Panel::read_csv_path(&a.io.panel)?, a.lag, Deterministic::Constant)?;
            let bytes = if a.io.json { json(&r)? } else { csv_bytes(|b| report::write_johansen_csv(&r, b))? };
            emit(a.io.out.as_deref(), &bytes)
        }
        Command::Var(a) => {
            let panel = Panel::read_csv_path(&a.io.panel)?;
            let v = fit_var(&panel, a.lag.resolve(&panel)?)?;
            let bytes = if a.io.json { json(&v)? } else { csv_bytes(|b| report::write_var_csv(&v, b))? };
            emit(a.io.out.as_deref(), &bytes)
        }
        Command::Diagnose(a) => {
            let panel = Panel::read_csv_path(&a.io.panel)?;
            let v = fit_var(&panel, a.lag.resolve(&panel)?)?;
            let r = diagnose(&v.names, &v.residuals, a.ljung_box_lag)?;
            let bytes = if a.io.json { json(&r)? } else { csv_bytes(|b| report::write_diagnostics_csv(&r, b))? };
            emit(a.io.out.as_deref(), &bytes)
        }
        Command::Fit(a) => {
            let panel = Panel::read_csv_path(&a.panel)?;
            let model = fit_svar_lingam(&panel, a.lag.resolve(&panel)?, &a.svar.config())?;
            for w in &model.warnings {
                log::warn!("{w}");
            }
            if let Some(p) = &a.csv {
                emit(Some(p), &csv_bytes(|b| report::write_svar_point_csv(&model, b))?)?;
            }
            emit(a.out.as_deref(), &json(&model)?)
        }
        Command::Bootstrap(a) => {
            let panel = Panel::read_csv_path(&a.panel)?;
            let model: SvarLingamModel = read_json(&a.model)?;
            let cfg = BootstrapConfig {
                rediscover_order: a.rediscover_order,
                svar: SvarConfig {
                    ica: IcaConfig {
                        seed: a.seed,
                        ..IcaConfig::default()
                    },
                    ..SvarConfig::default()
                },
                ..BootstrapConfig::new(a.iterations, a.seed)
            };
            let s = bootstrap_significance(&model, &panel, &cfg)?;
            let bytes = if a.json { json(&s)? } else { csv_bytes(|b| s.write_csv(b))? };
            emit(a.out.as_deref(), &bytes)
        }
        Command::Irf(a) => cmd_irf(a),
        Command::Simulate(a) => {
            let spec: GroundTruthSpec = match (&a.spec, &a.preset) {
                (Some(p), _) => {
                    let s: GroundTruthSpec = read_json(p)?;
                    s.validate()?;
                    s
                }
                (None, Some(name)) => preset(name, a.shocks, a.t, a.seed)?,
                (None, None) => return Err(Error::Config("simulate needs --spec or --preset".into())),
            };
            let (panel, _) = generate_svar(&spec)?;
            emit(Some(&a.out), &csv_bytes(|b| panel.write_csv(b))?)?;
            if let Some(t) = &a.truth {
                emit(Some(t), &json(&SimulationTruth::new(&spec)?)?)?;
            }
            Ok(())
        }
        Command::Graph(a) => {
            let model: SvarLingamModel = read_json(&a.model)?;
            let summary: Option<BootstrapSummary> = a.bootstrap.as_deref().map(read_json).transpose()?;
            let g = to_causal_graph(&model, summary.as_ref(), a.level);
            emit(a.out.as_deref(), export_dot(&g, !a.instantaneous_only).as_bytes())
        }
        Command::Run(a) => {
            let mut cfg = PipelineConfig::load(&a.config)?;
            cfg.seed = a.seed.or(cfg.seed);
            cfg.lag = a.lag.or(cfg.lag);
            cfg.split_date = a.split_date.or(cfg.split_date);
            if let Some(b) = a.bootstrap_iterations {
                cfg.bootstrap_iterations = b;
            }
            if let Some(h) = a.irf_horizon {
                cfg.irf_horizon = h;
            }
            let bundle = run_pipeline(cfg, &a.out)?;
            eprintln!(
                "seed {}; causal order {}; bundle written to {}",
                bundle.config.seed.unwrap_or_default(),
                bundle.model.order_names().join(" -> "),
                a.out.display()
            );
            Ok(())
        }
        Command::Ica(a) => {
            let panel = Panel::read_csv_path(&a.panel)?;
            let cfg = IcaConfig {
                nonlinearity: match a.nonlinearity {
                    NonlinearityArg::Tanh => Nonlinearity::Tanh,
                    NonlinearityArg::Cube => Nonlinearity::Cube,
                },
                seed: a.seed,
                ..IcaConfig::default()
            };
            emit(a.out.as_deref(), &json(&fastica(&panel.values, &cfg)?)?)
        }
        Command::Lingam(a) => {
            let panel = Panel::read_csv_path(&a.panel)?;
            let cfg = IcaConfig {
                seed: a.seed,
                ..IcaConfig::default()
            };
            let res = ica_lingam(&panel.values, &cfg)?;
            let brute = match a.brute_force {
                Some(d) => {
                    let density = match d {
                        DensityArg::Laplace => Density::Laplace,
                        DensityArg::Logistic => Density::Logistic,
                    };
                    Some(brute_force_order(&panel.values, density)?)
                }
                None => None,
            };
            let out = serde_json::json!({
                "names": panel.names,
                "lingam": res,
                "brute_force_order": brute,
            });
            emit(a.out.as_deref(), &json(&out)?)
        }
    }
}

fn cmd_irf(a: IrfArgs) -> Result<()> {
    if a.split_date.is_some() && a.out.is_none() {
        return Err(Error::Config("--split-date needs --out for the subperiod files".into()));
    }
    let panel = Panel::read_csv_path(&a.panel)?;
    let model: SvarLingamModel = read_json(&a.model)?;
    let boot = (a.iterations > 0).then(|| BootstrapConfig::new(a.iterations, a.seed));
    let irf = match &boot {
        Some(b) => irf_bootstrap_bands(&model, &panel, a.horizon, a.level, b, a.scaling)?,
        None => structural_irf_scaled(&model, a.horizon, a.scaling)?,
    };
    let render = |r: &svarlingam::irf::IrfResult| -> Result<Vec<u8>> {
        if a.json {
            json(r)
        } else {
            csv_bytes(|b| r.write_csv(b))
        }
    };
    emit(a.out.as_deref(), &render(&irf)?)?;
    if let Some(split) = a.split_date {
        let cfg = IrfConfig {
            svar: SvarConfig::default(),
            scaling: a.scaling,
            bootstrap: boot,
            level: a.level,
        };
        let (_, first, second) = compare_subperiods(&panel, split, model.p, a.horizon, &cfg)?;
        let out = a.out.as_deref().expect("checked above");
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = out.extension().map(|s| format!(".{}", s.to_string_lossy())).unwrap_or_default();
        emit(Some(&out.with_file_name(format!("{stem}_first{ext}"))), &render(&first)?)?;
        emit(Some(&out.with_file_name(format!("{stem}_second{ext}"))), &render(&second)?)?;
    }
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Messages already embed their causes.
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
