//! CSV writers for the per-stage tables of the report bundle.

use std::io::Write;

use crate::coint::CointReport;
use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::stats::norm_sf;
use crate::svar::SvarLingamModel;
use crate::unit_root::AdfReport;
use crate::var::VarModel;

fn finish<W: Write>(mut wr: csv::Writer<W>, what: &str) -> Result<()> {
    wr.flush().map_err(|e| Error::io(what, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per series and transformation.
pub fn write_adf_csv<W: Write>(rows: &[(String, AdfReport)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "variable", "form", "spec", "lag", "nobs", "statistic", "cv1", "cv5", "cv10", "reject_at",
    ])?;
    for (form, r) in rows {
        let cv = &r.critical_values;
        wr.write_record([
            r.variable.clone(),
            form.clone(),
            format!("{:?}", r.spec).to_lowercase(),
            r.lag.to_string(),
            r.nobs.to_string(),
            r.statistic.to_string(),
            cv.one.to_string(),
            cv.five.to_string(),
            cv.ten.to_string(),
            opt(r.reject_at),
        ])?;
    }
    finish(wr, "adf csv")
}

/// Trace and maximum-eigenvalue statistics for each null rank r.
pub fn write_johansen_csv<W: Write>(r: &CointReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "rank", "eigenvalue", "trace", "trace_cv10", "trace_cv5", "trace_cv1", "maxeig",
        "maxeig_cv10", "maxeig_cv5", "maxeig_cv1",
    ])?;
    for k in 0..r.eigenvalues.len() {
        let (t, m) = (&r.trace_critical[k], &r.maxeig_critical[k]);
        wr.write_record([
            k.to_string(),
            r.eigenvalues[k].to_string(),
            r.trace_stats[k].to_string(),
            t.ten.to_string(),
            t.five.to_string(),
            t.one.to_string(),
            r.maxeig_stats[k].to_string(),
            m.ten.to_string(),
            m.five.to_string(),
            m.one.to_string(),
        ])?;
    }
    finish(wr, "johansen csv")
}

pub fn write_diagnostics_csv<W: Write>(r: &DiagnosticsReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "variable", "kurtosis", "shapiro_wilk_p", "shapiro_francia_p", "jarque_bera_p",
        "ljung_box_p",
    ])?;
    for c in &r.columns {
        wr.write_record([
            c.variable.clone(),
            c.kurtosis.to_string(),
            opt(c.shapiro_wilk_p),
            opt(c.shapiro_francia_p),
            c.jarque_bera_p.to_string(),
            c.ljung_box_p.to_string(),
        ])?;
    }
    finish(wr, "diagnostics csv")
}

fn t_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Reduced-form coefficients with OLS standard errors and normal p-values.
pub fn write_var_csv<W: Write>(var: &VarModel, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["matrix", "lag", "equation", "regressor", "estimate", "std_err", "t", "p_value", "stars"])?;
    let n = var.nvars();
    for (h, (pi, se)) in var.pi.iter().zip(&var.pi_std_err).enumerate() {
        for i in 0..n {
            for j in 0..n {
                let t = pi[(i, j)] / se[(i, j)];
                let p = 2.0 * norm_sf(t.abs());
                wr.write_record([
                    format!("Pi{}", h + 1),
                    (h + 1).to_string(),
                    var.names[i].clone(),
                    var.names[j].clone(),
                    pi[(i, j)].to_string(),
                    se[(i, j)].to_string(),
                    t.to_string(),
                    p.to_string(),
                    t_stars(p).to_string(),
                ])?;
            }
        }
    }
    finish(wr, "var csv")
}

/// Point estimates of c and B₀..B_p in long format.
pub fn write_svar_point_csv<W: Write>(model: &SvarLingamModel, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["matrix", "lag", "equation", "regressor", "estimate"])?;
    let n = model.nvars();
    for i in 0..n {
        wr.write_record([
            "c".to_string(),
            String::new(),
            model.names[i].clone(),
            String::new(),
            model.c[i].to_string(),
        ])?;
    }
    for (h, b) in model.b.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                wr.write_record([
                    format!("B{h}"),
                    h.to_string(),
                    model.names[i].clone(),
                    model.names[j].clone(),
                    b[(i, j)].to_string(),
                ])?;
            }
        }
    }
    finish(wr, "svar csv")
}
