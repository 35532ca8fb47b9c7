//! Price-series ingestion: CSV loading, crypto-asset exchange rates, weekend
//! filling, log transform, panel alignment and descriptive statistics.
//!
//! Dates are plain calendar days. Aligning providers to a common time zone is
//! the caller's job.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// A named, date-ordered univariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub name: String,
    pub points: Vec<(NaiveDate, f64)>,
}

impl RawSeries {
    /// Builds a series, sorting by date and rejecting duplicates and non-finite values.
    pub fn new(name: impl Into<String>, mut points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate(w[0].0));
        }
        if let Some(&(date, value)) = points.iter().find(|p| !p.1.is_finite()) {
            return Err(Error::Parse {
                line: 0,
                message: format!("non-finite value {value} on {date}"),
            });
        }
        Ok(RawSeries {
            name: name.into(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by_key(&date, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }
}

/// Aligned T×n observation matrix with a shared date index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub names: Vec<String>,
    pub dates: Vec<NaiveDate>,
    #[serde(with = "crate::linalg::serde_matrix")]
    pub values: DMatrix<f64>,
}

impl Panel {
    pub fn new(names: Vec<String>, dates: Vec<NaiveDate>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::InvalidArgument(format!(
                "panel shape {}x{} does not match {} dates and {} names",
                values.nrows(),
                values.ncols(),
                dates.len(),
                names.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Alignment(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("panel contains non-finite cells".into()));
        }
        Ok(Panel {
            names,
            dates,
            values,
        })
    }

    /// Panel over consecutive calendar days starting at `start`.
    pub fn with_daily_index(names: Vec<String>, start: NaiveDate, values: DMatrix<f64>) -> Result<Self> {
        let dates = (0..values.nrows())
            .map(|i| start + Days::new(i as u64))
            .collect();
        Panel::new(names, dates, values)
    }

    pub fn nobs(&self) -> usize {
        self.values.nrows()
    }

    pub fn nvars(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_series(&self, j: usize) -> RawSeries {
        RawSeries {
            name: self.names[j].clone(),
            points: self
                .dates
                .iter()
                .copied()
                .zip(self.values.column(j).iter().copied())
                .collect(),
        }
    }

    /// Reorders columns so that column k of the result is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Panel {
        Panel {
            names: perm.iter().map(|&j| self.names[j].clone()).collect(),
            dates: self.dates.clone(),
            values: DMatrix::from_fn(self.nobs(), perm.len(), |i, k| self.values[(i, perm[k])]),
        }
    }

    /// First differences; the first date is dropped.
    pub fn difference(&self) -> Result<Panel> {
        if self.nobs() < 2 {
            return Err(Error::InsufficientData("cannot difference fewer than 2 rows".into()));
        }
        let t = self.nobs() - 1;
        Ok(Panel {
            names: self.names.iter().map(|n| format!("d_{n}")).collect(),
            dates: self.dates[1..].to_vec(),
            values: DMatrix::from_fn(t, self.nvars(), |i, j| {
                self.values[(i + 1, j)] - self.values[(i, j)]
            }),
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        wr.write_record(&header)?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.to_string()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("panel csv", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Panel> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.is_empty() || !header[0].eq_ignore_ascii_case("date") {
            return Err(Error::Schema {
                path: "panel".into(),
                column: "date".into(),
            });
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut cells = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            dates.push(parse_date(&rec[0]).ok_or_else(|| Error::Parse {
                line,
                message: format!("unparseable date {:?}", &rec[0]),
            })?);
            for field in rec.iter().skip(1) {
                cells.push(parse_value(field).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unparseable value {field:?}"),
                })?);
            }
        }
        if dates.is_empty() {
            return Err(Error::EmptyInput("panel has no rows".into()));
        }
        let values = DMatrix::from_row_slice(dates.len(), names.len(), &cells);
        Panel::new(names, dates, values)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Panel> {
        let p = path.as_ref();
        let f = std::fs::File::open(p).map_err(|e| Error::io(p.display().to_string(), e))?;
        Panel::read_csv(f)
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok().map(|d| d.date()))
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok().map(|d| d.date()))
        .or_else(|| {
            chrono::DateTime::parse_from_rfc3339(s)
                .ok()
                .map(|d| d.date_naive())
        })
}

fn parse_value(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads one price column from a CSV file with a header row.
pub fn load_price_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    value_column: &str,
) -> Result<RawSeries> {
    let p = path.as_ref();
    let name = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let f = std::fs::File::open(p).map_err(|e| Error::io(p.display().to_string(), e))?;
    read_price_csv(f, &name, &p.display().to_string(), date_column, value_column)
}

/// Reader form of [`load_price_csv`]; `source` is only used in error messages.
pub fn read_price_csv<R: Read>(
    reader: R,
    name: &str,
    source: &str,
    date_column: &str,
    value_column: &str,
) -> Result<RawSeries> {
    let mut rd = csv::Reader::from_reader(reader);
    let header = match rd.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        _ => return Err(Error::EmptyInput(source.to_string())),
    };
    let find = |col: &str| {
        header
            .iter()
            .position(|h| h.trim() == col)
            .ok_or_else(|| Error::Schema {
                path: source.to_string(),
                column: col.to_string(),
            })
    };
    let di = find(date_column)?;
    let vi = find(value_column)?;
    let mut points = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw_date = rec.get(di).unwrap_or("");
        let raw_value = rec.get(vi).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::Parse {
            line,
            message: format!("unparseable date {raw_date:?}"),
        })?;
        let value = parse_value(raw_value).ok_or_else(|| Error::Parse {
            line,
            message: format!("unparseable value {raw_value:?}"),
        })?;
        points.push((date, value));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput(source.to_string()));
    }
    RawSeries::new(name, points)
}

/// Crypto-asset exchange rate: the EUR price divided by the USD price on each shared date.
pub fn compute_cer(p_eur: &RawSeries, p_usd: &RawSeries) -> Result<RawSeries> {
    if p_eur.is_empty() || p_usd.is_empty() {
        return Err(Error::EmptyInput("exchange-rate inputs must be nonempty".into()));
    }
    let mut points = Vec::new();
    for &(date, eur) in &p_eur.points {
        if let Some(usd) = p_usd.value_on(date) {
            if !(usd > 0.0) {
                return Err(Error::DivisionDomain { date, value: usd });
            }
            points.push((date, eur / usd));
        }
    }
    if points.is_empty() {
        return Err(Error::Alignment(format!(
            "{} and {} share no dates",
            p_eur.name, p_usd.name
        )));
    }
    Ok(RawSeries {
        name: format!("{}/{}", p_eur.name, p_usd.name),
        points,
    })
}

/// Forward-fills every calendar day in `[start, end]` from the most recent observation.
pub fn weekend_fill(series: &RawSeries, start: NaiveDate, end: NaiveDate) -> Result<RawSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput(format!("{} is empty", series.name)));
    }
    if start > end {
        return Err(Error::InvalidArgument(format!("start {start} after end {end}")));
    }
    let first = series.points[0].0;
    if start < first {
        return Err(Error::UncoverableGap { date: start, first });
    }
    // Index of the last observation at or before `start`.
    let mut idx = series.points.partition_point(|p| p.0 <= start) - 1;
    let mut out = Vec::new();
    let mut day = start;
    loop {
        while idx + 1 < series.points.len() && series.points[idx + 1].0 <= day {
            idx += 1;
        }
        out.push((day, series.points[idx].1));
        if day == end {
            break;
        }
        day = day.succ_opt().expect("date in range");
    }
    Ok(RawSeries {
        name: series.name.clone(),
        points: out,
    })
}

pub fn log_transform(series: &RawSeries) -> Result<RawSeries> {
    let points = series
        .points
        .iter()
        .map(|&(date, value)| {
            if value > 0.0 {
                Ok((date, value.ln()))
            } else {
                Err(Error::Domain { date, value })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawSeries {
        name: series.name.clone(),
        points,
    })
}

/// Aligns series on the intersection of their dates, keeping the input column order.
pub fn align_panel(series_list: &[RawSeries]) -> Result<Panel> {
    if series_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two series to align".into()));
    }
    let mut common: BTreeSet<NaiveDate> = series_list[0].dates().collect();
    for s in &series_list[1..] {
        let ds: BTreeSet<NaiveDate> = s.dates().collect();
        common = common.intersection(&ds).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::Alignment("series share no common dates".into()));
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let n = series_list.len();
    let mut values = DMatrix::zeros(dates.len(), n);
    for (j, s) in series_list.iter().enumerate() {
        for (i, d) in dates.iter().enumerate() {
            values[(i, j)] = s.value_on(*d).expect("date in intersection");
        }
    }
    Panel::new(
        series_list.iter().map(|s| s.name.clone()).collect(),
        dates,
        values,
    )
}

/// Rows with `start <= date <= end`.
pub fn slice_period(panel: &Panel, start: NaiveDate, end: NaiveDate) -> Result<Panel> {
    if start > end {
        return Err(Error::InvalidArgument(format!("start {start} after end {end}")));
    }
    let rows: Vec<usize> = panel
        .dates
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= start && **d <= end)
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySlice { start, end });
    }
    Ok(Panel {
        names: panel.names.clone(),
        dates: rows.iter().map(|&i| panel.dates[i]).collect(),
        values: panel.values.select_rows(&rows),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub name: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: Vec<VariableStats>,
}

pub fn column_stats(name: &str, x: &[f64]) -> Result<VariableStats> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{name}: {} observations, need at least 2",
            x.len()
        )));
    }
    let s = stats::sorted(x);
    let (skewness, kurtosis) = stats::skew_kurtosis(x);
    Ok(VariableStats {
        name: name.to_string(),
        n: x.len(),
        min: s[0],
        q1: stats::quantile_sorted(&s, 0.25),
        median: stats::quantile_sorted(&s, 0.5),
        mean: stats::mean(x),
        q3: stats::quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
        sd: stats::sample_variance(x).max(0.0).sqrt(),
        skewness,
        kurtosis,
    })
}

/// Per-column descriptive statistics (type-7 quartiles, N−1 standard deviation,
/// excess kurtosis).
pub fn summary_stats(panel: &Panel) -> Result<StatsTable> {
    let rows = (0..panel.nvars())
        .map(|j| column_stats(&panel.names[j], &panel.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(StatsTable { rows })
}

impl StatsTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "Variables", "N", "Min", "Q1", "Median", "Mean", "Q3", "Max", "S.D.", "Skewness",
            "Kurtosis",
        ])?;
        for r in &self.rows {
            wr.write_record([
                r.name.clone(),
                r.n.to_string(),
                r.min.to_string(),
                r.q1.to_string(),
                r.median.to_string(),
                r.mean.to_string(),
                r.q3.to_string(),
                r.max.to_string(),
                r.sd.to_string(),
                r.skewness.to_string(),
                r.kurtosis.to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("stats csv", e))?;
        Ok(())
    }
}
