//! CSV report schemas and the C-statistic summary table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cohort::Endpoint;
use crate::error::{Error, Result};
use crate::metrics::{BrierCurve, CalibrationTable};

/// A C-statistic column: a horizon in whole years, or no truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HorizonLabel {
    Years(u32),
    All,
}

impl HorizonLabel {
    pub fn horizon_years(self) -> Option<f64> {
        match self {
            HorizonLabel::Years(y) => Some(f64::from(y)),
            HorizonLabel::All => None,
        }
    }
}

impl fmt::Display for HorizonLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HorizonLabel::Years(y) => write!(f, "{y}"),
            HorizonLabel::All => f.write_str("all"),
        }
    }
}

impl FromStr for HorizonLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "all" => Ok(HorizonLabel::All),
            other => other
                .parse()
                .map(HorizonLabel::Years)
                .map_err(|_| format!("`{other}` is neither a horizon in years nor `all`")),
        }
    }
}

impl Serialize for HorizonLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HorizonLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Row of `cstat.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CstatRow {
    pub horizon: HorizonLabel,
    pub c: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Row of `brier.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrierRow {
    pub t: f64,
    pub brier: f64,
}

/// Row of `calibration.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub group: String,
    pub t: f64,
    pub observed: f64,
    pub predicted: f64,
}

/// Row of the summary table: one C-statistic cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub endpoint: Endpoint,
    pub model: String,
    pub horizon: HorizonLabel,
    pub c: f64,
    pub lo95: f64,
    pub hi95: f64,
}

fn write_rows<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn read_rows<T: for<'de> Deserialize<'de>>(text: &str, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found: Vec<&str> = r.headers()?.iter().collect();
    if found != header {
        return Err(Error::InvalidInput(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn cstat_csv(rows: &[CstatRow]) -> Result<String> {
    write_rows(rows)
}

pub fn parse_cstat_csv(text: &str) -> Result<Vec<CstatRow>> {
    read_rows(text, &["horizon", "c", "lo95", "hi95"])
}

pub fn brier_rows(curve: &BrierCurve) -> Vec<BrierRow> {
    curve
        .grid
        .iter()
        .zip(&curve.scores)
        .map(|(&t, &brier)| BrierRow { t, brier })
        .collect()
}

pub fn brier_csv(curve: &BrierCurve) -> Result<String> {
    write_rows(&brier_rows(curve))
}

pub fn parse_brier_csv(text: &str) -> Result<Vec<BrierRow>> {
    read_rows(text, &["t", "brier"])
}

pub fn calibration_rows<K: fmt::Display>(table: &CalibrationTable<K>) -> Vec<CalibrationRow> {
    table
        .groups
        .iter()
        .flat_map(|g| {
            g.points.iter().map(move |p| CalibrationRow {
                group: g.group.to_string(),
                t: p.t,
                observed: p.observed,
                predicted: p.predicted,
            })
        })
        .collect()
}

pub fn calibration_csv<K: fmt::Display>(table: &CalibrationTable<K>) -> Result<String> {
    write_rows(&calibration_rows(table))
}

pub fn parse_calibration_csv(text: &str) -> Result<Vec<CalibrationRow>> {
    read_rows(text, &["group", "t", "observed", "predicted"])
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    write_rows(rows)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    read_rows(text, &["endpoint", "model", "horizon", "c", "lo95", "hi95"])
}

/// Wide text table: one block per endpoint, one line per model, one
/// column per horizon, cells as `C(lo,hi)` in percent; `-` where absent.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut columns: Vec<HorizonLabel> = rows.iter().map(|r| r.horizon).collect();
    columns.sort();
    columns.dedup();
    let mut models: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }

    let mut out = format!("{:<28}", "model");
    for h in &columns {
        let label = match h {
            HorizonLabel::All => "all years".to_string(),
            HorizonLabel::Years(y) => y.to_string(),
        };
        out.push_str(&format!(" {label:>17}"));
    }
    out.push('\n');
    for endpoint in Endpoint::ALL {
        if !rows.iter().any(|r| r.endpoint == endpoint) {
            continue;
        }
        out.push_str(&format!("{}\n", endpoint_title(endpoint)));
        for model in &models {
            out.push_str(&format!("  {model:<26}"));
            for h in &columns {
                let cell = rows
                    .iter()
                    .find(|r| r.endpoint == endpoint && r.model == *model && r.horizon == *h)
                    .map(|r| format!("{:.1}({:.1},{:.1})", 100.0 * r.c, 100.0 * r.lo95, 100.0 * r.hi95))
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!(" {cell:>17}"));
            }
            out.push('\n');
        }
    }
    out
}

fn endpoint_title(endpoint: Endpoint) -> &'static str {
    match endpoint {
        Endpoint::LateAmd => "Late AMD",
        Endpoint::Ga => "Geographic atrophy",
        Endpoint::Nv => "Neovascular AMD",
    }
}
