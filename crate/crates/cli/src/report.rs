//! JSON and CSV reports. Every float is written with 17 significant digits.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use kmax_core::simulation::{BoundsRow, LevelEstimate, TailRatioRow};
use kmax_core::{PowerEstimate, TestResult};
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Round-trip exact rendering: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Rewrites every non-integer number in `v` with [`fmt_float`].
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(Number::from_str(&fmt_float(x)).expect("valid literal")),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn to_canonical<T: Serialize>(value: &T) -> Result<Value> {
    Ok(canonical(serde_json::to_value(value)?))
}

/// Result fields in declaration order followed by the config echo.
pub fn test_report(result: &TestResult, config: &RunConfig) -> Result<Value> {
    let Value::Object(mut map) = to_canonical(result)? else { unreachable!("struct serializes to an object") };
    map.insert("config".into(), to_canonical(config)?);
    Ok(Value::Object(map))
}

/// Inverse of [`test_report`].
pub fn parse_test_report(text: &str) -> Result<(TestResult, RunConfig)> {
    let mut map: Map<String, Value> = serde_json::from_str(text)?;
    let config = map.remove("config").ok_or_else(|| CliError::Config("report has no config".into()))?;
    Ok((serde_json::from_value(Value::Object(map))?, serde_json::from_value(config)?))
}

pub fn json_string(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Rows of an experiment table.
pub trait Table {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

impl Table for PowerEstimate {
    const HEADER: &'static [&'static str] = &["method", "scenario", "K", "n", "d", "power", "mc_se", "reps", "seed"];

    fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.scenario.name().into(),
            self.k.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            fmt_float(self.power),
            fmt_float(self.mc_se),
            self.reps.to_string(),
            self.seed.to_string(),
        ]
    }
}

impl Table for BoundsRow {
    const HEADER: &'static [&'static str] = &[
        "kernel",
        "N",
        "mean_p_bobkov",
        "mean_p_mcdiarmid",
        "mean_log_p_bobkov",
        "mean_log_p_mcdiarmid",
        "mean_sigma2",
        "bound",
        "reps",
    ];

    fn record(&self) -> Vec<String> {
        vec![
            serde_json::to_value(self.kernel).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            self.n_total.to_string(),
            fmt_float(self.mean_p_bobkov),
            fmt_float(self.mean_p_mcdiarmid),
            fmt_float(self.mean_log_p_bobkov),
            fmt_float(self.mean_log_p_mcdiarmid),
            fmt_float(self.mean_sigma2),
            fmt_float(self.bound),
            self.reps.to_string(),
        ]
    }
}

impl Table for TailRatioRow {
    const HEADER: &'static [&'static str] = &["x", "empirical", "reference", "reference_se", "ratio"];

    fn record(&self) -> Vec<String> {
        [self.x, self.empirical, self.reference, self.reference_se, self.ratio].into_iter().map(fmt_float).collect()
    }
}

impl Table for LevelEstimate {
    const HEADER: &'static [&'static str] = &["rate", "mc_se", "reps"];

    fn record(&self) -> Vec<String> {
        vec![fmt_float(self.rate), fmt_float(self.mc_se), self.reps.to_string()]
    }
}

pub fn csv_string<T: Table>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(T::HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn table_string<T: Table + Serialize>(rows: &[T], format: Format) -> Result<String> {
    match format {
        Format::Csv => csv_string(rows),
        Format::Json => json_string(&to_canonical(&rows)?),
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
