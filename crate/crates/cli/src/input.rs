//! CSV and spectrum-file ingestion.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use kmax_core::{GroupedDataset, Observations};

use crate::error::{CliError, Result};

const GROUP: &str = "group";
const LEVEL: &str = "level";

/// Reads a grouped dataset from a CSV file. Groups are numbered in order of
/// first appearance; rows keep their file order within a group.
pub fn parse_dataset_csv(path: &Path) -> Result<GroupedDataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset_reader(file)
}

pub fn parse_dataset_reader(reader: impl Read) -> Result<GroupedDataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let group_col = header.iter().position(|h| h == GROUP).ok_or(CliError::MissingGroupColumn)?;
    let features: Vec<usize> = (0..header.len()).filter(|&c| c != group_col).collect();
    let discrete = features.iter().any(|&c| header[c] == LEVEL);
    if discrete && features.len() > 1 {
        return Err(CliError::MixedDomain("a `level` column cannot be combined with other feature columns".into()));
    }
    if features.is_empty() {
        return Err(CliError::NoFeatures);
    }

    let mut order: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::MalformedRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let label = record[group_col].to_string();
        if label.is_empty() {
            return Err(CliError::MalformedRow { line, reason: "empty group label".into() });
        }
        let g = *slot.entry(label.clone()).or_insert_with(|| {
            order.push(label);
            rows.push(Vec::new());
            levels.push(Vec::new());
            order.len() - 1
        });
        if discrete {
            let raw = &record[features[0]];
            let v: usize = raw.parse().ok().filter(|&v| v >= 1).ok_or_else(|| CliError::MalformedRow {
                line,
                reason: format!("level '{raw}' is not a positive integer"),
            })?;
            levels[g].push(v);
        } else {
            let row = features
                .iter()
                .map(|&c| {
                    let raw = &record[c];
                    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| CliError::MalformedRow {
                        line,
                        reason: format!("column '{}': '{raw}' is not a finite number", header[c]),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows[g].push(row);
        }
    }

    let sizes: Vec<usize> =
        if discrete { levels.iter().map(Vec::len).collect() } else { rows.iter().map(Vec::len).collect() };
    let observations = if discrete {
        let values: Vec<usize> = levels.into_iter().flatten().collect();
        let m = values.iter().copied().max().unwrap_or(1);
        Observations::Discrete { levels: m, values }
    } else {
        Observations::Continuous { dim: features.len(), values: rows.into_iter().flatten().flatten().collect() }
    };
    Ok(GroupedDataset::new(observations, sizes)?)
}

/// Eigenvalues, one per line; blank lines and `#` comments are skipped.
pub fn parse_spectrum_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_spectrum(&text)
}

pub fn parse_spectrum(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            l.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::MalformedRow { line, reason: format!("'{l}' is not a finite number") })
        })
        .collect()
}
