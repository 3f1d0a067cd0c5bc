//! CSV datasets: header row, comma-separated, `.` decimal separator.

use std::path::Path;

use eos_core::Dataset;

use crate::config::CsvConfig;
use crate::error::CliError;

/// Reads a dataset. Features are the remaining columns in file order after
/// removing `drop_columns` and the label column. Line numbers in errors
/// count the header as line 1.
pub fn parse_csv_dataset(path: &Path, csv_config: &CsvConfig) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(format!("opening {}: {e}", path.display())))?;
    read_csv_dataset(file, csv_config, &path.display().to_string())
}

pub fn read_csv_dataset(reader: impl std::io::Read, csv_config: &CsvConfig, source: &str) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::parse(format!("{source}: unreadable header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &str| headers.iter().position(|h| h == name);

    for name in &csv_config.drop_columns {
        if column(name).is_none() {
            return Err(CliError::config(format!("{source}: drop column `{name}` is not in the header")));
        }
    }
    let label_idx = match &csv_config.label_column {
        Some(name) => Some(
            column(name).ok_or_else(|| CliError::config(format!("{source}: label column `{name}` is not in the header")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| Some(j) != label_idx && !csv_config.drop_columns.contains(&headers[j]))
        .collect();
    if feature_idx.is_empty() {
        return Err(CliError::config(format!("{source}: no feature columns left")));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| CliError::parse(format!("{source}: line {line}: {e}")))?;
        for &j in &feature_idx {
            let cell = record.get(j).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                CliError::parse(format!(
                    "{source}: line {line}, column `{}`: {} is not a number",
                    headers[j],
                    if cell.is_empty() { "blank cell".to_string() } else { format!("`{cell}`") }
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(format!(
                    "{source}: line {line}, column `{}`: value must be finite",
                    headers[j]
                )));
            }
            values.push(v);
        }
        if let Some(j) = label_idx {
            let cell = record.get(j).unwrap_or("").trim();
            labels.push(map_label(cell, csv_config).ok_or_else(|| {
                CliError::parse(format!(
                    "{source}: line {line}, column `{}`: label `{cell}` has no class mapping",
                    headers[j]
                ))
            })?);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(CliError::parse(format!("{source}: no data rows")));
    }
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    let mut data = Dataset::from_row_major(n_rows, feature_idx.len(), values)?.with_feature_names(names)?;
    if label_idx.is_some() {
        data = data.with_labels(labels)?;
    }
    Ok(data)
}

fn map_label(cell: &str, csv_config: &CsvConfig) -> Option<u8> {
    if csv_config.label_map.is_empty() {
        match cell {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        }
    } else {
        csv_config.label_map.get(cell).copied()
    }
}
