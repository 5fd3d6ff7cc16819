use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::graph::Dataset;

/// Layout of a numeric CSV file with one example per row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    /// Column holding the integer class; `None` for unlabeled data.
    pub label_column: Option<usize>,
    pub has_header: bool,
    /// Feature values are multiplied by this.
    pub scale: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: Some(0),
            has_header: false,
            scale: 1.0,
        }
    }
}

pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut dim = None;
    let mut values = Vec::new();
    let mut classes = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let mut features = 0;
        for (col, field) in record.iter().enumerate() {
            if Some(col) == options.label_column {
                let c: f64 = parse(field, row, col)?;
                if c < 0.0 || c.fract() != 0.0 || c > f64::from(u32::MAX) {
                    return Err(DataError::Csv(format!(
                        "row {row}: class {field:?} is not a nonnegative integer"
                    )));
                }
                classes.push(c as u32);
            } else {
                values.push(parse::<f64>(field, row, col)? * options.scale);
                features += 1;
            }
        }
        if let Some(label) = options.label_column {
            if label >= record.len() {
                return Err(DataError::Csv(format!("row {row}: no column {label}")));
            }
        }
        match dim {
            None => dim = Some(features),
            Some(d) if d != features => {
                return Err(DataError::Csv(format!(
                    "row {row} has {features} features, earlier rows {d}"
                )))
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| DataError::Csv("no data rows".into()))?;
    let ds = Dataset::from_flat(dim, values)?;
    Ok(if options.label_column.is_some() {
        ds.with_classes(classes)?
    } else {
        ds
    })
}

fn parse<T: std::str::FromStr>(field: &str, row: usize, col: usize) -> Result<T, DataError> {
    field
        .parse()
        .map_err(|_| DataError::Csv(format!("row {row}, column {col}: cannot parse {field:?}")))
}
