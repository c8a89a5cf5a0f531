//! CSV ingestion: header row, one named label column, every other column numeric.

use std::io::Read;
use std::path::Path;

use npcs::LabeledSample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("label column '{column}' not found; columns are {available:?}")]
    MissingLabelColumn { column: String, available: Vec<String> },
    /// `row` is 1-based and counts the header as row 1.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: u64, column: String, message: String },
    #[error("non-numeric value '{value}' at row {row}, column '{column}'")]
    NonNumericFeature { row: u64, column: String, value: String },
    #[error("unexpected label value '{value}' at row {row}; a binary label column is required")]
    UnknownLabelValue { row: u64, value: String },
    #[error("designated class-0 value '{value}' never occurs in column '{column}'")]
    AbsentClass0Value { column: String, value: String },
    #[error("file has no feature columns")]
    NoFeatures,
    #[error("file has no data rows")]
    NoRows,
}

/// Reads a CSV file. Rows whose label equals `class0_value` become class 0,
/// the other label value class 1.
pub fn ingest_csv(path: &Path, label_column: &str, class0_value: &str) -> Result<LabeledSample, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ingest_reader(file, label_column, class0_value)
}

pub fn ingest_reader<R: Read>(reader: R, label_column: &str, class0_value: &str) -> Result<LabeledSample, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| IngestError::Parse {
            row: 1,
            column: "header".into(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| IngestError::MissingLabelColumn {
            column: label_column.to_string(),
            available: headers.clone(),
        })?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(IngestError::NoFeatures);
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut other_label: Option<String> = None;
    for (i, record) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| IngestError::Parse {
            row,
            column: e
                .position()
                .map_or_else(|| "?".to_string(), |p| format!("record {}", p.record())),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(IngestError::Parse {
                row,
                column: format!("{} fields", record.len()),
                message: format!("expected {} fields", headers.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            if j == label_idx {
                if field == class0_value {
                    labels.push(0u8);
                } else {
                    match &other_label {
                        Some(v) if v != field => {
                            return Err(IngestError::UnknownLabelValue {
                                row,
                                value: field.to_string(),
                            })
                        }
                        Some(_) => {}
                        None => other_label = Some(field.to_string()),
                    }
                    labels.push(1u8);
                }
            } else {
                let v: f64 = field.parse().map_err(|_| IngestError::NonNumericFeature {
                    row,
                    column: headers[j].clone(),
                    value: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(IngestError::NonNumericFeature {
                        row,
                        column: headers[j].clone(),
                        value: field.to_string(),
                    });
                }
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(IngestError::NoRows);
    }
    if !labels.contains(&0) {
        return Err(IngestError::AbsentClass0Value {
            column: label_column.to_string(),
            value: class0_value.to_string(),
        });
    }
    Ok(LabeledSample::new(features, labels, d).expect("shape checked while reading"))
}
