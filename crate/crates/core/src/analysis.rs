//! Column normalization of perception-study response counts.
//!
//! Rows are the displayed emotion, columns the emotion a respondent
//! associated with it. Each column is divided by its total so every
//! response option sums to one regardless of how often it was picked.

use std::io::{Read, Write};

use thiserror::Error;

use crate::emotion::{parse_emotion, Emotion};

pub type CountMatrix = [[u64; 8]; 8];
pub type RateMatrix = [[f64; 8]; 8];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("all response counts are zero")]
    AllZero,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for AnalysisError {
    fn from(e: csv::Error) -> Self {
        AnalysisError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedConfusion {
    /// `rates[displayed][associated]`, both in canonical emotion order.
    pub rates: RateMatrix,
    /// Columns with no responses; left as zeros.
    pub empty_columns: Vec<Emotion>,
}

pub fn normalize_confusion(counts: &CountMatrix) -> Result<NormalizedConfusion, AnalysisError> {
    let totals: Vec<u64> = (0..8).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
    if totals.iter().all(|&t| t == 0) {
        return Err(AnalysisError::AllZero);
    }
    let mut rates = [[0.0; 8]; 8];
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if totals[j] > 0 {
                rates[i][j] = c as f64 / totals[j] as f64;
            }
        }
    }
    let empty_columns = Emotion::ALL.into_iter().filter(|e| totals[e.index()] == 0).collect();
    Ok(NormalizedConfusion { rates, empty_columns })
}

fn label(field: &str) -> Result<Emotion, AnalysisError> {
    parse_emotion(field).map_err(|e| AnalysisError::Csv(e.to_string()))
}

/// Reads a labelled 8×8 count table. The header row names the associated
/// emotions and the first column names the displayed ones; either may be
/// in any order.
pub fn read_counts_csv(input: impl Read) -> Result<CountMatrix, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() != 9 {
        return Err(AnalysisError::Csv(format!(
            "expected 9 header fields, got {}",
            header.len()
        )));
    }
    let columns: Vec<Emotion> = header.iter().skip(1).map(label).collect::<Result<_, _>>()?;
    ensure_permutation(&columns, "columns")?;

    let mut counts = [[0u64; 8]; 8];
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 9 {
            return Err(AnalysisError::Csv(format!(
                "row {}: expected 9 fields, got {}",
                k + 2,
                record.len()
            )));
        }
        let displayed = label(&record[0])?;
        rows.push(displayed);
        for (field, &assoc) in record.iter().skip(1).zip(&columns) {
            counts[displayed.index()][assoc.index()] = field
                .parse()
                .map_err(|_| AnalysisError::Csv(format!("row {}: bad count {field:?}", k + 2)))?;
        }
    }
    ensure_permutation(&rows, "rows")?;
    Ok(counts)
}

fn ensure_permutation(labels: &[Emotion], what: &str) -> Result<(), AnalysisError> {
    let mut seen = [false; 8];
    for e in labels {
        if std::mem::replace(&mut seen[e.index()], true) {
            return Err(AnalysisError::Csv(format!("duplicate {what} label {e}")));
        }
    }
    if labels.len() != 8 {
        return Err(AnalysisError::Csv(format!("expected 8 {what}, got {}", labels.len())));
    }
    Ok(())
}

/// Writes the normalized matrix with canonical-order labels.
pub fn write_rates_csv(out: impl Write, rates: &RateMatrix) -> Result<(), AnalysisError> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(Emotion::ALL.iter().map(|e| e.name().to_string()));
    writer.write_record(&header)?;
    for e in Emotion::ALL {
        let mut row = vec![e.name().to_string()];
        row.extend(rates[e.index()].iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
