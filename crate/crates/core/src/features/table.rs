//! Feature matrices on disk.
//!
//! CSV layout: `file_id,encoder_label,class_label,capacity,<feature names...>`,
//! one row per file. Covers carry capacity 0.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureError;

const FIXED_COLUMNS: [&str; 4] = ["file_id", "encoder_label", "class_label", "capacity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Cover,
    Stego,
}

impl ClassLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::Cover => "cover",
            ClassLabel::Stego => "stego",
        }
    }

    pub fn is_stego(&self) -> bool {
        *self == ClassLabel::Stego
    }

    pub fn from_stego(stego: bool) -> Self {
        if stego {
            ClassLabel::Stego
        } else {
            ClassLabel::Cover
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cover" => Ok(ClassLabel::Cover),
            "stego" => Ok(ClassLabel::Stego),
            other => Err(FeatureError::Table(format!("unknown class label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub file_id: String,
    pub encoder_label: String,
    pub class_label: ClassLabel,
    pub capacity: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, rows: Vec::new() }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<(), FeatureError> {
        if row.values.len() != self.names.len() {
            return Err(FeatureError::Table(format!("row {} has {} values, expected {}", row.file_id, row.values.len(), self.names.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = FIXED_COLUMNS.iter().copied().chain(self.names.iter().map(String::as_str)).collect();
        w.write_record(&header).map_err(table_err)?;
        for row in &self.rows {
            let mut record = vec![row.file_id.clone(), row.encoder_label.clone(), row.class_label.to_string(), row.capacity.to_string()];
            // `{}` on f64 prints the shortest string that parses back exactly
            record.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(table_err)?;
        }
        w.flush().map_err(|e| FeatureError::Table(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(table_err)?.clone();
        if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
            return Err(FeatureError::Table(format!("expected leading columns {FIXED_COLUMNS:?}")));
        }
        let mut table = FeatureTable::new(header.iter().skip(FIXED_COLUMNS.len()).map(str::to_string).collect());
        for record in r.records() {
            let record = record.map_err(table_err)?;
            let parse = |s: &str| s.parse::<f64>().map_err(|e| FeatureError::Table(format!("bad number {s:?}: {e}")));
            let values = record.iter().skip(FIXED_COLUMNS.len()).map(parse).collect::<Result<Vec<_>, _>>()?;
            table.push(FeatureRow {
                file_id: record[0].to_string(),
                encoder_label: record[1].to_string(),
                class_label: record[2].parse()?,
                capacity: parse(&record[3])?,
                values,
            })?;
        }
        Ok(table)
    }
}

fn table_err(e: csv::Error) -> FeatureError {
    FeatureError::Table(e.to_string())
}
