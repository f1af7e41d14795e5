//! Dataset schema: which CSV columns identify the sockets, which carry the
//! label, and how the rest are encoded into the edge-feature vector.
//!
//! Feature layout is fixed by the schema: numeric columns first (schema
//! order), then one block per categorical column holding a one-hot slot per
//! vocabulary entry plus a reserved trailing "other" slot for unseen values.
//! The four identifier columns and the label never enter the features.

use alloc::string::{String, ToString};
use alloc::{vec, vec::Vec};

use crate::record::FlowRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalColumn {
    pub name: String,
    pub vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    /// `src_ip, src_port, dst_ip, dst_port`, in this order.
    pub identifier_columns: [String; 4],
    pub label_column: String,
    pub categorical_columns: Vec<CategoricalColumn>,
    pub numeric_columns: Vec<String>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaError {
    OverlappingColumns(String),
    EmptyVocabulary(String),
    DuplicateVocabularyEntry { column: String, value: String },
    NoClasses,
    DuplicateClass(String),
    MissingColumn(String),
}

impl core::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SchemaError::OverlappingColumns(c) => {
                write!(f, "column '{c}' is declared with more than one role")
            }
            SchemaError::EmptyVocabulary(c) => {
                write!(f, "categorical column '{c}' has an empty vocabulary")
            }
            SchemaError::DuplicateVocabularyEntry { column, value } => {
                write!(f, "categorical column '{column}' repeats value '{value}'")
            }
            SchemaError::NoClasses => write!(f, "schema declares no class names"),
            SchemaError::DuplicateClass(c) => write!(f, "class '{c}' declared twice"),
            SchemaError::MissingColumn(c) => {
                write!(f, "header is missing schema column '{c}'")
            }
        }
    }
}

impl core::error::Error for SchemaError {}

/// Row-level parse failures, reported with the 1-based data-row ordinal.
#[derive(Debug, Clone, PartialEq)]
pub enum RowError {
    FieldCount { row: usize, expected: usize, actual: usize },
    BadNumeric { row: usize, column: String, value: String },
    NonFiniteNumeric { row: usize, column: String },
    BadPort { row: usize, column: String, value: String },
    UnknownLabel { row: usize, value: String },
}

impl core::fmt::Display for RowError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RowError::FieldCount { row, expected, actual } => {
                write!(f, "row {row}: expected {expected} fields, found {actual}")
            }
            RowError::BadNumeric { row, column, value } => {
                write!(f, "row {row}: column '{column}' value '{value}' is not numeric")
            }
            RowError::NonFiniteNumeric { row, column } => {
                write!(f, "row {row}: column '{column}' is not finite")
            }
            RowError::BadPort { row, column, value } => {
                write!(f, "row {row}: column '{column}' value '{value}' is not a port (0-65535)")
            }
            RowError::UnknownLabel { row, value } => {
                write!(f, "row {row}: label '{value}' is not in the schema class list")
            }
        }
    }
}

impl core::error::Error for RowError {}

impl DatasetSchema {
    /// Validate the schema invariants: pairwise-disjoint column roles,
    /// non-empty duplicate-free vocabularies, non-empty class list.
    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen: Vec<String> = Vec::new();
        let mut check = |name: &str| -> Result<(), SchemaError> {
            if seen.iter().any(|s| s == name) {
                return Err(SchemaError::OverlappingColumns(name.to_string()));
            }
            seen.push(name.to_string());
            Ok(())
        };
        // the ip/port pair of one endpoint may share a column only if names
        // differ; simply require all four names distinct
        for c in &self.identifier_columns {
            check(c)?;
        }
        check(&self.label_column)?;
        for c in &self.categorical_columns {
            check(&c.name)?;
        }
        for c in &self.numeric_columns {
            check(c)?;
        }

        for c in &self.categorical_columns {
            if c.vocabulary.is_empty() {
                return Err(SchemaError::EmptyVocabulary(c.name.clone()));
            }
            for (i, v) in c.vocabulary.iter().enumerate() {
                if c.vocabulary[..i].contains(v) {
                    return Err(SchemaError::DuplicateVocabularyEntry {
                        column: c.name.clone(),
                        value: v.clone(),
                    });
                }
            }
        }

        if self.class_names.is_empty() {
            return Err(SchemaError::NoClasses);
        }
        for (i, c) in self.class_names.iter().enumerate() {
            if self.class_names[..i].contains(c) {
                return Err(SchemaError::DuplicateClass(c.clone()));
            }
        }
        Ok(())
    }

    /// Width of the encoded feature vector: numeric columns plus one slot per
    /// vocabulary entry plus the reserved "other" slot per categorical block.
    pub fn feature_dim(&self) -> usize {
        self.numeric_columns.len()
            + self
                .categorical_columns
                .iter()
                .map(|c| c.vocabulary.len() + 1)
                .sum::<usize>()
    }

    /// Positions of the numeric (z-scored) features in the encoded vector.
    pub fn numeric_positions(&self) -> Vec<usize> {
        (0..self.numeric_columns.len()).collect()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Resolve schema columns against a CSV header, yielding an encoder.
    pub fn bind(&self, header: &[String]) -> Result<RowEncoder, SchemaError> {
        let find = |name: &str| -> Result<usize, SchemaError> {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SchemaError::MissingColumn(name.to_string()))
        };
        let identifiers = [
            find(&self.identifier_columns[0])?,
            find(&self.identifier_columns[1])?,
            find(&self.identifier_columns[2])?,
            find(&self.identifier_columns[3])?,
        ];
        let label = find(&self.label_column)?;
        let numeric = self
            .numeric_columns
            .iter()
            .map(|c| find(c))
            .collect::<Result<Vec<_>, _>>()?;
        let categorical = self
            .categorical_columns
            .iter()
            .map(|c| find(&c.name))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RowEncoder {
            schema: self.clone(),
            width: header.len(),
            identifiers,
            label,
            numeric,
            categorical,
        })
    }
}

/// Encodes raw CSV fields into a [`FlowRecord`] using header positions
/// resolved once by [`DatasetSchema::bind`].
#[derive(Debug, Clone)]
pub struct RowEncoder {
    schema: DatasetSchema,
    width: usize,
    identifiers: [usize; 4],
    label: usize,
    numeric: Vec<usize>,
    categorical: Vec<usize>,
}

impl RowEncoder {
    pub fn feature_dim(&self) -> usize {
        self.schema.feature_dim()
    }

    /// Encode one data row. `row_index` is the 0-based data-row ordinal and
    /// is preserved on the record; errors report it 1-based.
    pub fn encode(&self, row_index: usize, fields: &[&str]) -> Result<FlowRecord, RowError> {
        let ordinal = row_index + 1;
        if fields.len() != self.width {
            return Err(RowError::FieldCount {
                row: ordinal,
                expected: self.width,
                actual: fields.len(),
            });
        }

        let parse_port = |col: usize| -> Result<u16, RowError> {
            let raw = fields[col].trim();
            raw.parse::<u16>().map_err(|_| RowError::BadPort {
                row: ordinal,
                column: self.header_name(col),
                value: raw.to_string(),
            })
        };

        let src_ip = fields[self.identifiers[0]].trim().to_string();
        let src_port = parse_port(self.identifiers[1])?;
        let dst_ip = fields[self.identifiers[2]].trim().to_string();
        let dst_port = parse_port(self.identifiers[3])?;

        let label_raw = fields[self.label].trim();
        let label = self
            .schema
            .class_id(label_raw)
            .ok_or_else(|| RowError::UnknownLabel {
                row: ordinal,
                value: label_raw.to_string(),
            })?;

        let mut features = Vec::with_capacity(self.feature_dim());
        for (k, &col) in self.numeric.iter().enumerate() {
            let raw = fields[col].trim();
            let v: f64 = raw.parse().map_err(|_| RowError::BadNumeric {
                row: ordinal,
                column: self.schema.numeric_columns[k].clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(RowError::NonFiniteNumeric {
                    row: ordinal,
                    column: self.schema.numeric_columns[k].clone(),
                });
            }
            features.push(v);
        }
        for (k, &col) in self.categorical.iter().enumerate() {
            let spec = &self.schema.categorical_columns[k];
            let raw = fields[col].trim();
            let hit = spec.vocabulary.iter().position(|v| v == raw);
            let block = spec.vocabulary.len() + 1;
            let mut one_hot = vec![0.0; block];
            // unseen values land in the reserved trailing slot
            one_hot[hit.unwrap_or(block - 1)] = 1.0;
            features.extend_from_slice(&one_hot);
        }

        Ok(FlowRecord {
            src_ip,
            src_port,
            dst_ip,
            dst_port,
            features,
            label,
            row_index,
        })
    }

    fn header_name(&self, col: usize) -> String {
        for (i, &c) in self.identifiers.iter().enumerate() {
            if c == col {
                return self.schema.identifier_columns[i].clone();
            }
        }
        "?".to_string()
    }
}
