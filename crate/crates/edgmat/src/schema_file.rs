//! Schema file parsing.
//!
//! A schema is a flat key-value text file (`key=value`, `#` comments):
//!
//! ```text
//! identifier_columns=IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT
//! label_column=Attack
//! class_names=Benign,DDoS,DoS,Reconnaissance,Theft
//! numeric_columns=IN_BYTES,IN_PKTS,OUT_BYTES,OUT_PKTS
//! categorical.PROTOCOL=6,17,1
//! ```
//!
//! Categorical blocks keep file order; each gets a reserved "other" slot for
//! values outside its vocabulary.

use std::path::Path;

use edgmat_core::schema::{CategoricalColumn, DatasetSchema, SchemaError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaFileError {
    #[error("cannot read schema file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema file line {line} is not key=value: '{text}'")]
    BadLine { line: usize, text: String },
    #[error("schema file repeats key '{0}'")]
    DuplicateKey(String),
    #[error("schema file is missing key '{0}'")]
    MissingKey(&'static str),
    #[error("identifier_columns must list exactly 4 columns, found {0}")]
    IdentifierCount(usize),
    #[error("schema file has unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid schema: {0}")]
    Invalid(#[from] SchemaError),
}

fn split_list(value: &str) -> Vec<String> {
    if value.trim().is_empty() {
        return Vec::new();
    }
    value.split(',').map(|s| s.trim().to_string()).collect()
}

/// Parse schema text into a validated [`DatasetSchema`].
pub fn parse_schema_text(text: &str) -> Result<DatasetSchema, SchemaFileError> {
    let mut identifier_columns: Option<Vec<String>> = None;
    let mut label_column: Option<String> = None;
    let mut class_names: Option<Vec<String>> = None;
    let mut numeric_columns: Option<Vec<String>> = None;
    let mut categorical_columns: Vec<CategoricalColumn> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SchemaFileError::BadLine {
            line: i + 1,
            text: line.to_string(),
        })?;
        let key = key.trim();
        match key {
            "identifier_columns" => {
                if identifier_columns.replace(split_list(value)).is_some() {
                    return Err(SchemaFileError::DuplicateKey(key.into()));
                }
            }
            "label_column" => {
                if label_column.replace(value.trim().to_string()).is_some() {
                    return Err(SchemaFileError::DuplicateKey(key.into()));
                }
            }
            "class_names" => {
                if class_names.replace(split_list(value)).is_some() {
                    return Err(SchemaFileError::DuplicateKey(key.into()));
                }
            }
            "numeric_columns" => {
                if numeric_columns.replace(split_list(value)).is_some() {
                    return Err(SchemaFileError::DuplicateKey(key.into()));
                }
            }
            _ => {
                if let Some(name) = key.strip_prefix("categorical.") {
                    if categorical_columns.iter().any(|c| c.name == name) {
                        return Err(SchemaFileError::DuplicateKey(key.into()));
                    }
                    categorical_columns.push(CategoricalColumn {
                        name: name.to_string(),
                        vocabulary: split_list(value),
                    });
                } else {
                    return Err(SchemaFileError::UnknownKey(key.into()));
                }
            }
        }
    }

    let ids = identifier_columns.ok_or(SchemaFileError::MissingKey("identifier_columns"))?;
    if ids.len() != 4 {
        return Err(SchemaFileError::IdentifierCount(ids.len()));
    }
    let schema = DatasetSchema {
        identifier_columns: [
            ids[0].clone(),
            ids[1].clone(),
            ids[2].clone(),
            ids[3].clone(),
        ],
        label_column: label_column.ok_or(SchemaFileError::MissingKey("label_column"))?,
        categorical_columns,
        numeric_columns: numeric_columns.unwrap_or_default(),
        class_names: class_names.ok_or(SchemaFileError::MissingKey("class_names"))?,
    };
    schema.validate()?;
    Ok(schema)
}

pub fn load_schema(path: &Path) -> Result<DatasetSchema, SchemaFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_schema_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = "\
# NetFlow-style demo schema
identifier_columns=src_ip,src_port,dst_ip,dst_port
label_column=label
class_names=Benign,Attack
numeric_columns=bytes,duration
categorical.protocol=tcp,udp
";

    #[test]
    fn parses_a_complete_schema() {
        let s = parse_schema_text(DEMO).unwrap();
        assert_eq!(s.identifier_columns[0], "src_ip");
        assert_eq!(s.class_names, vec!["Benign", "Attack"]);
        assert_eq!(s.numeric_columns.len(), 2);
        assert_eq!(s.categorical_columns[0].vocabulary, vec!["tcp", "udp"]);
        assert_eq!(s.feature_dim(), 5);
    }

    #[test]
    fn missing_keys_are_named() {
        let err = parse_schema_text("label_column=x\nclass_names=a,b\n").unwrap_err();
        assert!(matches!(
            err,
            SchemaFileError::MissingKey("identifier_columns")
        ));
    }

    #[test]
    fn wrong_identifier_count_rejected() {
        let text = DEMO.replace(
            "identifier_columns=src_ip,src_port,dst_ip,dst_port",
            "identifier_columns=src_ip,dst_ip",
        );
        assert!(matches!(
            parse_schema_text(&text),
            Err(SchemaFileError::IdentifierCount(2))
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{DEMO}mystery=1\n");
        assert!(matches!(
            parse_schema_text(&text),
            Err(SchemaFileError::UnknownKey(k)) if k == "mystery"
        ));
    }

    #[test]
    fn schema_invariants_enforced() {
        let text = DEMO.replace("numeric_columns=bytes,duration", "numeric_columns=bytes,label");
        assert!(matches!(
            parse_schema_text(&text),
            Err(SchemaFileError::Invalid(SchemaError::OverlappingColumns(_)))
        ));
    }
}
