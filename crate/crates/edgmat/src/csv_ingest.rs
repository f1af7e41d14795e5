//! CSV ingestion: comma-separated, header row, UTF-8, RFC 4180 quoting
//! accepted. Rows are encoded into flow records in file order.

use std::path::Path;

use edgmat_core::record::FlowRecord;
use edgmat_core::schema::{DatasetSchema, RowError, SchemaError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open dataset {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Row(#[from] RowError),
}

/// Parse a dataset CSV into flow records, one per data row, encoding
/// features per the schema.
pub fn parse_csv(path: &Path, schema: &DatasetSchema) -> Result<Vec<FlowRecord>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let encoder = schema.bind(&header)?;

    let mut records = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let row = row?;
        let fields: Vec<&str> = row.iter().collect();
        records.push(encoder.encode(row_index, &fields)?);
    }
    Ok(records)
}

/// Debug re-serialization of the encoded matrix: one row per record with its
/// original row index, label id, and feature values.
pub fn encoded_matrix_csv(records: &[FlowRecord]) -> String {
    let dim = records.first().map_or(0, |r| r.features.len());
    let mut out = String::from("row_index,label");
    for j in 0..dim {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{}", r.row_index, r.label));
        for v in &r.features {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema_file::parse_schema_text;
    use std::io::Write;

    const SCHEMA: &str = "\
identifier_columns=src_ip,src_port,dst_ip,dst_port
label_column=label
class_names=Benign,Attack
numeric_columns=bytes,duration
categorical.protocol=tcp,udp
";

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_data_yields_empty_list() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv("src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n");
        let records = parse_csv(f.path(), &schema).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn rows_parse_in_file_order_with_indices() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             10.0.0.1,80,10.0.0.2,443,3.5,7.0,tcp,Benign\n\
             10.0.0.2,443,10.0.0.1,80,1.0,2.0,icmp,Attack\n",
        );
        let records = parse_csv(f.path(), &schema).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].features, vec![3.5, 7.0, 1.0, 0.0, 0.0]);
        assert_eq!(records[1].features[2..], [0.0, 0.0, 1.0]);
        assert_eq!(records[0].row_index, 0);
        assert_eq!(records[1].row_index, 1);
    }

    #[test]
    fn quoted_fields_accepted() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             \"10.0.0.1\",80,10.0.0.2,443,\"3.5\",7.0,\"tcp\",\"Benign\"\n",
        );
        let records = parse_csv(f.path(), &schema).unwrap();
        assert_eq!(records[0].features, vec![3.5, 7.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn reparse_is_bit_identical() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             a,1,b,2,0.30000000000000004,1e-3,udp,Benign\n\
             b,2,a,1,-7.25,9.5,udp,Attack\n",
        );
        let first = parse_csv(f.path(), &schema).unwrap();
        let second = parse_csv(f.path(), &schema).unwrap();
        for (x, y) in first.iter().zip(&second) {
            for (a, b) in x.features.iter().zip(&y.features) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let err = parse_csv(Path::new("/nonexistent/flows.csv"), &schema).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/flows.csv"));
    }

    #[test]
    fn bad_cells_surface_row_errors() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             a,1,b,2,not_a_number,1.0,tcp,Benign\n",
        );
        let err = parse_csv(f.path(), &schema).unwrap_err();
        assert!(matches!(err, IngestError::Row(RowError::BadNumeric { row: 1, .. })));

        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             a,1,b,2,1.0,1.0,tcp,Mystery\n",
        );
        let err = parse_csv(f.path(), &schema).unwrap_err();
        assert!(matches!(err, IngestError::Row(RowError::UnknownLabel { .. })));
    }

    #[test]
    fn missing_schema_column_is_a_schema_error() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv("src_ip,src_port,dst_ip,dst_port,bytes,duration,label\n");
        let err = parse_csv(f.path(), &schema).unwrap_err();
        assert!(matches!(
            err,
            IngestError::Schema(SchemaError::MissingColumn(c)) if c == "protocol"
        ));
    }

    #[test]
    fn encoded_matrix_roundtrips_losslessly() {
        let schema = parse_schema_text(SCHEMA).unwrap();
        let f = write_csv(
            "src_ip,src_port,dst_ip,dst_port,bytes,duration,protocol,label\n\
             a,1,b,2,0.1,2.5,tcp,Attack\n",
        );
        let records = parse_csv(f.path(), &schema).unwrap();
        let text = encoded_matrix_csv(&records);
        assert!(text.starts_with("row_index,label,f0,f1,f2,f3,f4\n"));
        assert!(text.contains("0,1,0.1,2.5,1,0,0\n"));
    }
}
