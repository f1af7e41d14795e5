//! Checkpoint codec.
//!
//! Layout:
//!
//!   "EDGMAT1"                      7-byte magic
//!   header length                  u32 little-endian
//!   header                         UTF-8 text
//!   payload                        f32 little-endian values
//!
//! The header carries `config.<key>=<value>` lines for every model-config
//! field followed by one `param <name> <d0>[x<d1>]` manifest line per
//! parameter, in canonical parameter order; the payload stores each
//! parameter's values in that same order. Encoding is canonical, so
//! encode(decode(bytes)) reproduces `bytes` exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{EdgmatModel, ModelConfig, ModelError};

pub const MAGIC: &[u8; 7] = b"EDGMAT1";

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointError {
    BadMagic,
    Truncated,
    HeaderSyntax { line: String },
    MissingConfigKey(&'static str),
    BadConfigValue { key: String },
    UnknownParam { name: String },
    ShapeMismatch { name: String },
    ManifestCount { expected: usize, actual: usize },
    TrailingData,
    Model(ModelError),
}

impl core::fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CheckpointError::BadMagic => write!(f, "not a checkpoint: bad magic"),
            CheckpointError::Truncated => write!(f, "checkpoint truncated"),
            CheckpointError::HeaderSyntax { line } => {
                write!(f, "unparseable header line '{line}'")
            }
            CheckpointError::MissingConfigKey(k) => {
                write!(f, "header missing config key '{k}'")
            }
            CheckpointError::BadConfigValue { key } => {
                write!(f, "bad value for config key '{key}'")
            }
            CheckpointError::UnknownParam { name } => {
                write!(f, "manifest names unknown parameter '{name}'")
            }
            CheckpointError::ShapeMismatch { name } => {
                write!(f, "parameter '{name}' has mismatched shape")
            }
            CheckpointError::ManifestCount { expected, actual } => {
                write!(f, "manifest lists {actual} parameters, model has {expected}")
            }
            CheckpointError::TrailingData => write!(f, "trailing bytes after payload"),
            CheckpointError::Model(e) => write!(f, "model rejected checkpoint: {e}"),
        }
    }
}

impl core::error::Error for CheckpointError {}

impl From<ModelError> for CheckpointError {
    fn from(e: ModelError) -> Self {
        CheckpointError::Model(e)
    }
}

fn shape_string(shape: &[usize]) -> String {
    let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    parts.join("x")
}

fn header_text(model: &EdgmatModel) -> String {
    let c = &model.config;
    let mut h = String::new();
    h.push_str(&format!("config.layers={}\n", c.layers));
    h.push_str(&format!("config.heads={}\n", c.heads));
    h.push_str(&format!("config.hidden={}\n", c.hidden));
    h.push_str(&format!("config.dropout={}\n", c.dropout));
    h.push_str(&format!("config.learning_rate={}\n", c.learning_rate));
    h.push_str(&format!("config.epochs={}\n", c.epochs));
    h.push_str(&format!("config.leaky_slope={}\n", c.leaky_slope));
    h.push_str(&format!("config.classes={}\n", c.classes));
    h.push_str(&format!("config.node_dim={}\n", c.node_dim));
    h.push_str(&format!("config.edge_dim={}\n", c.edge_dim));
    h.push_str(&format!("config.seed={}\n", c.seed));
    for p in model.params() {
        h.push_str(&format!("param {} {}\n", p.name, shape_string(p.value.shape())));
    }
    h
}

/// Serialize the model: magic, length-prefixed header, f32 payload.
pub fn encode(model: &EdgmatModel) -> Vec<u8> {
    let header = header_text(model);
    let payload_len: usize = model.params().iter().map(|p| p.value.len()).sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + 4 * payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for p in model.params() {
        for &v in p.value.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct ConfigLines<'a> {
    entries: Vec<(&'a str, &'a str)>,
}

impl<'a> ConfigLines<'a> {
    fn get(&self, key: &'static str) -> Result<&'a str, CheckpointError> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or(CheckpointError::MissingConfigKey(key))
    }

    fn parse<T: core::str::FromStr>(&self, key: &'static str) -> Result<T, CheckpointError> {
        self.get(key)?
            .parse()
            .map_err(|_| CheckpointError::BadConfigValue { key: key.to_string() })
    }
}

/// Reconstruct a model from checkpoint bytes, validating magic, header, and
/// payload sizes. Adam state is not stored; a loaded model predicts exactly
/// like the saved one (up to the f32 storage rounding).
pub fn decode(bytes: &[u8]) -> Result<EdgmatModel, CheckpointError> {
    if bytes.len() < MAGIC.len() {
        return Err(CheckpointError::Truncated);
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 4 {
        return Err(CheckpointError::Truncated);
    }
    let header_len = u32::from_le_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
    let rest = &rest[4..];
    if rest.len() < header_len {
        return Err(CheckpointError::Truncated);
    }
    let header = core::str::from_utf8(&rest[..header_len]).map_err(|_| {
        CheckpointError::HeaderSyntax {
            line: "<non-utf8>".to_string(),
        }
    })?;
    let mut payload = &rest[header_len..];

    let mut config_entries = Vec::new();
    let mut manifest: Vec<(&str, Vec<usize>)> = Vec::new();
    for line in header.lines() {
        if let Some(kv) = line.strip_prefix("config.") {
            let (k, v) = kv.split_once('=').ok_or_else(|| CheckpointError::HeaderSyntax {
                line: line.to_string(),
            })?;
            config_entries.push((k, v));
        } else if let Some(decl) = line.strip_prefix("param ") {
            let (name, shape_str) =
                decl.rsplit_once(' ')
                    .ok_or_else(|| CheckpointError::HeaderSyntax {
                        line: line.to_string(),
                    })?;
            let shape = shape_str
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CheckpointError::HeaderSyntax {
                    line: line.to_string(),
                })?;
            manifest.push((name, shape));
        } else if !line.is_empty() {
            return Err(CheckpointError::HeaderSyntax {
                line: line.to_string(),
            });
        }
    }

    let cfg = ConfigLines {
        entries: config_entries,
    };
    let config = ModelConfig {
        layers: cfg.parse("layers")?,
        heads: cfg.parse("heads")?,
        hidden: cfg.parse("hidden")?,
        dropout: cfg.parse("dropout")?,
        learning_rate: cfg.parse("learning_rate")?,
        epochs: cfg.parse("epochs")?,
        leaky_slope: cfg.parse("leaky_slope")?,
        classes: cfg.parse("classes")?,
        node_dim: cfg.parse("node_dim")?,
        edge_dim: cfg.parse("edge_dim")?,
        seed: cfg.parse("seed")?,
    };

    let mut model = EdgmatModel::new(config)?;
    let expected = model.params().len();
    if manifest.len() != expected {
        return Err(CheckpointError::ManifestCount {
            expected,
            actual: manifest.len(),
        });
    }
    for (p, (name, shape)) in model.params_mut().into_iter().zip(&manifest) {
        if &p.name != name {
            return Err(CheckpointError::UnknownParam {
                name: name.to_string(),
            });
        }
        if p.value.shape() != shape.as_slice() {
            return Err(CheckpointError::ShapeMismatch {
                name: name.to_string(),
            });
        }
        let n = p.value.len();
        if payload.len() < 4 * n {
            return Err(CheckpointError::Truncated);
        }
        for i in 0..n {
            let raw = [
                payload[4 * i],
                payload[4 * i + 1],
                payload[4 * i + 2],
                payload[4 * i + 3],
            ];
            p.value.data_mut()[i] = f64::from(f32::from_le_bytes(raw));
        }
        payload = &payload[4 * n..];
    }
    if !payload.is_empty() {
        return Err(CheckpointError::TrailingData);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_model() -> EdgmatModel {
        let mut cfg = ModelConfig::new(3, 4, 11);
        cfg.heads = 2;
        cfg.hidden = 3;
        EdgmatModel::new(cfg).unwrap()
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let model = demo_model();
        let bytes = encode(&model);
        let loaded = decode(&bytes).unwrap();
        let again = encode(&loaded);
        assert_eq!(bytes, again, "save→load→save must reproduce the file");
    }

    #[test]
    fn roundtrip_preserves_values_to_f32() {
        let model = demo_model();
        let loaded = decode(&encode(&model)).unwrap();
        for (a, b) in model.params().iter().zip(loaded.params()) {
            assert_eq!(a.name, b.name);
            let diff = a.value.max_abs_diff(&b.value);
            assert!(diff < 1e-6, "{}: f32 rounding too large ({diff})", a.name);
        }
        assert_eq!(model.config, loaded.config);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode(&demo_model());
        bytes[0] = b'X';
        assert_eq!(decode(&bytes).err(), Some(CheckpointError::BadMagic));
    }

    #[test]
    fn truncated_payload_rejected() {
        let bytes = encode(&demo_model());
        let cut = &bytes[..bytes.len() - 3];
        assert_eq!(decode(cut).err(), Some(CheckpointError::Truncated));
        assert_eq!(decode(&bytes[..4]).err(), Some(CheckpointError::Truncated));
    }

    #[test]
    fn tampered_shape_names_the_parameter() {
        let bytes = encode(&demo_model());
        // rewrite the first manifest line's shape (4x3 → 4x2)
        let needle = b"param layer0.head0.w_node 4x3";
        let pos = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .expect("manifest line present");
        let mut tampered = bytes.clone();
        tampered[pos + needle.len() - 1] = b'2';
        match decode(&tampered) {
            Err(CheckpointError::ShapeMismatch { name }) => {
                assert_eq!(name, "layer0.head0.w_node");
            }
            other => panic!("expected ShapeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&demo_model());
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        assert_eq!(decode(&bytes).err(), Some(CheckpointError::TrailingData));
    }

    #[test]
    fn header_garbage_rejected() {
        let mut bytes = encode(&demo_model());
        // corrupt a header byte ('config.' prefix of the first line)
        let start = MAGIC.len() + 4;
        bytes[start] = b'!';
        assert!(matches!(
            decode(&bytes),
            Err(CheckpointError::HeaderSyntax { .. })
        ));
    }
}
