//! Run configuration: defaults, overridden by a flat key-value config file,
//! overridden by command-line flags of the same names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use edgmat_core::graph::InitRule;
use edgmat_core::model::ModelConfig;
use edgmat_core::record::SplitMode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line} is not key=value: '{text}'")]
    BadLine { line: usize, text: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for '{key}'")]
    BadValue { key: String, value: String },
    #[error("missing required setting '{0}' (config file or flag)")]
    Missing(&'static str),
    #[error("'{key}' out of range: {detail}")]
    OutOfRange { key: &'static str, detail: String },
}

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub mode: SplitMode,
    /// Stratified pre-subsampling fraction; 1 keeps the whole dataset.
    pub sample_fraction: f64,
    pub train_fraction: f64,
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub leaky_slope: f64,
    pub seed: u64,
    pub node_init: InitRule,
    pub out: PathBuf,
}

/// Unresolved settings collected from the config file and flags; `None`
/// falls through to the layer below.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub mode: Option<String>,
    pub sample_fraction: Option<f64>,
    pub train_fraction: Option<f64>,
    pub layers: Option<usize>,
    pub heads: Option<usize>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub dropout: Option<f64>,
    pub lr: Option<f64>,
    pub leaky_slope: Option<f64>,
    pub seed: Option<u64>,
    pub node_init: Option<String>,
    pub out: Option<PathBuf>,
}

fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
            line: i + 1,
            text: line.to_string(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: v,
        }),
    }
}

impl Overrides {
    /// Read a config file into an `Overrides` layer. Keys match the CLI flag
    /// names (`sample-fraction`, `lr`, ...).
    pub fn from_file(path: &Path) -> Result<Overrides, ConfigError> {
        let mut map = parse_kv_file(path)?;
        let o = Overrides {
            dataset: take::<String>(&mut map, "dataset")?.map(PathBuf::from),
            schema: take::<String>(&mut map, "schema")?.map(PathBuf::from),
            mode: take(&mut map, "mode")?,
            sample_fraction: take(&mut map, "sample-fraction")?,
            train_fraction: take(&mut map, "train-fraction")?,
            layers: take(&mut map, "layers")?,
            heads: take(&mut map, "heads")?,
            hidden: take(&mut map, "hidden")?,
            epochs: take(&mut map, "epochs")?,
            dropout: take(&mut map, "dropout")?,
            lr: take(&mut map, "lr")?,
            leaky_slope: take(&mut map, "leaky-slope")?,
            seed: take(&mut map, "seed")?,
            node_init: take(&mut map, "node-init")?,
            out: take::<String>(&mut map, "out")?.map(PathBuf::from),
        };
        if let Some(k) = map.into_keys().next() {
            return Err(ConfigError::UnknownKey(k));
        }
        Ok(o)
    }

    /// Later layers win field by field.
    pub fn merge(self, over: Overrides) -> Overrides {
        Overrides {
            dataset: over.dataset.or(self.dataset),
            schema: over.schema.or(self.schema),
            mode: over.mode.or(self.mode),
            sample_fraction: over.sample_fraction.or(self.sample_fraction),
            train_fraction: over.train_fraction.or(self.train_fraction),
            layers: over.layers.or(self.layers),
            heads: over.heads.or(self.heads),
            hidden: over.hidden.or(self.hidden),
            epochs: over.epochs.or(self.epochs),
            dropout: over.dropout.or(self.dropout),
            lr: over.lr.or(self.lr),
            leaky_slope: over.leaky_slope.or(self.leaky_slope),
            seed: over.seed.or(self.seed),
            node_init: over.node_init.or(self.node_init),
            out: over.out.or(self.out),
        }
    }

    /// Apply defaults and validate ranges.
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let mode_str = self.mode.unwrap_or_else(|| "transductive".to_string());
        let mode = SplitMode::parse(&mode_str).ok_or(ConfigError::BadValue {
            key: "mode".into(),
            value: mode_str,
        })?;
        let init_str = self.node_init.unwrap_or_else(|| "ones".to_string());
        let node_init = InitRule::parse(&init_str).ok_or(ConfigError::BadValue {
            key: "node-init".into(),
            value: init_str,
        })?;
        let cfg = RunConfig {
            dataset: self.dataset.ok_or(ConfigError::Missing("dataset"))?,
            schema: self.schema.ok_or(ConfigError::Missing("schema"))?,
            mode,
            sample_fraction: self.sample_fraction.unwrap_or(1.0),
            train_fraction: self.train_fraction.unwrap_or(0.7),
            layers: self.layers.unwrap_or(2),
            heads: self.heads.unwrap_or(4),
            hidden: self.hidden.unwrap_or(32),
            epochs: self.epochs.unwrap_or(150),
            dropout: self.dropout.unwrap_or(0.2),
            learning_rate: self.lr.unwrap_or(0.01),
            leaky_slope: self.leaky_slope.unwrap_or(0.2),
            seed: self.seed.unwrap_or(0),
            node_init,
            out: self.out.unwrap_or_else(|| PathBuf::from("edgmat-out")),
        };
        if !(cfg.sample_fraction > 0.0 && cfg.sample_fraction <= 1.0) {
            return Err(ConfigError::OutOfRange {
                key: "sample-fraction",
                detail: format!("{} not in (0, 1]", cfg.sample_fraction),
            });
        }
        if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
            return Err(ConfigError::OutOfRange {
                key: "train-fraction",
                detail: format!("{} not in (0, 1)", cfg.train_fraction),
            });
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(ConfigError::OutOfRange {
                key: "dropout",
                detail: format!("{} not in [0, 1)", cfg.dropout),
            });
        }
        Ok(cfg)
    }
}

impl RunConfig {
    /// The model config for a dataset with `classes` classes and
    /// `feature_dim`-wide features.
    pub fn model_config(&self, classes: usize, feature_dim: usize) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            heads: self.heads,
            hidden: self.hidden,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            leaky_slope: self.leaky_slope,
            classes,
            node_dim: feature_dim,
            edge_dim: feature_dim,
            seed: self.seed,
        }
    }

    /// Canonical key-value echo of every setting, for `run_meta.kv`.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dataset={}\n", self.dataset.display()));
        s.push_str(&format!("schema={}\n", self.schema.display()));
        s.push_str(&format!("mode={}\n", self.mode.as_str()));
        s.push_str(&format!("sample-fraction={}\n", self.sample_fraction));
        s.push_str(&format!("train-fraction={}\n", self.train_fraction));
        s.push_str(&format!("layers={}\n", self.layers));
        s.push_str(&format!("heads={}\n", self.heads));
        s.push_str(&format!("hidden={}\n", self.hidden));
        s.push_str(&format!("epochs={}\n", self.epochs));
        s.push_str(&format!("dropout={}\n", self.dropout));
        s.push_str(&format!("lr={}\n", self.learning_rate));
        s.push_str(&format!("leaky-slope={}\n", self.leaky_slope));
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!("out={}\n", self.out.display()));
        s
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out.join("checkpoint")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "dataset=flows.csv\nschema=schema.kv\nheads=8\nseed=3").unwrap();
        let file = Overrides::from_file(f.path()).unwrap();
        let flags = Overrides {
            heads: Some(2),
            ..Overrides::default()
        };
        let cfg = file.merge(flags).resolve().unwrap();
        assert_eq!(cfg.heads, 2, "flag wins");
        assert_eq!(cfg.seed, 3, "file wins over default");
        assert_eq!(cfg.hidden, 32, "default");
        assert_eq!(cfg.train_fraction, 0.7, "default");
    }

    #[test]
    fn unknown_and_malformed_keys_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "dataset=x\nschema=y\ntypo-key=1").unwrap();
        assert!(matches!(
            Overrides::from_file(f.path()),
            Err(ConfigError::UnknownKey(k)) if k == "typo-key"
        ));

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "just a line").unwrap();
        assert!(matches!(
            Overrides::from_file(f.path()),
            Err(ConfigError::BadLine { line: 1, .. })
        ));
    }

    #[test]
    fn fractions_validated() {
        let base = Overrides {
            dataset: Some("d".into()),
            schema: Some("s".into()),
            ..Overrides::default()
        };
        let mut bad = base.clone();
        bad.train_fraction = Some(1.0);
        assert!(matches!(
            bad.resolve(),
            Err(ConfigError::OutOfRange { key: "train-fraction", .. })
        ));
        let mut bad = base.clone();
        bad.sample_fraction = Some(0.0);
        assert!(bad.resolve().is_err());
        assert!(base.resolve().is_ok());
    }

    #[test]
    fn missing_required_settings_are_named() {
        let err = Overrides::default().resolve().unwrap_err();
        assert!(matches!(err, ConfigError::Missing("dataset")));
    }
}
