//! Flow records and the dataset operations that run on them: z-score
//! normalization, stratified sampling, and stratified train/test splits.

use alloc::format;
use alloc::string::String;
use alloc::{vec, vec::Vec};

use crate::rng::StreamRng;

/// One parsed flow: the four socket identifiers, the encoded feature vector,
/// and the class label. Identifier fields define graph topology only and
/// never appear inside `features`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub src_ip: String,
    pub src_port: u16,
    pub dst_ip: String,
    pub dst_port: u16,
    pub features: Vec<f64>,
    pub label: usize,
    pub row_index: usize,
}

/// Transductive: one graph over all records, masks select train/test edges.
/// Inductive: independent train and test graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Transductive,
    Inductive,
}

impl SplitMode {
    pub fn parse(s: &str) -> Option<SplitMode> {
        match s {
            "transductive" => Some(SplitMode::Transductive),
            "inductive" => Some(SplitMode::Inductive),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SplitMode::Transductive => "transductive",
            SplitMode::Inductive => "inductive",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, train_fraction: f64, seed: u64) -> Result<Self, RecordError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(RecordError::FractionOutOfRange(train_fraction));
        }
        Ok(SplitSpec {
            mode,
            train_fraction,
            seed,
        })
    }
}

/// Per-position mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub positions: Vec<usize>,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordError {
    EmptyRecordList,
    FractionOutOfRange(f64),
    PositionOutOfRange { position: usize, dim: usize },
    LayoutMismatch { expected: usize, actual: usize },
}

impl core::fmt::Display for RecordError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RecordError::EmptyRecordList => write!(f, "record list is empty"),
            RecordError::FractionOutOfRange(x) => {
                write!(f, "fraction {x} outside the valid range")
            }
            RecordError::PositionOutOfRange { position, dim } => {
                write!(f, "numeric position {position} outside feature dim {dim}")
            }
            RecordError::LayoutMismatch { expected, actual } => {
                write!(f, "feature layout mismatch: stats expect dim {expected}, record has {actual}")
            }
        }
    }
}

impl core::error::Error for RecordError {}

/// Fit z-score statistics at the given feature positions over `records`.
/// Population stddev; a constant column reports stddev 0.
pub fn normalize_fit(records: &[FlowRecord], positions: &[usize]) -> Result<NormStats, RecordError> {
    if records.is_empty() {
        return Err(RecordError::EmptyRecordList);
    }
    let dim = records[0].features.len();
    for &p in positions {
        if p >= dim {
            return Err(RecordError::PositionOutOfRange { position: p, dim });
        }
    }
    let n = records.len() as f64;
    let mut mean = vec![0.0; positions.len()];
    for r in records {
        for (k, &p) in positions.iter().enumerate() {
            mean[k] += r.features[p];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; positions.len()];
    for r in records {
        for (k, &p) in positions.iter().enumerate() {
            let d = r.features[p] - mean[k];
            var[k] += d * d;
        }
    }
    let stddev = var.iter().map(|v| libm::sqrt(v / n)).collect();
    Ok(NormStats {
        positions: positions.to_vec(),
        mean,
        stddev,
    })
}

/// Apply fitted statistics: `v → (v − mean)/stddev`, with zero-variance
/// positions mapped to 0. Positions not covered by `stats` are untouched.
pub fn normalize_apply(
    mut records: Vec<FlowRecord>,
    stats: &NormStats,
) -> Result<Vec<FlowRecord>, RecordError> {
    for r in &mut records {
        let dim = r.features.len();
        for (k, &p) in stats.positions.iter().enumerate() {
            if p >= dim {
                return Err(RecordError::LayoutMismatch {
                    expected: p + 1,
                    actual: dim,
                });
            }
            let v = r.features[p];
            r.features[p] = if stats.stddev[k] == 0.0 {
                0.0
            } else {
                (v - stats.mean[k]) / stats.stddev[k]
            };
        }
    }
    Ok(records)
}

/// Count records per class; the vector is as long as the largest label + 1.
pub fn class_histogram(records: &[FlowRecord], classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; classes];
    for r in records {
        if r.label >= counts.len() {
            counts.resize(r.label + 1, 0);
        }
        counts[r.label] += 1;
    }
    counts
}

/// Per-class selection count: `round(fraction · n)`, at least 1 for any
/// non-empty class when the fraction is positive.
fn per_class_take(fraction: f64, n: usize) -> usize {
    if n == 0 || fraction <= 0.0 {
        return 0;
    }
    let k = libm::round(fraction * n as f64) as usize;
    k.clamp(1, n)
}

fn group_by_class(records: &[FlowRecord]) -> Vec<(usize, Vec<usize>)> {
    let max_label = records.iter().map(|r| r.label).max().unwrap_or(0);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (i, r) in records.iter().enumerate() {
        groups[r.label].push(i);
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .collect()
}

/// Class-stratified subsample: per class exactly `round(fraction·n_c)`
/// records (minimum 1), chosen by a seeded shuffle and returned in original
/// row order. Deterministic for a fixed `(records, fraction, seed)`.
pub fn stratified_sample(
    records: &[FlowRecord],
    fraction: f64,
    seed: u64,
) -> Result<Vec<FlowRecord>, RecordError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RecordError::FractionOutOfRange(fraction));
    }
    let mut picked: Vec<usize> = Vec::new();
    for (label, mut members) in group_by_class(records) {
        let take = per_class_take(fraction, members.len());
        let mut rng = StreamRng::substream(seed, "stratified_sample", label as u64);
        rng.shuffle(&mut members);
        picked.extend_from_slice(&members[..take]);
    }
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| records[i].clone()).collect())
}

/// A stratified split with any warnings raised along the way.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub train: Vec<FlowRecord>,
    pub test: Vec<FlowRecord>,
    pub warnings: Vec<String>,
}

/// Per-class train/test partition at `spec.train_fraction`, using the same
/// rounding rule as [`stratified_sample`]. A class with a single record goes
/// to train with a warning. Train and test are disjoint and cover the input.
pub fn stratified_split(records: &[FlowRecord], spec: &SplitSpec) -> SplitOutcome {
    let mut train_idx: Vec<usize> = Vec::new();
    let mut test_idx: Vec<usize> = Vec::new();
    let mut warnings = Vec::new();
    for (label, mut members) in group_by_class(records) {
        if members.len() == 1 {
            warnings.push(format!(
                "class {label} has a single record; assigned to train"
            ));
            train_idx.push(members[0]);
            continue;
        }
        let take = per_class_take(spec.train_fraction, members.len());
        let mut rng = StreamRng::substream(spec.seed, "stratified_split", label as u64);
        rng.shuffle(&mut members);
        train_idx.extend_from_slice(&members[..take]);
        test_idx.extend_from_slice(&members[take..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    SplitOutcome {
        train: train_idx.into_iter().map(|i| records[i].clone()).collect(),
        test: test_idx.into_iter().map(|i| records[i].clone()).collect(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record(label: usize, row_index: usize, features: Vec<f64>) -> FlowRecord {
        FlowRecord {
            src_ip: "10.0.0.1".to_string(),
            src_port: 1,
            dst_ip: "10.0.0.2".to_string(),
            dst_port: 2,
            features,
            label,
            row_index,
        }
    }

    #[test]
    fn normalize_fit_hand_values() {
        let records = vec![record(0, 0, vec![2.0, 5.0]), record(0, 1, vec![4.0, 5.0])];
        let stats = normalize_fit(&records, &[0, 1]).unwrap();
        assert_eq!(stats.mean, vec![3.0, 5.0]);
        // population stddev: sqrt(((2-3)^2 + (4-3)^2)/2) = 1
        assert_eq!(stats.stddev, vec![1.0, 0.0]);
    }

    #[test]
    fn normalize_fit_single_record_has_zero_stddev() {
        let stats = normalize_fit(&[record(0, 0, vec![7.0, -1.0])], &[0, 1]).unwrap();
        assert_eq!(stats.stddev, vec![0.0, 0.0]);
        assert!(normalize_fit(&[], &[0]).is_err());
    }

    #[test]
    fn normalize_apply_formula_and_zero_variance_rule() {
        let stats = NormStats {
            positions: vec![0],
            mean: vec![3.0],
            stddev: vec![1.0],
        };
        let out = normalize_apply(vec![record(0, 0, vec![4.0, 9.0])], &stats).unwrap();
        assert_eq!(out[0].features, vec![1.0, 9.0]); // position 1 untouched

        // fit on train, applied to an unseen test value: same formula
        let test = normalize_apply(vec![record(0, 1, vec![10.0, 0.0])], &stats).unwrap();
        assert_eq!(test[0].features[0], 7.0);

        let constant = NormStats {
            positions: vec![0],
            mean: vec![5.0],
            stddev: vec![0.0],
        };
        let out = normalize_apply(vec![record(0, 0, vec![5.0, 1.0])], &constant).unwrap();
        assert_eq!(out[0].features[0], 0.0);
    }

    #[test]
    fn normalized_train_set_has_zero_mean_unit_stddev() {
        let mut rng = StreamRng::new(4, "norm-prop");
        let records: Vec<FlowRecord> = (0..50)
            .map(|i| record(0, i, vec![rng.uniform(-5.0, 5.0), rng.uniform(100.0, 200.0)]))
            .collect();
        let stats = normalize_fit(&records, &[0, 1]).unwrap();
        let normed = normalize_apply(records, &stats).unwrap();
        let refit = normalize_fit(&normed, &[0, 1]).unwrap();
        for k in 0..2 {
            assert!(refit.mean[k].abs() < 1e-10);
            assert!((refit.stddev[k] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sample_fraction_one_is_identity() {
        let records: Vec<FlowRecord> = (0..10).map(|i| record(i % 2, i, vec![0.0])).collect();
        let out = stratified_sample(&records, 1.0, 5).unwrap();
        assert_eq!(out, records);
    }

    #[test]
    fn sample_rounding_rule_and_minimum_one() {
        // 100 of class A, 10 of class B at fraction 0.1 → 10 A + 1 B
        let mut records: Vec<FlowRecord> = (0..100).map(|i| record(0, i, vec![0.0])).collect();
        records.extend((100..110).map(|i| record(1, i, vec![0.0])));
        let out = stratified_sample(&records, 0.1, 7).unwrap();
        let hist = class_histogram(&out, 2);
        assert_eq!(hist, vec![10, 1]);
    }

    #[test]
    fn sample_is_deterministic_and_in_row_order() {
        let records: Vec<FlowRecord> = (0..60).map(|i| record(i % 3, i, vec![0.0])).collect();
        let a = stratified_sample(&records, 0.25, 42).unwrap();
        let b = stratified_sample(&records, 0.25, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].row_index < w[1].row_index));
        let c = stratified_sample(&records, 0.25, 43).unwrap();
        assert_ne!(a, c, "different seeds select different subsets");
    }

    #[test]
    fn sample_rejects_bad_fractions() {
        let records = vec![record(0, 0, vec![0.0])];
        assert!(stratified_sample(&records, 0.0, 1).is_err());
        assert!(stratified_sample(&records, 1.5, 1).is_err());
    }

    #[test]
    fn split_sizes_follow_rounding() {
        let records: Vec<FlowRecord> = (0..20).map(|i| record(i / 10, i, vec![0.0])).collect();
        let spec = SplitSpec::new(SplitMode::Transductive, 0.7, 3).unwrap();
        let out = stratified_split(&records, &spec);
        assert_eq!(class_histogram(&out.train, 2), vec![7, 7]);
        assert_eq!(class_histogram(&out.test, 2), vec![3, 3]);
        assert!(out.warnings.is_empty());

        // disjoint cover
        let mut all: Vec<usize> = out
            .train
            .iter()
            .chain(&out.test)
            .map(|r| r.row_index)
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic() {
        let records: Vec<FlowRecord> = (0..30).map(|i| record(i % 3, i, vec![0.0])).collect();
        let spec = SplitSpec::new(SplitMode::Inductive, 0.5, 9).unwrap();
        let a = stratified_split(&records, &spec);
        let b = stratified_split(&records, &spec);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn singleton_class_goes_to_train_with_warning() {
        let mut records: Vec<FlowRecord> = (0..6).map(|i| record(0, i, vec![0.0])).collect();
        records.push(record(1, 6, vec![0.0]));
        let spec = SplitSpec::new(SplitMode::Transductive, 0.5, 1).unwrap();
        let out = stratified_split(&records, &spec);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("class 1"));
        assert!(out.train.iter().any(|r| r.label == 1));
        assert!(out.test.iter().all(|r| r.label != 1));
    }

    #[test]
    fn split_spec_validates_fraction() {
        assert!(SplitSpec::new(SplitMode::Transductive, 0.0, 1).is_err());
        assert!(SplitSpec::new(SplitMode::Transductive, 1.0, 1).is_err());
        assert!(SplitSpec::new(SplitMode::Transductive, 0.5, 1).is_ok());
    }
}
