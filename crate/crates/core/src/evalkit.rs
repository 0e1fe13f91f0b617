//! Stratified holdout / k-fold splitting and multi-class metrics.
//!
//! Shuffles use splitmix64 driving a Fisher–Yates pass, so an assignment is
//! fully determined by the seed and the (id, label) set, independent of
//! input order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_CLASSES: usize = 6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("label {label} for `{sample_id}` is outside 0..{NUM_CLASSES}")]
    LabelRange { sample_id: String, label: i64 },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("empty prediction set")]
    Empty,
    #[error("prediction file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The 64-bit splitmix generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Fisher–Yates from the back: swap `i` with `next_u64() % (i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Where one sample landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assignment {
    Holdout(Split),
    Fold(u32),
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Holdout(s) => f.write_str(s.as_str()),
            Assignment::Fold(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for Assignment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Assignment::Holdout(Split::Train)),
            "val" => Ok(Assignment::Holdout(Split::Val)),
            "test" => Ok(Assignment::Holdout(Split::Test)),
            other => other.parse().map(Assignment::Fold).map_err(|_| format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitScheme {
    /// Train / val / test fractions.
    Holdout([f64; 3]),
    KFold(u32),
}

impl Default for SplitScheme {
    fn default() -> Self {
        SplitScheme::Holdout([0.70, 0.15, 0.15])
    }
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitScheme::Holdout([a, b, c]) => write!(f, "holdout:{a},{b},{c}"),
            SplitScheme::KFold(k) => write!(f, "kfold:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub seed: u64,
    pub scheme: SplitScheme,
    pub assignments: BTreeMap<String, Assignment>,
}

impl SplitAssignment {
    pub fn get(&self, sample_id: &str) -> Option<Assignment> {
        self.assignments.get(sample_id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Groups ids by label (sorted, deduplicated) and rejects duplicates and
/// out-of-range labels.
fn group_by_label<S: AsRef<str>>(ids_with_labels: &[(S, u8)]) -> Result<BTreeMap<u8, Vec<String>>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for (id, label) in ids_with_labels {
        let id = id.as_ref();
        if *label as usize >= NUM_CLASSES {
            return Err(EvalError::LabelRange { sample_id: id.to_string(), label: *label as i64 });
        }
        if !seen.insert(id) {
            return Err(EvalError::DuplicateId(id.to_string()));
        }
        groups.entry(*label).or_default().push(id.to_string());
    }
    for ids in groups.values_mut() {
        ids.sort();
    }
    Ok(groups)
}

/// Floor of `n * fraction`, tolerant of ratios like 0.7 that are not exact
/// in binary.
fn floor_cut(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction + 1e-9).floor() as usize).min(n)
}

/// Stratified holdout. Within each class (ascending label order, ids
/// sorted), ids are shuffled and cut at `⌊n·r₀⌋` and `⌊n·(r₀+r₁)⌋`.
pub fn split_holdout<S: AsRef<str>>(
    ids_with_labels: &[(S, u8)],
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitAssignment, EvalError> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(EvalError::InvalidRatios(format!("{ratios:?} must all be positive")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(EvalError::InvalidRatios(format!("{ratios:?} sum to {total}, not 1")));
    }
    let groups = group_by_label(ids_with_labels)?;
    if groups.is_empty() {
        return Err(EvalError::Stratification("no samples to split".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut assignments = BTreeMap::new();
    for mut ids in groups.into_values() {
        rng.shuffle(&mut ids);
        let n = ids.len();
        let cut1 = floor_cut(n, ratios[0]);
        let cut2 = floor_cut(n, ratios[0] + ratios[1]).max(cut1);
        for (pos, id) in ids.into_iter().enumerate() {
            let split = if pos < cut1 {
                Split::Train
            } else if pos < cut2 {
                Split::Val
            } else {
                Split::Test
            };
            assignments.insert(id, Assignment::Holdout(split));
        }
    }
    Ok(SplitAssignment { seed, scheme: SplitScheme::Holdout(ratios), assignments })
}

/// Stratified k-fold: per class, shuffle then deal ids round-robin. The
/// dealing position carries over between classes so global fold sizes also
/// differ by at most one.
pub fn split_kfold<S: AsRef<str>>(
    ids_with_labels: &[(S, u8)],
    k: u32,
    seed: u64,
) -> Result<SplitAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::Stratification(format!("k = {k}, need at least 2 folds")));
    }
    let groups = group_by_label(ids_with_labels)?;
    if groups.is_empty() {
        return Err(EvalError::Stratification("no samples to split".into()));
    }
    if let Some((label, ids)) = groups.iter().find(|(_, ids)| ids.len() < k as usize) {
        return Err(EvalError::Stratification(format!("class {label} has {} samples, fewer than k = {k}", ids.len())));
    }
    let mut rng = SplitMix64::new(seed);
    let mut assignments = BTreeMap::new();
    let mut next_fold = 0u32;
    for mut ids in groups.into_values() {
        rng.shuffle(&mut ids);
        for id in ids {
            assignments.insert(id, Assignment::Fold(next_fold));
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(SplitAssignment { seed, scheme: SplitScheme::KFold(k), assignments })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: String,
    pub true_label: u8,
    pub pred_label: u8,
}

/// Validated predictions: unique ids, labels in `0..6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    rows: Vec<PredictionRow>,
}

#[derive(Deserialize)]
struct RawPredictionRow {
    sample_id: String,
    true_label: i64,
    pred_label: i64,
}

impl PredictionSet {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for row in &rows {
            for label in [row.true_label, row.pred_label] {
                if label as usize >= NUM_CLASSES {
                    return Err(EvalError::LabelRange { sample_id: row.sample_id.clone(), label: label as i64 });
                }
            }
            if !seen.insert(row.sample_id.as_str()) {
                return Err(EvalError::DuplicateId(row.sample_id.clone()));
            }
        }
        Ok(Self { rows })
    }

    /// Builds from parallel label slices with ids `0..n`.
    pub fn from_labels(truth: &[u8], pred: &[u8]) -> Result<Self, EvalError> {
        if truth.len() != pred.len() {
            return Err(EvalError::Format(format!("{} true labels vs {} predictions", truth.len(), pred.len())));
        }
        Self::new(
            truth
                .iter()
                .zip(pred)
                .enumerate()
                .map(|(i, (&t, &p))| PredictionRow { sample_id: i.to_string(), true_label: t, pred_label: p })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads `sample_id,true_label,pred_label` CSV with that exact header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["sample_id", "true_label", "pred_label"] {
            return Err(EvalError::Format(format!(
                "header must be `sample_id,true_label,pred_label`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<RawPredictionRow>() {
            let raw = rec?;
            let to_label = |v: i64| {
                u8::try_from(v)
                    .ok()
                    .filter(|l| (*l as usize) < NUM_CLASSES)
                    .ok_or_else(|| EvalError::LabelRange { sample_id: raw.sample_id.clone(), label: v })
            };
            rows.push(PredictionRow {
                true_label: to_label(raw.true_label)?,
                pred_label: to_label(raw.pred_label)?,
                sample_id: raw.sample_id.clone(),
            });
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        if self.rows.is_empty() {
            wtr.write_record(["sample_id", "true_label", "pred_label"])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Per-class precision / recall / F1 and support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub samples: u64,
    pub accuracy: f64,
    /// Macro means are over classes present in the true labels.
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
    /// Support-weighted means, for comparison.
    pub weighted_recall: f64,
    pub weighted_precision: f64,
    pub weighted_f1: f64,
    pub per_class: [ClassMetrics; NUM_CLASSES],
    /// Rows are true labels, columns predicted.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl MetricsReport {
    pub fn classes_present(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_CLASSES).filter(|&c| self.per_class[c].support > 0)
    }

    /// Flat `key=value` document, one entry per line:
    ///
    /// `samples`, `accuracy`, `macro_{recall,precision,f1}`,
    /// `weighted_{recall,precision,f1}`, `classes_present` (comma list),
    /// `class_<k>_{precision,recall,f1,support}` for every class, and
    /// `confusion_row_<k>` (six comma-separated counts, true label `k`).
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples={}", self.samples);
        for (k, v) in [
            ("accuracy", self.accuracy),
            ("macro_recall", self.macro_recall),
            ("macro_precision", self.macro_precision),
            ("macro_f1", self.macro_f1),
            ("weighted_recall", self.weighted_recall),
            ("weighted_precision", self.weighted_precision),
            ("weighted_f1", self.weighted_f1),
        ] {
            let _ = writeln!(s, "{k}={v}");
        }
        let present: Vec<String> = self.classes_present().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "classes_present={}", present.join(","));
        for (c, m) in self.per_class.iter().enumerate() {
            let _ = writeln!(s, "class_{c}_precision={}", m.precision);
            let _ = writeln!(s, "class_{c}_recall={}", m.recall);
            let _ = writeln!(s, "class_{c}_f1={}", m.f1);
            let _ = writeln!(s, "class_{c}_support={}", m.support);
        }
        for (c, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "confusion_row_{c}={}", cells.join(","));
        }
        s
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(preds: &PredictionSet) -> Result<MetricsReport, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for row in preds.rows() {
        confusion[row.true_label as usize][row.pred_label as usize] += 1;
    }
    let total = preds.len() as u64;
    let correct: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();

    let mut per_class = [ClassMetrics { precision: 0.0, recall: 0.0, f1: 0.0, support: 0 }; NUM_CLASSES];
    for (c, m) in per_class.iter_mut().enumerate() {
        let tp = confusion[c][c];
        let support: u64 = confusion[c].iter().sum();
        let predicted: u64 = (0..NUM_CLASSES).map(|r| confusion[r][c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        *m = ClassMetrics { precision, recall, f1, support };
    }
    let present: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let n_present = present.len() as f64;
    let macro_of = |f: fn(&ClassMetrics) -> f64| present.iter().map(|m| f(m)).sum::<f64>() / n_present;
    let weighted_of =
        |f: fn(&ClassMetrics) -> f64| present.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64;

    Ok(MetricsReport {
        samples: total,
        accuracy: ratio(correct, total),
        macro_recall: macro_of(|m| m.recall),
        macro_precision: macro_of(|m| m.precision),
        macro_f1: macro_of(|m| m.f1),
        weighted_recall: weighted_of(|m| m.recall),
        weighted_precision: weighted_of(|m| m.precision),
        weighted_f1: weighted_of(|m| m.f1),
        per_class,
        confusion,
    })
}

/// Mean and population standard deviation of one metric across folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldSummary {
    pub folds: usize,
    pub accuracy: MeanStd,
    pub macro_recall: MeanStd,
    pub macro_precision: MeanStd,
    pub macro_f1: MeanStd,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

pub fn aggregate_folds(reports: &[MetricsReport]) -> Result<FoldSummary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(FoldSummary {
        folds: reports.len(),
        accuracy: mean_std(reports.iter().map(|r| r.accuracy)),
        macro_recall: mean_std(reports.iter().map(|r| r.macro_recall)),
        macro_precision: mean_std(reports.iter().map(|r| r.macro_precision)),
        macro_f1: mean_std(reports.iter().map(|r| r.macro_f1)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize, label: u8) -> Vec<(String, u8)> {
        (0..n).map(|i| (format!("c{label}_{i:05}"), label)).collect()
    }

    fn count(a: &SplitAssignment, want: Assignment) -> usize {
        a.assignments.values().filter(|&&x| x == want).count()
    }

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of splitmix64 seeded with 0.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn holdout_divisible_class() {
        let a = split_holdout(&ids(100, 0), [0.7, 0.15, 0.15], 1).unwrap();
        assert_eq!(count(&a, Assignment::Holdout(Split::Train)), 70);
        assert_eq!(count(&a, Assignment::Holdout(Split::Val)), 15);
        assert_eq!(count(&a, Assignment::Holdout(Split::Test)), 15);
    }

    #[test]
    fn holdout_table_counts() {
        // floor(n*0.70), floor(n*0.85) - floor(n*0.70), remainder
        let expected = [
            (3094, 2165, 464, 465),
            (2512, 1758, 377, 377),
            (2530, 1771, 379, 380),
            (2298, 1608, 345, 345),
            (2728, 1909, 409, 410),
            (2450, 1715, 367, 368),
        ];
        for (label, &(n, tr, va, te)) in expected.iter().enumerate() {
            let a = split_holdout(&ids(n, label as u8), [0.7, 0.15, 0.15], 42).unwrap();
            assert_eq!(count(&a, Assignment::Holdout(Split::Train)), tr, "n={n}");
            assert_eq!(count(&a, Assignment::Holdout(Split::Val)), va, "n={n}");
            assert_eq!(count(&a, Assignment::Holdout(Split::Test)), te, "n={n}");
        }
    }

    #[test]
    fn holdout_is_deterministic_and_order_independent() {
        let mut input = ids(50, 1);
        input.extend(ids(30, 4));
        let a = split_holdout(&input, [0.7, 0.15, 0.15], 7).unwrap();
        input.reverse();
        let b = split_holdout(&input, [0.7, 0.15, 0.15], 7).unwrap();
        assert_eq!(a, b);
        let c = split_holdout(&input, [0.7, 0.15, 0.15], 8).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn holdout_errors() {
        let empty: Vec<(String, u8)> = vec![];
        assert!(matches!(split_holdout(&empty, [0.7, 0.15, 0.15], 0), Err(EvalError::Stratification(_))));
        assert!(matches!(split_holdout(&ids(5, 0), [0.7, 0.2, 0.2], 0), Err(EvalError::InvalidRatios(_))));
        assert!(split_holdout(&ids(5, 0), [1.0, 0.0, 0.0], 0).is_err());
        let mut dup = ids(3, 0);
        dup.push(dup[0].clone());
        assert!(matches!(split_holdout(&dup, [0.7, 0.15, 0.15], 0), Err(EvalError::DuplicateId(_))));
        assert!(matches!(split_holdout(&ids(3, 6), [0.7, 0.15, 0.15], 0), Err(EvalError::LabelRange { .. })));
    }

    #[test]
    fn kfold_examples() {
        let a = split_kfold(&ids(10, 0), 5, 3).unwrap();
        for f in 0..5 {
            assert_eq!(count(&a, Assignment::Fold(f)), 2);
        }
        let a = split_kfold(&ids(11, 0), 5, 3).unwrap();
        let mut sizes: Vec<usize> = (0..5).map(|f| count(&a, Assignment::Fold(f))).collect();
        sizes.sort();
        assert_eq!(sizes, [2, 2, 2, 2, 3]);
        assert!(matches!(split_kfold(&ids(4, 0), 5, 0), Err(EvalError::Stratification(_))));
    }

    #[test]
    fn hand_worked_metrics() {
        let p = PredictionSet::from_labels(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        let m = compute_metrics(&p).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.per_class[0].precision, 1.0);
        assert_eq!(m.per_class[0].recall, 0.5);
        assert!((m.per_class[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class[1].recall, 1.0);
        assert_eq!(m.macro_recall, 0.75);
        assert!((m.macro_precision - 5.0 / 6.0).abs() < 1e-15);
        assert!((m.macro_f1 - 11.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_metrics() {
        let perfect = compute_metrics(&PredictionSet::from_labels(&[0, 3, 5], &[0, 3, 5]).unwrap()).unwrap();
        assert_eq!(
            (perfect.accuracy, perfect.macro_f1, perfect.macro_precision, perfect.macro_recall),
            (1.0, 1.0, 1.0, 1.0)
        );
        let wrong = compute_metrics(&PredictionSet::from_labels(&[2, 2, 2], &[1, 1, 4]).unwrap()).unwrap();
        assert_eq!((wrong.accuracy, wrong.macro_f1), (0.0, 0.0));
        assert!(matches!(compute_metrics(&PredictionSet::new(vec![]).unwrap()), Err(EvalError::Empty)));
        assert!(matches!(PredictionSet::from_labels(&[0], &[6]), Err(EvalError::LabelRange { .. })));
    }

    #[test]
    fn prediction_csv_round_trip() {
        let p = PredictionSet::from_labels(&[0, 5, 2], &[1, 5, 2]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sample_id,true_label,pred_label\n"));
        assert_eq!(PredictionSet::read_csv(buf.as_slice()).unwrap(), p);
        let bad = "sample_id,true_label,pred_label\na,0,7\n";
        assert!(matches!(PredictionSet::read_csv(bad.as_bytes()), Err(EvalError::LabelRange { label: 7, .. })));
        let bad = "sample_id,true_label,pred_label\na,-1,0\n";
        assert!(matches!(PredictionSet::read_csv(bad.as_bytes()), Err(EvalError::LabelRange { label: -1, .. })));
        assert!(matches!(PredictionSet::read_csv("id,t,p\n".as_bytes()), Err(EvalError::Format(_))));
    }

    #[test]
    fn kv_report_lists_keys() {
        let m = compute_metrics(&PredictionSet::from_labels(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap()).unwrap();
        let kv = m.to_kv();
        assert!(kv.contains("accuracy=0.75\n"));
        assert!(kv.contains("classes_present=0,1\n"));
        assert!(kv.contains("confusion_row_0=1,1,0,0,0,0\n"));
    }

    #[test]
    fn fold_aggregation() {
        let base = compute_metrics(&PredictionSet::from_labels(&[0, 1], &[0, 1]).unwrap()).unwrap();
        let s = aggregate_folds(&[base.clone(), base.clone()]).unwrap();
        assert_eq!(s.accuracy.std, 0.0);
        let mut a = base.clone();
        a.accuracy = 0.98;
        let mut b = base;
        b.accuracy = 1.00;
        let s = aggregate_folds(&[a, b]).unwrap();
        assert!((s.accuracy.mean - 0.99).abs() < 1e-12);
        assert!((s.accuracy.std - 0.01).abs() < 1e-12);
        assert!(aggregate_folds(&[]).is_err());
    }
}
