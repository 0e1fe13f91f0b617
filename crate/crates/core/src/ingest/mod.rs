//! Reading Phase-OTDR measurements into [`RawSample`]s.
//!
//! Two on-disk formats are accepted: MAT level 5 files (see [`mat`]) and a
//! plain-text CSV fallback (see [`csv_fallback`]). Each sample is a
//! `12 x 10_000` intensity matrix: 12 spatial regions, 10,000 pulses.

pub mod csv_fallback;
pub mod mat;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::encodings::{EncodingError, TimeSeries};

pub use mat::{parse_mat, parse_mat_bytes, MatMatrix};

/// Spatial regions per sample.
pub const REGION_COUNT: usize = 12;
/// Time points per region series.
pub const SERIES_LENGTH: usize = 10_000;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unsupported MAT format: {0}")]
    UnsupportedMatFormat(String),
    #[error("MAT v7.3 (HDF5) files are not supported; re-save with `save(file, '-v7')` in MATLAB or `scipy.io.savemat` to get a level 5 file")]
    UnsupportedMatV73,
    #[error("corrupt MAT file: {0}")]
    CorruptMatFile(String),
    #[error("variable `{0}` not found in MAT file")]
    VariableNotFound(String),
    #[error("{context}: expected {expected}, found {rows}x{cols}")]
    ShapeMismatch { context: String, rows: usize, cols: usize, expected: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    CsvShape { line: usize, found: usize, expected: usize },
    #[error("line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error("unknown event name `{0}`")]
    UnknownEvent(String),
    #[error("invalid series in {context}: {source}")]
    Series {
        context: String,
        #[source]
        source: EncodingError,
    },
    #[error("invalid ingest config: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
}

impl IngestError {
    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (IngestError::Io { .. } | IngestError::InFile { .. }) => e,
            e => IngestError::InFile { path: path.to_path_buf(), source: Box::new(e) },
        }
    }
}

/// The six disturbance classes and their integer labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    Background = 0,
    Digging = 1,
    Knocking = 2,
    Watering = 3,
    Shaking = 4,
    Walking = 5,
}

impl EventClass {
    pub const ALL: [EventClass; 6] = [
        EventClass::Background,
        EventClass::Digging,
        EventClass::Knocking,
        EventClass::Watering,
        EventClass::Shaking,
        EventClass::Walking,
    ];

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(label: u8) -> Option<Self> {
        Self::ALL.get(label as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventClass::Background => "Background",
            EventClass::Digging => "Digging",
            EventClass::Knocking => "Knocking",
            EventClass::Watering => "Watering",
            EventClass::Shaking => "Shaking",
            EventClass::Walking => "Walking",
        }
    }

    /// Case-insensitive lookup. Accepts the canonical names, their verb stems
    /// (`dig`, `knock`, ...) and ignores a leading numeric prefix such as
    /// `01_` so dataset directory names resolve.
    pub fn from_name(name: &str) -> Option<Self> {
        let trimmed = name.trim().trim_start_matches(|c: char| c.is_ascii_digit() || c == '_' || c == '-' || c == ' ');
        let lower = trimmed.to_ascii_lowercase();
        let class = match lower.as_str() {
            "background" | "bg" => EventClass::Background,
            "digging" | "dig" => EventClass::Digging,
            "knocking" | "knock" => EventClass::Knocking,
            "watering" | "water" => EventClass::Watering,
            "shaking" | "shake" => EventClass::Shaking,
            "walking" | "walk" => EventClass::Walking,
            _ => return None,
        };
        Some(class)
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measurement: 12 region series of 10,000 points and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    sample_id: String,
    event: EventClass,
    regions: Vec<TimeSeries>,
}

impl RawSample {
    pub fn new(sample_id: String, event: EventClass, regions: Vec<TimeSeries>) -> Result<Self, IngestError> {
        if regions.len() != REGION_COUNT {
            return Err(IngestError::ShapeMismatch {
                context: format!("sample {sample_id}"),
                rows: regions.len(),
                cols: regions.first().map_or(0, TimeSeries::len),
                expected: format!("{REGION_COUNT} regions"),
            });
        }
        if let Some(r) = regions.iter().find(|r| r.len() != SERIES_LENGTH) {
            return Err(IngestError::ShapeMismatch {
                context: format!("sample {sample_id}"),
                rows: regions.len(),
                cols: r.len(),
                expected: format!("{REGION_COUNT}x{SERIES_LENGTH}"),
            });
        }
        Ok(Self { sample_id, event, regions })
    }

    /// Builds a sample from a row-major `12 x 10_000` buffer.
    pub fn from_row_major(sample_id: String, event: EventClass, data: &[f64]) -> Result<Self, IngestError> {
        if data.len() != REGION_COUNT * SERIES_LENGTH {
            return Err(IngestError::ShapeMismatch {
                context: format!("sample {sample_id}"),
                rows: data.len() / SERIES_LENGTH,
                cols: SERIES_LENGTH,
                expected: format!("{REGION_COUNT}x{SERIES_LENGTH}"),
            });
        }
        let regions = data
            .chunks_exact(SERIES_LENGTH)
            .enumerate()
            .map(|(r, chunk)| {
                TimeSeries::new(chunk.to_vec())
                    .map_err(|source| IngestError::Series { context: format!("sample {sample_id} region {r}"), source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(sample_id, event, regions)
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn event(&self) -> EventClass {
        self.event
    }

    pub fn label(&self) -> u8 {
        self.event.label()
    }

    pub fn regions(&self) -> &[TimeSeries] {
        &self.regions
    }
}

/// One configured input: a file, or a directory scanned for `.mat`/`.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SourceSpec {
    #[serde(deserialize_with = "de_event")]
    pub event: EventClass,
    pub path: PathBuf,
    /// Restrict MAT parsing to this variable name.
    #[serde(default)]
    pub variable: Option<String>,
}

fn de_event<'de, D: serde::Deserializer<'de>>(d: D) -> Result<EventClass, D::Error> {
    let name = String::deserialize(d)?;
    EventClass::from_name(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown event `{name}`")))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct IngestConfig {
    #[serde(default, rename = "source")]
    pub sources: Vec<SourceSpec>,
    /// Accept `10_000 x 12` matrices, reading regions from columns.
    #[serde(default)]
    pub transpose: bool,
}

/// Input file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Mat,
    Csv,
}

impl SourceFormat {
    pub fn of(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mat" => Some(SourceFormat::Mat),
            "csv" | "txt" => Some(SourceFormat::Csv),
            _ => None,
        }
    }
}

/// A single input file with its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub event: EventClass,
    pub path: PathBuf,
    pub format: SourceFormat,
    pub variable: Option<String>,
}

impl IngestConfig {
    /// Parses the TOML form:
    ///
    /// ```toml
    /// transpose = true
    /// [[source]]
    /// event = "Digging"
    /// path = "raw/digging"
    /// variable = "data"   # optional
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))
    }

    /// Treats every subdirectory of `root` whose name resolves to an event
    /// class as that class's source.
    pub fn from_layout_dir(root: &Path) -> Result<Self, IngestError> {
        let entries = fs::read_dir(root).map_err(|source| IngestError::Io { path: root.to_path_buf(), source })?;
        let mut sources = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| IngestError::Io { path: root.to_path_buf(), source })?;
            let path = entry.path();
            if !path.is_dir() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            match EventClass::from_name(&name) {
                Some(event) => sources.push(SourceSpec { event, path, variable: None }),
                None => log::warn!("ignoring directory {} (not an event name)", path.display()),
            }
        }
        if sources.is_empty() {
            return Err(IngestError::Config(format!("no event directories found under {}", root.display())));
        }
        sources.sort_by(|a, b| (a.event, &a.path).cmp(&(b.event, &b.path)));
        Ok(Self { sources, transpose: false })
    }

    /// Expands every source into a sorted list of files. Missing paths are
    /// errors; unrecognised extensions inside directories are skipped.
    pub fn discover(&self) -> Result<Vec<SourceFile>, IngestError> {
        let mut files = Vec::new();
        for spec in &self.sources {
            let meta =
                fs::metadata(&spec.path).map_err(|source| IngestError::Io { path: spec.path.clone(), source })?;
            let mut found = Vec::new();
            if meta.is_dir() {
                collect_files(&spec.path, &mut found)?;
            } else {
                found.push(spec.path.clone());
            }
            for path in found {
                let Some(format) = SourceFormat::of(&path) else {
                    if !meta.is_dir() {
                        return Err(IngestError::Config(format!(
                            "{}: unrecognised input extension (expected .mat or .csv)",
                            path.display()
                        )));
                    }
                    continue;
                };
                files.push(SourceFile { event: spec.event, path, format, variable: spec.variable.clone() });
            }
        }
        files.sort_by(|a, b| (a.event, &a.path).cmp(&(b.event, &b.path)));
        files.dedup_by(|a, b| a.path == b.path);
        Ok(files)
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), IngestError> {
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
    for entry in entries {
        let path = entry.map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Tag used in sample ids: the file stem, with separators made safe.
pub fn file_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().replace([',', ' ', '/', '\\'], "-"))
        .unwrap_or_else(|| "input".to_string())
}

/// Turns decoded matrices into samples `<event>_<file>_<index>`.
///
/// Each matrix must be `12 x 10_000`, or `10_000 x 12` when `transpose` is
/// set (regions are then the columns).
pub fn to_samples(
    matrices: &[MatMatrix],
    event: EventClass,
    file: &str,
    transpose: bool,
) -> Result<Vec<RawSample>, IngestError> {
    matrices
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let sample_id = format!("{event}_{file}_{index}");
            let (regions_dim, length_dim) = if transpose { (m.cols, m.rows) } else { (m.rows, m.cols) };
            if regions_dim != REGION_COUNT || length_dim != SERIES_LENGTH {
                let expected = if transpose {
                    format!("{SERIES_LENGTH}x{REGION_COUNT} (transposed)")
                } else {
                    format!("{REGION_COUNT}x{SERIES_LENGTH}")
                };
                return Err(IngestError::ShapeMismatch {
                    context: format!("matrix `{}` ({sample_id})", m.name),
                    rows: m.rows,
                    cols: m.cols,
                    expected,
                });
            }
            // Column-major storage: a column is contiguous, a row is strided.
            let mut data = Vec::with_capacity(REGION_COUNT * SERIES_LENGTH);
            for r in 0..REGION_COUNT {
                if transpose {
                    data.extend_from_slice(m.column(r));
                } else {
                    data.extend((0..SERIES_LENGTH).map(|t| m.get(r, t)));
                }
            }
            RawSample::from_row_major(sample_id, event, &data)
        })
        .collect()
}

/// Loads every sample from one input file.
pub fn load_file(source: &SourceFile, transpose: bool) -> Result<Vec<RawSample>, IngestError> {
    let tag = file_tag(&source.path);
    let result = match source.format {
        SourceFormat::Mat => parse_mat(&source.path, source.variable.as_deref())
            .and_then(|m| to_samples(&m, source.event, &tag, transpose)),
        SourceFormat::Csv => csv_fallback::parse_csv_fallback(&source.path, source.event),
    };
    result.map_err(|e| e.in_file(&source.path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> MatMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        MatMatrix::new("x".into(), rows, cols, data).unwrap()
    }

    #[test]
    fn label_map_is_bijective() {
        for (i, e) in EventClass::ALL.iter().enumerate() {
            assert_eq!(e.label() as usize, i);
            assert_eq!(EventClass::from_label(i as u8), Some(*e));
            assert_eq!(EventClass::from_name(e.name()), Some(*e));
        }
        assert_eq!(EventClass::from_label(6), None);
        assert_eq!(EventClass::from_name("02_Knock"), Some(EventClass::Knocking));
        assert_eq!(EventClass::from_name("WALKING"), Some(EventClass::Walking));
        assert_eq!(EventClass::from_name("running"), None);
    }

    #[test]
    fn digging_matrix_becomes_label_one() {
        let m = matrix(12, SERIES_LENGTH, |r, t| (r * 7 + t % 13) as f64);
        let s = to_samples(&[m], EventClass::Digging, "f1", false).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label(), 1);
        assert_eq!(s[0].sample_id(), "Digging_f1_0");
        assert_eq!(s[0].regions()[3].values()[5], (3 * 7 + 5) as f64);
    }

    #[test]
    fn transposed_matrix_reads_columns() {
        let m = matrix(SERIES_LENGTH, 12, |t, r| (r * 100_000 + t) as f64);
        assert!(matches!(
            to_samples(std::slice::from_ref(&m), EventClass::Walking, "f", false),
            Err(IngestError::ShapeMismatch { rows: 10_000, cols: 12, .. })
        ));
        let s = to_samples(&[m], EventClass::Walking, "f", true).unwrap();
        assert_eq!(s[0].regions()[2].values()[9], 200_009.0);
    }

    #[test]
    fn wrong_shape_names_dimensions() {
        let m = matrix(11, SERIES_LENGTH, |_, _| 1.0);
        let err = to_samples(&[m], EventClass::Digging, "f", false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("11x10000"), "{msg}");
    }

    #[test]
    fn config_from_toml() {
        let cfg = IngestConfig::from_toml(
            r#"
            transpose = true
            [[source]]
            event = "digging"
            path = "a/b"
            variable = "data"
            "#,
        )
        .unwrap();
        assert!(cfg.transpose);
        assert_eq!(cfg.sources[0].event, EventClass::Digging);
        assert_eq!(cfg.sources[0].variable.as_deref(), Some("data"));
        assert!(IngestConfig::from_toml("[[source]]\nevent = \"running\"\npath = \"x\"").is_err());
    }
}
