//! End-to-end batch transformation: ingest → per-region encodings → region
//! grids → RGB fusion → resize → PNG, with a manifest, split assignment and
//! run statistics.
//!
//! Output directory layout:
//!
//! ```text
//! <out>/images/<Event>/<sample_id>.png
//! <out>/manifest.csv
//! <out>/stats.txt
//! <out>/errors.txt      (only when some samples failed)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encodings::{
    gadf, gasf, generate_sinusoid, recurrence_plot, rescale_minmax, to_polar, EncodingError, RpConfig, SinusoidSpec,
    TimeSeries,
};
use crate::evalkit::{split_holdout, split_kfold, EvalError, PredictionSet, SplitAssignment, SplitMix64, SplitScheme};
use crate::imaging::{
    compose_grid, fuse_rgb, matrix_to_gray, resize_area, write_png_sized, GrayImage, GridLayout, ImagingError, RgbImage,
};
use crate::ingest::{
    file_tag, load_file, EventClass, IngestConfig, IngestError, RawSample, SourceFile, REGION_COUNT, SERIES_LENGTH,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const STATS_FILE: &str = "stats.txt";
pub const ERRORS_FILE: &str = "errors.txt";
const MANIFEST_COLUMNS: [&str; 6] = ["sample_id", "label", "event", "path", "checksum", "split"];

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// A failure while transforming one sample.
#[derive(Debug, Error)]
#[error("sample {sample_id}{}: {source}", region.map(|r| format!(" region {r}")).unwrap_or_default())]
pub struct SampleError {
    pub sample_id: String,
    pub region: Option<usize>,
    #[source]
    pub source: StageError,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("predictions do not match the manifest: {0}")]
    Predictions(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub ingest: IngestConfig,
    /// Points per region after PAA; also the tile edge in pixels.
    pub paa_length: usize,
    pub rp: RpConfig,
    pub grid: GridLayout,
    pub output_height: usize,
    pub output_width: usize,
    pub output_dir: PathBuf,
    pub split: SplitScheme,
    pub seed: u64,
    /// 0 picks the number of available cores.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ingest: IngestConfig::default(),
            paa_length: 500,
            rp: RpConfig::default(),
            grid: GridLayout::default(),
            output_height: 224,
            output_width: 224,
            output_dir: PathBuf::from("out"),
            split: SplitScheme::default(),
            seed: 0,
            workers: 0,
        }
    }
}

impl PipelineConfig {
    /// Sets `paa_length` and resizes grid tiles to match.
    pub fn with_paa_length(mut self, paa_length: usize) -> Self {
        self.paa_length = paa_length;
        self.grid.tile_height = paa_length;
        self.grid.tile_width = paa_length;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.paa_length < 2 || self.paa_length > SERIES_LENGTH {
            return fail(format!("paa length {} not in 2..={SERIES_LENGTH}", self.paa_length));
        }
        if self.grid.tile_count() != REGION_COUNT {
            return fail(format!(
                "{}x{} grid holds {} tiles, samples have {REGION_COUNT} regions",
                self.grid.rows,
                self.grid.cols,
                self.grid.tile_count()
            ));
        }
        if self.grid.tile_height != self.paa_length || self.grid.tile_width != self.paa_length {
            return fail(format!(
                "grid tiles are {}x{} but paa length is {}",
                self.grid.tile_height, self.grid.tile_width, self.paa_length
            ));
        }
        if self.output_height == 0
            || self.output_width == 0
            || self.output_height > self.grid.height()
            || self.output_width > self.grid.width()
        {
            return fail(format!(
                "output resolution {}x{} must be between 1x1 and the {}x{} grid",
                self.output_height,
                self.output_width,
                self.grid.height(),
                self.grid.width()
            ));
        }
        self.rp.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        match self.split {
            SplitScheme::Holdout(r)
                if r.iter().any(|x| !x.is_finite() || *x <= 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 =>
            {
                fail(format!("holdout ratios {r:?} must be positive and sum to 1"))
            }
            SplitScheme::KFold(k) if k < 2 => fail(format!("k = {k}, need at least 2 folds")),
            _ => Ok(()),
        }
    }

    /// Canonical description of every setting that affects output bytes.
    /// Output directory and worker count are excluded.
    fn canonical(&self, input: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool={TOOL_VERSION}");
        let _ = writeln!(s, "paa_length={}", self.paa_length);
        let _ = match self.rp {
            RpConfig::Percentile(p) => writeln!(s, "rp=percentile:{p}"),
            RpConfig::Fixed(e) => writeln!(s, "rp=fixed:{e}"),
        };
        let g = &self.grid;
        let _ = writeln!(s, "grid={}x{}x{}x{}", g.rows, g.cols, g.tile_height, g.tile_width);
        let _ = writeln!(s, "resolution={}x{}", self.output_height, self.output_width);
        let _ = writeln!(s, "split={}", self.split);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "input={input}");
        s
    }

    pub fn digest(&self, input: &str) -> String {
        hex(&Sha256::digest(self.canonical(input).as_bytes()))
    }

    fn ingest_description(&self) -> String {
        let mut s = format!("transpose:{}", self.ingest.transpose);
        for src in &self.ingest.sources {
            let _ = write!(s, ";{}|{}|{}", src.event, src.path.display(), src.variable.as_deref().unwrap_or(""));
        }
        s
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// The three grayscale tiles of one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionTiles {
    pub gadf: GrayImage,
    pub gasf: GrayImage,
    pub rp: GrayImage,
}

/// rescale → PAA → {polar → GASF, polar → GADF, RP}, each quantized.
pub fn encode_region(series: &TimeSeries, paa_length: usize, rp: RpConfig) -> Result<RegionTiles, StageError> {
    let reduced = rescale_minmax(series).paa(paa_length)?;
    let angles = to_polar(&reduced);
    Ok(RegionTiles {
        gadf: matrix_to_gray(&gadf(&angles))?,
        gasf: matrix_to_gray(&gasf(&angles))?,
        rp: matrix_to_gray(&recurrence_plot(&reduced, rp)?)?,
    })
}

/// Full-resolution grids, one per technique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TechniqueGrids {
    pub gadf: GrayImage,
    pub gasf: GrayImage,
    pub rp: GrayImage,
}

pub fn technique_grids(sample: &RawSample, config: &PipelineConfig) -> Result<TechniqueGrids, SampleError> {
    let err = |region, source| SampleError { sample_id: sample.sample_id().to_string(), region, source };
    let mut gadf_tiles = Vec::with_capacity(REGION_COUNT);
    let mut gasf_tiles = Vec::with_capacity(REGION_COUNT);
    let mut rp_tiles = Vec::with_capacity(REGION_COUNT);
    for (r, series) in sample.regions().iter().enumerate() {
        let tiles = encode_region(series, config.paa_length, config.rp).map_err(|e| err(Some(r), e))?;
        gadf_tiles.push(tiles.gadf);
        gasf_tiles.push(tiles.gasf);
        rp_tiles.push(tiles.rp);
    }
    let grid = |tiles: &[GrayImage]| compose_grid(tiles, &config.grid).map_err(|e| err(None, e.into()));
    Ok(TechniqueGrids { gadf: grid(&gadf_tiles)?, gasf: grid(&gasf_tiles)?, rp: grid(&rp_tiles)? })
}

/// Fuses GADF → red, GASF → green, RP → blue and resizes.
pub fn fuse_grids(grids: TechniqueGrids, config: &PipelineConfig) -> Result<RgbImage, ImagingError> {
    let full = fuse_rgb(grids.gadf, grids.gasf, grids.rp)?;
    resize_area(&full, config.output_height, config.output_width)
}

pub fn transform_sample(sample: &RawSample, config: &PipelineConfig) -> Result<RgbImage, SampleError> {
    let grids = technique_grids(sample, config)?;
    fuse_grids(grids, config).map_err(|e| SampleError {
        sample_id: sample.sample_id().to_string(),
        region: None,
        source: e.into(),
    })
}

/// Per-class sinusoid parameters for the synthetic demo:
/// (amplitude, frequency Hz, noise sigma).
pub const SYNTHETIC_CLASSES: [(f64, f64, f64); 6] = [
    (0.2, 1.0, 1.0),  // Background: mostly noise
    (4.0, 3.0, 0.5),  // Digging
    (4.0, 6.0, 0.5),  // Knocking
    (2.0, 12.0, 1.0), // Watering
    (4.0, 24.0, 0.2), // Shaking
    (3.0, 2.0, 2.0),  // Walking
];

fn synthetic_seed(seed: u64, event: EventClass, index: usize, region: usize) -> u64 {
    let mut rng = SplitMix64::new(seed ^ ((event.label() as u64) << 56) ^ ((index as u64) << 8) ^ region as u64);
    rng.next_u64()
}

/// One synthetic measurement: each region carries the class sinusoid,
/// attenuated away from the middle of the fiber section, plus noise.
pub fn synthetic_sample(event: EventClass, index: usize, seed: u64) -> RawSample {
    let (amplitude, frequency, noise) = SYNTHETIC_CLASSES[event.label() as usize];
    let regions = (0..REGION_COUNT)
        .map(|r| {
            let offset = (r as f64 - 5.5) / 3.0;
            let gain = 0.3 + 0.7 * (-offset * offset).exp();
            let spec = SinusoidSpec {
                amplitude: amplitude * gain,
                frequency,
                duration: 1.0,
                sample_rate: SERIES_LENGTH as f64,
                noise_sigma: noise,
                seed: synthetic_seed(seed, event, index, r),
            };
            generate_sinusoid(&spec).expect("synthetic class table is valid")
        })
        .collect();
    RawSample::new(format!("{event}_synthetic_{index:05}"), event, regions).expect("synthetic geometry is valid")
}

#[derive(Debug, Clone)]
enum WorkUnit {
    File(SourceFile),
    Synthetic { event: EventClass, index: usize, seed: u64 },
}

impl WorkUnit {
    fn describe(&self) -> String {
        match self {
            WorkUnit::File(f) => f.path.display().to_string(),
            WorkUnit::Synthetic { event, index, .. } => format!("synthetic {event} #{index}"),
        }
    }
}

/// One row of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub sample_id: String,
    pub label: u8,
    pub event: EventClass,
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    /// 16 hex digits, see [`crate::imaging::content_hash`].
    pub checksum: String,
    /// `train`/`val`/`test`, or the fold index.
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestHeader {
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub scheme: String,
    pub census: [u64; 6],
}

/// Manifest file: `# key=value` header lines (`tool_version`,
/// `config_digest`, `seed`, `split_scheme`, `census` as
/// `Event:count` pairs) followed by a CSV table with columns
/// `sample_id,label,event,path,checksum,split`, sorted by `sample_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn census_of(rows: &[ManifestRow]) -> [u64; 6] {
        let mut census = [0u64; 6];
        for r in rows {
            census[r.label as usize] += 1;
        }
        census
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut s = String::new();
        let _ = writeln!(s, "# tool_version={}", h.tool_version);
        let _ = writeln!(s, "# config_digest={}", h.config_digest);
        let _ = writeln!(s, "# seed={}", h.seed);
        let _ = writeln!(s, "# split_scheme={}", h.scheme);
        let census: Vec<String> =
            EventClass::ALL.iter().map(|e| format!("{e}:{}", h.census[e.label() as usize])).collect();
        let _ = writeln!(s, "# census={}", census.join(","));
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        wtr.write_record(MANIFEST_COLUMNS).expect("in-memory csv");
        for r in &self.rows {
            wtr.write_record([
                r.sample_id.as_str(),
                &r.label.to_string(),
                r.event.name(),
                &r.path,
                &r.checksum,
                &r.split,
            ])
            .expect("in-memory csv");
        }
        s.push_str(&String::from_utf8(wtr.into_inner().expect("in-memory csv")).expect("utf-8 fields"));
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        fs::write(path, self.to_text()).map_err(io_err(path))
    }

    pub fn parse<R: Read>(reader: R, origin: &Path) -> Result<Self, PipelineError> {
        let bad = |message: String| PipelineError::Manifest { path: origin.to_path_buf(), message };
        let mut header_lines = Vec::new();
        let mut table = String::new();
        for line in BufReader::new(reader).lines() {
            let line = line.map_err(io_err(origin))?;
            match line.strip_prefix('#') {
                Some(h) if table.is_empty() => header_lines.push(h.trim().to_string()),
                _ => {
                    table.push_str(&line);
                    table.push('\n');
                }
            }
        }
        let get = |key: &str| {
            header_lines
                .iter()
                .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing header `{key}`")))
        };
        let mut census = [0u64; 6];
        for pair in get("census")?.split(',').filter(|p| !p.is_empty()) {
            let (name, count) = pair.split_once(':').ok_or_else(|| bad(format!("bad census entry `{pair}`")))?;
            let event = EventClass::from_name(name).ok_or_else(|| bad(format!("unknown event `{name}`")))?;
            census[event.label() as usize] = count.parse().map_err(|_| bad(format!("bad census count `{count}`")))?;
        }
        let header = ManifestHeader {
            tool_version: get("tool_version")?,
            config_digest: get("config_digest")?,
            seed: get("seed")?.parse().map_err(|_| bad("bad seed".into()))?,
            scheme: get("split_scheme")?,
            census,
        };

        let mut rdr = csv::Reader::from_reader(table.as_bytes());
        let cols: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
        if cols != MANIFEST_COLUMNS {
            return Err(bad(format!("unexpected columns {cols:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let label: u8 = rec[1].parse().map_err(|_| bad(format!("bad label `{}`", &rec[1])))?;
            let event = EventClass::from_name(&rec[2]).ok_or_else(|| bad(format!("unknown event `{}`", &rec[2])))?;
            if event.label() != label {
                return Err(bad(format!("{}: label {label} does not match event {event}", &rec[0])));
            }
            rows.push(ManifestRow {
                sample_id: rec[0].to_string(),
                label,
                event,
                path: rec[3].to_string(),
                checksum: rec[4].to_string(),
                split: rec[5].to_string(),
            });
        }
        let manifest = DatasetManifest { header, rows };
        manifest.check().map_err(bad)?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        Self::parse(file, path)
    }

    /// Unique ids and paths, census matching rows.
    pub fn check(&self) -> Result<(), String> {
        let mut ids = std::collections::HashSet::new();
        let mut paths = std::collections::HashSet::new();
        for r in &self.rows {
            if !ids.insert(&r.sample_id) {
                return Err(format!("duplicate sample id {}", r.sample_id));
            }
            if !paths.insert(&r.path) {
                return Err(format!("duplicate path {}", r.path));
            }
        }
        if Self::census_of(&self.rows) != self.header.census {
            return Err("census does not match rows".into());
        }
        Ok(())
    }
}

/// Every predicted id must appear in the manifest with the same true label.
/// With `split`, ids must also belong to that split.
pub fn validate_predictions(
    preds: &PredictionSet,
    manifest: &DatasetManifest,
    split: Option<&str>,
) -> Result<(), PipelineError> {
    let by_id: std::collections::HashMap<&str, &ManifestRow> =
        manifest.rows.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let mut problems = Vec::new();
    for p in preds.rows() {
        match by_id.get(p.sample_id.as_str()) {
            None => problems.push(format!("unknown sample id `{}`", p.sample_id)),
            Some(r) if r.label != p.true_label => problems
                .push(format!("`{}` has true_label {} but the manifest says {}", p.sample_id, p.true_label, r.label)),
            Some(r) if split.is_some_and(|s| s != r.split) => {
                problems.push(format!("`{}` belongs to split `{}`", p.sample_id, r.split))
            }
            Some(_) => {}
        }
    }
    if problems.is_empty() {
        return Ok(());
    }
    let shown = problems.len().min(5);
    let mut msg = problems[..shown].join("; ");
    if problems.len() > shown {
        let _ = write!(msg, " (and {} more)", problems.len() - shown);
    }
    Err(PipelineError::Predictions(msg))
}

/// Per-stage timings are summed over workers; `wall` is elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    /// Bytes on disk of the input files read. Synthetic samples count as
    /// their in-memory `f64` size (12 × 10,000 × 8 bytes).
    pub input_bytes: u64,
    /// Bytes of PNG images written.
    pub output_bytes: u64,
    pub samples_processed: u64,
    pub samples_failed: u64,
    pub ingest_time: Duration,
    pub transform_time: Duration,
    pub write_time: Duration,
    pub wall_time: Duration,
}

impl RunStats {
    pub fn compression_ratio(&self) -> f64 {
        if self.input_bytes == 0 {
            0.0
        } else {
            self.output_bytes as f64 / self.input_bytes as f64
        }
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input_bytes={}", self.input_bytes);
        let _ = writeln!(s, "output_bytes={}", self.output_bytes);
        let _ = writeln!(s, "compression_ratio={}", self.compression_ratio());
        let _ = writeln!(s, "samples_processed={}", self.samples_processed);
        let _ = writeln!(s, "samples_failed={}", self.samples_failed);
        let _ = writeln!(s, "ingest_seconds={:.6}", self.ingest_time.as_secs_f64());
        let _ = writeln!(s, "transform_seconds={:.6}", self.transform_time.as_secs_f64());
        let _ = writeln!(s, "write_seconds={:.6}", self.write_time.as_secs_f64());
        let _ = writeln!(s, "wall_seconds={:.6}", self.wall_time.as_secs_f64());
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleFailure {
    /// Input file or synthetic unit.
    pub source: String,
    pub sample_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub manifest: DatasetManifest,
    pub stats: RunStats,
    pub failures: Vec<SampleFailure>,
}

impl BatchOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

struct Written {
    sample_id: String,
    event: EventClass,
    path: String,
    checksum: u64,
    bytes: u64,
}

#[derive(Default)]
struct UnitResult {
    written: Vec<Written>,
    failures: Vec<SampleFailure>,
    input_bytes: u64,
    ingest: Duration,
    transform: Duration,
    write: Duration,
}

fn process_sample(sample: &RawSample, config: &PipelineConfig, out: &mut UnitResult, source: &str) {
    let t = Instant::now();
    let image = transform_sample(sample, config);
    out.transform += t.elapsed();
    let image = match image {
        Ok(img) => img,
        Err(e) => {
            out.failures.push(SampleFailure {
                source: source.to_string(),
                sample_id: Some(sample.sample_id().to_string()),
                message: e.to_string(),
            });
            return;
        }
    };
    let rel = format!("images/{}/{}.png", sample.event(), sample.sample_id());
    let t = Instant::now();
    let written = write_png_sized(&image, &config.output_dir.join(&rel));
    out.write += t.elapsed();
    match written {
        Ok(w) => out.written.push(Written {
            sample_id: sample.sample_id().to_string(),
            event: sample.event(),
            path: rel,
            checksum: w.checksum,
            bytes: w.bytes,
        }),
        Err(e) => out.failures.push(SampleFailure {
            source: source.to_string(),
            sample_id: Some(sample.sample_id().to_string()),
            message: e.to_string(),
        }),
    }
}

fn process_unit(unit: &WorkUnit, config: &PipelineConfig) -> UnitResult {
    let mut out = UnitResult::default();
    let source = unit.describe();
    let t = Instant::now();
    let samples = match unit {
        WorkUnit::File(f) => {
            out.input_bytes = fs::metadata(&f.path).map(|m| m.len()).unwrap_or(0);
            load_file(f, config.ingest.transpose)
        }
        WorkUnit::Synthetic { event, index, seed } => {
            out.input_bytes = (REGION_COUNT * SERIES_LENGTH * std::mem::size_of::<f64>()) as u64;
            Ok(vec![synthetic_sample(*event, *index, *seed)])
        }
    };
    out.ingest += t.elapsed();
    match samples {
        Ok(samples) => {
            for s in &samples {
                process_sample(s, config, &mut out, &source);
            }
        }
        Err(e) => out.failures.push(SampleFailure { source, sample_id: None, message: e.to_string() }),
    }
    out
}

fn run_units(config: &PipelineConfig, units: Vec<WorkUnit>, input_desc: &str) -> Result<BatchOutcome, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let out_dir = &config.output_dir;
    let events: std::collections::BTreeSet<EventClass> = units
        .iter()
        .map(|u| match u {
            WorkUnit::File(f) => f.event,
            WorkUnit::Synthetic { event, .. } => *event,
        })
        .collect();
    for e in &events {
        let dir = out_dir.join("images").join(e.name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let results: Vec<UnitResult> = pool.install(|| units.par_iter().map(|u| process_unit(u, config)).collect());

    let mut stats = RunStats {
        input_bytes: 0,
        output_bytes: 0,
        samples_processed: 0,
        samples_failed: 0,
        ingest_time: Duration::ZERO,
        transform_time: Duration::ZERO,
        write_time: Duration::ZERO,
        wall_time: Duration::ZERO,
    };
    let mut written = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        stats.input_bytes += r.input_bytes;
        stats.ingest_time += r.ingest;
        stats.transform_time += r.transform;
        stats.write_time += r.write;
        written.extend(r.written);
        failures.extend(r.failures);
    }
    written.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    stats.output_bytes = written.iter().map(|w| w.bytes).sum();
    stats.samples_processed = written.len() as u64;
    stats.samples_failed = failures.iter().filter(|f| f.sample_id.is_some()).count() as u64;

    let labelled: Vec<(&str, u8)> = written.iter().map(|w| (w.sample_id.as_str(), w.event.label())).collect();
    let assignment: Option<SplitAssignment> = if labelled.is_empty() {
        None
    } else {
        let a = match config.split {
            SplitScheme::Holdout(r) => split_holdout(&labelled, r, config.seed),
            SplitScheme::KFold(k) => split_kfold(&labelled, k, config.seed),
        };
        match a {
            Ok(a) => Some(a),
            Err(e) => {
                // Too few samples per class to stratify; images are still
                // valid, so record the problem instead of discarding them.
                failures.push(SampleFailure { source: "split".into(), sample_id: None, message: e.to_string() });
                None
            }
        }
    };
    let rows: Vec<ManifestRow> = written
        .into_iter()
        .map(|w| ManifestRow {
            split: assignment.as_ref().and_then(|a| a.get(&w.sample_id)).map(|a| a.to_string()).unwrap_or_default(),
            label: w.event.label(),
            event: w.event,
            checksum: format!("{:016x}", w.checksum),
            path: w.path,
            sample_id: w.sample_id,
        })
        .collect();
    let manifest = DatasetManifest {
        header: ManifestHeader {
            tool_version: TOOL_VERSION.to_string(),
            config_digest: config.digest(input_desc),
            seed: config.seed,
            scheme: config.split.to_string(),
            census: DatasetManifest::census_of(&rows),
        },
        rows,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;

    let errors_path = out_dir.join(ERRORS_FILE);
    if failures.is_empty() {
        if errors_path.exists() {
            fs::remove_file(&errors_path).map_err(io_err(&errors_path))?;
        }
    } else {
        let mut f = fs::File::create(&errors_path).map_err(io_err(&errors_path))?;
        for fail in &failures {
            writeln!(f, "{}\t{}\t{}", fail.source, fail.sample_id.as_deref().unwrap_or("-"), fail.message)
                .map_err(io_err(&errors_path))?;
        }
    }
    stats.wall_time = started.elapsed();
    let stats_path = out_dir.join(STATS_FILE);
    fs::write(&stats_path, stats.to_kv()).map_err(io_err(&stats_path))?;
    Ok(BatchOutcome { manifest, stats, failures })
}

/// Transforms every configured source. Missing or unreadable sources are
/// fatal; failures inside individual files or samples are collected.
pub fn run_batch(config: &PipelineConfig) -> Result<BatchOutcome, PipelineError> {
    config.validate()?;
    if config.ingest.sources.is_empty() {
        return Err(PipelineError::Config("no input sources configured".into()));
    }
    let files = config.ingest.discover()?;
    let mut tags = std::collections::HashMap::new();
    for f in &files {
        if let Some(prev) = tags.insert((f.event, file_tag(&f.path)), &f.path) {
            return Err(PipelineError::Config(format!(
                "{} and {} would produce the same sample ids",
                prev.display(),
                f.path.display()
            )));
        }
    }
    let units = files.into_iter().map(WorkUnit::File).collect();
    run_units(config, units, &config.ingest_description())
}

/// Generates `n_per_class` synthetic samples per class and runs the batch
/// over them.
pub fn demo_synthetic(config: &PipelineConfig, n_per_class: usize, seed: u64) -> Result<BatchOutcome, PipelineError> {
    if n_per_class == 0 {
        return Err(PipelineError::Config("n_per_class must be at least 1".into()));
    }
    let units = EventClass::ALL
        .iter()
        .flat_map(|&event| (0..n_per_class).map(move |index| WorkUnit::Synthetic { event, index, seed }))
        .collect();
    run_units(config, units, &format!("synthetic:{n_per_class}:{seed}"))
}
