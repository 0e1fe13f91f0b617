//! Converts multi-region optical-fiber (OTDR) intensity recordings into
//! fused RGB images for event classification.
//!
//! Each region's series is rescaled, reduced with PAA and encoded three
//! ways (GASF, GADF and a recurrence plot). The per-region tiles are laid
//! out on a grid, fused into the red, green and blue channels, resized and
//! written as PNG.

pub mod encodings;
pub mod evalkit;
pub mod imaging;
pub mod ingest;
pub mod pipeline;

pub use encodings::{EncodingKind, EncodingMatrix, RpConfig, TimeSeries};
pub use evalkit::{compute_metrics, MetricsReport, PredictionSet, SplitScheme};
pub use imaging::{GrayImage, GridLayout, RgbImage};
pub use ingest::{EventClass, IngestConfig, RawSample};
pub use pipeline::{demo_synthetic, run_batch, transform_sample, BatchOutcome, DatasetManifest, PipelineConfig};
