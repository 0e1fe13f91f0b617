//! Plain-text fallback format.
//!
//! One sample is 10,000 lines of 12 comma-separated reals: line `t` holds
//! the intensity of regions 0..11 at pulse `t`. Samples are separated by one
//! or more blank lines. UTF-8, LF or CRLF line endings.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::{file_tag, EventClass, IngestError, RawSample, REGION_COUNT, SERIES_LENGTH};

/// Parses text in the fallback format; sample ids are `<event>_<file>_<index>`.
pub fn parse_csv_text(text: &str, event: EventClass, file: &str) -> Result<Vec<RawSample>, IngestError> {
    let mut samples = Vec::new();
    let mut block: Vec<f64> = Vec::new();
    let mut block_start = 0;

    let flush = |block: &mut Vec<f64>, start: usize, samples: &mut Vec<RawSample>| -> Result<(), IngestError> {
        if block.is_empty() {
            return Ok(());
        }
        let rows = block.len() / REGION_COUNT;
        let sample_id = format!("{event}_{file}_{}", samples.len());
        if rows != SERIES_LENGTH {
            return Err(IngestError::ShapeMismatch {
                context: format!("sample {sample_id} starting at line {start}"),
                rows,
                cols: REGION_COUNT,
                expected: format!("{SERIES_LENGTH} rows"),
            });
        }
        // Rows are time, columns are regions; transpose into region-major.
        let mut data = vec![0.0; block.len()];
        for t in 0..SERIES_LENGTH {
            for r in 0..REGION_COUNT {
                data[r * SERIES_LENGTH + t] = block[t * REGION_COUNT + r];
            }
        }
        block.clear();
        samples.push(RawSample::from_row_major(sample_id, event, &data)?);
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            flush(&mut block, block_start, &mut samples)?;
            continue;
        }
        if block.is_empty() {
            block_start = line_no;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != REGION_COUNT {
            return Err(IngestError::CsvShape { line: line_no, found: fields.len(), expected: REGION_COUNT });
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| IngestError::CsvParse {
                line: line_no,
                message: format!("`{}` is not a number", f.trim()),
            })?;
            if !v.is_finite() {
                return Err(IngestError::CsvParse { line: line_no, message: format!("non-finite value {v}") });
            }
            block.push(v);
        }
    }
    flush(&mut block, block_start, &mut samples)?;
    Ok(samples)
}

pub fn parse_csv_fallback(path: &Path, event: EventClass) -> Result<Vec<RawSample>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_csv_text(&text, event, &file_tag(path))
}

/// Writes samples in the fallback format. Values use Rust's shortest
/// round-trip float formatting, so re-parsing reproduces them exactly.
pub fn write_csv_fallback<W: Write>(samples: &[RawSample], mut out: W) -> io::Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            out.write_all(b"\n")?;
        }
        let regions = s.regions();
        for t in 0..SERIES_LENGTH {
            for (r, series) in regions.iter().enumerate() {
                if r > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{}", series.values()[t])?;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
