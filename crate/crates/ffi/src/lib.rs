//! C ABI over `otdrimg`.
//!
//! Conventions:
//! * every fallible function returns an [`OtdrStatus`]; on failure a message
//!   is available from [`otdr_last_error`] on the same thread;
//! * objects are opaque handles created by `otdr_*` constructors and released
//!   with the matching `*_free` function (passing NULL is a no-op);
//! * buffers are caller-owned and passed with explicit lengths.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use otdrimg::encodings::{gadf, gasf, recurrence_plot, rescale_minmax, to_polar, EncodingMatrix, RpConfig, TimeSeries};
use otdrimg::evalkit::{compute_metrics, PredictionSet};
use otdrimg::imaging::{write_png, RgbImage};
use otdrimg::ingest::{EventClass, RawSample, REGION_COUNT, SERIES_LENGTH};
use otdrimg::pipeline::{transform_sample, PipelineConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtdrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EncodingFailed = 3,
    ImagingFailed = 4,
    IoFailed = 5,
    BufferTooSmall = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtdrEncoding {
    Gasf = 0,
    Gadf = 1,
    Rp = 2,
}

/// Options for [`otdr_encode`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OtdrEncodeOptions {
    /// Reduce the normalized series to this many points first; 0 keeps the
    /// full length.
    pub paa_length: usize,
    /// Recurrence threshold percentile, used when `rp_epsilon` is 0.
    pub rp_percentile: f64,
    /// Fixed recurrence threshold; 0 selects the percentile rule.
    pub rp_epsilon: f64,
}

/// Options for [`otdr_transform_sample`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OtdrTransformOptions {
    pub paa_length: usize,
    pub rp_percentile: f64,
    pub rp_epsilon: f64,
    pub output_height: usize,
    pub output_width: usize,
}

/// Classification scores over the classes present in the true labels.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OtdrMetrics {
    pub samples: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub class_f1: [f64; 6],
    pub class_support: [u64; 6],
}

/// Square encoding matrix, row-major.
pub struct OtdrMatrix {
    inner: EncodingMatrix,
}

/// RGB image, kept planar internally.
pub struct OtdrImage {
    inner: RgbImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: OtdrStatus, msg: impl Into<String>) -> OtdrStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> OtdrStatus) -> OtdrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(OtdrStatus::Panic, "internal panic"),
    }
}

fn rp_config(percentile: f64, epsilon: f64) -> RpConfig {
    if epsilon != 0.0 {
        RpConfig::Fixed(epsilon)
    } else {
        RpConfig::Percentile(percentile)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn otdr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next `otdr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn otdr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn otdr_encode_options_default() -> OtdrEncodeOptions {
    OtdrEncodeOptions { paa_length: 0, rp_percentile: 10.0, rp_epsilon: 0.0 }
}

#[no_mangle]
pub extern "C" fn otdr_transform_options_default() -> OtdrTransformOptions {
    let cfg = PipelineConfig::default();
    OtdrTransformOptions {
        paa_length: cfg.paa_length,
        rp_percentile: 10.0,
        rp_epsilon: 0.0,
        output_height: cfg.output_height,
        output_width: cfg.output_width,
    }
}

/// Rescales `values` to [-1, 1], optionally reduces it with PAA and
/// computes one encoding.
///
/// # Safety
/// `values` must point to `len` readable doubles, `options` may be NULL
/// (defaults) or point to a valid struct, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn otdr_encode(
    kind: OtdrEncoding,
    values: *const f64,
    len: usize,
    options: *const OtdrEncodeOptions,
    out: *mut *mut OtdrMatrix,
) -> OtdrStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return fail(OtdrStatus::NullPointer, "values and out must not be NULL");
        }
        *out = ptr::null_mut();
        let opts = if options.is_null() { otdr_encode_options_default() } else { *options };
        let series = match TimeSeries::new(std::slice::from_raw_parts(values, len).to_vec()) {
            Ok(s) => s,
            Err(e) => return fail(OtdrStatus::InvalidArgument, e.to_string()),
        };
        let mut norm = rescale_minmax(&series);
        if opts.paa_length != 0 {
            norm = match norm.paa(opts.paa_length) {
                Ok(n) => n,
                Err(e) => return fail(OtdrStatus::InvalidArgument, e.to_string()),
            };
        }
        let matrix = match kind {
            OtdrEncoding::Gasf => gasf(&to_polar(&norm)),
            OtdrEncoding::Gadf => gadf(&to_polar(&norm)),
            OtdrEncoding::Rp => match recurrence_plot(&norm, rp_config(opts.rp_percentile, opts.rp_epsilon)) {
                Ok(m) => m,
                Err(e) => return fail(OtdrStatus::InvalidArgument, e.to_string()),
            },
        };
        *out = Box::into_raw(Box::new(OtdrMatrix { inner: matrix }));
        OtdrStatus::Ok
    })
}

/// Edge length of the matrix, 0 for NULL.
///
/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn otdr_matrix_size(matrix: *const OtdrMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.inner.size())
}

/// Row-major entries (`size * size` doubles), owned by the handle.
///
/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn otdr_matrix_data(matrix: *const OtdrMatrix) -> *const f64 {
    matrix.as_ref().map_or(ptr::null(), |m| m.inner.entries().as_ptr())
}

/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn otdr_matrix_free(matrix: *mut OtdrMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Turns one 12 x 10,000 measurement (row `r` is region `r`, row-major)
/// into a fused RGB image.
///
/// # Safety
/// `values` must point to `len` readable doubles, `options` may be NULL or
/// point to a valid struct, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn otdr_transform_sample(
    values: *const f64,
    len: usize,
    options: *const OtdrTransformOptions,
    out: *mut *mut OtdrImage,
) -> OtdrStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return fail(OtdrStatus::NullPointer, "values and out must not be NULL");
        }
        *out = ptr::null_mut();
        if len != REGION_COUNT * SERIES_LENGTH {
            return fail(
                OtdrStatus::InvalidArgument,
                format!(
                    "expected {} values ({REGION_COUNT} x {SERIES_LENGTH}), got {len}",
                    REGION_COUNT * SERIES_LENGTH
                ),
            );
        }
        let opts = if options.is_null() { otdr_transform_options_default() } else { *options };
        let config = PipelineConfig {
            rp: rp_config(opts.rp_percentile, opts.rp_epsilon),
            output_height: opts.output_height,
            output_width: opts.output_width,
            ..PipelineConfig::default().with_paa_length(opts.paa_length)
        };
        if let Err(e) = config.validate() {
            return fail(OtdrStatus::InvalidArgument, e.to_string());
        }
        let data = std::slice::from_raw_parts(values, len);
        let sample = match RawSample::from_row_major("sample".into(), EventClass::Background, data) {
            Ok(s) => s,
            Err(e) => return fail(OtdrStatus::InvalidArgument, e.to_string()),
        };
        match transform_sample(&sample, &config) {
            Ok(img) => {
                *out = Box::into_raw(Box::new(OtdrImage { inner: img }));
                OtdrStatus::Ok
            }
            Err(e) => fail(OtdrStatus::EncodingFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn otdr_image_height(image: *const OtdrImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.height())
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn otdr_image_width(image: *const OtdrImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.width())
}

/// Copies interleaved RGB bytes (`height * width * 3`) into `buf`.
///
/// # Safety
/// `image` must be a live handle and `buf` must have `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn otdr_image_copy_rgb(image: *const OtdrImage, buf: *mut u8, len: usize) -> OtdrStatus {
    guard(|| {
        let (Some(image), false) = (image.as_ref(), buf.is_null()) else {
            return fail(OtdrStatus::NullPointer, "image and buf must not be NULL");
        };
        let rgb = image.inner.to_interleaved();
        if len < rgb.len() {
            return fail(OtdrStatus::BufferTooSmall, format!("need {} bytes, got {len}", rgb.len()));
        }
        ptr::copy_nonoverlapping(rgb.as_ptr(), buf, rgb.len());
        OtdrStatus::Ok
    })
}

/// Writes the image as PNG. `checksum` (nullable) receives the content
/// hash recorded in manifests.
///
/// # Safety
/// `image` must be a live handle, `path` a NUL-terminated UTF-8 string, and
/// `checksum` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn otdr_image_write_png(
    image: *const OtdrImage,
    path: *const c_char,
    checksum: *mut u64,
) -> OtdrStatus {
    guard(|| {
        let (Some(image), false) = (image.as_ref(), path.is_null()) else {
            return fail(OtdrStatus::NullPointer, "image and path must not be NULL");
        };
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(OtdrStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match write_png(&image.inner, Path::new(path)) {
            Ok(hash) => {
                if !checksum.is_null() {
                    *checksum = hash;
                }
                OtdrStatus::Ok
            }
            Err(e @ otdrimg::imaging::ImagingError::Io { .. }) => fail(OtdrStatus::IoFailed, e.to_string()),
            Err(e) => fail(OtdrStatus::ImagingFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn otdr_image_free(image: *mut OtdrImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Scores `n` predictions; labels must be in 0..6.
///
/// # Safety
/// `truth` and `pred` must point to `n` readable bytes, `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn otdr_compute_metrics(
    truth: *const u8,
    pred: *const u8,
    n: usize,
    out: *mut OtdrMetrics,
) -> OtdrStatus {
    guard(|| {
        if truth.is_null() || pred.is_null() || out.is_null() {
            return fail(OtdrStatus::NullPointer, "truth, pred and out must not be NULL");
        }
        let truth = std::slice::from_raw_parts(truth, n);
        let pred = std::slice::from_raw_parts(pred, n);
        let report = match PredictionSet::from_labels(truth, pred).and_then(|p| compute_metrics(&p)) {
            Ok(r) => r,
            Err(e) => return fail(OtdrStatus::InvalidArgument, e.to_string()),
        };
        *out = OtdrMetrics {
            samples: report.samples,
            accuracy: report.accuracy,
            macro_precision: report.macro_precision,
            macro_recall: report.macro_recall,
            macro_f1: report.macro_f1,
            weighted_f1: report.weighted_f1,
            class_f1: report.per_class.map(|c| c.f1),
            class_support: report.per_class.map(|c| c.support),
        };
        OtdrStatus::Ok
    })
}
