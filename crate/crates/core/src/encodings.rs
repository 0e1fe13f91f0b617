//! Numerical kernels that turn a 1D intensity series into square matrix
//! encodings: Gramian angular summation/difference fields and the binary
//! recurrence plot, together with min-max rescaling and piecewise aggregate
//! approximation.
//!
//! Every function here is pure; all types are immutable once constructed.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Values this close outside `[-1, 1]` are treated as rounding noise.
const UNIT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid downsample: cannot reduce {len} points to {target}")]
    InvalidDownsample { len: usize, target: usize },
    #[error("invalid signal spec: {0}")]
    InvalidSignalSpec(String),
    #[error("invalid recurrence config: {0}")]
    InvalidRpConfig(String),
    #[error("gram matrix columns must share a length (column {index} has {len}, expected {expected})")]
    RaggedColumns { index: usize, len: usize, expected: usize },
}

/// A finite, real-valued intensity series of at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, EncodingError> {
        if values.len() < 2 {
            return Err(EncodingError::InvalidSeries(format!("need at least 2 points, got {}", values.len())));
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

fn check_finite(values: &[f64]) -> Result<(), EncodingError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(EncodingError::InvalidSeries(format!("non-finite value {} at index {i}", values[i]))),
        None => Ok(()),
    }
}

/// A series whose every element lies in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries(Vec<f64>);

impl NormalizedSeries {
    /// Accepts values already in `[-1, 1]`; anything within `1e-9` of the
    /// bounds is clamped onto them.
    pub fn new(values: Vec<f64>) -> Result<Self, EncodingError> {
        if values.is_empty() {
            return Err(EncodingError::InvalidSeries("empty series".into()));
        }
        check_finite(&values)?;
        if let Some(v) = values.iter().find(|v| v.abs() > 1.0 + UNIT_SLACK) {
            return Err(EncodingError::InvalidSeries(format!("value {v} outside [-1, 1]")));
        }
        Ok(Self(values.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Segment-mean downsampling. Means of values in `[-1, 1]` stay in range.
    pub fn paa(&self, segments: usize) -> Result<NormalizedSeries, EncodingError> {
        Ok(NormalizedSeries(paa_values(&self.0, segments)?))
    }
}

/// Polar angles in `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSeries(Vec<f64>);

impl AngularSeries {
    pub fn new(angles: Vec<f64>) -> Result<Self, EncodingError> {
        if let Some(a) = angles.iter().find(|a| !(0.0..=PI).contains(*a)) {
            return Err(EncodingError::InvalidSeries(format!("angle {a} outside [0, pi]")));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Gasf,
    Gadf,
    Rp,
}

impl EncodingKind {
    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Gasf => "GASF",
            EncodingKind::Gadf => "GADF",
            EncodingKind::Rp => "RP",
        }
    }
}

/// Square `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    kind: EncodingKind,
    size: usize,
    entries: Vec<f64>,
}

impl EncodingMatrix {
    /// Builds a matrix from raw row-major entries, checking only the shape.
    /// Range invariants are checked where they matter (quantization).
    pub fn from_entries(kind: EncodingKind, size: usize, entries: Vec<f64>) -> Result<Self, EncodingError> {
        if size == 0 || entries.len() != size * size {
            return Err(EncodingError::InvalidSeries(format!(
                "matrix of size {size} needs {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        Ok(Self { kind, size, entries })
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.size..(row + 1) * self.size]
    }
}

/// How the recurrence threshold ε is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RpConfig {
    /// ε is the p-th percentile (linear interpolation) of the off-diagonal
    /// pairwise distances, `0 < p < 100`.
    Percentile(f64),
    /// A fixed ε, strictly positive.
    Fixed(f64),
}

impl Default for RpConfig {
    fn default() -> Self {
        RpConfig::Percentile(10.0)
    }
}

impl RpConfig {
    pub fn percentile(p: f64) -> Result<Self, EncodingError> {
        let cfg = RpConfig::Percentile(p);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fixed(epsilon: f64) -> Result<Self, EncodingError> {
        let cfg = RpConfig::Fixed(epsilon);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        match *self {
            RpConfig::Percentile(p) if !(p > 0.0 && p < 100.0) => {
                Err(EncodingError::InvalidRpConfig(format!("percentile {p} not in (0, 100)")))
            }
            RpConfig::Fixed(e) if !(e > 0.0 && e.is_finite()) => {
                Err(EncodingError::InvalidRpConfig(format!("epsilon {e} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Affine map of the series onto `[-1, 1]`. A constant series maps to all
/// zeros.
pub fn rescale_minmax(series: &TimeSeries) -> NormalizedSeries {
    let values = series.values();
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if range <= 0.0 {
        return NormalizedSeries(vec![0.0; values.len()]);
    }
    if min == -1.0 && max == 1.0 {
        // The map is the identity here; skip it to avoid rounding drift.
        return NormalizedSeries(values.to_vec());
    }
    NormalizedSeries(values.iter().map(|&v| (2.0 * (v - min) / range - 1.0).clamp(-1.0, 1.0)).collect())
}

/// `arccos` of every value, clamped to `[-1, 1]` first.
pub fn to_polar(series: &NormalizedSeries) -> AngularSeries {
    AngularSeries(series.values().iter().map(|v| v.clamp(-1.0, 1.0).acos()).collect())
}

/// Gramian angular summation field, `cos(θi + θj)`.
///
/// Only the upper triangle is evaluated; the lower one is mirrored so the
/// result is exactly symmetric.
pub fn gasf(angles: &AngularSeries) -> EncodingMatrix {
    let a = angles.angles();
    let n = a.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = (a[i] + a[j]).cos().clamp(-1.0, 1.0);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    EncodingMatrix { kind: EncodingKind::Gasf, size: n, entries }
}

/// Gramian angular difference field, `sin(θi − θj)`.
///
/// Upper triangle evaluated and negated into the lower one, so antisymmetry
/// and the zero diagonal hold exactly.
pub fn gadf(angles: &AngularSeries) -> EncodingMatrix {
    let a = angles.angles();
    let n = a.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (a[i] - a[j]).sin().clamp(-1.0, 1.0);
            entries[i * n + j] = v;
            entries[j * n + i] = -v;
        }
    }
    EncodingMatrix { kind: EncodingKind::Gadf, size: n, entries }
}

/// Real symmetric matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// `G = XᵀX` where `columns` are the columns of `X`: `G[i][j]` is the inner
/// product of column `i` and column `j`.
pub fn gram_matrix<C: AsRef<[f64]>>(columns: &[C]) -> Result<GramMatrix, EncodingError> {
    let n = columns.len();
    if let Some(first) = columns.first() {
        let expected = first.as_ref().len();
        for (index, c) in columns.iter().enumerate() {
            let len = c.as_ref().len();
            if len != expected {
                return Err(EncodingError::RaggedColumns { index, len, expected });
            }
            check_finite(c.as_ref())?;
        }
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let ci = columns[i].as_ref();
        for j in i..n {
            let dot: f64 = ci.iter().zip(columns[j].as_ref()).map(|(a, b)| a * b).sum();
            entries[i * n + j] = dot;
            entries[j * n + i] = dot;
        }
    }
    Ok(GramMatrix { size: n, entries })
}

/// Resolves the recurrence threshold for `values` under `config`.
///
/// Returns `None` when every pairwise distance is zero, in which case any
/// positive ε marks every pair as recurrent.
pub fn recurrence_threshold(values: &[f64], config: RpConfig) -> Result<Option<f64>, EncodingError> {
    config.validate()?;
    let n = values.len();
    let mut distances = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            distances.push((values[i] - values[j]).abs());
        }
    }
    let max = distances.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Ok(None);
    }
    let epsilon = match config {
        RpConfig::Fixed(e) => e,
        RpConfig::Percentile(p) => {
            let eps = percentile_in_place(&mut distances, p);
            if eps > 0.0 {
                eps
            } else {
                // Too many ties at zero: fall back to the smallest positive
                // distance so only exact repeats recur.
                distances.iter().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min)
            }
        }
    };
    Ok(Some(epsilon))
}

/// Linear-interpolated percentile over a non-empty slice (reorders it).
fn percentile_in_place(data: &mut [f64], p: f64) -> f64 {
    let rank = p / 100.0 * (data.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let (_, lo_val, upper) = data.select_nth_unstable_by(lo, f64::total_cmp);
    let lo_val = *lo_val;
    if frac == 0.0 || upper.is_empty() {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val + frac * (hi_val - lo_val)
}

/// Binary recurrence plot: `R[i][j] = 1` iff `|x[i] − x[j]| < ε`.
pub fn recurrence_plot(series: &NormalizedSeries, config: RpConfig) -> Result<EncodingMatrix, EncodingError> {
    let values = series.values();
    let n = values.len();
    let threshold = recurrence_threshold(values, config)?;
    let mut entries = vec![1.0; n * n];
    if let Some(eps) = threshold {
        for i in 0..n {
            for j in (i + 1)..n {
                let hit = if (values[i] - values[j]).abs() < eps { 1.0 } else { 0.0 };
                entries[i * n + j] = hit;
                entries[j * n + i] = hit;
            }
        }
    }
    Ok(EncodingMatrix { kind: EncodingKind::Rp, size: n, entries })
}

/// Piecewise aggregate approximation: `segments` window means over
/// `[⌊k·n/m⌋, ⌊(k+1)·n/m⌋)`.
pub fn paa(series: &TimeSeries, segments: usize) -> Result<TimeSeries, EncodingError> {
    // May produce a single point when segments == 1.
    Ok(TimeSeries(paa_values(series.values(), segments)?))
}

pub(crate) fn paa_values(values: &[f64], segments: usize) -> Result<Vec<f64>, EncodingError> {
    let n = values.len();
    if segments == 0 || segments > n {
        return Err(EncodingError::InvalidDownsample { len: n, target: segments });
    }
    if segments == n {
        return Ok(values.to_vec());
    }
    Ok((0..segments)
        .map(|k| {
            let start = k * n / segments;
            let end = (k + 1) * n / segments;
            let window = &values[start..end];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// Parameters of a noisy test sinusoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidSpec {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub sample_rate: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// `A·sin(2π·f·t/fs) + N(0, σ)` sampled at `round(duration · fs)` points.
/// The noise stream is ChaCha8 seeded from `seed`, so equal specs yield
/// bit-identical output.
pub fn generate_sinusoid(spec: &SinusoidSpec) -> Result<TimeSeries, EncodingError> {
    let SinusoidSpec { amplitude, frequency, duration, sample_rate, noise_sigma, seed } = *spec;
    let all_finite = [amplitude, frequency, duration, sample_rate, noise_sigma].iter().all(|v| v.is_finite());
    if !all_finite {
        return Err(EncodingError::InvalidSignalSpec("parameters must be finite".into()));
    }
    if duration <= 0.0 {
        return Err(EncodingError::InvalidSignalSpec(format!("duration {duration} must be positive")));
    }
    if sample_rate <= 2.0 * frequency || frequency < 0.0 {
        return Err(EncodingError::InvalidSignalSpec(format!(
            "sample rate {sample_rate} must exceed twice the frequency {frequency}"
        )));
    }
    if noise_sigma < 0.0 {
        return Err(EncodingError::InvalidSignalSpec(format!("noise sigma {noise_sigma} is negative")));
    }
    let n = (duration * sample_rate).round() as usize;
    if n < 2 {
        return Err(EncodingError::InvalidSignalSpec(format!(
            "duration x sample rate gives {n} samples, need at least 2"
        )));
    }
    let mut values: Vec<f64> =
        (0..n).map(|t| amplitude * (2.0 * PI * frequency * t as f64 / sample_rate).sin()).collect();
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| EncodingError::InvalidSignalSpec(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    TimeSeries::new(values)
}
