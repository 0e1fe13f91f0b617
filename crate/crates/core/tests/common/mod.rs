//! Brute-force reference implementations shared by the integration tests.
//! They are written from the definitions, without reusing library code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in [-1, 1], with the endpoints forced in sometimes.
pub fn unit_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if n >= 2 && rng.random_bool(0.5) {
        v[0] = -1.0;
        v[n - 1] = 1.0;
    }
    v
}

pub fn raw_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = rng.random_range(0.1..1000.0);
    let offset = rng.random_range(-500.0..500.0);
    (0..n).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rescale(x: &[f64]) -> Vec<f64> {
    let mut lo = x[0];
    let mut hi = x[0];
    for &v in x {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    if hi == lo {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - lo) / (hi - lo) * 2.0 - 1.0).collect()
}

pub fn gasf(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((x[i].acos() + x[j].acos()).cos());
        }
    }
    out
}

pub fn gadf(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((x[i].acos() - x[j].acos()).sin());
        }
    }
    out
}

/// x̃x̃ᵀ − √(1−x̃²)√(1−x̃²)ᵀ
pub fn gasf_product_form(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let s: Vec<f64> = x.iter().map(|v| (1.0 - v * v).max(0.0).sqrt()).collect();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(x[i] * x[j] - s[i] * s[j]);
        }
    }
    out
}

/// Threshold from sorted pairwise distances, linear interpolation between
/// order statistics. `None` when all points coincide.
pub fn rp_threshold(x: &[f64], percentile: f64) -> Option<f64> {
    let mut d = Vec::new();
    for i in 0..x.len() {
        for j in 0..i {
            d.push((x[i] - x[j]).abs());
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if *d.last().unwrap() == 0.0 {
        return None;
    }
    let pos = (d.len() - 1) as f64 * percentile / 100.0;
    let k = pos.floor() as usize;
    let eps = if k + 1 < d.len() { d[k] + (pos - k as f64) * (d[k + 1] - d[k]) } else { d[k] };
    if eps > 0.0 {
        Some(eps)
    } else {
        d.into_iter().find(|&v| v > 0.0)
    }
}

pub fn rp(x: &[f64], eps: Option<f64>) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let hit = match eps {
                None => true,
                Some(e) => i == j || (x[i] - x[j]).abs() < e,
            };
            out.push(if hit { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Point `t` belongs to the segment `k` for which
/// `k·n ≤ t·m` and `(t+1)·m ≤ (k+1)·n`.
pub fn paa(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for (t, &v) in x.iter().enumerate() {
        let k = ((t + 1) * m).div_ceil(n) - 1;
        sum[k] += v;
        count[k] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
}

/// XᵀX for X given as rows of length n_cols.
pub fn gram(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for r in rows {
                acc += r[i] * r[j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

#[derive(Debug, PartialEq)]
pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: [f64; 6],
    pub recall: [f64; 6],
    pub f1: [f64; 6],
    pub support: [u64; 6],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Counts every (truth, prediction) pair directly for each class.
pub fn metrics(truth: &[u8], pred: &[u8]) -> OracleMetrics {
    let n = truth.len();
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as u64;
    let mut m = OracleMetrics {
        accuracy: div(correct, n as u64),
        precision: [0.0; 6],
        recall: [0.0; 6],
        f1: [0.0; 6],
        support: [0; 6],
        macro_precision: 0.0,
        macro_recall: 0.0,
        macro_f1: 0.0,
    };
    let mut present = 0;
    for c in 0..6u8 {
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for i in 0..n {
            match (truth[i] == c, pred[i] == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let k = c as usize;
        m.support[k] = tp + fneg;
        m.precision[k] = div(tp, tp + fp);
        m.recall[k] = div(tp, tp + fneg);
        let (p, r) = (m.precision[k], m.recall[k]);
        m.f1[k] = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        if m.support[k] > 0 {
            present += 1;
            m.macro_precision += m.precision[k];
            m.macro_recall += m.recall[k];
            m.macro_f1 += m.f1[k];
        }
    }
    m.macro_precision /= present as f64;
    m.macro_recall /= present as f64;
    m.macro_f1 /= present as f64;
    m
}

/// Random labels over a random subset of classes.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> (Vec<u8>, Vec<u8>) {
    let classes: Vec<u8> = (0..6).filter(|_| rng.random_bool(0.7)).collect();
    let classes = if classes.is_empty() { vec![rng.random_range(0..6)] } else { classes };
    let truth = (0..n).map(|_| classes[rng.random_range(0..classes.len())]).collect();
    let pred = (0..n).map(|_| rng.random_range(0..6)).collect();
    (truth, pred)
}

use otdrimg::encodings::{self, NormalizedSeries, RpConfig, TimeSeries};

const ORACLE_LENGTHS: [usize; 4] = [2, 3, 16, 64];

/// Compares every encoding with its oracle on `count` random series and
/// returns the worst absolute difference seen.
pub fn encoding_oracle_sweep(count: usize, seed: u64) -> Result<f64, String> {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for k in 0..count {
        let n = if k < 4 * ORACLE_LENGTHS.len() { ORACLE_LENGTHS[k % 4] } else { rng.random_range(2..=64) };

        let raw = raw_series(&mut rng, n);
        let ts = TimeSeries::new(raw.clone()).map_err(|e| e.to_string())?;
        let scaled = encodings::rescale_minmax(&ts);
        worst = worst.max(max_abs_diff(scaled.values(), &rescale(&raw)));

        let x = unit_series(&mut rng, n);
        let norm = NormalizedSeries::new(x.clone()).map_err(|e| e.to_string())?;
        let angles = encodings::to_polar(&norm);
        worst = worst.max(max_abs_diff(encodings::gasf(&angles).entries(), &gasf(&x)));
        worst = worst.max(max_abs_diff(encodings::gadf(&angles).entries(), &gadf(&x)));

        let p = [0.5, 10.0, 37.5, 50.0, 99.5][k % 5];
        let got = encodings::recurrence_plot(&norm, RpConfig::Percentile(p)).map_err(|e| e.to_string())?;
        let want = rp(&x, rp_threshold(&x, p));
        if got.entries() != want.as_slice() {
            return Err(format!("recurrence plot mismatch, n={n}, percentile {p}"));
        }
        let eps = rng.random_range(0.01..1.0);
        let got = encodings::recurrence_plot(&norm, RpConfig::Fixed(eps)).map_err(|e| e.to_string())?;
        let fixed = if x.iter().all(|v| *v == x[0]) { None } else { Some(eps) };
        if got.entries() != rp(&x, fixed).as_slice() {
            return Err(format!("recurrence plot mismatch, n={n}, epsilon {eps}"));
        }

        let m = rng.random_range(1..=n);
        let reduced = encodings::paa(&ts, m).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(reduced.values(), &paa(&raw, m)));

        let cols = rng.random_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| raw_series(&mut rng, cols)).collect();
        let columns: Vec<Vec<f64>> = (0..cols).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        let g = encodings::gram_matrix(&columns).map_err(|e| e.to_string())?;
        let want = gram(&rows);
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        worst = worst.max(max_abs_diff(g.entries(), &want) / scale);
    }
    Ok(worst)
}

/// Worst deviation between the GASF and its product form over `count`
/// random series of length `n`.
pub fn gasf_identity_sweep(count: usize, n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let raw = raw_series(&mut rng, n);
        let norm = encodings::rescale_minmax(&TimeSeries::new(raw).unwrap());
        let got = encodings::gasf(&encodings::to_polar(&norm));
        worst = worst.max(max_abs_diff(got.entries(), &gasf_product_form(norm.values())));
    }
    worst
}
