//! The 11 per-channel seizure biomarkers and feature-matrix plumbing.
//!
//! Per channel, in order: line-length, total power, variance, then band
//! power over delta (1-4 Hz), theta (4-8), alpha (8-13), beta (13-30),
//! low-gamma (30-50), gamma (50-80), high-gamma (80-150) and ripple
//! (150-250) bands. Multi-channel windows concatenate per-channel blocks
//! (channel-major), giving F = C x 11 dimensions.
//!
//! Band powers come from a single raw periodogram per channel, scaled so
//! that DC + Nyquist + the one-sided bin powers sum exactly to the total
//! power (Parseval). Bands are half-open `[lo, hi)` on bin center
//! frequency, so shared edges like 4 Hz belong to the upper band.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::signal::Window;

pub const FEATURES_PER_CHANNEL: usize = 11;

/// The 8 frequency bands, Hz, half-open.
pub const BANDS: [(f64, f64); 8] = [
    (1.0, 4.0),
    (4.0, 8.0),
    (8.0, 13.0),
    (13.0, 30.0),
    (30.0, 50.0),
    (50.0, 80.0),
    (80.0, 150.0),
    (150.0, 250.0),
];

pub const FEATURE_NAMES: [&str; FEATURES_PER_CHANNEL] = [
    "lln", "pow", "var", "delta", "theta", "alpha", "beta", "gamma1", "gamma2", "gamma3",
    "ripple",
];

/// Mean absolute first difference: (1/d) * sum |x[n] - x[n-1]|.
pub fn line_length(x: &[f64]) -> Result<f64> {
    let d = x.len();
    if d < 2 {
        return Err(Error::Size(format!(
            "line_length needs at least 2 samples, got {d}"
        )));
    }
    Ok(x.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>() / d as f64)
}

/// Mean of squares: (1/d) * sum x[n]^2.
pub fn total_power(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Size("total_power of empty window".into()));
    }
    Ok(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

/// Population variance about the sample mean.
pub fn variance(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Size("variance of empty window".into()));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok(x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64)
}

thread_local! {
    static FFT_CACHE: RefCell<(FftPlanner<f64>, HashMap<usize, Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn fft_forward(len: usize) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry(len)
            .or_insert_with(|| planner.plan_fft_forward(len))
            .clone()
    })
}

/// One-sided periodogram with Parseval-consistent scaling: the returned
/// bin powers (indices 0..=d/2) sum to `total_power(x)`.
pub fn periodogram(x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    if d < 2 {
        return Err(Error::Size(format!(
            "periodogram needs at least 2 samples, got {d}"
        )));
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_forward(d).process(&mut buf);
    let half = d / 2;
    let scale = 1.0 / (d as f64 * d as f64);
    let mut powers = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let two_sided = k == 0 || (d % 2 == 0 && k == half);
        let factor = if two_sided { 1.0 } else { 2.0 };
        powers.push(factor * c.norm_sqr() * scale);
    }
    Ok(powers)
}

fn band_sum(powers: &[f64], d: usize, fs: f64, lo_hz: f64, hi_hz: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &p) in powers.iter().enumerate().skip(1) {
        let f = k as f64 * fs / d as f64;
        if f >= lo_hz && f < hi_hz {
            acc += p;
        }
    }
    acc
}

fn check_band(fs: f64, lo_hz: f64, hi_hz: f64) -> Result<()> {
    if !(lo_hz < hi_hz) {
        return Err(Error::Band(format!("empty band [{lo_hz}, {hi_hz})")));
    }
    if lo_hz < 0.0 {
        return Err(Error::Band(format!("negative band edge {lo_hz}")));
    }
    if hi_hz > fs / 2.0 {
        return Err(Error::Band(format!(
            "band edge {hi_hz} Hz exceeds Nyquist {} Hz",
            fs / 2.0
        )));
    }
    Ok(())
}

/// Periodogram energy over DFT bins k >= 1 with lo <= k*fs/d < hi.
pub fn band_power(x: &[f64], fs: f64, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    check_band(fs, lo_hz, hi_hz)?;
    let powers = periodogram(x)?;
    Ok(band_sum(&powers, x.len(), fs, lo_hz, hi_hz))
}

/// One feature row: C x 11 values plus the window label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: u8,
    pub subject_id: String,
}

/// All 11 features of one channel, reusing a single periodogram.
fn channel_features(x: &[f64], fs: f64, out: &mut Vec<f64>) -> Result<()> {
    out.push(line_length(x)?);
    out.push(total_power(x)?);
    out.push(variance(x)?);
    let powers = periodogram(x)?;
    for &(lo, hi) in &BANDS {
        check_band(fs, lo, hi)?;
        out.push(band_sum(&powers, x.len(), fs, lo, hi));
    }
    Ok(())
}

/// Extract the C x 11 feature vector of one window.
pub fn extract_features(window: &Window, fs: f64) -> Result<FeatureVector> {
    if window.samples.is_empty() {
        return Err(Error::Size("window has no channels".into()));
    }
    let mut values = Vec::with_capacity(window.n_channels() * FEATURES_PER_CHANNEL);
    for channel in &window.samples {
        channel_features(channel, fs, &mut values)?;
    }
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(FeatureVector {
        values,
        label: window.label,
        subject_id: window.subject_id.clone(),
    })
}

/// Feature rows of one subject; rectangular with dimension F = C x 11.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub subject_id: String,
    pub dim: usize,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(subject_id: String, dim: usize) -> FeatureMatrix {
        FeatureMatrix {
            subject_id,
            dim,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: FeatureVector) -> Result<()> {
        if row.values.len() != self.dim {
            return Err(Error::Shape(format!(
                "feature row of dim {} pushed into matrix of dim {}",
                row.values.len(),
                self.dim
            )));
        }
        if row.subject_id != self.subject_id {
            return Err(Error::Data(format!(
                "row from subject {} pushed into matrix of subject {}",
                row.subject_id, self.subject_id
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Extract features from every window of one subject.
    pub fn from_windows(windows: &[Window], fs: f64) -> Result<FeatureMatrix> {
        let first = windows
            .first()
            .ok_or_else(|| Error::Data("no windows to extract features from".into()))?;
        let mut matrix = FeatureMatrix::new(
            first.subject_id.clone(),
            first.n_channels() * FEATURES_PER_CHANNEL,
        );
        for w in windows {
            matrix.push(extract_features(w, fs)?)?;
        }
        Ok(matrix)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn to_mat(&self) -> Mat {
        let mut m = Mat::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&row.values);
        }
        m
    }

    /// New matrix holding the given rows (by index, in order).
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            subject_id: self.subject_id.clone(),
            dim: self.dim,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Per-dimension z-scoring statistics, fit on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fit per-dimension mean and population standard deviation over all rows
/// of the given matrices. Dimensions with vanishing spread get sigma = 1 so
/// constant columns normalize to zero.
pub fn fit_normalizer(train: &[FeatureMatrix]) -> Result<Normalizer> {
    let dim = train
        .first()
        .ok_or_else(|| Error::Data("fit_normalizer: no matrices".into()))?
        .dim;
    let total: usize = train.iter().map(FeatureMatrix::n_rows).sum();
    if total < 2 {
        return Err(Error::Size(format!(
            "fit_normalizer needs at least 2 rows, got {total}"
        )));
    }
    let mut mean = vec![0.0; dim];
    for m in train {
        m.to_mat().check_cols(dim, "fit_normalizer")?;
        for row in &m.rows {
            for (acc, &v) in mean.iter_mut().zip(&row.values) {
                *acc += v;
            }
        }
    }
    for v in &mut mean {
        *v /= total as f64;
    }
    let mut var = vec![0.0; dim];
    for m in train {
        for row in &m.rows {
            for ((acc, &mu), &v) in var.iter_mut().zip(&mean).zip(&row.values) {
                let d = v - mu;
                *acc += d * d;
            }
        }
    }
    let std = var
        .iter()
        .map(|&v| {
            let s = (v / total as f64).sqrt();
            if s < 1e-12 {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(Normalizer { mean, std })
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.dim != self.dim() {
            return Err(Error::Shape(format!(
                "normalizer of dim {} applied to matrix of dim {}",
                self.dim(),
                m.dim
            )));
        }
        let mut out = FeatureMatrix::new(m.subject_id.clone(), m.dim);
        for row in &m.rows {
            let values = row
                .values
                .iter()
                .zip(&self.mean)
                .zip(&self.std)
                .map(|((&v, &mu), &sd)| (v - mu) / sd)
                .collect();
            out.rows.push(FeatureVector {
                values,
                label: row.label,
                subject_id: row.subject_id.clone(),
            });
        }
        Ok(out)
    }

    /// Apply to a bare matrix (row layout must match the fit dimension).
    pub fn apply_mat(&self, m: &Mat) -> Result<Mat> {
        m.check_cols(self.dim(), "normalizer")?;
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, &mu), &sd) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / sd;
            }
        }
        Ok(out)
    }
}

// --- CSV persistence -------------------------------------------------------
//
// Header: `subject,<id>,dim,<F>`
// Rows:   `f1,...,fF,label`

pub fn write_features_to(m: &FeatureMatrix, out: &mut impl Write) -> std::io::Result<()> {
    write!(out, "subject,{},dim,{}\n", m.subject_id, m.dim)?;
    for row in &m.rows {
        for v in &row.values {
            write!(out, "{},", v)?;
        }
        write!(out, "{}\n", row.label)?;
    }
    Ok(())
}

pub fn features_to_bytes(m: &FeatureMatrix) -> Vec<u8> {
    let mut buf = Vec::new();
    write_features_to(m, &mut buf).expect("write to Vec cannot fail");
    buf
}

pub fn write_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_features_to(m, &mut out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_features_from(input: impl Read) -> Result<FeatureMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header = header.map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let fields: Vec<&str> = header.trim_end().split(',').collect();
    if fields.len() != 4 || fields[0] != "subject" || fields[2] != "dim" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("malformed header: {header:?}"),
        });
    }
    let subject_id = fields[1].to_string();
    let dim: usize = fields[3].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad dimension {:?}", fields[3]),
    })?;
    if dim == 0 {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    let mut matrix = FeatureMatrix::new(subject_id.clone(), dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != dim + 1 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} fields, got {}", dim + 1, cells.len()),
            });
        }
        let mut values = Vec::with_capacity(dim);
        for cell in &cells[..dim] {
            values.push(cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad feature value {cell:?}"),
            })?);
        }
        let label = match cells[dim] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        matrix.rows.push(FeatureVector {
            values,
            label,
            subject_id: subject_id.clone(),
        });
    }
    Ok(matrix)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_features_from(file)
}
