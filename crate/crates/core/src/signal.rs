//! Recording ingestion, windowed segmentation, and synthetic multi-subject
//! cohort generation with controllable inter-subject domain shift.
//!
//! The synthetic generator stands in for real intracranial recordings: each
//! subject is colored noise with subject-specific gain, spectral tilt and DC
//! offset (the domain shift), and seizure segments add amplified 60-200 Hz
//! oscillatory bursts so that band-power features are discriminative by
//! construction.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{stream, RngExt};

/// Sampling rate used by the synthetic generator.
pub const SAMPLE_RATE_HZ: f64 = 500.0;

const STREAM_SUBJECT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_BLOCK: u64 = 3;

/// Multichannel sampled signal with per-sample binary seizure labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    /// `channels[c][t]`; all channels share one length.
    pub channels: Vec<Vec<f64>>,
    /// One label per sample; 1 = seizure.
    pub labels: Vec<u8>,
}

impl Recording {
    pub fn new(
        subject_id: String,
        sample_rate_hz: f64,
        channels: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Recording> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample_rate_hz must be positive, got {sample_rate_hz}"
            )));
        }
        if channels.is_empty() {
            return Err(Error::Config("channels: need at least one channel".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Config("channels: unequal channel lengths".into()));
        }
        if labels.len() != len {
            return Err(Error::Config(format!(
                "labels: length {} does not match channel length {len}",
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Config("labels: values must be 0 or 1".into()));
        }
        Ok(Recording {
            subject_id,
            sample_rate_hz,
            channels,
            labels,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }
}

/// One fixed-length segment of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `samples[c]` has length d (the window size in samples).
    pub samples: Vec<Vec<f64>>,
    pub label: u8,
    pub subject_id: String,
    pub index: usize,
}

impl Window {
    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples[0].is_empty()
    }
}

/// Parameters of the synthetic cohort generator.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub n_subjects: usize,
    pub channels: usize,
    /// Length of one seizure block (seizure run + following non-seizure run).
    pub duration_s: f64,
    pub blocks_per_subject: usize,
    /// 0 = identical subjects; larger values spread per-subject gain,
    /// spectral tilt and DC offset further apart.
    pub shift_strength: f64,
    /// Amplitude multiplier (> 1) of the in-seizure high-frequency bursts.
    pub seizure_gain: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            n_subjects: 9,
            channels: 2,
            duration_s: 40.0,
            blocks_per_subject: 4,
            shift_strength: 0.5,
            seizure_gain: 4.0,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::Config(format!(
                "n_subjects must be at least 2, got {}",
                self.n_subjects
            )));
        }
        if self.channels < 1 {
            return Err(Error::Config("channels must be at least 1".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if self.blocks_per_subject < 2 {
            return Err(Error::Config(format!(
                "blocks_per_subject must be at least 2, got {}",
                self.blocks_per_subject
            )));
        }
        if !(self.shift_strength >= 0.0) {
            return Err(Error::Config(format!(
                "shift_strength must be non-negative, got {}",
                self.shift_strength
            )));
        }
        if !(self.seizure_gain > 1.0) {
            return Err(Error::Config(format!(
                "seizure_gain must exceed 1, got {}",
                self.seizure_gain
            )));
        }
        Ok(())
    }
}

/// Per-subject generative parameters derived from (seed, subject index).
struct SubjectParams {
    gain: f64,
    /// AR(1) pole; larger = steeper low-frequency tilt.
    tilt: f64,
    offset: f64,
}

fn subject_params(cfg: &CohortConfig, subject: usize) -> SubjectParams {
    let mut rng = stream(&[cfg.seed, subject as u64, STREAM_SUBJECT]);
    let u_gain = rng.uniform(-1.0, 1.0);
    let u_tilt = rng.uniform(-1.0, 1.0);
    let u_off = rng.uniform(-1.0, 1.0);
    SubjectParams {
        gain: (cfg.shift_strength * 0.4 * u_gain).exp(),
        tilt: (0.88 + 0.08 * cfg.shift_strength * u_tilt).clamp(0.5, 0.97),
        offset: 0.8 * cfg.shift_strength * u_off,
    }
}

struct BlockParams {
    seizure_len: usize,
    burst_freqs: [f64; 3],
    burst_phases: [f64; 3],
    env_freq: f64,
    env_phase: f64,
}

fn block_params(cfg: &CohortConfig, subject: usize, block: usize, block_len: usize) -> BlockParams {
    let mut rng = stream(&[cfg.seed, subject as u64, block as u64, STREAM_BLOCK]);
    let frac = rng.uniform(0.2, 0.3);
    // At least one full window on each side of the block boundary.
    let seizure_len = ((block_len as f64 * frac).round() as usize).clamp(1, block_len - 1);
    let mut burst_freqs = [0.0; 3];
    let mut burst_phases = [0.0; 3];
    for k in 0..3 {
        burst_freqs[k] = rng.uniform(60.0, 200.0);
        burst_phases[k] = rng.uniform(0.0, std::f64::consts::TAU);
    }
    BlockParams {
        seizure_len,
        burst_freqs,
        burst_phases,
        env_freq: rng.uniform(0.5, 1.5),
        env_phase: rng.uniform(0.0, std::f64::consts::TAU),
    }
}

/// Generate `cfg.n_subjects` recordings. Deterministic: the same config
/// yields bit-identical output.
pub fn generate_synthetic_cohort(cfg: &CohortConfig) -> Result<Vec<Recording>> {
    cfg.validate()?;
    (0..cfg.n_subjects)
        .map(|s| generate_subject(cfg, s))
        .collect()
}

fn generate_subject(cfg: &CohortConfig, subject: usize) -> Result<Recording> {
    let params = subject_params(cfg, subject);
    let block_len = (cfg.duration_s * SAMPLE_RATE_HZ).round() as usize;
    if block_len < 2 {
        return Err(Error::Config(format!(
            "duration_s too short: {} s at {} Hz",
            cfg.duration_s, SAMPLE_RATE_HZ
        )));
    }
    let total = block_len * cfg.blocks_per_subject;
    let blocks: Vec<BlockParams> = (0..cfg.blocks_per_subject)
        .map(|b| block_params(cfg, subject, b, block_len))
        .collect();

    let mut labels = vec![0u8; total];
    for (b, bp) in blocks.iter().enumerate() {
        let start = b * block_len;
        labels[start..start + bp.seizure_len].fill(1);
    }

    // AR(1) background normalized to unit stationary variance, then scaled.
    let ar_norm = (1.0 - params.tilt * params.tilt).sqrt();
    let burst_amp_per_tone = cfg.seizure_gain * 0.3 * (2.0f64 / 3.0).sqrt();

    let mut channels = Vec::with_capacity(cfg.channels);
    for c in 0..cfg.channels {
        let mut rng = stream(&[cfg.seed, subject as u64, c as u64, STREAM_NOISE]);
        let mut samples = Vec::with_capacity(total);
        let mut prev = 0.0;
        for n in 0..total {
            prev = params.tilt * prev + rng.normal();
            let mut v = params.gain * ar_norm * prev + params.offset;
            if labels[n] == 1 {
                let bp = &blocks[n / block_len];
                let t = n as f64 / SAMPLE_RATE_HZ;
                let env = 0.55
                    + 0.45 * (std::f64::consts::TAU * bp.env_freq * t + bp.env_phase).sin();
                let mut burst = 0.0;
                for k in 0..3 {
                    burst += (std::f64::consts::TAU * bp.burst_freqs[k] * t
                        + bp.burst_phases[k])
                        .sin();
                }
                v += params.gain * burst_amp_per_tone * env * burst;
            }
            samples.push(v);
        }
        channels.push(samples);
    }

    Recording::new(
        format!("S{:02}", subject),
        SAMPLE_RATE_HZ,
        channels,
        labels,
    )
}

/// Cut a recording into non-overlapping windows of `window_seconds`.
/// The trailing partial window is discarded; window labels follow the
/// majority of covered sample labels with ties resolved to seizure.
pub fn segment(rec: &Recording, window_seconds: f64) -> Result<Vec<Window>> {
    if !(window_seconds > 0.0) {
        return Err(Error::Size(format!(
            "window_seconds must be positive, got {window_seconds}"
        )));
    }
    let d = (rec.sample_rate_hz * window_seconds).round() as usize;
    if d == 0 {
        return Err(Error::Size(format!(
            "window of {window_seconds} s is shorter than one sample at {} Hz",
            rec.sample_rate_hz
        )));
    }
    let t = rec.n_samples();
    if d > t {
        return Err(Error::Size(format!(
            "window of {d} samples exceeds recording length {t}"
        )));
    }
    let count = t / d;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let lo = w * d;
        let hi = lo + d;
        let seizure: usize = rec.labels[lo..hi].iter().map(|&l| l as usize).sum();
        let label = u8::from(2 * seizure >= d);
        let samples = rec.channels.iter().map(|c| c[lo..hi].to_vec()).collect();
        windows.push(Window {
            samples,
            label,
            subject_id: rec.subject_id.clone(),
            index: w,
        });
    }
    Ok(windows)
}

// --- CSV persistence -------------------------------------------------------
//
// Header: `subject,<id>,rate,<hz>,channels,<C>`
// Rows:   `c1,...,cC,label`
// UTF-8, LF line endings. Floats use Rust's shortest round-trip formatting,
// so write-then-read is exact.

pub fn write_recording_to(rec: &Recording, out: &mut impl Write) -> std::io::Result<()> {
    write!(
        out,
        "subject,{},rate,{},channels,{}\n",
        rec.subject_id,
        rec.sample_rate_hz,
        rec.n_channels()
    )?;
    let t = rec.n_samples();
    for n in 0..t {
        for ch in &rec.channels {
            write!(out, "{},", ch[n])?;
        }
        write!(out, "{}\n", rec.labels[n])?;
    }
    Ok(())
}

pub fn recording_to_bytes(rec: &Recording) -> Vec<u8> {
    let mut buf = Vec::new();
    write_recording_to(rec, &mut buf).expect("write to Vec cannot fail");
    buf
}

pub fn write_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_recording_to(rec, &mut out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_recording_from(input: impl Read) -> Result<Recording> {
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
    if fields.len() != 6 || fields[0] != "subject" || fields[2] != "rate" || fields[4] != "channels"
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!("malformed header: {header:?}"),
        });
    }
    let subject_id = fields[1].to_string();
    let rate: f64 = fields[3].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad sample rate {:?}", fields[3]),
    })?;
    if !(rate > 0.0) {
        return Err(Error::Config(format!(
            "sample_rate_hz must be positive, got {rate}"
        )));
    }
    let n_channels: usize = fields[5].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad channel count {:?}", fields[5]),
    })?;
    if n_channels == 0 {
        return Err(Error::Config("channels must be at least 1".into()));
    }

    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    let mut labels = Vec::new();
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
        if cells.len() != n_channels + 1 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} fields, got {}", n_channels + 1, cells.len()),
            });
        }
        for (c, cell) in cells[..n_channels].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad sample value {cell:?}"),
            })?;
            channels[c].push(v);
        }
        let label = match cells[n_channels] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        labels.push(label);
    }
    Recording::new(subject_id, rate, channels, labels)
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_recording_from(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> CohortConfig {
        CohortConfig {
            n_subjects: 2,
            channels: 2,
            duration_s: 4.0,
            blocks_per_subject: 2,
            shift_strength: 0.5,
            seizure_gain: 4.0,
            seed: 7,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg();
        let a = generate_synthetic_cohort(&cfg).unwrap();
        let b = generate_synthetic_cohort(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(recording_to_bytes(&a[0]), recording_to_bytes(&b[0]));
    }

    #[test]
    fn zero_shift_matches_variances_within_5_percent() {
        let cfg = CohortConfig {
            n_subjects: 2,
            channels: 1,
            duration_s: 75.0,
            blocks_per_subject: 2,
            shift_strength: 0.0,
            seed: 3,
            ..small_cfg()
        };
        // 2 blocks x 75 s = 150 s per subject.
        let cohort = generate_synthetic_cohort(&cfg).unwrap();
        let var = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64
        };
        let v0 = var(&cohort[0].channels[0]);
        let v1 = var(&cohort[1].channels[0]);
        let rel = (v0 - v1).abs() / v0.max(v1);
        assert!(rel < 0.05, "variance mismatch {rel} (v0={v0}, v1={v1})");
    }

    #[test]
    fn invalid_config_names_field() {
        let mut cfg = small_cfg();
        cfg.n_subjects = 1;
        let err = generate_synthetic_cohort(&cfg).unwrap_err();
        assert!(err.to_string().contains("n_subjects"), "{err}");
        let mut cfg = small_cfg();
        cfg.seizure_gain = 1.0;
        let err = generate_synthetic_cohort(&cfg).unwrap_err();
        assert!(err.to_string().contains("seizure_gain"), "{err}");
    }

    #[test]
    fn segment_counts_and_sizes() {
        // 10 s at 500 Hz, 1 s windows -> 10 windows of 500 samples.
        let t = 5000;
        let rec = Recording::new(
            "a".into(),
            500.0,
            vec![vec![0.0; t]],
            vec![0; t],
        )
        .unwrap();
        let windows = segment(&rec, 1.0).unwrap();
        assert_eq!(windows.len(), 10);
        assert!(windows.iter().all(|w| w.len() == 500));
        assert!(windows.iter().all(|w| w.label == 0));
    }

    #[test]
    fn segment_majority_and_tie_rules() {
        let mut labels = vec![0u8; 500];
        labels[..250].fill(1); // exactly half seizure -> tie -> 1
        let rec = Recording::new("a".into(), 500.0, vec![vec![0.0; 500]], labels).unwrap();
        let windows = segment(&rec, 1.0).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].label, 1);

        let mut labels = vec![0u8; 500];
        labels[..249].fill(1); // minority seizure -> 0
        let rec = Recording::new("a".into(), 500.0, vec![vec![0.0; 500]], labels).unwrap();
        assert_eq!(segment(&rec, 1.0).unwrap()[0].label, 0);
    }

    #[test]
    fn segment_discards_trailing_partial_and_rejects_oversize() {
        let rec =
            Recording::new("a".into(), 500.0, vec![vec![0.0; 1250]], vec![0; 1250]).unwrap();
        assert_eq!(segment(&rec, 1.0).unwrap().len(), 2);
        assert!(matches!(segment(&rec, 3.0), Err(Error::Size(_))));
    }

    #[test]
    fn segment_concat_reproduces_prefix() {
        let cfg = small_cfg();
        let rec = &generate_synthetic_cohort(&cfg).unwrap()[0];
        let windows = segment(rec, 0.75).unwrap();
        let d = windows[0].len();
        for c in 0..rec.n_channels() {
            let mut rebuilt = Vec::new();
            for w in &windows {
                rebuilt.extend_from_slice(&w.samples[c]);
            }
            assert_eq!(&rebuilt[..], &rec.channels[c][..windows.len() * d]);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cfg = small_cfg();
        let rec = &generate_synthetic_cohort(&cfg).unwrap()[1];
        let bytes = recording_to_bytes(rec);
        let back = read_recording_from(&bytes[..]).unwrap();
        assert_eq!(rec, &back);
    }

    #[test]
    fn csv_parse_errors_name_lines() {
        let text = "subject,a,rate,500,channels,1\n0.5,0\n0.25,2\n";
        let err = read_recording_from(text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, ref msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("label"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }

        let ragged = "subject,a,rate,500,channels,2\n0.5,0.25,0\n0.5,0\n";
        match read_recording_from(ragged.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }

        let bad_rate = "subject,a,rate,0,channels,1\n0.5,0\n";
        assert!(matches!(
            read_recording_from(bad_rate.as_bytes()).unwrap_err(),
            Error::Config(_)
        ));
    }
}
