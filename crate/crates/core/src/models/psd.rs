//! Spectral estimates and the high-frequency-power threshold detector.
//!
//! Periodograms use the power-per-bin convention: for a length-`N` real signal the one-sided
//! bins `k = 0..=N/2` sum to the mean-square value of the signal (Parseval). A unit-amplitude
//! sinusoid sitting exactly on an interior bin contributes 0.5 to that bin.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Classifier, TrainingMeta};
use crate::error::{Error, Result};
use crate::harness::metrics::ConfusionMatrix;
use crate::sensor::{ClassLabel, PressureRow, CHANNELS, SAMPLE_RATE_HZ};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT of a real signal, bins `0..=N/2`.
pub fn rfft(signal: &[f64]) -> Vec<Complex<f64>> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

/// Frequency of bin `k` for a length-`n` transform.
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    k as f64 * sample_rate / n as f64
}

/// One-sided power per bin; the bins sum to `mean(x^2)`.
pub fn periodogram(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let spec = rfft(signal);
    let nf = (n * n) as f64;
    spec.iter()
        .enumerate()
        .map(|(k, c)| {
            let fold = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            fold * c.norm_sqr() / nf
        })
        .collect()
}

pub fn remove_mean(signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    signal.iter().map(|x| x - mean).collect()
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    // Periodic Hann, the usual choice for spectral averaging.
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// A one-sided spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    /// Power per Hz.
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() < 2 {
            0.0
        } else {
            self.frequencies[1] - self.frequencies[0]
        }
    }
}

/// Welch estimate with Hann-windowed, mean-removed segments of `segment_len` samples
/// advanced by `segment_len - overlap`.
pub fn welch(signal: &[f64], segment_len: usize, overlap: usize, sample_rate: f64) -> Result<Spectrum> {
    if segment_len < 2 || overlap >= segment_len {
        return Err(Error::InvalidInput(format!(
            "welch needs segment_len >= 2 and overlap < segment_len, got {segment_len}/{overlap}"
        )));
    }
    if signal.len() < segment_len {
        return Err(Error::Range(format!(
            "signal of {} samples is shorter than one segment ({segment_len})",
            signal.len()
        )));
    }
    let window = hann(segment_len);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let step = segment_len - overlap;
    let bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0usize;
    let mut start = 0;
    while start + segment_len <= signal.len() {
        let seg = remove_mean(&signal[start..start + segment_len]);
        let tapered: Vec<f64> = seg.iter().zip(&window).map(|(x, w)| x * w).collect();
        for (k, c) in rfft(&tapered).iter().enumerate() {
            let fold = if k == 0 || 2 * k == segment_len { 1.0 } else { 2.0 };
            acc[k] += fold * c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (sample_rate * win_power * segments as f64);
    Ok(Spectrum {
        frequencies: (0..bins).map(|k| bin_frequency(k, segment_len, sample_rate)).collect(),
        density: acc.into_iter().map(|p| p * scale).collect(),
    })
}

/// Integrated power over bins with `lo <= f <= hi`.
pub fn band_power(spectrum: &Spectrum, lo: f64, hi: f64) -> f64 {
    let df = spectrum.resolution();
    spectrum
        .frequencies
        .iter()
        .zip(&spectrum.density)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, d)| d * df)
        .sum()
}

/// Sums, over channels, the periodogram bins at or above `cutoff_hz` of each mean-removed channel.
pub fn psd_features(rows: &[PressureRow], cutoff_hz: f64, sample_rate: f64) -> f64 {
    let n = rows.len();
    let mut total = 0.0;
    for c in 0..CHANNELS {
        let channel: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let p = periodogram(&remove_mean(&channel));
        total += p
            .iter()
            .enumerate()
            .filter(|(k, _)| bin_frequency(*k, n, sample_rate) >= cutoff_hz)
            .map(|(_, v)| v)
            .sum::<f64>();
    }
    total
}

/// Best threshold for "Slip iff feature >= threshold" by weighted F1.
///
/// Candidates are the smallest feature (everything Slip) and `next_up(v)` for every distinct
/// value `v` (everything above `v` Slip); the first maximum in ascending order wins.
pub fn fit_threshold(features: &[f64], labels: &[ClassLabel]) -> Result<(f64, f64)> {
    if features.len() != labels.len() {
        return Err(Error::Shape("features and labels differ in length".into()));
    }
    if features.iter().any(|f| !f.is_finite()) {
        return Err(Error::Fit("non-finite PSD feature".into()));
    }
    let slip_total = labels.iter().filter(|&&l| l == ClassLabel::Slip).count() as u64;
    let stable_total = labels.len() as u64 - slip_total;
    if slip_total == 0 || stable_total == 0 {
        return Err(Error::Fit("threshold fitting needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[a].total_cmp(&features[b]));

    // Everything at index >= i in sorted order is predicted Slip.
    let score = |below_slip: u64, below_stable: u64| {
        ConfusionMatrix {
            counts: [
                [below_stable, stable_total - below_stable],
                [below_slip, slip_total - below_slip],
            ],
        }
        .weighted_f1()
    };
    let mut best = (features[order[0]], score(0, 0));
    let (mut below_slip, mut below_stable) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let v = features[order[i]];
        while i < order.len() && features[order[i]] == v {
            match labels[order[i]] {
                ClassLabel::Slip => below_slip += 1,
                ClassLabel::Stable => below_stable += 1,
            }
            i += 1;
        }
        let f1 = score(below_slip, below_stable);
        if f1 > best.1 {
            best = (v.next_up(), f1);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdDetector {
    pub window_len: usize,
    pub cutoff_hz: f64,
    pub sample_rate: f64,
    pub threshold: f64,
    /// Weighted F1 on the fitting set.
    pub train_f1: f64,
    pub meta: TrainingMeta,
}

pub const DEFAULT_CUTOFF_HZ: f64 = 20.0;

impl PsdDetector {
    pub fn new(window_len: usize, cutoff_hz: f64, threshold: f64) -> Self {
        Self {
            window_len,
            cutoff_hz,
            sample_rate: SAMPLE_RATE_HZ,
            threshold,
            train_f1: 0.0,
            meta: TrainingMeta::default(),
        }
    }

    pub fn feature(&self, rows: &[PressureRow]) -> f64 {
        psd_features(rows, self.cutoff_hz, self.sample_rate)
    }

    /// Fits the threshold on windows of `window_len` rows.
    pub fn fit<'a>(
        window_len: usize,
        cutoff_hz: f64,
        windows: impl IntoIterator<Item = (&'a [PressureRow], ClassLabel)>,
    ) -> Result<Self> {
        let mut det = Self::new(window_len, cutoff_hz, 0.0);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (rows, label) in windows {
            if rows.len() != window_len {
                return Err(Error::Shape(format!("window of {} rows, expected {window_len}", rows.len())));
            }
            features.push(det.feature(rows));
            labels.push(label);
        }
        let (threshold, f1) = fit_threshold(&features, &labels)?;
        det.threshold = threshold;
        det.train_f1 = f1;
        Ok(det)
    }
}

impl Classifier for PsdDetector {
    fn window_len(&self) -> usize {
        self.window_len
    }

    fn classify(&self, rows: &[PressureRow]) -> Result<ClassLabel> {
        if rows.len() != self.window_len {
            return Err(Error::Shape(format!(
                "PSD detector expects {} rows, got {}",
                self.window_len,
                rows.len()
            )));
        }
        Ok(if self.feature(rows) >= self.threshold {
            ClassLabel::Slip
        } else {
            ClassLabel::Stable
        })
    }
}
