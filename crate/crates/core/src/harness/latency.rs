use std::time::Instant;

use crate::error::Result;
use crate::models::Classifier;
use crate::sensor::{ClassLabel, LabeledSequence};
use crate::stream::{DetectionEvent, StreamState, Transition};

/// Samples-to-detect statistics over every eligible ground-truth slip onset.
///
/// An onset at frame `o` is eligible when a full window ends there (`o >= T_k - 1`). It is
/// detected by the first registration `r` with `o <= r < offset`, where `offset` is the next
/// Stable frame; its latency is `r - o + 1`, the number of frames consumed from the onset
/// frame through the registering one. Registrations matched to no onset are false events.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub sequences: usize,
    pub frames: usize,
    pub onsets: usize,
    pub detected: usize,
    pub missed: usize,
    pub false_events: usize,
    /// One entry per detected onset, in stream order.
    pub latencies: Vec<usize>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p90: Option<usize>,
    pub max: Option<usize>,
    /// Wall clock per classified window; excluded from [`LatencyReport::reproducible_eq`].
    pub mean_inference_us: f64,
    /// Every registered event with its matched onset, tagged by sequence index.
    pub events: Vec<(usize, DetectionEvent)>,
}

impl LatencyReport {
    pub fn miss_rate(&self) -> f64 {
        if self.onsets == 0 {
            0.0
        } else {
            self.missed as f64 / self.onsets as f64
        }
    }

    pub fn reproducible_eq(&self, other: &LatencyReport) -> bool {
        let mut a = self.clone();
        a.mean_inference_us = other.mean_inference_us;
        a == *other
    }
}

/// Registrations of one stream, in order.
fn stream_sequence<C: Classifier + ?Sized>(
    model: &C,
    seq: &LabeledSequence,
    inference_s: &mut f64,
    classified: &mut usize,
) -> Result<Vec<DetectionEvent>> {
    let mut state = StreamState::new(model.window_len())?;
    let mut events = Vec::new();
    for frame in &seq.frames {
        let t0 = Instant::now();
        let step = state.push_frame(frame, model)?;
        if step.prediction.is_some() {
            *inference_s += t0.elapsed().as_secs_f64();
            *classified += 1;
        }
        match step.transition {
            Some(Transition::Registered(e)) => events.push(e),
            Some(Transition::Released(e)) => {
                if let Some(last) = events.last_mut() {
                    *last = e;
                }
            }
            None => {}
        }
    }
    Ok(events)
}

/// Index of the first Stable frame after `onset`, or the sequence length.
fn offset_after(labels: &[ClassLabel], onset: usize) -> usize {
    labels[onset..]
        .iter()
        .position(|&l| l == ClassLabel::Stable)
        .map_or(labels.len(), |p| onset + p)
}

pub fn measure_latency<C: Classifier + ?Sized>(model: &C, sequences: &[LabeledSequence]) -> Result<LatencyReport> {
    let warm = model.window_len().saturating_sub(1);
    let (mut inference_s, mut classified) = (0.0, 0usize);
    let mut report = LatencyReport {
        sequences: sequences.len(),
        frames: 0,
        onsets: 0,
        detected: 0,
        missed: 0,
        false_events: 0,
        latencies: Vec::new(),
        mean: None,
        median: None,
        p90: None,
        max: None,
        mean_inference_us: 0.0,
        events: Vec::new(),
    };
    for (si, seq) in sequences.iter().enumerate() {
        report.frames += seq.len();
        let mut events = stream_sequence(model, seq, &mut inference_s, &mut classified)?;
        for onset in seq.onsets().into_iter().filter(|&o| o >= warm) {
            report.onsets += 1;
            let offset = offset_after(&seq.labels, onset);
            let hit = events
                .iter_mut()
                .find(|e| e.onset_index.is_none() && (onset..offset).contains(&e.detect_index));
            match hit {
                Some(e) => {
                    let latency = e.detect_index - onset + 1;
                    e.onset_index = Some(onset);
                    e.latency_samples = Some(latency);
                    report.latencies.push(latency);
                    report.detected += 1;
                }
                None => report.missed += 1,
            }
        }
        report.false_events += events.iter().filter(|e| e.onset_index.is_none()).count();
        report.events.extend(events.into_iter().map(|e| (si, e)));
    }
    if !report.latencies.is_empty() {
        let mut sorted = report.latencies.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        report.mean = Some(sorted.iter().sum::<usize>() as f64 / n as f64);
        report.median = Some(if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        });
        // Nearest-rank percentile.
        report.p90 = Some(sorted[(0.9 * n as f64).ceil() as usize - 1]);
        report.max = sorted.last().copied();
    }
    if classified > 0 {
        report.mean_inference_us = inference_s * 1e6 / classified as f64;
    }
    Ok(report)
}
