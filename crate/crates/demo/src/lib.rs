//! Browser bindings: simulate a trace, inspect its spectrum, stream it through a PSD detector.
//!
//! The exported types are thin wrappers; the plain functions below them carry the logic and
//! are what the native tests exercise.

use baroslip::dataset::make_window_refs;
use baroslip::models::psd::{welch as welch_spectrum, DEFAULT_CUTOFF_HZ};
use baroslip::models::{Classifier, PsdDetector};
use baroslip::sensor::{PressureRow, SAMPLE_RATE_HZ};
use baroslip::simgen::{default_grid, generate_corpus, simulate_with_seed, SimConfig};
use baroslip::stream::{StreamState, Transition};
use baroslip::{ClassLabel, ConditionTag, Direction, Error, LabeledSequence, SlipType, Surface, CHANNELS};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Builds a condition from its text names; an empty direction picks the first valid one.
pub fn condition(surface: &str, slip_type: &str, direction: &str, speed: f64) -> baroslip::Result<ConditionTag> {
    let surface: Surface = surface.parse().map_err(Error::InvalidInput)?;
    let slip_type: SlipType = slip_type.parse().map_err(Error::InvalidInput)?;
    let direction = match (slip_type, direction) {
        (SlipType::Static, _) => None,
        (SlipType::TransPrimary, "") => Some(Direction::E),
        (SlipType::TransOblique, "") => Some(Direction::NE),
        (SlipType::Rotation, "") => Some(Direction::Cw),
        (_, d) => Some(d.parse().map_err(Error::InvalidInput)?),
    };
    let speed = if slip_type == SlipType::Static { 0.0 } else { speed };
    ConditionTag::new(surface, slip_type, speed, direction)
}

pub fn simulate_trace(cond: &ConditionTag, seconds: f64, seed: u64) -> baroslip::Result<LabeledSequence> {
    if !(seconds > 0.0 && seconds <= 120.0) {
        return Err(Error::InvalidInput(format!("duration {seconds} s must lie in (0, 120]")));
    }
    simulate_with_seed(&SimConfig::default(), cond, seconds, seed)
}

/// Fits a PSD threshold on the default synthetic corpus, windows every `stride` frames.
pub fn fit_psd(window_len: usize, stride: usize) -> baroslip::Result<PsdDetector> {
    let corpus = generate_corpus(&SimConfig::default(), &default_grid())?;
    let refs = make_window_refs(&corpus, window_len, stride.max(1))?;
    let windows: Vec<(Vec<PressureRow>, ClassLabel)> =
        refs.iter().map(|w| (w.rows(&corpus).copied().collect(), w.label)).collect();
    PsdDetector::fit(window_len, DEFAULT_CUTOFF_HZ, windows.iter().map(|(r, l)| (r.as_slice(), *l)))
}

/// Per-frame detector feature (NaN during warm-up) and registration indices.
pub fn stream_trace(det: &PsdDetector, seq: &LabeledSequence) -> baroslip::Result<(Vec<f64>, Vec<usize>)> {
    let t = det.window_len();
    let mut features = vec![f64::NAN; seq.len()];
    for end in t.saturating_sub(1)..seq.len() {
        let rows: Vec<PressureRow> = seq.frames[end + 1 - t..=end].iter().map(|f| f.pressure).collect();
        features[end] = det.feature(&rows);
    }
    // Drives the state machine directly: `replay` reads the wall clock, which wasm32 lacks.
    let mut state = StreamState::new(t)?;
    let mut regs = Vec::new();
    for frame in &seq.frames {
        if let Some(Transition::Registered(e)) = state.push_frame(frame, det)?.transition {
            regs.push(e.detect_index);
        }
    }
    Ok((features, regs))
}

#[wasm_bindgen]
pub struct Trace {
    seq: LabeledSequence,
}

#[wasm_bindgen]
impl Trace {
    #[wasm_bindgen(constructor)]
    pub fn new(
        surface: &str,
        slip_type: &str,
        direction: &str,
        speed: f64,
        seconds: f64,
        seed: u32,
    ) -> Result<Trace, JsError> {
        let cond = condition(surface, slip_type, direction, speed).map_err(js)?;
        let seq = simulate_trace(&cond, seconds, u64::from(seed)).map_err(js)?;
        Ok(Trace { seq })
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.seq.frames.iter().map(|f| f.pressure[c.min(CHANNELS - 1)]).collect()
    }

    /// 1 for slip frames.
    pub fn labels(&self) -> Vec<u8> {
        self.seq.labels.iter().map(|l| l.index() as u8).collect()
    }

    pub fn onsets(&self) -> Vec<u32> {
        self.seq.onsets().into_iter().map(|i| i as u32).collect()
    }
}

#[wasm_bindgen]
pub struct Spectrum {
    frequencies: Vec<f64>,
    density: Vec<f64>,
}

#[wasm_bindgen]
impl Spectrum {
    pub fn frequencies(&self) -> Vec<f64> {
        self.frequencies.clone()
    }

    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }
}

/// Welch density of one channel over frames `[start, start + len)`.
#[wasm_bindgen]
pub fn welch(trace: &Trace, channel: usize, start: usize, len: usize, segment: usize) -> Result<Spectrum, JsError> {
    let x = trace.channel(channel);
    let end = (start + len).min(x.len());
    let s = welch_spectrum(&x[start.min(end)..end], segment, segment / 2, SAMPLE_RATE_HZ).map_err(js)?;
    Ok(Spectrum {
        frequencies: s.frequencies,
        density: s.density,
    })
}

#[wasm_bindgen]
pub struct PsdStream {
    det: PsdDetector,
}

#[wasm_bindgen]
impl PsdStream {
    /// Fits the threshold in place; takes a moment for short windows.
    #[wasm_bindgen(constructor)]
    pub fn new(window_len: usize) -> Result<PsdStream, JsError> {
        Ok(PsdStream {
            det: fit_psd(window_len, 5).map_err(js)?,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.det.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.det.threshold = threshold;
    }

    pub fn fit_f1(&self) -> f64 {
        self.det.train_f1
    }

    /// Per-frame high-band power (NaN before the first full window).
    pub fn features(&self, trace: &Trace) -> Result<Vec<f64>, JsError> {
        Ok(stream_trace(&self.det, &trace.seq).map_err(js)?.0)
    }

    /// Frame indices where the two-in-a-row rule registered an event.
    pub fn registrations(&self, trace: &Trace) -> Result<Vec<u32>, JsError> {
        let (_, regs) = stream_trace(&self.det, &trace.seq).map_err(js)?;
        Ok(regs.into_iter().map(|i| i as u32).collect())
    }
}
