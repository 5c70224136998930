//! Frame-by-frame slip detection with two-consecutive-prediction event registration.
//!
//! Nothing is classified until `T_k` frames have arrived. Each later frame classifies the
//! newest window; two Slip predictions in a row register an event, and the next Stable
//! prediction releases it.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::sensor::{ClassLabel, PressureRow, TactileFrame, SAMPLE_PERIOD_S};

/// Consecutive Slip predictions needed to register an event.
pub const CONSECUTIVE_TO_REGISTER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamStatus {
    Nominal,
    SlipRegistered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    /// Frame index (0-based within the stream) at which the event registered.
    pub detect_index: usize,
    pub detect_t: f64,
    /// Frame whose Stable prediction closed the event.
    pub release_index: Option<usize>,
    pub release_t: Option<f64>,
    /// Ground-truth onset this event answers, when known (filled by latency measurement).
    pub onset_index: Option<usize>,
    pub latency_samples: Option<usize>,
}

impl DetectionEvent {
    fn open(index: usize, t: f64) -> Self {
        Self {
            detect_index: index,
            detect_t: t,
            release_index: None,
            release_t: None,
            onset_index: None,
            latency_samples: None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.release_index.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    Registered(DetectionEvent),
    Released(DetectionEvent),
}

impl Transition {
    pub fn event(&self) -> &DetectionEvent {
        match self {
            Transition::Registered(e) | Transition::Released(e) => e,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Transition::Registered(_) => "registered",
            Transition::Released(_) => "released",
        }
    }

    /// Frame index and sensor time at which the transition happened.
    pub fn at(&self) -> (usize, f64) {
        match self {
            Transition::Registered(e) => (e.detect_index, e.detect_t),
            Transition::Released(e) => (e.release_index.unwrap_or(e.detect_index), e.release_t.unwrap_or(e.detect_t)),
        }
    }
}

impl fmt::Display for Transition {
    /// `<name>,<frame>,<t>`; the log writer appends wall time.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, t) = self.at();
        write!(f, "{},{i},{t}", self.name())
    }
}

pub const EVENT_LOG_HEADER: &str = "event,frame,t,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub status: StreamStatus,
    /// `None` during warm-up.
    pub prediction: Option<ClassLabel>,
    pub transition: Option<Transition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    window_len: usize,
    buffer: VecDeque<PressureRow>,
    counter: usize,
    status: StreamStatus,
    open: Option<DetectionEvent>,
    frames_seen: usize,
    last_t: Option<f64>,
}

impl StreamState {
    pub fn new(window_len: usize) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::Stream("window length must be at least 1".into()));
        }
        Ok(Self {
            window_len,
            buffer: VecDeque::with_capacity(window_len),
            counter: 0,
            status: StreamStatus::Nominal,
            open: None,
            frames_seen: 0,
            last_t: None,
        })
    }

    pub fn status(&self) -> StreamStatus {
        self.status
    }

    pub fn consecutive_slip(&self) -> usize {
        self.counter
    }

    pub fn open_event(&self) -> Option<&DetectionEvent> {
        self.open.as_ref()
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Appends a frame and, once warm, classifies the newest window with `model`.
    pub fn push_frame<C: Classifier + ?Sized>(&mut self, frame: &TactileFrame, model: &C) -> Result<StepOutcome> {
        if model.window_len() != self.window_len {
            return Err(Error::Stream(format!(
                "model window {} differs from stream window {}",
                model.window_len(),
                self.window_len
            )));
        }
        if frame.pressure.iter().any(|p| !p.is_finite()) || !frame.t.is_finite() {
            return Err(Error::Stream(format!("frame {} has a non-finite value", self.frames_seen)));
        }
        if let Some(last) = self.last_t.filter(|&last| frame.t <= last) {
            return Err(Error::Stream(format!(
                "frame {} at t={} does not follow t={last}",
                self.frames_seen, frame.t
            )));
        }
        self.last_t = Some(frame.t);
        if self.buffer.len() == self.window_len {
            self.buffer.pop_front();
        }
        self.buffer.push_back(frame.pressure);
        let index = self.frames_seen;
        self.frames_seen += 1;
        if self.buffer.len() < self.window_len {
            return Ok(StepOutcome {
                status: self.status,
                prediction: None,
                transition: None,
            });
        }
        let rows = self.buffer.make_contiguous();
        let prediction = model.classify(rows)?;
        let transition = self.apply_prediction(prediction, index, frame.t);
        Ok(StepOutcome {
            status: self.status,
            prediction: Some(prediction),
            transition,
        })
    }

    /// The event rule alone, driven by an externally produced prediction.
    pub fn apply_prediction(&mut self, prediction: ClassLabel, index: usize, t: f64) -> Option<Transition> {
        match prediction {
            ClassLabel::Slip => {
                self.counter += 1;
                if self.status == StreamStatus::Nominal && self.counter >= CONSECUTIVE_TO_REGISTER {
                    let event = DetectionEvent::open(index, t);
                    self.status = StreamStatus::SlipRegistered;
                    self.open = Some(event);
                    return Some(Transition::Registered(event));
                }
                None
            }
            ClassLabel::Stable => {
                self.counter = 0;
                if self.status == StreamStatus::SlipRegistered {
                    self.status = StreamStatus::Nominal;
                    let mut event = self.open.take().expect("registered status has an open event");
                    event.release_index = Some(index);
                    event.release_t = Some(t);
                    return Some(Transition::Released(event));
                }
                None
            }
        }
    }
}

/// A stream plus a callback fired on every registration (the grip-response hook).
pub struct Detector<'a, C: Classifier + ?Sized> {
    pub state: StreamState,
    model: &'a C,
    on_register: Option<Box<dyn FnMut(&DetectionEvent) + 'a>>,
}

impl<'a, C: Classifier + ?Sized> Detector<'a, C> {
    pub fn new(model: &'a C) -> Result<Self> {
        Ok(Self {
            state: StreamState::new(model.window_len())?,
            model,
            on_register: None,
        })
    }

    pub fn with_hook(mut self, hook: impl FnMut(&DetectionEvent) + 'a) -> Self {
        self.on_register = Some(Box::new(hook));
        self
    }

    pub fn push(&mut self, frame: &TactileFrame) -> Result<StepOutcome> {
        let out = self.state.push_frame(frame, self.model)?;
        if let (Some(Transition::Registered(e)), Some(hook)) = (&out.transition, self.on_register.as_mut()) {
            hook(e);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplayOptions {
    /// Sleep so frames are consumed at the sensor rate.
    pub paced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub transitions: Vec<Transition>,
    /// Closed events, plus one still open at the end of the stream.
    pub events: Vec<DetectionEvent>,
    pub frames: usize,
    pub classified: usize,
    /// Wall time spent inside the classifier.
    pub inference: Duration,
}

impl ReplayOutcome {
    pub fn mean_inference_us(&self) -> f64 {
        if self.classified == 0 {
            0.0
        } else {
            self.inference.as_secs_f64() * 1e6 / self.classified as f64
        }
    }

    /// Frame indices at which events registered.
    pub fn registrations(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.detect_index).collect()
    }
}

/// Feeds frames through a detector, optionally writing one log line per transition.
pub fn replay<C: Classifier + ?Sized, I: IntoIterator<Item = Result<TactileFrame>>>(
    frames: I,
    model: &C,
    options: ReplayOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<ReplayOutcome> {
    let mut state = StreamState::new(model.window_len())?;
    let mut out = ReplayOutcome {
        transitions: Vec::new(),
        events: Vec::new(),
        frames: 0,
        classified: 0,
        inference: Duration::ZERO,
    };
    let io_err = |e| Error::io("event log", e);
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "{EVENT_LOG_HEADER}").map_err(io_err)?;
    }
    let start = Instant::now();
    for frame in frames {
        let frame = frame?;
        if options.paced {
            let due = start + Duration::from_secs_f64(out.frames as f64 * SAMPLE_PERIOD_S);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let t0 = Instant::now();
        let step = state.push_frame(&frame, model)?;
        if step.prediction.is_some() {
            out.inference += t0.elapsed();
            out.classified += 1;
        }
        out.frames += 1;
        if let Some(tr) = step.transition {
            if let Some(w) = log.as_deref_mut() {
                writeln!(w, "{tr},{:.3}", start.elapsed().as_secs_f64() * 1e3).map_err(io_err)?;
                w.flush().map_err(io_err)?;
            }
            if let Transition::Released(e) = tr {
                out.events.push(e);
            }
            out.transitions.push(tr);
        }
    }
    if let Some(e) = state.open_event() {
        out.events.push(*e);
    }
    Ok(out)
}
