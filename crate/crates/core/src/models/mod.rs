//! The three window classifiers and their common file format.

pub mod freqcnn;
pub mod io;
pub mod psd;
pub mod tcn;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::neural::{Parameterized, Tensor};
use crate::sensor::{ClassLabel, PressureRow, CHANNELS};

pub use freqcnn::{FreqCnnArchitecture, FreqCnnModel};
pub use io::{load_model, save_model};
pub use psd::{psd_features, PsdDetector};
pub use tcn::{TcnArchitecture, TcnLevel, TcnModel};

/// Anything that labels a window of `window_len()` rows (oldest first).
pub trait Classifier {
    fn window_len(&self) -> usize;
    fn classify(&self, rows: &[PressureRow]) -> Result<ClassLabel>;
}

/// Provenance written into every model file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    /// Window stride used when the training windows were cut.
    pub stride: usize,
    /// Content hash of the corpus the model was fitted on (see `harness::corpus_fingerprint`).
    pub data_fingerprint: u64,
    pub best_epoch: usize,
    pub val_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Tcn,
    FreqCnn,
    Psd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Tcn, ModelKind::FreqCnn, ModelKind::Psd];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tcn => "tcn",
            ModelKind::FreqCnn => "freqcnn",
            ModelKind::Psd => "psd",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model kind `{s}` (tcn|freqcnn|psd)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tcn(TcnModel),
    FreqCnn(FreqCnnModel),
    Psd(PsdDetector),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Tcn(_) => ModelKind::Tcn,
            Model::FreqCnn(_) => ModelKind::FreqCnn,
            Model::Psd(_) => ModelKind::Psd,
        }
    }

    pub fn meta(&self) -> &TrainingMeta {
        match self {
            Model::Tcn(m) => &m.meta,
            Model::FreqCnn(m) => &m.meta,
            Model::Psd(m) => &m.meta,
        }
    }

    /// Class probabilities `[stable, slip]`; the PSD detector reports a hard 0/1 vector.
    pub fn probabilities(&self, rows: &[PressureRow]) -> Result<[f64; 2]> {
        match self {
            Model::Tcn(m) => m.probabilities(rows),
            Model::FreqCnn(m) => m.probabilities(rows),
            Model::Psd(m) => Ok(match m.classify(rows)? {
                ClassLabel::Stable => [1.0, 0.0],
                ClassLabel::Slip => [0.0, 1.0],
            }),
        }
    }
}

impl Classifier for Model {
    fn window_len(&self) -> usize {
        match self {
            Model::Tcn(m) => m.window_len(),
            Model::FreqCnn(m) => m.window_len(),
            Model::Psd(m) => m.window_len(),
        }
    }

    fn classify(&self, rows: &[PressureRow]) -> Result<ClassLabel> {
        match self {
            Model::Tcn(m) => m.classify(rows),
            Model::FreqCnn(m) => m.classify(rows),
            Model::Psd(m) => m.classify(rows),
        }
    }
}

/// A learned model trained by per-sample forward/backward with accumulated gradients.
pub trait Trainable: Parameterized + Classifier {
    /// Forward in training mode, backward from the cross-entropy loss; returns the loss and
    /// the logits. Gradients accumulate into the parameters.
    fn accumulate_gradients(
        &mut self,
        rows: &[PressureRow],
        target: ClassLabel,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Result<(f64, [f64; 2])>;

    fn meta_mut(&mut self) -> &mut TrainingMeta;
}

/// Pressure rows to a `[channels, time]` tensor with each channel's window mean removed and
/// the result divided by `scale`.
pub fn center_window(rows: &[PressureRow], scale: f64) -> Tensor {
    let t = rows.len();
    let mut data = vec![0.0; CHANNELS * t];
    for c in 0..CHANNELS {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / t as f64;
        for (i, r) in rows.iter().enumerate() {
            data[c * t + i] = (r[c] - mean) / scale;
        }
    }
    Tensor::from_vec(&[CHANNELS, t], data).expect("shape matches data")
}

pub(crate) fn expect_rows(rows: &[PressureRow], want: usize, what: &str) -> Result<()> {
    if rows.len() != want {
        return Err(Error::Shape(format!("{what} expects {want} rows, got {}", rows.len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("window contains non-finite pressure".into()));
    }
    Ok(())
}

pub(crate) fn two(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

pub(crate) fn argmax_label(p: &[f64; 2]) -> ClassLabel {
    if p[1] > p[0] {
        ClassLabel::Slip
    } else {
        ClassLabel::Stable
    }
}
