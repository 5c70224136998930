use std::time::Instant;

use rand::seq::SliceRandom;

use super::evaluate::evaluate_refs;
use super::fingerprint::corpus_fingerprint;
use crate::dataset::{random_augment_and_noise, stratified_split, undersample_indices, SplitSpec, WindowRef};
use crate::error::{Error, Result};
use crate::models::psd::DEFAULT_CUTOFF_HZ;
use crate::models::{
    FreqCnnArchitecture, FreqCnnModel, Model, ModelKind, PsdDetector, TcnArchitecture, TcnModel, Trainable,
};
use crate::neural::{AdamConfig, AdamState};
use crate::sensor::PressureRow;
use crate::{derive_seed, rng_from, Corpus};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub window_len: usize,
    pub augment: bool,
    /// Augmentation noise, as a fraction of the barometer range.
    pub noise_fraction: f64,
    /// Spacing between consecutive training window end points.
    pub stride: usize,
    pub psd_cutoff_hz: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 256,
            lr: 0.002,
            seed: 1,
            window_len: 100,
            augment: true,
            noise_fraction: 0.01,
            stride: 1,
            psd_cutoff_hz: DEFAULT_CUTOFF_HZ,
        }
    }
}

impl TrainConfig {
    /// The full 800-epoch schedule; everything else as default.
    pub fn full_scale() -> Self {
        Self {
            epochs: 800,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.window_len == 0 || self.stride == 0 {
            return Err(Error::Config("epochs, batch_size, window_len and stride must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.noise_fraction.is_finite() && self.noise_fraction >= 0.0) {
            return Err(Error::Config("noise_fraction must be non-negative".into()));
        }
        Ok(())
    }
}

/// Train/validation/test windows of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<WindowRef>,
    pub val: Vec<WindowRef>,
    pub test: Vec<WindowRef>,
    pub warnings: Vec<String>,
}

/// Cuts windows and splits them 80/10/10 per stratum with `seed`.
pub fn prepare_splits(corpus: &Corpus, window_len: usize, stride: usize, seed: u64) -> Result<Splits> {
    let refs = crate::dataset::make_window_refs(corpus, window_len, stride)?;
    if refs.is_empty() {
        return Err(Error::InvalidInput(format!("no sequence holds a window of {window_len} frames")));
    }
    let s = stratified_split(&refs, &SplitSpec::with_seed(seed))?;
    Ok(Splits {
        train: s.train,
        val: s.val,
        test: s.test,
        warnings: s.warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub samples: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_f1: f64,
    /// Wall-clock seconds; not reproducible, excluded from determinism checks.
    pub wall_s: f64,
}

impl EpochLog {
    /// Every field except wall time.
    pub fn reproducible_eq(&self, other: &EpochLog) -> bool {
        (self.epoch, self.samples) == (other.epoch, other.samples)
            && self.train_loss.to_bits() == other.train_loss.to_bits()
            && self.train_accuracy.to_bits() == other.train_accuracy.to_bits()
            && self.val_f1.to_bits() == other.val_f1.to_bits()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<EpochLog>,
    pub splits: Splits,
}

/// Splits the corpus, then trains one model of `kind`.
pub fn train(kind: ModelKind, corpus: &Corpus, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let splits = prepare_splits(corpus, cfg.window_len, cfg.stride, cfg.seed)?;
    train_on_splits(kind, corpus, splits, cfg)
}

pub fn train_on_splits(kind: ModelKind, corpus: &Corpus, splits: Splits, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let fingerprint = corpus_fingerprint(corpus);
    let (mut model, log) = match kind {
        ModelKind::Tcn => {
            let m = TcnModel::new(TcnArchitecture::with_window(cfg.window_len), derive_seed(cfg.seed, 0x7C4))?;
            let (m, log) = fit(m, corpus, &splits, cfg)?;
            (Model::Tcn(m), log)
        }
        ModelKind::FreqCnn => {
            let m = FreqCnnModel::new(FreqCnnArchitecture::with_window(cfg.window_len), derive_seed(cfg.seed, 0xF4E))?;
            let (m, log) = fit(m, corpus, &splits, cfg)?;
            (Model::FreqCnn(m), log)
        }
        ModelKind::Psd => {
            let start = Instant::now();
            let idx = undersample_indices(&splits.train, derive_seed(cfg.seed, 0x95D))?;
            let windows: Vec<(Vec<PressureRow>, _)> = idx
                .iter()
                .map(|&i| (splits.train[i].rows(corpus).copied().collect(), splits.train[i].label))
                .collect();
            let mut det = PsdDetector::fit(
                cfg.window_len,
                cfg.psd_cutoff_hz,
                windows.iter().map(|(r, l)| (r.as_slice(), *l)),
            )?;
            let val_f1 = if splits.val.is_empty() {
                det.train_f1
            } else {
                evaluate_refs(&det, corpus, &splits.val)?.f1
            };
            det.meta.val_f1 = val_f1;
            let log = vec![EpochLog {
                epoch: 1,
                samples: windows.len(),
                train_loss: f64::NAN,
                train_accuracy: f64::NAN,
                val_f1,
                wall_s: start.elapsed().as_secs_f64(),
            }];
            (Model::Psd(det), log)
        }
    };
    let meta = match &mut model {
        Model::Tcn(m) => &mut m.meta,
        Model::FreqCnn(m) => &mut m.meta,
        Model::Psd(m) => &mut m.meta,
    };
    meta.seed = cfg.seed;
    meta.lr = cfg.lr;
    meta.stride = cfg.stride;
    meta.data_fingerprint = fingerprint;
    if kind == ModelKind::Psd {
        meta.epochs = 1;
        meta.best_epoch = 1;
    }
    Ok(TrainOutcome { model, log, splits })
}

/// The epoch loop shared by the learned models; returns the best-validation checkpoint.
fn fit<M: Trainable + Clone>(mut model: M, corpus: &Corpus, splits: &Splits, cfg: &TrainConfig) -> Result<(M, Vec<EpochLog>)> {
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &model.params(),
    );
    let mut best: Option<(f64, usize, M)> = None;
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let mut rng = rng_from(derive_seed(cfg.seed, 0x1_0000 + epoch as u64));
        let mut order = undersample_indices(&splits.train, derive_seed(cfg.seed, epoch as u64))?;
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            model.zero_grad();
            for &i in batch {
                let w = &splits.train[i];
                let rows: Vec<PressureRow> = if cfg.augment {
                    let (aug, _) =
                        random_augment_and_noise(&w.materialize(corpus), &mut rng, cfg.noise_fraction, w.barometer_range(corpus));
                    aug.pressures
                } else {
                    w.rows(corpus).copied().collect()
                };
                let (loss, logits) = model.accumulate_gradients(&rows, w.label, &mut rng)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        reason: format!("loss became {loss}"),
                    });
                }
                loss_sum += loss;
                correct += usize::from(crate::models::argmax_label(&logits) == w.label);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut params = model.params_mut();
            for p in params.iter_mut() {
                p.scale_grad(scale);
            }
            adam.step(&mut params)?;
        }
        if model.params().iter().any(|p| !p.value.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                reason: "non-finite parameter after update".into(),
            });
        }
        let val_f1 = if splits.val.is_empty() {
            f64::NAN
        } else {
            evaluate_refs(&model, corpus, &splits.val)?.f1
        };
        let n = order.len();
        log.push(EpochLog {
            epoch,
            samples: n,
            train_loss: loss_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
            val_f1,
            wall_s: start.elapsed().as_secs_f64(),
        });
        let improved = match &best {
            None => true,
            Some((f, _, _)) => val_f1 > *f || val_f1.is_nan(),
        };
        if improved {
            best = Some((val_f1, epoch, model.clone()));
        }
    }
    let (val_f1, best_epoch, mut chosen) = best.expect("at least one epoch ran");
    let meta = chosen.meta_mut();
    meta.epochs = cfg.epochs;
    meta.best_epoch = best_epoch;
    meta.val_f1 = val_f1;
    Ok((chosen, log))
}
