use std::fmt::Write as _;
use std::time::Instant;

use super::evaluate::evaluate_refs;
use super::train::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::models::{Classifier, ModelKind};
use crate::sensor::PressureRow;
use crate::Corpus;

/// The default sweep grid: 10, 20, ..., 100.
pub fn default_sweep_sizes() -> Vec<usize> {
    (1..=10).map(|i| i * 10).collect()
}

/// Windows timed per size when measuring inference.
const TIMED_WINDOWS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub window_len: usize,
    pub val_f1: f64,
    pub test_f1: f64,
    pub best_epoch: usize,
    /// Mean wall time per window; not reproducible.
    pub inference_us: f64,
}

impl SweepRow {
    pub fn reproducible_eq(&self, other: &SweepRow) -> bool {
        (self.window_len, self.best_epoch) == (other.window_len, other.best_epoch)
            && self.val_f1.to_bits() == other.val_f1.to_bits()
            && self.test_f1.to_bits() == other.test_f1.to_bits()
    }
}

/// Trains one TCN per window size with `cfg` (its `window_len` is overridden).
pub fn window_sweep(corpus: &Corpus, sizes: &[usize], cfg: &TrainConfig) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("window sweep needs at least one size".into()));
    }
    let longest = corpus.iter().map(|s| s.len()).max().unwrap_or(0);
    if let Some(&too_long) = sizes.iter().find(|&&s| s > longest) {
        return Err(Error::InvalidInput(format!(
            "window size {too_long} exceeds the longest sequence ({longest} frames)"
        )));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let cfg = TrainConfig {
            window_len: size,
            ..cfg.clone()
        };
        let out = train(ModelKind::Tcn, corpus, &cfg)?;
        let held_out = if out.splits.test.is_empty() {
            &out.splits.val
        } else {
            &out.splits.test
        };
        let test_f1 = if held_out.is_empty() {
            f64::NAN
        } else {
            evaluate_refs(&out.model, corpus, held_out)?.f1
        };
        let timed: Vec<Vec<PressureRow>> = held_out
            .iter()
            .take(TIMED_WINDOWS)
            .map(|w| w.rows(corpus).copied().collect())
            .collect();
        let start = Instant::now();
        for w in &timed {
            out.model.classify(w)?;
        }
        let inference_us = if timed.is_empty() {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e6 / timed.len() as f64
        };
        let meta = out.model.meta();
        rows.push(SweepRow {
            window_len: size,
            val_f1: meta.val_f1,
            test_f1,
            best_epoch: meta.best_epoch,
            inference_us,
        });
    }
    Ok(rows)
}

/// `window_len,val_f1,test_f1,best_epoch[,inference_us]`. Leave timing out for a
/// byte-reproducible file.
pub fn sweep_csv(rows: &[SweepRow], with_timing: bool) -> String {
    let mut s = String::from("window_len,val_f1,test_f1,best_epoch");
    if with_timing {
        s.push_str(",inference_us");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{:.6},{:.6},{}", r.window_len, r.val_f1, r.test_f1, r.best_epoch);
        if with_timing {
            let _ = write!(s, ",{:.1}", r.inference_us);
        }
        s.push('\n');
    }
    s
}
