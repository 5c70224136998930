use super::metrics::{ConfusionMatrix, F1Grid};
use crate::dataset::{WindowRef, WindowSample};
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::sensor::{ClassLabel, ConditionTag, PressureRow};
use crate::Corpus;

/// Weighted metrics plus the per-condition F1 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub grid: F1Grid,
}

impl MetricsReport {
    pub fn from_predictions<'a>(items: impl IntoIterator<Item = (&'a ConditionTag, ClassLabel, ClassLabel)>) -> Result<Self> {
        let mut confusion = ConfusionMatrix::default();
        let mut grid = F1Grid::default();
        for (cond, truth, pred) in items {
            confusion.add(truth, pred);
            // Static recordings carry no motion and are not part of the sensitivity grid.
            if cond.direction.is_some() {
                grid.add(cond, truth, pred);
            }
        }
        if confusion.total() == 0 {
            return Err(Error::InvalidInput("evaluation needs at least one window".into()));
        }
        Ok(Self {
            accuracy: confusion.accuracy(),
            precision: confusion.weighted_precision(),
            recall: confusion.weighted_recall(),
            f1: confusion.weighted_f1(),
            confusion,
            grid,
        })
    }

    pub fn samples(&self) -> u64 {
        self.confusion.total()
    }
}

fn run<'a, C: Classifier + ?Sized>(
    model: &C,
    windows: impl Iterator<Item = (Vec<PressureRow>, ClassLabel, &'a ConditionTag)>,
) -> Result<MetricsReport> {
    let mut preds = Vec::new();
    for (rows, truth, cond) in windows {
        preds.push((cond, truth, model.classify(&rows)?));
    }
    MetricsReport::from_predictions(preds)
}

pub fn evaluate_refs<C: Classifier + ?Sized>(model: &C, corpus: &Corpus, refs: &[WindowRef]) -> Result<MetricsReport> {
    run(
        model,
        refs.iter().map(|w| (w.rows(corpus).copied().collect(), w.label, &w.condition)),
    )
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, windows: &[WindowSample]) -> Result<MetricsReport> {
    run(
        model,
        windows.iter().map(|w| (w.pressures.clone(), w.label, &w.condition)),
    )
}
