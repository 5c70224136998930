//! Training, evaluation, the window-size sweep, latency measurement and report output.

pub mod evaluate;
pub mod fingerprint;
pub mod latency;
pub mod metrics;
pub mod report;
pub mod sweep;
pub mod train;

pub use evaluate::{evaluate, evaluate_refs, MetricsReport};
pub use fingerprint::corpus_fingerprint;
pub use latency::{measure_latency, LatencyReport};
pub use metrics::{ConfusionMatrix, F1Grid, MotionKey};
pub use sweep::{default_sweep_sizes, sweep_csv, window_sweep, SweepRow};
pub use train::{prepare_splits, train, train_on_splits, EpochLog, Splits, TrainConfig, TrainOutcome};
