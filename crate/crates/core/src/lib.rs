//! Slip detection for barometric tactile fingertips.
//!
//! The crate covers the whole pipeline on a 2 x 3 barometer array:
//!
//! - [`sensor`]: frames, labels, recording conditions and the velocity labeling rule.
//! - [`simgen`]: a synthetic signal generator over the surface/speed/direction grid.
//! - [`dataset`]: windowing, stratified splits, class balancing, symmetry augmentation,
//!   and the corpus directory format.
//! - [`neural`]: layers with hand-written backward passes and an Adam optimizer.
//! - [`models`]: the TCN classifier, a frequency-domain CNN, a PSD-threshold detector,
//!   and the model file format.
//! - [`harness`]: training, evaluation, the window-size sweep and latency measurement.
//! - [`stream`]: the streaming detector with two-consecutive-sample event registration.

pub mod dataset;
pub mod error;
pub mod harness;
pub mod models;
pub mod neural;
pub mod sensor;
pub mod simgen;
pub mod stream;

pub use error::{Error, Result};
pub use sensor::{
    label_frame, window_label, ClassLabel, ConditionTag, Direction, LabeledSequence,
    SensorGeometry, SlipType, Surface, TactileFrame, CHANNELS,
};

/// A recorded or simulated set of sequences.
pub type Corpus = Vec<LabeledSequence>;

/// Mixes a base seed with a stream identifier (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
