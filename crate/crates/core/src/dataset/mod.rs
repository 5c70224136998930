//! Windowing, splitting, balancing, augmentation and corpus files.

mod augment;
mod balance;
pub mod io;
mod split;
mod window;

pub use augment::{augment, random_augment_and_noise, AugmentOp};
pub use balance::{class_counts, undersample_balance, undersample_indices};
pub use io::{load_corpus, load_sequence_file, save_corpus, FORMAT_VERSION};
pub use split::{stratified_split, SplitOutcome, SplitSpec, StratumKey};
pub use window::{make_window_refs, make_windows, WindowRef, WindowSample};

use crate::sensor::{ClassLabel, ConditionTag};

/// Anything carrying a class label and a recording condition.
pub trait Labeled {
    fn label(&self) -> ClassLabel;
    fn condition(&self) -> &ConditionTag;

    fn stratum(&self) -> StratumKey {
        let (surface, slip_type, speed) = self.condition().cell_key();
        StratumKey {
            label: self.label(),
            surface,
            slip_type,
            speed_bits: speed,
        }
    }
}
