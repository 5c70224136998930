use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::sensor::{ConditionTag, PressureRow, CHANNELS};

use super::WindowSample;

/// Symmetries of the 2 x 3 array. Together they form the Klein four-group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentOp {
    Identity,
    FlipX,
    FlipY,
    Rot180,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 4] = [AugmentOp::Identity, AugmentOp::FlipX, AugmentOp::FlipY, AugmentOp::Rot180];

    /// `out[c] = in[perm[c]]` for layout [[0,1,2],[3,4,5]].
    pub fn permutation(self) -> [usize; CHANNELS] {
        match self {
            AugmentOp::Identity => [0, 1, 2, 3, 4, 5],
            AugmentOp::FlipX => [2, 1, 0, 5, 4, 3],
            AugmentOp::FlipY => [3, 4, 5, 0, 1, 2],
            AugmentOp::Rot180 => [5, 4, 3, 2, 1, 0],
        }
    }

    pub fn compose(self, then: AugmentOp) -> AugmentOp {
        use AugmentOp::*;
        match (self, then) {
            (Identity, x) | (x, Identity) => x,
            (a, b) if a == b => Identity,
            (FlipX, FlipY) | (FlipY, FlipX) => Rot180,
            (FlipX, Rot180) | (Rot180, FlipX) => FlipY,
            _ => FlipX,
        }
    }

    pub fn apply_row(self, row: &PressureRow) -> PressureRow {
        let perm = self.permutation();
        std::array::from_fn(|c| row[perm[c]])
    }

    pub fn apply_condition(self, condition: &ConditionTag) -> ConditionTag {
        let direction = condition.direction.map(|d| match self {
            AugmentOp::Identity => d,
            AugmentOp::FlipX => d.flip_x(),
            AugmentOp::FlipY => d.flip_y(),
            AugmentOp::Rot180 => d.rotate_180(),
        });
        ConditionTag {
            direction,
            ..*condition
        }
    }
}

/// Permutes every row's channels and updates the direction metadata; the label is kept.
pub fn augment(sample: &WindowSample, op: AugmentOp) -> WindowSample {
    WindowSample {
        pressures: sample.pressures.iter().map(|r| op.apply_row(r)).collect(),
        label: sample.label,
        condition: op.apply_condition(&sample.condition),
    }
}

/// Draws one of the four ops uniformly, applies it, then adds Gaussian noise with
/// standard deviation `noise_fraction * barometer_range` to every entry.
pub fn random_augment_and_noise(
    sample: &WindowSample,
    rng: &mut impl Rng,
    noise_fraction: f64,
    barometer_range: f64,
) -> (WindowSample, AugmentOp) {
    let op = AugmentOp::ALL[rng.random_range(0..4)];
    let mut out = augment(sample, op);
    add_noise(&mut out.pressures, rng, noise_fraction * barometer_range);
    (out, op)
}

pub(crate) fn add_noise(rows: &mut [PressureRow], rng: &mut impl Rng, sigma: f64) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma is finite");
        for v in rows.iter_mut().flatten() {
            *v += normal.sample(rng);
        }
    }
}
