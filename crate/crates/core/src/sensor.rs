//! Sensor geometry, frame and label types, and the velocity labeling rule.
//!
//! The fingertip carries a 2 x 3 barometer array sampled at 100 Hz. Channels are
//! numbered row-major with row 0 nearest the fingertip base:
//!
//! ```text
//!        x ->
//!   y  [0, 1, 2]
//!   |  [3, 4, 5]
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROWS: usize = 2;
pub const COLS: usize = 3;
pub const CHANNELS: usize = ROWS * COLS;
pub const SAMPLE_RATE_HZ: f64 = 100.0;
pub const SAMPLE_PERIOD_S: f64 = 0.01;

/// Translational speed at or above which a frame is labeled slip (m/s).
pub const SLIP_SPEED_THRESHOLD: f64 = 0.003;
/// Rotational speed at or above which a frame is labeled slip (rad/s).
pub const SLIP_OMEGA_THRESHOLD: f64 = 0.2;

/// One row of pressures, one value per channel.
pub type PressureRow = [f64; CHANNELS];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    pub rows: usize,
    pub cols: usize,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            rows: ROWS,
            cols: COLS,
        }
    }
}

impl SensorGeometry {
    pub fn channels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_index(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.rows && col < self.cols).then(|| row * self.cols + col)
    }

    pub fn cell_of(&self, channel: usize) -> Option<(usize, usize)> {
        (channel < self.channels()).then(|| (channel / self.cols, channel % self.cols))
    }

    /// Cell center in pitch units, origin at the array center.
    pub fn position(&self, channel: usize) -> (f64, f64) {
        let (row, col) = self.cell_of(channel).expect("channel out of range");
        let x = col as f64 - (self.cols as f64 - 1.0) / 2.0;
        let y = row as f64 - (self.rows as f64 - 1.0) / 2.0;
        (x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TactileFrame {
    pub t: f64,
    pub pressure: PressureRow,
    pub v_xy: [f64; 2],
    pub omega: f64,
}

impl TactileFrame {
    pub fn speed(&self) -> f64 {
        self.v_xy[0].hypot(self.v_xy[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Stable,
    Slip,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Stable, ClassLabel::Slip];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Stable => 0,
            ClassLabel::Slip => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ClassLabel::Stable
        } else {
            ClassLabel::Slip
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Stable => "stable",
            ClassLabel::Slip => "slip",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stable" => Ok(ClassLabel::Stable),
            "slip" => Ok(ClassLabel::Slip),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(concat!("unknown ", stringify!($name), " `{}`"), other)),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Planar,
    Spherical,
    /// Cylinder with its axis along the sensor x axis.
    CylX,
    /// Cylinder with its axis along the sensor y axis.
    CylY,
}

string_enum!(Surface { Planar => "planar", Spherical => "spherical", CylX => "cyl_x", CylY => "cyl_y" });

impl Surface {
    pub const ALL: [Surface; 4] = [Surface::Planar, Surface::Spherical, Surface::CylY, Surface::CylX];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipType {
    TransPrimary,
    TransOblique,
    Rotation,
    Static,
}

string_enum!(SlipType {
    TransPrimary => "trans_primary",
    TransOblique => "trans_oblique",
    Rotation => "rotation",
    Static => "static",
});

/// Compass directions in the sensor plane (E = +x, N = +y) plus rotation senses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
    Cw,
    Ccw,
}

string_enum!(Direction {
    E => "E", NE => "NE", N => "N", NW => "NW", W => "W", SW => "SW", S => "S", SE => "SE",
    Cw => "CW", Ccw => "CCW",
});

impl Direction {
    pub const PRIMARY: [Direction; 4] = [Direction::E, Direction::N, Direction::W, Direction::S];
    pub const OBLIQUE: [Direction; 4] = [Direction::NE, Direction::NW, Direction::SW, Direction::SE];
    pub const ROTATIONS: [Direction; 2] = [Direction::Cw, Direction::Ccw];

    const COMPASS: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];

    fn compass_index(self) -> Option<usize> {
        Self::COMPASS.iter().position(|&d| d == self)
    }

    /// Unit vector for translational directions; `None` for rotations.
    pub fn unit_vector(self) -> Option<[f64; 2]> {
        let k = self.compass_index()?;
        let angle = k as f64 * std::f64::consts::FRAC_PI_4;
        Some([angle.cos(), angle.sin()])
    }

    /// +1 for counter-clockwise, -1 for clockwise, `None` for translations.
    pub fn rotation_sign(self) -> Option<f64> {
        match self {
            Direction::Ccw => Some(1.0),
            Direction::Cw => Some(-1.0),
            _ => None,
        }
    }

    pub fn is_primary(self) -> bool {
        Self::PRIMARY.contains(&self)
    }

    pub fn is_oblique(self) -> bool {
        Self::OBLIQUE.contains(&self)
    }

    pub fn is_rotation(self) -> bool {
        Self::ROTATIONS.contains(&self)
    }

    /// Mirror image under x -> -x.
    pub fn flip_x(self) -> Self {
        match self {
            Direction::Cw => Direction::Ccw,
            Direction::Ccw => Direction::Cw,
            d => {
                // angle a -> pi - a
                let k = d.compass_index().unwrap();
                Self::COMPASS[(4 + 8 - k) % 8]
            }
        }
    }

    /// Mirror image under y -> -y.
    pub fn flip_y(self) -> Self {
        match self {
            Direction::Cw => Direction::Ccw,
            Direction::Ccw => Direction::Cw,
            d => {
                let k = d.compass_index().unwrap();
                Self::COMPASS[(8 - k) % 8]
            }
        }
    }

    pub fn rotate_180(self) -> Self {
        match self {
            Direction::Cw | Direction::Ccw => self,
            d => Self::COMPASS[(d.compass_index().unwrap() + 4) % 8],
        }
    }
}

/// Recording condition of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionTag {
    pub surface: Surface,
    pub slip_type: SlipType,
    /// m/s for translations, rad/s for rotations, 0 for static.
    pub max_speed: f64,
    pub direction: Option<Direction>,
}

impl ConditionTag {
    pub fn new(
        surface: Surface,
        slip_type: SlipType,
        max_speed: f64,
        direction: Option<Direction>,
    ) -> Result<Self> {
        let tag = Self {
            surface,
            slip_type,
            max_speed,
            direction,
        };
        tag.validate()?;
        Ok(tag)
    }

    pub fn static_on(surface: Surface) -> Self {
        Self {
            surface,
            slip_type: SlipType::Static,
            max_speed: 0.0,
            direction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.max_speed.is_finite() || self.max_speed < 0.0 {
            return Err(Error::InvalidInput(format!(
                "max_speed must be finite and non-negative, got {}",
                self.max_speed
            )));
        }
        let ok = match (self.slip_type, self.direction) {
            (SlipType::Static, None) => true,
            (SlipType::Static, Some(_)) => false,
            (SlipType::TransPrimary, Some(d)) => d.is_primary(),
            (SlipType::TransOblique, Some(d)) => d.is_oblique(),
            (SlipType::Rotation, Some(d)) => d.is_rotation(),
            (_, None) => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "direction {:?} is not valid for slip type {}",
                self.direction, self.slip_type
            )))
        }
    }

    /// Stratification key: (surface, slip type, speed bits). Direction is pooled.
    pub fn cell_key(&self) -> (Surface, SlipType, u64) {
        (self.surface, self.slip_type, self.max_speed.to_bits())
    }

    pub fn direction_str(&self) -> &'static str {
        self.direction.map_or("-", Direction::as_str)
    }
}

/// A contiguous recording with ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub frames: Vec<TactileFrame>,
    pub labels: Vec<ClassLabel>,
    pub condition: ConditionTag,
    pub barometer_range: f64,
}

impl LabeledSequence {
    /// Builds a sequence, deriving every label from the frame velocities.
    pub fn from_frames(
        frames: Vec<TactileFrame>,
        condition: ConditionTag,
        barometer_range: f64,
    ) -> Result<Self> {
        let labels = frames.iter().map(label_frame).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frames,
            labels,
            condition,
            barometer_range,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn slip_frames(&self) -> usize {
        self.labels.iter().filter(|&&l| l == ClassLabel::Slip).count()
    }

    /// Checks the labels-match-velocities invariant and pressure finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.frames.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} frames",
                self.labels.len(),
                self.frames.len()
            )));
        }
        for (i, (frame, &label)) in self.frames.iter().zip(&self.labels).enumerate() {
            if frame.pressure.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite pressure at frame {i}")));
            }
            if label_frame(frame)? != label {
                return Err(Error::InvalidInput(format!(
                    "label at frame {i} disagrees with its velocities"
                )));
            }
        }
        Ok(())
    }

    /// Indices where ground truth switches from stable to slip.
    pub fn onsets(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| {
                self.labels[i] == ClassLabel::Slip
                    && (i == 0 || self.labels[i - 1] == ClassLabel::Stable)
            })
            .collect()
    }
}

/// Slip iff |v_xy| >= 3 mm/s or |omega| >= 0.2 rad/s.
pub fn label_frame(frame: &TactileFrame) -> Result<ClassLabel> {
    label_velocity(frame.v_xy, frame.omega)
}

pub fn label_velocity(v_xy: [f64; 2], omega: f64) -> Result<ClassLabel> {
    if !(v_xy[0].is_finite() && v_xy[1].is_finite() && omega.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite velocity v_xy={v_xy:?} omega={omega}"
        )));
    }
    let slipping =
        v_xy[0].hypot(v_xy[1]) >= SLIP_SPEED_THRESHOLD || omega.abs() >= SLIP_OMEGA_THRESHOLD;
    Ok(if slipping {
        ClassLabel::Slip
    } else {
        ClassLabel::Stable
    })
}

/// Label of the window ending at `end_index`: the newest frame's label.
pub fn window_label(labels: &[ClassLabel], end_index: usize, window_len: usize) -> Result<ClassLabel> {
    if window_len == 0 {
        return Err(Error::Range("window length must be at least 1".into()));
    }
    if end_index + 1 < window_len {
        return Err(Error::Range(format!(
            "window of {window_len} ending at {end_index} starts before the sequence"
        )));
    }
    labels.get(end_index).copied().ok_or_else(|| {
        Error::Range(format!(
            "end index {end_index} beyond sequence of {}",
            labels.len()
        ))
    })
}
