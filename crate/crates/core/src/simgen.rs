//! Synthetic tactile sequences over the surface / slip-type / speed grid.
//!
//! Each channel's pressure is
//!
//! ```text
//! p_c(t) = base * w_c * carrier(t)
//!        + vibration_gain * u(t) * w_c * g(t) * b_c(t) band-limited stick-slip vibration
//!        + gradient_gain  * u(t) * w_c * sin(phi_c(t)) traveling pressure wave along the slip
//!        + noise
//! ```
//!
//! where `w_c` is the surface contact footprint, `u(t)` the contact speed, `b_c` unit-variance
//! band-passed noise, `g` a two-level burst gate that opens at each movement start, and `phi_c`
//! advances with the distance slid. The carrier is identical in both classes, so pressure
//! means carry no class information.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::{
    ClassLabel, ConditionTag, Direction, LabeledSequence, SensorGeometry, SlipType, Surface,
    TactileFrame, CHANNELS, SAMPLE_RATE_HZ,
};
use crate::{derive_seed, rng_from, Corpus};

/// One static pause followed by one slip movement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub pause_s: f64,
    pub slip_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub sample_rate: f64,
    pub base_pressure: f64,
    pub barometer_range: f64,
    pub noise_std: f64,
    /// (f_lo, f_hi) in Hz.
    pub slip_vibration_band: [f64; 2],
    /// Vibration standard deviation per unit contact speed (raw units per m/s).
    pub vibration_gain: f64,
    /// Share of vibration variance common to all channels, in [0, 1].
    pub vibration_common: f64,
    /// Mean stick-slip burst duration; vibration is only emitted during bursts.
    pub burst_on_s: f64,
    /// Mean quiet interval between bursts while moving; 0 makes vibration continuous.
    pub burst_gap_s: f64,
    /// Vibration amplitude between bursts relative to a burst, in [0, 1].
    pub burst_floor: f64,
    /// Traveling-wave amplitude per unit contact speed (raw units per m/s).
    pub gradient_gain: f64,
    pub texture_wavelength_m: f64,
    pub sensor_pitch_m: f64,
    /// Lever arm converting angular speed into contact speed.
    pub rotation_radius_m: f64,
    /// Footprint falloff (pitch units) for curved surfaces.
    pub contact_spread: f64,
    /// Relative amplitude of the slow normal-force wobble shared by both classes.
    pub carrier_wobble: f64,
    pub carrier_wobble_hz: f64,
    /// Trapezoidal ramp duration at each end of a slip movement.
    pub ramp_s: f64,
    /// Static lead-in before the first movement.
    pub lead_in_s: f64,
    /// Shortest sequence the corpus generator will emit.
    pub min_duration_s: f64,
    /// Pause/slip plan, cycled after the lead-in.
    pub segment_plan: Vec<Segment>,
    /// Total slip frames targeted by `generate_corpus`.
    pub corpus_slip_frames: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 20210601,
            sample_rate: SAMPLE_RATE_HZ,
            base_pressure: 500.0,
            barometer_range: 1000.0,
            noise_std: 10.0,
            slip_vibration_band: [15.0, 45.0],
            vibration_gain: 300.0,
            vibration_common: 0.5,
            burst_on_s: 0.10,
            burst_gap_s: 0.06,
            burst_floor: 0.3,
            gradient_gain: 200.0,
            texture_wavelength_m: 0.01,
            sensor_pitch_m: 0.008,
            rotation_radius_m: 0.04,
            contact_spread: 1.0,
            carrier_wobble: 0.02,
            carrier_wobble_hz: 0.3,
            ramp_s: 0.1,
            lead_in_s: 1.2,
            min_duration_s: 1.5,
            segment_plan: vec![
                Segment { pause_s: 1.0, slip_s: 1.4 },
                Segment { pause_s: 1.3, slip_s: 1.1 },
                Segment { pause_s: 0.9, slip_s: 1.6 },
                Segment { pause_s: 1.2, slip_s: 1.2 },
            ],
            corpus_slip_frames: 23_000,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.sample_rate != SAMPLE_RATE_HZ {
            return bad(format!("sample_rate must be {SAMPLE_RATE_HZ}, got {}", self.sample_rate));
        }
        let [lo, hi] = self.slip_vibration_band;
        if !(lo > 0.0 && lo < hi && hi <= self.sample_rate / 2.0) {
            return bad(format!("slip_vibration_band must satisfy 0 < lo < hi <= {}", self.sample_rate / 2.0));
        }
        let non_negative = [
            ("base_pressure", self.base_pressure),
            ("noise_std", self.noise_std),
            ("vibration_gain", self.vibration_gain),
            ("gradient_gain", self.gradient_gain),
            ("carrier_wobble", self.carrier_wobble),
            ("carrier_wobble_hz", self.carrier_wobble_hz),
            ("lead_in_s", self.lead_in_s),
            ("burst_gap_s", self.burst_gap_s),
            ("min_duration_s", self.min_duration_s),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        let positive = [
            ("barometer_range", self.barometer_range),
            ("texture_wavelength_m", self.texture_wavelength_m),
            ("sensor_pitch_m", self.sensor_pitch_m),
            ("rotation_radius_m", self.rotation_radius_m),
            ("contact_spread", self.contact_spread),
            ("ramp_s", self.ramp_s),
            ("burst_on_s", self.burst_on_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.burst_floor) {
            return bad("burst_floor must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.vibration_common) {
            return bad("vibration_common must lie in [0, 1]".into());
        }
        if self.segment_plan.is_empty() {
            return bad("segment_plan must not be empty".into());
        }
        for (i, s) in self.segment_plan.iter().enumerate() {
            if !(s.pause_s >= 0.0 && s.slip_s >= 2.0 * self.ramp_s) {
                return bad(format!(
                    "segment {i}: pause must be >= 0 and slip must cover both ramps ({} s)",
                    2.0 * self.ramp_s
                ));
            }
        }
        Ok(())
    }

    /// Per-channel contact weight in [0, 1] for a surface.
    pub fn contact_profile(&self, surface: Surface) -> [f64; CHANNELS] {
        let geometry = SensorGeometry::default();
        let s2 = 2.0 * self.contact_spread * self.contact_spread;
        let mut w = [0.0; CHANNELS];
        for (c, wc) in w.iter_mut().enumerate() {
            let (x, y) = geometry.position(c);
            let (row, _) = geometry.cell_of(c).unwrap();
            *wc = match surface {
                Surface::Planar => 1.0,
                Surface::Spherical => (-(x * x + y * y) / s2).exp(),
                // Contact line along x lies over the base row.
                Surface::CylX => (-((row as f64) * (row as f64)) / s2).exp(),
                Surface::CylY => (-(x * x) / s2).exp(),
            };
        }
        w
    }

    fn frames(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate).round() as usize
    }
}

/// Normalized speed profile in [0, 1] following the segment plan.
pub fn speed_profile(cfg: &SimConfig, n_frames: usize) -> Vec<f64> {
    let dt = 1.0 / cfg.sample_rate;
    let mut profile = vec![0.0; n_frames];
    let mut start = cfg.lead_in_s;
    let mut k = 0usize;
    loop {
        let seg = cfg.segment_plan[k % cfg.segment_plan.len()];
        let slip_start = if k == 0 { start } else { start + seg.pause_s };
        let slip_end = slip_start + seg.slip_s;
        if slip_start >= n_frames as f64 * dt {
            break;
        }
        let first = (slip_start * cfg.sample_rate).ceil() as usize;
        for (i, p) in profile.iter_mut().enumerate().skip(first) {
            let t = i as f64 * dt;
            if t > slip_end {
                break;
            }
            let up = (t - slip_start) / cfg.ramp_s;
            let down = (slip_end - t) / cfg.ramp_s;
            *p = up.min(down).clamp(0.0, 1.0);
        }
        start = slip_end;
        k += 1;
    }
    profile
}

fn velocities(cfg: &SimConfig, condition: &ConditionTag, n_frames: usize) -> Vec<([f64; 2], f64)> {
    let profile = speed_profile(cfg, n_frames);
    profile
        .into_iter()
        .map(|p| {
            let s = p * condition.max_speed;
            match condition.direction {
                _ if condition.slip_type == SlipType::Static => ([0.0, 0.0], 0.0),
                Some(d) if d.is_rotation() => ([0.0, 0.0], d.rotation_sign().unwrap() * s),
                Some(d) => {
                    let u = d.unit_vector().unwrap();
                    ([s * u[0], s * u[1]], 0.0)
                }
                None => ([0.0, 0.0], 0.0),
            }
        })
        .collect()
}

/// Second-order band-pass section (RBJ cookbook, 0 dB peak).
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn band_pass(lo: f64, hi: f64, fs: f64) -> Self {
        let f0 = (lo * hi).sqrt();
        let q = f0 / (hi - lo);
        let w0 = 2.0 * std::f64::consts::PI * f0 / fs;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn filter(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&x0| {
                let y0 = self.b0 * x0 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }
}

/// Two cascaded band-pass sections scaled to unit output variance for unit white input.
struct VibrationFilter {
    section: Biquad,
    scale: f64,
}

impl VibrationFilter {
    fn new(cfg: &SimConfig) -> Self {
        let [lo, hi] = cfg.slip_vibration_band;
        let section = Biquad::band_pass(lo, hi, cfg.sample_rate);
        let mut impulse = vec![0.0; 4096];
        impulse[0] = 1.0;
        let h = section.filter(&section.filter(&impulse));
        let energy: f64 = h.iter().map(|v| v * v).sum();
        Self {
            section,
            scale: 1.0 / energy.sqrt(),
        }
    }

    fn apply(&self, white: &[f64]) -> Vec<f64> {
        let mut y = self.section.filter(&self.section.filter(white));
        y.iter_mut().for_each(|v| *v *= self.scale);
        y
    }
}

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Simulates one sequence of `duration` seconds under `condition`.
pub fn simulate_sequence(
    cfg: &SimConfig,
    condition: &ConditionTag,
    duration: f64,
) -> Result<LabeledSequence> {
    cfg.validate()?;
    condition.validate().map_err(|e| Error::Config(e.to_string()))?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Config(format!("duration must be positive, got {duration}")));
    }
    let n = cfg.frames(duration);
    simulate_frames(cfg, condition, n, cfg.seed)
}

fn simulate_frames(
    cfg: &SimConfig,
    condition: &ConditionTag,
    n: usize,
    seed: u64,
) -> Result<LabeledSequence> {
    let mut rng = rng_from(seed);
    let geometry = SensorGeometry::default();
    let dt = 1.0 / cfg.sample_rate;
    let weights = cfg.contact_profile(condition.surface);
    let vel = velocities(cfg, condition, n);
    let rotation = condition.direction.and_then(Direction::rotation_sign);

    // Contact speed driving the slip cues.
    let contact_speed: Vec<f64> = vel
        .iter()
        .map(|(v, w)| v[0].hypot(v[1]) + w.abs() * cfg.rotation_radius_m)
        .collect();
    let mut travelled = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &u in &contact_speed {
        travelled.push(acc);
        acc += u * dt;
    }

    // Spatial offset of each cell along the motion.
    let offsets: [f64; CHANNELS] = std::array::from_fn(|c| {
        let (x, y) = geometry.position(c);
        match (condition.direction, rotation) {
            (_, Some(sign)) => sign * cfg.sensor_pitch_m * x.hypot(y) * y.atan2(x),
            (Some(d), None) => {
                let u = d.unit_vector().unwrap();
                cfg.sensor_pitch_m * (x * u[0] + y * u[1])
            }
            (None, None) => 0.0,
        }
    });

    let filter = VibrationFilter::new(cfg);
    let common = filter.apply(&gaussian_vec(&mut rng, n));
    let own: Vec<Vec<f64>> = (0..CHANNELS)
        .map(|_| filter.apply(&gaussian_vec(&mut rng, n)))
        .collect();
    let (a_common, a_own) = (cfg.vibration_common.sqrt(), (1.0 - cfg.vibration_common).sqrt());
    let wobble_phase = rng.random::<f64>() * std::f64::consts::TAU;
    let gate = burst_gate(cfg, &contact_speed, derive_seed(seed, 0xB0_25));
    let two_pi = std::f64::consts::TAU;

    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let u = contact_speed[i];
        let carrier = 1.0 + cfg.carrier_wobble * (two_pi * cfg.carrier_wobble_hz * t + wobble_phase).sin();
        let mut pressure = [0.0; CHANNELS];
        for c in 0..CHANNELS {
            let vib = gate[i] * (a_common * common[i] + a_own * own[c][i]);
            let phase = two_pi * (offsets[c] - travelled[i]) / cfg.texture_wavelength_m;
            let noise: f64 = StandardNormal.sample(&mut rng);
            pressure[c] = cfg.base_pressure * weights[c] * carrier
                + weights[c] * u * (cfg.vibration_gain * vib + cfg.gradient_gain * phase.sin())
                + cfg.noise_std * noise;
        }
        let (v_xy, omega) = vel[i];
        frames.push(TactileFrame {
            t,
            pressure,
            v_xy,
            omega,
        });
    }
    LabeledSequence::from_frames(frames, *condition, cfg.barometer_range)
}

/// Stick-slip gate; between bursts the level drops to `burst_floor` of the burst level. Each movement opens with a burst, then
/// alternates with exponentially distributed durations.
fn burst_gate(cfg: &SimConfig, contact_speed: &[f64], seed: u64) -> Vec<f64> {
    if cfg.burst_gap_s == 0.0 {
        return vec![1.0; contact_speed.len()];
    }
    let mut rng = rng_from(seed);
    let dt = 1.0 / cfg.sample_rate;
    let (p_end, p_start) = (dt / cfg.burst_on_s, dt / cfg.burst_gap_s);
    // Unit mean power over the stationary on/off mix keeps long-run vibration energy unchanged.
    let duty = cfg.burst_on_s / (cfg.burst_on_s + cfg.burst_gap_s);
    let on_level = 1.0 / (duty + (1.0 - duty) * cfg.burst_floor.powi(2)).sqrt();
    let mut on = true;
    let mut was_moving = false;
    contact_speed
        .iter()
        .map(|&u| {
            let moving = u > 0.0;
            if moving && !was_moving {
                on = true;
            } else if moving {
                let flip = rng.random::<f64>() < if on { p_end } else { p_start };
                on ^= flip;
            }
            was_moving = moving;
            if on { on_level } else { cfg.burst_floor * on_level }
        })
        .collect()
}

fn slip_mask(cfg: &SimConfig, condition: &ConditionTag, n: usize) -> Result<Vec<bool>> {
    velocities(cfg, condition, n)
        .into_iter()
        .map(|(v, w)| Ok(crate::sensor::label_velocity(v, w)? == ClassLabel::Slip))
        .collect()
}

/// Percent of slip frames in the reference robot dataset per (slip type, speed, surface).
pub const SLIP_SHARES: [(SlipType, f64, [f64; 4]); 7] = [
    // columns: planar, spherical, cyl_y, cyl_x
    (SlipType::TransPrimary, 0.05, [5.3, 3.7, 3.5, 3.6]),
    (SlipType::TransPrimary, 0.075, [4.5, 4.7, 3.7, 3.7]),
    (SlipType::TransPrimary, 0.10, [4.8, 4.7, 3.3, 3.2]),
    (SlipType::TransOblique, 0.05, [4.9, 3.3, 3.3, 3.3]),
    (SlipType::TransOblique, 0.075, [3.5, 4.2, 3.5, 3.4]),
    (SlipType::TransOblique, 0.10, [3.9, 4.2, 3.0, 3.1]),
    (SlipType::Rotation, 1.0, [3.8, 1.2, 1.5, 1.2]),
];

/// The default condition grid: every `SLIP_SHARES` cell split evenly across its directions,
/// normalized so fractions sum to one.
pub fn default_grid() -> Vec<(ConditionTag, f64)> {
    let total: f64 = SLIP_SHARES.iter().flat_map(|(_, _, row)| row.iter()).sum();
    let mut grid = Vec::new();
    for (slip_type, speed, row) in SLIP_SHARES {
        let directions: &[Direction] = match slip_type {
            SlipType::TransPrimary => &Direction::PRIMARY,
            SlipType::TransOblique => &Direction::OBLIQUE,
            _ => &Direction::ROTATIONS,
        };
        for (surface, pct) in Surface::ALL.into_iter().zip(row) {
            for &d in directions {
                let tag = ConditionTag {
                    surface,
                    slip_type,
                    max_speed: speed,
                    direction: Some(d),
                };
                grid.push((tag, pct / total / directions.len() as f64));
            }
        }
    }
    grid
}

/// Generates one sequence per grid cell, sized so each cell's slip frames match its
/// target fraction of `cfg.corpus_slip_frames`.
pub fn generate_corpus(cfg: &SimConfig, grid: &[(ConditionTag, f64)]) -> Result<Corpus> {
    cfg.validate()?;
    let sum: f64 = grid.iter().map(|(_, f)| f).sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Generation(format!("grid fractions sum to {sum}, expected 1")));
    }
    if grid.iter().any(|(_, f)| !(*f >= 0.0)) {
        return Err(Error::Generation("grid fractions must be non-negative".into()));
    }
    let min_frames = cfg.frames(cfg.min_duration_s).max(1);
    let mut plans = Vec::with_capacity(grid.len());
    for (tag, fraction) in grid {
        tag.validate().map_err(|e| Error::Generation(e.to_string()))?;
        let target = (fraction * cfg.corpus_slip_frames as f64).round() as usize;
        let cap = min_frames + 50 * target + 10_000;
        let slip = slip_mask(cfg, tag, cap)?;
        let mut n = min_frames;
        let mut count = slip[..n].iter().filter(|&&s| s).count();
        if tag.slip_type != SlipType::Static {
            // One frame at a time: the first n reaching the target hits it exactly unless
            // the minimum length already overshoots.
            while count < target {
                if n == cap {
                    return Err(Error::Generation(format!(
                        "cell {tag:?} cannot reach {target} slip frames"
                    )));
                }
                count += usize::from(slip[n]);
                n += 1;
            }
        }
        plans.push((*tag, n, count));
    }
    let produced: usize = plans.iter().map(|p| p.2).sum();
    if produced == 0 {
        return Err(Error::Generation("grid produces no slip frames".into()));
    }
    for (tag, _, count) in &plans {
        let want = grid.iter().find(|(t, _)| t == tag).map(|(_, f)| *f).unwrap_or(0.0);
        let got = *count as f64 / produced as f64;
        if (got - want).abs() > 0.02 {
            return Err(Error::Generation(format!(
                "cell {tag:?}: slip share {got:.4} misses target {want:.4}; sequences too short"
            )));
        }
    }
    plans
        .iter()
        .enumerate()
        .map(|(i, (tag, n, _))| simulate_frames(cfg, tag, *n, derive_seed(cfg.seed, i as u64)))
        .collect()
}

/// Simulates a fresh sequence with an explicit seed, for held-out streams.
pub fn simulate_with_seed(
    cfg: &SimConfig,
    condition: &ConditionTag,
    duration: f64,
    seed: u64,
) -> Result<LabeledSequence> {
    cfg.validate()?;
    condition.validate().map_err(|e| Error::Config(e.to_string()))?;
    simulate_frames(cfg, condition, cfg.frames(duration), seed)
}
