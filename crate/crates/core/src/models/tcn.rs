//! Temporal convolutional network over `[6, T_k]` windows.
//!
//! Each level: causal conv → layer norm → SELU → dropout → causal conv → layer norm → SELU →
//! dropout, plus a residual (1×1 conv when the channel count changes). The final feature map
//! is flattened in full and fed to a two-hidden-layer head.

use rand_chacha::ChaCha8Rng;

use super::{argmax_label, center_window, expect_rows, two, Classifier, Trainable, TrainingMeta};
use crate::error::{Error, Result};
use crate::neural::{
    selu_backward, selu_forward, softmax, softmax_cross_entropy, Conv1dCache, DilatedConv1d, Dropout,
    DropoutMask, LayerNorm, LayerNormCache, Linear, Param, Parameterized, Tensor,
};
use crate::sensor::{ClassLabel, PressureRow, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcnLevel {
    pub channels: usize,
    pub kernel: usize,
    pub dilation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnArchitecture {
    pub window_len: usize,
    pub input_channels: usize,
    pub levels: Vec<TcnLevel>,
    pub fc_sizes: [usize; 2],
    pub num_classes: usize,
    pub dropout_rate: f64,
    /// Raw pressure units per network input unit, applied after window-mean removal.
    pub input_scale: f64,
}

pub const DEFAULT_INPUT_SCALE: f64 = 10.0;

impl Default for TcnArchitecture {
    fn default() -> Self {
        Self::with_window(100)
    }
}

impl TcnArchitecture {
    /// The default stack (6 levels of 32 channels, k = 3, dilations 1..32) for a window length.
    pub fn with_window(window_len: usize) -> Self {
        Self {
            window_len,
            input_channels: CHANNELS,
            levels: [1, 2, 4, 8, 16, 32]
                .into_iter()
                .map(|dilation| TcnLevel {
                    channels: 32,
                    kernel: 3,
                    dilation,
                })
                .collect(),
            fc_sizes: [64, 32],
            num_classes: 2,
            dropout_rate: 0.2,
            input_scale: DEFAULT_INPUT_SCALE,
        }
    }

    /// `1 + sum 2 (k - 1) d` over levels.
    pub fn receptive_field(&self) -> usize {
        1 + self.levels.iter().map(|l| 2 * (l.kernel - 1) * l.dilation).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.window_len == 0 {
            return bad("window_len must be at least 1".into());
        }
        if self.input_channels != CHANNELS {
            return bad(format!("input_channels must be {CHANNELS}"));
        }
        if self.num_classes != 2 {
            return bad("num_classes must be 2".into());
        }
        if self.levels.is_empty() {
            return bad("at least one level is required".into());
        }
        if self
            .levels
            .iter()
            .any(|l| l.channels == 0 || l.kernel == 0 || l.dilation == 0)
        {
            return bad("level channels, kernel and dilation must be at least 1".into());
        }
        if self.fc_sizes.contains(&0) {
            return bad("fc sizes must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return bad("input_scale must be positive".into());
        }
        if self.receptive_field() < self.window_len {
            return bad(format!(
                "receptive field {} is shorter than the window {}",
                self.receptive_field(),
                self.window_len
            ));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let mut total = 0;
        let mut c_in = self.input_channels;
        for l in &self.levels {
            let c = l.channels;
            total += c * c_in * l.kernel + c; // conv1
            total += c * c * l.kernel + c; // conv2
            total += 4 * c; // two norms
            if c_in != c {
                total += c * c_in + c;
            }
            c_in = c;
        }
        let flat = c_in * self.window_len;
        let [h1, h2] = self.fc_sizes;
        total + flat * h1 + h1 + h1 * h2 + h2 + h2 * self.num_classes + self.num_classes
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TcnBlock {
    conv1: DilatedConv1d,
    norm1: LayerNorm,
    conv2: DilatedConv1d,
    norm2: LayerNorm,
    skip: Option<DilatedConv1d>,
}

struct BlockCache {
    conv1: Conv1dCache,
    norm1: LayerNormCache,
    pre1: Vec<f64>,
    drop1: DropoutMask,
    conv2: Conv1dCache,
    norm2: LayerNormCache,
    pre2: Vec<f64>,
    drop2: DropoutMask,
    skip: Option<Conv1dCache>,
}

struct HeadCache {
    flat: Vec<f64>,
    pre1: Vec<f64>,
    h1: Vec<f64>,
    drop1: DropoutMask,
    pre2: Vec<f64>,
    h2: Vec<f64>,
    drop2: DropoutMask,
}

impl TcnBlock {
    fn new(name: &str, c_in: usize, level: TcnLevel, rng: &mut ChaCha8Rng) -> Self {
        let c = level.channels;
        Self {
            conv1: DilatedConv1d::new(&format!("{name}.conv1"), c_in, c, level.kernel, level.dilation, rng),
            norm1: LayerNorm::new(&format!("{name}.norm1"), c),
            conv2: DilatedConv1d::new(&format!("{name}.conv2"), c, c, level.kernel, level.dilation, rng),
            norm2: LayerNorm::new(&format!("{name}.norm2"), c),
            skip: (c_in != c).then(|| DilatedConv1d::new(&format!("{name}.skip"), c_in, c, 1, 1, rng)),
        }
    }

    fn forward(&self, x: &Tensor, dropout: Dropout, mut rng: Option<&mut ChaCha8Rng>) -> Result<(Tensor, BlockCache)> {
        let (h, conv1) = self.conv1.forward(x)?;
        let (n, norm1) = self.norm1.forward(&h)?;
        let pre1 = n.into_vec();
        let mut a = selu_forward(&pre1);
        let drop1 = apply_dropout(dropout, &mut a, rng.as_deref_mut());
        let a = Tensor::from_vec(h.shape(), a)?;
        let (h2, conv2) = self.conv2.forward(&a)?;
        let (n2, norm2) = self.norm2.forward(&h2)?;
        let pre2 = n2.into_vec();
        let mut out = selu_forward(&pre2);
        let drop2 = apply_dropout(dropout, &mut out, rng);
        let skip = match &self.skip {
            Some(conv) => {
                let (s, cache) = conv.forward(x)?;
                out.iter_mut().zip(s.data()).for_each(|(o, s)| *o += s);
                Some(cache)
            }
            None => {
                out.iter_mut().zip(x.data()).for_each(|(o, s)| *o += s);
                None
            }
        };
        Ok((
            Tensor::from_vec(h2.shape(), out)?,
            BlockCache {
                conv1,
                norm1,
                pre1,
                drop1,
                conv2,
                norm2,
                pre2,
                drop2,
                skip,
            },
        ))
    }

    fn backward(&mut self, cache: &BlockCache, dropout: Dropout, grad_out: &Tensor) -> Result<Tensor> {
        let shape = grad_out.shape().to_vec();
        let mut g = grad_out.data().to_vec();
        dropout.backward(&cache.drop2, &mut g);
        let g = Tensor::from_vec(&shape, selu_backward(&cache.pre2, &g))?;
        let g = self.norm2.backward(&cache.norm2, &g)?;
        let g = self.conv2.backward(&cache.conv2, &g)?;
        let mut g = g.into_vec();
        dropout.backward(&cache.drop1, &mut g);
        let g = Tensor::from_vec(&shape, selu_backward(&cache.pre1, &g))?;
        let g = self.norm1.backward(&cache.norm1, &g)?;
        let mut gx = self.conv1.backward(&cache.conv1, &g)?;
        match (&mut self.skip, &cache.skip) {
            (Some(conv), Some(c)) => {
                let gs = conv.backward(c, grad_out)?;
                gx.data_mut().iter_mut().zip(gs.data()).for_each(|(a, b)| *a += b);
            }
            _ => gx.data_mut().iter_mut().zip(grad_out.data()).for_each(|(a, b)| *a += b),
        }
        Ok(gx)
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = vec![
            &self.conv1.weight,
            &self.conv1.bias,
            &self.norm1.gain,
            &self.norm1.beta,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.norm2.gain,
            &self.norm2.beta,
        ];
        if let Some(s) = &self.skip {
            v.extend([&s.weight, &s.bias]);
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.norm1.gain,
            &mut self.norm1.beta,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.norm2.gain,
            &mut self.norm2.beta,
        ];
        if let Some(s) = &mut self.skip {
            v.extend([&mut s.weight, &mut s.bias]);
        }
        v
    }
}

fn apply_dropout(dropout: Dropout, x: &mut [f64], rng: Option<&mut ChaCha8Rng>) -> DropoutMask {
    match rng {
        Some(rng) => dropout.forward(x, rng, true),
        None => DropoutMask::default(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnModel {
    pub arch: TcnArchitecture,
    blocks: Vec<TcnBlock>,
    fc1: Linear,
    fc2: Linear,
    out: Linear,
    pub meta: TrainingMeta,
}

impl TcnModel {
    /// Randomly initialized model; weights depend only on `seed`.
    pub fn new(arch: TcnArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = crate::rng_from(seed);
        let mut c_in = arch.input_channels;
        let mut blocks = Vec::with_capacity(arch.levels.len());
        for (i, &level) in arch.levels.iter().enumerate() {
            blocks.push(TcnBlock::new(&format!("block{i}"), c_in, level, &mut rng));
            c_in = level.channels;
        }
        let [h1, h2] = arch.fc_sizes;
        let fc1 = Linear::new("fc1", c_in * arch.window_len, h1, &mut rng);
        let fc2 = Linear::new("fc2", h1, h2, &mut rng);
        let out = Linear::new("out", h2, arch.num_classes, &mut rng);
        Ok(Self {
            arch,
            blocks,
            fc1,
            fc2,
            out,
            meta: TrainingMeta::default(),
        })
    }

    fn dropout(&self) -> Dropout {
        Dropout::new(self.arch.dropout_rate)
    }

    /// Network input for a window: per-channel mean removed, scaled by `input_scale`.
    pub fn normalize(&self, rows: &[PressureRow]) -> Result<Tensor> {
        expect_rows(rows, self.arch.window_len, "TCN")?;
        Ok(center_window(rows, self.arch.input_scale))
    }

    /// Output of the last level (`[channels, T]`) in inference mode. Works for any `T`, which
    /// makes the causal structure testable independently of the head.
    pub fn features(&self, x: &Tensor) -> Result<Tensor> {
        x.expect_rank("TCN input", 2)?;
        let mut h = x.clone();
        for b in &self.blocks {
            h = b.forward(&h, self.dropout(), None)?.0;
        }
        Ok(h)
    }

    fn head(&self, flat: Vec<f64>, mut rng: Option<&mut ChaCha8Rng>) -> Result<(Vec<f64>, HeadCache)> {
        let d = self.dropout();
        let pre1 = self.fc1.forward(&flat)?;
        let mut h1 = selu_forward(&pre1);
        let drop1 = apply_dropout(d, &mut h1, rng.as_deref_mut());
        let pre2 = self.fc2.forward(&h1)?;
        let mut h2 = selu_forward(&pre2);
        let drop2 = apply_dropout(d, &mut h2, rng);
        let logits = self.out.forward(&h2)?;
        Ok((
            logits,
            HeadCache {
                flat,
                pre1,
                h1,
                drop1,
                pre2,
                h2,
                drop2,
            },
        ))
    }

    /// Logits for an already-normalized input tensor.
    pub fn logits_from_input(&self, x: &Tensor) -> Result<[f64; 2]> {
        x.expect_shape("TCN input", &[self.arch.input_channels, self.arch.window_len])?;
        let f = self.features(x)?;
        Ok(two(&self.head(f.into_vec(), None)?.0))
    }

    pub fn logits(&self, rows: &[PressureRow]) -> Result<[f64; 2]> {
        self.logits_from_input(&self.normalize(rows)?)
    }

    pub fn probabilities(&self, rows: &[PressureRow]) -> Result<[f64; 2]> {
        Ok(two(&softmax(&self.logits(rows)?)))
    }

    /// Training-mode forward and full backward for one normalized input.
    pub fn forward_backward(&mut self, x: &Tensor, target: ClassLabel, rng: &mut ChaCha8Rng) -> Result<(f64, [f64; 2])> {
        x.expect_shape("TCN input", &[self.arch.input_channels, self.arch.window_len])?;
        let dropout = self.dropout();
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut h = x.clone();
        for b in &self.blocks {
            let (next, cache) = b.forward(&h, dropout, Some(rng))?;
            caches.push(cache);
            h = next;
        }
        let feature_shape = h.shape().to_vec();
        let (logits, hc) = self.head(h.into_vec(), Some(rng))?;
        let (loss, g_logits) = softmax_cross_entropy(&logits, target);

        let mut g = self.out.backward(&hc.h2, &g_logits)?;
        dropout.backward(&hc.drop2, &mut g);
        let g = selu_backward(&hc.pre2, &g);
        let mut g = self.fc2.backward(&hc.h1, &g)?;
        dropout.backward(&hc.drop1, &mut g);
        let g = selu_backward(&hc.pre1, &g);
        let g = self.fc1.backward(&hc.flat, &g)?;
        let mut g = Tensor::from_vec(&feature_shape, g)?;
        for (b, cache) in self.blocks.iter_mut().zip(&caches).rev() {
            g = b.backward(cache, dropout, &g)?;
        }
        Ok((loss, two(&logits)))
    }

    /// Zeroes the final linear layer, so every input maps to equal probabilities.
    pub fn zero_output_layer(&mut self) {
        self.out.weight.value.fill(0.0);
        self.out.bias.value.fill(0.0);
    }
}

impl Parameterized for TcnModel {
    fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = self.blocks.iter().flat_map(TcnBlock::params).collect();
        for l in [&self.fc1, &self.fc2, &self.out] {
            v.extend([&l.weight, &l.bias]);
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = self.blocks.iter_mut().flat_map(TcnBlock::params_mut).collect();
        for l in [&mut self.fc1, &mut self.fc2, &mut self.out] {
            v.extend([&mut l.weight, &mut l.bias]);
        }
        v
    }
}

impl Classifier for TcnModel {
    fn window_len(&self) -> usize {
        self.arch.window_len
    }

    fn classify(&self, rows: &[PressureRow]) -> Result<ClassLabel> {
        Ok(argmax_label(&self.probabilities(rows)?))
    }
}

impl Trainable for TcnModel {
    fn accumulate_gradients(&mut self, rows: &[PressureRow], target: ClassLabel, rng: &mut ChaCha8Rng) -> Result<(f64, [f64; 2])> {
        let x = self.normalize(rows)?;
        self.forward_backward(&x, target, rng)
    }

    fn meta_mut(&mut self) -> &mut TrainingMeta {
        &mut self.meta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_architecture_shape() {
        let arch = TcnArchitecture::default();
        arch.validate().unwrap();
        assert_eq!(arch.receptive_field(), 1 + 2 * 2 * 63);
        // level 1: 608 + 3104 + 128 + 224; levels 2-6: 2 * 3104 + 128; head: 204864 + 2080 + 66
        let hand = (608 + 3104 + 128 + 224) + 5 * (2 * 3104 + 128) + 204_864 + 2080 + 66;
        assert_eq!(hand, 242_754);
        assert_eq!(arch.param_count(), hand);
        let model = TcnModel::new(arch, 1).unwrap();
        assert_eq!(model.param_count(), hand);
    }

    #[test]
    fn validation_rejects_short_receptive_field() {
        let mut arch = TcnArchitecture::with_window(300);
        assert!(matches!(arch.validate(), Err(Error::Config(_))));
        arch.window_len = 100;
        arch.dropout_rate = 1.0;
        assert!(arch.validate().is_err());
    }

    #[test]
    fn zero_output_layer_gives_even_odds() {
        let mut model = TcnModel::new(TcnArchitecture::default(), 2).unwrap();
        model.zero_output_layer();
        let mut rng = crate::rng_from(9);
        let rows: Vec<PressureRow> = (0..100)
            .map(|_| std::array::from_fn(|_| 500.0 + 30.0 * rand::Rng::random::<f64>(&mut rng)))
            .collect();
        assert_eq!(model.probabilities(&rows).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn oldest_sample_reaches_the_logits() {
        let model = TcnModel::new(TcnArchitecture::default(), 3).unwrap();
        let mut rng = crate::rng_from(4);
        let x = Tensor::randn(&[6, 100], 1.0, &mut rng);
        let base = model.logits_from_input(&x).unwrap();
        let mut y = x.clone();
        y.data_mut()[0] += 1e-3;
        let moved = model.logits_from_input(&y).unwrap();
        assert_ne!(base, moved);
    }

    #[test]
    fn wrong_window_length_is_a_shape_error() {
        let model = TcnModel::new(TcnArchitecture::default(), 3).unwrap();
        let rows = vec![[0.0; CHANNELS]; 99];
        assert!(matches!(model.classify(&rows), Err(Error::Shape(_))));
    }

    #[test]
    fn inference_is_deterministic() {
        let model = TcnModel::new(TcnArchitecture::with_window(20), 5).unwrap();
        let rows: Vec<PressureRow> = (0..20).map(|i| [i as f64; CHANNELS]).collect();
        assert_eq!(model.logits(&rows).unwrap(), model.logits(&rows).unwrap());
    }
}
